"""Locomotion performance indicators computed from execution logs.

Cost of transport, Froude number, maximum velocity and tracking RMSEs,
plus ZMP reconstruction from a CoM track and support-polygon checks.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from zmpgait import kernels
from zmpgait.pattern_gen import GRAVITY, zmp_margins
from zmpgait.support import FOOT_LENGTH, FOOT_WIDTH

LOG = logging.getLogger(__name__)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class LogError(ValueError):
    """Inconsistent execution log."""


@dataclass
class ExecutionLog:
    """Measured run data. Angles in rad, positions in m, currents in A, voltages in V."""

    times: np.ndarray
    current: np.ndarray
    voltage: np.ndarray
    q_meas: np.ndarray
    q_des: np.ndarray
    com_meas: np.ndarray
    com_des: np.ndarray
    zmp_meas: np.ndarray
    zmp_des: np.ndarray
    robot_mass: float
    leg_length: float
    feet_mid: np.ndarray = None
    joint_names: list = None
    foot_dims: tuple = (FOOT_LENGTH, FOOT_WIDTH)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        n = self.times.shape[0]
        shapes = {
            "current": 2, "voltage": 2, "q_meas": 2, "q_des": 2,
            "com_meas": 2, "com_des": 2, "zmp_meas": 2, "zmp_des": 2,
        }
        for name in shapes:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 1:
                arr = arr[:, None]
            if arr.shape[0] != n:
                raise LogError(f"{name} has {arr.shape[0]} samples, times has {n}")
            setattr(self, name, arr)
        if self.current.shape != self.voltage.shape or self.current.shape[1] < 1:
            raise LogError("current and voltage must both be N x M with M >= 1")
        if self.q_meas.shape != self.q_des.shape:
            raise LogError(f"q_meas {self.q_meas.shape} and q_des {self.q_des.shape} differ")
        for name, width in (("com_meas", 3), ("com_des", 3), ("zmp_meas", 2), ("zmp_des", 2)):
            if getattr(self, name).shape[1] != width:
                raise LogError(f"{name} must have {width} columns")
        if self.feet_mid is not None:
            self.feet_mid = np.asarray(self.feet_mid, dtype=float)
            if self.feet_mid.shape != (n, 2):
                raise LogError("feet_mid must be N x 2")
        if n >= 2:
            dt = np.diff(self.times)
            if np.any(np.abs(dt - dt[0]) > 1e-9) or dt[0] <= 0:
                raise LogError("log times are not uniform")
        if self.joint_names is not None and len(self.joint_names) != self.q_meas.shape[1]:
            raise LogError("joint_names does not match the number of joint columns")

    @property
    def ts(self):
        return float(self.times[1] - self.times[0])

    @property
    def n_samples(self):
        return self.times.shape[0]


@dataclass
class KpiReport:
    cost_of_transport: float
    v_max: float
    froude: float
    com_rmse: float
    zmp_rmse: float
    joint_rmse: float
    travelled_distance: float
    notes: list = field(default_factory=list)

    UNITS = {
        "cost_of_transport": "J/(kg*m)",
        "v_max": "m/s",
        "froude": "dimensionless",
        "com_rmse": "m",
        "zmp_rmse": "m",
        "joint_rmse": "deg",
        "travelled_distance": "m",
    }

    def format(self):
        lines = []
        for name, unit in self.UNITS.items():
            value = getattr(self, name)
            if value is None:
                continue
            lines.append(f"{name} = {value!r}  # {unit}")
        lines += [f"# {note}" for note in self.notes]
        return "\n".join(lines) + "\n"


def parse_report(text):
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            name, _, value = line.partition("=")
            out[name.strip()] = float(value)
    return out


def travelled_distance(log):
    """Horizontal displacement between first and last sample of the mid-feet point (CoM fallback)."""
    track = log.feet_mid if log.feet_mid is not None else log.com_meas[:, :2]
    return float(np.linalg.norm(track[-1, :2] - track[0, :2]))


def cost_of_transport(log):
    """Electrical energy of all motors per unit mass and distance, J/(kg m)."""
    d = travelled_distance(log)
    if d <= 1e-6:
        raise LogError(f"travelled distance {d:.3g} m is too small for a cost of transport")
    power = np.sum(log.current * log.voltage, axis=1)
    energy = float(_trapezoid(power, log.times))
    return energy / (log.robot_mass * d)


def froude(v_max, leg_length, g=GRAVITY):
    if not leg_length > 0:
        raise ValueError("leg length must be positive")
    return v_max / np.sqrt(g * leg_length)


def max_velocity(log, window):
    """Best average horizontal CoM speed over any window of ``window`` seconds."""
    steps = int(round(window / log.ts))
    if steps < 1:
        raise ValueError(f"window {window} s is shorter than one sample ({log.ts} s)")
    if steps > log.n_samples - 1:
        raise ValueError(f"window {window} s is longer than the log")
    xy = log.com_meas[:, :2]
    disp = np.linalg.norm(xy[steps:] - xy[:-steps], axis=1)
    return float(disp.max() / (steps * log.ts))


def _rmse_rows(err):
    return float(np.sqrt(np.mean(np.sum(err * err, axis=1))))


def tracking_rmse(log):
    """CoM and ZMP RMSE of the Euclidean error (m); joint RMSE averaged over joints (deg)."""
    per_joint = np.sqrt(np.mean((log.q_meas - log.q_des) ** 2, axis=0))
    return {
        "com_rmse": _rmse_rows(log.com_meas - log.com_des),
        "zmp_rmse": _rmse_rows(log.zmp_meas - log.zmp_des),
        "joint_rmse": float(np.rad2deg(per_joint.mean())),
    }


def reconstruct_zmp(com, g=GRAVITY, ts=0.01, ground=None):
    """ZMP of a sampled CoM track with second differences for the accelerations.

    ``ground`` optionally gives the height of the surface under the ZMP at
    each sample (default 0). Returns ``(zmp, flags)``; ``flags`` marks
    samples where ``z_ddot + g <= 0`` and the model does not apply.
    """
    com = np.asarray(com, dtype=float)
    if com.ndim != 2 or com.shape[1] != 3:
        raise ValueError("com must be N x 3")
    if com.shape[0] < 3:
        raise ValueError("at least 3 samples are needed")
    acc = kernels.second_difference(com, ts)
    denom = acc[:, 2] + g
    flags = denom <= 0.0
    height = com[:, 2] if ground is None else com[:, 2] - np.asarray(ground, dtype=float)
    safe = np.where(flags, np.nan, denom)
    zmp = com[:, :2] - (height / safe)[:, None] * acc[:, :2]
    if flags.any():
        LOG.warning("%d samples with z_ddot + g <= 0", int(flags.sum()))
    return zmp, flags


@dataclass
class StabilityReport:
    margins: np.ndarray
    inside: np.ndarray
    violation_fraction: float
    worst_margin: float

    @property
    def n_violations(self):
        return int(np.count_nonzero(~self.inside))


def stability_check(zmp, plan, times, foot_dims=(FOOT_LENGTH, FOOT_WIDTH), margin=0.0):
    """Per-sample membership of the ZMP in the support polygon active at that time.

    Margins are signed distances to the polygon boundary (positive inside).
    A sample passes when its margin is at least ``margin``.
    """
    zmp = np.asarray(zmp, dtype=float)
    m = zmp_margins(plan, np.asarray(times, dtype=float), zmp, foot_dims)
    inside = m >= margin
    return StabilityReport(margins=m, inside=inside,
                           violation_fraction=float(np.mean(~inside)),
                           worst_margin=float(m.min()))


def analyze(log, window, level_ground=True, g=GRAVITY):
    """All indicators for one log. The Froude number is only reported on level ground."""
    rmse = tracking_rmse(log)
    v_max = max_velocity(log, window)
    notes = []
    fr = None
    if level_ground:
        fr = float(froude(v_max, log.leg_length, g))
    else:
        notes.append("froude omitted: defined for level ground only")
    return KpiReport(
        cost_of_transport=cost_of_transport(log),
        v_max=v_max,
        froude=fr,
        travelled_distance=travelled_distance(log),
        notes=notes,
        **rmse,
    )
