"""ZMP-based walking pattern generation with a variable CoM height.

Timeline of a plan with ``n`` strides (``2n`` swings)::

    | DS/4 | SS | DS/2 | SS | DS/2 | ... | SS | DS/4 |
     lead-in                                lead-out

where SS = (T_stride - T_switch)/2 and DS = T_switch, so the phases tile
``[0, n * T_stride]`` exactly and every step occupies ``T_stride/2``.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.interpolate import CubicSpline

from zmpgait import kernels
from zmpgait.params import GaitParameters
from zmpgait.support import FOOT_LENGTH, FOOT_WIDTH, signed_margin, support_polygon

LOG = logging.getLogger(__name__)

GRAVITY = 9.81
ZMP_MARGIN = 0.005
# sample times closer than this to a phase boundary count as past it
TIME_EPS = 1e-9

DOUBLE = "double"
SINGLE_LEFT = "single_left"
SINGLE_RIGHT = "single_right"


class PatternError(ValueError):
    """Raised when a reference trajectory cannot be produced."""


@dataclass(frozen=True)
class Foothold:
    """A sole placement. ``pitch`` is the sole inclination along x (rad, positive raises the toes)."""

    side: str
    position: tuple
    pitch: float
    touchdown_time: float
    liftoff_time: float


@dataclass(frozen=True)
class SupportPhase:
    t0: float
    t1: float
    phase: str

    @property
    def stance(self):
        return {SINGLE_LEFT: "left", SINGLE_RIGHT: "right"}.get(self.phase)


@dataclass
class FootstepPlan:
    footholds: list
    support_timeline: list
    duration: float
    first_side: str = "left"

    def holds(self, side):
        return [h for h in self.footholds if h.side == side]

    def phase_index(self, t):
        starts = np.array([p.t0 for p in self.support_timeline])
        idx = np.searchsorted(starts, np.asarray(t) + TIME_EPS, side="right") - 1
        return np.clip(idx, 0, len(starts) - 1)

    def phase_at(self, t):
        return self.support_timeline[int(self.phase_index(t))]

    def hold_at(self, side, t):
        """The hold of ``side`` that is (or was last) in contact at time ``t``."""
        chosen = None
        for h in self.holds(side):
            if h.touchdown_time <= t + TIME_EPS:
                chosen = h
        return chosen

    def contacts(self, t):
        """Footholds in contact at time ``t``."""
        ph = self.phase_at(t)
        sides = ("left", "right") if ph.phase == DOUBLE else (ph.stance,)
        return [self.hold_at(s, t) for s in sides]

    def anchor_side(self, t):
        """Side whose sole is pinned to the world at time ``t``."""
        i = int(self.phase_index(t))
        ph = self.support_timeline[i]
        if ph.stance:
            return ph.stance
        for p in self.support_timeline[i + 1:]:
            if p.stance:
                return p.stance
        for p in reversed(self.support_timeline[:i]):
            if p.stance:
                return p.stance
        return self.first_side


@dataclass
class ReferenceTrajectories:
    """Uniformly sampled references. Foot arrays are N x 4: x, y, z, pitch."""

    times: np.ndarray
    zmp_d: np.ndarray
    com_d: np.ndarray
    left_foot: np.ndarray
    right_foot: np.ndarray
    plan: FootstepPlan = None
    params: GaitParameters = None
    zmp_height: np.ndarray = field(default=None, repr=False)

    @property
    def n_samples(self):
        return len(self.times)

    def foot(self, side):
        return self.left_foot if side == "left" else self.right_foot


# --------------------------------------------------------------------------
# Footsteps
# --------------------------------------------------------------------------

def _terrain(params):
    """Per-plan-step forward advance, per-plan-step rise, inclination (rad)."""
    if params.type == "stairs_up":
        return params.stair_length / 2.0, params.stair_height, 0.0
    if params.type in ("slope_up", "slope_down"):
        theta = np.deg2rad(abs(params.theta))
        if params.type == "slope_down":
            theta = -theta
        return params.step_length, None, theta
    return params.step_length, 0.0, 0.0


def generate_footsteps(params):
    """Footholds and support timeline for straight walking."""
    params.validate()
    advance, rise, incline = _terrain(params)
    n_swings = 2 * params.n_strides
    ss = params.single_support
    lead = params.T_switch / 4.0
    half_y = params.step_width / 2.0
    first = "right" if params.right_step_first else "left"
    other = {"left": "right", "right": "left"}

    def hold_z(x, level):
        if rise is None:
            return x * np.tan(incline)
        return level * rise

    current = {
        "left": dict(x=0.0, level=0, touchdown=0.0),
        "right": dict(x=0.0, level=0, touchdown=0.0),
    }
    footholds = []
    timeline = [SupportPhase(0.0, lead, DOUBLE)]
    side = first
    for k in range(n_swings):
        t_lift = lead + k * params.T_stride / 2.0
        t_down = t_lift + ss
        last = k == n_swings - 1
        stance = current[other[side]]
        prev = current[side]
        footholds.append(_make_hold(side, prev, half_y, hold_z, incline, t_lift))
        if last:
            x, level = stance["x"], stance["level"]
        else:
            x, level = (k + 1) * advance, k + 1
        current[side] = dict(x=x, level=level, touchdown=t_down)
        timeline.append(SupportPhase(t_lift, t_down, SINGLE_LEFT if side == "right" else SINGLE_RIGHT))
        t_end = params.duration if last else t_down + params.T_switch / 2.0
        timeline.append(SupportPhase(t_down, t_end, DOUBLE))
        side = other[side]
    for s in ("left", "right"):
        footholds.append(_make_hold(s, current[s], half_y, hold_z, incline, params.duration))
    footholds.sort(key=lambda h: (h.touchdown_time, h.side))
    return FootstepPlan(footholds=footholds, support_timeline=timeline,
                        duration=params.duration, first_side=first)


def _make_hold(side, state, half_y, hold_z, incline, liftoff):
    y = half_y if side == "left" else -half_y
    pos = (float(state["x"]), float(y), float(hold_z(state["x"], state["level"])))
    return Foothold(side=side, position=pos, pitch=float(incline),
                    touchdown_time=float(state["touchdown"]), liftoff_time=float(liftoff))


# --------------------------------------------------------------------------
# ZMP reference
# --------------------------------------------------------------------------

def smoothstep(s):
    """Cubic 3s^2 - 2s^3 on [0, 1]: zero slope at both ends."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def sample_times(params):
    return np.arange(params.n_samples) * params.ts


def _mid_feet(plan, t):
    a = np.array(plan.hold_at("left", t).position)
    b = np.array(plan.hold_at("right", t).position)
    return 0.5 * (a + b)


def _zmp_waypoints(plan):
    """ZMP target (x, y, z) at the end of every timeline phase."""
    points = []
    for i, ph in enumerate(plan.support_timeline):
        if ph.stance:
            points.append(np.array(plan.hold_at(ph.stance, ph.t0).position))
        elif i == 0:
            points.append(_next_stance_point(plan, i))
        elif i == len(plan.support_timeline) - 1:
            points.append(_mid_feet(plan, ph.t1))
        else:
            points.append(_next_stance_point(plan, i))
    return points


def _next_stance_point(plan, i):
    nxt = plan.support_timeline[i + 1]
    return np.array(plan.hold_at(nxt.stance, nxt.t0).position)


def zmp_reference_3d(plan, times):
    """ZMP reference including the height of the surface under it (N x 3)."""
    times = np.asarray(times, dtype=float)
    waypoints = _zmp_waypoints(plan)
    start = _mid_feet(plan, 0.0)
    idx = plan.phase_index(times)
    out = np.empty((len(times), 3))
    for i, ph in enumerate(plan.support_timeline):
        sel = idx == i
        if not np.any(sel):
            continue
        end = waypoints[i]
        if ph.stance:
            out[sel] = end
            continue
        begin = start if i == 0 else waypoints[i - 1]
        s = smoothstep((times[sel] - ph.t0) / (ph.t1 - ph.t0))
        out[sel] = begin + s[:, None] * (end - begin)
    return out


def generate_zmp_reference(plan, params):
    """Desired ZMP (N x 2): stance sole centre in single support, cubic blend in double support."""
    return zmp_reference_3d(plan, sample_times(params))[:, :2]


# --------------------------------------------------------------------------
# CoM height
# --------------------------------------------------------------------------

def _support_height(plan, t):
    """Mean sole height; a swinging foot counts with the mean of its two holds."""
    ph = plan.phase_at(t)
    heights = []
    for side in ("left", "right"):
        if ph.phase == DOUBLE or ph.stance == side:
            heights.append(plan.hold_at(side, t).position[2])
        else:
            lo = plan.hold_at(side, ph.t0 - TIME_EPS)
            td = plan.hold_at(side, ph.t1)
            heights.append(0.5 * (lo.position[2] + td.position[2]))
    return float(np.mean(heights))


def height_keyframes(params, plan):
    """(times, heights) through which the CoM height spline passes."""
    times = [0.0]
    values = [params.z_c + _support_height(plan, 0.0)]
    phases = plan.support_timeline
    for i, ph in enumerate(phases):
        mid = 0.5 * (ph.t0 + ph.t1)
        if ph.stance:
            times.append(mid)
            values.append(params.z_c + _support_height(plan, mid) + params.z_c_offset)
        elif 0 < i < len(phases) - 1:
            times.append(mid)
            values.append(params.z_c + _support_height(plan, mid))
    times.append(plan.duration)
    values.append(params.z_c + _support_height(plan, plan.duration))
    return np.array(times), np.array(values)


def generate_com_height(params, plan, g=GRAVITY):
    """Sampled CoM height ``z`` and its second difference ``z_ddot``.

    A cubic spline with zero end slopes passes through the keyframes: the
    base height at double-support midpoints and at both ends, and base
    plus ``z_c_offset`` at single-support midpoints.
    """
    kt, kz = height_keyframes(params, plan)
    spline = CubicSpline(kt, kz, bc_type="clamped")
    times = sample_times(params)
    z = spline(times)
    z_ddot = kernels.second_difference(z, params.ts)
    bad = np.nonzero(z_ddot + g <= 0.0)[0]
    if bad.size:
        raise PatternError(f"free-fall profile: z_ddot + g <= 0 at sample {bad[0]} (t = {times[bad[0]]:.4f} s)")
    return z, z_ddot


# --------------------------------------------------------------------------
# Horizontal CoM from the ZMP equation
# --------------------------------------------------------------------------

def zmp_system(z, z_ddot, ts, g=GRAVITY):
    """Tridiagonal ZMP matrix as (lower, diag, upper) with merged boundary rows.

    Interior row i is ``a_i x_{i-1} + b_i x_i + c_i x_{i+1}`` with
    ``a_i = c_i = -z_i / ((z_ddot_i + g) ts^2)`` and ``b_i = 1 - 2 a_i``.
    The first and last rows fold the out-of-range neighbour into the
    diagonal (zero velocity at both ends).
    """
    z = np.asarray(z, dtype=float)
    z_ddot = np.asarray(z_ddot, dtype=float)
    n = z.shape[0]
    if n < 3:
        raise ValueError(f"at least 3 samples are required, got {n}")
    if z_ddot.shape != z.shape:
        raise ValueError("z and z_ddot must have the same length")
    denom = z_ddot + g
    bad = np.nonzero(denom <= 0.0)[0]
    if bad.size:
        raise PatternError(f"z_ddot + g <= 0 at sample {bad[0]}")
    a = -z / (denom * ts * ts)
    b = 1.0 - 2.0 * a
    lower = a.copy()
    upper = a.copy()
    diag = b.copy()
    diag[0] = a[0] + b[0]
    diag[-1] = b[-1] + a[-1]
    lower[0] = 0.0
    upper[-1] = 0.0
    # a_i < 0 for z > 0, hence |b_i| = |a_i| + |c_i| + 1
    off = np.abs(lower) + np.abs(upper)
    if np.any(np.abs(diag) < off + 1.0 - 1e-12) and np.all(z > 0):
        raise PatternError("ZMP system is not diagonally dominant")
    return lower, diag, upper


def solve_com_xy(zmp_d, z, z_ddot, g=GRAVITY, ts=0.01):
    """Horizontal CoM (N x 2) whose ZMP, for the given height profile, is ``zmp_d``.

    ``z`` is the CoM height above the surface carrying the ZMP and
    ``z_ddot`` its vertical acceleration.
    """
    zmp_d = np.asarray(zmp_d, dtype=float)
    lower, diag, upper = zmp_system(z, z_ddot, ts, g)
    if zmp_d.shape[0] != diag.shape[0]:
        raise ValueError("zmp_d and z must have the same number of samples")
    # rows sum to one, so shifting by the first sample is exact and keeps a
    # constant input exactly constant
    origin = zmp_d[0].copy()
    return origin + kernels.thomas_solve(lower, diag, upper, zmp_d - origin)


# --------------------------------------------------------------------------
# Feet
# --------------------------------------------------------------------------

def foot_pose_at(plan, side, t, step_height):
    """Sole reference (x, y, z, pitch) of ``side`` at time ``t``.

    Swing: x, y follow a zero-end-slope cubic between the holds; z rises
    on one cubic to ``max(z_liftoff, z_touchdown) + step_height`` at
    mid-swing and descends on another; pitch is linear.
    """
    holds = plan.holds(side)
    for lo, td in zip(holds[:-1], holds[1:]):
        if lo.liftoff_time - TIME_EPS <= t < td.touchdown_time - TIME_EPS:
            s = (t - lo.liftoff_time) / (td.touchdown_time - lo.liftoff_time)
            p0 = np.array(lo.position)
            p1 = np.array(td.position)
            out = np.empty(4)
            out[:2] = p0[:2] + smoothstep(s) * (p1[:2] - p0[:2])
            apex = max(p0[2], p1[2]) + step_height
            if s < 0.5:
                out[2] = p0[2] + smoothstep(2.0 * s) * (apex - p0[2])
            else:
                out[2] = apex + smoothstep(2.0 * s - 1.0) * (p1[2] - apex)
            out[3] = lo.pitch + s * (td.pitch - lo.pitch)
            return out
    hold = plan.hold_at(side, t) or holds[0]
    return np.array([*hold.position, hold.pitch])


def generate_foot_trajectories(plan, params):
    times = sample_times(params)
    left = np.array([foot_pose_at(plan, "left", t, params.step_height) for t in times])
    right = np.array([foot_pose_at(plan, "right", t, params.step_height) for t in times])
    return left, right


# --------------------------------------------------------------------------
# Composition
# --------------------------------------------------------------------------

def zmp_margins(plan, times, zmp, foot_dims=(FOOT_LENGTH, FOOT_WIDTH)):
    """Signed distance of each ZMP sample to the support polygon active at its time."""
    zmp = np.asarray(zmp, dtype=float)
    idx = plan.phase_index(times)
    margins = np.empty(len(times))
    for i, ph in enumerate(plan.support_timeline):
        sel = idx == i
        if not np.any(sel):
            continue
        feet = [(h.position, h.pitch) for h in plan.contacts(ph.t0)]
        margins[sel] = signed_margin(zmp[sel, :2], support_polygon(feet, *foot_dims))
    return margins


def generate_references(params, g=GRAVITY, foot_dims=(FOOT_LENGTH, FOOT_WIDTH), margin=ZMP_MARGIN):
    """Footsteps, ZMP, CoM and feet references on one uniform time grid."""
    plan = generate_footsteps(params)
    times = sample_times(params)
    zmp3 = zmp_reference_3d(plan, times)
    z, z_ddot = generate_com_height(params, plan, g)
    com_xy = solve_com_xy(zmp3[:, :2], z - zmp3[:, 2], z_ddot, g, params.ts)
    left, right = generate_foot_trajectories(plan, params)
    refs = ReferenceTrajectories(
        times=times,
        zmp_d=zmp3[:, :2].copy(),
        com_d=np.column_stack([com_xy, z]),
        left_foot=left,
        right_foot=right,
        plan=plan,
        params=params,
        zmp_height=zmp3[:, 2].copy(),
    )
    validate_references(refs, foot_dims, margin)
    return refs


def validate_references(refs, foot_dims=(FOOT_LENGTH, FOOT_WIDTH), margin=ZMP_MARGIN):
    n = refs.n_samples
    for name in ("zmp_d", "com_d", "left_foot", "right_foot"):
        arr = getattr(refs, name)
        if arr.shape[0] != n:
            raise PatternError(f"{name} has {arr.shape[0]} samples, expected {n}")
        if not np.all(np.isfinite(arr)):
            raise PatternError(f"{name} contains non-finite values")
    dt = np.diff(refs.times)
    if np.any(dt <= 0):
        raise PatternError("sample times are not strictly increasing")
    if refs.params is not None:
        if n != refs.params.n_samples:
            raise PatternError(f"expected {refs.params.n_samples} samples, got {n}")
        if not np.allclose(dt, refs.params.ts, rtol=0.0, atol=1e-9):
            raise PatternError("sample times are not uniform at ts")
    if refs.plan is not None:
        m = zmp_margins(refs.plan, refs.times, refs.zmp_d, foot_dims)
        bad = np.nonzero(m < margin - 1e-12)[0]
        if bad.size:
            k = bad[0]
            raise PatternError(
                f"desired ZMP leaves the support polygon (margin {m[k]:.4f} m < {margin} m) "
                f"at t = {refs.times[k]:.4f} s (sample {k})")
