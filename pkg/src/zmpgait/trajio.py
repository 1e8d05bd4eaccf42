"""CSV readers and writers for references, joint trajectories and execution logs.

Floats are written with ``repr`` so every file reads back bit-identical.
Leading ``#`` lines carry metadata and are skipped by the readers.
"""

import csv
import io
from pathlib import Path

import numpy as np

from zmpgait.ik_solver import JointTrajectory
from zmpgait.kpi import ExecutionLog, LogError
from zmpgait.pattern_gen import ReferenceTrajectories

REFERENCE_COLUMNS = ["t", "zmp_x", "zmp_y", "com_x", "com_y", "com_z",
                     "lf_x", "lf_y", "lf_z", "lf_pitch", "rf_x", "rf_y", "rf_z", "rf_pitch"]


class CsvFormatError(ValueError):
    """Malformed or empty CSV file."""


def _fmt(x):
    return repr(float(x))


def write_table(path, header, rows, meta=None):
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key} = {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    Path(path).write_text(buf.getvalue())


def read_table(path):
    """Return (header, rows as list of str lists, metadata dict)."""
    path = Path(path)
    meta = {}
    lines = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                meta[key.strip()] = value.strip()
        elif line.strip():
            lines.append(line)
    if not lines:
        raise CsvFormatError(f"{path}: empty CSV file")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    rows = [row for row in reader]
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"{path}: row {i} has {len(row)} fields, header has {len(header)}")
    return header, rows, meta


def read_numeric(path, required=None):
    header, rows, meta = read_table(path)
    if required is not None:
        missing = [c for c in required if c not in header]
        if missing:
            raise CsvFormatError(f"{path}: missing columns {', '.join(missing)}")
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    try:
        data = np.array([[float(v) for v in row] for row in rows], dtype=float)
    except ValueError as exc:
        raise CsvFormatError(f"{path}: non-numeric value ({exc})") from None
    return header, data, meta


# --------------------------------------------------------------------------
# References
# --------------------------------------------------------------------------

def write_references(path, refs):
    data = np.column_stack([refs.times, refs.zmp_d, refs.com_d, refs.left_foot, refs.right_foot])
    meta = {"ts": refs.params.ts} if refs.params is not None else None
    write_table(path, REFERENCE_COLUMNS, data.tolist(), meta)


def read_references(path, plan=None, params=None):
    header, data, _ = read_numeric(path, REFERENCE_COLUMNS)
    col = {name: header.index(name) for name in REFERENCE_COLUMNS}

    def cols(*names):
        return data[:, [col[n] for n in names]]

    return ReferenceTrajectories(
        times=data[:, col["t"]],
        zmp_d=cols("zmp_x", "zmp_y"),
        com_d=cols("com_x", "com_y", "com_z"),
        left_foot=cols("lf_x", "lf_y", "lf_z", "lf_pitch"),
        right_foot=cols("rf_x", "rf_y", "rf_z", "rf_pitch"),
        plan=plan,
        params=params,
    )


def write_footsteps(path, plan):
    rows = [[i, h.side, *h.position, float(np.rad2deg(h.pitch)), h.touchdown_time, h.liftoff_time]
            for i, h in enumerate(plan.footholds)]
    write_table(path, ["index", "side", "x", "y", "z", "pitch_deg", "touchdown_time", "liftoff_time"],
                rows)


def write_timeline(path, plan):
    rows = [[float(p.t0), float(p.t1), p.phase] for p in plan.support_timeline]
    write_table(path, ["t0", "t1", "phase"], rows)


# --------------------------------------------------------------------------
# Joint trajectories
# --------------------------------------------------------------------------

def write_joint_trajectory(path, traj, degrees=False):
    q = np.rad2deg(traj.q) if degrees else traj.q
    meta = {"units": "deg" if degrees else "rad"}
    write_table(path, ["t", *traj.joint_names], np.column_stack([traj.times, q]).tolist(), meta)


def read_joint_trajectory(path):
    header, data, meta = read_numeric(path, ["t"])
    q = data[:, 1:]
    if meta.get("units") == "deg":
        q = np.deg2rad(q)
    return JointTrajectory(times=data[:, 0], q=q, joint_names=header[1:])


def write_ik_report(path, result):
    rows = [[k, float(t), side, int(r.converged), r.iterations, r.residual_norm,
             ";".join(r.active_bounds)]
            for k, (t, side, r) in enumerate(zip(result.trajectory.times, result.anchors, result.results))]
    meta = {"feasible": int(result.feasible),
            "failed_sample": "" if result.failed_sample is None else result.failed_sample}
    write_table(path, ["sample", "t", "anchor", "converged", "iterations", "residual_norm",
                       "active_bounds"], rows, meta)


# --------------------------------------------------------------------------
# Execution logs
# --------------------------------------------------------------------------

def log_columns(n_motors, n_joints, feet=False):
    cols = ["t"]
    cols += [f"i_{m + 1}" for m in range(n_motors)]
    cols += [f"v_{m + 1}" for m in range(n_motors)]
    cols += [f"q_meas_{j + 1}" for j in range(n_joints)]
    cols += [f"q_des_{j + 1}" for j in range(n_joints)]
    cols += ["com_meas_x", "com_meas_y", "com_meas_z", "com_des_x", "com_des_y", "com_des_z"]
    cols += ["zmp_meas_x", "zmp_meas_y", "zmp_des_x", "zmp_des_y"]
    if feet:
        cols += ["feet_mid_x", "feet_mid_y"]
    return cols


def write_log(path, log):
    feet = log.feet_mid is not None
    cols = log_columns(log.current.shape[1], log.q_meas.shape[1], feet)
    parts = [log.times[:, None], log.current, log.voltage, log.q_meas, log.q_des,
             log.com_meas, log.com_des, log.zmp_meas, log.zmp_des]
    if feet:
        parts.append(log.feet_mid)
    write_table(path, cols, np.hstack(parts).tolist())


def write_log_metadata(path, log, extra=None):
    lines = [f"robot_mass = {log.robot_mass!r}", f"leg_length = {log.leg_length!r}",
             f"foot_length = {float(log.foot_dims[0])!r}", f"foot_width = {float(log.foot_dims[1])!r}"]
    if log.joint_names:
        lines.append(f"joint_names = {','.join(log.joint_names)}")
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_log_metadata(path):
    meta = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise LogError(f"{path}: line {lineno}: expected 'name = value'")
        meta[key.strip()] = value.strip()
    for key in ("robot_mass", "leg_length"):
        if key not in meta:
            raise LogError(f"{path}: missing '{key}'")
    return meta


def _group(header, prefix):
    idx = [i for i, h in enumerate(header) if h.startswith(prefix) and h[len(prefix):].isdigit()]
    return sorted(idx, key=lambda i: int(header[i][len(prefix):]))


def read_log(path, meta_path):
    header, data, _ = read_numeric(path, ["t"])
    meta = read_log_metadata(meta_path)
    groups = {p: _group(header, p) for p in ("i_", "v_", "q_meas_", "q_des_")}
    if len(groups["i_"]) != len(groups["v_"]):
        raise LogError(f"{path}: {len(groups['i_'])} current columns (i_*) but "
                       f"{len(groups['v_'])} voltage columns (v_*)")
    if len(groups["q_meas_"]) != len(groups["q_des_"]):
        raise LogError(f"{path}: {len(groups['q_meas_'])} q_meas_* columns but "
                       f"{len(groups['q_des_'])} q_des_* columns")

    def named(*names):
        missing = [n for n in names if n not in header]
        if missing:
            raise LogError(f"{path}: missing columns {', '.join(missing)}")
        return data[:, [header.index(n) for n in names]]

    feet = None
    if "feet_mid_x" in header:
        feet = named("feet_mid_x", "feet_mid_y")
    names = meta.get("joint_names")
    foot_dims = (float(meta.get("foot_length", 0.2)), float(meta.get("foot_width", 0.1)))
    return ExecutionLog(
        times=data[:, 0],
        current=data[:, groups["i_"]],
        voltage=data[:, groups["v_"]],
        q_meas=data[:, groups["q_meas_"]],
        q_des=data[:, groups["q_des_"]],
        com_meas=named("com_meas_x", "com_meas_y", "com_meas_z"),
        com_des=named("com_des_x", "com_des_y", "com_des_z"),
        zmp_meas=named("zmp_meas_x", "zmp_meas_y"),
        zmp_des=named("zmp_des_x", "zmp_des_y"),
        robot_mass=float(meta["robot_mass"]),
        leg_length=float(meta["leg_length"]),
        feet_mid=feet,
        joint_names=[n.strip() for n in names.split(",")] if names else None,
        foot_dims=foot_dims,
    ), meta
