"""Box-constrained least-squares inverse kinematics over stacked tasks.

Residuals per task are ``p_d - p(q)`` for positions and
``R(q)^T log(R_d R(q)^T)`` for orientations. The objective ``|e|^2`` is
minimised by damped Gauss-Newton steps ``(J^T J + lam I) dq = -J^T e``
(``J = de/dq``), each projected onto the joint limits.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from zmpgait.robot_model import FramePose
from zmpgait.rotations import (check_rotation, left_jacobian_inverse, log_so3,
                               rot_y)

LOG = logging.getLogger(__name__)

COM = "COM"
POSITION_ONLY = "position_only"
ORIENTATION_ONLY = "orientation_only"
FULL = "full"
MODES = (POSITION_ONLY, ORIENTATION_ONLY, FULL)

TRAJECTORY_TOLERANCE = 1e-4


@dataclass(frozen=True)
class TaskTarget:
    """Desired pose of a frame, or desired whole-body CoM position when ``frame == COM``."""

    frame: str
    desired_position: np.ndarray = None
    desired_orientation: np.ndarray = None
    mode: str = FULL

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown task mode '{self.mode}'")
        if self.frame == COM and self.mode != POSITION_ONLY:
            raise ValueError("a COM target must be position_only")
        needs_pos = self.mode in (POSITION_ONLY, FULL)
        needs_rot = self.mode in (ORIENTATION_ONLY, FULL)
        if needs_pos and self.desired_position is None:
            raise ValueError(f"target '{self.frame}' ({self.mode}) needs a desired position")
        if needs_rot and self.desired_orientation is None:
            raise ValueError(f"target '{self.frame}' ({self.mode}) needs a desired orientation")
        if needs_pos:
            object.__setattr__(self, "desired_position",
                               np.asarray(self.desired_position, dtype=float).reshape(3))
        if needs_rot:
            object.__setattr__(self, "desired_orientation",
                               check_rotation(self.desired_orientation, f"target '{self.frame}'"))

    @property
    def has_position(self):
        return self.mode in (POSITION_ONLY, FULL)

    @property
    def has_orientation(self):
        return self.mode in (ORIENTATION_ONLY, FULL)

    @classmethod
    def com(cls, position):
        return cls(COM, desired_position=position, mode=POSITION_ONLY)

    @classmethod
    def pose(cls, frame, pose):
        return cls(frame, desired_position=pose.position, desired_orientation=pose.orientation)


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 200
    residual_tolerance: float = 1e-8
    step_tolerance: float = 1e-10
    initial_damping: float = 1e-6
    damping_up: float = 10.0
    damping_down: float = 10.0
    max_damping: float = 1e12
    min_damping: float = 1e-9

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("residual_tolerance", "step_tolerance", "initial_damping", "damping_up",
                     "damping_down", "max_damping", "min_damping"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class IkResult:
    q: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    active_bounds: list
    cost_history: list = field(default_factory=list, repr=False)
    message: str = ""


def rotation_error(current, desired):
    """Orientation error ``current^T log(desired current^T)``, in the current frame.

    Rotating ``current`` by the returned vector in its own frame,
    ``current @ exp(skew(err))``, reaches ``desired``.
    """
    current = check_rotation(current, "current")
    desired = check_rotation(desired, "desired")
    return current.T @ log_so3(desired @ current.T)


def _evaluate(model, q, targets, anchor, with_jacobian=True):
    state = model.state(q, anchor)
    rows, jac = [], []
    for target in targets:
        if target.frame == COM:
            rows.append(target.desired_position - state.com())
            if with_jacobian:
                jac.append(-state.com_jacobian())
            continue
        pose = state.frame_pose(target.frame)
        j6 = state.frame_jacobian(target.frame) if with_jacobian else None
        if target.has_position:
            rows.append(target.desired_position - pose.position)
            if with_jacobian:
                jac.append(-j6[:3])
        if target.has_orientation:
            phi = log_so3(target.desired_orientation @ pose.orientation.T)
            rows.append(pose.orientation.T @ phi)
            if with_jacobian:
                jac.append(-pose.orientation.T @ left_jacobian_inverse(phi) @ j6[3:])
    e = np.concatenate(rows) if rows else np.zeros(0)
    if not with_jacobian:
        return e
    return e, (np.vstack(jac) if jac else np.zeros((0, model.n_joints)))


def residuals(model, q, targets, anchor=None):
    """Stacked residual vector in target order."""
    return _evaluate(model, model.check_q(q), targets, anchor, with_jacobian=False)


def residual_jacobian(model, q, targets, anchor=None):
    """Residuals and their exact derivative ``de/dq``."""
    return _evaluate(model, model.check_q(q), targets, anchor)


def gradient(model, q, targets, anchor=None):
    """Gradient of ``0.5 |e(q)|^2``."""
    e, jac = residual_jacobian(model, q, targets, anchor)
    return jac.T @ e


def _active_bounds(model, q):
    at = (q <= model.q_min) | (q >= model.q_max)
    return [name for name, hit in zip(model.joint_names, at) if hit]


def solve_frame(model, targets, q_init, options=None, anchor=None):
    """Minimise ``|e(q)|^2`` subject to the joint limits, starting from ``q_init``."""
    options = options or SolverOptions()
    q_init = model.check_q(q_init)
    q = model.clamp(q_init)
    if not np.array_equal(q, q_init):
        LOG.warning("initial configuration outside joint limits was clamped")
    e, jac = residual_jacobian(model, q, targets, anchor)
    cost = float(e @ e)
    history = [cost]
    lam = options.initial_damping
    iterations = 0
    message = ""
    n = model.n_joints

    while True:
        if cost <= options.residual_tolerance:
            message = "residual tolerance reached"
            break
        if iterations >= options.max_iterations:
            message = "iteration limit reached"
            break
        grad = jac.T @ e
        # joints pinned at a bound with the descent direction pointing outward
        blocked = ((q <= model.q_min) & (grad > 0.0)) | ((q >= model.q_max) & (grad < 0.0))
        free = ~blocked
        if not free.any():
            message = "all joints blocked at bounds"
            break
        jf = jac[:, free]
        normal = jf.T @ jf
        rhs = -jf.T @ e
        eye = np.eye(normal.shape[0])
        iterations += 1
        accepted = False
        while lam <= options.max_damping:
            try:
                step_free = np.linalg.solve(normal + lam * eye, rhs)
            except np.linalg.LinAlgError:
                lam *= options.damping_up
                continue
            step = np.zeros(n)
            step[free] = step_free
            q_new = model.clamp(q + step)
            e_new, jac_new = residual_jacobian(model, q_new, targets, anchor)
            cost_new = float(e_new @ e_new)
            if cost_new < cost:
                accepted = True
                lam = max(lam / options.damping_down, options.min_damping)
                break
            lam *= options.damping_up
        if not accepted:
            message = f"damping exceeded {options.max_damping:g} without a decrease"
            break
        moved = float(np.max(np.abs(q_new - q)))
        q, e, jac, cost = q_new, e_new, jac_new, cost_new
        history.append(cost)
        if moved < options.step_tolerance:
            message = "step tolerance reached"
            break

    converged = cost <= options.residual_tolerance
    return IkResult(q=q, residual_norm=float(np.sqrt(cost)), iterations=iterations,
                    converged=converged, active_bounds=_active_bounds(model, q),
                    cost_history=history, message=message)


# --------------------------------------------------------------------------
# Trajectories
# --------------------------------------------------------------------------

@dataclass
class JointTrajectory:
    times: np.ndarray
    q: np.ndarray
    joint_names: list


@dataclass
class TrajectoryResult:
    trajectory: JointTrajectory
    results: list
    feasible: bool
    failed_sample: int = None
    anchors: list = field(default_factory=list, repr=False)

    @property
    def residual_norms(self):
        return np.array([r.residual_norm for r in self.results])


def sole_orientation(pitch):
    """Sole rotation for an inclination ``pitch`` (positive raises the toes)."""
    return rot_y(-pitch)


def default_posture(model, knee=-0.6):
    """Bent-knee standing guess: hip and ankle pitch take half the knee flexion each."""
    q = np.zeros(model.n_joints)
    for name, i in model.joint_index.items():
        if name.endswith("knee"):
            q[i] = knee
        elif name.endswith("hip_pitch") or name.endswith("ankle_pitch"):
            q[i] = -0.5 * knee
    return model.clamp(q)


def sample_targets(references, k, frames=("l_sole", "r_sole")):
    left = references.left_foot[k]
    right = references.right_foot[k]
    lpose = FramePose(left[:3].copy(), sole_orientation(left[3]))
    rpose = FramePose(right[:3].copy(), sole_orientation(right[3]))
    targets = [
        TaskTarget.pose(frames[0], lpose),
        TaskTarget.pose(frames[1], rpose),
        TaskTarget.com(references.com_d[k]),
    ]
    return targets, {"left": (frames[0], lpose), "right": (frames[1], rpose)}


def solve_trajectory(model, references, q0, options=None, tolerance=TRAJECTORY_TOLERANCE,
                     frames=("l_sole", "r_sole"), first_options=None):
    """Joint trajectory tracking both soles and the CoM at every sample.

    Each sample is warm-started from the previous solution. The sole in
    support (from the footstep plan; the left sole when no plan is
    attached) is pinned to its reference pose. ``first_options`` may give
    the first sample a larger iteration budget.
    """
    options = options or SolverOptions()
    q0 = model.check_q(q0)
    if np.any(q0 < model.q_min) or np.any(q0 > model.q_max):
        raise ValueError("q0 is outside the joint limits")
    n = references.n_samples
    out = np.empty((n, model.n_joints))
    results, anchors = [], []
    failed = None
    q = q0
    for k in range(n):
        targets, poses = sample_targets(references, k, frames)
        side = references.plan.anchor_side(references.times[k]) if references.plan else "left"
        anchor = poses[side]
        opts = first_options if (k == 0 and first_options is not None) else options
        res = solve_frame(model, targets, q, opts, anchor)
        out[k] = res.q
        results.append(res)
        anchors.append(side)
        if failed is None and res.residual_norm > tolerance:
            failed = k
            LOG.warning("sample %d (t = %.3f s): task error %.3g exceeds %.1g",
                        k, references.times[k], res.residual_norm, tolerance)
        q = res.q
    traj = JointTrajectory(times=np.asarray(references.times, dtype=float).copy(), q=out,
                           joint_names=model.joint_names)
    return TrajectoryResult(trajectory=traj, results=results, feasible=failed is None,
                            failed_sample=failed, anchors=anchors)
