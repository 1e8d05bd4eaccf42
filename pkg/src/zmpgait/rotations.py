"""SO(3) helpers: skew matrices, exponential/log maps, rpy conversion."""

import numpy as np

SMALL_ANGLE = 1e-7
ANTIPODAL_BAND = 1e-5
ORTHONORMAL_TOL = 1e-6


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m):
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def axis_angle(axis, angle):
    """Rotation matrix for ``angle`` radians about the unit vector ``axis``."""
    k = skew(np.asarray(axis, dtype=float))
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def exp_so3(rotvec):
    rotvec = np.asarray(rotvec, dtype=float)
    theta = np.linalg.norm(rotvec)
    if theta < 1e-12:
        return np.eye(3) + skew(rotvec)
    return axis_angle(rotvec / theta, theta)


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rpy_to_matrix(roll, pitch, yaw):
    """Fixed-axis roll/pitch/yaw (radians), composed as Rz(yaw) Ry(pitch) Rx(roll)."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def orthonormality_error(r):
    r = np.asarray(r, dtype=float)
    return float(np.max(np.abs(r.T @ r - np.eye(3))))


def check_rotation(r, name="rotation", tol=ORTHONORMAL_TOL):
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"{name} must be a 3x3 matrix, got shape {r.shape}")
    err = orthonormality_error(r)
    if err > tol:
        raise ValueError(f"{name} is not orthonormal (|R^T R - I|_inf = {err:.3g})")
    return r


def log_so3(r):
    """Rotation vector (axis times angle, angle in [0, pi]) of ``r``."""
    cos_theta = np.clip((np.trace(r) - 1.0) * 0.5, -1.0, 1.0)
    theta = float(np.arccos(cos_theta))
    w = 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if theta < SMALL_ANGLE:
        return w
    if abs(theta - np.pi) < ANTIPODAL_BAND:
        # R ~ 2 a a^T - I near pi; recover a from the dominant diagonal entry
        b = 0.5 * (r + np.eye(3))
        i = int(np.argmax(np.diag(b)))
        axis = b[:, i] / np.sqrt(max(b[i, i], 1e-300))
        axis /= np.linalg.norm(axis)
        if axis @ w < 0.0:
            axis = -axis
        return theta * axis
    return (theta / np.sin(theta)) * w


def left_jacobian_inverse(rotvec):
    """Inverse left Jacobian of SO(3) at ``rotvec``.

    Maps a world-frame angular increment applied as ``exp(d) R`` to the
    change of ``log_so3``.
    """
    theta = np.linalg.norm(rotvec)
    k = skew(rotvec)
    if theta < 1e-5:
        coeff = 1.0 / 12.0 + theta * theta / 720.0
    else:
        half = 0.5 * theta
        # guard the cot blow-up at theta = pi
        sin_half = max(np.sin(half), 1e-12)
        coeff = (1.0 - half * np.cos(half) / sin_half) / (theta * theta)
    return np.eye(3) - 0.5 * k + coeff * (k @ k)
