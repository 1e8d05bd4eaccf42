"""Hot numeric kernels.

Every kernel exists twice: a loop version compiled with numba
(``*_jit``) and a vectorised pure-numpy version (``*_numpy``). The
unsuffixed names dispatch to one of them according to
:data:`zmpgait._accel.USE_JIT`. Both versions are kept importable so
tests and the benchmark can compare them side by side.
"""

import numpy as np

from zmpgait._accel import USE_JIT, njit

__all__ = [
    "thomas_solve",
    "second_difference",
    "chain_poses",
    "thomas_solve_jit",
    "thomas_solve_numpy",
    "second_difference_jit",
    "second_difference_numpy",
    "chain_poses_jit",
    "chain_poses_numpy",
]


# --------------------------------------------------------------------------
# Tridiagonal solve
# --------------------------------------------------------------------------

@njit(cache=True)
def _thomas_loop(lower, diag, upper, rhs):
    n = diag.shape[0]
    k = rhs.shape[1]
    cp = np.empty(n)
    dp = np.empty((n, k))
    cp[0] = upper[0] / diag[0]
    for j in range(k):
        dp[0, j] = rhs[0, j] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / denom
        for j in range(k):
            dp[i, j] = (rhs[i, j] - lower[i] * dp[i - 1, j]) / denom
    x = np.empty((n, k))
    for j in range(k):
        x[n - 1, j] = dp[n - 1, j]
    for i in range(n - 2, -1, -1):
        for j in range(k):
            x[i, j] = dp[i, j] - cp[i] * x[i + 1, j]
    return x


def _thomas_rows_numpy(lower, diag, upper, rhs):
    n = diag.shape[0]
    cp = np.empty(n)
    dp = np.empty_like(rhs)
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / denom
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom
    x = np.empty_like(dp)
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def _prepare_tridiag(lower, diag, upper, rhs):
    lower = np.ascontiguousarray(lower, dtype=float)
    diag = np.ascontiguousarray(diag, dtype=float)
    upper = np.ascontiguousarray(upper, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = diag.shape[0]
    if lower.shape != (n,) or upper.shape != (n,):
        raise ValueError("lower, diag and upper must be vectors of equal length")
    if rhs.shape[0] != n or rhs.ndim not in (1, 2):
        raise ValueError("rhs must have shape (n,) or (n, k)")
    squeeze = rhs.ndim == 1
    rhs2 = np.ascontiguousarray(rhs.reshape(n, -1))
    return lower, diag, upper, rhs2, squeeze


def thomas_solve_jit(lower, diag, upper, rhs):
    """Solve a tridiagonal system with the compiled loop kernel.

    ``lower[0]`` and ``upper[-1]`` are ignored. ``rhs`` may hold several
    right-hand sides as columns.
    """
    lower, diag, upper, rhs2, squeeze = _prepare_tridiag(lower, diag, upper, rhs)
    x = _thomas_loop(lower, diag, upper, rhs2)
    return x[:, 0] if squeeze else x


def thomas_solve_numpy(lower, diag, upper, rhs):
    """Same contract as :func:`thomas_solve_jit`, numpy row operations only."""
    lower, diag, upper, rhs2, squeeze = _prepare_tridiag(lower, diag, upper, rhs)
    x = _thomas_rows_numpy(lower, diag, upper, rhs2)
    return x[:, 0] if squeeze else x


# --------------------------------------------------------------------------
# Central second difference
# --------------------------------------------------------------------------

@njit(cache=True)
def _second_difference_loop(x, ts):
    n = x.shape[0]
    k = x.shape[1]
    out = np.empty((n, k))
    inv = 1.0 / (ts * ts)
    for i in range(1, n - 1):
        for j in range(k):
            out[i, j] = (x[i - 1, j] - 2.0 * x[i, j] + x[i + 1, j]) * inv
    for j in range(k):
        out[0, j] = out[1, j]
        out[n - 1, j] = out[n - 2, j]
    return out


def _check_difference_input(x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 3:
        raise ValueError("at least 3 samples are needed for a central difference")
    return x


def second_difference_jit(x, ts):
    """Central second difference along axis 0; end samples copy their neighbours."""
    x = _check_difference_input(x)
    out = _second_difference_loop(np.ascontiguousarray(x.reshape(x.shape[0], -1)), float(ts))
    return out.reshape(x.shape)


def second_difference_numpy(x, ts):
    x = _check_difference_input(x)
    out = np.empty_like(x)
    out[1:-1] = (x[:-2] - 2.0 * x[1:-1] + x[2:]) / (ts * ts)
    out[0] = out[1]
    out[-1] = out[-2]
    return out


# --------------------------------------------------------------------------
# Kinematic chain
# --------------------------------------------------------------------------

@njit(cache=True)
def _chain_loop(q, order, parent, origin_rot, origin_pos, axis):
    n = q.shape[0]
    rot = np.empty((n, 3, 3))
    pos = np.empty((n, 3))
    for idx in range(n):
        j = order[idx]
        # Rodrigues rotation about the joint axis
        ux = axis[j, 0]
        uy = axis[j, 1]
        uz = axis[j, 2]
        s = np.sin(q[j])
        c = np.cos(q[j])
        v = 1.0 - c
        rj = np.empty((3, 3))
        rj[0, 0] = c + ux * ux * v
        rj[0, 1] = ux * uy * v - uz * s
        rj[0, 2] = ux * uz * v + uy * s
        rj[1, 0] = uy * ux * v + uz * s
        rj[1, 1] = c + uy * uy * v
        rj[1, 2] = uy * uz * v - ux * s
        rj[2, 0] = uz * ux * v - uy * s
        rj[2, 1] = uz * uy * v + ux * s
        rj[2, 2] = c + uz * uz * v
        p = parent[j]
        if p < 0:
            base_r = origin_rot[j].copy()
            base_p = origin_pos[j].copy()
        else:
            base_r = np.empty((3, 3))
            base_p = np.empty(3)
            for a in range(3):
                acc = pos[p, a]
                for b in range(3):
                    acc += rot[p, a, b] * origin_pos[j, b]
                    t = 0.0
                    for m in range(3):
                        t += rot[p, a, m] * origin_rot[j, m, b]
                    base_r[a, b] = t
                base_p[a] = acc
        for a in range(3):
            pos[j, a] = base_p[a]
            for b in range(3):
                t = 0.0
                for m in range(3):
                    t += base_r[a, m] * rj[m, b]
                rot[j, a, b] = t
    return rot, pos


def _axis_rotations(q, axis):
    s = np.sin(q)[:, None, None]
    c = np.cos(q)[:, None, None]
    k = np.zeros((q.shape[0], 3, 3))
    k[:, 0, 1] = -axis[:, 2]
    k[:, 0, 2] = axis[:, 1]
    k[:, 1, 0] = axis[:, 2]
    k[:, 1, 2] = -axis[:, 0]
    k[:, 2, 0] = -axis[:, 1]
    k[:, 2, 1] = axis[:, 0]
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def chain_poses_jit(q, order, parent, origin_rot, origin_pos, axis):
    """World poses of every joint's child link frame.

    ``order`` lists joint indices so that each parent precedes its
    children; ``parent[j]`` is the index of the joint whose child link is
    joint ``j``'s parent link, or -1 for the root link.
    """
    return _chain_loop(np.ascontiguousarray(q, dtype=float), order, parent,
                       origin_rot, origin_pos, axis)


def chain_poses_numpy(q, order, parent, origin_rot, origin_pos, axis):
    q = np.asarray(q, dtype=float)
    local = origin_rot @ _axis_rotations(q, axis)
    rot = np.empty_like(local)
    pos = np.empty((q.shape[0], 3))
    for j in order:
        p = parent[j]
        if p < 0:
            rot[j] = local[j]
            pos[j] = origin_pos[j]
        else:
            rot[j] = rot[p] @ local[j]
            pos[j] = pos[p] + rot[p] @ origin_pos[j]
    return rot, pos


if USE_JIT:
    thomas_solve = thomas_solve_jit
    second_difference = second_difference_jit
    chain_poses = chain_poses_jit
else:
    thomas_solve = thomas_solve_numpy
    second_difference = second_difference_numpy
    chain_poses = chain_poses_numpy
