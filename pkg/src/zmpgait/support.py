"""Support polygon geometry: sole rectangles, convex hulls, signed margins."""

import numpy as np

FOOT_LENGTH = 0.2
FOOT_WIDTH = 0.1


def sole_rectangle(center, pitch=0.0, yaw=0.0, length=FOOT_LENGTH, width=FOOT_WIDTH):
    """Ground-projected corners (4 x 2, counter-clockwise) of a sole."""
    half_l = 0.5 * length * np.cos(pitch)
    half_w = 0.5 * width
    local = np.array([[half_l, half_w], [-half_l, half_w], [-half_l, -half_w], [half_l, -half_w]])
    c, s = np.cos(yaw), np.sin(yaw)
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.asarray(center, dtype=float)[:2]


def convex_hull(points):
    """Counter-clockwise hull vertices (monotone chain), collinear points dropped."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def signed_margin(points, polygon):
    """Signed distance from each point to the boundary of a convex CCW polygon.

    Positive inside (distance to the nearest edge), negative outside
    (minus the distance to the polygon).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    v0 = polygon
    v1 = np.roll(polygon, -1, axis=0)
    edge = v1 - v0
    length = np.linalg.norm(edge, axis=1)
    normal = np.stack([edge[:, 1], -edge[:, 0]], axis=1) / length[:, None]
    # outward signed distance to each edge line, shape (n_points, n_edges)
    d = np.einsum("pea,ea->pe", pts[:, None, :] - v0[None], normal)
    inside = np.all(d <= 0.0, axis=1)
    margin = -np.max(d, axis=1)

    # distance to edge segments for points outside
    rel = pts[:, None, :] - v0[None]
    t = np.clip(np.einsum("pea,ea->pe", rel, edge) / (length ** 2)[None], 0.0, 1.0)
    closest = v0[None] + t[..., None] * edge[None]
    dist = np.min(np.linalg.norm(pts[:, None, :] - closest, axis=2), axis=1)
    return np.where(inside, margin, -dist)


def support_polygon(feet, length=FOOT_LENGTH, width=FOOT_WIDTH):
    """Convex hull of the soles in contact; ``feet`` is a list of (position, pitch)."""
    corners = np.vstack([sole_rectangle(p, pitch, 0.0, length, width) for p, pitch in feet])
    return convex_hull(corners)
