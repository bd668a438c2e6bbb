"""SE(2) helpers, oriented-box sampling, and occlusion ray tests."""

import numpy as np


def rot2d(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def wrap_angle(theta):
    """Normalize to (-pi, pi]."""
    out = np.mod(-theta + np.pi, 2 * np.pi)
    return np.pi - out


def world_to_ego(points_xy, ego_x, ego_y, ego_heading):
    """Express world points in the ego frame (ego at origin, +x = heading)."""
    return (np.asarray(points_xy) - np.array([ego_x, ego_y])) @ rot2d(ego_heading)


def ego_to_world(points_xy, ego_x, ego_y, ego_heading):
    return np.asarray(points_xy) @ rot2d(ego_heading).T + np.array([ego_x, ego_y])


def rotate_only(vectors_xy, from_heading, to_heading):
    """Re-express free vectors (velocities) between two frames."""
    return np.asarray(vectors_xy) @ rot2d(from_heading).T @ rot2d(to_heading)


def interpolate_pose(history, t):
    """Linear pose interpolation between the bracketing samples.

    history is a list of EgoPose with strictly increasing timestamps;
    requesting a time outside the span is an error.
    """
    ts = np.array([p.t for p in history])
    if t < ts[0] - 1e-9 or t > ts[-1] + 1e-9:
        raise ValueError(f"time {t} outside ego pose history span [{ts[0]}, {ts[-1]}]")
    i = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
    p0, p1 = history[i], history[i + 1]
    u = 0.0 if p1.t == p0.t else np.clip((t - p0.t) / (p1.t - p0.t), 0.0, 1.0)
    dh = wrap_angle(p1.heading - p0.heading)
    return (
        p0.x + u * (p1.x - p0.x),
        p0.y + u * (p1.y - p0.y),
        p0.heading + u * dh,
    )


def box_corners(x, y, heading, length, width):
    """(4, 2) corners counter-clockwise, front-left first."""
    local = np.array(
        [
            [length / 2, width / 2],
            [-length / 2, width / 2],
            [-length / 2, -width / 2],
            [length / 2, -width / 2],
        ]
    )
    return local @ rot2d(heading).T + np.array([x, y])


def visible_perimeter_segments(x, y, heading, length, width, viewer_xy):
    """Perimeter edges whose outward normal faces the viewer.

    Returns a list of (p0, p1) world-frame segments.
    """
    corners = box_corners(x, y, heading, length, width)
    center = np.array([x, y])
    out = []
    for k in range(4):
        p0, p1 = corners[k], corners[(k + 1) % 4]
        mid = 0.5 * (p0 + p1)
        normal = mid - center
        if np.dot(normal, np.asarray(viewer_xy) - mid) > 0:
            out.append((p0, p1))
    return out


def sample_on_segments(rng, segments, n):
    """n points uniform over the total length of the given segments."""
    if n == 0 or not segments:
        return np.zeros((0, 2))
    lengths = np.array([np.linalg.norm(p1 - p0) for p0, p1 in segments])
    cdf = np.cumsum(lengths)
    u = rng.uniform(0.0, cdf[-1], size=n)
    out = np.zeros((n, 2))
    for i, ui in enumerate(u):
        k = int(np.searchsorted(cdf, ui))
        p0, p1 = segments[k]
        prev = cdf[k - 1] if k else 0.0
        frac = (ui - prev) / lengths[k]
        out[i] = p0 + frac * (p1 - p0)
    return out


def sample_in_box(rng, x, y, heading, length, width, n):
    """n points uniform over the box interior."""
    local = np.column_stack(
        [
            rng.uniform(-length / 2, length / 2, size=n),
            rng.uniform(-width / 2, width / 2, size=n),
        ]
    )
    return local @ rot2d(heading).T + np.array([x, y])


def segments_blocked(origin, targets, box, shrink=1e-6):
    """Which origin->target segments pass through an oriented box.

    Liang-Barsky clipping in the box frame; the target endpoint itself is
    excluded so points on a box surface are not blocked by their own box.
    """
    x, y, heading, length, width = box
    r = rot2d(heading)
    o = (np.asarray(origin) - [x, y]) @ r
    pts = (np.asarray(targets) - [x, y]) @ r
    d = pts - o
    blocked = np.ones(len(pts), dtype=bool)
    t0 = np.zeros(len(pts))
    t1 = np.full(len(pts), 1.0 - shrink)
    for axis, half in ((0, length / 2), (1, width / 2)):
        for sign in (1.0, -1.0):
            # half-space sign*p[axis] <= half
            num = half - sign * o[axis]
            den = sign * d[:, axis]
            with np.errstate(divide="ignore", invalid="ignore"):
                tcross = num / den
            entering = den < 0
            leaving = den > 0
            parallel_out = (den == 0) & (sign * o[axis] > half)
            t0 = np.where(entering, np.maximum(t0, tcross), t0)
            t1 = np.where(leaving, np.minimum(t1, tcross), t1)
            blocked &= ~parallel_out
    return blocked & (t0 <= t1)


def point_in_box(points_xy, x, y, heading, length, width):
    local = (np.asarray(points_xy) - [x, y]) @ rot2d(heading)
    return (np.abs(local[:, 0]) <= length / 2) & (np.abs(local[:, 1]) <= width / 2)
