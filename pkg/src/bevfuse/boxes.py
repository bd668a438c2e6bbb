"""Oriented-box geometry: corners, convex clipping, rotated IoU."""

import numpy as np


class DegenerateBoxError(ValueError):
    pass


def box_corners(box):
    """(4, 2) corners of (x, y, theta, length, width), counter-clockwise."""
    x, y, theta, length, width = box
    if length <= 0 or width <= 0:
        raise DegenerateBoxError(f"degenerate box dims ({length}, {width})")
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    local = np.array(
        [
            [length / 2, width / 2],
            [-length / 2, width / 2],
            [-length / 2, -width / 2],
            [length / 2, -width / 2],
        ]
    )
    return local @ rot.T + np.array([x, y])


def polygon_area(poly):
    """Shoelace area of a polygon given as (N, 2), positive if CCW."""
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _cross2(u, v):
    return u[0] * v[1] - u[1] * v[0]


def clip_polygon(subject, clip):
    """Sutherland-Hodgman clipping of a polygon by a convex CCW clip polygon."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        if not output:
            return np.zeros((0, 2))
        a, b = clip[i], clip[(i + 1) % n]
        edge = b - a
        inputs, output = output, []
        prev = inputs[-1]
        prev_inside = _cross2(edge, prev - a) >= 0
        for cur in inputs:
            cur_inside = _cross2(edge, cur - a) >= 0
            if cur_inside != prev_inside:
                denom = _cross2(edge, cur - prev)
                t = _cross2(edge, a - prev) / denom
                output.append(prev + t * (cur - prev))
            if cur_inside:
                output.append(cur)
            prev, prev_inside = cur, cur_inside
    return np.asarray(output)


def rotated_iou(box_a, box_b):
    """Intersection-over-union of two oriented BEV boxes via polygon clipping."""
    ca = box_corners(box_a)
    cb = box_corners(box_b)
    inter_poly = clip_polygon(ca, cb)
    inter = abs(polygon_area(inter_poly)) if len(inter_poly) >= 3 else 0.0
    area_a = box_a[3] * box_a[4]
    area_b = box_b[3] * box_b[4]
    union = area_a + area_b - inter
    if union <= 0:
        raise DegenerateBoxError("zero-area union")
    return float(np.clip(inter / union, 0.0, 1.0))
