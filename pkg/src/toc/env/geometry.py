"""Planar geometry helpers for convex polygons and circles."""

from __future__ import annotations

import numpy as np


def polygon_area(verts):
    """Signed shoelace area (positive for counter-clockwise winding)."""
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(verts):
    x, y = verts[:, 0], verts[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    a = 0.5 * np.sum(cross)
    cx = np.sum((x + np.roll(x, -1)) * cross) / (6.0 * a)
    cy = np.sum((y + np.roll(y, -1)) * cross) / (6.0 * a)
    return np.array([cx, cy])


def polygon_inertia(verts, mass):
    """Moment of inertia about the centroid for a uniform-density polygon."""
    v = verts - polygon_centroid(verts)
    num = 0.0
    den = 0.0
    for i in range(len(v)):
        p0 = v[i]
        p1 = v[(i + 1) % len(v)]
        cross = abs(p0[0] * p1[1] - p1[0] * p0[1])
        num += cross * (p0 @ p0 + p0 @ p1 + p1 @ p1)
        den += cross
    return mass * num / (6.0 * den)


def is_convex(verts, tol=1e-12):
    """True when vertices wind one way with no reflex corners."""
    n = len(verts)
    if n < 3:
        return False
    sign = 0.0
    for i in range(n):
        a = verts[(i + 1) % n] - verts[i]
        b = verts[(i + 2) % n] - verts[(i + 1) % n]
        c = a[0] * b[1] - a[1] * b[0]
        if abs(c) <= tol:
            continue
        if sign == 0.0:
            sign = np.sign(c)
        elif np.sign(c) != sign:
            return False
    return sign != 0.0


def convex_hull(points):
    """Andrew's monotone chain; returns CCW hull vertices."""
    pts = sorted(map(tuple, points))
    if len(pts) <= 2:
        return np.asarray(pts, dtype=np.float64)

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return np.asarray(lower[:-1] + upper[:-1], dtype=np.float64)


def rotate(points, angle):
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return points @ rot.T


def point_in_polygon(p, verts):
    """Point inside a CCW convex polygon (inclusive of the boundary)."""
    n = len(verts)
    for i in range(n):
        e = verts[(i + 1) % n] - verts[i]
        d = p - verts[i]
        if e[0] * d[1] - e[1] * d[0] < 0:
            return False
    return True


def closest_point_on_segment(p, a, b):
    ab = b - a
    t = float(np.clip(np.dot(p - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0))
    return a + t * ab


def circle_polygon_contact(center, radius, verts):
    """Contact between a circle and a CCW convex polygon.

    Returns (normal, depth, point) with the normal pointing from the polygon
    toward the circle, or None when separated.  A center inside the polygon
    exits through the least-penetrated face.
    """
    center = np.asarray(center, dtype=np.float64)
    if point_in_polygon(center, verts):
        best_d = np.inf
        best_n = None
        n = len(verts)
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            e = b - a
            nrm = np.array([e[1], -e[0]])
            nrm = nrm / np.linalg.norm(nrm)  # outward for CCW winding
            d = np.dot(center - a, nrm)  # negative inside
            if -d < best_d:
                best_d = -d
                best_n = nrm
        depth = radius + best_d
        point = center - best_n * best_d
        return best_n, depth, point

    best = None
    best_dist = np.inf
    n = len(verts)
    for i in range(n):
        q = closest_point_on_segment(center, verts[i], verts[(i + 1) % n])
        d = float(np.linalg.norm(center - q))
        if d < best_dist:
            best_dist = d
            best = q
    if best_dist >= radius or best_dist == 0.0:
        return None
    normal = (center - best) / best_dist
    return normal, radius - best_dist, best
