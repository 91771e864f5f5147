"""Grayscale rasterizer for scene states.

Pixel values are multiples of 1/255 so frames survive uint8 storage in the
replay buffer without loss.  Fixed top-left origin camera over the square
workspace; no anti-aliasing, fully deterministic.
"""

from __future__ import annotations

import numpy as np

BACKGROUND = 30
TABLE = 70
GOAL = 110
DOOR = 170
OBJECT = 200
FINGER = 255


class Camera:
    def __init__(self, image_size, world_min, world_max):
        self.n = int(image_size)
        self.world_min = np.asarray(world_min, dtype=np.float64)
        self.world_max = np.asarray(world_max, dtype=np.float64)
        self.extent = self.world_max - self.world_min
        # pixel-center coordinates in world space, row 0 at world top
        xs = self.world_min[0] + (np.arange(self.n) + 0.5) / self.n * self.extent[0]
        ys = self.world_max[1] - (np.arange(self.n) + 0.5) / self.n * self.extent[1]
        self.px = np.broadcast_to(xs[None, :], (self.n, self.n))
        self.py = np.broadcast_to(ys[:, None], (self.n, self.n))

    def blank(self):
        return np.full((self.n, self.n), BACKGROUND, dtype=np.uint8)

    def fill_polygon(self, canvas, verts, level):
        inside = np.ones((self.n, self.n), dtype=bool)
        n = len(verts)
        for i in range(n):
            a = verts[i]
            e = verts[(i + 1) % n] - a
            inside &= e[0] * (self.py - a[1]) - e[1] * (self.px - a[0]) >= 0.0
        canvas[inside] = level

    def fill_circle(self, canvas, center, radius, level):
        d2 = (self.px - center[0]) ** 2 + (self.py - center[1]) ** 2
        canvas[d2 <= radius * radius] = level

    def fill_below(self, canvas, y_level, level):
        canvas[self.py <= y_level] = level


def to_float(canvas):
    return canvas.astype(np.float64) / 255.0
