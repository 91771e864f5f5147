"""Object shape descriptors and the procedural shape generator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import convex_hull, is_convex, polygon_area, polygon_centroid

MIN_AREA = 1e-4
TRAIN_SPLIT = 800
BANK_SIZE = 1000
DEFAULT_SHAPE_SEED = 2024


@dataclass(frozen=True)
class ShapeDescriptor:
    """Convex polygon in body frame (centroid at origin), mass, friction."""

    vertices: np.ndarray  # (n, 2) CCW, meters
    mass: float
    friction: float = 0.5

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        object.__setattr__(self, "vertices", v)
        if not (3 <= len(v) <= 8):
            raise ValueError(f"vertex count {len(v)} outside [3, 8]")
        if not is_convex(v):
            raise ValueError("polygon is not convex")
        if polygon_area(v) <= MIN_AREA:
            raise ValueError(f"degenerate area {polygon_area(v):.2e}")
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    @property
    def area(self):
        return polygon_area(self.vertices)

    @property
    def radius(self):
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))


def box_shape(width, height=None, mass=0.1, friction=0.5):
    height = width if height is None else height
    hw, hh = width / 2.0, height / 2.0
    verts = np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])
    return ShapeDescriptor(verts, mass, friction)


def sample_shape(rng: np.random.Generator) -> ShapeDescriptor:
    """Random convex polygon with 3..8 vertices; deterministic in rng.

    Vertices are drawn on sorted polar angles, hulled, and re-centered on
    the centroid.  Thin or tiny candidates are rejected and redrawn so every
    emitted shape passes the descriptor validators.
    """
    while True:
        n = int(rng.integers(3, 9))
        angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=n))
        radii = rng.uniform(0.018, 0.045, size=n)
        pts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
        hull = convex_hull(pts)
        if len(hull) < 3 or polygon_area(hull) <= 1.2 * MIN_AREA:
            continue
        hull = hull - polygon_centroid(hull)
        mass = float(rng.uniform(0.05, 0.2))
        return ShapeDescriptor(hull, mass)


def shape_at_index(index, shape_seed=DEFAULT_SHAPE_SEED):
    """The index-th shape of the fixed 1000-shape bank for a master seed."""
    if not 0 <= index < BANK_SIZE:
        raise IndexError(f"shape index {index} outside bank of {BANK_SIZE}")
    rng = np.random.default_rng(np.random.SeedSequence([shape_seed, index]))
    return sample_shape(rng)


def split_indices(split):
    """Index ranges: first 800 shapes train, last 200 held out for eval."""
    if split == "train":
        return range(0, TRAIN_SPLIT)
    if split == "eval":
        return range(TRAIN_SPLIT, BANK_SIZE)
    raise ValueError(f"unknown split {split!r}")
