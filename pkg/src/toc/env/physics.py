"""Impulse-based contact dynamics for one dynamic body against kinematic
fingers and static boundaries.

Every task has exactly one dynamic body (a free polygon or a hinged door),
so the solver never couples two dynamic bodies.  Normal impulses use a
Baumgarte bias on penetration; friction is Coulomb, clamped by the
accumulated normal impulse.  Semi-implicit Euler, fixed dt.
"""

from __future__ import annotations

import numpy as np

from .geometry import polygon_inertia, rotate

DT = 1.0 / 60.0
SOLVER_ITERATIONS = 16
BAUMGARTE = 0.2
SLOP = 5e-4
MAX_BIAS_SPEED = 0.5  # m/s cap on separation pushed by penetration bias


def cross2(a, b):
    return a[0] * b[1] - a[1] * b[0]


def perp(v):
    return np.array([-v[1], v[0]])


class PolygonBody:
    """Free rigid body with a convex polygon shape."""

    def __init__(self, shape, position, angle=0.0):
        self.shape = shape
        self.position = np.asarray(position, dtype=np.float64).copy()
        self.velocity = np.zeros(2)
        self.angle = float(angle)
        self.omega = 0.0
        self.mass = shape.mass
        self.inv_mass = 1.0 / shape.mass
        self.inertia = polygon_inertia(shape.vertices, shape.mass)
        self.inv_inertia = 1.0 / self.inertia
        self.friction = shape.friction

    def world_vertices(self):
        return rotate(self.shape.vertices, self.angle) + self.position

    def velocity_at(self, point):
        r = point - self.position
        return self.velocity + self.omega * perp(r)

    def apply_impulse(self, j, point):
        self.velocity = self.velocity + j * self.inv_mass
        self.omega += self.inv_inertia * cross2(point - self.position, j)

    def inv_mass_along(self, normal, point):
        rn = cross2(point - self.position, normal)
        return self.inv_mass + self.inv_inertia * rn * rn

    def integrate(self, dt):
        self.position = self.position + self.velocity * dt
        self.angle += self.omega * dt

    def kinetic_energy(self):
        return 0.5 * self.mass * float(self.velocity @ self.velocity) + \
            0.5 * self.inertia * self.omega**2

    def state_arrays(self):
        return {
            "position": self.position.copy(),
            "velocity": self.velocity.copy(),
            "angle": np.float64(self.angle),
            "omega": np.float64(self.omega),
        }


class DoorBody:
    """One-degree-of-freedom door: a slab hinged at a fixed pivot.

    Opening angle theta is measured from the rest direction and clamped to
    [0, max_angle]; contacts act purely through torque about the hinge.
    """

    def __init__(self, hinge, rest_direction, length=0.18, width=0.012,
                 mass=0.3, max_angle=2.0, friction=0.3):
        self.hinge = np.asarray(hinge, dtype=np.float64).copy()
        self.rest_direction = float(rest_direction)
        self.length = length
        self.width = width
        self.theta = 0.0
        self.omega = 0.0
        self.inertia = mass * length * length / 3.0
        self.inv_inertia = 1.0 / self.inertia
        self.max_angle = max_angle
        self.friction = friction
        self.inv_mass = 0.0  # pivot carries all linear load

    def direction(self):
        a = self.rest_direction + self.theta
        return np.array([np.cos(a), np.sin(a)])

    def world_vertices(self):
        d = self.direction()
        n = perp(d) * (self.width / 2.0)
        tip = self.hinge + d * self.length
        return np.array([self.hinge - n, tip - n, tip + n, self.hinge + n])

    def velocity_at(self, point):
        r = point - self.hinge
        return self.omega * perp(r)

    def apply_impulse(self, j, point):
        self.omega += self.inv_inertia * cross2(point - self.hinge, j)

    def inv_mass_along(self, normal, point):
        rn = cross2(point - self.hinge, normal)
        return self.inv_inertia * rn * rn

    def integrate(self, dt):
        self.theta += self.omega * dt
        if self.theta < 0.0:
            self.theta = 0.0
            self.omega = max(self.omega, 0.0)
        elif self.theta > self.max_angle:
            self.theta = self.max_angle
            self.omega = min(self.omega, 0.0)

    def kinetic_energy(self):
        return 0.5 * self.inertia * self.omega**2

    def state_arrays(self):
        return {"theta": np.float64(self.theta), "omega": np.float64(self.omega)}


class Contact:
    """One contact point: a dynamic body against a kinematic surface.

    normal points from the surface toward the body (push-apart direction).
    kin_velocity is the surface's velocity at the contact point.  grip is an
    extra normal impulse injected per step while the gripper squeezes; it
    counts toward the friction budget.
    """

    __slots__ = (
        "body", "point", "normal", "depth", "kin_velocity", "friction",
        "finger", "grip", "jn", "jt",
    )

    def __init__(self, body, point, normal, depth, kin_velocity, friction,
                 finger=-1, grip=0.0):
        self.body = body
        self.point = np.asarray(point, dtype=np.float64)
        self.normal = np.asarray(normal, dtype=np.float64)
        self.depth = float(depth)
        self.kin_velocity = np.asarray(kin_velocity, dtype=np.float64)
        self.friction = float(friction)
        self.finger = finger
        self.grip = float(grip)
        self.jn = 0.0
        self.jt = 0.0

    def impulse(self):
        """Total impulse this contact applied to the body this step."""
        t = perp(self.normal)
        return (self.jn + self.grip) * self.normal + self.jt * t


def solve_contacts(contacts, dt, iterations=SOLVER_ITERATIONS):
    """Sequential-impulse solve with accumulated clamping.

    Grip impulses are applied up front so the friction cone (and the touch
    sensor) see them as part of the normal load.
    """
    for c in contacts:
        if c.grip > 0.0:
            c.body.apply_impulse(c.grip * c.normal, c.point)

    for _ in range(iterations):
        for c in contacts:
            rel = c.body.velocity_at(c.point) - c.kin_velocity
            vn = float(rel @ c.normal)
            bias = min(BAUMGARTE * max(c.depth - SLOP, 0.0) / dt, MAX_BIAS_SPEED)
            k = c.body.inv_mass_along(c.normal, c.point)
            if k <= 0.0:
                continue
            djn = (bias - vn) / k
            new_jn = max(c.jn + djn, 0.0)
            djn = new_jn - c.jn
            c.jn = new_jn
            c.body.apply_impulse(djn * c.normal, c.point)

            t = perp(c.normal)
            rel = c.body.velocity_at(c.point) - c.kin_velocity
            vt = float(rel @ t)
            kt = c.body.inv_mass_along(t, c.point)
            if kt <= 0.0:
                continue
            djt = -vt / kt
            cap = c.friction * (c.jn + c.grip)
            new_jt = float(np.clip(c.jt + djt, -cap, cap))
            djt = new_jt - c.jt
            c.jt = new_jt
            c.body.apply_impulse(djt * t, c.point)


def halfplane_contacts(body, origin, normal, friction):
    """Contacts for polygon vertices that sank below a boundary half-plane."""
    out = []
    normal = np.asarray(normal, dtype=np.float64)
    for v in body.world_vertices():
        depth = float((np.asarray(origin) - v) @ normal)
        if depth > 0.0:
            out.append(Contact(body, v, normal, depth, np.zeros(2), friction))
    return out
