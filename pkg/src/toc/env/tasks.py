"""MicroTouch-2D: four planar manipulation tasks with a force/torque sensor.

Playing, pushing and opening are top-down scenes (no in-plane gravity;
linear damping stands in for table friction).  Pickup is a side view with
gravity.  A two-finger gripper is driven kinematically by the action;
objects respond through impulse contacts, and per-finger reaction forces
feed the 10-dimensional touch vector:

    [mount_x, mount_y, aperture, aperture, f0x, f0y, tau0, f1x, f1y, tau1]
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import render as rnd
from .geometry import circle_polygon_contact
from .physics import (
    DT,
    Contact,
    DoorBody,
    PolygonBody,
    halfplane_contacts,
    perp,
)
from .shapes import box_shape, shape_at_index, split_indices

TASKS = ("playing", "pushing", "opening", "pickup")
TOUCH_DIM = 10

ACTION_SCALE = 0.01  # max end-effector offset per step, meters
YAW_SCALE = 0.1  # rad per step at full deflection

FINGER_RADIUS = 0.012
GAP_MIN = 0.014
GAP_MAX = 0.09
APERTURE_RATE = 0.08
SQUEEZE_DEPTH_CAP = 0.001
MOUNT_DEPTH_CAP = 0.002  # arm stalls rather than crush through a pinned body
GRIP_FORCE = 4.0  # newtons of sustained squeeze per finger

# the simulated force/torque sensor saturates like a real one; impact
# transients beyond this range read as the range limit
FORCE_RANGE = 6.0  # newtons per component
TORQUE_RANGE = 0.3  # newton-meters

WORKSPACE = 0.3  # half-extent of the world square
BOUND = 0.28  # object beyond this terminates the episode (no-wall tasks)
MOUNT_MARGIN = 0.03

LIN_DAMPING = 8.0
ANG_DAMPING = 8.0
GRAVITY = 9.81

HORIZON_DEFAULT = 200
SUCCESS_REWARD = 25.0

PUSH_SUCCESS_DIST = 0.07
OPEN_SUCCESS_ANGLE = np.deg2rad(30.0)
LIFT_SUCCESS_HEIGHT = 0.05


@dataclass
class Observation:
    image: np.ndarray  # (H, W) float64 in [0, 1]
    touch: np.ndarray  # (TOUCH_DIM,) float64


def action_dim(task):
    return 5 if task == "opening" else 4


class MicroTouchEnv:
    """Gym-style interface: reset() -> obs, step(a) -> (obs, r, done, info)."""

    def __init__(self, task, image_size=84, horizon=HORIZON_DEFAULT, seed=0,
                 shape_split=None, shape_seed=None):
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        self.task = task
        self.horizon = int(horizon)
        self.shape_split = shape_split
        self.shape_seed = shape_seed
        if task == "pickup":
            self.camera = rnd.Camera(image_size, (-WORKSPACE, 0.0), (WORKSPACE, 2 * WORKSPACE))
        else:
            self.camera = rnd.Camera(image_size, (-WORKSPACE, -WORKSPACE), (WORKSPACE, WORKSPACE))
        self._rng = np.random.default_rng(seed)
        self._needs_reset = True

    # ------------------------------------------------------------------ setup

    def reset(self, seed=None):
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        rng = self._rng
        self.step_count = 0
        self.done = False
        self.done_reason = None
        self.yaw = 0.0
        self.aperture = 1.0
        self.door = None
        self.object = None
        self.goal = None
        self._finger_impulses = np.zeros((2, 2))
        self._finger_torques = np.zeros(2)
        self._squeezing = False

        if self.task == "playing":
            self.object = PolygonBody(self._pick_shape(rng), rng.uniform(-0.2, 0.2, 2))
            self.mount = rng.uniform(-0.2, 0.2, 2)
        elif self.task == "pushing":
            self.goal = rng.uniform(-0.06, 0.06, 2)
            ang, dist = rng.uniform(0, 2 * np.pi), rng.uniform(0.10, 0.20)
            obj_pos = self.goal + dist * np.array([np.cos(ang), np.sin(ang)])
            self.object = PolygonBody(box_shape(0.05, mass=0.1), obj_pos)
            ang2, dist2 = rng.uniform(0, 2 * np.pi), rng.uniform(0.10, 0.20)
            self.mount = self._clamp_mount(
                self.goal + dist2 * np.array([np.cos(ang2), np.sin(ang2)])
            )
        elif self.task == "opening":
            hinge = rng.uniform(-0.15, 0.15, 2)
            self.door = DoorBody(hinge, rest_direction=rng.uniform(0, 2 * np.pi))
            ang, dist = rng.uniform(0, 2 * np.pi), rng.uniform(0.12, 0.22)
            self.mount = self._clamp_mount(
                hinge + dist * np.array([np.cos(ang), np.sin(ang)])
            )
            self.yaw = rng.uniform(0, 2 * np.pi)
        else:  # pickup
            shape = box_shape(0.04, mass=0.08, friction=0.6)
            rest_y = -float(np.min(shape.vertices[:, 1]))
            self.object = PolygonBody(shape, np.array([rng.uniform(-0.2, 0.2), rest_y]))
            self.mount = np.array([rng.uniform(-0.2, 0.2), rng.uniform(0.10, 0.25)])

        self._needs_reset = False
        return self._observe()

    def _pick_shape(self, rng):
        if self.shape_split is None:
            return box_shape(0.05, mass=0.1)
        idx = list(split_indices(self.shape_split))
        index = int(idx[rng.integers(0, len(idx))])
        kw = {} if self.shape_seed is None else {"shape_seed": self.shape_seed}
        return shape_at_index(index, **kw)

    def _clamp_mount(self, p):
        lo_y = FINGER_RADIUS if self.task == "pickup" else -(WORKSPACE - MOUNT_MARGIN)
        hi_y = 2 * WORKSPACE - MOUNT_MARGIN if self.task == "pickup" else WORKSPACE - MOUNT_MARGIN
        return np.array([
            np.clip(p[0], -(WORKSPACE - MOUNT_MARGIN), WORKSPACE - MOUNT_MARGIN),
            np.clip(p[1], lo_y, hi_y),
        ])

    # ----------------------------------------------------------------- stepping

    def finger_positions(self, mount=None, aperture=None, yaw=None):
        mount = self.mount if mount is None else mount
        aperture = self.aperture if aperture is None else aperture
        yaw = self.yaw if yaw is None else yaw
        gap = GAP_MIN + aperture * (GAP_MAX - GAP_MIN)
        axis = np.array([np.cos(yaw), np.sin(yaw)])
        return np.array([mount - axis * gap / 2.0, mount + axis * gap / 2.0])

    def step(self, action):
        if self._needs_reset or self.done:
            raise RuntimeError("call reset() before stepping")
        a = np.asarray(action, dtype=np.float64)
        if a.shape != (action_dim(self.task),):
            raise ValueError(
                f"action shape {a.shape} does not match task {self.task} "
                f"(needs {(action_dim(self.task),)})"
            )
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite action")
        a = np.clip(a, -1.0, 1.0)

        old_fingers = self.finger_positions()
        old_mount, old_yaw = self.mount.copy(), self.yaw
        self.mount = self._move_mount(a[:2] * ACTION_SCALE)
        if self.task == "opening":
            self.yaw = float(self.yaw + a[4] * YAW_SCALE)

        if self.task in ("opening", "pickup"):
            target = 0.0 if a[3] < 0.0 else 1.0  # thresholded open/close
        else:
            target = (a[3] + 1.0) / 2.0
        new_ap = self.aperture + float(np.clip(target - self.aperture, -APERTURE_RATE, APERTURE_RATE))
        closing = new_ap < self.aperture - 1e-12
        stalled = False
        if closing and self._aperture_blocked(new_ap):
            # settle at the largest aperture within the penetration cap so a
            # closing gripper rests against the object instead of inside it
            lo, hi = new_ap, self.aperture
            for _ in range(10):
                mid = 0.5 * (lo + hi)
                if self._aperture_blocked(mid):
                    lo = mid
                else:
                    hi = mid
            new_ap = hi
            stalled = True
        self._squeezing = target < self.aperture - 1e-12
        old_ap = self.aperture
        self.aperture = new_ap

        new_fingers = self.finger_positions()
        if stalled:
            # gripper motor stalls: contacts see no closing velocity, only
            # mount/yaw motion, so opposed squeeze contacts stay consistent
            ref = self.finger_positions(mount=old_mount, aperture=new_ap, yaw=old_yaw)
            finger_vel = (new_fingers - ref) / DT
        else:
            finger_vel = (new_fingers - old_fingers) / DT

        body = self.object if self.object is not None else self.door
        if self.task == "pickup":
            self.object.velocity = self.object.velocity + np.array([0.0, -GRAVITY * DT])
        else:
            damp = max(0.0, 1.0 - LIN_DAMPING * DT)
            adamp = max(0.0, 1.0 - ANG_DAMPING * DT)
            if self.object is not None:
                self.object.velocity = self.object.velocity * damp
                self.object.omega *= adamp
            if self.door is not None:
                self.door.omega *= adamp

        contacts = self._collect_contacts(new_fingers, finger_vel)
        from .physics import solve_contacts

        solve_contacts(contacts, DT)
        body.integrate(DT)

        self._finger_impulses = np.zeros((2, 2))
        self._finger_torques = np.zeros(2)
        for c in contacts:
            if c.finger >= 0:
                j = c.impulse()  # impulse on the body, from this finger
                self._finger_impulses[c.finger] -= j
                arm = c.point - new_fingers[c.finger]
                self._finger_torques[c.finger] -= arm[0] * j[1] - arm[1] * j[0]

        self.step_count += 1
        reward = 0.0
        info = {
            "is_success": False,
            "done_reason": None,
            "finger_impulses": self._finger_impulses.copy(),
            "object_position": None if self.object is None else self.object.position.copy(),
            "door_angle": None if self.door is None else self.door.theta,
        }
        if self.is_success():
            reward = SUCCESS_REWARD
            self.done = True
            info["is_success"] = True
            info["done_reason"] = "success"
        elif self._out_of_bounds():
            self.done = True
            info["done_reason"] = "oob"
        elif self.step_count >= self.horizon:
            self.done = True
            info["done_reason"] = "horizon"
        self.done_reason = info["done_reason"]
        return self._observe(), reward, self.done, info

    def _max_penetration(self, mount=None, aperture=None):
        body = self.object if self.object is not None else self.door
        if body is None:
            return 0.0
        verts = body.world_vertices()
        worst = 0.0
        for f in self.finger_positions(mount=mount, aperture=aperture):
            hit = circle_polygon_contact(f, FINGER_RADIUS, verts)
            if hit is not None:
                worst = max(worst, hit[1])
        return worst

    def _aperture_blocked(self, new_ap):
        return self._max_penetration(aperture=new_ap) > SQUEEZE_DEPTH_CAP

    def _move_mount(self, delta):
        """Advance the mount, stalling against deep finger penetration."""
        proposed = self._clamp_mount(self.mount + delta)
        if self._max_penetration(mount=proposed) <= MOUNT_DEPTH_CAP:
            return proposed
        lo, hi = 0.0, 1.0  # fraction of the move that stays within the cap
        for _ in range(10):
            mid = 0.5 * (lo + hi)
            p = self._clamp_mount(self.mount + mid * delta)
            if self._max_penetration(mount=p) > MOUNT_DEPTH_CAP:
                hi = mid
            else:
                lo = mid
        return self._clamp_mount(self.mount + lo * delta)

    def _collect_contacts(self, fingers, finger_vel):
        contacts = []
        body = self.object if self.object is not None else self.door
        verts = body.world_vertices()
        finger_contacts = []
        for i in range(2):
            hit = circle_polygon_contact(fingers[i], FINGER_RADIUS, verts)
            if hit is None:
                continue
            normal_to_finger, depth, point = hit
            finger_contacts.append(
                Contact(
                    body, point, -normal_to_finger, depth, finger_vel[i],
                    friction=body.friction, finger=i,
                )
            )
        # squeeze force engages as a balanced pair: only a two-finger pinch
        # bears sustained grip load, a single touch is just a push
        if self._squeezing and len(finger_contacts) == 2:
            for c in finger_contacts:
                c.grip = GRIP_FORCE * DT
        contacts.extend(finger_contacts)
        if self.object is not None:
            if self.task == "playing":
                w = WORKSPACE - 0.02
                for origin, normal in (
                    ((-w, 0.0), (1.0, 0.0)),
                    ((w, 0.0), (-1.0, 0.0)),
                    ((0.0, -w), (0.0, 1.0)),
                    ((0.0, w), (0.0, -1.0)),
                ):
                    contacts.extend(
                        halfplane_contacts(self.object, origin, normal, 0.3)
                    )
            elif self.task == "pickup":
                contacts.extend(
                    halfplane_contacts(self.object, (0.0, 0.0), (0.0, 1.0), 0.6)
                )
        return contacts

    # ------------------------------------------------------------------ sensing

    def sense_touch(self):
        forces = np.clip(self._finger_impulses / DT, -FORCE_RANGE, FORCE_RANGE)
        torques = np.clip(self._finger_torques / DT, -TORQUE_RANGE, TORQUE_RANGE)
        return np.array([
            self.mount[0], self.mount[1], self.aperture, self.aperture,
            forces[0, 0], forces[0, 1], torques[0],
            forces[1, 0], forces[1, 1], torques[1],
        ])

    def render(self):
        canvas = self.camera.blank()
        if self.task == "pickup":
            self.camera.fill_below(canvas, 0.0, rnd.TABLE)
        if self.goal is not None:
            half = 0.025
            g = self.goal
            square = np.array([
                [g[0] - half, g[1] - half], [g[0] + half, g[1] - half],
                [g[0] + half, g[1] + half], [g[0] - half, g[1] + half],
            ])
            self.camera.fill_polygon(canvas, square, rnd.GOAL)
        if self.door is not None:
            self.camera.fill_polygon(canvas, self.door.world_vertices(), rnd.DOOR)
        if self.object is not None:
            self.camera.fill_polygon(canvas, self.object.world_vertices(), rnd.OBJECT)
        for f in self.finger_positions():
            self.camera.fill_circle(canvas, f, FINGER_RADIUS, rnd.FINGER)
        return rnd.to_float(canvas)

    def _observe(self):
        return Observation(image=self.render(), touch=self.sense_touch())

    # ---------------------------------------------------------------- predicates

    def is_success(self):
        if self.task == "pushing":
            return float(np.linalg.norm(self.object.position - self.goal)) < PUSH_SUCCESS_DIST
        if self.task == "opening":
            return self.door.theta >= OPEN_SUCCESS_ANGLE
        if self.task == "pickup":
            return self.object.position[1] >= LIFT_SUCCESS_HEIGHT
        return False  # playing has no goal state

    def _out_of_bounds(self):
        if self.object is None or self.task == "playing":
            return False
        p = self.object.position
        if self.task == "pickup":
            return abs(p[0]) > BOUND
        return bool(np.max(np.abs(p)) > BOUND)

    # ------------------------------------------------------------------- state

    def state_dict(self):
        body = {}
        if self.object is not None:
            body = {f"object_{k}": v for k, v in self.object.state_arrays().items()}
        if self.door is not None:
            body.update({f"door_{k}": v for k, v in self.door.state_arrays().items()})
        rng_state = json.dumps(self._rng.bit_generator.state, sort_keys=True, default=str)
        return {
            "task": self.task,
            "step": self.step_count,
            "mount": self.mount.copy(),
            "aperture": np.float64(self.aperture),
            "yaw": np.float64(self.yaw),
            "goal": None if self.goal is None else self.goal.copy(),
            "rng": rng_state,
            **body,
        }


def make_env(task, **kw):
    return MicroTouchEnv(task, **kw)
