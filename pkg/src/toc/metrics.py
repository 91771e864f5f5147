"""Evaluation metrics over episode traces, and the run CSV log."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

TOUCH_EVENT_THRESHOLD = 1e-3  # newtons of per-finger planar force

CSV_COLUMNS = [
    "step", "episode", "phase", "variant", "seed",
    "r_int_mean", "extrinsic_return", "success", "episode_steps",
    "touch_var", "touch_events", "obj_move",
    "l_touch", "l_fdm", "l_critic", "l_actor", "alpha",
]


@dataclass
class EpisodeTrace:
    """Per-step record of one episode, enough to recompute every metric."""

    task: str
    phase: str = "exploration"
    touches: list = field(default_factory=list)      # (10,) touch vectors
    object_positions: list = field(default_factory=list)  # (2,) or None
    gripper_positions: list = field(default_factory=list)
    door_angles: list = field(default_factory=list)  # float or None
    rewards: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    success: bool = False

    def record(self, touch, object_position, gripper_position, door_angle,
               reward, done):
        self.touches.append(np.asarray(touch, dtype=np.float64))
        self.object_positions.append(
            None if object_position is None else np.asarray(object_position)
        )
        self.gripper_positions.append(np.asarray(gripper_position))
        self.door_angles.append(door_angle)
        self.rewards.append(float(reward))
        self.dones.append(bool(done))
        if reward > 0:
            self.success = True

    def __len__(self):
        return len(self.touches)

    # --------------------------------------------------------------- export

    TRACE_COLUMNS = [
        "step", "obj_x", "obj_y", "door_angle", "grip_x", "grip_y",
        "t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7", "t8", "t9",
        "reward", "done",
    ]

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.TRACE_COLUMNS)
            for i in range(len(self)):
                obj = self.object_positions[i]
                row = [
                    i,
                    "" if obj is None else repr(float(obj[0])),
                    "" if obj is None else repr(float(obj[1])),
                    "" if self.door_angles[i] is None else repr(float(self.door_angles[i])),
                    repr(float(self.gripper_positions[i][0])),
                    repr(float(self.gripper_positions[i][1])),
                    *[repr(float(v)) for v in self.touches[i]],
                    repr(self.rewards[i]),
                    int(self.dones[i]),
                ]
                w.writerow(row)

    @classmethod
    def read_csv(cls, path, task="playing", phase="exploration"):
        trace = cls(task=task, phase=phase)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                obj = (
                    None
                    if row["obj_x"] == ""
                    else np.array([float(row["obj_x"]), float(row["obj_y"])])
                )
                trace.record(
                    np.array([float(row[f"t{i}"]) for i in range(10)]),
                    obj,
                    np.array([float(row["grip_x"]), float(row["grip_y"])]),
                    None if row["door_angle"] == "" else float(row["door_angle"]),
                    float(row["reward"]),
                    row["done"] == "1",
                )
        return trace


def touch_interaction(trace: EpisodeTrace):
    """(variance, event count) of the force/torque part of the touch signal.

    Variance is the mean per-component variance of the six force/torque
    channels across the episode; an event is any step whose strongest
    per-finger planar force exceeds the threshold.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    ft = np.stack(trace.touches)[:, 4:]  # (T, 6): fx, fy, tau per finger
    variance = float(np.mean(np.var(ft, axis=0)))
    f0 = np.linalg.norm(ft[:, 0:2], axis=1)
    f1 = np.linalg.norm(ft[:, 3:5], axis=1)
    events = int(np.sum(np.maximum(f0, f1) > TOUCH_EVENT_THRESHOLD))
    return variance, events


def object_movement(trace: EpisodeTrace):
    """Positional variance of the tracked body (door angle when hinged).

    Returns (variance, displacement) where displacement is the final offset
    from the starting pose, in millimeters for positions and radians for
    the door.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    if trace.task == "opening":
        angles = np.array([a for a in trace.door_angles if a is not None])
        return float(np.var(angles)), float(angles[-1] - angles[0])
    pos = np.stack([p for p in trace.object_positions if p is not None])
    variance = float(np.sum(np.var(pos, axis=0)))
    displacement_mm = float(np.linalg.norm(pos[-1] - pos[0]) * 1000.0)
    return variance, displacement_mm


def success_rate(traces):
    if not traces:
        raise ValueError("empty evaluation window")
    return float(np.mean([t.success for t in traces]))


def episode_steps(traces):
    if not traces:
        raise ValueError("empty evaluation window")
    return float(np.mean([len(t) for t in traces]))


class RunLog:
    """Append-only CSV stream with a schema fixed at run start."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(CSV_COLUMNS)
        self._fh.flush()

    def write(self, **fields):
        unknown = set(fields) - set(CSV_COLUMNS)
        if unknown:
            raise ValueError(f"columns not in schema: {sorted(unknown)}")
        missing = set(CSV_COLUMNS) - set(fields)
        if missing:
            raise ValueError(f"missing columns: {sorted(missing)}")
        row = []
        for col in CSV_COLUMNS:
            v = fields[col]
            row.append(repr(float(v)) if isinstance(v, (float, np.floating)) else v)
        self._writer.writerow(row)
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_run_csv(path):
    """Parse a run CSV back into a list of typed row dicts."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected schema in {path}: {reader.fieldnames}")
        for raw in reader:
            row = {}
            for k, v in raw.items():
                if k in ("step", "episode", "seed"):
                    row[k] = int(float(v))
                elif k in ("phase", "variant"):
                    row[k] = v
                else:
                    row[k] = float(v)
            rows.append(row)
    return rows
