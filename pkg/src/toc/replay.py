"""FIFO replay buffer over raw sensory transitions.

Frames are kept as uint8 (the renderer emits exact multiples of 1/255, so
the round-trip is lossless).  Rewards stored here are raw task rewards;
intrinsic rewards are recomputed from the live curiosity model when a batch
is drawn, never persisted.
"""

from __future__ import annotations

import numpy as np

from .rngstate import restore_rng, save_rng


def encode_frame(image):
    return np.round(np.asarray(image) * 255.0).astype(np.uint8)


def decode_frames(frames):
    return frames.astype(np.float64) / 255.0


class ReplayBuffer:
    def __init__(self, capacity, seed=0):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self._storage = []
        self._pos = 0
        self._rng = np.random.default_rng(seed)

    def __len__(self):
        return len(self._storage)

    def push(self, image, touch, action, reward_ext, next_image, next_touch, done):
        item = (
            encode_frame(image),
            np.asarray(touch, dtype=np.float64).copy(),
            np.asarray(action, dtype=np.float64).copy(),
            float(reward_ext),
            encode_frame(next_image),
            np.asarray(next_touch, dtype=np.float64).copy(),
            bool(done),
        )
        if len(self._storage) < self.capacity:
            self._storage.append(item)
        else:
            self._storage[self._pos] = item  # overwrite oldest first
        self._pos = (self._pos + 1) % self.capacity

    def sample(self, n):
        if len(self._storage) == 0:
            raise ValueError("cannot sample from an empty buffer")
        if n > len(self._storage):
            raise ValueError(f"requested {n} samples, buffer holds {len(self._storage)}")
        idx = self._rng.integers(0, len(self._storage), size=n)
        return self.gather(idx)

    def gather(self, idx):
        rows = [self._storage[i] for i in idx]
        return {
            "image": decode_frames(np.stack([r[0] for r in rows])),
            "touch": np.stack([r[1] for r in rows]),
            "action": np.stack([r[2] for r in rows]),
            "reward_ext": np.array([r[3] for r in rows]),
            "next_image": decode_frames(np.stack([r[4] for r in rows])),
            "next_touch": np.stack([r[5] for r in rows]),
            "done": np.array([float(r[6]) for r in rows]),
        }

    # ------------------------------------------------------------ persistence

    def state_dict(self):
        n = len(self._storage)
        out = {
            "capacity": np.int64(self.capacity),
            "pos": np.int64(self._pos),
            "rng": np.str_(save_rng(self._rng)),
        }
        if n:
            out["images"] = np.stack([r[0] for r in self._storage])
            out["touches"] = np.stack([r[1] for r in self._storage])
            out["actions"] = np.stack([r[2] for r in self._storage])
            out["rewards"] = np.array([r[3] for r in self._storage])
            out["next_images"] = np.stack([r[4] for r in self._storage])
            out["next_touches"] = np.stack([r[5] for r in self._storage])
            out["dones"] = np.array([r[6] for r in self._storage], dtype=np.bool_)
        return out

    def load_state_dict(self, state):
        self.capacity = int(state["capacity"])
        self._pos = int(state["pos"])
        restore_rng(self._rng, str(state["rng"]))
        self._storage = []
        if "images" in state:
            for i in range(len(state["images"])):
                self._storage.append((
                    state["images"][i],
                    state["touches"][i],
                    state["actions"][i],
                    float(state["rewards"][i]),
                    state["next_images"][i],
                    state["next_touches"][i],
                    bool(state["dones"][i]),
                ))
