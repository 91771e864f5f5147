"""Exact (de)serialization of numpy Generator state through JSON strings."""

from __future__ import annotations

import json

import numpy as np


def save_rng(gen: np.random.Generator) -> str:
    state = gen.bit_generator.state

    def enc(obj):
        if isinstance(obj, dict):
            return {k: enc(v) for k, v in obj.items()}
        if isinstance(obj, int):
            return str(obj)  # 128-bit PCG64 words do not fit in JSON numbers
        return obj

    return json.dumps(enc(state), sort_keys=True)


def load_rng(payload: str) -> np.random.Generator:
    raw = json.loads(payload)

    def dec(obj):
        if isinstance(obj, dict):
            return {k: dec(v) for k, v in obj.items()}
        if isinstance(obj, str) and (obj.isdigit() or (obj[:1] == "-" and obj[1:].isdigit())):
            return int(obj)
        return obj

    state = dec(raw)
    gen = np.random.default_rng(0)
    if state["bit_generator"] != gen.bit_generator.state["bit_generator"]:
        raise ValueError(f"unsupported bit generator {state['bit_generator']!r}")
    gen.bit_generator.state = state
    return gen


def restore_rng(gen: np.random.Generator, payload: str) -> None:
    gen.bit_generator.state = load_rng(payload).bit_generator.state
