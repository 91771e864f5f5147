"""Versioned run checkpoints: one .npz holding every array plus a JSON
metadata record.  Arrays round-trip bit-exactly."""

from __future__ import annotations

import io
import json

import numpy as np

FORMAT_VERSION = 1


def save_checkpoint(path, meta: dict, sections: dict):
    """sections: name -> dict of arrays; keys become `name:key`."""
    payload = {"__meta__": np.str_(json.dumps({"format": FORMAT_VERSION, **meta}, sort_keys=True))}
    for section, state in sections.items():
        for key, value in state.items():
            payload[f"{section}:{key}"] = value
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        if meta.get("format") != FORMAT_VERSION:
            raise ValueError(
                f"checkpoint format {meta.get('format')!r} not supported "
                f"(expected {FORMAT_VERSION})"
            )
        sections = {}
        for key in data.files:
            if key == "__meta__":
                continue
            section, _, name = key.partition(":")
            sections.setdefault(section, {})[name] = data[key]
    return meta, sections
