"""Layered feed-forward networks (conv + dense) on top of the autodiff core.

A network is a static NetworkSpec (architecture) plus a ParamSet (flat list
of float64 arrays).  Shapes are resolved and validated at construction;
forward returns a one-shot tape that backward consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad


class ShapeError(ValueError):
    pass


class TapeReusedError(RuntimeError):
    pass


LEAKY_SLOPE = 0.01


@dataclass(frozen=True)
class Conv:
    out_channels: int
    kernel: int
    stride: int
    activation: str = "leaky_relu"


@dataclass(frozen=True)
class Dense:
    units: int
    activation: str = "leaky_relu"


def _check_activation(name):
    if name not in ("leaky_relu", "identity", "tanh"):
        raise ShapeError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: input shape plus an ordered layer list.

    input_shape is (C, H, W) for conv stacks or (D,) for pure MLPs.  A Dense
    layer after convs flattens implicitly.  All shape compatibility is
    checked here, never deferred to broadcast surprises at run time.
    """

    input_shape: tuple
    layers: tuple
    shapes: tuple = field(init=False, compare=False)

    def __post_init__(self):
        cur = tuple(self.input_shape)
        walked = [cur]
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Conv):
                _check_activation(layer.activation)
                if len(cur) != 3:
                    raise ShapeError(
                        f"layer {i}: conv needs (C,H,W) input, got {cur}"
                    )
                c, h, w = cur
                k, s = layer.kernel, layer.stride
                if k > h or k > w:
                    raise ShapeError(
                        f"layer {i}: kernel {k} does not fit input {h}x{w}"
                    )
                cur = (layer.out_channels, (h - k) // s + 1, (w - k) // s + 1)
            elif isinstance(layer, Dense):
                _check_activation(layer.activation)
                cur = (layer.units,)
            else:
                raise ShapeError(f"layer {i}: unknown layer type {type(layer)}")
            if any(d < 1 for d in cur):
                raise ShapeError(f"layer {i}: degenerate output shape {cur}")
            walked.append(cur)
        object.__setattr__(self, "shapes", tuple(walked))

    @property
    def output_shape(self):
        return self.shapes[-1]

    def param_shapes(self):
        out = []
        for i, layer in enumerate(self.layers):
            prev = self.shapes[i]
            if isinstance(layer, Conv):
                out.append((layer.out_channels, prev[0], layer.kernel, layer.kernel))
                out.append((layer.out_channels,))
            else:
                fan_in = int(np.prod(prev))
                out.append((fan_in, layer.units))
                out.append((layer.units,))
        return out

    def param_count(self):
        return sum(int(np.prod(s)) for s in self.param_shapes())


def init_params(spec: NetworkSpec, rng: np.random.Generator):
    """Kaiming-uniform (fan-in) weights for LeakyReLU stacks, zero biases."""
    params = []
    gain = math.sqrt(2.0 / (1.0 + LEAKY_SLOPE**2))
    for shape in spec.param_shapes():
        if len(shape) == 1:
            params.append(np.zeros(shape, dtype=np.float64))
        else:
            fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
            bound = gain * math.sqrt(3.0 / fan_in)
            params.append(rng.uniform(-bound, bound, size=shape))
    return params


def _activate(x, name):
    if name == "leaky_relu":
        return ad.leaky_relu(x, LEAKY_SLOPE)
    if name == "tanh":
        return ad.tanh(x)
    return x


def apply_network(spec: NetworkSpec, param_vars, x):
    """Run the network on Var (or array) input, returning the output Var.

    x carries a leading batch axis: (B, C, H, W) or (B, D).
    """
    h = ad.as_var(x)
    expected = (h.data.shape[0],) + spec.input_shape
    if h.data.shape != expected:
        raise ShapeError(
            f"input shape {h.data.shape} does not match spec {expected}"
        )
    idx = 0
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Conv):
            h = ad.conv2d(h, param_vars[idx], param_vars[idx + 1], layer.stride)
        else:
            if h.data.ndim > 2:
                h = ad.reshape(h, (h.data.shape[0], -1))
            h = ad.matmul(h, param_vars[idx]) + param_vars[idx + 1]
        h = _activate(h, layer.activation)
        idx += 2
    return h


class Tape:
    """Record of one forward pass; consumed exactly once by backward."""

    def __init__(self, x_var, param_vars, y_var):
        self.x_var = x_var
        self.param_vars = param_vars
        self.y_var = y_var
        self.used = False


class Network:
    """NetworkSpec bound to a ParamSet, with the forward/backward contract."""

    def __init__(self, spec: NetworkSpec, params=None, rng=None):
        self.spec = spec
        if params is None:
            if rng is None:
                raise ValueError("need params or an rng to initialize them")
            params = init_params(spec, rng)
        shapes = spec.param_shapes()
        if len(params) != len(shapes):
            raise ShapeError(
                f"param count {len(params)} != spec count {len(shapes)}"
            )
        for arr, shape in zip(params, shapes):
            if tuple(arr.shape) != tuple(shape):
                raise ShapeError(f"param shape {arr.shape} != spec shape {shape}")
        self.params = [np.asarray(p, dtype=np.float64) for p in params]

    def forward(self, x, want_tape=True):
        """Returns (output array, tape).  Pure in (params, input)."""
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == len(self.spec.input_shape)
        if squeeze:
            x = x[None]
        if not want_tape:
            with ad.no_grad():
                y = apply_network(self.spec, [ad.Var(p, requires_grad=False) for p in self.params], x)
            out = y.data[0] if squeeze else y.data
            return out, None
        x_var = ad.Var(x, requires_grad=True)
        param_vars = [ad.Var(p) for p in self.params]
        y_var = apply_network(self.spec, param_vars, x_var)
        out = y_var.data[0] if squeeze else y_var.data
        return out, Tape(x_var, param_vars, y_var)

    def backward(self, tape: Tape, grad_output):
        """Returns (param gradients, input gradient) for the taped forward."""
        if tape is None:
            raise TapeReusedError("no tape: forward was run with want_tape=False")
        if tape.used:
            raise TapeReusedError("tape already consumed by a previous backward")
        tape.used = True
        g = np.asarray(grad_output, dtype=np.float64)
        if g.shape != tape.y_var.data.shape:
            if g.shape == tape.y_var.data.shape[1:] and tape.y_var.data.shape[0] == 1:
                g = g[None]
            else:
                raise ShapeError(
                    f"grad_output shape {g.shape} != output shape {tape.y_var.data.shape}"
                )
        tape.y_var.backward(g)
        grads = [
            pv.grad if pv.grad is not None else np.zeros_like(pv.data)
            for pv in tape.param_vars
        ]
        gx = tape.x_var.grad
        if gx is None:
            gx = np.zeros_like(tape.x_var.data)
        return grads, gx

    def param_count(self):
        return self.spec.param_count()
