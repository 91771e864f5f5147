from . import autodiff
from .adam import AdamState, NonFiniteGradError, adam_step
from .autodiff import Var, no_grad
from .gradcheck import GradCheckReport, grad_check
from .network import (
    Conv,
    Dense,
    Network,
    NetworkSpec,
    ShapeError,
    Tape,
    TapeReusedError,
    apply_network,
    init_params,
)

__all__ = [
    "autodiff",
    "Var",
    "no_grad",
    "AdamState",
    "NonFiniteGradError",
    "adam_step",
    "GradCheckReport",
    "grad_check",
    "Conv",
    "Dense",
    "Network",
    "NetworkSpec",
    "ShapeError",
    "Tape",
    "TapeReusedError",
    "apply_network",
    "init_params",
]
