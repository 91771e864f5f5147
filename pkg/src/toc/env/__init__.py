from .shapes import (
    BANK_SIZE,
    TRAIN_SPLIT,
    ShapeDescriptor,
    box_shape,
    sample_shape,
    shape_at_index,
    split_indices,
)
from .tasks import (
    HORIZON_DEFAULT,
    TASKS,
    TOUCH_DIM,
    MicroTouchEnv,
    Observation,
    action_dim,
    make_env,
)

__all__ = [
    "BANK_SIZE",
    "TRAIN_SPLIT",
    "ShapeDescriptor",
    "box_shape",
    "sample_shape",
    "shape_at_index",
    "split_indices",
    "HORIZON_DEFAULT",
    "TASKS",
    "TOUCH_DIM",
    "MicroTouchEnv",
    "Observation",
    "action_dim",
    "make_env",
]
