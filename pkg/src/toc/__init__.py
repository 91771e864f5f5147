"""Touch-driven curiosity for sparse-reward 2D manipulation, in plain numpy."""

__version__ = "0.1.0"
