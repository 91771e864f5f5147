"""Run configuration: profile-aware defaults, flat-file parsing, echo.

The file format is one `key = value` per line, UTF-8, with # comments.
Defaults reproduce the published hyperparameter tables; the desk profile
shrinks resolution and budgets so a full two-phase run fits in minutes on
a workstation (and is explicitly not the published setup).
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .curiosity import FEATURE_MODES, VARIANTS
from .env.tasks import TASKS

RUN_VARIANTS = VARIANTS + ("sac",)
PROFILES = ("paper", "desk")


class ConfigError(ValueError):
    pass


def _parse_bool(s):
    if str(s).lower() in ("true", "1", "yes"):
        return True
    if str(s).lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_seeds(s):
    if isinstance(s, (list, tuple)):
        return tuple(int(x) for x in s)
    parts = [p.strip() for p in str(s).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty seed list")
    return tuple(int(p) for p in parts)


@dataclass(frozen=True)
class RunConfig:
    task: str = "pushing"
    variant: str = "toc"
    lam: float = 0.5
    feature_mode: str = "learned"
    profile: str = "paper"
    seeds: tuple = (0,)
    out_dir: str = "runs"

    total_steps: int = 1_000_000
    exploration_steps: int = 200_000
    image_size: int = 84
    latent_dim: int = 256
    horizon: int = 200
    update_every: int = 1
    start_steps: int = 1000
    eval_every: int = 5000
    eval_episodes: int = 20
    log_every: int = 1000

    lr: float = 3e-5
    batch_size: int = 128
    reward_scale: float = 100.0
    buffer_size: int = 1_000_000
    hidden: int = 128
    gamma: float = 0.99
    tau: float = 0.005
    alpha_init: float = 1.0
    alpha_autotune: bool = True
    curiosity_lr: float | None = None  # defaults to lr

    explore_lr: float | None = None
    adapt_lr: float | None = None
    explore_alpha: float | None = None
    adapt_alpha: float | None = None

    shape_split: str = "off"
    shape_seed: int = 2024

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.variant not in RUN_VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.feature_mode not in FEATURE_MODES:
            raise ConfigError(f"unknown feature_mode {self.feature_mode!r}")
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.shape_split not in ("off", "train", "eval"):
            raise ConfigError(f"unknown shape_split {self.shape_split!r}")
        if self.exploration_steps > self.total_steps:
            raise ConfigError("exploration_steps exceeds total_steps")
        for name in ("total_steps", "image_size", "latent_dim", "horizon",
                     "update_every", "eval_every", "eval_episodes", "log_every",
                     "batch_size", "buffer_size", "hidden"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    @property
    def effective_exploration_steps(self):
        """The sac baseline trains on the task reward from step one."""
        return 0 if self.variant == "sac" else self.exploration_steps

    @property
    def effective_curiosity_lr(self):
        return self.lr if self.curiosity_lr is None else self.curiosity_lr


# file-key -> (dataclass field, parser); "lambda" is a Python keyword so the
# field is named lam internally
_OPTIONAL_FLOATS = ("curiosity_lr", "explore_lr", "adapt_lr",
                    "explore_alpha", "adapt_alpha")


def _field_parsers():
    out = {}
    for f in fields(RunConfig):
        key = "lambda" if f.name == "lam" else f.name
        if f.name == "seeds":
            out[key] = (f.name, _parse_seeds)
        elif f.name in _OPTIONAL_FLOATS:
            out[key] = (f.name, lambda s: None if str(s).lower() == "none" else float(s))
        elif f.type in ("bool", bool):
            out[key] = (f.name, _parse_bool)
        elif f.type in ("int", int):
            out[key] = (f.name, lambda s: int(str(s), 0))
        elif f.type in ("float", float):
            out[key] = (f.name, float)
        else:
            out[key] = (f.name, str)
    return out


FIELD_PARSERS = _field_parsers()

# profile -> overrides applied before file/CLI values
PROFILE_DEFAULTS = {
    "paper": {},
    "desk": {
        "total_steps": 50_000,
        "exploration_steps": 20_000,
        "image_size": 42,
        "latent_dim": 64,
        "update_every": 2,
        "lr": 3e-4,
        "batch_size": 64,
        "hidden": 64,
        "buffer_size": 60_000,
        "start_steps": 1000,
    },
}


def parse_config_text(text, overrides=None, source="<config>"):
    """Parse flat `key = value` text plus override pairs into a RunConfig."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected `key = value`")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.split("#")[0].strip()
        if key not in FIELD_PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = (value, lineno)

    merged = {}
    for key, (value, lineno) in raw.items():
        name, parser = FIELD_PARSERS[key]
        try:
            merged[name] = parser(value)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {e}") from None
        if key == "lambda" and not 0.0 <= merged[name] <= 1.0:
            raise ConfigError(
                f"{source}:{lineno}: lambda must lie in [0, 1], got {merged[name]}"
            )

    if overrides:
        for key, value in overrides.items():
            if key not in FIELD_PARSERS:
                raise ConfigError(f"unknown override key {key!r}")
            name, parser = FIELD_PARSERS[key]
            if value is None:
                continue
            try:
                merged[name] = value if not isinstance(value, str) else parser(value)
            except (ValueError, TypeError) as e:
                raise ConfigError(f"bad override for {key}: {e}") from None

    profile = merged.get("profile", "paper")
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    resolved = dict(PROFILE_DEFAULTS[profile])
    resolved["profile"] = profile
    resolved.update(merged)
    # playing has no task reward, so unless told otherwise the whole budget
    # is exploration
    if resolved.get("task") == "playing" and "exploration_steps" not in merged:
        resolved["exploration_steps"] = resolved.get(
            "total_steps", RunConfig.total_steps
        )
    try:
        return RunConfig(**resolved)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def parse_config(path, overrides=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), overrides, source=str(path))


def config_to_text(cfg: RunConfig):
    """Echo a fully resolved config; parsing it back reproduces cfg."""
    lines = []
    for f in fields(RunConfig):
        key = "lambda" if f.name == "lam" else f.name
        value = getattr(cfg, f.name)
        if f.name == "seeds":
            value = ",".join(str(s) for s in value)
        elif value is None:
            value = "none"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
