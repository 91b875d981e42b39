"""Training configuration and its flat key=value file format."""

from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    """Unknown key, bad value, or malformed config file."""


@dataclass
class TrainConfig:
    n_critic: int = 5
    batch_size: int = 64
    epochs: int = 400
    lambda_gp: float = 10.0
    z_dim: int = 100
    w_cls: float = 1.0
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    seed_weights: int = 1
    seed_data: int = 2
    seed_latent: int = 3
    seed_alpha: int = 4
    checkpoint_interval: int = 0  # generator steps between checkpoints; 0 = final only
    log_interval: int = 50  # console echo frequency; rows are logged every step
    snapshot_interval: int = 0  # epochs between sample grids; 0 = off
    g_base_channels: int = 256
    dq_base_channels: int = 64

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_critic < 1:
            raise ConfigError("n_critic must be >= 1")
        for name in ("batch_size", "z_dim", "g_base_channels", "dq_base_channels"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.lambda_gp < 0 or self.w_cls < 0:
            raise ConfigError("lambda_gp and w_cls must be >= 0")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        for name in ("beta1", "beta2"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must be in [0, 1)")
        for name in ("checkpoint_interval", "log_interval", "snapshot_interval"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")


_FIELD_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def load_config(path) -> TrainConfig:
    """Parse a key=value config file; unknown keys are rejected."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        caster = int if _FIELD_TYPES[key] in (int, "int") else float
        try:
            values[key] = caster(val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return TrainConfig(**values)


def save_config(config: TrainConfig, path):
    lines = [f"{f.name}={getattr(config, f.name)}" for f in fields(TrainConfig)]
    Path(path).write_text("\n".join(lines) + "\n")
