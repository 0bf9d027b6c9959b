"""Training configuration and its flat ``key = value`` file format."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

MODES = ("unconditional", "supervised")
MATCH_MODES = ("both", "centroid_only", "diameter_only")

# config-file key -> dataclass attribute, where they differ
_KEY_TO_ATTR = {"lambda": "lam"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}


class ConfigError(ValueError):
    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line


@dataclass
class TrainConfig:
    mode: str
    match_mode: str = "both"
    # data manifold
    manifold: str = "circle"
    ambient_dim: int = 2
    noise_sigma: float = 0.0
    radius: float = 1.0
    pitch: float = 0.5
    turns: float = 2.0
    scale: float = 1.0
    # network shapes
    latent_dim: int = 4
    embed_dim: int = 4
    gen_hidden: tuple = (64, 64)
    metric_hidden: tuple = (64, 64)
    # objective weights
    lam: float = 1.0
    alpha: float = 0.01
    gamma: float = 0.01
    lambda2: float = 1e-3
    lambda3: float = 1e-3
    # batches
    batch_size: int = 64
    triplet_count: int = 0  # 0 means "same as batch_size"
    # optimizers
    gen_lr: float = 1e-4
    gen_beta1: float = 0.5
    gen_beta2: float = 0.9
    metric_lr: float = 3e-5
    metric_beta1: float = 0.5
    metric_beta2: float = 0.999
    # schedule and diagnostics
    epochs: int = 200
    steps_per_epoch: int = 20
    diagnostics_interval: int = 10
    probe_size: int = 2048
    spectrum_size: int = 512
    snapshot_interval: int = 0
    early_stop: bool = False
    # supervised mode
    degrade_dim: int = 2
    degrade_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.gen_hidden = tuple(self.gen_hidden)
        self.metric_hidden = tuple(self.metric_hidden)
        self.validate()

    @property
    def triplets(self) -> int:
        return self.triplet_count or self.batch_size

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.match_mode not in MATCH_MODES:
            raise ConfigError(f"match_mode must be one of {MATCH_MODES}, got {self.match_mode!r}")
        for name in ("lam", "alpha", "gamma", "lambda2", "lambda3", "noise_sigma", "degrade_noise"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{_ATTR_TO_KEY.get(name, name)} must be >= 0")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.triplet_count < 0:
            raise ConfigError("triplet_count must be >= 0")
        for name in ("ambient_dim", "latent_dim", "embed_dim", "steps_per_epoch",
                     "diagnostics_interval", "degrade_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.probe_size < 2 or self.spectrum_size < 2:
            raise ConfigError("probe_size and spectrum_size must be >= 2")
        if self.epochs < 0 or self.snapshot_interval < 0:
            raise ConfigError("epochs and snapshot_interval must be >= 0")
        for b in ("gen_beta1", "gen_beta2", "metric_beta1", "metric_beta2"):
            if not 0.0 <= getattr(self, b) < 1.0:
                raise ConfigError(f"{b} must lie in [0, 1)")
        if self.mode == "supervised" and self.degrade_dim >= self.ambient_dim:
            raise ConfigError("degrade_dim must be smaller than ambient_dim in supervised mode")


_FIELDS = {f.name: f for f in dataclasses.fields(TrainConfig)}


def _parse_value(attr, raw):
    default = _FIELDS[attr].default
    if attr in ("gen_hidden", "metric_hidden"):
        raw = raw.strip()
        return () if raw in ("", "none") else tuple(int(x) for x in raw.split(","))
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config(text: str, path=None) -> TrainConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {line.strip()!r}", lineno, path)
        attr = _KEY_TO_ATTR.get(key, key)
        if attr not in _FIELDS or key in _ATTR_TO_KEY:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if attr in values:
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        try:
            values[attr] = _parse_value(attr, raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno, path) from None
    if "mode" not in values:
        raise ConfigError("missing required key 'mode'", path=path)
    try:
        return TrainConfig(**values)
    except ConfigError as exc:
        raise ConfigError(str(exc), path=path) from None


def load_config(path) -> TrainConfig:
    with open(path) as fh:
        return parse_config(fh.read(), path=path)


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: TrainConfig) -> str:
    """Serialize every field, in declaration order."""
    lines = []
    for f in dataclasses.fields(cfg):
        key = _ATTR_TO_KEY.get(f.name, f.name)
        lines.append(f"{key} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"
