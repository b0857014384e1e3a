"""Run configuration: every hyperparameter, with validation and overrides."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from mmft.errors import ConfigError

CHANNELS = ("T", "F", "M", "E")


@dataclass
class RunConfig:
    # Field defaults follow the published hyperparameter table where it gives
    # a value (layers, heads, wavelet levels, learning rate, epochs).
    seed: int = 0
    d_model: int = 32
    layers: int = 6
    heads: int = 8
    wavelet_levels: int = 4
    learning_rate: float = 3e-4
    epochs: int = 300
    batch_size: int = 8
    seq_len: int = 64
    ffn_mult: int = 2
    optimizer: str = "adam"
    grad_clip: float = 1.0
    patience: int = 0

    # technical channel
    lookback: int = 32
    tech_kernel: int = 2
    tech_channels: int = 16
    # text channel
    vocab_size: int = 4096
    max_tokens: int = 16
    text_heads: int = 2
    # macro channel
    macro_lookback: int = 16
    macro_hidden: int = 16
    macro_rho: float = 0.05
    # event channel
    gat_hidden: int = 16
    gat_heads: int = 2
    event_feature_dim: int = 4
    max_event_types: int = 16
    # position encoding
    sigma: float = 3.0
    lambda_init: float = 0.1
    pos_enc_causal: bool = True

    # losses
    lambda_reg: float = 1.0
    lambda_cls: float = 1.0
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    # event-response labels from forward cumulative return
    label_horizon: int = 5
    up_threshold: float = 0.01
    down_threshold: float = -0.01

    # splits by date
    train_frac: float = 0.6
    val_frac: float = 0.2
    embargo: int = 5

    drop: list = field(default_factory=list)
    data_dir: str | None = None
    out_dir: str | None = None
    checkpoint: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        pos_int = ("d_model", "layers", "heads", "wavelet_levels", "epochs", "batch_size",
                   "seq_len", "ffn_mult", "lookback", "tech_kernel", "tech_channels",
                   "vocab_size", "max_tokens", "text_heads", "macro_lookback", "macro_hidden",
                   "gat_hidden", "gat_heads", "event_feature_dim", "max_event_types",
                   "label_horizon")
        for name in pos_int:
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        for name in ("learning_rate", "sigma", "lambda_init"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("lambda_reg", "lambda_cls", "focal_alpha", "focal_gamma", "macro_rho", "grad_clip"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.d_model % self.heads:
            raise ConfigError(f"d_model {self.d_model} not divisible by heads {self.heads}")
        if self.d_model % self.text_heads:
            raise ConfigError(f"d_model {self.d_model} not divisible by text_heads {self.text_heads}")
        if self.lookback % (2 ** self.wavelet_levels):
            raise ConfigError(f"lookback {self.lookback} must be a multiple of 2^{self.wavelet_levels}")
        if self.optimizer not in ("adam", "gd"):
            raise ConfigError(f"optimizer must be 'adam' or 'gd', got {self.optimizer!r}")
        if not 0 < self.train_frac < 1 or not 0 < self.val_frac < 1 or self.train_frac + self.val_frac >= 1:
            raise ConfigError("train_frac and val_frac must leave a non-empty test split")
        if isinstance(self.drop, str):
            self.drop = [self.drop] if self.drop else []
        for ch in self.drop:
            if ch not in CHANNELS:
                raise ConfigError(f"drop: unknown channel tag {ch!r}")
        if len(set(self.drop)) >= len(CHANNELS):
            raise ConfigError("cannot drop every channel")

    # -- construction -------------------------------------------------------
    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_dict(cls, d: dict, base: "RunConfig | None" = None) -> "RunConfig":
        known = set(cls.field_names())
        for key in d:
            if key not in known:
                raise ConfigError(f"unknown config key: {key!r}")
        values = dataclasses.asdict(base) if base is not None else {}
        values.update(d)
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path, base: "RunConfig | None" = None) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(raw, base)

    def with_overrides(self, assignments) -> "RunConfig":
        """Apply ``key=value`` strings; values parse as JSON, else as bare strings."""
        updates = {}
        for item in assignments or ():
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            key, raw = item.split("=", 1)
            key = key.strip()
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            current = getattr(self, key, None)
            if isinstance(current, float) and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            updates[key] = value
        return RunConfig.from_dict(updates, base=self)

    def replace(self, **changes) -> "RunConfig":
        return RunConfig.from_dict(changes, base=self)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def desk_config(**changes) -> RunConfig:
    """Laptop-scale preset: 2 layers, 2 heads and a short, faster schedule."""
    base = RunConfig(layers=2, heads=2, learning_rate=2e-3, epochs=40, patience=8)
    return base.replace(**changes) if changes else base


PRESETS = {"full": RunConfig, "desk": desk_config}
