"""Flat run configuration: defaults <- JSON file <- ``key=value`` overrides."""
from __future__ import annotations

import dataclasses
import difflib
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Iterable


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int = 0
    d_model: int = 64
    n_layers: int = 4
    n_heads: int = 4
    d_ff: int = 256
    max_len: int = 256
    dec_layers: int = 4
    n_slices: int = 8
    fused_dim: int = 0  # 0 means d_model
    max_decode_len: int = 256
    dropout: float = 0.1
    init_range: float = 0.02
    dtype: str = "float64"
    num_labels: int = 17

    @property
    def fused_width(self) -> int:
        return self.fused_dim or self.d_model

    def validate(self) -> None:
        if self.d_model % self.n_heads:
            raise ConfigError(f"d_model={self.d_model} not divisible by n_heads={self.n_heads}", "n_heads")
        if self.max_len < 3:
            raise ConfigError("max_len must leave room for [CLS] and [SEP]", "max_len")
        if self.n_slices < 1:
            raise ConfigError("n_slices must be >= 1", "n_slices")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)", "dropout")
        if self.dtype not in ("float64", "float32"):
            raise ConfigError("dtype must be float64 or float32", "dtype")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


FULL_SCALE = dict(d_model=768, n_layers=12, n_heads=12, d_ff=3072, dec_layers=12, max_len=512)


@dataclass(frozen=True)
class TrainConfig:
    # optimization
    batch_size: int = 32
    max_epochs: int = 50
    learning_rate: float = 1e-3
    warmup_fraction: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    w_cls: float = 1.0
    w_gen: float = 1.0
    eval_every: int = 1
    val_beam_width: int = 1
    # model
    d_model: int = 64
    n_layers: int = 4
    n_heads: int = 4
    d_ff: int = 256
    max_len: int = 256
    dec_layers: int = 4
    n_slices: int = 8
    fused_dim: int = 0
    max_decode_len: int = 256
    dropout: float = 0.1
    init_range: float = 0.02
    dtype: str = "float64"
    vocab_min_freq: int = 2
    # decoding / evaluation
    beam_width: int = 10
    bleu_mode: str = "sentence"
    # synthetic corpus
    count_per_label: int = 2
    clean_fraction: float = 0.5
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)

    @property
    def loss_weights(self) -> tuple[float, float]:
        return (self.w_cls, self.w_gen)

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1", "batch_size")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)", "dropout")
        if self.w_cls < 0 or self.w_gen < 0 or (self.w_cls == 0 and self.w_gen == 0):
            raise ConfigError("loss weights must be >= 0 and not both zero", "w_cls")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be >= 0", "max_epochs")
        if self.bleu_mode not in ("sentence", "corpus"):
            raise ConfigError("bleu_mode must be 'sentence' or 'corpus'", "bleu_mode")
        self.model_config(1).validate()

    def model_config(self, vocab_size: int) -> ModelConfig:
        return ModelConfig(
            vocab_size=vocab_size,
            d_model=self.d_model,
            n_layers=self.n_layers,
            n_heads=self.n_heads,
            d_ff=self.d_ff,
            max_len=self.max_len,
            dec_layers=self.dec_layers,
            n_slices=self.n_slices,
            fused_dim=self.fused_dim,
            max_decode_len=self.max_decode_len,
            dropout=self.dropout,
            init_range=self.init_range,
            dtype=self.dtype,
        )

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["split_ratios"] = list(self.split_ratios)
        return d


def _coerce(key: str, raw: Any, default: Any) -> Any:
    try:
        if isinstance(default, bool):
            if isinstance(raw, str):
                if raw.lower() in ("1", "true", "yes"):
                    return True
                if raw.lower() in ("0", "false", "no"):
                    return False
                raise ValueError(raw)
            return bool(raw)
        if isinstance(default, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            if isinstance(raw, str):
                raw = [x for x in raw.replace("(", "").replace(")", "").split(",") if x.strip()]
            return tuple(float(x) for x in raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {raw!r}", key) from None


def _check_key(key: str, valid: Iterable[str]) -> None:
    valid = list(valid)
    if key not in valid:
        near = difflib.get_close_matches(key, valid, n=1)
        hint = f"; did you mean {near[0]!r}?" if near else ""
        raise ConfigError(f"unknown config key {key!r}{hint}", key)


def parse_overrides(items: Iterable[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | Iterable[str] | None = None) -> TrainConfig:
    """Defaults, then the JSON file at ``path``, then ``overrides``."""
    defaults = TrainConfig()
    values = dataclasses.asdict(defaults)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        for k, v in data.items():
            _check_key(k, values)
            values[k] = _coerce(k, v, getattr(defaults, k))
    if overrides is not None:
        if not isinstance(overrides, dict):
            overrides = parse_overrides(overrides)
        for k, v in overrides.items():
            _check_key(k, values)
            values[k] = _coerce(k, v, getattr(defaults, k))
    cfg = TrainConfig(**values)
    cfg.validate()
    return cfg


def write_config(cfg: TrainConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")


__all__ = ["ConfigError", "ModelConfig", "TrainConfig", "FULL_SCALE", "load_config", "write_config", "parse_overrides"]
