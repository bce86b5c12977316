"""Global numeric precision/debug switches, RNG streams, and run configuration."""

from __future__ import annotations

import contextlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError

_DTYPE = np.float64
_DEBUG_CHECKS = False


def set_dtype(dtype) -> None:
    """Set the global floating dtype (np.float32 or np.float64)."""
    global _DTYPE
    if dtype not in (np.float32, np.float64):
        raise ConfigError(f"unsupported dtype {dtype!r}; use np.float32 or np.float64")
    _DTYPE = dtype


def dtype():
    return _DTYPE


def set_debug_checks(enabled: bool) -> None:
    """Enable per-op finite checks (raises NumericsError on NaN/Inf)."""
    global _DEBUG_CHECKS
    _DEBUG_CHECKS = bool(enabled)


def debug_checks() -> bool:
    return _DEBUG_CHECKS


@contextlib.contextmanager
def precision(dtype_):
    """Temporarily switch the global dtype."""
    global _DTYPE
    old = _DTYPE
    set_dtype(dtype_)
    try:
        yield
    finally:
        _DTYPE = old


# Fixed stream ids so seeded RNGs never collide across subsystems.
STREAM_SYNTH = 1
STREAM_INIT_TEACHER = 2
STREAM_INIT_STUDENT = 3
STREAM_SHUFFLE = 4
STREAM_DROPOUT = 5
STREAM_SUBGRAPH = 6
STREAM_NEGATIVES = 7


def rng_for(*keys: int) -> np.random.Generator:
    """Deterministic generator for a (seed, stream, ...) key tuple."""
    return np.random.default_rng(np.random.SeedSequence([int(k) & 0xFFFFFFFF for k in keys]))


@dataclass
class TrainConfig:
    """Everything a pretrain or distill run needs; serializable to one JSON file."""

    stage: str = "distill"            # "pretrain" | "distill"
    epochs: int = 10
    batch_size: int = 128
    n: int = 128                      # max sequence length
    d: int = 256                      # embedding dimension
    heads: int = 2
    layers: int = 2
    gnn_layers: int = 2
    fanouts: tuple[int, int] = (10, 10)
    temperature: float = 3.0
    alpha: float = 0.2
    seed: int = 0
    patience: int = 5                 # early stopping on validation NDCG@10
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.98
    dropout: float = 0.1
    precision: str = "f64"            # "f32" | "f64"
    max_train_per_user: int = 0       # 0 = unlimited prefix pairs
    events_path: str = ""
    dataset_path: str = ""
    graph_path: str = ""
    out_dir: str = "out"
    k_list: tuple[int, ...] = (5, 10, 20)
    n_negatives: int = 100
    cache_soft_labels: bool = True

    def __post_init__(self):
        for name in ("epochs", "batch_size", "n", "d", "heads", "layers", "gnn_layers",
                     "patience", "n_negatives"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        for name in ("lr", "temperature"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.d % self.heads != 0:
            raise ConfigError(f"d={self.d} not divisible by heads={self.heads}")
        if self.precision not in ("f32", "f64"):
            raise ConfigError(f"precision must be 'f32' or 'f64', got {self.precision!r}")
        if self.stage not in ("pretrain", "distill"):
            raise ConfigError(f"stage must be 'pretrain' or 'distill', got {self.stage!r}")
        self.fanouts = tuple(int(f) for f in self.fanouts)
        if any(f <= 0 for f in self.fanouts):
            raise ConfigError(f"fanouts must be positive, got {self.fanouts}")
        self.k_list = tuple(int(k) for k in self.k_list)

    def np_dtype(self):
        return np.float64 if self.precision == "f64" else np.float32

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fanouts"] = list(self.fanouts)
        d["k_list"] = list(self.k_list)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))
