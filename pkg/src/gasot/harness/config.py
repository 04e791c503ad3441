"""Experiment configuration and hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..fnn import TrainConfig
from ..synth import MODES, fixture_library_ref
from .persistence import MODEL_KINDS

DEFAULT_SNRS = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0)
DEFAULT_P1_GRID = (0.8, 0.9, 0.95, 1.0)
DEFAULT_P2_GRID = (0.2, 0.5, 0.8, 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a run.

    ``seed`` is the master seed; every stochastic stage (synthesis,
    masking, noise, network init, shuffling, dropout) draws from a named
    substream of it, so ``train.seed`` and ``threshold_train.seed`` are
    overwritten by derived seeds inside the pipeline.
    """

    snrs: tuple = DEFAULT_SNRS
    modes: tuple = ("independent", "correlated")
    n_train: int = 10_000
    n_test: int = 2_500
    seed: int = 0
    roster: tuple = MODEL_KINDS
    pca_components: int | None = None
    hidden: int = 64
    train: TrainConfig = field(default_factory=TrainConfig)
    threshold_hidden: int = 64
    threshold_train: TrainConfig = field(default_factory=lambda: TrainConfig(retention=(1.0, 1.0)))
    pls_components: int = 20
    pls_on_pca: bool = True
    bin_width: float = 0.5
    recall_floor: float = 0.9
    library: dict = field(default_factory=fixture_library_ref)
    path_cm: float = 10.0
    validation_fraction: float = 0.2
    folds: int = 1
    grid_snr: float = 30.0
    grid_p1: tuple = DEFAULT_P1_GRID
    grid_p2: tuple = DEFAULT_P2_GRID
    curve_snr: float = 30.0
    curve_sizes: tuple = (500, 1_000, 2_000, 5_000, 10_000)
    out_dir: str | None = None

    def __post_init__(self):
        for name in ("snrs", "modes", "roster", "grid_p1", "grid_p2", "curve_sizes"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "snrs", tuple(float(s) for s in self.snrs))
        if self.n_train < 10 or self.n_test < 10:
            raise ValueError("n_train and n_test must be >= 10")
        if not self.snrs:
            raise ValueError("snr list must not be empty")
        bad = [m for m in self.modes if m not in MODES]
        if bad or not self.modes:
            raise ValueError(f"modes must be a non-empty subset of {MODES}, got {self.modes}")
        bad = [m for m in self.roster if m not in MODEL_KINDS]
        if bad or not self.roster:
            raise ValueError(f"roster must be a non-empty subset of {MODEL_KINDS}, got {self.roster}")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must be in (0, 1)")
        if self.folds < 1:
            raise ValueError("folds must be >= 1")
        if self.pls_components < 1 or self.hidden < 1 or self.threshold_hidden < 1:
            raise ValueError("pls_components, hidden and threshold_hidden must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train"] = self.train.to_dict()
        d["threshold_train"] = self.threshold_train.to_dict()
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        for k in ("train", "threshold_train"):
            if k in d and isinstance(d[k], dict):
                base = getattr(cls(), k).to_dict()
                d[k] = TrainConfig.from_dict({**base, **d[k]})
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def hash(self) -> str:
        """SHA-256 of the canonical config, ignoring the output directory."""
        d = self.to_dict()
        d.pop("out_dir", None)
        return canonical_hash(d)


def canonical_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
