"""Experiment configuration: flat `key = value` files with defaults.

An empty file is a valid config: every key has a default matching the
reference experimental setting (privacy spec table defaults, epsilon 1,
K 10, 100 epochs, 5 seeds). Paths are resolved against HDPMF_DATA_DIR only
for the default dataset location; explicit paths are used as given.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .baselines import BaselineKind
from .exceptions import ConfigError
from .privacy import PrivacySpec

# Best-found training defaults per method (5-fold CV over lambda in
# {0.01, 0.001} and eta0 in {0.05, 0.01, 0.005, 0.001}; dpmf over
# {0.005, 0.001, 0.0005, 0.0001}).
ETA0_DEFAULTS = {
    BaselineKind.MF: 0.001,
    BaselineKind.HDPMF: 0.001,
    BaselineKind.HDPMF_R: 0.001,
    BaselineKind.PDPMF: 0.001,
    BaselineKind.DPMF: 0.001,
}
LAMBDA_DEFAULT = 0.01


def default_dataset_path() -> str:
    base = os.environ.get("HDPMF_DATA_DIR", "data")
    return str(Path(base) / "ml-100k" / "u.data")


@dataclass
class ExperimentConfig:
    """Validated, fully-defaulted settings of one experiment."""

    dataset: str = field(default_factory=default_dataset_path)
    format: str = "ml-100k"  # ml-100k | ml-1m | csv
    scale_min: float = 1.0
    scale_max: float = 5.0
    method: BaselineKind = BaselineKind.HDPMF
    k: int = 10
    epochs: int = 100
    eta0: float | None = None  # None: per-method default
    lam: float = LAMBDA_DEFAULT
    epsilon: float = 1.0
    f_uc: float = 0.54
    f_um: float = 0.37
    f_ic: float = 0.33
    f_im: float = 0.33
    eps_uc: float = 0.1
    eps_um: float = 0.5
    eps_ul: float = 1.0
    eps_ic: float = 0.1
    eps_im: float = 0.5
    eps_il: float = 1.0
    split: str = "leave-n-out"  # leave-n-out | leave-one-out
    n_test: int = 10
    fraction: float = 1.0
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    output: str = "results.csv"
    rescale: bool | None = None  # None: method default
    clamp: bool = True
    engine: str = "kernel"  # kernel | messages
    trace: str | None = None
    loss_trace: str | None = None

    @property
    def effective_eta0(self) -> float:
        return self.eta0 if self.eta0 is not None else ETA0_DEFAULTS[self.method]

    @property
    def effective_rescale(self) -> bool:
        if self.method is BaselineKind.HDPMF_R:
            return False
        if self.rescale is not None:
            return self.rescale
        return self.method.rescales

    def privacy_spec(self) -> PrivacySpec:
        try:
            return PrivacySpec(
                epsilon=self.epsilon,
                f_uc=self.f_uc, f_um=self.f_um, f_ic=self.f_ic, f_im=self.f_im,
                eps_uc=self.eps_uc, eps_um=self.eps_um, eps_ul=self.eps_ul,
                eps_ic=self.eps_ic, eps_im=self.eps_im, eps_il=self.eps_il,
            )
        except ValueError as exc:
            raise ConfigError("privacy spec", str(exc)) from None

    def effective_items(self) -> list[tuple[str, str]]:
        """All settings after defaults, for provenance echoes."""
        out = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "eta0":
                value = self.effective_eta0
            elif f.name == "rescale":
                value = self.effective_rescale
            elif f.name == "method":
                value = value.value
            elif f.name == "seeds":
                value = ",".join(str(s) for s in value)
            out.append((f.name, str(value)))
        return out


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_seeds(raw: str) -> tuple[int, ...]:
    seeds = tuple(int(part.strip()) for part in raw.split(",") if part.strip())
    if not seeds:
        raise ValueError("need at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ValueError("duplicate seeds")
    if any(s < 0 for s in seeds):
        raise ValueError("seeds must be non-negative")
    return seeds


_PARSERS = {
    "dataset": str,
    "format": str,
    "scale_min": float,
    "scale_max": float,
    "method": lambda raw: BaselineKind(raw.lower()),
    "k": int,
    "epochs": int,
    "eta0": float,
    "lam": float,
    "epsilon": float,
    "f_uc": float,
    "f_um": float,
    "f_ic": float,
    "f_im": float,
    "eps_uc": float,
    "eps_um": float,
    "eps_ul": float,
    "eps_ic": float,
    "eps_im": float,
    "eps_il": float,
    "split": str,
    "n_test": int,
    "fraction": float,
    "seeds": _parse_seeds,
    "output": str,
    "rescale": _parse_bool,
    "clamp": _parse_bool,
    "engine": str,
    "trace": str,
    "loss_trace": str,
}


def _validate(cfg: ExperimentConfig, explicit: set[str]) -> None:
    if cfg.format not in ("ml-100k", "ml-1m", "csv"):
        raise ConfigError("format", f"must be ml-100k, ml-1m, or csv, got {cfg.format!r}")
    if cfg.k < 1:
        raise ConfigError("k", f"must be >= 1, got {cfg.k}")
    if cfg.epochs < 1:
        raise ConfigError("epochs", f"must be >= 1, got {cfg.epochs}")
    if cfg.eta0 is not None and cfg.eta0 <= 0:
        raise ConfigError("eta0", f"must be > 0, got {cfg.eta0}")
    if cfg.lam < 0:
        raise ConfigError("lam", f"must be >= 0, got {cfg.lam}")
    if cfg.epsilon <= 0:
        raise ConfigError("epsilon", f"must be > 0, got {cfg.epsilon}")
    if cfg.scale_max <= cfg.scale_min:
        raise ConfigError("scale_max", "rating scale must have positive range")
    if cfg.split not in ("leave-n-out", "leave-one-out"):
        raise ConfigError("split", f"must be leave-n-out or leave-one-out, got {cfg.split!r}")
    if cfg.n_test < 1:
        raise ConfigError("n_test", f"must be >= 1, got {cfg.n_test}")
    if not (0.0 < cfg.fraction <= 1.0):
        raise ConfigError("fraction", f"must be in (0, 1], got {cfg.fraction}")
    if cfg.engine not in ("kernel", "messages"):
        raise ConfigError("engine", f"must be kernel or messages, got {cfg.engine!r}")
    if cfg.trace is not None and cfg.engine != "messages":
        raise ConfigError("trace", "run traces require engine = messages")
    if "rescale" in explicit and not cfg.method.stretches:
        raise ConfigError("rescale", f"only meaningful for hdpmf/hdpmf_r, not {cfg.method.value}")
    cfg.privacy_spec()


def parse_config(path: str | Path) -> ExperimentConfig:
    """Read a `key = value` config file, apply defaults, validate.

    Raises ConfigError naming the offending key.
    """
    values: dict[str, object] = {}
    explicit: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"line {line_no}", f"expected 'key = value', got {text!r}")
            key, _, raw = text.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in _PARSERS:
                raise ConfigError(key, "unknown key")
            if key in explicit:
                raise ConfigError(key, "set more than once")
            try:
                values[key] = _PARSERS[key](raw)
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
            explicit.add(key)
    cfg = ExperimentConfig(**values)
    _validate(cfg, explicit)
    return cfg
