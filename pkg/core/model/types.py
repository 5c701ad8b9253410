# core/model/types.py
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Union

import numpy as np

from core.errors import ConfigurationError, DomainError
from core.spatial.car import SpatialConfig

SCHEMES = ("additive", "codominance1", "codominance0")

# Scheme aliases accepted from configs and the command line.
_SCHEME_ALIASES = {
    "sum": "additive",
    "arithmetic": "codominance1",
    "geometric": "codominance0",
}

MAX_K = 16


def normalize_scheme(name: str) -> str:
    key = (name or "").strip().lower().replace("-", "").replace("_", "")
    key = _SCHEME_ALIASES.get(key, key)
    if key not in SCHEMES:
        raise ConfigurationError(
            f"Unknown combination scheme '{name}' (expected one of {', '.join(SCHEMES)})",
            key="model.scheme",
        )
    return key


@dataclass(frozen=True)
class Hyperparameters:
    a_mu: float = 1.0
    b_mu: float = 0.001
    a_phi: float = 100.0
    b_phi: float = 2000.0
    eta_lo: float = 0.1
    eta_hi: float = 10.0

    def __post_init__(self):
        for name in ("a_mu", "b_mu", "a_phi", "b_phi", "eta_lo", "eta_hi"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigurationError(f"hyper.{name} must be a positive finite number, got {value}", key=f"hyper.{name}")
        if self.a_phi >= self.b_phi:
            raise ConfigurationError("hyper.a_phi must be below hyper.b_phi", key="hyper.a_phi")
        if self.eta_lo >= self.eta_hi:
            raise ConfigurationError("hyper.eta_lo must be below hyper.eta_hi", key="hyper.eta_lo")


@dataclass(frozen=True)
class ModelConfig:
    """
    Model-level constants: number of primary clusters, combination scheme,
    the fixed outward-cluster mean per condition and the prior hyperparameters.
    `outward_mean` is either one value shared by every condition or one value per condition.
    """
    k: int = 2
    scheme: str = "additive"
    outward_mean: Union[float, Sequence[float]] = 0.01
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    spatial: Optional[SpatialConfig] = None

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or not 1 <= int(self.k) <= MAX_K:
            raise ConfigurationError(f"model.k must be an integer in [1, {MAX_K}], got {self.k}", key="model.k")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "scheme", normalize_scheme(self.scheme))
        theta = np.atleast_1d(np.asarray(self.outward_mean, dtype=float))
        if theta.size == 0 or not np.all(np.isfinite(theta)) or np.any(theta <= 0):
            raise ConfigurationError("model.outward_mean must be positive", key="model.outward_mean")

    @property
    def n_components(self) -> int:
        return 2 ** self.k

    def theta_b(self, D: int) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(self.outward_mean, dtype=float))
        if theta.size == 1:
            return np.full(D, float(theta[0]))
        if theta.size != D:
            raise ConfigurationError(
                f"model.outward_mean has {theta.size} values but the data has {D} conditions",
                key="model.outward_mean",
            )
        return theta.copy()

    def with_overrides(self, **changes) -> "ModelConfig":
        return replace(self, **changes)


@dataclass
class ParameterState:
    """Current values of one chain. `pi` is the global weight vector (MAM) or None (CAR-MAM)."""
    mu: np.ndarray
    phi: np.ndarray
    s: np.ndarray
    z_star: np.ndarray
    pi: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None
    eta: Optional[float] = None

    def copy(self) -> "ParameterState":
        return ParameterState(
            mu=self.mu.copy(),
            phi=self.phi.copy(),
            s=self.s.copy(),
            z_star=self.z_star.copy(),
            pi=None if self.pi is None else self.pi.copy(),
            x=None if self.x is None else self.x.copy(),
            eta=self.eta,
        )


@dataclass
class Dataset:
    """
    p x D counts with optional positions, true component indices and region ids.
    `truth_k` is the number of primary clusters the truth indices refer to, when known.
    """
    counts: np.ndarray
    positions: Optional[np.ndarray] = None
    truth: Optional[np.ndarray] = None
    region_ids: Optional[List[str]] = None
    truth_k: Optional[int] = None

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim == 1:
            counts = counts[:, None]
        if counts.ndim != 2 or counts.shape[0] < 1 or counts.shape[1] < 1:
            raise DomainError(f"counts must be a non-empty p x D matrix, got shape {counts.shape}")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0) or np.any(counts != np.floor(counts)):
            raise DomainError("counts must be nonnegative integers")
        self.counts = counts.astype(np.int64)

        if self.positions is not None:
            pos = np.asarray(self.positions, dtype=float).ravel()
            if pos.shape[0] != self.p:
                raise DomainError(f"positions has {pos.shape[0]} entries for {self.p} units")
            if not np.all(np.isfinite(pos)):
                raise DomainError("positions must be finite")
            if np.any(np.diff(pos) < 0):
                j = int(np.argmax(np.diff(pos) < 0))
                raise DomainError(f"positions must be nondecreasing (unit {j + 2} is before unit {j + 1})")
            self.positions = pos

        if self.truth is not None:
            raw = np.asarray(self.truth, dtype=float).ravel()
            if raw.shape[0] != self.p:
                raise DomainError(f"truth has {raw.shape[0]} entries for {self.p} units")
            if not np.all(np.isfinite(raw)) or np.any(raw < 0) or np.any(raw != np.floor(raw)):
                raise DomainError("truth must hold nonnegative integer component indices")
            self.truth = raw.astype(np.int64)

        if self.truth_k is not None:
            if not isinstance(self.truth_k, (int, np.integer)) or not 1 <= int(self.truth_k) <= MAX_K:
                raise DomainError(f"truth_k must be an integer in [1, {MAX_K}], got {self.truth_k}")
            self.truth_k = int(self.truth_k)
            if self.truth is not None and self.truth.max() >= 2 ** self.truth_k:
                raise DomainError(f"truth uses component {int(self.truth.max())}, beyond k={self.truth_k}")

        if self.region_ids is None:
            self.region_ids = [f"r{j + 1}" for j in range(self.p)]
        elif len(self.region_ids) != self.p:
            raise DomainError(f"{len(self.region_ids)} region ids for {self.p} units")

    @property
    def p(self) -> int:
        return int(self.counts.shape[0])

    @property
    def D(self) -> int:
        return int(self.counts.shape[1])

    @property
    def has_positions(self) -> bool:
        return self.positions is not None
