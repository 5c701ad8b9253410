# core/simulate/simulate_service.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import ConfigurationError, DomainError
from core.model.connection import connection_matrix
from core.model.schemes import combined_means
from core.model.types import Dataset, normalize_scheme
from core.spatial.car import SpatialConfig, field_to_weights, precision_for_positions, sample_field

logger = logging.getLogger(__name__)

# Scenario defaults per number of primary clusters (same means in every condition).
DEFAULT_MEANS: Dict[int, Tuple[float, ...]] = {
    1: (20.0,),
    2: (5.0, 30.0),
    3: (5.0, 20.0, 60.0),
    4: (5.0, 15.0, 40.0, 100.0),
}
DEFAULT_PHI = 300.0
DEFAULT_THETA_B = 0.01
BIN_WIDTH = 1000.0

FIELD_KINDS = ("reciprocal_car", "sine", "zero")

ArrayLike = Union[float, Sequence[float], np.ndarray]


# ---------------- parameter helpers ----------------

def default_means(k: int, D: int) -> np.ndarray:
    if k not in DEFAULT_MEANS:
        raise ConfigurationError(f"no default means for k={k}; give simulate.mu explicitly", key="simulate.mu")
    return np.tile(np.asarray(DEFAULT_MEANS[k])[:, None], (1, D))


def _means(mu: Optional[ArrayLike], k: int, D: int) -> np.ndarray:
    if mu is None:
        return default_means(k, D)
    arr = np.asarray(mu, dtype=float)
    if arr.ndim <= 1:
        arr = np.broadcast_to(arr.reshape(-1, 1) if arr.size == k else arr, (k, D)).copy()
    if arr.shape != (k, D) or np.any(arr <= 0):
        raise ConfigurationError(f"simulate.mu must give {k} positive means per condition", key="simulate.mu")
    return arr


def _dispersions(phi: Optional[ArrayLike], n_components: int, D: int) -> np.ndarray:
    arr = np.asarray(DEFAULT_PHI if phi is None else phi, dtype=float)
    try:
        arr = np.broadcast_to(arr if arr.ndim != 1 or arr.size != n_components else arr[:, None], (n_components, D)).copy()
    except ValueError:
        raise ConfigurationError(f"simulate.phi does not fit {n_components} components x {D} conditions", key="simulate.phi")
    if np.any(arr <= 0):
        raise ConfigurationError("simulate.phi must be positive", key="simulate.phi")
    return arr


def _weights(pi: ArrayLike, k: int) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(pi, dtype=float), (k,)).copy()
    if np.any(arr < 0) or np.any(arr > 1):
        raise ConfigurationError("simulate.pi must lie in [0, 1]", key="simulate.pi")
    return arr


def uniform_positions(p: int, rng: np.random.Generator, span: Optional[float] = None) -> np.ndarray:
    """Sorted positions drawn uniformly on [0, span], span defaulting to one bin per unit."""
    span = BIN_WIDTH * p if span is None else span
    return np.sort(rng.uniform(0.0, span, size=p))


def bin_positions(p: int) -> np.ndarray:
    """Midpoints of p consecutive bins of width BIN_WIDTH."""
    return BIN_WIDTH * (np.arange(p) + 0.5)


def _emit(
    rng: np.random.Generator,
    memberships: np.ndarray,
    mu: np.ndarray,
    phi: np.ndarray,
    theta_b: ArrayLike,
    scheme: str,
) -> Tuple[np.ndarray, np.ndarray]:
    """Component indices and NB counts for a p x k 0/1 membership matrix."""
    k = memberships.shape[1]
    D = mu.shape[1]
    U = connection_matrix(k)
    h = memberships.astype(np.int64) @ (1 << np.arange(k))
    mu_star = combined_means(U.rows, mu, np.broadcast_to(np.asarray(theta_b, dtype=float), (D,)), scheme)
    means = mu_star[h]
    disp = phi[h]
    counts = rng.negative_binomial(disp, disp / (disp + means))
    return h, counts


# ---------------- generators ----------------

def simulate_mam(
    p: int,
    D: int,
    k: int,
    pi: ArrayLike,
    mu: Optional[ArrayLike] = None,
    phi: Optional[ArrayLike] = None,
    theta_b: ArrayLike = DEFAULT_THETA_B,
    scheme: str = "additive",
    seed: int = 0,
    positions: Optional[np.ndarray] = None,
) -> Dataset:
    """Units join each primary cluster i independently with probability pi_i."""
    if p < 1 or D < 1:
        raise DomainError("simulation needs p >= 1 and D >= 1")
    scheme = normalize_scheme(scheme)
    rng = np.random.default_rng(seed)
    mu = _means(mu, k, D)
    phi = _dispersions(phi, 2 ** k, D)
    weights = _weights(pi, k)

    pos = uniform_positions(p, rng) if positions is None else np.asarray(positions, dtype=float)
    memberships = rng.random((p, k)) < weights[None, :]
    truth, counts = _emit(rng, memberships, mu, phi, theta_b, scheme)
    logger.info("Simulated MAM data: p=%d D=%d k=%d outward fraction %.3f", p, D, k, float(np.mean(truth == 0)))
    return Dataset(counts=counts, positions=pos, truth=truth, truth_k=k)


def simulate_car_field(
    p: int,
    k: int,
    positions: Optional[np.ndarray],
    kind: str,
    seed: int = 0,
    spatial: Optional[SpatialConfig] = None,
) -> np.ndarray:
    """
    k x p latent field. "reciprocal_car" is an exact draw from the CAR prior built on the
    positions; "sine" is x_ij = sin(i pi pos_j / max pos) for i = 1..k; "zero" is x = 0.
    """
    if kind not in FIELD_KINDS:
        raise ConfigurationError(f"simulate.field must be one of {', '.join(FIELD_KINDS)}", key="simulate.field")
    rng = np.random.default_rng(seed)
    pos = uniform_positions(p, rng) if positions is None else np.asarray(positions, dtype=float)

    if kind == "zero":
        return np.zeros((k, p))
    if kind == "sine":
        top = float(np.max(pos))
        if top <= 0:
            raise DomainError("the sine field needs a positive maximum position")
        i = np.arange(1, k + 1)[:, None]
        return np.sin(i * math.pi * pos[None, :] / top)

    prec = precision_for_positions(pos, spatial or SpatialConfig(scale=BIN_WIDTH))
    return sample_field(prec, rng, size=k)


def simulate_car_mam(
    p: int,
    D: int,
    k: int,
    positions: Optional[np.ndarray] = None,
    field_kind: str = "reciprocal_car",
    eta: float = 1.0,
    mu: Optional[ArrayLike] = None,
    phi: Optional[ArrayLike] = None,
    theta_b: ArrayLike = DEFAULT_THETA_B,
    scheme: str = "additive",
    seed: int = 0,
    spatial: Optional[SpatialConfig] = None,
) -> Dataset:
    """Field -> logistic weights (scale eta) -> per-unit memberships -> NB counts."""
    if not eta > 0:
        raise ConfigurationError("simulate.eta must be positive", key="simulate.eta")
    scheme = normalize_scheme(scheme)
    rng = np.random.default_rng(seed)
    pos = uniform_positions(p, rng) if positions is None else np.asarray(positions, dtype=float)
    field_seed = int(rng.integers(0, 2 ** 32 - 1))
    x = simulate_car_field(p, k, pos, field_kind, seed=field_seed, spatial=spatial)

    mu = _means(mu, k, D)
    phi = _dispersions(phi, 2 ** k, D)
    weights = field_to_weights(x, eta)
    memberships = (rng.random((k, p)) < weights).T
    truth, counts = _emit(rng, memberships, mu, phi, theta_b, scheme)
    logger.info("Simulated CAR-MAM data: p=%d D=%d k=%d field=%s", p, D, k, field_kind)
    return Dataset(counts=counts, positions=pos, truth=truth, truth_k=k)


def simulate_segments(
    p: int = 4000,
    D: int = 2,
    seed: int = 0,
    n_segments: int = 25,
    segment_length: Tuple[int, int] = (8, 40),
    background_mean: ArrayLike = (1.6, 1.1),
    signal_mean: ArrayLike = (19.0, 34.0),
    outward_rate: float = 0.04,
    overlap_rate: float = 0.5,
    phi: float = 300.0,
    theta_b: ArrayLike = DEFAULT_THETA_B,
    scheme: str = "codominance0",
) -> Dataset:
    """
    Binned-coverage-like data with k=2 (background, signal): a low-count background
    with sporadic zero-inflated bins, interrupted by sparse high-count segments. Inside
    a segment every bin carries the signal and some also keep the background
    (the overlap component).
    """
    scheme = normalize_scheme(scheme)
    rng = np.random.default_rng(seed)
    lo, hi = segment_length
    in_segment = np.zeros(p, dtype=bool)
    starts = rng.choice(p, size=n_segments, replace=False)
    for start in starts:
        length = int(rng.integers(lo, hi + 1))
        in_segment[start:start + length] = True

    background = np.where(in_segment, rng.random(p) < overlap_rate, rng.random(p) >= outward_rate)
    memberships = np.column_stack([background, in_segment])
    mu = np.vstack([
        np.broadcast_to(np.asarray(background_mean, dtype=float), (D,)),
        np.broadcast_to(np.asarray(signal_mean, dtype=float), (D,)),
    ])
    phis = np.full((4, D), float(phi))
    truth, counts = _emit(rng, memberships, mu, phis, theta_b, scheme)
    positions = bin_positions(p)
    logger.info("Simulated segment data: p=%d, %d bins in signal segments", p, int(in_segment.sum()))
    return Dataset(counts=counts, positions=positions, truth=truth, truth_k=memberships.shape[1])


# ---------------- scenarios ----------------

@dataclass(frozen=True)
class Scenario:
    kind: str = "mam"
    p: int = 2000
    D: int = 2
    k: int = 2
    pi: Tuple[float, ...] = (0.5,)
    mu: Optional[Tuple[float, ...]] = None
    phi: Optional[Tuple[float, ...]] = None
    theta_b: float = DEFAULT_THETA_B
    scheme: str = "additive"
    field_kind: str = "reciprocal_car"
    eta: float = 1.0
    seed: int = 0
    positions: str = "uniform"
    spatial: SpatialConfig = field(default_factory=lambda: SpatialConfig(scale=BIN_WIDTH))


SCENARIO_KINDS = ("mam", "car_mam", "segments")
POSITION_LAYOUTS = ("uniform", "bins")


def _cluster_means(values: Optional[Tuple[float, ...]], k: int, D: int) -> Optional[np.ndarray]:
    """Flat config lists are either k values (shared across conditions) or k*D values, cluster-major."""
    if values is None:
        return None
    arr = np.asarray(values, dtype=float)
    if arr.size == k * D and D > 1:
        return arr.reshape(k, D)
    return arr


def simulate_scenario(sc: Scenario) -> Dataset:
    if sc.kind not in SCENARIO_KINDS:
        raise ConfigurationError(f"simulate.kind must be one of {', '.join(SCENARIO_KINDS)}", key="simulate.kind")
    if sc.positions not in POSITION_LAYOUTS:
        raise ConfigurationError(f"simulate.positions must be one of {', '.join(POSITION_LAYOUTS)}", key="simulate.positions")
    mu = _cluster_means(sc.mu, sc.k, sc.D)
    positions = bin_positions(sc.p) if sc.positions == "bins" else None
    if sc.kind == "mam":
        return simulate_mam(sc.p, sc.D, sc.k, sc.pi, mu, sc.phi, sc.theta_b, sc.scheme, sc.seed, positions=positions)
    if sc.kind == "car_mam":
        return simulate_car_mam(
            sc.p, sc.D, sc.k, positions, sc.field_kind, sc.eta, mu, sc.phi, sc.theta_b, sc.scheme, sc.seed, spatial=sc.spatial,
        )
    return simulate_segments(p=sc.p, D=sc.D, seed=sc.seed, theta_b=sc.theta_b, scheme=sc.scheme)
