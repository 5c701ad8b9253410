# core/spatial/car.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg, sparse
from scipy.spatial import cKDTree
from scipy.special import expit, log_expit

from core.errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

GAMMA_KINDS = ("reciprocal", "none")

# Logistic weights are kept this far from {0, 1}.
LOGISTIC_EPS = 1e-10
# Above this many units an unbounded radius (dense p x p gamma) is refused.
DENSE_UNIT_LIMIT = 5000

Matrix = Union[np.ndarray, sparse.csr_matrix]


@dataclass(frozen=True)
class SpatialConfig:
    """
    How distances between units become CAR weights.

    gamma = 1 / (1 + delta) with delta = |pos_j - pos_j'| / scale, set to zero for
    pairs farther apart than `radius` (in the same scaled units).
    """
    gamma_kind: str = "reciprocal"
    radius: float = math.inf
    eta_init: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.gamma_kind not in GAMMA_KINDS:
            raise ConfigurationError(
                f"spatial.gamma_kind must be one of {', '.join(GAMMA_KINDS)}, got '{self.gamma_kind}'",
                key="spatial.gamma_kind",
            )
        if not self.radius > 0:
            raise ConfigurationError("spatial.radius must be positive", key="spatial.radius")
        if not (self.eta_init > 0 and math.isfinite(self.eta_init)):
            raise ConfigurationError("spatial.eta_init must be positive", key="spatial.eta_init")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ConfigurationError("spatial.scale must be positive", key="spatial.scale")


@dataclass(frozen=True)
class PrecisionSummary:
    """
    Q = I + Delta - Gamma together with the eigenvalues v of Delta - Gamma and
    log c = -(p/2) log(2 pi) + (1/2) sum_j log(1 + v_j). Built once per dataset.
    """
    Q: Matrix
    eigs: np.ndarray
    log_const: float

    @property
    def p(self) -> int:
        return int(self.Q.shape[0])

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.Q)

    @property
    def diagonal(self) -> np.ndarray:
        return np.asarray(self.Q.diagonal()).ravel()

    def gamma(self) -> Matrix:
        """Off-diagonal weights recovered from Q."""
        if self.is_sparse:
            g = -self.Q.tocsr(copy=True)
            g.setdiag(0.0)
            g.eliminate_zeros()
            return g
        g = -np.array(self.Q, dtype=float)
        np.fill_diagonal(g, 0.0)
        return g

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.Q @ x).ravel() if x.ndim == 1 else np.asarray(self.Q @ x)

    def column(self, j: int) -> Tuple[np.ndarray, np.ndarray]:
        """(row indices, values) of the nonzero entries of column j."""
        if self.is_sparse:
            col = self.Q.getcol(j).tocoo()
            return col.row, col.data
        return np.arange(self.p), self.Q[:, j]


# ---------------- construction ----------------

def gamma_weights(pos, cfg: SpatialConfig) -> Matrix:
    pos = np.asarray(pos, dtype=float).ravel()
    if not np.all(np.isfinite(pos)):
        raise DomainError("positions must be finite")
    p = pos.shape[0]
    dense = math.isinf(cfg.radius) and p <= DENSE_UNIT_LIMIT

    if cfg.gamma_kind == "none":
        return np.zeros((p, p)) if dense else sparse.csr_matrix((p, p))
    if math.isinf(cfg.radius) and not dense:
        raise ConfigurationError(
            f"{p} units need a finite spatial.radius (an unbounded radius is limited to {DENSE_UNIT_LIMIT} units)",
            key="spatial.radius",
        )

    scaled = pos / cfg.scale
    if math.isinf(cfg.radius):
        delta = np.abs(scaled[:, None] - scaled[None, :])
        gamma = 1.0 / (1.0 + delta)
        np.fill_diagonal(gamma, 0.0)
        return gamma

    tree = cKDTree(scaled[:, None])
    pairs = tree.query_pairs(cfg.radius, output_type="ndarray")
    if pairs.size == 0:
        return sparse.csr_matrix((p, p))
    a, b = pairs[:, 0], pairs[:, 1]
    vals = 1.0 / (1.0 + np.abs(scaled[a] - scaled[b]))
    gamma = sparse.coo_matrix(
        (np.concatenate([vals, vals]), (np.concatenate([a, b]), np.concatenate([b, a]))),
        shape=(p, p),
    )
    logger.debug("Truncated CAR weights: %d nonzero pairs within radius %s", len(vals), cfg.radius)
    return gamma.tocsr()


def build_precision(gamma: Matrix) -> PrecisionSummary:
    if np.shape(gamma)[0] > DENSE_UNIT_LIMIT:
        logger.warning(
            "CAR normalising constant for %d units uses a dense eigendecomposition (O(p^3) time, O(p^2) memory)",
            np.shape(gamma)[0],
        )
    if sparse.issparse(gamma):
        g = gamma.tocsr().astype(float)
        if g.shape[0] != g.shape[1]:
            raise DomainError("gamma must be square")
        diff = abs(g - g.T)
        if diff.nnz and diff.max() > 1e-12:
            raise DomainError("gamma must be symmetric")
        if g.nnz and g.data.min() < 0:
            raise DomainError("gamma must be nonnegative")
        if np.any(g.diagonal() != 0):
            raise DomainError("gamma must have a zero diagonal")
        degree = np.asarray(g.sum(axis=1)).ravel()
        laplacian = (sparse.diags(degree) - g).tocsr()
        Q = (sparse.identity(g.shape[0], format="csr") + laplacian).tocsr()
        eigs = linalg.eigvalsh(laplacian.toarray())
    else:
        g = np.asarray(gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DomainError("gamma must be square")
        if not np.allclose(g, g.T, rtol=0.0, atol=1e-12):
            raise DomainError("gamma must be symmetric")
        if np.any(g < 0):
            raise DomainError("gamma must be nonnegative")
        if np.any(np.diag(g) != 0):
            raise DomainError("gamma must have a zero diagonal")
        laplacian = -g
        laplacian[np.diag_indices_from(laplacian)] = g.sum(axis=1)
        eigs = linalg.eigvalsh(laplacian)
        Q = laplacian
        Q[np.diag_indices_from(Q)] += 1.0

    # Delta - Gamma is PSD; tiny negative eigenvalues are rounding.
    eigs = np.clip(eigs, 0.0, None)
    p = Q.shape[0]
    log_const = -0.5 * p * math.log(2.0 * math.pi) + 0.5 * float(np.log1p(eigs).sum())
    return PrecisionSummary(Q=Q, eigs=eigs, log_const=log_const)


def precision_for_positions(pos, cfg: SpatialConfig) -> PrecisionSummary:
    return build_precision(gamma_weights(pos, cfg))


# ---------------- densities ----------------

def car_log_density(x_i, prec: PrecisionSummary, form: str = "quadratic") -> float:
    """
    log c - (1/2) x' Q x. The "pairwise" form evaluates the same quantity as
    log c - (1/2) [sum_{j<j'} gamma_jj' (x_j - x_j')^2 + sum_j x_j^2].
    """
    x = np.asarray(x_i, dtype=float).ravel()
    if x.shape[0] != prec.p:
        raise DomainError(f"field has {x.shape[0]} entries, precision is {prec.p} x {prec.p}")

    if form == "quadratic":
        quad = float(x @ prec.matvec(x))
    elif form == "pairwise":
        g = prec.gamma()
        if sparse.issparse(g):
            coo = sparse.triu(g, k=1).tocoo()
            pair_sum = float(np.sum(coo.data * (x[coo.row] - x[coo.col]) ** 2))
        else:
            upper = np.triu(g, k=1)
            pair_sum = float(np.sum(upper * (x[:, None] - x[None, :]) ** 2))
        quad = pair_sum + float(x @ x)
    else:
        raise DomainError(f"unknown CAR density form '{form}'")
    return prec.log_const - 0.5 * quad


def single_site_prior_delta(x_old: float, x_new: float, j: int, qx_j: float, q_jj: float) -> float:
    """
    Change of -(1/2) x'Qx when coordinate j moves from x_old to x_new,
    given qx_j = (Q x)_j at the current field.
    """
    step = x_new - x_old
    return -0.5 * (step * step * q_jj + 2.0 * step * qx_j)


# ---------------- logistic link ----------------

def logistic_weight(x_ij, eta: float):
    if not eta > 0:
        raise DomainError("eta must be positive")
    w = np.clip(expit(np.asarray(x_ij, dtype=float) / eta), LOGISTIC_EPS, 1.0 - LOGISTIC_EPS)
    return float(w) if np.ndim(w) == 0 else w


def field_to_weights(x: np.ndarray, eta: float) -> np.ndarray:
    """k x p matrix of per-unit primary weights pi_ij."""
    return logistic_weight(np.atleast_2d(np.asarray(x, dtype=float)), eta)


def field_log_weights(x: np.ndarray, eta: float) -> Tuple[np.ndarray, np.ndarray]:
    """(log pi_ij, log(1 - pi_ij)) computed without forming pi, for likelihood work."""
    if not eta > 0:
        raise DomainError("eta must be positive")
    t = np.asarray(x, dtype=float) / eta
    floor = math.log(LOGISTIC_EPS)
    return np.maximum(log_expit(t), floor), np.maximum(log_expit(-t), floor)


# ---------------- exact sampling ----------------

def sample_field(prec: PrecisionSummary, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """
    Exact draw(s) from N(0, Q^{-1}): with Q = R'R (upper Cholesky), x = R^{-1} z.
    Returns a p-vector, or size x p when `size` is given.
    """
    Q = prec.Q.toarray() if prec.is_sparse else prec.Q
    R = linalg.cholesky(Q, lower=False)
    n = 1 if size is None else int(size)
    z = rng.standard_normal((prec.p, n))
    x = linalg.solve_triangular(R, z, lower=False)
    return x[:, 0] if size is None else x.T
