# core/model/connection.py
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import List

import numpy as np

from core.errors import ConfigurationError, DomainError
from .types import MAX_K

# Weights are kept this far from {0, 1} so log-weights stay finite.
WEIGHT_EPS = 1e-10


@dataclass(frozen=True)
class ConnectionMatrix:
    """
    The 2^k x k binary table of single and multiple memberships.

    Row h is the binary expansion of h with bit i giving u_hi, so row 0 is the
    outward (all-zeros) row and row 2^k - 1 belongs to every primary cluster.
    """
    rows: np.ndarray

    @property
    def k(self) -> int:
        return int(self.rows.shape[1])

    @property
    def n_components(self) -> int:
        return int(self.rows.shape[0])

    @property
    def multiplicity(self) -> np.ndarray:
        return self.rows.sum(axis=1)

    @property
    def outward_index(self) -> int:
        return 0

    def row(self, h: int) -> np.ndarray:
        if not 0 <= h < self.n_components:
            raise DomainError(f"component index {h} outside 0..{self.n_components - 1}")
        return self.rows[h]

    def index_of(self, u) -> int:
        u = np.asarray(u, dtype=np.int64).ravel()
        if u.shape[0] != self.k or np.any((u != 0) & (u != 1)):
            raise DomainError(f"{u.tolist()} is not a binary vector of length {self.k}")
        return int(np.sum(u << np.arange(self.k)))

    def labels(self) -> List[str]:
        return ["".join(str(int(v)) for v in r) for r in self.rows]

    def members(self, i: int) -> np.ndarray:
        """Indices of the components whose membership includes primary cluster i."""
        return np.flatnonzero(self.rows[:, i] == 1)

    def permute_primaries(self, perm) -> np.ndarray:
        """
        Component index map induced by relabelling primary cluster i as perm[i].
        The outward and all-ones rows are fixed points.
        """
        perm = np.asarray(perm, dtype=np.int64)
        new_rows = np.zeros_like(self.rows)
        new_rows[:, perm] = self.rows
        return new_rows @ (1 << np.arange(self.k))


@lru_cache(maxsize=None)
def _cached_rows(k: int) -> np.ndarray:
    h = np.arange(2 ** k)[:, None]
    rows = ((h >> np.arange(k)[None, :]) & 1).astype(np.int64)
    rows.setflags(write=False)
    return rows


def connection_matrix(k: int) -> ConnectionMatrix:
    if not isinstance(k, (int, np.integer)) or not 1 <= int(k) <= MAX_K:
        raise ConfigurationError(f"k must be an integer in [1, {MAX_K}], got {k}", key="model.k")
    return ConnectionMatrix(rows=_cached_rows(int(k)))


def log_multiple_weights(pi: np.ndarray, U: ConnectionMatrix) -> np.ndarray:
    """
    log pi*_h = sum_i u_hi log pi_i + (1 - u_hi) log(1 - pi_i).

    `pi` may be a k-vector (global weights) or a k x p matrix of per-unit weights;
    the result is k* long or p x k* respectively.
    """
    pi = np.asarray(pi, dtype=float)
    if pi.shape[0] != U.k:
        raise DomainError(f"weights have leading dimension {pi.shape[0]}, expected k={U.k}")
    if not np.all(np.isfinite(pi)) or np.any(pi <= 0.0) or np.any(pi >= 1.0):
        raise DomainError("primary weights must lie strictly inside (0, 1)")
    return combine_log_weights(np.log(pi), np.log1p(-pi), U)


def combine_log_weights(log_p: np.ndarray, log_q: np.ndarray, U: ConnectionMatrix) -> np.ndarray:
    """Same product as log_multiple_weights, from precomputed log pi and log(1 - pi)."""
    rows = U.rows.astype(float)
    return (rows @ log_p + (1.0 - rows) @ log_q).T


def multiple_weights(pi: np.ndarray, U: ConnectionMatrix) -> np.ndarray:
    return np.exp(log_multiple_weights(pi, U))


def clamp_weights(pi: np.ndarray) -> np.ndarray:
    return np.clip(pi, WEIGHT_EPS, 1.0 - WEIGHT_EPS)
