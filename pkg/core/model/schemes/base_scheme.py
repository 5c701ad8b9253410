# core/model/schemes/base_scheme.py
from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np


class CombinationScheme(ABC):
    """
    Strategy interface mapping primary means to the mean of an augmented component.

    Implementations only combine the selected means; the outward row is handled
    here so every scheme returns theta_b for it.
    """
    name: str = ""

    def combine(self, u_h: np.ndarray, mu_d: np.ndarray, theta_b: float) -> float:
        u_h = np.asarray(u_h).astype(bool)
        if not u_h.any():
            return float(theta_b)
        return float(self._combine_selected(np.asarray(mu_d, dtype=float)[u_h]))

    def combine_all(self, rows: np.ndarray, mu: np.ndarray, theta_b: np.ndarray) -> np.ndarray:
        """
        Vectorised form: rows is k* x k, mu is k x D, theta_b has length D.
        Returns the k* x D matrix of component means.
        """
        rows = np.asarray(rows, dtype=float)
        n = rows.sum(axis=1)
        out = np.empty((rows.shape[0], mu.shape[1]))
        active = n > 0
        out[active] = self._combine_rows(rows[active], n[active], mu)
        out[~active] = theta_b
        return out

    @abstractmethod
    def _combine_selected(self, selected: np.ndarray) -> float:
        raise NotImplementedError

    @abstractmethod
    def _combine_rows(self, rows: np.ndarray, n: np.ndarray, mu: np.ndarray) -> np.ndarray:
        raise NotImplementedError
