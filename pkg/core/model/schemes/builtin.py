# core/model/schemes/builtin.py
from __future__ import annotations

import numpy as np

from .base_scheme import CombinationScheme


class AdditiveScheme(CombinationScheme):
    name = "additive"

    def _combine_selected(self, selected: np.ndarray) -> float:
        return selected.sum()

    def _combine_rows(self, rows, n, mu):
        return rows @ mu


class ArithmeticMeanScheme(CombinationScheme):
    """Co-dominance of order 1."""
    name = "codominance1"

    def _combine_selected(self, selected: np.ndarray) -> float:
        return selected.mean()

    def _combine_rows(self, rows, n, mu):
        return (rows @ mu) / n[:, None]


class GeometricMeanScheme(CombinationScheme):
    """Co-dominance of order 0."""
    name = "codominance0"

    def _combine_selected(self, selected: np.ndarray) -> float:
        return float(np.exp(np.log(selected).mean()))

    def _combine_rows(self, rows, n, mu):
        return np.exp((rows @ np.log(mu)) / n[:, None])
