from __future__ import annotations

import numpy as np

from .base_scheme import CombinationScheme
from .factory import SchemeFactory


def combine_means(u_h, mu_d, theta_b: float, scheme: str) -> float:
    """psi(u_h, mu_d): mean of the component with membership row u_h in one condition."""
    return SchemeFactory.get(scheme).combine(u_h, mu_d, theta_b)


def combined_means(rows: np.ndarray, mu: np.ndarray, theta_b, scheme: str) -> np.ndarray:
    """k* x D matrix of component means for every row of the connection matrix."""
    mu = np.asarray(mu, dtype=float)
    theta = np.broadcast_to(np.asarray(theta_b, dtype=float), (mu.shape[1],))
    return SchemeFactory.get(scheme).combine_all(rows, mu, theta)


__all__ = ["CombinationScheme", "SchemeFactory", "combine_means", "combined_means"]
