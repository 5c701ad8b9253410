# core/evaluate/metrics.py
from __future__ import annotations

from itertools import permutations
from typing import Dict, List, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from core.errors import DomainError
from core.model.connection import ConnectionMatrix


def _check_pair(map_alloc, truth, n_components: int):
    est = np.asarray(map_alloc, dtype=np.int64).ravel()
    ref = np.asarray(truth, dtype=np.int64).ravel()
    if est.shape != ref.shape:
        raise DomainError(f"allocation has {est.shape[0]} units, truth has {ref.shape[0]}")
    if est.size == 0:
        raise DomainError("cannot score an empty allocation")
    for name, arr in (("allocation", est), ("truth", ref)):
        if arr.min() < 0 or arr.max() >= n_components:
            raise DomainError(f"{name} uses component indices outside 0..{n_components - 1} (k mismatch)")
    return est, ref


def misclassification(map_alloc, truth, U: ConnectionMatrix, truth_k: Optional[int] = None) -> float:
    """
    Fraction of units whose component differs from the truth, minimised over the k!
    relabellings of the primary clusters. Each relabelling moves the augmented
    components through U; the outward row stays fixed. `truth_k`, when known, is the
    number of primary clusters the truth was generated with and must equal U.k.
    """
    if truth_k is not None and int(truth_k) != U.k:
        raise DomainError(f"truth comes from k={int(truth_k)} primary clusters, allocation from k={U.k} (k mismatch)")
    est, ref = _check_pair(map_alloc, truth, U.n_components)
    best = 1.0
    for perm in permutations(range(U.k)):
        mapping = U.permute_primaries(perm)
        best = min(best, float(np.mean(mapping[est] != ref)))
        if best == 0.0:
            break
    return best


def misclassification_unstructured(labels, truth, n_components: int) -> float:
    """
    Error after the best one-to-one matching of estimated to true labels
    (Hungarian assignment on the confusion matrix). Used for the NegBinMix baseline,
    whose components carry no primary-cluster structure.
    """
    est, ref = _check_pair(labels, truth, n_components)
    confusion = np.zeros((n_components, n_components))
    np.add.at(confusion, (est, ref), 1.0)
    rows, cols = linear_sum_assignment(-confusion)
    return 1.0 - confusion[rows, cols].sum() / est.size


def primary_membership(alloc_probs: np.ndarray, U: ConnectionMatrix) -> np.ndarray:
    """p x k posterior probability that unit j belongs to primary cluster i."""
    return np.asarray(alloc_probs) @ U.rows.astype(float)


def component_occupancy(map_alloc, labels: List[str]) -> Dict[str, int]:
    counts = np.bincount(np.asarray(map_alloc, dtype=np.int64), minlength=len(labels))
    return {label: int(c) for label, c in zip(labels, counts)}
