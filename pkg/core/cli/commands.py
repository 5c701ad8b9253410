# core/cli/commands.py
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from core.errors import DataFormatError, DomainError
from core.evaluate import misclassification, misclassification_unstructured, primary_membership, summarize_chain
from core.io.config_loader import (
    apply_overrides,
    build_fit_options,
    build_model_config,
    build_sampler_settings,
    build_scenario,
    flatten,
    load_config,
)
from core.io.dataset_io import comment_truth_k, parse_dataset, read_dataset, write_dataset
from core.io.output_writer import (
    ALLOCATIONS_FILE,
    SUMMARY_FILE,
    TRACK_FILE,
    format_report,
    optional_file,
    read_allocations,
    read_json,
    read_track,
    write_fit,
    write_json,
)
from core.mcmc import CarMamSampler, MamSampler, NegBinMixSampler, run_chains
from core.mcmc.base_sampler import BaseSampler
from core.model.connection import connection_matrix
from core.model.types import Dataset
from core.simulate import simulate_scenario
from core.utils.file_utils import atomic_write_text, require_file

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# ---------------- simulate ----------------

def cmd_simulate(config: PathLike, out_path: PathLike, overrides: Optional[Dict[str, Any]] = None) -> Dataset:
    """Simulates the scenario in `config` (a path or a bundled scenario name) into a TSV file."""
    cfg = apply_overrides(load_config(config), overrides or {})
    scenario = build_scenario(cfg)
    data = simulate_scenario(scenario)
    k = data.truth_k if data.truth_k is not None else scenario.k
    comment = f"scenario kind={scenario.kind} k={k} scheme={scenario.scheme} seed={scenario.seed}"
    write_dataset(data, out_path, comment=comment)
    return data


# ---------------- fit ----------------

def build_sampler(cfg: Dict[str, Any]) -> BaseSampler:
    model_cfg = build_model_config(cfg)
    settings = build_sampler_settings(cfg)
    fit = build_fit_options(cfg)
    if fit.model == "mam":
        return MamSampler(model_cfg, settings)
    if fit.model == "car-mam":
        return CarMamSampler(model_cfg, settings)
    n = fit.n_components or model_cfg.n_components
    return NegBinMixSampler(n, settings, hyper=model_cfg.hyper, fix_first_mean=fit.fix_first_mean)


def cmd_fit(
    config: Optional[PathLike],
    data_path: PathLike,
    out_dir: PathLike,
    overrides: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Fits mam / car-mam / negbinmix (fit.model) and writes draws, allocations and a
    JSON summary to out_dir. Returns the summary record.
    """
    cfg = apply_overrides(load_config(config), overrides or {})
    data = read_dataset(data_path)
    sampler = build_sampler(cfg)
    chains = run_chains(sampler, data)

    summary = summarize_chain(chains[0], chains[1:]).to_dict()
    summary["component_labels"] = chains[0].component_labels
    summary["n_chains"] = len(chains)
    summary["chain_seeds"] = [c.seed for c in chains]
    summary["config"] = flatten(cfg)
    summary["final_scales"] = chains[0].extra.get("final_scales", {})
    fitted_k = structured_k(chains[0].component_labels)
    if data.truth is not None and data.truth_k is not None and fitted_k not in (None, data.truth_k):
        logger.warning("Truth comes from k=%d, fit used k=%d; skipping misclassification", data.truth_k, fitted_k)
    elif data.truth is not None:
        summary["misclassification"] = _score(chains[0].map_alloc, data.truth, chains[0].component_labels, data.truth_k)
    write_fit(out_dir, chains, data.region_ids, summary)
    return summary


# ---------------- evaluate ----------------

def structured_k(labels: List[str]) -> Optional[int]:
    """k when the labels are the rows of a connection matrix, None otherwise."""
    if not labels or any(set(label) - {"0", "1"} for label in labels):
        return None
    k = len(labels[0])
    if len(labels) != 2 ** k:
        return None
    return k if labels == connection_matrix(k).labels() else None


def _score(map_alloc: np.ndarray, truth: np.ndarray, labels: List[str], truth_k: Optional[int] = None) -> float:
    k = structured_k(labels)
    if k is not None:
        return misclassification(map_alloc, truth, connection_matrix(k), truth_k=truth_k)
    return misclassification_unstructured(map_alloc, truth, len(labels))


def _read_truth(path: PathLike) -> Tuple[np.ndarray, Optional[int]]:
    """
    Truth column of a dataset TSV (with its `k=` comment when present), or a file
    with one component index per line.
    """
    p = require_file(path)
    text = p.read_text(encoding="utf-8")
    first = next((line for line in text.splitlines() if line.strip() and not line.startswith("#")), "")
    if first.startswith("region_id"):
        data = parse_dataset(text, path=str(p))
        if data.truth is None:
            raise DataFormatError("dataset has no truth column", path=str(p))
        return data.truth, data.truth_k
    values = []
    truth_k: Optional[int] = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        token = line.strip()
        if token.startswith("#"):
            truth_k = comment_truth_k(token) if truth_k is None else truth_k
            continue
        if not token:
            continue
        if not token.isdigit():
            raise DataFormatError(f"'{token}' is not a component index", path=str(p), line=line_no)
        values.append(int(token))
    return np.asarray(values, dtype=np.int64), truth_k


def cmd_evaluate(alloc_path: PathLike, truth_path: PathLike, out_path: PathLike) -> Dict[str, Any]:
    units, map_alloc, labels, _ = read_allocations(alloc_path)
    truth, truth_k = _read_truth(truth_path)
    if truth.shape[0] != map_alloc.shape[0]:
        raise DomainError(f"allocations cover {map_alloc.shape[0]} units, truth has {truth.shape[0]}")
    k = structured_k(labels)
    record = {
        "misclassification": _score(map_alloc, truth, labels, truth_k),
        "n_units": int(map_alloc.shape[0]),
        "n_components": len(labels),
        "alignment": "primary_permutation" if k is not None else "assignment",
    }
    write_json(record, out_path)
    logger.info("Misclassification %.4f over %d units", record["misclassification"], record["n_units"])
    return record


# ---------------- report ----------------

def cmd_report(fit_dir: PathLike, data_path: PathLike, out_path: PathLike) -> int:
    """
    Plot-ready CSV: position, mean count over replicates, MAP component and one track
    column per primary cluster (posterior mean weights for CAR-MAM, membership
    probabilities for MAM) or per component for the baseline. Returns the row count.
    """
    root = Path(fit_dir).expanduser()
    units, map_alloc, labels, probs = read_allocations(root / ALLOCATIONS_FILE)
    summary = read_json(root / SUMMARY_FILE)
    data = read_dataset(data_path)
    if len(units) != data.p:
        raise DomainError(f"fit has {len(units)} units but the dataset has {data.p}")

    k = structured_k(labels)
    track_path = optional_file(root, TRACK_FILE)
    if summary.get("model") == "car-mam":
        if track_path is None:
            raise FileNotFoundError(f"No such file: {root / TRACK_FILE}")
        track = read_track(track_path)
        track_names = [f"track_{i + 1}" for i in range(track.shape[1])]
    elif k is not None:
        track = primary_membership(probs, connection_matrix(k))
        track_names = [f"track_{i + 1}" for i in range(k)]
    else:
        track = probs
        track_names = [f"prob_{label}" for label in labels]

    header = ["region_id", "position", "mean_count", "map_component", "map_label"] + track_names
    mean_counts = data.counts.mean(axis=1)
    rows = []
    for j in range(data.p):
        position = float(data.positions[j]) if data.has_positions else ""
        h = int(map_alloc[j])
        rows.append([units[j], position, float(mean_counts[j]), h, labels[h]] + [float(v) for v in track[j]])
    atomic_write_text(out_path, format_report(rows, header))
    logger.info("Wrote %d report rows to %s", len(rows), out_path)
    return len(rows)


__all__ = [
    "build_sampler",
    "cmd_evaluate",
    "cmd_fit",
    "cmd_report",
    "cmd_simulate",
    "structured_k",
]
