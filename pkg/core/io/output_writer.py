# core/io/output_writer.py
from __future__ import annotations

import csv
import io
import json
import logging
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from core.errors import DataFormatError
from core.mcmc.settings import ChainOutput
from core.utils.file_utils import atomic_write_text, require_file
from core.utils.json_utils import dumps_stable

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DRAWS_FILE = "draws.csv"
ALLOCATIONS_FILE = "allocations.tsv"
TRACK_FILE = "weight_track.tsv"
SUMMARY_FILE = "summary.json"
TIMING_FILE = "timing.json"


def _fmt(value: float) -> str:
    return repr(float(value))


# ---------------- draws ----------------

def draw_columns(draws: Dict[str, np.ndarray]) -> List[Tuple[str, str, Tuple[int, ...]]]:
    """(column name, parameter, index) per scalar of every stored parameter, sorted by parameter."""
    columns = []
    for name in sorted(draws):
        shape = draws[name].shape[1:]
        for idx in product(*(range(n) for n in shape)):
            label = name if not idx else f"{name}[{','.join(str(i + 1) for i in idx)}]"
            columns.append((label, name, idx))
    return columns


def format_draws(out: ChainOutput) -> str:
    columns = draw_columns(out.draws)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "log_lik"] + [c[0] for c in columns])
    for row, it in enumerate(out.stored_iterations):
        values = [out.draws[name][(row,) + idx] for _, name, idx in columns]
        writer.writerow([int(it), _fmt(out.log_lik_trace[it])] + [_fmt(v) for v in values])
    return buf.getvalue()


# ---------------- allocations ----------------

def format_allocations(out: ChainOutput, region_ids: List[str]) -> str:
    labels = out.component_labels
    lines = ["\t".join(["unit", "map_component", "map_label"] + [f"prob_{label}" for label in labels])]
    for j, unit in enumerate(region_ids):
        h = int(out.map_alloc[j])
        lines.append("\t".join([unit, str(h), labels[h]] + [_fmt(v) for v in out.alloc_probs[j]]))
    return "\n".join(lines) + "\n"


def read_allocations(path: PathLike) -> Tuple[List[str], np.ndarray, List[str], np.ndarray]:
    """(unit ids, MAP component indices, component labels, p x k* probabilities)."""
    p = require_file(path)
    rows = p.read_text(encoding="utf-8").splitlines()
    if not rows or not rows[0].startswith("unit\tmap_component"):
        raise DataFormatError("not an allocations file (bad header)", path=str(p), line=1)
    header = rows[0].split("\t")
    labels = [name[len("prob_"):] for name in header[3:]]
    units, alloc, probs = [], [], []
    for line_no, line in enumerate(rows[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(header):
            raise DataFormatError(f"expected {len(header)} columns, found {len(fields)}", path=str(p), line=line_no)
        try:
            alloc.append(int(fields[1]))
            probs.append([float(v) for v in fields[3:]])
        except ValueError as exc:
            raise DataFormatError(str(exc), path=str(p), line=line_no)
        units.append(fields[0])
    return units, np.asarray(alloc, dtype=np.int64), labels, np.asarray(probs).reshape(len(units), len(labels))


# ---------------- weight tracks ----------------

def format_track(track: np.ndarray, region_ids: List[str]) -> str:
    """k x p posterior mean weights, one row per unit."""
    lines = ["\t".join(["unit"] + [f"pi_{i + 1}" for i in range(track.shape[0])])]
    for j, unit in enumerate(region_ids):
        lines.append("\t".join([unit] + [_fmt(v) for v in track[:, j]]))
    return "\n".join(lines) + "\n"


def read_track(path: PathLike) -> np.ndarray:
    p = require_file(path)
    rows = p.read_text(encoding="utf-8").splitlines()[1:]
    try:
        return np.asarray([[float(v) for v in line.split("\t")[1:]] for line in rows])
    except ValueError as exc:
        raise DataFormatError(str(exc), path=str(p))


# ---------------- JSON records ----------------

def write_json(record: Any, path: PathLike) -> Path:
    return atomic_write_text(path, dumps_stable(record))


def read_json(path: PathLike) -> Dict[str, Any]:
    p = require_file(path)
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(exc.msg, path=str(p), line=exc.lineno)


# ---------------- fit directory ----------------

def write_fit(
    out_dir: PathLike,
    chains: List[ChainOutput],
    region_ids: List[str],
    summary: Dict[str, Any],
) -> Path:
    """
    Chain 0 goes to draws.csv / allocations.tsv (and weight_track.tsv for CAR-MAM);
    further chains to draws_chain<c>.csv. Runtimes are kept apart in timing.json so
    the other files only depend on config and seed.
    """
    root = Path(out_dir).expanduser()
    root.mkdir(parents=True, exist_ok=True)
    main = chains[0]
    atomic_write_text(root / DRAWS_FILE, format_draws(main))
    for c, extra in enumerate(chains[1:], start=2):
        atomic_write_text(root / f"draws_chain{c}.csv", format_draws(extra))
    atomic_write_text(root / ALLOCATIONS_FILE, format_allocations(main, region_ids))
    if main.weight_track is not None:
        atomic_write_text(root / TRACK_FILE, format_track(main.weight_track, region_ids))
    write_json(summary, root / SUMMARY_FILE)
    write_json({"runtime_sec": [c.runtime_sec for c in chains], "seeds": [c.seed for c in chains]}, root / TIMING_FILE)
    logger.info("Wrote fit outputs for %d chain(s) to %s", len(chains), root)
    return root


def format_report(rows: List[List[Any]], header: List[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def optional_file(root: PathLike, name: str) -> Optional[Path]:
    p = Path(root) / name
    return p if p.is_file() else None
