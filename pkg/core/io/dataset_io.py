# core/io/dataset_io.py
from __future__ import annotations

import io
import logging
import re
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from core.errors import DataFormatError
from core.model.types import Dataset
from core.utils.file_utils import atomic_write_text

logger = logging.getLogger(__name__)

_COUNT_COLUMN = re.compile(r"^count_(\d+)$")
# `k=<int>` inside a comment line names the number of primary clusters behind the truth column.
_TRUTH_K = re.compile(r"(?:^|\s)k=(\d+)(?:\s|$)")


# ---------------- reading ----------------

def comment_truth_k(line: str) -> Optional[int]:
    m = _TRUTH_K.search(line.lstrip().lstrip("#"))
    return int(m.group(1)) if m else None


def _parse_header(fields: List[str], path: str, line_no: int):
    if not fields or fields[0] != "region_id":
        raise DataFormatError("header must start with 'region_id'", path=path, line=line_no)
    rest = fields[1:]
    has_position = bool(rest) and rest[0] == "position"
    if has_position:
        rest = rest[1:]
    has_truth = bool(rest) and rest[-1] == "truth"
    if has_truth:
        rest = rest[:-1]
    if not rest:
        raise DataFormatError("header has no count_<d> columns", path=path, line=line_no)
    for d, name in enumerate(rest, start=1):
        m = _COUNT_COLUMN.match(name)
        if not m or int(m.group(1)) != d:
            raise DataFormatError(f"expected column 'count_{d}', found '{name}'", path=path, line=line_no)
    return has_position, len(rest), has_truth


def _parse_count(token: str, path: str, line_no: int) -> int:
    try:
        value = float(token)
    except ValueError:
        raise DataFormatError(f"count '{token}' is not a number", path=path, line=line_no)
    if not np.isfinite(value) or value != int(value):
        raise DataFormatError(f"count '{token}' is not an integer", path=path, line=line_no)
    if value < 0:
        raise DataFormatError(f"count '{token}' is negative", path=path, line=line_no)
    return int(value)


def parse_dataset(text: str, path: str = "<string>") -> Dataset:
    """
    Tab-separated table: `region_id [position] count_1 .. count_D [truth]`.
    Lines starting with '#' and blank lines are skipped.
    """
    header = None
    region_ids: List[str] = []
    positions: List[float] = []
    counts: List[List[int]] = []
    truth: List[int] = []
    truth_k: Optional[int] = None

    for line_no, raw in enumerate(io.StringIO(text), start=1):
        line = raw.rstrip("\r\n")
        if line.lstrip().startswith("#"):
            if header is None and truth_k is None:
                truth_k = comment_truth_k(line)
            continue
        if not line.strip():
            continue
        fields = line.split("\t")
        if header is None:
            header = _parse_header(fields, path, line_no)
            has_position, D, has_truth = header
            width = 1 + int(has_position) + D + int(has_truth)
            continue

        if len(fields) != width:
            raise DataFormatError(f"expected {width} columns, found {len(fields)}", path=path, line=line_no)
        region_ids.append(fields[0])
        col = 1
        if has_position:
            try:
                positions.append(float(fields[1]))
            except ValueError:
                raise DataFormatError(f"position '{fields[1]}' is not a number", path=path, line=line_no)
            col = 2
        counts.append([_parse_count(tok, path, line_no) for tok in fields[col:col + D]])
        if has_truth:
            token = fields[-1]
            if not token.isdigit():
                raise DataFormatError(f"truth '{token}' is not a component index", path=path, line=line_no)
            truth.append(int(token))

    if header is None:
        raise DataFormatError("no header line", path=path)
    if not counts:
        raise DataFormatError("no data rows", path=path)

    return Dataset(
        counts=np.asarray(counts, dtype=np.int64),
        positions=np.asarray(positions) if has_position else None,
        truth=np.asarray(truth, dtype=np.int64) if has_truth else None,
        region_ids=region_ids,
        truth_k=truth_k if has_truth else None,
    )


def read_dataset(path: Union[str, Path]) -> Dataset:
    p = Path(path).expanduser()
    data = parse_dataset(p.read_text(encoding="utf-8"), path=str(p))
    logger.info("Read %d units x %d conditions from %s", data.p, data.D, p)
    return data


# ---------------- writing ----------------

def format_dataset(data: Dataset, comment: Optional[str] = None) -> str:
    columns = ["region_id"]
    if data.has_positions:
        columns.append("position")
    columns += [f"count_{d}" for d in range(1, data.D + 1)]
    if data.truth is not None:
        columns.append("truth")

    out = io.StringIO()
    lines = comment.splitlines() if comment else []
    if data.truth is not None and data.truth_k is not None and all(comment_truth_k(line) is None for line in lines):
        lines.append(f"k={data.truth_k}")
    for line in lines:
        out.write(f"# {line}\n")
    out.write("\t".join(columns) + "\n")
    for j in range(data.p):
        row = [data.region_ids[j]]
        if data.has_positions:
            row.append(repr(float(data.positions[j])))
        row += [str(int(c)) for c in data.counts[j]]
        if data.truth is not None:
            row.append(str(int(data.truth[j])))
        out.write("\t".join(row) + "\n")
    return out.getvalue()


def write_dataset(data: Dataset, path: Union[str, Path], comment: Optional[str] = None) -> Path:
    target = atomic_write_text(path, format_dataset(data, comment))
    logger.info("Wrote %d units to %s", data.p, target)
    return target
