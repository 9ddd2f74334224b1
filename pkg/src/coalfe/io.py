"""Table readers and writers.

CSV files use ``.`` decimals, ``\\n`` line endings and 17 significant digits
so every float round-trips exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .lattice import LatticeError, ValueTable
from .meanfield import PairwiseEnergy


class InputFormatError(ValueError):
    """Malformed input file; the message names the file and line."""


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_mask_csv(path, value_column: str) -> np.ndarray:
    path = Path(path)
    with open(path, newline="") as fh:
        lines = list(csv.reader(fh))
    if not lines:
        raise InputFormatError(f"{path}:1: empty file")
    header = [h.strip() for h in lines[0]]
    if header != ["mask", value_column]:
        raise InputFormatError(f"{path}:1: expected header 'mask,{value_column}', got {','.join(header)!r}")
    entries = {}
    for lineno, row in enumerate(lines[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise InputFormatError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        try:
            mask = int(row[0])
            val = float(row[1])
        except ValueError:
            raise InputFormatError(f"{path}:{lineno}: cannot parse {','.join(row)!r}") from None
        if mask < 0 or mask in entries:
            raise InputFormatError(f"{path}:{lineno}: invalid or duplicate mask {mask}")
        if not np.isfinite(val):
            raise InputFormatError(f"{path}:{lineno}: non-finite {value_column}")
        entries[mask] = val
    if not entries:
        raise InputFormatError(f"{path}:2: no data rows")
    size = len(entries)
    if size & (size - 1) or size < 2 or set(entries) != set(range(size)):
        raise InputFormatError(f"{path}: masks must cover 0..2**N-1 exactly, got {size} rows")
    return np.array([entries[m] for m in range(size)])


def _read_json_table(path, key: str) -> np.ndarray:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict) or key not in doc:
        raise InputFormatError(f"{path}:1: expected an object with key {key!r}")
    arr = np.asarray(doc[key], dtype=float)
    n = doc.get("n_agents")
    if n is not None and arr.size != 1 << int(n):
        raise InputFormatError(f"{path}:1: {key} has {arr.size} entries, n_agents={n} needs {1 << int(n)}")
    return arr


def read_table(path, kind: str = "value") -> np.ndarray:
    """Dense lattice table from ``mask,<kind>`` CSV or ``{"n_agents", "<kind>s"}`` JSON."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return _read_json_table(path, kind + "s" if kind != "energy" else "energies")
    return _read_mask_csv(path, kind)


def read_value_table(path) -> ValueTable:
    try:
        return ValueTable(read_table(path, "value"))
    except LatticeError as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def write_value_table(path, v: ValueTable) -> Path:
    path = Path(path)
    if path.suffix.lower() == ".json":
        return write_json(path, {"n_agents": v.n_agents, "values": v.values.tolist()})
    return write_csv(path, ["mask", "value"], enumerate(v.values))


def read_pairwise(path) -> PairwiseEnergy:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}:{exc.lineno}: {exc.msg}") from None
    try:
        return PairwiseEnergy(doc["phi"], doc["psi"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"{path}:1: bad pairwise energy: {exc}") from None


def write_pairwise(path, e: PairwiseEnergy) -> Path:
    return write_json(path, {"phi": e.phi.tolist(), "psi": e.psi.tolist()})
