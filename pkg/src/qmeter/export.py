"""Deterministic CSV / JSON artifacts and the per-run provenance record.

Column order is fixed: state files are (x, X, re, im), marginal files are
(coordinate, probability). Every float is written with 15 significant digits
and data files carry no timestamps, so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

STATE_COLUMNS = ("x", "X", "re", "im")
MARGINAL_COLUMNS = ("coordinate", "probability")


def fmt(v) -> str:
    v = float(v)
    if v == 0.0:
        return "0"  # folds -0.0
    return format(v, ".15g")


def _clean(obj):
    """Round floats to 15 significant digits; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return str(v)
        return float(fmt(v))
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def state_csv(xs, Xs, psi) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATE_COLUMNS)
    for i, x in enumerate(xs):
        sx = fmt(x)
        row = psi[i]
        for j, X in enumerate(Xs):
            w.writerow((sx, fmt(X), fmt(row[j].real), fmt(row[j].imag)))
    return buf.getvalue()


def state_json(xs, Xs, psi) -> str:
    return dumps_json({"x": xs, "X": Xs, "re": psi.real, "im": psi.imag})


def marginal_csv(coords, probs) -> str:
    lines = [",".join(MARGINAL_COLUMNS)]
    lines += [f"{fmt(c)},{fmt(p)}" for c, p in zip(coords, probs)]
    return "\n".join(lines) + "\n"


def read_state(path):
    """Inverse of ``state_csv`` / ``state_json``: returns (x, X, psi[ix, iX])."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        d = json.loads(text)
        return np.asarray(d["x"], float), np.asarray(d["X"], float), np.asarray(d["re"]) + 1j * np.asarray(d["im"])
    rows = list(csv.reader(io.StringIO(text)))
    if tuple(rows[0]) != STATE_COLUMNS:
        raise ValueError(f"{path}: expected header {','.join(STATE_COLUMNS)}")
    a = np.array(rows[1:], dtype=float)
    xs = np.unique(a[:, 0])
    Xs = np.unique(a[:, 1])
    if len(xs) * len(Xs) != len(a):
        raise ValueError(f"{path}: rows do not form a rectangular (x, X) grid")
    psi = (a[:, 2] + 1j * a[:, 3]).reshape(len(xs), len(Xs))
    return xs, Xs, psi


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunRecord:
    """Provenance for one run. Lives beside the data files, never inside them."""

    scenario_hash: str
    engine: str
    version: str
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    norm: dict = field(default_factory=dict)

    def add_output(self, path, data: bytes):
        self.outputs.append({"path": str(path), "sha256": sha256_bytes(data)})

    def to_json(self) -> str:
        return dumps_json(asdict(self))
