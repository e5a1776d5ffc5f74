"""Problem-instance files.

An instance is a JSON object::

    {
      "name": "bsc-0.1",                       # optional
      "x_size": 2, "y_size": 2, "xhat_size": 2,
      "p_xy": [["9/20", "1/20"], ["1/20", "9/20"]],
      "distortion": [[0, 1], [1, 0]],
      "delta": ["1/5"],                         # optional default list
      "rate": [0.5],                            # optional default list
      "labels": {"x": ["a", "b"], ...}          # optional
    }

Matrices are row-major, nested or flat. P_XY has X along rows and Y along
columns. Probabilities may be floats or rationals ("num/den" strings or
integers); distortion values must be rational, since the exact oracles depend
on them.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import NotRationalError, SchemaError
from .probability import Alphabet, DistortionMatrix, JointPmf, as_fraction
from .rd import delta_min

_KEYS = {"name", "x_size", "y_size", "xhat_size", "p_xy", "distortion", "delta", "rate", "labels", "description"}


@dataclass
class ProblemInstance:
    p_xy: JointPmf
    d: DistortionMatrix
    deltas: list = field(default_factory=list)
    rates: list[float] = field(default_factory=list)
    name: str = ""
    delta_min: Fraction | float = 0.0
    # one entry per default delta: True when delta >= delta_min
    feasible: list[bool] = field(default_factory=list)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.p_xy.shape[0], self.p_xy.shape[1], self.d.shape[1]

    @property
    def is_exact(self) -> bool:
        return self.p_xy.is_exact and self.d.is_exact

    @property
    def is_diagonal(self) -> bool:
        m = self.p_xy.mass
        return m.shape[0] == m.shape[1] and np.all(m[~np.eye(m.shape[0], dtype=bool)] == 0)


def _matrix(raw, rows: int, cols: int, what: str) -> list:
    if not isinstance(raw, list):
        raise SchemaError(f"{what} must be a list")
    if raw and all(not isinstance(v, list) for v in raw):
        if len(raw) != rows * cols:
            raise SchemaError(f"{what} has {len(raw)} entries, expected {rows * cols}")
        raw = [raw[i * cols:(i + 1) * cols] for i in range(rows)]
    if len(raw) != rows or any(not isinstance(r, list) or len(r) != cols for r in raw):
        raise SchemaError(f"{what} must be {rows} x {cols}")
    return raw


def _prob_entry(v, what):
    if isinstance(v, bool):
        raise SchemaError(f"{what}: booleans are not allowed")
    if isinstance(v, (str, numbers.Integral)):
        try:
            return as_fraction(v)
        except NotRationalError as exc:
            raise SchemaError(f"{what}: {exc}") from exc
    if isinstance(v, numbers.Real):
        return float(v)
    raise SchemaError(f"{what}: unsupported entry {v!r}")


def _rational_entry(v, what):
    if isinstance(v, bool) or not isinstance(v, (str, numbers.Integral)):
        raise SchemaError(f"{what}: {v!r} is not a rational; use an integer or a 'num/den' string")
    try:
        return as_fraction(v)
    except NotRationalError as exc:
        raise SchemaError(f"{what}: {exc}") from exc


def parse_delta(v) -> Fraction | float:
    """A distortion level: rational when given as integer or string, else float."""
    if isinstance(v, (str, numbers.Integral)) and not isinstance(v, bool):
        try:
            return as_fraction(v)
        except NotRationalError as exc:
            raise SchemaError(str(exc)) from exc
    if isinstance(v, numbers.Real) and not isinstance(v, bool):
        return float(v)
    raise SchemaError(f"bad distortion level {v!r}")


def _size(doc, key):
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise SchemaError(f"{key} must be a positive integer")
    return v


def _listify(v):
    if v is None:
        return []
    return v if isinstance(v, list) else [v]


def instance_from_dict(doc) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise SchemaError("instance must be a JSON object")
    unknown = set(doc) - _KEYS
    if unknown:
        raise SchemaError(f"unknown keys: {sorted(unknown)}")
    for k in ("x_size", "y_size", "xhat_size", "p_xy", "distortion"):
        if k not in doc:
            raise SchemaError(f"missing key {k!r}")
    nx, ny, nh = _size(doc, "x_size"), _size(doc, "y_size"), _size(doc, "xhat_size")
    p_raw = _matrix(doc["p_xy"], nx, ny, "p_xy")
    d_raw = _matrix(doc["distortion"], nx, nh, "distortion")
    p_vals = [[_prob_entry(v, "p_xy") for v in r] for r in p_raw]
    d_vals = [[_rational_entry(v, "distortion") for v in r] for r in d_raw]
    labels = doc.get("labels") or {}
    if not isinstance(labels, dict):
        raise SchemaError("labels must be an object")

    def alph(size, key):
        lab = labels.get(key)
        try:
            return Alphabet(size, lab)
        except ValueError as exc:
            raise SchemaError(f"labels.{key}: {exc}") from exc

    ax, ay, ah = alph(nx, "x"), alph(ny, "y"), alph(nh, "xhat")
    try:
        p_xy = JointPmf(p_vals, (ax, ay))
        d = DistortionMatrix(d_vals, ax, ah)
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from exc
    deltas = [parse_delta(v) for v in _listify(doc.get("delta"))]
    rates = []
    for r in _listify(doc.get("rate")):
        if isinstance(r, bool) or not isinstance(r, (numbers.Real, str)):
            raise SchemaError(f"bad rate {r!r}")
        try:
            rates.append(float(Fraction(r)) if isinstance(r, str) else float(r))
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"bad rate {r!r}") from exc
    dmin = delta_min(p_xy, d)
    feasible = [float(v) >= float(dmin) - 1e-12 for v in deltas]
    return ProblemInstance(p_xy, d, deltas, rates, str(doc.get("name", "")), dmin, feasible)


def load_instance(path) -> ProblemInstance:
    """Read an instance file. FileNotFoundError and SchemaError propagate."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return instance_from_dict(doc)


def _entry(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    return float(v)


def instance_to_dict(inst: ProblemInstance) -> dict:
    p = inst.p_xy.exact if inst.p_xy.is_exact else inst.p_xy.mass
    nx, ny, nh = inst.sizes
    out = {
        "x_size": nx, "y_size": ny, "xhat_size": nh,
        "p_xy": [[_entry(v) for v in r] for r in p],
        "distortion": [[_entry(v) for v in r] for r in inst.d.exact],
    }
    if inst.name:
        out["name"] = inst.name
    if inst.deltas:
        out["delta"] = [_entry(v) for v in inst.deltas]
    if inst.rates:
        out["rate"] = list(inst.rates)
    return out
