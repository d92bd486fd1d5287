"""JSON forms of problems, points and factory specs.  Rationals travel as ``"p/q"`` strings."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from . import bernstein, linalg
from .generic import FactorySpec
from .linalg import format_rational, parse_rational
from .polytope import AffineSubspace


def _fmt_vec(v) -> list[str]:
    return [format_rational(parse_rational(c)) for c in v]


def _fmt_mat(m) -> list[list[str]]:
    return [_fmt_vec(row) for row in m]


def load_json_arg(arg: str) -> Any:
    """A path to a JSON file, or a JSON literal."""
    if os.path.exists(arg):
        with open(arg) as fh:
            return json.load(fh)
    return json.loads(arg)


def parse_point(data) -> tuple[Fraction, ...]:
    """Flat vector, or a square matrix flattened row-major."""
    if isinstance(data, dict):
        data = data.get("x", data.get("point"))
    if data and isinstance(data[0], list):
        return tuple(parse_rational(c) for row in data for c in row)
    return linalg.as_vector(data)


@dataclass
class Problem:
    w: linalg.RMatrix
    b: linalg.RVector
    x: tuple[Fraction, ...] | None = None
    kind: str | None = None

    def subspace(self) -> AffineSubspace:
        return AffineSubspace(self.w, self.b)

    def to_json(self) -> dict:
        out: dict = {"W": _fmt_mat(self.w), "b": _fmt_vec(self.b)}
        if self.x is not None:
            out["x"] = _fmt_vec(self.x)
        if self.kind is not None:
            out["kind"] = self.kind
        return out


def problem_from_json(data: dict) -> Problem:
    if "W" not in data or "b" not in data:
        raise ValueError("problem file needs 'W' and 'b'")
    w = linalg.as_matrix(data["W"])
    b = linalg.as_vector(data["b"])
    if len(w) != len(b):
        raise linalg.DimensionError(f"W has {len(w)} rows but b has {len(b)} entries")
    x = parse_point(data["x"]) if data.get("x") is not None else None
    if x is not None:
        n = linalg.shape(w)[1]
        if len(x) != n or linalg.matvec(w, x) != b or not all(0 <= c <= 1 for c in x):
            raise ValueError("x must satisfy Wx = b exactly and lie in [0,1]^n")
    kind = data.get("kind")
    if kind not in (None, "generic", "ksubset", "matching"):
        raise ValueError(f"unknown problem kind {kind!r}")
    return Problem(w, b, x, kind)


def _prov_out(prov: dict) -> dict:
    out = {}
    for key, val in prov.items():
        if isinstance(val, Fraction):
            out[key] = format_rational(val)
        elif isinstance(val, (list, tuple)) and val and isinstance(val[0], Fraction):
            out[key] = _fmt_vec(val)
        else:
            out[key] = val
    return out


def _prov_in(prov: dict) -> dict:
    out = dict(prov)
    if "radius" in out:
        out["radius"] = parse_rational(out["radius"])
    if "b_t" in out:
        out["b_t"] = list(linalg.as_vector(out["b_t"]))
    return out


def spec_to_json(spec: FactorySpec) -> dict:
    return {
        "subspace": {"W": _fmt_mat(spec.subspace.w), "b": _fmt_vec(spec.subspace.b)},
        "weights": [{"vertex": _fmt_vec(v), "polynomial": bernstein.to_json(p)} for v, p in spec.weights],
        "provenance": _prov_out(spec.provenance),
    }


def spec_from_json(data: dict) -> FactorySpec:
    try:
        sub = data["subspace"]
        h = AffineSubspace(sub["W"], sub["b"])
        weights = tuple((linalg.as_vector(item["vertex"]), bernstein.from_json(item["polynomial"])) for item in data["weights"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed factory file: {exc}") from exc
    return FactorySpec(h, weights, _prov_in(data.get("provenance", {"kind": "generic"})))
