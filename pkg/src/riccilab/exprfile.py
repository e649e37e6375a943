"""Declarative chart / instance files: closed-form components as JSON text.

A file describes one chart metric and, optionally, soliton data on it:

    {
      "name": "my_cigar",
      "dim": 2,
      "coords": ["x", "y"],
      "domain": [[-6.0, 6.0], [-6.0, 6.0]],
      "metric": [["1/(1+x^2+y^2)", "0"], ["0", "1/(1+x^2+y^2)"]],
      "evaluable_outside": true,
      "potential": "-log(1+x^2+y^2)",
      "mu": 0.0,
      "trivial": false
    }

Expressions may use +, -, *, /, ^ (or **), parentheses, the coordinates,
numeric literals, pi, and the functions sin cos tan exp log sqrt sinh cosh
tanh atan asin acos.  They are parsed once with sympy and bound to the
package's jet-aware math namespace, so loaded metrics differentiate exactly
like the built-in ones.  `one_form` (a list of n expressions) may replace
`potential` for non-gradient instances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from . import jets
from .catalog import SolitonInstance, register_instance
from .geometry import Box, ChartMetric, register_metric

_FUNCS = {
    "sin": jets.sin, "cos": jets.cos, "tan": jets.tan,
    "exp": jets.exp, "log": jets.log, "sqrt": jets.sqrt,
    "sinh": jets.sinh, "cosh": jets.cosh, "tanh": jets.tanh,
    "atan": jets.arctan, "asin": jets.arcsin, "acos": jets.arccos,
    "pi": np.pi, "E": np.e,
}
_TRANSFORMS = standard_transformations + (convert_xor,)


def parse_scalar_expression(expr: str, coords: list[str]):
    """Compile one closed-form expression to a callable over coordinate jets."""
    symbols = {c: sympy.Symbol(c, real=True) for c in coords}
    tree = parse_expr(expr, local_dict=dict(symbols), transformations=_TRANSFORMS,
                      evaluate=True)
    extra = tree.free_symbols - set(symbols.values())
    if extra:
        raise ValueError(f"unknown symbols in expression {expr!r}: {sorted(map(str, extra))}")
    fn = sympy.lambdify([symbols[c] for c in coords], tree, modules=[_FUNCS])

    def call(xs):
        return fn(*xs)

    return call


@dataclass(frozen=True)
class LoadedChart:
    metric: ChartMetric
    instance: Optional[SolitonInstance]


def load_expression_file(path, register: bool = True) -> LoadedChart:
    """Read, compile, validate, and (by default) register a chart file."""
    data = json.loads(Path(path).read_text())
    for key in ("name", "dim", "coords", "domain", "metric"):
        if key not in data:
            raise ValueError(f"expression file missing required key '{key}'")
    n = int(data["dim"])
    coords = list(data["coords"])
    if len(coords) != n:
        raise ValueError("need one coordinate name per dimension")
    domain = np.asarray(data["domain"], dtype=float)
    if domain.shape != (n, 2):
        raise ValueError("domain must be a list of n [lo, hi] pairs")

    rows = data["metric"]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError("metric must be an n x n expression table")
    comp = [[parse_scalar_expression(str(rows[i][j]), coords) for j in range(n)]
            for i in range(n)]

    def g(xs):
        return [[comp[i][j](xs) for j in range(n)] for i in range(n)]

    metric = ChartMetric(
        name=str(data["name"]), dim=n,
        domain=Box(domain[:, 0], domain[:, 1]), g=g,
        evaluable_outside=bool(data.get("evaluable_outside", False)),
    )
    metric.validate()

    instance = None
    if "potential" in data or "one_form" in data:
        if "mu" not in data:
            raise ValueError("soliton data requires 'mu'")
        kwargs = dict(name=str(data["name"]), metric=metric, mu=float(data["mu"]),
                      trivial=bool(data.get("trivial", False)))
        if "potential" in data:
            kwargs["potential"] = parse_scalar_expression(str(data["potential"]), coords)
        else:
            forms = [parse_scalar_expression(str(e), coords) for e in data["one_form"]]
            if len(forms) != n:
                raise ValueError("one_form needs n component expressions")
            kwargs["one_form"] = lambda xs: [f(xs) for f in forms]
        instance = SolitonInstance(**kwargs)

    if register:
        register_metric(metric, validate=False)
        if instance is not None:
            register_instance(instance)
    return LoadedChart(metric=metric, instance=instance)


def grid_field_from_expression(expr: str, coords: list[str], nodes) -> np.ndarray:
    """Evaluate a scalar expression on grid node arrays (for minimize-w --R)."""
    fn = parse_scalar_expression(expr, coords)
    out = fn(list(nodes))
    return np.broadcast_to(np.asarray(out, dtype=float), nodes[0].shape).copy()
