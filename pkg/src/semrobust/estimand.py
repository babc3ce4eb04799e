"""Estimands: expression trees over conditional covariances.

An estimand is a closed-form function of the observed covariance matrix.
Two estimands are the same when they agree as functions, which is decided
by evaluating both on random positive-definite matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import DegenerateConditioning, DegenerateEvaluation, InconclusiveError, InputError
from .numerics import CovarianceMatrix, conditional_cov

DENOM_TOL = 1e-10
DISTINCT_RTOL = 1e-6


@dataclass(frozen=True)
class CondCov:
    a: str
    b: str
    z: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(self.z))
        if self.a in self.z or self.b in self.z:
            raise InputError(f"conditioning set {list(self.z)} contains {self.a!r} or {self.b!r}")
        if len(set(self.z)) != len(self.z):
            raise InputError(f"conditioning set {list(self.z)} has duplicates")


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Ratio:
    num: "Estimand"
    den: "Estimand"

    def __post_init__(self):
        if isinstance(self.den, Constant) and self.den.value == 0:
            raise InputError("ratio with a constant zero denominator")


@dataclass(frozen=True)
class Product:
    factors: tuple["Estimand", ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True)
class Sum:
    terms: tuple["Estimand", ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


Estimand = Union[CondCov, Constant, Ratio, Product, Sum]


def from_iv_pair(x: str, y: str, w: str, z: Iterable[str] = ()) -> Ratio:
    """cov(y, w | z) / cov(x, w | z)."""
    z = tuple(z)
    return Ratio(CondCov(y, w, z), CondCov(x, w, z))


def product(factors: Iterable[Estimand]) -> Estimand:
    factors = tuple(factors)
    if not factors:
        return Constant(1.0)
    return factors[0] if len(factors) == 1 else Product(factors)


def total(terms: Iterable[Estimand]) -> Estimand:
    terms = tuple(terms)
    if not terms:
        return Constant(0.0)
    return terms[0] if len(terms) == 1 else Sum(terms)


def variables(e: Estimand) -> set[str]:
    if isinstance(e, CondCov):
        return {e.a, e.b, *e.z}
    if isinstance(e, Constant):
        return set()
    if isinstance(e, Ratio):
        return variables(e.num) | variables(e.den)
    children = e.factors if isinstance(e, Product) else e.terms
    return set().union(*(variables(c) for c in children))


def evaluate(e: Estimand, s: CovarianceMatrix) -> float:
    if isinstance(e, CondCov):
        return conditional_cov(s, e.a, e.b, e.z)
    if isinstance(e, Constant):
        return float(e.value)
    if isinstance(e, Ratio):
        den = evaluate(e.den, s)
        if abs(den) < DENOM_TOL:
            raise DegenerateEvaluation(f"denominator {render(e.den)} vanishes ({den:.3g})")
        return evaluate(e.num, s) / den
    if isinstance(e, Product):
        return float(np.prod([evaluate(f, s) for f in e.factors]))
    if isinstance(e, Sum):
        return float(sum(evaluate(t, s) for t in e.terms))
    raise TypeError(f"not an estimand: {e!r}")


def random_pd_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """A A^T + 0.1 I with standard normal A: full support on PD matrices."""
    A = rng.standard_normal((n, n))
    return A @ A.T + 0.1 * np.eye(n)


def differ(a: float, b: float, rtol: float = DISTINCT_RTOL) -> bool:
    diff = abs(a - b)
    return diff > rtol * max(abs(a), abs(b)) and diff > 1e-12


def distinct(
    e1: Estimand,
    e2: Estimand,
    n_probes: int = 8,
    seed: int = 0,
    max_redraws: int | None = None,
) -> bool:
    """Whether two estimands differ as functions of an arbitrary covariance matrix."""
    if e1 == e2:
        return False
    names = tuple(sorted(variables(e1) | variables(e2)))
    rng = np.random.default_rng(seed)
    budget = 10 * n_probes if max_redraws is None else max_redraws
    good = 0
    while good < n_probes:
        s = CovarianceMatrix(names, random_pd_matrix(len(names), rng))
        try:
            v1, v2 = evaluate(e1, s), evaluate(e2, s)
        except (DegenerateEvaluation, DegenerateConditioning):
            budget -= 1
            if budget < 0:
                raise InconclusiveError("too many degenerate probes while comparing estimands")
            continue
        good += 1
        if differ(v1, v2):
            return True
    return False


# -- rendering -------------------------------------------------------------


def render(e: Estimand) -> str:
    """Canonical text form using explicit cov(a,b|z) notation."""
    if isinstance(e, CondCov):
        cond = f"|{','.join(e.z)}" if e.z else ""
        return f"cov({e.a},{e.b}{cond})"
    if isinstance(e, Constant):
        return _num(e.value)
    if isinstance(e, Ratio):
        return f"{_wrap(e.num, Ratio)}/{_wrap(e.den, Ratio)}"
    if isinstance(e, Product):
        return "*".join(_wrap(f, Product) for f in e.factors)
    return " + ".join(_wrap(t, Sum) for t in e.terms)


def _wrap(e: Estimand, parent: type) -> str:
    text = render(e)
    if isinstance(e, (CondCov, Constant)):
        return text
    if parent is Sum and not isinstance(e, Sum):
        return text
    return f"({text})"


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def render_regression(e: Estimand) -> str:
    """Regression-coefficient notation, valid for standardized variables.

    Display sugar only: cov(a,b|z)/cov(b,b|z) prints as R_{ab.z} and an
    unconditional covariance as R_ab. Anything else falls back to cov form.
    """
    if isinstance(e, Ratio) and isinstance(e.num, CondCov) and isinstance(e.den, CondCov):
        n, d = e.num, e.den
        if d.a == d.b == n.b and n.z == d.z:
            return _reg(n.a, n.b, n.z)
        if not n.z and not d.z and n.b == d.b and n.a != n.b and d.a != d.b:
            return f"{_reg(n.a, n.b)}/{_reg(d.a, d.b)}"
    if isinstance(e, CondCov) and not e.z:
        return "1" if e.a == e.b else _reg(e.a, e.b)
    if isinstance(e, Product):
        return "·".join(_reg_wrap(f) for f in e.factors)
    if isinstance(e, Sum):
        return " + ".join(render_regression(t) for t in e.terms)
    if isinstance(e, Ratio):
        return f"{_reg_wrap(e.num)}/{_reg_wrap(e.den)}"
    return render(e)


def _reg_wrap(e: Estimand) -> str:
    text = render_regression(e)
    return f"({text})" if isinstance(e, Sum) else text


def _reg(a: str, b: str, z: tuple[str, ...] = ()) -> str:
    names = [a, b, *z]
    sep = "" if all(len(v) == 1 for v in names) else ","
    body = f"{a}{sep}{b}"
    if z:
        return f"R_{{{body}·{sep.join(z)}}}"
    return f"R_{body}" if not sep else f"R_{{{body}}}"


# -- structured encoding ---------------------------------------------------


def to_tree(e: Estimand) -> dict:
    if isinstance(e, CondCov):
        return {"op": "condcov", "a": e.a, "b": e.b, "given": list(e.z)}
    if isinstance(e, Constant):
        return {"op": "const", "value": e.value}
    if isinstance(e, Ratio):
        return {"op": "ratio", "num": to_tree(e.num), "den": to_tree(e.den)}
    if isinstance(e, Product):
        return {"op": "product", "factors": [to_tree(f) for f in e.factors]}
    return {"op": "sum", "terms": [to_tree(t) for t in e.terms]}


def from_tree(d: dict) -> Estimand:
    op = d["op"]
    if op == "condcov":
        return CondCov(d["a"], d["b"], tuple(d["given"]))
    if op == "const":
        return Constant(d["value"])
    if op == "ratio":
        return Ratio(from_tree(d["num"]), from_tree(d["den"]))
    if op == "product":
        return Product(tuple(from_tree(f) for f in d["factors"]))
    if op == "sum":
        return Sum(tuple(from_tree(t) for t in d["terms"]))
    raise InputError(f"unknown estimand node {op!r}")
