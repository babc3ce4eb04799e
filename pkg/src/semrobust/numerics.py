"""Numeric semantics of a linear SEM and a Jacobian-rank identifiability oracle.

The oracle here never looks at graphical criteria: it samples generic
parameter points, differentiates the parameter-to-covariance map and asks
whether the target can move along directions that leave the covariance
matrix unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DegenerateConditioning, InputError, NumericalFailure
from .graph import CausalGraph
from .targets import Query, TargetEdge

NULL_TOL = 1e-6
FD_STEP = 1e-5
RANK_RTOL = 1e-8
RICHARDSON_RTOL = 1e-5
DEFAULT_TRIALS = 3

COEF_RANGE = (0.2, 1.5)
ERRCOV_RANGE = (0.2, 0.8)


@dataclass(frozen=True)
class CovarianceMatrix:
    order: tuple[str, ...]
    entries: np.ndarray = field(compare=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        n = len(self.order)
        if m.shape != (n, n):
            raise InputError(f"covariance matrix has shape {m.shape}, expected {(n, n)}")
        if not np.allclose(m, m.T, rtol=0, atol=1e-12):
            raise InputError("covariance matrix is not symmetric")
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise InputError("covariance matrix is not positive definite") from None
        m.setflags(write=False)
        object.__setattr__(self, "order", tuple(self.order))
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "_pos", {v: i for i, v in enumerate(self.order)})

    def idx(self, names: Iterable[str]) -> list[int]:
        try:
            return [self._pos[v] for v in names]
        except KeyError as exc:
            raise InputError(f"variable {exc.args[0]!r} not in covariance matrix") from None

    def __getitem__(self, pair: tuple[str, str]) -> float:
        i, j = self.idx(pair)
        return float(self.entries[i, j])


@dataclass(frozen=True)
class Instantiation:
    """Parameter values for every edge and every error variance of ``graph``.

    ``err_cov`` is keyed by ordered variable pairs: ``(v, v)`` holds the
    error variance of ``v`` and ``(a, b)`` with ``a`` before ``b`` holds the
    covariance on the bidirected edge ``a <-> b``.
    """

    graph: CausalGraph
    coeff: Mapping[tuple[str, str], float]
    err_cov: Mapping[tuple[str, str], float]

    def __post_init__(self):
        g = self.graph
        if set(self.coeff) != set(g.directed):
            raise InputError("coefficients must cover exactly the directed edges")
        expected = set(g.bidirected) | {(v, v) for v in g.variables}
        if set(self.err_cov) != expected:
            raise InputError("error covariances must cover the variances and bidirected edges")
        if any(self.err_cov[(v, v)] <= 0 for v in g.variables):
            raise InputError("error variances must be strictly positive")
        try:
            np.linalg.cholesky(self.omega())
        except np.linalg.LinAlgError:
            raise InputError("error covariance matrix is not positive definite") from None

    def b_matrix(self) -> np.ndarray:
        g = self.graph
        B = np.zeros((len(g.variables),) * 2)
        for (t, h), val in self.coeff.items():
            B[g.index(h), g.index(t)] = val
        return B

    def omega(self) -> np.ndarray:
        g = self.graph
        W = np.zeros((len(g.variables),) * 2)
        for (a, b), val in self.err_cov.items():
            i, j = g.index(a), g.index(b)
            W[i, j] = W[j, i] = val
        return W


def implied_covariance(inst: Instantiation) -> CovarianceMatrix:
    """Sigma = (I - B)^-1 Omega (I - B)^-T."""
    sigma = _sigma(inst.b_matrix(), inst.omega())
    return CovarianceMatrix(inst.graph.variables, sigma)


def _sigma(B: np.ndarray, W: np.ndarray) -> np.ndarray:
    A = np.linalg.inv(np.eye(len(B)) - B)
    S = A @ W @ A.T
    return (S + S.T) / 2


def conditional_cov(s: CovarianceMatrix, a: str, b: str, z: Iterable[str] = ()) -> float:
    """Schur complement Sigma_ab - Sigma_aZ Sigma_ZZ^-1 Sigma_Zb."""
    z = list(z)
    if a in z or b in z:
        raise InputError(f"conditioning set {z} contains {a!r} or {b!r}")
    (i, j), k = s.idx([a, b]), s.idx(z)
    m = s.entries
    if not k:
        return float(m[i, j])
    szz = m[np.ix_(k, k)]
    if len(k) == 1:
        singular = szz[0, 0] <= 1e-12 * max(1.0, abs(m).max())
    else:
        singular = np.linalg.cond(szz) > 1e12
    if singular:
        raise DegenerateConditioning(f"conditioning block on {z} is singular")
    sol = np.linalg.solve(szz, m[k, j])
    return float(m[i, j] - m[i, k] @ sol)


def random_instantiation(g: CausalGraph, seed: int) -> Instantiation:
    """Deterministic generic parameter draw for ``g``.

    Coefficients have magnitude in [0.2, 1.5] with a random sign. Error
    variances exceed the absolute row sum of the bidirected entries, so the
    error covariance matrix is diagonally dominant and hence positive definite.
    """
    rng = np.random.default_rng(seed)
    key = lambda p: (g.index(p[0]), g.index(p[1]))
    edges = sorted(g.directed, key=key)
    arcs = sorted(g.bidirected, key=key)
    coefs = _signed(rng, len(edges), COEF_RANGE)
    covs = _signed(rng, len(arcs), ERRCOV_RANGE)
    variances = rng.uniform(0.5, 1.5, size=len(g.variables))

    coeff = dict(zip(edges, coefs.tolist()))
    err_cov = dict(zip(arcs, covs.tolist()))
    row_sum = {v: 0.0 for v in g.variables}
    for (a, b), val in zip(arcs, covs):
        row_sum[a] += abs(val)
        row_sum[b] += abs(val)
    for v, extra in zip(g.variables, variances):
        err_cov[(v, v)] = float(row_sum[v] + extra)
    return Instantiation(g, coeff, err_cov)


def _signed(rng: np.random.Generator, n: int, bounds: tuple[float, float]) -> np.ndarray:
    signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return signs * rng.uniform(*bounds, size=n)


# -- Jacobian oracle -------------------------------------------------------


class _Parametrization:
    """Flat parameter vector: coefficients, then bidirected covariances, then variances."""

    def __init__(self, g: CausalGraph):
        self.g = g
        key = lambda p: (g.index(p[0]), g.index(p[1]))
        self.coef_keys = sorted(g.directed, key=key)
        self.bi_keys = sorted(g.bidirected, key=key)
        self.var_keys = [(v, v) for v in g.variables]
        n = len(g.variables)
        self.tril = np.tril_indices(n)

    def pack(self, inst: Instantiation) -> np.ndarray:
        vals = [inst.coeff[k] for k in self.coef_keys]
        vals += [inst.err_cov[k] for k in self.bi_keys + self.var_keys]
        return np.array(vals, dtype=float)

    def matrices(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.g
        n = len(g.variables)
        B = np.zeros((n, n))
        W = np.zeros((n, n))
        it = iter(theta)
        for t, h in self.coef_keys:
            B[g.index(h), g.index(t)] = next(it)
        for a, b in self.bi_keys + self.var_keys:
            i, j = g.index(a), g.index(b)
            W[i, j] = W[j, i] = next(it)
        return B, W

    def vech_sigma(self, theta: np.ndarray) -> np.ndarray:
        return _sigma(*self.matrices(theta))[self.tril]

    def total_effect(self, theta: np.ndarray, x: str, z: str) -> float:
        B, _ = self.matrices(theta)
        A = np.linalg.inv(np.eye(len(B)) - B)
        return float(A[self.g.index(z), self.g.index(x)])


def central_jacobian(f, theta: np.ndarray, rel_step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``theta`` (rows: outputs)."""
    theta = np.asarray(theta, dtype=float)
    f0 = np.atleast_1d(f(theta))
    J = np.empty((f0.size, theta.size))
    for i in range(theta.size):
        h = rel_step * max(1.0, abs(theta[i]))
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        J[:, i] = (np.atleast_1d(f(up)) - np.atleast_1d(f(down))) / (2 * h)
    return J


def null_space(J: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (as rows) of the numerical null space of ``J``."""
    if J.size == 0:
        return np.eye(J.shape[1])
    _, s, vt = np.linalg.svd(J)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return vt[rank:]


def numerical_rank(J: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if J.size == 0:
        return 0
    s = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0


def _checked_jacobian(f, theta: np.ndarray) -> np.ndarray | None:
    J = central_jacobian(f, theta, FD_STEP)
    if not np.all(np.isfinite(J)):
        raise NumericalFailure("non-finite entries in finite-difference Jacobian")
    J2 = central_jacobian(f, theta, 2 * FD_STEP)
    scale = max(1.0, float(np.max(np.abs(J))))
    if np.max(np.abs(J - J2)) > RICHARDSON_RTOL * scale:
        return None
    return J


def locally_identified(
    g: CausalGraph,
    target: Query,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    tol: float = NULL_TOL,
) -> bool:
    """Generic local identifiability of ``target`` from the Jacobian null space.

    For each trial a generic parameter point is drawn; directions in the
    null space of d vech(Sigma) / d theta leave the covariance matrix fixed
    to first order. The target is identified when it has no first-order
    motion along any of them. A trial whose Jacobian disagrees with a
    doubled step is redrawn; persistent disagreement is a numerical failure.
    """
    target.validate(g)
    par = _Parametrization(g)
    seeds = np.random.SeedSequence(seed).generate_state(4 * trials)
    verdict = True
    used = 0
    for s in seeds:
        if used == trials:
            break
        theta = par.pack(random_instantiation(g, int(s)))
        J = _checked_jacobian(par.vech_sigma, theta)
        if J is None:
            continue
        used += 1
        N = null_space(J)
        if isinstance(target, TargetEdge):
            k = par.coef_keys.index((target.x, target.y))
            ok = float(np.linalg.norm(N[:, k])) < tol if len(N) else True
        else:
            grad = central_jacobian(
                lambda t: par.total_effect(t, target.x, target.z), theta
            )[0]
            if not np.all(np.isfinite(grad)):
                raise NumericalFailure("non-finite total-effect gradient")
            norm = float(np.linalg.norm(grad))
            ok = True if norm == 0 or not len(N) else float(np.linalg.norm(N @ grad)) / norm < tol
        verdict = verdict and ok
    if used < trials:
        raise NumericalFailure(
            f"only {used} of {trials} trials passed the step-size consistency check"
        )
    return verdict
