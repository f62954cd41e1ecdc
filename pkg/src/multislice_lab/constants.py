"""
Poincare, log-Sobolev and modified log-Sobolev constants.

``poincare_constant`` is exact (inverse spectral gap).  ``lsc_estimate`` and
``mlsc_estimate`` maximize the defining ratio by projected gradient ascent
from many starting points; the best ratio found is a certified lower bound,
since it is the exact ratio at a stored witness observable.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, eigsh, lobpcg

from . import functionals as fn
from .core import DEFAULT_STATE_CAP, StateSpace, WeightedGraph, as_profile
from .errors import (
    CapExceededError,
    DegenerateSpaceError,
    GraphError,
    OptimizationError,
    ReducibleOperatorError,
)

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000
COMPARISON_SITE_CAP = 7
EPS_FLOOR = 1e-12
# below this the ratio is dominated by rounding (both forms vanish at constants)
MIN_FORM = 1e-10
EXACT = "exact_spectral"
VARIATIONAL = "variational_lower_bound"


def worker_count(requested: int | None = None) -> int:
    if requested:
        return max(1, int(requested))
    env = os.environ.get("MULTISLICE_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer MULTISLICE_LAB_THREADS=%r", env)
    return 1


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Generator of a reversible transposition chain, uniform stationary law.

    ``rates`` holds the symmetric off-diagonal jump rates; the diagonal is
    implied by zero row sums.  ``kernel`` is ``-L``.
    """

    space: StateSpace
    graph: WeightedGraph
    rates: sp.csr_matrix

    @property
    def dimension(self) -> int:
        return self.rates.shape[0]

    @property
    def kernel(self) -> sp.csr_matrix:
        k = self.__dict__.get("_kernel")
        if k is None:
            deg = np.asarray(self.rates.sum(axis=1)).ravel()
            k = (sp.diags(deg) - self.rates).tocsr()
            object.__setattr__(self, "_kernel", k)
        return k

    @property
    def generator(self) -> sp.csr_matrix:
        return (-self.kernel).tocsr()

    def edge_arrays(self):
        """Upper-triangular ``(rows, cols, rates)`` of the jump graph."""
        e = self.__dict__.get("_edges")
        if e is None:
            upper = sp.triu(self.rates, k=1).tocoo()
            e = (upper.row, upper.col, upper.data)
            object.__setattr__(self, "_edges", e)
        return e

    def form(self, f: np.ndarray, g: np.ndarray) -> float:
        """``<f, -L g>`` under the uniform measure, via edge differences."""
        r, c, w = self.edge_arrays()
        return float(np.sum(w * (f[r] - f[c]) * (g[r] - g[c])) / self.dimension)

    def max_exit_rate(self) -> float:
        return float(self.kernel.diagonal().max())


def build_generator(profile, graph: WeightedGraph | None = None, *,
                    cap: int | None = DEFAULT_STATE_CAP,
                    space: StateSpace | None = None) -> SparseOperator:
    """Transposition ``(i, j)`` fires at rate ``G_ij`` (mean field: ``1/n``)."""
    profile = as_profile(profile)
    if profile.l < 2:
        raise DegenerateSpaceError(
            f"profile ({profile}) has a single color: the state space is one point")
    if space is None:
        space = StateSpace(profile, cap=cap)
    if graph is None:
        graph = WeightedGraph.mean_field(profile.n)
    if graph.n != profile.n:
        raise GraphError(f"graph has {graph.n} sites but the profile has n={profile.n}")
    size = space.size
    ar = np.arange(size)
    rows, cols, data = [], [], []
    for i, j, w in graph.edges():
        idx = space.swap_index(i, j)
        eff = idx != ar
        rows.append(ar[eff])
        cols.append(idx[eff])
        data.append(np.full(int(eff.sum()), w))
    if rows:
        rows, cols, data = map(np.concatenate, (rows, cols, data))
    rates = sp.coo_matrix((data, (rows, cols)), shape=(size, size)).tocsr()
    rates.sum_duplicates()
    return SparseOperator(space, graph, rates)


@dataclass
class ConstantEstimate:
    value: float
    kind: str
    quantity: str
    witness: fn.Observable | None = None
    restarts_used: int = 0
    iterations: int = 0
    residual: float = 0.0
    details: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {
            "quantity": self.quantity,
            "value": float(self.value),
            "kind": self.kind,
            "restarts_used": int(self.restarts_used),
            "iterations": int(self.iterations),
            "residual": float(self.residual),
        }
        for k, v in self.details.items():
            if isinstance(v, (bool, str)) or v is None:
                rec[k] = v
            elif isinstance(v, (int, float, np.integer, np.floating)):
                rec[k] = v.item() if hasattr(v, "item") else v
        return rec


def _check_irreducible(op: SparseOperator):
    if op.dimension < 2:
        raise DegenerateSpaceError("need at least two states")
    ncomp, labels = connected_components(op.rates, directed=False)
    if ncomp > 1:
        other = np.flatnonzero(labels != labels[0])
        witness = [op.space.unrank(int(r)) for r in other[:5]]
        raise ReducibleOperatorError(
            f"generator is reducible ({ncomp} components); states {witness} are not "
            f"reachable from {op.space.unrank(0)}", component=other)


def _spectral_gap(op: SparseOperator, seed: int = 0):
    """Smallest nonzero eigenvalue of ``-L`` and its eigenvector."""
    size = op.dimension
    k = op.kernel
    if size < DENSE_LIMIT:
        vals, vecs = scipy.linalg.eigh(k.toarray(), subset_by_index=[0, 1])
        gap, vec = vals[1], vecs[:, 1]
    else:
        shift = 2.0 * op.max_exit_rate()
        ones = np.ones(size) / math.sqrt(size)

        def matvec(x):
            x = np.ravel(x)
            return k @ x + shift * ones * (ones @ x)

        a = LinearOperator((size, size), matvec=matvec, dtype=float)
        v0 = np.random.default_rng(seed).standard_normal(size)
        v0 -= v0.mean()
        vals, vecs = eigsh(a, k=1, which="SA", v0=v0, tol=1e-13,
                           ncv=min(size, 40), maxiter=20 * size)
        gap, vec = vals[0], vecs[:, 0]
    vec = vec - vec.mean()
    resid = float(np.linalg.norm(k @ vec - gap * vec) / max(np.linalg.norm(vec), 1e-300))
    return float(gap), vec, resid


def poincare_constant(op: SparseOperator, seed: int = 0) -> ConstantEstimate:
    """Inverse spectral gap of ``-L``; the witness is a gap eigenvector."""
    _check_irreducible(op)
    gap, vec, resid = _spectral_gap(op, seed)
    vec = vec / math.sqrt(np.mean(vec ** 2))
    return ConstantEstimate(
        value=1.0 / gap, kind=EXACT, quantity="tau_rel",
        witness=fn.Observable(op.space, vec), residual=resid,
        details={"gap": gap, "solver": "dense" if op.dimension < DENSE_LIMIT else "lanczos"})


@dataclass(frozen=True)
class Budget:
    """Restart and iteration budget of the variational search."""

    random_restarts: int = 64
    max_iter: int = 5000
    tol: float = 1e-11
    patience: int = 50
    seed: int = 0
    workers: int | None = None
    armijo: float = 1e-4
    initial_step: float = 1.0
    shrink: float = 0.5


# --- ratio objectives -------------------------------------------------------

class _LogSobolev:
    """``Ent(g^2) / E(g, g)`` over ``g >= 0`` with ``E[g^2] = 1``."""

    name = "tau_ls"

    def __init__(self, op: SparseOperator):
        self.op = op
        self.k = op.kernel

    def project(self, g):
        g = np.maximum(g, 0.0)
        m = np.mean(g * g)
        if not m > 0 or not np.isfinite(m):
            return None
        return g / math.sqrt(m)

    def value(self, g):
        e = self.op.form(g, g)
        if e < MIN_FORM:
            return -np.inf
        return fn.entropy_of(g * g) / e

    def gradient(self, g, r):
        f = g * g
        m = f.mean()
        logs = np.log(np.where(f > 0, f, 1.0) / m)
        d_ent = 2.0 * g * np.where(f > 0, logs, 0.0)
        d_form = 2.0 * (self.k @ g)
        return (d_ent - r * d_form) / self.op.form(g, g)

    def observable(self, g):
        return g * g


class _ModifiedLogSobolev:
    """``Ent(f) / E(f, log f)`` over ``f >= EPS_FLOOR``, in ``u = log f``."""

    name = "tau_mls"

    def __init__(self, op: SparseOperator):
        self.op = op
        self.k = op.kernel
        self.floor = math.log(EPS_FLOOR)

    def project(self, u):
        if not np.all(np.isfinite(u)):
            return None
        u = u - (np.max(u) + math.log(np.mean(np.exp(u - np.max(u)))))
        return np.maximum(u, self.floor)

    def value(self, u):
        f = np.exp(u)
        e = self.op.form(f, u)
        if e < MIN_FORM:
            return -np.inf
        return fn.entropy_of(f) / e

    def gradient(self, u, r):
        f = np.exp(u)
        d_ent = f * np.log(f / f.mean())
        d_form = f * (self.k @ u) + self.k @ f
        return (d_ent - r * d_form) / self.op.form(f, u)

    def observable(self, u):
        return np.exp(u)


@dataclass
class _Run:
    label: str
    start_ratio: float
    ratio: float
    x: np.ndarray | None
    iterations: int


def _ascend(obj, x0, budget: Budget, label: str) -> _Run:
    x = obj.project(np.asarray(x0, dtype=float))
    if x is None:
        return _Run(label, -np.inf, -np.inf, None, 0)
    r = obj.value(x)
    start = r
    if not np.isfinite(r):
        return _Run(label, -np.inf, -np.inf, None, 0)
    history = [r]
    step = budget.initial_step
    it = 0
    for it in range(1, budget.max_iter + 1):
        grad = obj.gradient(x, r)
        if not np.all(np.isfinite(grad)):
            break
        t = min(budget.initial_step, 2.0 * step)
        accepted = False
        while t > 1e-300:
            y = obj.project(x + t * grad)
            if y is not None:
                ry = obj.value(y)
                if np.isfinite(ry) and ry >= r + budget.armijo * np.mean(grad * (y - x)) and ry >= r:
                    accepted = True
                    break
            t *= budget.shrink
        if not accepted:
            break
        x, r, step = y, ry, t
        history.append(r)
        if len(history) > budget.patience:
            old = history[-budget.patience - 1]
            if r - old < budget.tol * max(1.0, abs(r)):
                break
    return _Run(label, start, r, x, it)


def _indicator_sets(space: StateSpace):
    """Ranks with ``xi_l = {1..k_l}``, one set per color."""
    out = []
    for c, k in enumerate(space.profile.counts):
        mask = np.all(space.words[:, :k] == c, axis=1)
        out.append((c + 1, mask))
    return out


def _seeds(obj, op: SparseOperator, budget: Budget):
    """Labelled starting points in the fixed seeded order."""
    space = op.space
    size = space.size
    rng = np.random.default_rng(np.random.SeedSequence(budget.seed))
    child = rng.spawn(budget.random_restarts) if budget.random_restarts else []
    mls = isinstance(obj, _ModifiedLogSobolev)
    seeds: list[tuple[str, Callable[[], np.ndarray]]] = []

    scales = (0.25, 1.0, 2.0, 4.0)
    for k, g in enumerate(child):
        s = scales[k % len(scales)]
        if mls:
            seeds.append((f"random[{k}]", lambda g=g, s=s: s * g.standard_normal(size)))
        else:
            seeds.append((f"random[{k}]", lambda g=g, s=s: np.exp(s * g.standard_normal(size))))

    def smoothed(mask, eps):
        return np.log(np.where(mask, 1.0, eps))

    for color, mask in _indicator_sets(space):
        if mls:
            for eps in (1e-2, 1e-4):
                seeds.append((f"indicator[{color}, eps={eps:g}]", lambda m=mask, e=eps: smoothed(m, e)))
        else:
            seeds.append((f"indicator[{color}]", lambda m=mask: m.astype(float)))
    for color in range(1, space.profile.l + 1):
        mask = space.words[:, 0] == color - 1
        if mls:
            for eps in (1e-2, 1e-4):
                seeds.append((f"dictator[{color}, eps={eps:g}]", lambda m=mask, e=eps: smoothed(m, e)))
        else:
            seeds.append((f"dictator[{color}]", lambda m=mask: m.astype(float)))
    for color, mask in _indicator_sets(space):
        for beta in (1.0, 3.0, 6.0):
            if mls:
                seeds.append((f"tilt[{color}, beta={beta:g}]", lambda m=mask, b=beta: b * m))
            else:
                seeds.append((f"tilt[{color}, beta={beta:g}]", lambda m=mask, b=beta: np.exp(0.5 * b * m)))

    mode = []

    def near_constant(sign, eps=1e-3):
        if not mode:
            mode.append(_spectral_gap(op, budget.seed)[1])
        vec = mode[0] / np.max(np.abs(mode[0]))
        f = 1.0 + sign * eps * vec
        return np.log(f) if mls else f

    seeds.append(("gap_mode[+]", lambda: near_constant(+1)))
    seeds.append(("gap_mode[-]", lambda: near_constant(-1)))
    return seeds


def _optimize(obj, op: SparseOperator, budget: Budget) -> ConstantEstimate:
    _check_irreducible(op)
    seeds = _seeds(obj, op, budget)

    def run(item):
        label, make = item
        return _ascend(obj, make(), budget, label)

    workers = worker_count(budget.workers)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, seeds))
    else:
        runs = [run(s) for s in seeds]

    best = None
    for rr in runs:
        if rr.x is not None and (best is None or rr.ratio > best.ratio):
            best = rr
    if best is None:
        raise OptimizationError("every starting point was constant or degenerate")

    values = obj.observable(best.x)
    witness = fn.Observable(op.space, values)
    certified = ratio_at(witness, op.graph, obj.name)
    indicator = [rr.start_ratio for rr in runs if rr.label.startswith("indicator")]
    interior = [rr.ratio for rr in runs if rr.x is not None and rr.label.startswith(("random", "gap_mode"))]
    boundary = [rr.ratio for rr in runs if rr.x is not None and rr.label.startswith(("indicator", "dictator"))]
    return ConstantEstimate(
        value=certified, kind=VARIATIONAL, quantity=obj.name, witness=witness,
        restarts_used=len(runs), iterations=sum(rr.iterations for rr in runs),
        residual=abs(certified - best.ratio) / max(abs(certified), 1e-300),
        details={
            "best_seed": best.label,
            "indicator_seed_ratio": max(indicator) if indicator else None,
            "interior_seed_best": max(interior) if interior else None,
            "boundary_seed_best": max(boundary) if boundary else None,
            "runs": [(rr.label, rr.start_ratio, rr.ratio, rr.iterations) for rr in runs],
        })


def ratio_at(f: fn.Observable, graph: WeightedGraph, quantity: str) -> float:
    """Evaluate the defining ratio at ``f`` through the functionals module."""
    if quantity == "tau_ls":
        root = f.map(np.sqrt)
        return fn.entropy(f) / fn.dirichlet_form(root, root, graph)
    if quantity == "tau_mls":
        return fn.entropy(f) / fn.dirichlet_form(f, f.map(np.log), graph)
    if quantity == "tau_rel":
        return fn.variance(f) / fn.dirichlet_form(f, f, graph)
    raise ValueError(f"unknown quantity {quantity!r}")


def _resolve(profile_or_op, graph, cap):
    if isinstance(profile_or_op, SparseOperator):
        return profile_or_op
    return build_generator(profile_or_op, graph, cap=cap)


def lsc_estimate(profile, graph: WeightedGraph | None = None, budget: Budget | None = None,
                 *, cap: int | None = DEFAULT_STATE_CAP) -> ConstantEstimate:
    """Certified lower bound on the log-Sobolev constant."""
    op = _resolve(profile, graph, cap)
    return _optimize(_LogSobolev(op), op, budget or Budget())


def mlsc_estimate(profile, graph: WeightedGraph | None = None, budget: Budget | None = None,
                  *, cap: int | None = DEFAULT_STATE_CAP) -> ConstantEstimate:
    """Certified lower bound on the modified log-Sobolev constant."""
    op = _resolve(profile, graph, cap)
    est = _optimize(_ModifiedLogSobolev(op), op, budget or Budget())
    # both published normalizations are recorded; only the interval is tested
    est.details.update(reference_interval_lower=0.5, reference_interval_upper=2.0,
                       reference_permutation_upper=0.5)
    return est


def comparison_constant(graph: WeightedGraph, n: int | None = None, *,
                        site_cap: int = COMPARISON_SITE_CAP) -> float:
    """Smallest ``c`` with ``E^G <= c E^{mean field}`` on permutations of ``n`` sites."""
    n = graph.n if n is None else n
    if n != graph.n:
        raise GraphError(f"graph has {graph.n} sites, asked for n={n}")
    if n > site_cap:
        raise CapExceededError(f"comparison constant needs n! states; n={n} exceeds the "
                               f"site cap {site_cap}", cap_name="cap_sites", cap=site_cap,
                               requested=n)
    if not graph.is_connected():
        raise GraphError("graph is disconnected: the two Dirichlet forms have different kernels")
    space = StateSpace((1,) * n, cap=None)
    k_g = build_generator(space.profile, graph, space=space).kernel
    k_mf = build_generator(space.profile, WeightedGraph.mean_field(n), space=space).kernel
    size = space.size
    if size <= 2500:
        m = k_mf.toarray() + 1.0 / size
        vals = scipy.linalg.eigh(k_g.toarray(), m, eigvals_only=True,
                                 subset_by_index=[size - 1, size - 1])
        return float(vals[-1])
    ones = np.ones(size) / size

    def bvec(x):
        x = np.asarray(x)
        return k_mf @ x + np.outer(np.ones(size), ones @ x).reshape(x.shape)

    b = LinearOperator((size, size), matvec=bvec, matmat=bvec, dtype=float)
    x0 = np.random.default_rng(0).standard_normal((size, 4))
    vals, _ = lobpcg(k_g, x0, B=b, largest=True, tol=1e-10, maxiter=2000)
    return float(np.max(vals))


def quick_budget(**kw) -> Budget:
    """Small budget used by sweeps and the acceptance suite."""
    base = Budget(random_restarts=4, max_iter=400, patience=30)
    return replace(base, **kw)
