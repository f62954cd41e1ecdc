"""
Built-in verification suite.

Each check runs one family of identities or certified inequalities on
built-in profiles and returns a :class:`CheckResult`.  ``run_checks`` is what
``multislice-lab verify`` executes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bounds, functionals as fn
from .constants import (
    Budget,
    build_generator,
    comparison_constant,
    lsc_estimate,
    mlsc_estimate,
    poincare_constant,
    quick_budget,
    ratio_at,
)
from .core import (
    StateSpace,
    WeightedGraph,
    compositions,
    coarsening_ranks,
    multinomial_size,
    partitions,
)
from .exclusion import exclusion_generator, tv_decay_exact
from .isoperimetry import (
    brute_force_iota,
    candidate_bound,
    edge_boundary,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: str
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.summary} ({self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "summary": self.summary,
                "failures": [str(f) for f in self.failures[:20]], "seconds": self.seconds}


def _profiles(n_max: int, max_states: int, n_min: int = 2):
    return [p for n in range(n_min, n_max + 1) for p in partitions(n)
            if len(p) >= 2 and multinomial_size(p) <= max_states]


def sandwich_family():
    """Canonical profiles with ``n <= 10`` and at most 5,000 states."""
    return _profiles(10, 5000)


def mls_family():
    return _profiles(10, 2000)


def iota_family():
    return _profiles(24, 24)


CHAIN_RULE_PROFILES = [(1, 1), (2, 1), (2, 2), (1, 1, 1), (2, 1, 1), (2, 2, 1),
                       (3, 2, 1), (1, 1, 1, 1), (2, 2, 2), (2, 1, 1, 1), (3, 3, 2)]


def random_observables(space: StateSpace, count: int, seed: int) -> np.ndarray:
    """I.i.d. uniform(0.1, 1.1) entries, one observable per row."""
    rng = np.random.default_rng(seed)
    return rng.uniform(0.1, 1.1, size=(count, space.size))


def check_spectral(n_max: int = 8) -> CheckResult:
    fails, worst, count = [], 0.0, 0
    for n in range(2, n_max + 1):
        for comp in compositions(n, 2):
            tau = poincare_constant(build_generator(comp)).value
            worst = max(worst, abs(tau - 1.0))
            count += 1
            if abs(tau - 1.0) > 1e-9:
                fails.append((comp, tau))
    return CheckResult("spectral", not fails,
                       f"{count} compositions with n <= {n_max}, max |tau_rel - 1| = {worst:.2e}", fails)


def check_lsc_exact(budget: Budget | None = None) -> CheckResult:
    budget = budget or Budget(random_restarts=16, max_iter=3000)
    fails, parts = [], []
    for prof, target in (((1, 1), 2.0), ((1, 2), 3.0 * math.log(2.0))):
        est = lsc_estimate(prof, budget=budget)
        again = ratio_at(est.witness, WeightedGraph.mean_field(sum(prof)), "tau_ls")
        ok = (target - 1e-3 <= est.value <= target + 1e-9
              and abs(again - est.value) <= 1e-9 * abs(est.value))
        parts.append(f"{prof}: {est.value:.6f} vs {target:.6f}")
        if not ok:
            fails.append((prof, est.value, target))
    return CheckResult("lsc-exact", not fails, "; ".join(parts), fails)


def check_sandwich(profiles=None, budget: Budget | None = None) -> CheckResult:
    profiles = sandwich_family() if profiles is None else profiles
    budget = budget or quick_budget()
    fails, worst_low = [], math.inf
    for prof in profiles:
        est = lsc_estimate(prof, budget=budget)
        lo, up = bounds.bound_main(prof)
        ind = est.details["indicator_seed_ratio"]
        worst_low = min(worst_low, est.value - lo)
        if not (lo - 1e-6 <= est.value <= up + 1e-9 and ind >= lo - 1e-6):
            fails.append((prof, est.value, ind, lo, up))
    return CheckResult("sandwich", not fails,
                       f"{len(profiles)} profiles, min(estimate - lower) = {worst_low:.4f}", fails)


def check_mls_interval(profiles=None, budget: Budget | None = None) -> CheckResult:
    profiles = mls_family() if profiles is None else profiles
    budget = budget or quick_budget()
    fails, lo_seen, hi_seen = [], math.inf, -math.inf
    for prof in profiles:
        est = mlsc_estimate(prof, budget=budget)
        lo_seen, hi_seen = min(lo_seen, est.value), max(hi_seen, est.value)
        if not 0.5 - 1e-3 <= est.value <= 2.0 + 1e-9:
            fails.append((prof, est.value))
    return CheckResult("mls-interval", not fails,
                       f"{len(profiles)} profiles, estimates in [{lo_seen:.6f}, {hi_seen:.6f}]", fails)


def check_chain_rule(profiles=CHAIN_RULE_PROFILES, count: int = 100, seed: int = 0) -> CheckResult:
    fails = []
    worst_rel, worst_slack = 0.0, math.inf
    for prof in profiles:
        space = StateSpace(prof)
        mf = WeightedGraph.mean_field(space.n)
        l = len(prof)
        phi_sub = max(bounds.phi(space.profile.without(i)) for i in range(l))
        second = max(2 * (1 - k / space.n) * bounds.bernoulli_laplace_upper(k, space.n) for k in prof)
        for row in random_observables(space, count, seed):
            f = fn.Observable(space, row)
            ent = fn.entropy(f)
            for color in range(1, l + 1):
                local, projected = fn.conditional_decomposition(f, color)
                rel = abs(local + projected - ent) / ent
                worst_rel = max(worst_rel, rel)
                if rel > 1e-10:
                    fails.append(("chain", prof, color, rel))
            s1, s2 = fn.weighted_entropy_split(f)
            rel = abs(s1 + s2 - (l - 1) * ent) / ((l - 1) * ent)
            worst_rel = max(worst_rel, rel)
            if rel > 1e-10:
                fails.append(("split", prof, rel))
            root = f.map(np.sqrt)
            e_sqrt = fn.dirichlet_form(root, root, mf)
            slack1 = (l - 2) * phi_sub * e_sqrt - s1
            slack2 = second * e_sqrt - s2
            worst_slack = min(worst_slack, slack1, slack2)
            if slack1 < -1e-9 or slack2 < -1e-9:
                fails.append(("inequality", prof, slack1, slack2))
    return CheckResult("chain-rule", not fails,
                       f"{len(profiles)} profiles x {count} observables, max rel err {worst_rel:.1e}, "
                       f"min slack {worst_slack:.3e}", fails)


def _random_graph(n: int, rng) -> WeightedGraph:
    w = np.triu(rng.uniform(0.0, 1.0, size=(n, n)), k=1)
    w[w < 0.3] = 0.0
    return WeightedGraph(w + w.T, "custom")


def check_coarsening(n_max: int = 5, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    fails, worst, count = [], 0.0, 0
    for n in range(2, n_max + 1):
        fine = StateSpace((1,) * n)
        graphs = [WeightedGraph.mean_field(n), _random_graph(n, rng)]
        if n >= 3:
            graphs.append(WeightedGraph.cycle(n))
        for comp in compositions(n, 1):
            coarse = StateSpace(comp)
            up = coarsening_ranks(comp, fine)
            f = rng.standard_normal(coarse.size)
            g = rng.standard_normal(coarse.size)
            fo, go = fn.Observable(coarse, f), fn.Observable(coarse, g)
            fp, gp = fn.Observable(fine, f[up]), fn.Observable(fine, g[up])
            errs = [abs(fn.expectation(fo) - fn.expectation(fp))]
            for gr in graphs:
                errs.append(abs(fn.dirichlet_form(fo, go, gr) - fn.dirichlet_form(fp, gp, gr)))
            err = max(errs)
            worst = max(worst, err)
            count += 1
            if err > 1e-12:
                fails.append((comp, err))
    return CheckResult("coarsening", not fails,
                       f"{count} compositions with n <= {n_max}, max abs err {worst:.1e}", fails)


def check_isoperimetry(profiles=None, subsets: int = 200, seed: int = 0) -> CheckResult:
    profiles = iota_family() if profiles is None else profiles
    rng = np.random.default_rng(seed)
    fails = []
    for prof in profiles:
        space = StateSpace(prof)
        n, size = space.n, space.size
        iota, _ = brute_force_iota(space)
        lower = n / bounds.phi(prof)
        upper, _ = candidate_bound(prof)
        if not lower - 1e-6 <= iota <= upper + 1e-9:
            fails.append(("iota", prof, iota, lower, upper))
        mf = WeightedGraph.mean_field(n)
        for _ in range(subsets):
            bits = rng.random(size) < rng.uniform(0.05, 0.95)
            if not bits.any():
                bits[rng.integers(size)] = True
            a = bits.sum()
            ind = fn.Observable(space, bits.astype(float))
            boundary = edge_boundary(space, bits)
            via_form = n * size * fn.dirichlet_form(ind, ind, mf)
            ent_expected = a / size * math.log(size / a)
            if abs(boundary - via_form) > 1e-9 * max(1, boundary):
                fails.append(("boundary", prof, boundary, via_form))
            if abs(fn.entropy(ind) - ent_expected) > 1e-12:
                fails.append(("entropy", prof, fn.entropy(ind), ent_expected))
    return CheckResult("isoperimetry", not fails,
                       f"{len(profiles)} profiles with <= 24 states, {subsets} subsets each", fails)


def random_profiles(count: int, l_max: int = 10, n_max: int = 50, seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        l = int(rng.integers(2, l_max + 1))
        n = int(rng.integers(l, n_max + 1))
        cuts = np.sort(rng.choice(np.arange(1, n), size=l - 1, replace=False))
        parts = np.diff(np.concatenate([[0], cuts, [n]]))
        out.append(tuple(int(x) for x in parts))
    return out


def check_recursion(count: int = 1000, grid: int = 10001, seed: int = 0) -> CheckResult:
    fails, worst = [], -math.inf
    for prof in random_profiles(count, seed=seed):
        value, trace = bounds.recursive_upper(prof)
        gap = value - bounds.phi(prof)
        worst = max(worst, gap)
        if gap > 1e-12 or any(s.value > s.phi + 1e-12 for s in trace.steps):
            fails.append(("closure", prof, value))
        for color in range(1, len(prof) + 1):
            lhs, bnd = bounds.two_color_weight(prof, color)
            if lhs > bnd + 1e-12:
                fails.append(("two-color", prof, color, lhs, bnd))
    ts = np.linspace(0.0, 0.5, grid)
    vals = np.array([bounds.t_inequality(t) for t in ts])
    if vals.max() > 0.0:
        fails.append(("t-inequality", float(ts[vals.argmax()]), float(vals.max())))
    return CheckResult("recursion", not fails,
                       f"{count} random profiles, max(value - Phi) = {worst:.2e}; "
                       f"t-grid max {vals.max():.1e}", fails)


def check_aldous() -> CheckResult:
    fails, parts = [], []
    for graph in (WeightedGraph.cycle(5), WeightedGraph.complete_srw(5)):
        taus = {p: poincare_constant(exclusion_generator(p, graph)).value
                for p in ((1, 4), (2, 3), (1, 2, 2), (1, 1, 1, 1, 1))}
        spread = max(taus.values()) - min(taus.values())
        parts.append(f"{graph.label}: tau_rel = {taus[(1, 4)]:.10f}, spread {spread:.1e}")
        if spread > 1e-8:
            fails.append((graph.label, taus))
    return CheckResult("aldous", not fails, "; ".join(parts), fails)


def check_comparison(budget: Budget | None = None) -> CheckResult:
    fails, parts = [], []
    for n in (4, 5):
        c = comparison_constant(WeightedGraph.complete_srw(n))
        parts.append(f"c(K{n}) = {c:.12f}")
        if abs(c - n / (n - 1)) > 1e-9:
            fails.append(("complete_srw", n, c))
    graph = WeightedGraph.cycle(5)
    c_g = comparison_constant(graph)
    tau_g = poincare_constant(exclusion_generator((1, 4), graph)).value
    est = lsc_estimate((2, 3), graph, budget or Budget(random_restarts=16, max_iter=3000))
    lo, up = bounds.bound_colored((2, 3), c_g, tau_g)
    parts.append(f"cycle(5): c = {c_g:.6f}, tau_rel = {tau_g:.6f}, "
                 f"lsc >= {est.value:.6f} in [{lo:.6f}, {up:.6f}]")
    if not lo - 1e-6 <= est.value <= up + 1e-9:
        fails.append(("colored", est.value, lo, up))
    return CheckResult("comparison", not fails, "; ".join(parts), fails)


def check_mixing() -> CheckResult:
    fails, parts = [], []
    op = exclusion_generator((1, 1), WeightedGraph.mean_field(2))
    ts = np.linspace(0.0, 20.0, 201)
    curve = tv_decay_exact(op, "worst", ts)
    err = float(np.max(np.abs(curve.tv - 0.5 * np.exp(-ts))))
    parts.append(f"two-state max err {err:.1e}")
    if err > 1e-10:
        fails.append(("two-state", err))
    for graph in (WeightedGraph.cycle(4), WeightedGraph.hypercube(2)):
        curve = tv_decay_exact(exclusion_generator((2, 2), graph))
        rise = float(np.max(np.diff(curve.tv)))
        parts.append(f"{graph.label}: max increase {rise:.1e}")
        if rise > 1e-10:
            fails.append((graph.label, rise))
    return CheckResult("mixing", not fails, "; ".join(parts), fails)


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "spectral": check_spectral,
    "lsc-exact": check_lsc_exact,
    "sandwich": check_sandwich,
    "mls-interval": check_mls_interval,
    "chain-rule": check_chain_rule,
    "coarsening": check_coarsening,
    "isoperimetry": check_isoperimetry,
    "recursion": check_recursion,
    "aldous": check_aldous,
    "comparison": check_comparison,
    "mixing": check_mixing,
}


PROFILE_CHECKS = ("sandwich", "mls-interval", "chain-rule", "isoperimetry")


def run_checks(only=None, echo: Callable[[str], None] | None = None,
               profiles=None) -> list[CheckResult]:
    """Run the named checks in order; ``profiles`` narrows the per-profile families."""
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks {unknown}; available: {', '.join(CHECKS)}")
    results = []
    for name in names:
        t0 = time.perf_counter()
        try:
            if profiles is not None and name in PROFILE_CHECKS:
                res = CHECKS[name](profiles=profiles)
            else:
                res = CHECKS[name]()
        except Exception as exc:  # a crashing check is a failed check
            res = CheckResult(name, False, f"raised {type(exc).__name__}: {exc}", [repr(exc)])
        res.seconds = time.perf_counter() - t0
        results.append(res)
        if echo:
            echo(res.line())
    return results
