"""
Expectations, variance, entropy and Dirichlet forms of observables.

Everything is taken under the uniform measure on the multislice.  The
Dirichlet form follows the pair-rate convention

    E^G(f, g) = 1/2 * sum_{i<j} G_ij * E[(grad_ij f)(grad_ij g)],

so that ``WeightedGraph.mean_field(n)`` (all rates ``1/n``) gives the
transposition walk in which each site is refreshed at unit rate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .core import StateSpace, WeightedGraph
from .errors import DegenerateSpaceError, DomainError

NEGATIVE_NOISE = 1e-14


@dataclass(frozen=True, eq=False)
class Observable:
    """A real function on the multislice, stored by state rank."""

    space: StateSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.space.size,):
            raise ValueError(f"observable has shape {v.shape}, expected ({self.space.size},)")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, space: StateSpace, fn: Callable) -> "Observable":
        """Evaluate ``fn`` on every word (1-based colors)."""
        vals = [fn(tuple(int(c) + 1 for c in row)) for row in space.words]
        return cls(space, np.array(vals, dtype=float))

    @classmethod
    def indicator(cls, space: StateSpace, ranks) -> "Observable":
        v = np.zeros(space.size)
        v[np.asarray(ranks, dtype=np.int64)] = 1.0
        return cls(space, v)

    @classmethod
    def constant(cls, space: StateSpace, c: float = 1.0) -> "Observable":
        return cls(space, np.full(space.size, float(c)))

    def __len__(self):
        return self.space.size

    def map(self, fn) -> "Observable":
        return Observable(self.space, fn(self.values))

    def to_csv(self, path, header: bool = True):
        write_observable_csv(self.values, path, header=header)


def write_observable_csv(values, path, header: bool = True):
    """One value per line in rank order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(["value"])
        for x in np.asarray(values, dtype=float):
            w.writerow([repr(float(x))])


def read_observable_csv(path, space: StateSpace | None = None):
    """Read values written by :func:`write_observable_csv`; header optional."""
    rows = [r for r in csv.reader(Path(path).read_text().splitlines()) if r]
    vals = []
    for k, row in enumerate(rows):
        try:
            vals.append(float(row[0]))
        except ValueError:
            if k == 0:
                continue
            raise ValueError(f"non-numeric value {row[0]!r} on line {k + 1}") from None
    vals = np.array(vals)
    if space is None:
        return vals
    return Observable(space, vals)


def _values(f):
    return f.values if isinstance(f, Observable) else np.asarray(f, dtype=float)


def _nonnegative(v: np.ndarray) -> np.ndarray:
    low = v.min() if v.size else 0.0
    if low < -NEGATIVE_NOISE:
        raise DomainError(f"entropy needs a nonnegative observable, found value {low:.3g}")
    if low < 0:
        v = np.maximum(v, 0.0)
    return v


def relative_entropy_density(u: np.ndarray) -> np.ndarray:
    """``u log u - u + 1`` for ``u >= 0``, accurate near ``u = 1``."""
    u = np.asarray(u, dtype=float)
    out = xlogy(u, u) - u + 1.0
    d = u - 1.0
    small = np.abs(d) < 1e-2
    if small.any():
        ds = d[small]
        # sum_{k>=2} (-1)^k d^k / (k (k-1))
        acc = np.zeros_like(ds)
        term = ds * ds
        for k in range(2, 12):
            acc += (term if k % 2 == 0 else -term) / (k * (k - 1))
            term = term * ds
        out[small] = acc
    return out


def entropy_of(v: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Entropy of a nonnegative vector under uniform (or given) weights."""
    v = _nonnegative(np.asarray(v, dtype=float))
    if weights is None:
        m = v.mean()
        if m <= 0:
            return 0.0
        return float(m * relative_entropy_density(v / m).mean())
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    m = float(weights @ v)
    if m <= 0:
        return 0.0
    return float(m * (weights @ relative_entropy_density(v / m)))


def expectation(f) -> float:
    return float(np.mean(_values(f)))


def variance(f) -> float:
    v = _values(f)
    return float(np.mean((v - v.mean()) ** 2))


def entropy(f) -> float:
    """``E[f log f] - E[f] log E[f]`` with natural logs and ``0 log 0 = 0``."""
    return entropy_of(_values(f))


def _check_pair(f, g, graph):
    if isinstance(f, Observable) and isinstance(g, Observable) and f.space is not g.space:
        if f.space.profile != g.space.profile:
            raise ValueError("observables live on different state spaces")
    space = f.space if isinstance(f, Observable) else g.space
    if graph.n != space.n:
        raise ValueError(f"graph has {graph.n} sites but the space has n={space.n}")
    return space


def dirichlet_form(f: Observable, g: Observable, graph: WeightedGraph) -> float:
    """Weighted Dirichlet form, summed directly over transpositions."""
    space = _check_pair(f, g, graph)
    fv, gv = _values(f), _values(g)
    total = 0.0
    for i, j, w in graph.edges():
        idx = space.swap_index(i, j)
        total += w * np.mean((fv[idx] - fv) * (gv[idx] - gv))
    return 0.5 * total


def mean_field_form(f: Observable, g: Observable) -> float:
    return dirichlet_form(f, g, WeightedGraph.mean_field(f.space.n))


def subset_ranks(space: StateSpace, color: int) -> np.ndarray:
    """Combinatorial-number-system rank of the region of ``color`` (1-based).

    Positions ``p_0 < p_1 < ...`` (0-based) map to ``sum_k C(p_k, k+1)``.
    """
    _check_color(space, color)
    mask = space.words == (color - 1)
    k_index = np.cumsum(mask, axis=1) - 1
    n = space.n
    table = np.array([[math.comb(p, k + 1) for k in range(n)] for p in range(n)],
                     dtype=np.int64)
    pos = np.broadcast_to(np.arange(n), mask.shape)
    contrib = np.where(mask, table[pos, np.clip(k_index, 0, n - 1)], 0)
    return contrib.sum(axis=1)


def _check_color(space, color):
    if not 1 <= color <= space.profile.l:
        raise ValueError(f"color {color} outside 1..{space.profile.l}")


def conditional_decomposition(f: Observable, color: int) -> tuple[float, float]:
    """Chain-rule split of ``Ent(f)`` given the region of ``color``.

    Returns ``(E[Ent(f | xi)], Ent(E[f | xi]))``; the second term is the
    entropy of the induced function on ``k_color``-subsets of sites.
    """
    space = f.space
    v = _nonnegative(f.values)
    _check_color(space, color)
    groups = subset_ranks(space, color)
    n_groups = math.comb(space.n, space.profile.counts[color - 1])
    counts = np.bincount(groups, minlength=n_groups).astype(float)
    means = np.bincount(groups, weights=v, minlength=n_groups) / counts
    scaled = np.divide(v, means[groups], out=np.ones_like(v), where=means[groups] > 0)
    dens = means[groups] * relative_entropy_density(scaled)
    local = float(np.bincount(groups, weights=dens, minlength=n_groups).sum() / space.size)
    projected = entropy_of(means, weights=counts)
    return local, projected


def induced_subset_function(f: Observable, color: int) -> np.ndarray:
    """``F`` with ``E[f | xi_color] = F(xi_color)``, indexed by subset rank."""
    space = f.space
    groups = subset_ranks(space, color)
    n_groups = math.comb(space.n, space.profile.counts[color - 1])
    counts = np.bincount(groups, minlength=n_groups)
    return np.bincount(groups, weights=f.values, minlength=n_groups) / counts


def weighted_entropy_split(f: Observable) -> tuple[float, float]:
    """``(sigma1, sigma2)`` with weights ``1 - k_l/n``; sums to ``(L-1) Ent(f)``."""
    profile = f.space.profile
    if profile.l < 2:
        raise DegenerateSpaceError("the weighted split needs at least two colors")
    s1 = s2 = 0.0
    for color, k in enumerate(profile.counts, start=1):
        local, projected = conditional_decomposition(f, color)
        weight = 1.0 - k / profile.n
        s1 += weight * local
        s2 += weight * projected
    return s1, s2


@dataclass(frozen=True)
class FunctionalReport:
    mean: float
    variance: float
    entropy: float | None
    dirichlet_ff: float
    dirichlet_sqrt: float | None
    dirichlet_flog: float | None
    ratio_ls: float | None
    ratio_mls: float | None


def functional_report(f: Observable, graph: WeightedGraph | None = None) -> FunctionalReport:
    if graph is None:
        graph = WeightedGraph.mean_field(f.space.n)
    v = f.values
    dff = dirichlet_form(f, f, graph)
    if v.min() < -NEGATIVE_NOISE:
        return FunctionalReport(expectation(f), variance(f), None, dff, None, None, None, None)
    ent = entropy(f)
    root = f.map(lambda x: np.sqrt(np.maximum(x, 0.0)))
    dsq = dirichlet_form(root, root, graph)
    dlog = None
    if v.min() > 0:
        dlog = dirichlet_form(f, f.map(np.log), graph)
    return FunctionalReport(
        mean=expectation(f), variance=variance(f), entropy=ent,
        dirichlet_ff=dff, dirichlet_sqrt=dsq, dirichlet_flog=dlog,
        ratio_ls=ent / dsq if dsq > 0 else None,
        ratio_mls=ent / dlog if dlog else None,
    )
