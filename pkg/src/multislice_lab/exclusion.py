"""
Colored exclusion dynamics: exact total-variation decay and simulation.

Exact curves use uniformization: with ``lam`` the largest exit rate and
``P = I + L / lam``, ``exp(tL) = sum_m Poisson(m; lam t) P^m``.  The series is
cut at the first ``m`` whose Poisson tail is below ``tail`` for every time on
the grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.stats import poisson

from .constants import SparseOperator, build_generator, poincare_constant
from .core import DEFAULT_STATE_CAP, WeightedGraph, as_profile, check_word, rank_word
from .errors import DegenerateSpaceError, GraphError, HorizonError, MultisliceError

TV_DIMENSION_CAP = 20_000
WORST_START_CAP = 5_000
MAX_TERMS = 2_000_000


def exclusion_generator(profile, graph: WeightedGraph, *, cap: int | None = DEFAULT_STATE_CAP) -> SparseOperator:
    """Generator of the colored exclusion process: swap ``(i, j)`` at rate ``G_ij``."""
    profile = as_profile(profile)
    if graph.n != profile.n:
        raise GraphError(f"graph has {graph.n} sites but the profile has n={profile.n}")
    return build_generator(profile, graph, cap=cap)


@dataclass
class MixingCurve:
    times: np.ndarray
    tv: np.ndarray
    policy: str
    start: int | None = None
    terms: int = 0

    def rows(self):
        return [{"time": float(t), "tv": float(v)} for t, v in zip(self.times, self.tv)]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "tv"])
            for t, v in zip(self.times, self.tv):
                w.writerow([repr(float(t)), repr(float(v))])


def default_grid(gap: float | None = None, points: int = 64) -> np.ndarray:
    """``0`` followed by a geometric grid over ``[0.01, 20] / gap``."""
    lo, hi = (0.01 / gap, 20.0 / gap) if gap else (0.01, 100.0)
    return np.concatenate([[0.0], np.geomspace(lo, hi, points)])


def _truncation(mu_max: float, tail: float) -> int:
    if mu_max == 0:
        return 0
    m = int(poisson.isf(tail, mu_max)) + 1
    while poisson.sf(m, mu_max) >= tail:
        m += 1
    return m


def tv_decay_exact(op: SparseOperator, start="worst", times=None, *,
                   tail: float = 1e-13, order_factor: float = 1.0) -> MixingCurve:
    """Worst-case (or single-start) total-variation distance to uniform.

    ``start`` is a state rank, ``"worst"`` (maximum over all starts) or
    ``"transitive"`` (rank 0, valid only for mean-field dynamics).
    """
    size = op.dimension
    if size > TV_DIMENSION_CAP:
        raise MultisliceError(f"exact curves need dimension <= {TV_DIMENSION_CAP}, got {size}")
    if times is None:
        times = default_grid(1.0 / poincare_constant(op).value)
    times = np.asarray(times, dtype=float)
    if (times < 0).any():
        raise ValueError("times must be nonnegative")

    if start == "worst":
        if size > WORST_START_CAP:
            raise MultisliceError(
                f"worst-start curves are limited to {WORST_START_CAP} states; give a start rank")
        starts = np.arange(size)
        policy = "worst"
    elif start == "transitive":
        if op.graph.kind != "mean_field":
            raise ValueError("the transitive policy is only valid for mean-field dynamics")
        starts = np.array([0])
        policy = "transitive"
    else:
        r = int(start)
        if not 0 <= r < size:
            raise IndexError(f"start rank {r} outside [0, {size})")
        starts = np.array([r])
        policy = "single"

    lam = op.max_exit_rate()
    p = (sp.identity(size, format="csr") - op.kernel / lam).tocsr()
    m_max = int(math.ceil(_truncation(lam * times.max(), tail) * order_factor))
    if m_max > MAX_TERMS:
        raise MultisliceError(f"uniformization needs {m_max} terms, above the budget {MAX_TERMS}")
    ms = np.arange(m_max + 1)
    weights = np.stack([poisson.pmf(ms, lam * t) for t in times])  # (T, M+1)

    worst = np.zeros(len(times))
    block = max(1, int(4_000_000 // max(1, len(times) * size)))
    for b0 in range(0, len(starts), block):
        cols = starts[b0:b0 + block]
        v = np.zeros((size, len(cols)))
        v[cols, np.arange(len(cols))] = 1.0
        acc = np.zeros((len(times), size, len(cols)))
        for m in range(m_max + 1):
            acc += weights[:, m, None, None] * v[None]
            if m < m_max:
                v = p @ v
        tv = 0.5 * np.abs(acc - 1.0 / size).sum(axis=1)  # (T, B)
        worst = np.maximum(worst, tv.max(axis=1))
    return MixingCurve(times, worst, policy, None if policy == "worst" else int(starts[0]), m_max)


def mixing_time(curve: MixingCurve, eps: float) -> float:
    """First grid time with ``tv <= eps``, interpolated linearly."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    below = np.flatnonzero(curve.tv <= eps)
    if below.size == 0:
        raise HorizonError(f"curve never drops below eps={eps} before t={curve.times[-1]:g}")
    k = int(below[0])
    if k == 0:
        return float(curve.times[0])
    t0, t1 = curve.times[k - 1], curve.times[k]
    v0, v1 = curve.tv[k - 1], curve.tv[k]
    return float(t0 + (v0 - eps) * (t1 - t0) / (v0 - v1))


@dataclass
class TrajectorySample:
    """Accepted swaps of one simulated path; ``start`` uses 1-based colors."""

    seed: int
    start: tuple[int, ...]
    times: np.ndarray
    swaps: np.ndarray  # (events, 2), 0-based sites
    horizon: float
    final: tuple[int, ...] = field(default=())
    proposals: int = 0

    def words(self):
        w = list(self.start)
        yield tuple(w)
        for i, j in self.swaps:
            w[i], w[j] = w[j], w[i]
            yield tuple(w)

    @property
    def ranks(self) -> list[int]:
        counts = [0] * max(self.start)
        for c in self.start:
            counts[c - 1] += 1
        return [rank_word(counts, w) for w in self.words()]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("# start: " + ",".join(map(str, self.start)) + "\n")
            w = csv.writer(fh)
            w.writerow(["time", "i", "j"])
            for t, (i, j) in zip(self.times, self.swaps):
                w.writerow([repr(float(t)), int(i) + 1, int(j) + 1])


def simulate_trajectory(profile, graph: WeightedGraph, start, horizon: float, seed: int,
                        batch: int = 4096) -> TrajectorySample:
    """Event-driven path up to ``horizon``, without enumerating the state space.

    Candidate swaps arrive as a Poisson process of rate ``sum_{i<j} G_ij`` with
    pair ``(i, j)`` chosen proportionally to ``G_ij``; a candidate whose two
    sites carry the same color leaves the state unchanged and is not recorded.
    This thinning is exact for the dynamics in which only pairs of distinct
    colors jump.
    """
    profile = as_profile(profile)
    if profile.l < 2:
        raise DegenerateSpaceError(f"profile ({profile}) has a single color: nothing moves")
    if graph.n != profile.n:
        raise GraphError(f"graph has {graph.n} sites but the profile has n={profile.n}")
    word = np.array(check_word(profile, start), dtype=np.int64)
    edges = graph.edges()
    if not edges:
        raise DegenerateSpaceError("graph has no edges")
    ei = np.array([e[0] for e in edges])
    ej = np.array([e[1] for e in edges])
    w = np.array([e[2] for e in edges])
    total = float(w.sum())
    cum = np.cumsum(w) / total
    cum[-1] = 1.0
    rng = np.random.default_rng(seed)
    t = 0.0
    times, swaps = [], []
    proposals = 0
    while True:
        dts = rng.exponential(1.0 / total, size=batch)
        picks = np.searchsorted(cum, rng.random(batch), side="right")
        stamps = t + np.cumsum(dts)
        done = False
        for s, e in zip(stamps, picks):
            if s > horizon:
                done = True
                break
            proposals += 1
            i, j = ei[e], ej[e]
            if word[i] != word[j]:
                word[i], word[j] = word[j], word[i]
                times.append(s)
                swaps.append((i, j))
        if done:
            break
        t = stamps[-1]
    return TrajectorySample(
        seed=seed, start=tuple(int(c) for c in check_word(profile, start)),
        times=np.array(times), swaps=np.array(swaps, dtype=np.int64).reshape(-1, 2),
        horizon=horizon, final=tuple(int(c) for c in word), proposals=proposals)


def replica_seeds(master_seed: int, count: int) -> list[int]:
    """Independent per-replica seeds derived from a master seed by counter."""
    return [int(np.random.SeedSequence(master_seed, spawn_key=(k,)).generate_state(1)[0])
            for k in range(count)]


def simulate_replicas(profile, graph: WeightedGraph, start, horizon: float,
                      master_seed: int, count: int) -> np.ndarray:
    """Final words (1-based colors) of ``count`` independent replicas."""
    out = [simulate_trajectory(profile, graph, start, horizon, s).final
           for s in replica_seeds(master_seed, count)]
    return np.array(out, dtype=np.int64)
