"""
Closed-form log-Sobolev bounds and the recursive induction engine.

All logarithms are natural.  Profiles are canonicalized (sorted in decreasing
order) before evaluation, since every bound depends only on the multiset of
color counts.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

from .core import ColorProfile, as_profile
from .errors import DegenerateSpaceError

LOG2 = math.log(2.0)
UNKNOWN_EPSILON = "times an unspecified universal constant epsilon > 0"


def _need_two_colors(profile: ColorProfile):
    if profile.l < 2:
        raise DegenerateSpaceError(f"profile ({profile}) needs at least two colors")


def bound_complete_graph(n: int) -> float:
    """Exact log-Sobolev constant of the profile ``(1, n-1)``."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if n == 2:
        return 2.0
    return n * math.log(n - 1) / (n - 2)


def bound_random_transposition(n: int) -> tuple[float, float]:
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return math.log(n), 4.0 * math.log(n)


def bernoulli_laplace_upper(k: int, n: int) -> float:
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    return 2.0 / LOG2 * math.log(n * n / (k * (n - k)))


def bound_bernoulli_laplace(k: int, n: int) -> tuple[float, float]:
    """``(lower_shape, upper)``; the lower side holds only up to a constant."""
    upper = bernoulli_laplace_upper(k, n)
    return math.log(n * n / (k * (n - k))), upper


def bound_fow(profile) -> float:
    profile = as_profile(profile).canonical()
    _need_two_colors(profile)
    n = profile.n
    return 2.0 / LOG2 * sum(math.log(4.0 * n / k) for k in profile.counts)


def phi(profile) -> float:
    """``(4 / log 2) log(n / k_min)``; zero for a single color."""
    profile = as_profile(profile)
    return 4.0 / LOG2 * math.log(profile.n / profile.kappa_min)


def bound_main(profile) -> tuple[float, float]:
    profile = as_profile(profile).canonical()
    _need_two_colors(profile)
    lo = math.log(profile.n / profile.kappa_min)
    return lo, 4.0 / LOG2 * lo


def bound_trivial_chain(profile) -> float:
    """Log-Sobolev constant of the single-site refresh chain."""
    profile = as_profile(profile).canonical()
    _need_two_colors(profile)
    n, k = profile.n, profile.kappa_min
    if 2 * k == n:
        return 2.0
    return n / (n - 2 * k) * math.log(n / k - 1)


def two_color_weight(profile, color: int) -> tuple[float, float]:
    """``((1 - k_l/n) * BL-upper(k_l, n), (2 / log 2) log(n / k_min))``."""
    profile = as_profile(profile)
    _need_two_colors(profile)
    k, n = profile.counts[color - 1], profile.n
    lhs = (1.0 - k / n) * bernoulli_laplace_upper(k, n)
    bound = 2.0 / LOG2 * math.log(n / profile.kappa_min)
    return lhs, bound


def t_inequality(t: float) -> float:
    """``t log t - (1 - t) log(1 - t)``, nonpositive on ``[0, 1/2]``."""
    def xlx(x):
        return 0.0 if x == 0 else x * math.log(x)
    return xlx(t) - xlx(1.0 - t)


@dataclass(frozen=True)
class RecursionStep:
    profile: tuple[int, ...]
    l: int
    sigma1_coefficient: float
    sigma1_phi_coefficient: float
    sigma2_term: float
    value: float
    phi: float


@dataclass
class RecursionTrace:
    steps: list[RecursionStep] = field(default_factory=list)

    @property
    def final(self) -> float:
        return self.steps[-1].value

    def to_dict(self) -> dict:
        return {"steps": [asdict(s) for s in self.steps], "final": self.final}


def _sigma2_term(counts: tuple[int, ...]) -> float:
    n = sum(counts)
    return max(2.0 * (1.0 - k / n) * bernoulli_laplace_upper(k, n) for k in counts)


@lru_cache(maxsize=None)
def _recursive_value(counts: tuple[int, ...]) -> float:
    if len(counts) == 2:
        return bernoulli_laplace_upper(counts[0], sum(counts))
    l = len(counts)
    subs = {counts[:i] + counts[i + 1:] for i in range(l)}
    sub_max = max(_recursive_value(s) for s in subs)
    return ((l - 2) * sub_max + _sigma2_term(counts)) / (l - 1)


def recursive_upper(profile) -> tuple[float, RecursionTrace]:
    """Evaluate the recursive log-Sobolev estimate down to two colors.

    Two-color profiles use the Bernoulli-Laplace upper bound.  For ``L >= 3``,
    ``(L-1) tau(k) <= (L-2) max_l tau(k without l) + max_l 2 (1 - k_l/n) BL(k_l, n)``
    with the sub-profile values obtained recursively.  The trace lists each
    distinct sub-profile once, children before parents.
    """
    profile = as_profile(profile).canonical()
    _need_two_colors(profile)
    trace = RecursionTrace()
    seen = set()

    def visit(counts):
        if counts in seen:
            return
        seen.add(counts)
        l = len(counts)
        subs = sorted({counts[:i] + counts[i + 1:] for i in range(l)}, reverse=True)
        if l > 2:
            for s in subs:
                visit(s)
            sub_max = max(_recursive_value(s) for s in subs)
            sub_phi = max(phi(ColorProfile(s)) for s in subs)
            coef, phi_coef = (l - 2) * sub_max, (l - 2) * sub_phi
        else:
            coef = phi_coef = 0.0
        trace.steps.append(RecursionStep(
            profile=counts, l=l, sigma1_coefficient=coef,
            sigma1_phi_coefficient=phi_coef, sigma2_term=_sigma2_term(counts),
            value=_recursive_value(counts), phi=phi(ColorProfile(counts))))

    visit(profile.counts)
    return trace.final, trace


def bound_iota(profile) -> tuple[float, float]:
    """Bounds on the small-set expansion constant."""
    profile = as_profile(profile).canonical()
    _need_two_colors(profile)
    scale = profile.n / math.log(profile.n / profile.kappa_min)
    return LOG2 / 4.0 * scale, scale


def bound_colored(profile, c_g: float, tau_rel_g: float) -> tuple[float, float]:
    """Log-Sobolev interval for the colored exclusion process on ``G``."""
    profile = as_profile(profile).canonical()
    _need_two_colors(profile)
    if not c_g > 0 or not tau_rel_g > 0:
        raise ValueError(f"need positive c(G) and tau_rel(G), got {c_g}, {tau_rel_g}")
    lo = math.log(profile.n / profile.kappa_min)
    return max(2.0 * tau_rel_g, lo), 4.0 / LOG2 * c_g * lo


@dataclass(frozen=True)
class Interval:
    lower: float | None
    upper: float | None
    source: str
    note: str = ""

    def consistent(self) -> bool:
        if self.lower is None or self.upper is None:
            return True
        return self.lower <= self.upper


@dataclass
class BoundsReport:
    profile: tuple[int, ...]
    intervals: dict[str, Interval]
    flags: dict[str, bool]

    def to_dict(self) -> dict:
        return {
            "profile": list(self.profile),
            "intervals": {k: {**asdict(v), "kind": "closed_form"} for k, v in self.intervals.items()},
            "flags": dict(self.flags),
        }

    def rows(self):
        label = ",".join(map(str, self.profile))
        for name, iv in self.intervals.items():
            yield {"profile": label, "bound": name, "lower": iv.lower, "upper": iv.upper,
                   "source": iv.source, "note": iv.note}


def bounds_report(profile, c_g: float | None = None, tau_rel_g: float | None = None) -> BoundsReport:
    profile = as_profile(profile).canonical()
    _need_two_colors(profile)
    n, k_min = profile.n, profile.kappa_min
    iv: dict[str, Interval] = {}
    lo, up = bound_main(profile)
    iv["main"] = Interval(lo, up, "main theorem")
    iv["fow"] = Interval(None, bound_fow(profile), "general bound")
    iv["trivial_chain"] = Interval(bound_trivial_chain(profile), bound_trivial_chain(profile),
                                   "single-site chain", "exact constant of the one-site refresh")
    rec, _ = recursive_upper(profile)
    iv["recursive"] = Interval(None, rec, "recursive estimate")
    il, iu = bound_iota(profile)
    iv["iota"] = Interval(il, iu, "small-set expansion")
    if profile.l == 2:
        shape, bl = bound_bernoulli_laplace(k_min, n)
        iv["bernoulli_laplace"] = Interval(None, bl, "two-urn model", f"lower = {shape!r} {UNKNOWN_EPSILON}")
        if k_min == 1:
            exact = bound_complete_graph(n)
            iv["complete_graph"] = Interval(exact, exact, "complete graph", "exact")
    if all(k == 1 for k in profile.counts):
        iv["random_transposition"] = Interval(*bound_random_transposition(n), "symmetric group")
    if c_g is not None and tau_rel_g is not None:
        iv["colored"] = Interval(*bound_colored(profile, c_g, tau_rel_g), "colored exclusion")
    flags = {f"{name}_consistent": v.consistent() for name, v in iv.items()}
    flags["recursion_closes"] = rec <= up + 1e-12
    flags["main_improves_fow"] = up <= iv["fow"].upper
    return BoundsReport(profile.counts, iv, flags)
