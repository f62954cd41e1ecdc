"""
Edge boundaries and the small-set expansion constant of the multislice.

``brute_force_iota`` sweeps every subset in Gray-code order so each step
updates the boundary count from the degree split of a single flipped state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import StateSpace, as_profile
from .errors import CapExceededError, DegenerateSpaceError

IOTA_STATE_CAP = 24


@dataclass(frozen=True, eq=False)
class SubsetMask:
    """A subset of states, packed little-endian by rank."""

    packed: np.ndarray
    size: int

    @classmethod
    def from_bool(cls, bits) -> "SubsetMask":
        bits = np.asarray(bits, dtype=bool)
        return cls(np.packbits(bits, bitorder="little"), bits.size)

    @classmethod
    def from_ranks(cls, ranks, size: int) -> "SubsetMask":
        bits = np.zeros(size, dtype=bool)
        bits[np.asarray(list(ranks), dtype=np.int64)] = True
        return cls.from_bool(bits)

    @classmethod
    def from_int(cls, code: int, size: int) -> "SubsetMask":
        return cls.from_bool([(code >> r) & 1 for r in range(size)])

    def to_bool(self) -> np.ndarray:
        return np.unpackbits(self.packed, count=self.size, bitorder="little").astype(bool)

    def to_int(self) -> int:
        return int.from_bytes(self.packed.tobytes(), "little")

    def to_hex(self) -> str:
        return hex(self.to_int())

    @property
    def popcount(self) -> int:
        return int(np.unpackbits(self.packed).sum())

    def complement(self) -> "SubsetMask":
        return SubsetMask.from_bool(~self.to_bool())

    def ranks(self) -> np.ndarray:
        return np.flatnonzero(self.to_bool())


def neighbor_table(space: StateSpace) -> np.ndarray:
    """``(size, degree)`` ranks of the states one transposition away.

    The transposition graph of a multislice is regular, so the table is dense.
    """
    size = space.size
    ar = np.arange(size)
    cols = []
    for i, j in space.pairs():
        idx = space.swap_index(i, j)
        cols.append(idx)
    if not cols:
        return np.zeros((size, 0), dtype=np.int64)
    allc = np.stack(cols, axis=1)
    moved = allc != ar[:, None]
    deg = moved.sum(axis=1)
    if not (deg == deg[0]).all():
        raise AssertionError("transposition graph is not regular")
    return allc[moved].reshape(size, int(deg[0]))


def _as_bool(space, a):
    if isinstance(a, SubsetMask):
        bits = a.to_bool()
    else:
        bits = np.asarray(a, dtype=bool)
    if bits.shape != (space.size,):
        raise ValueError(f"subset has {bits.shape[0]} entries, space has {space.size}")
    return bits


def edge_boundary(space: StateSpace, a) -> int:
    """Number of transposition edges with exactly one endpoint in ``a``."""
    bits = _as_bool(space, a)
    nbr = neighbor_table(space)
    return int((bits[:, None] & ~bits[nbr]).sum())


@numba.njit(cache=True)
def _gray_sweep(nbr, log_ratio):
    size, deg = nbr.shape
    in_a = np.zeros(size, dtype=np.bool_)
    members = 0
    boundary = 0
    best = np.inf
    best_code = np.int64(0)
    code = np.int64(0)
    total = np.int64(1) << size
    for k in range(1, total):
        s = 0
        while not (k >> s) & 1:
            s += 1
        inside = 0
        for t in range(deg):
            if in_a[nbr[s, t]]:
                inside += 1
        if in_a[s]:
            in_a[s] = False
            members -= 1
            boundary += 2 * inside - deg
        else:
            in_a[s] = True
            members += 1
            boundary += deg - 2 * inside
        code ^= np.int64(1) << s
        if 0 < members < size:
            r = boundary / members / log_ratio[members]
            if r < best or (r == best and code < best_code):
                best = r
                best_code = code
    return best, best_code


def brute_force_iota(space: StateSpace, cap: int = IOTA_STATE_CAP) -> tuple[float, SubsetMask]:
    """Minimum of ``(|dA| / |A|) / log(|Omega| / |A|)`` over proper nonempty ``A``.

    Ties go to the smallest mask integer (bit ``r`` set iff rank ``r`` is in ``A``).
    """
    size = space.size
    if size > cap:
        raise CapExceededError(
            f"exhaustive sweep over 2^{size} subsets exceeds the brute-force cap of {cap} "
            f"states; use candidate_bound for larger spaces",
            cap_name="cap_iota", cap=cap, requested=size)
    if size < 2:
        raise DegenerateSpaceError("need at least two states")
    nbr = neighbor_table(space)
    log_ratio = np.array([np.inf] + [math.log(size / m) for m in range(1, size + 1)])
    best, code = _gray_sweep(nbr.astype(np.int64), log_ratio)
    return float(best), SubsetMask.from_int(int(code), size)


def conductance_ratio(space: StateSpace, a) -> float:
    bits = _as_bool(space, a)
    m = int(bits.sum())
    if not 0 < m < space.size:
        raise ValueError("subset must be nonempty and proper")
    return edge_boundary(space, bits) / m / math.log(space.size / m)


def log_binomial(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def candidate_bound(profile) -> tuple[float, float]:
    """Upper bounds on iota from the extremal region set, sharp then loose."""
    profile = as_profile(profile)
    if profile.l < 2:
        raise DegenerateSpaceError("need at least two colors")
    n, k = profile.n, profile.kappa_min
    sharp = k * (n - k) / log_binomial(n, k)
    loose = n / math.log(n / k)
    return sharp, loose


def extremal_set(space: StateSpace) -> np.ndarray:
    """Boolean mask of states whose rarest color occupies sites ``1..k_min``."""
    counts = space.profile.counts
    color = counts.index(space.profile.kappa_min)
    k = counts[color]
    return np.all(space.words[:, :k] == color, axis=1)


def sharpness_curve(n_max: int, n_min: int = 4) -> list[dict]:
    """Even-split profiles ``(floor(n/2), ceil(n/2))`` for ``n_min <= n <= n_max``."""
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    rows = []
    for n in range(n_min, n_max + 1):
        k = n // 2
        sharp, _ = candidate_bound((k, n - k))
        over = n / sharp
        four_log = 4.0 * math.log(n / k)
        rows.append({
            "n": n, "profile": f"{k},{n - k}",
            "n_over_candidate": over, "four_log": four_log,
            "ratio": over / four_log, "ratio_vs_4log2": over / (4.0 * math.log(2.0)),
        })
    return rows
