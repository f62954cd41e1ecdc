"""
Multislice enumeration, indexing, transposition moves and weighted graphs.

Words are tuples of 1-based colors and positions are 1-based at every public
entry point.  The enumerated state space stores words as a ``uint8`` array of
0-based colors, one row per state in lexicographic order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CapExceededError,
    GraphError,
    MalformedStateError,
    ProfileError,
)

DEFAULT_STATE_CAP = 200_000

GRAPH_KINDS = ("mean_field", "complete_srw", "cycle", "hypercube", "custom")


@dataclass(frozen=True)
class ColorProfile:
    """The color counts ``(k_1, ..., k_L)`` of a multislice."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(self.counts)
        if not counts:
            raise ProfileError("a profile needs at least one entry")
        for k in counts:
            if isinstance(k, bool) or int(k) != k or k < 1:
                raise ProfileError(f"profile entries must be positive integers, got {k!r}")
        object.__setattr__(self, "counts", tuple(int(k) for k in counts))

    @classmethod
    def parse(cls, text: str) -> "ColorProfile":
        """Parse ``"2,2,1"``."""
        parts = [p.strip() for p in str(text).split(",")]
        try:
            counts = [int(p) for p in parts]
        except ValueError:
            raise ProfileError(f"cannot parse profile {text!r}") from None
        return cls(tuple(counts))

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def l(self) -> int:
        return len(self.counts)

    @property
    def kappa_min(self) -> int:
        return min(self.counts)

    def canonical(self) -> "ColorProfile":
        """Entries sorted in decreasing order."""
        return ColorProfile(tuple(sorted(self.counts, reverse=True)))

    def without(self, index: int) -> "ColorProfile":
        """Drop the entry at 0-based ``index``."""
        rest = self.counts[:index] + self.counts[index + 1:]
        return ColorProfile(rest)

    def __str__(self):
        return ",".join(str(k) for k in self.counts)


def as_profile(profile) -> ColorProfile:
    if isinstance(profile, ColorProfile):
        return profile
    if isinstance(profile, str):
        return ColorProfile.parse(profile)
    return ColorProfile(tuple(profile))


def multinomial_size(profile) -> int:
    """Exact multinomial coefficient ``n! / (k_1! ... k_L!)``."""
    profile = as_profile(profile)
    size, placed = 1, 0
    for k in profile.counts:
        placed += k
        size *= math.comb(placed, k)
    return size


def check_word(profile: ColorProfile, word: Sequence[int]) -> tuple[int, ...]:
    word = tuple(int(c) for c in word)
    if len(word) != profile.n:
        raise MalformedStateError(f"word {word} has length {len(word)}, expected {profile.n}")
    counts = [0] * profile.l
    for c in word:
        if not 1 <= c <= profile.l:
            raise MalformedStateError(f"color {c} outside 1..{profile.l} in word {word}")
        counts[c - 1] += 1
    if tuple(counts) != profile.counts:
        raise MalformedStateError(
            f"word {word} has color counts {tuple(counts)}, expected {profile.counts}")
    return word


def rank_word(profile, word: Sequence[int]) -> int:
    """Lexicographic rank of ``word`` without materializing the space."""
    profile = as_profile(profile)
    word = check_word(profile, word)
    rem = list(profile.counts)
    mult = multinomial_size(profile)
    r = 0
    for p, letter in enumerate(word):
        m = profile.n - p
        for c in range(letter - 1):
            if rem[c]:
                r += mult * rem[c] // m
        mult = mult * rem[letter - 1] // m
        rem[letter - 1] -= 1
    return r


def unrank_word(profile, idx: int) -> tuple[int, ...]:
    profile = as_profile(profile)
    size = multinomial_size(profile)
    if not 0 <= idx < size:
        raise IndexError(f"index {idx} outside [0, {size})")
    rem = list(profile.counts)
    mult = size
    word = []
    for p in range(profile.n):
        m = profile.n - p
        for c in range(profile.l):
            if not rem[c]:
                continue
            block = mult * rem[c] // m
            if idx < block:
                word.append(c + 1)
                mult = block
                rem[c] -= 1
                break
            idx -= block
    return tuple(word)


@lru_cache(maxsize=64)
def _lex_words(counts: tuple[int, ...]) -> np.ndarray:
    m = sum(counts)
    if m == 0:
        return np.zeros((1, 0), dtype=np.uint8)
    blocks = []
    for c, k in enumerate(counts):
        if not k:
            continue
        sub = _lex_words(counts[:c] + (k - 1,) + counts[c + 1:])
        block = np.empty((sub.shape[0], m), dtype=np.uint8)
        block[:, 0] = c
        block[:, 1:] = sub
        blocks.append(block)
    return np.concatenate(blocks, axis=0)


def rank_rows(words: np.ndarray, counts: Sequence[int]) -> np.ndarray:
    """Vectorized lexicographic rank of 0-based word rows."""
    words = np.asarray(words)
    rows, n = words.shape
    total = multinomial_size(counts)
    if total >= 2**62 // max(n, 1):
        raise CapExceededError("multinomial too large for vectorized ranking",
                               cap_name="int64", cap=2**62, requested=total)
    rem = np.tile(np.asarray(counts, dtype=np.int64), (rows, 1))
    mult = np.full(rows, total, dtype=np.int64)
    out = np.zeros(rows, dtype=np.int64)
    ar = np.arange(rows)
    for p in range(n):
        m = n - p
        letter = words[:, p].astype(np.int64)
        for c in range(len(counts)):
            out += np.where(letter > c, mult * rem[:, c] // m, 0)
        mult = mult * rem[ar, letter] // m
        rem[ar, letter] -= 1
    return out


class StateSpace:
    """The enumerated multislice with bijective rank/unrank.

    ``words[r]`` is the state of rank ``r`` (0-based colors).  Construction
    refuses spaces larger than ``cap`` states.
    """

    def __init__(self, profile, cap: int | None = DEFAULT_STATE_CAP):
        self.profile = as_profile(profile)
        self.size = multinomial_size(self.profile)
        if cap is not None and self.size > cap:
            raise CapExceededError(
                f"state space of {self.profile} has {self.size} states, above the "
                f"state cap {cap} (--cap-states)",
                cap_name="cap_states", cap=cap, requested=self.size)
        self.cap = cap
        self.words = _lex_words(self.profile.counts)
        self.words.setflags(write=False)
        self._swap_cache: dict[tuple[int, int], np.ndarray] = {}
        self._codes = None

    @property
    def n(self) -> int:
        return self.profile.n

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"StateSpace(({self.profile}), size={self.size})"

    def rank(self, word: Sequence[int]) -> int:
        return rank_word(self.profile, word)

    def unrank(self, idx: int) -> tuple[int, ...]:
        if not 0 <= idx < self.size:
            raise IndexError(f"index {idx} outside [0, {self.size})")
        return tuple(int(c) + 1 for c in self.words[idx])

    def word(self, idx: int) -> tuple[int, ...]:
        return self.unrank(idx)

    def _code_table(self):
        # base-L integer codes sort exactly like the words
        if self._codes is None:
            L, n = self.profile.l, self.n
            if L ** n < 2**62:
                powers = L ** np.arange(n - 1, -1, -1, dtype=np.int64)
                self._codes = (self.words.astype(np.int64) * powers).sum(axis=1), powers
            else:
                self._codes = (None, None)
        return self._codes

    def swap_index(self, i: int, j: int) -> np.ndarray:
        """Rank of ``w^{ij}`` for every rank ``w`` (0-based positions)."""
        key = (min(i, j), max(i, j))
        hit = self._swap_cache.get(key)
        if hit is not None:
            return hit
        i, j = key
        codes, powers = self._code_table()
        wi = self.words[:, i].astype(np.int64)
        wj = self.words[:, j].astype(np.int64)
        if codes is not None:
            target = codes + (wj - wi) * (powers[i] - powers[j])
            idx = np.searchsorted(codes, target)
        else:
            swapped = self.words.copy()
            swapped[:, [i, j]] = swapped[:, [j, i]]
            idx = rank_rows(swapped, self.profile.counts)
        idx.setflags(write=False)
        self._swap_cache[key] = idx
        return idx

    def pairs(self):
        """All 0-based position pairs ``i < j``."""
        n = self.n
        return [(i, j) for i in range(n) for j in range(i + 1, n)]


def transposition_image(word: Sequence[int], i: int, j: int) -> tuple[int, ...]:
    """Swap the letters at 1-based positions ``i < j``."""
    word = tuple(word)
    if not (1 <= i < j <= len(word)):
        raise ValueError(f"need 1 <= i < j <= {len(word)}, got i={i}, j={j}")
    out = list(word)
    out[i - 1], out[j - 1] = out[j - 1], out[i - 1]
    return tuple(out)


def color_region(word: Sequence[int], color: int, n_colors: int | None = None) -> frozenset[int]:
    """1-based positions carrying ``color``."""
    if n_colors is None:
        n_colors = max(word)
    if not 1 <= color <= n_colors:
        raise ValueError(f"color {color} outside 1..{n_colors}")
    return frozenset(p + 1 for p, c in enumerate(word) if c == color)


def coarsening_map(profile) -> tuple[int, ...]:
    """Block projection: entry ``i-1`` is the color of site ``i``.

    Sites ``k_1 + ... + k_{l-1} + 1`` through ``k_1 + ... + k_l`` map to ``l``.
    """
    profile = as_profile(profile)
    out = []
    for color, k in enumerate(profile.counts, start=1):
        out.extend([color] * k)
    return tuple(out)


def coarsening_ranks(profile, fine: StateSpace | None = None) -> np.ndarray:
    """Rank in the coarse space of the image of each permutation word."""
    profile = as_profile(profile)
    if fine is None:
        fine = StateSpace((1,) * profile.n)
    psi = np.asarray(coarsening_map(profile), dtype=np.uint8) - 1
    return rank_rows(psi[fine.words], profile.counts)


def pullback(values: np.ndarray, profile, fine: StateSpace | None = None) -> np.ndarray:
    """``f o Psi`` as an observable on the permutation space."""
    return np.asarray(values)[coarsening_ranks(profile, fine)]


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric nonnegative pair rates ``G_ij`` on ``n`` sites."""

    weights: np.ndarray
    kind: str = "custom"
    label: str = field(default="")

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError("weights must be a square array")
        if not np.allclose(w, w.T, rtol=0, atol=1e-15):
            raise GraphError("weights must be symmetric")
        if (w < 0).any():
            raise GraphError("weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise GraphError("weights must vanish on the diagonal")
        if self.kind not in GRAPH_KINDS:
            raise GraphError(f"unknown graph kind {self.kind!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not self.label:
            object.__setattr__(self, "label", f"{self.kind}({w.shape[0]})")

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def edges(self):
        """``(i, j, G_ij)`` with 0-based ``i < j`` and positive weight."""
        iu, ju = np.triu_indices(self.n, k=1)
        w = self.weights[iu, ju]
        keep = w > 0
        return list(zip(iu[keep].tolist(), ju[keep].tolist(), w[keep].tolist()))

    def is_connected(self) -> bool:
        from scipy.sparse.csgraph import connected_components
        ncomp, _ = connected_components(self.weights > 0, directed=False)
        return ncomp == 1

    def degree(self) -> int | None:
        """Common neighbor count if the graph is regular, else ``None``."""
        deg = (self.weights > 0).sum(axis=1)
        return int(deg[0]) if (deg == deg[0]).all() else None

    @classmethod
    def mean_field(cls, n: int) -> "WeightedGraph":
        _need_sites(n, 2)
        w = np.full((n, n), 1.0 / n)
        np.fill_diagonal(w, 0.0)
        return cls(w, "mean_field")

    @classmethod
    def complete_srw(cls, n: int) -> "WeightedGraph":
        _need_sites(n, 2)
        w = np.full((n, n), 1.0 / (n - 1))
        np.fill_diagonal(w, 0.0)
        return cls(w, "complete_srw")

    @classmethod
    def cycle(cls, n: int) -> "WeightedGraph":
        _need_sites(n, 3)
        w = np.zeros((n, n))
        for i in range(n):
            w[i, (i + 1) % n] = w[(i + 1) % n, i] = 0.5
        return cls(w, "cycle")

    @classmethod
    def hypercube(cls, d: int) -> "WeightedGraph":
        if d < 1:
            raise GraphError("hypercube dimension must be >= 1")
        n = 2 ** d
        w = np.zeros((n, n))
        for v in range(n):
            for b in range(d):
                w[v, v ^ (1 << b)] = 1.0 / d
        return cls(w, "hypercube", label=f"hypercube({d})")

    @classmethod
    def from_edge_list(cls, text: str) -> "WeightedGraph":
        """Parse ``n <count>`` followed by ``i j weight`` lines (1-based)."""
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise GraphError("empty edge list")
        head = lines[0].split()
        if len(head) != 2 or head[0] != "n":
            raise GraphError(f"edge list must start with 'n <count>', got {lines[0]!r}")
        try:
            n = int(head[1])
        except ValueError:
            raise GraphError(f"bad site count {head[1]!r}") from None
        _need_sites(n, 2)
        w = np.zeros((n, n))
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 3:
                raise GraphError(f"expected 'i j weight', got {ln!r}")
            try:
                i, j, x = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise GraphError(f"cannot parse edge line {ln!r}") from None
            if not (1 <= i <= n and 1 <= j <= n) or i == j:
                raise GraphError(f"bad edge ({i}, {j}) for n={n}")
            if x < 0 or not math.isfinite(x):
                raise GraphError(f"bad weight {x} on edge ({i}, {j})")
            if w[i - 1, j - 1] not in (0.0, x):
                raise GraphError(f"conflicting weights for edge ({i}, {j})")
            w[i - 1, j - 1] = w[j - 1, i - 1] = x
        return cls(w, "custom")

    def to_edge_list(self) -> str:
        lines = [f"n {self.n}"]
        lines += [f"{i + 1} {j + 1} {x!r}" for i, j, x in self.edges()]
        return "\n".join(lines) + "\n"


def _need_sites(n, least):
    if int(n) != n or n < least:
        raise GraphError(f"need at least {least} sites, got {n}")


def graph_by_name(spec: str, n: int) -> WeightedGraph:
    """Resolve a CLI graph spec: a built-in kind name or ``@path``."""
    spec = spec.strip()
    if spec.startswith("@"):
        g = WeightedGraph.from_edge_list(Path(spec[1:]).read_text())
        if g.n != n:
            raise GraphError(f"graph file has {g.n} sites but the profile has n={n}")
        return g
    if spec == "mean_field":
        return WeightedGraph.mean_field(n)
    if spec == "complete_srw":
        return WeightedGraph.complete_srw(n)
    if spec == "cycle":
        return WeightedGraph.cycle(n)
    if spec == "hypercube":
        d = n.bit_length() - 1
        if 2 ** d != n:
            raise GraphError(f"hypercube needs a power-of-two site count, got n={n}")
        return WeightedGraph.hypercube(d)
    raise GraphError(f"unknown graph {spec!r}; expected one of "
                     f"mean_field, complete_srw, cycle, hypercube or @file")


def compositions(n: int, min_parts: int = 1) -> Iterable[tuple[int, ...]]:
    """All ordered compositions of ``n``."""
    for mask in range(2 ** (n - 1)):
        parts, run = [], 1
        for b in range(n - 1):
            if mask >> b & 1:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        if len(parts) >= min_parts:
            yield tuple(parts)


def partitions(n: int, max_part: int | None = None) -> Iterable[tuple[int, ...]]:
    """Integer partitions of ``n`` in decreasing order of parts."""
    if max_part is None:
        max_part = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest
