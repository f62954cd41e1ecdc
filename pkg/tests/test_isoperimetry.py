import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multislice_lab import bounds
from multislice_lab import functionals as fn
from multislice_lab.core import StateSpace, WeightedGraph, transposition_image
from multislice_lab.errors import CapExceededError, DegenerateSpaceError
from multislice_lab.isoperimetry import (
    SubsetMask,
    brute_force_iota,
    candidate_bound,
    conductance_ratio,
    edge_boundary,
    extremal_set,
    log_binomial,
    neighbor_table,
    sharpness_curve,
)
from multislice_lab.verify import iota_family


def boundary_oracle(space, members):
    """Count transposition edges leaving ``members`` by walking words."""
    count = 0
    n = space.n
    for r in members:
        w = space.unrank(r)
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                s = space.rank(transposition_image(w, i, j))
                if s != r and s not in members:
                    count += 1
    return count


def iota_oracle(space):
    """Plain enumeration of all proper nonempty subsets."""
    best, best_code = math.inf, None
    for code in range(1, 2**space.size - 1):
        members = {r for r in range(space.size) if code >> r & 1}
        m = len(members)
        ratio = boundary_oracle(space, members) / m / math.log(space.size / m)
        if ratio < best:
            best, best_code = ratio, code
    return best, best_code


def test_boundary_examples():
    space = StateSpace((1, 3))
    assert edge_boundary(space, np.ones(4, bool)) == 0
    for r in range(4):
        assert edge_boundary(space, SubsetMask.from_ranks([r], 4)) == 3
    bits = extremal_set(space)
    assert edge_boundary(space, bits) == 1 * 3 * bits.sum()


@pytest.mark.parametrize("counts", [(2, 2), (2, 1, 1), (2, 3)])
def test_extremal_set_boundary(counts):
    space = StateSpace(counts)
    bits = extremal_set(space)
    k = min(counts)
    assert edge_boundary(space, bits) == k * (space.n - k) * bits.sum()


def test_neighbor_table_is_regular():
    space = StateSpace((2, 1, 1))
    nbr = neighbor_table(space)
    # effective transpositions: pairs with distinct colors
    assert nbr.shape == (12, 5)
    for r in range(space.size):
        assert r not in nbr[r]


@pytest.mark.parametrize("counts", [(1, 1), (1, 2), (1, 3), (2, 2), (1, 1, 1)])
def test_brute_force_matches_oracle(counts):
    space = StateSpace(counts)
    iota, mask = brute_force_iota(space)
    ref, ref_code = iota_oracle(space)
    assert iota == pytest.approx(ref, rel=1e-12)
    assert mask.to_int() == ref_code
    assert conductance_ratio(space, mask) == pytest.approx(iota, rel=1e-12)


def test_two_states():
    iota, mask = brute_force_iota(StateSpace((1, 1)))
    assert iota == pytest.approx(1 / math.log(2), rel=1e-14)
    assert mask.popcount == 1


def test_complete_graph_four_states():
    space = StateSpace((1, 3))
    iota, _ = brute_force_iota(space)
    by_size = {m: m * (4 - m) / m / math.log(4 / m) for m in (1, 2, 3)}
    assert iota == pytest.approx(min(by_size.values()), rel=1e-14)


def test_cap_and_degenerate():
    with pytest.raises(CapExceededError) as info:
        brute_force_iota(StateSpace((2, 2, 1)))
    assert "candidate_bound" in str(info.value)
    assert info.value.cap == 24
    with pytest.raises(DegenerateSpaceError):
        candidate_bound((5,))


@pytest.mark.parametrize("counts", iota_family())
def test_iota_family_bounds(counts):
    space = StateSpace(counts)
    iota, mask = brute_force_iota(space)
    sharp, loose = candidate_bound(counts)
    n = space.n
    assert n / bounds.phi(counts) - 1e-6 <= iota <= sharp + 1e-9
    assert sharp <= loose + 1e-12
    # equality at the argmin, no smaller value anywhere
    rng = np.random.default_rng(1)
    assert conductance_ratio(space, mask) == pytest.approx(iota, rel=1e-12)
    for _ in range(50):
        bits = rng.random(space.size) < rng.random()
        if 0 < bits.sum() < space.size:
            assert conductance_ratio(space, bits) >= iota - 1e-12


@pytest.mark.parametrize("counts", [(1, 3), (2, 2), (2, 1, 1), (1, 1, 1, 1)])
def test_vs_identities(counts):
    space = StateSpace(counts)
    mf = WeightedGraph.mean_field(space.n)
    rng = np.random.default_rng(2)
    for _ in range(200):
        bits = rng.random(space.size) < 0.5
        m = int(bits.sum())
        if not 0 < m < space.size:
            continue
        f = fn.Observable(space, bits.astype(float))
        d = edge_boundary(space, bits)
        assert d == round(space.n * space.size * fn.dirichlet_form(f, f, mf))
        assert d == boundary_oracle(space, set(np.flatnonzero(bits).tolist()))
        p = m / space.size
        assert fn.entropy(f) == pytest.approx(p * math.log(1 / p), rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([(1, 3), (2, 2), (2, 1, 1), (3, 2)]), st.data())
def test_complement_has_same_boundary(counts, data):
    space = StateSpace(counts)
    bits = np.array(data.draw(st.lists(st.booleans(), min_size=space.size, max_size=space.size)))
    mask = SubsetMask.from_bool(bits)
    assert edge_boundary(space, mask) == edge_boundary(space, mask.complement())


def test_subset_mask_round_trips():
    bits = np.array([1, 0, 0, 1, 1, 0, 0, 0, 0, 1], bool)
    m = SubsetMask.from_bool(bits)
    assert np.array_equal(m.to_bool(), bits)
    assert m.to_int() == sum(1 << r for r in np.flatnonzero(bits))
    assert SubsetMask.from_int(m.to_int(), 10).to_hex() == m.to_hex()
    assert list(m.ranks()) == [0, 3, 4, 9]
    assert m.popcount == 4


@pytest.mark.parametrize("counts, value", [((1, 3), 3 / math.log(4)), ((1, 1), 1 / math.log(2))])
def test_candidate_examples(counts, value):
    assert candidate_bound(counts)[0] == pytest.approx(value, rel=1e-14)


def test_log_binomial():
    assert log_binomial(30, 7) == pytest.approx(math.log(math.comb(30, 7)), rel=1e-13)


def test_sharpness_curve():
    rows = sharpness_curve(1000, n_min=4)
    first = rows[0]
    assert first["profile"] == "2,2"
    assert first["n_over_candidate"] == pytest.approx(math.log(6), rel=1e-14)
    assert first["four_log"] == pytest.approx(4 * math.log(2), rel=1e-14)
    assert rows[-1]["n"] == 1000 and rows[-1]["ratio_vs_4log2"] >= 0.95
    # the profile always sums to n
    assert all(sum(map(int, r["profile"].split(","))) == r["n"] for r in rows)
    even = [r["ratio_vs_4log2"] for r in rows if r["n"] % 2 == 0 and r["n"] >= 10]
    assert all(b >= a for a, b in zip(even, even[1:]))
    with pytest.raises(ValueError):
        sharpness_curve(3)


def test_sweep_is_exhaustive_on_four_states():
    # every one of the 14 proper subsets is reached by the Gray-code walk
    space = StateSpace((1, 3))
    ratios = []
    for code in range(1, 15):
        bits = np.array([(code >> r) & 1 for r in range(4)], bool)
        ratios.append(conductance_ratio(space, bits))
    assert brute_force_iota(space)[0] == pytest.approx(min(ratios), rel=1e-14)
