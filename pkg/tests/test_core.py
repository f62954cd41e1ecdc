import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multislice_lab.core import (
    ColorProfile,
    StateSpace,
    WeightedGraph,
    coarsening_map,
    coarsening_ranks,
    color_region,
    compositions,
    graph_by_name,
    multinomial_size,
    partitions,
    rank_rows,
    rank_word,
    transposition_image,
    unrank_word,
)
from multislice_lab.errors import CapExceededError, GraphError, MalformedStateError, ProfileError

small_profiles = st.lists(st.integers(1, 3), min_size=1, max_size=4).filter(lambda c: sum(c) <= 8)


def lex_words(counts):
    """Oracle: sorted distinct permutations of the multiset word."""
    base = [c for c, k in enumerate(counts, start=1) for _ in range(k)]
    return sorted(set(itertools.permutations(base)))


class TestProfile:
    def test_parse(self):
        p = ColorProfile.parse("2,2,1")
        assert p.counts == (2, 2, 1)
        assert (p.n, p.l, p.kappa_min) == (5, 3, 1)
        assert str(p) == "2,2,1"

    @pytest.mark.parametrize("text", ["0,2", "", "a,1", "-1", "1.5,2"])
    def test_bad_input(self, text):
        with pytest.raises(ProfileError):
            ColorProfile.parse(text)

    def test_single_color_allowed(self):
        assert ColorProfile((3,)).l == 1

    def test_canonical_and_without(self):
        p = ColorProfile((1, 3, 2))
        assert p.canonical().counts == (3, 2, 1)
        assert p.without(1).counts == (1, 2)


@pytest.mark.parametrize("counts, size", [((2, 1), 3), ((1, 1, 1), 6), ((2, 2), 6), ((3,), 1)])
def test_multinomial_size(counts, size):
    assert multinomial_size(counts) == size
    assert len(lex_words(counts)) == size


def test_multinomial_is_exact_for_large_profiles():
    assert multinomial_size((50, 50)) == math.comb(100, 50)


@pytest.mark.parametrize("counts, word, idx", [
    ((1, 1), (1, 2), 0),
    ((1, 1), (2, 1), 1),
    ((2, 1), (2, 1, 1), 2),
])
def test_rank_unrank_examples(counts, word, idx):
    space = StateSpace(counts)
    assert space.rank(word) == idx
    assert space.unrank(idx) == word


@pytest.mark.parametrize("counts", [(2, 1), (2, 2), (1, 2, 1), (2, 1, 2), (3, 1, 1)])
def test_ordering_matches_enumeration_oracle(counts):
    space = StateSpace(counts)
    oracle = lex_words(counts)
    assert [space.unrank(r) for r in range(space.size)] == oracle


@pytest.mark.parametrize("word", [(1, 1), (1, 3), (1, 2, 2)])
def test_malformed_words(word):
    with pytest.raises(MalformedStateError):
        rank_word((1, 1), word)


def test_unrank_out_of_range():
    space = StateSpace((2, 1))
    with pytest.raises(IndexError):
        space.unrank(3)
    with pytest.raises(IndexError):
        unrank_word((2, 1), -1)


def test_state_cap():
    with pytest.raises(CapExceededError) as info:
        StateSpace((5, 5), cap=100)
    assert info.value.cap_name == "cap_states"
    assert "100" in str(info.value)


@settings(max_examples=60, deadline=None)
@given(small_profiles)
def test_rank_unrank_bijective(counts):
    space = StateSpace(counts)
    for r in range(space.size):
        w = space.unrank(r)
        assert space.rank(w) == r
        assert unrank_word(counts, r) == w
    ranks = rank_rows(space.words, counts)
    assert np.array_equal(ranks, np.arange(space.size))


@pytest.mark.parametrize("word, i, j, out", [
    ((1, 2, 2), 1, 2, (2, 1, 2)),
    ((1, 2, 2), 2, 3, (1, 2, 2)),
    ((1, 2, 3), 1, 3, (3, 2, 1)),
])
def test_transposition_examples(word, i, j, out):
    assert transposition_image(word, i, j) == out


@pytest.mark.parametrize("i, j", [(2, 2), (3, 1), (0, 2), (1, 4)])
def test_transposition_bad_positions(i, j):
    with pytest.raises(ValueError):
        transposition_image((1, 2, 2), i, j)


@settings(max_examples=60, deadline=None)
@given(small_profiles.filter(lambda c: sum(c) >= 2), st.data())
def test_transposition_involution(counts, data):
    space = StateSpace(counts)
    r = data.draw(st.integers(0, space.size - 1))
    n = space.n
    i = data.draw(st.integers(1, n - 1))
    j = data.draw(st.integers(i + 1, n))
    w = space.unrank(r)
    img = transposition_image(w, i, j)
    assert transposition_image(img, i, j) == w
    assert space.rank(img) == int(space.swap_index(i - 1, j - 1)[r])


@pytest.mark.parametrize("word, color, region", [
    ((1, 2, 2), 2, {2, 3}),
    ((1, 2, 2), 1, {1}),
    ((2, 1, 1, 2), 2, {1, 4}),
])
def test_color_region_examples(word, color, region):
    assert color_region(word, color) == region


def test_color_region_bad_color():
    with pytest.raises(ValueError):
        color_region((1, 2, 2), 3, n_colors=2)


@settings(max_examples=40, deadline=None)
@given(small_profiles)
def test_regions_partition_sites(counts):
    space = StateSpace(counts)
    for r in range(space.size):
        w = space.unrank(r)
        regions = [color_region(w, c, len(counts)) for c in range(1, len(counts) + 1)]
        assert [len(x) for x in regions] == list(counts)
        assert set().union(*regions) == set(range(1, space.n + 1))


def test_coarsening_map_examples():
    assert coarsening_map((2, 1)) == (1, 1, 2)
    assert coarsening_map((1, 1, 1)) == (1, 2, 3)


def test_coarsening_fibers_for_two_two():
    fine = StateSpace((1, 1, 1, 1))
    counts = Counter(coarsening_ranks((2, 2), fine).tolist())
    assert sorted(counts) == list(range(6))
    assert set(counts.values()) == {4}


@pytest.mark.parametrize("counts", [c for n in range(2, 7) for c in compositions(n)])
def test_coarsening_pushforward_uniform(counts):
    fine = StateSpace((1,) * sum(counts))
    hist = np.bincount(coarsening_ranks(counts, fine), minlength=multinomial_size(counts))
    expected = math.prod(math.factorial(k) for k in counts)
    assert (hist == expected).all()


@pytest.mark.parametrize("counts", [(2, 1), (1, 2, 1), (2, 2), (1, 3, 1)])
def test_gradient_commutes_with_coarsening(counts):
    rng = np.random.default_rng(5)
    coarse = StateSpace(counts)
    fine = StateSpace((1,) * coarse.n)
    f = rng.normal(size=coarse.size)
    lift = coarsening_ranks(counts, fine)
    for i, j in fine.pairs():
        grad_of_pull = f[lift][fine.swap_index(i, j)] - f[lift]
        pull_of_grad = (f[coarse.swap_index(i, j)] - f)[lift]
        assert np.array_equal(grad_of_pull, pull_of_grad)


class TestGraphs:
    def test_mean_field(self):
        g = WeightedGraph.mean_field(4)
        assert np.allclose(g.weights[~np.eye(4, dtype=bool)], 0.25)
        assert g.kind == "mean_field"

    @pytest.mark.parametrize("g", [WeightedGraph.complete_srw(5), WeightedGraph.cycle(6),
                                   WeightedGraph.hypercube(3)])
    def test_random_walk_kinds_are_stochastic(self, g):
        assert np.allclose(g.weights.sum(axis=1), 1.0)
        assert g.is_connected()

    def test_invalid_weights(self):
        with pytest.raises(GraphError):
            WeightedGraph(np.array([[0.0, 1.0], [0.5, 0.0]]))
        with pytest.raises(GraphError):
            WeightedGraph(np.array([[0.0, -1.0], [-1.0, 0.0]]))
        with pytest.raises(GraphError):
            WeightedGraph(np.array([[1.0, 1.0], [1.0, 0.0]]))

    def test_edge_list_round_trip(self):
        text = "# path\nn 4\n1 2 1.0\n2 3 0.5\n3 4 1\n"
        g = WeightedGraph.from_edge_list(text)
        assert g.weights[2, 1] == 0.5 and g.weights[1, 2] == 0.5
        again = WeightedGraph.from_edge_list(g.to_edge_list())
        assert np.array_equal(g.weights, again.weights)

    @pytest.mark.parametrize("text", ["", "4\n1 2 1", "n 3\n1 1 1", "n 3\n1 4 1",
                                      "n 3\n1 2 1\n2 1 2", "n 3\n1 2"])
    def test_edge_list_errors(self, text):
        with pytest.raises(GraphError):
            WeightedGraph.from_edge_list(text)

    def test_graph_by_name(self, tmp_path):
        assert graph_by_name("cycle", 5).kind == "cycle"
        assert graph_by_name("hypercube", 8).n == 8
        with pytest.raises(GraphError):
            graph_by_name("hypercube", 6)
        with pytest.raises(GraphError):
            graph_by_name("star", 4)
        path = tmp_path / "g.txt"
        path.write_text("n 3\n1 2 1\n2 3 1\n")
        assert graph_by_name(f"@{path}", 3).kind == "custom"
        with pytest.raises(GraphError):
            graph_by_name(f"@{path}", 4)


def test_enumerators():
    assert sorted(compositions(3)) == [(1, 1, 1), (1, 2), (2, 1), (3,)]
    assert list(partitions(4)) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
