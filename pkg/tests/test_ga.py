import itertools
import math
import random
from collections import Counter
from importlib import resources
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from etvlab.ga import (BirthRecord, GaConfig, Individual, eer_child, eer_crossover, fitness_transform,
                       invert_span, inversion_mutate, read_records, reverse_insertion, roulette_select,
                       run, shared_edges, write_records)
from etvlab.tsp import load_instance, random_tour, reverse_tour, tour_length, validate_tour


@pytest.fixture(scope="module")
def burma():
    return load_instance(Path(str(resources.files("etvlab") / "data" / "burma14.tsp")))


def ind(k, tour, length=10.0, j=1):
    return Individual((k, j), tuple(tour), length, fitness_transform(length))


class StubRng:
    """Records every tie it is asked to break and takes the smallest option."""

    def __init__(self):
        self.calls = []

    def choice(self, seq):
        self.calls.append(sorted(seq))
        return min(seq)


def test_fitness_transform():
    assert fitness_transform(12) == 1 / 12
    assert fitness_transform(10) > fitness_transform(11)
    with pytest.raises(ValueError):
        fitness_transform(0)


def test_reverse_has_equal_fitness(burma):
    t = random_tour(14, random.Random(1))
    assert fitness_transform(tour_length(burma, t)) == fitness_transform(tour_length(burma, reverse_tour(t)))


def test_roulette_single():
    pop = [ind(1, (0, 1, 2))]
    rng = random.Random(0)
    assert all(roulette_select(pop, rng) is pop[0] for _ in range(100))


def test_roulette_three_to_one():
    pop = [ind(1, (0, 1, 2), 1.0), ind(2, (0, 2, 1), 3.0)]  # fitness 1 and 1/3, ratio 3:1
    rng = random.Random(17)
    draws = 10**5
    hits = sum(roulette_select(pop, rng) is pop[0] for _ in range(draws))
    sigma = math.sqrt(0.75 * 0.25 / draws)
    assert abs(hits / draws - 0.75) <= 3 * sigma


def test_roulette_uniform_chi_square():
    pop = [ind(k, (0, 1, 2)) for k in range(1, 11)]
    rng = random.Random(5)
    draws = 10**5
    counts = Counter(roulette_select(pop, rng).id for _ in range(draws))
    expected = draws / 10
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert len(counts) == 10
    assert chi2 < 27.88  # 0.999 quantile, 9 degrees of freedom


def test_eer_identical_parents():
    t = random_tour(12, random.Random(4))
    rng = StubRng()
    assert eer_child(t, t, rng) == t
    assert eer_child(t, reverse_tour(t), rng) == t
    assert rng.calls == []


def test_eer_five_city_trace():
    # t1 edges 01 12 23 34 40; t2 edges 02 21 14 43 30; common: 12 and 34.
    # from 0 (no common edge) all four neighbours keep 2 edges -> t1 successor 1;
    # 1 -> common 2; 2 -> only 3 left; 3 -> 4.
    rng = StubRng()
    assert eer_child((0, 1, 2, 3, 4), (0, 2, 1, 4, 3), rng) == (0, 1, 2, 3, 4)
    assert rng.calls == []


def test_eer_six_city_trace():
    # common edge 05 is taken first; at 5 the candidates 4 and 2 tie on size
    # and 5's t1 successor (0) is spent, so the tie goes to the rng (stub: 2);
    # then 3 and 4 win size ties as t1 successors and 1 is last.
    rng = StubRng()
    child = eer_child((0, 1, 2, 3, 4, 5), (0, 3, 1, 4, 2, 5), rng)
    assert child == (0, 5, 2, 3, 4, 1)
    assert rng.calls == [[2, 4]]


def test_eer_child_equal_to_p1_is_dominated_by_p1():
    t = (0, 1, 2, 3, 4)
    p1, p2 = ind(1, t, 30.0), ind(2, (0, 2, 1, 4, 3), 5.0)
    child, dom = eer_crossover(p1, p2, StubRng())
    assert child == t and dom == p1.id  # 5 shared edges against 2, fitness irrelevant
    assert shared_edges(t, t) == 5


@given(st.integers(4, 30), st.integers(0, 2**32 - 1))
def test_eer_child_is_valid(n, seed):
    rng = random.Random(seed)
    t1, t2 = random_tour(n, rng), random_tour(n, rng)
    validate_tour(eer_child(t1, t2, rng), n)


def test_dominant_parent_ties_go_to_fitter():
    t1 = (0, 1, 2, 3, 4, 5)
    t2 = reverse_tour(t1)
    a, b = ind(1, t1, 20.0), ind(2, t2, 10.0)
    _, dom = eer_crossover(a, b, random.Random(0))
    assert dom == b.id  # equal edge overlap, b is fitter


def test_inversion_span_example():
    assert invert_span((0, 1, 2, 3), 1, 2) == (0, 2, 1, 3)
    with pytest.raises(ValueError):
        invert_span((0, 1, 2, 3), 0, 2)


def test_inversion_always_changes_n5():
    t = (0, 3, 1, 4, 2)
    spans = list(itertools.combinations(range(1, 5), 2))
    assert len(spans) == 6
    assert all(invert_span(t, i, k) != t for i, k in spans)


def test_inversion_valid_random():
    rng = random.Random(8)
    for _ in range(10**4):
        n = rng.randint(3, 15)
        out = inversion_mutate(random_tour(n, rng), rng)
        validate_tour(out, n)


def test_reverse_insertion_examples():
    T, U = (0, 1, 2, 3), (0, 2, 1, 3)
    out = reverse_insertion([ind(1, T), ind(2, T), ind(3, U)])
    assert [x.tour for x in out] == [T, reverse_tour(T), U]
    assert out[1].uncoupled and out[1].dominant_parent is None and out[1].fitness == out[0].fitness
    same = [ind(1, T), ind(2, reverse_tour(T)), ind(3, T)]
    assert [x.tour for x in reverse_insertion(same)] == [x.tour for x in same]
    distinct = [ind(1, T), ind(2, U)]
    assert reverse_insertion(distinct) == distinct


def test_reverse_insertion_replaces_last_duplicate_once():
    T = (0, 1, 2, 3, 4)
    out = reverse_insertion([ind(k, T) for k in range(1, 5)])
    assert [x.tour for x in out] == [T, T, T, reverse_tour(T)]


@given(st.lists(st.sampled_from([(0, 1, 2, 3, 4), (0, 4, 3, 2, 1), (0, 2, 1, 3, 4), (0, 1, 3, 2, 4)]),
                min_size=1, max_size=12),
       st.lists(st.floats(1, 100), min_size=4, max_size=4))
def test_reverse_insertion_keeps_fitness_multiset(tours, lengths):
    table = dict(zip(sorted(set(map(tuple, [(0, 1, 2, 3, 4), (0, 2, 1, 3, 4), (0, 1, 3, 2, 4)]))), lengths))
    def length_of(t):
        return table.get(t, table.get(reverse_tour(t)))
    pop = [ind(k, t, length_of(t)) for k, t in enumerate(tours, 1)]
    out = reverse_insertion(pop)
    assert sorted(x.fitness for x in out) == sorted(x.fitness for x in pop)
    assert [x.id for x in out] == [x.id for x in pop]


def test_run_record_count_and_first_generation(burma):
    res = run(burma, GaConfig(max_generations=7, seed=3, population_size=20))
    assert len(res.records) == 20 * 7
    first = res.records[:20]
    assert all(r.uncoupled and r.dominant_parent is None and r.generation == 1 for r in first)
    for j in range(1, 8):
        assert [r.child for r in res.records[(j - 1) * 20:j * 20]] == [(i, j) for i in range(1, 21)]
    one = run(burma, GaConfig(max_generations=1, seed=3, population_size=20))
    assert len(one.records) == 20 and all(r.uncoupled for r in one.records)


def test_parents_come_from_previous_generation(burma):
    res = run(burma, GaConfig(max_generations=30, seed=9, population_size=16, elitism=True))
    for r in res.records:
        assert (r.dominant_parent is None) == r.uncoupled
        if r.dominant_parent is not None:
            assert r.dominant_parent[1] == r.generation - 1


def test_no_clones_without_elitism(burma):
    res = run(burma, GaConfig(max_generations=60, seed=2, population_size=30))
    assert not any(r.is_clone for r in res.records)


def clone_chain_lengths(records):
    """Longest run of consecutive clone edges ending at each node."""
    depth = {}
    for r in records:
        if r.is_clone:
            depth[r.child] = depth.get(r.dominant_parent, 0) + 1
    return depth


def test_aging_limits_clone_chains(burma):
    res = run(burma, GaConfig(max_generations=120, seed=4, population_size=30, elitism=True, max_age=2))
    depth = clone_chain_lengths(res.records)
    assert depth and max(depth.values()) <= 2


def test_clone_chains_grow_without_aging(burma):
    res = run(burma, GaConfig(max_generations=120, seed=4, population_size=30, elitism=True))
    assert max(clone_chain_lengths(res.records).values()) > 2


def test_elitism_keeps_best(burma):
    res = run(burma, GaConfig(max_generations=80, seed=6, population_size=30, elitism=True))
    best = [s.best_length for s in res.summary]
    assert all(b <= a for a, b in zip(best, best[1:]))


def test_clones_only_after_balance(burma):
    cfg = GaConfig(max_generations=300, seed=1001, population_size=100, elitism=True)
    res = run(burma, cfg)
    bal = res.balance_generation
    assert bal is not None
    after = [r for r in res.records if r.generation > bal and not r.uncoupled]
    assert after and all(r.is_clone for r in after)


def test_deterministic_streams(burma, tmp_path):
    cfg = GaConfig(max_generations=40, seed=77, population_size=25, elitism=True)
    a, b = run(burma, cfg), run(burma, cfg)
    write_records(a.records, tmp_path / "a.txt")
    write_records(b.records, tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert read_records(tmp_path / "a.txt") == a.records


def test_record_line_roundtrip():
    recs = [BirthRecord((3, 1), None, 1, False, True), BirthRecord((2, 5), (7, 4), 5, True, False)]
    assert [BirthRecord.from_line(r.to_line()) for r in recs] == recs
    assert recs[0].to_line() == "1 3 - - 0 1"


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans(), st.sampled_from([None, 1, 3]))
def test_population_invariants(seed, elitism, age):
    inst = load_instance(Path(str(resources.files("etvlab") / "data" / "burma14.tsp")))
    res = run(inst, GaConfig(max_generations=12, seed=seed, population_size=12,
                             elitism=elitism, max_age=age))
    for x in res.population:
        validate_tour(x.tour, 14)
        assert x.fitness == fitness_transform(tour_length(inst, x.tour))
        assert not (x.uncoupled and x.dominant_parent is not None)
    per_gen = Counter(r.generation for r in res.records)
    assert set(per_gen.values()) == {12}


@pytest.mark.parametrize("kw", [dict(population_size=1), dict(crossover_prob=1.5),
                                dict(mutation_prob=-0.1), dict(max_age=0), dict(max_generations=0)])
def test_config_validation(kw):
    args = dict(max_generations=10) | kw
    with pytest.raises(ValueError):
        GaConfig(**args)
