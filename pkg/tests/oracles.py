"""Slow, obviously-correct reference implementations used by the tests."""

import random

from hypothesis import strategies as st

from etvlab.ga import BirthRecord


def make_records(generations, clones=None):
    """Records from per-generation parent lists.

    ``generations[0]`` is the population size of generation 1 (all roots);
    each later entry lists, per birth slot, the 1-based parent slot in the
    previous generation or ``None`` for an uncoupled birth. ``clones`` holds
    (i, j) ids that are elitist clones.
    """
    clones = set(clones or ())
    n = generations[0]
    recs = [BirthRecord((i, 1), None, 1, False, True) for i in range(1, n + 1)]
    for j, parents in enumerate(generations[1:], start=2):
        assert len(parents) == n
        for i, p in enumerate(parents, start=1):
            if p is None:
                recs.append(BirthRecord((i, j), None, j, False, True))
            else:
                recs.append(BirthRecord((i, j), (p, j - 1), j, (i, j) in clones, False))
    return recs


def random_records(rng, max_nodes=40, max_generations=6, p_uncoupled=0.1, p_clone=0.0):
    t = rng.randint(1, max_generations)
    n = rng.randint(1, max(1, max_nodes // t))
    gens = [n]
    clones = set()
    for j in range(2, t + 1):
        row = []
        for i in range(1, n + 1):
            if rng.random() < p_uncoupled:
                row.append(None)
            else:
                row.append(rng.randint(1, n))
                if rng.random() < p_clone:
                    clones.add((i, j))
        gens.append(row)
    return make_records(gens, clones)


@st.composite
def genealogies(draw, max_nodes=40, max_generations=6, p_clone=0.3):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_records(random.Random(seed), max_nodes, max_generations, p_clone=p_clone)


def _parent_map(records):
    return {r.child: r.dominant_parent for r in records if not r.uncoupled and r.generation > 1}


def naive_etv(records, horizon, edge_cap=None):
    """ETV by walking every later node's full ancestor path."""
    parent = _parent_map(records)
    nodes = [r.child for r in records if r.generation <= horizon]
    out = {}
    for a in nodes:
        best = 0
        for g in range(a[1] + 1, horizon + 1):
            count = 0
            for v in (r.child for r in records if r.generation == g):
                while v is not None and v[1] > a[1]:
                    v = parent.get(v)
                count += v == a
            if edge_cap is not None:
                count = min(count, edge_cap)
            best = max(best, count)
        out[a] = max(1, best)
    return out


def detach_oracle(records, horizon, edge_cap=None):
    """Hitchhiking removal with explicit descendant sets.

    At each generation g ancestors are visited youngest generation first.
    An ancestor whose generation-g descendants (over live edges) all hang
    from one non-clone child loses that edge from g on and gains nothing at g.
    Returns (etv, cuts) with cuts as {(parent, child): g}.
    """
    parent = _parent_map(records)
    clone = {r.child for r in records if r.is_clone}
    nodes = [r.child for r in records]
    cut = {}

    def live(child, g):
        return child in parent and not (child in cut and cut[child] <= g)

    def branch_of(v, a, g):
        """Child of ``a`` on v's live path to ``a``, or None if not connected."""
        prev = None
        while v[1] > a[1]:
            if not live(v, g):
                return None
            prev, v = v, parent[v]
        return prev if v == a else None

    best = {a: 0 for a in nodes if a[1] <= horizon}
    for g in range(2, horizon + 1):
        layer = [v for v in nodes if v[1] == g]
        for ja in range(g - 1, 0, -1):
            for a in (x for x in nodes if x[1] == ja):
                branches = [b for b in (branch_of(v, a, g) for v in layer) if b is not None]
                if not branches:
                    continue
                kids = set(branches)
                if len(kids) == 1 and next(iter(kids)) not in clone:
                    cut[next(iter(kids))] = g
                    continue
                n = len(branches) if edge_cap is None else min(len(branches), edge_cap)
                best[a] = max(best[a], n)
    etv = {a: max(1, v) for a, v in best.items()}
    return etv, {(parent[c], c): g for c, g in cut.items()}
