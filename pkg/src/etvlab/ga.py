"""Generational GA over TSP tours that records a genealogy.

Every created individual yields a BirthRecord naming its dominant parent,
the parent whose tour edges the child inherited most. The record stream is
what the genealogy module consumes.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass
from itertools import accumulate
from pathlib import Path
from typing import Iterable, Sequence

from .tsp import Tour, TspInstance, random_tour, reverse_tour, tour_length

NodeId = tuple[int, int]  # (birth index i, generation j), both 1-based


@dataclass(frozen=True)
class GaConfig:
    max_generations: int
    seed: int = 0
    population_size: int = 100
    crossover_prob: float = 0.9
    mutation_prob: float = 0.05
    elitism: bool = False
    max_age: int | None = None
    edge_cap: int | None = None
    reverse_insertion: bool = True

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        for name in ("crossover_prob", "mutation_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.max_age is not None and self.max_age < 1:
            raise ValueError("max_age must be >= 1")
        if self.edge_cap is not None and self.edge_cap < 1:
            raise ValueError("edge_cap must be >= 1")


@dataclass(slots=True)
class Individual:
    id: NodeId
    tour: Tour
    length: float
    fitness: float
    dominant_parent: NodeId | None = None
    other_parent: NodeId | None = None
    uncoupled: bool = False
    is_clone: bool = False
    age: int = 0


@dataclass(frozen=True, slots=True)
class BirthRecord:
    child: NodeId
    dominant_parent: NodeId | None
    generation: int
    is_clone: bool
    uncoupled: bool

    def to_line(self) -> str:
        i, j = self.child
        if self.dominant_parent is None:
            pj = pi = "-"
        else:
            pi, pj = self.dominant_parent
        return f"{j} {i} {pj} {pi} {int(self.is_clone)} {int(self.uncoupled)}"

    @classmethod
    def from_line(cls, line: str) -> "BirthRecord":
        j, i, pj, pi, clone, unc = line.split()
        parent = None if pj == "-" else (int(pi), int(pj))
        return cls((int(i), int(j)), parent, int(j), clone == "1", unc == "1")


@dataclass(frozen=True)
class GenerationSummary:
    generation: int
    best_length: float
    mean_length: float
    balanced: bool
    n_clones: int
    n_uncoupled: int


@dataclass
class GaResult:
    population: list[Individual]
    records: list[BirthRecord]
    summary: list[GenerationSummary]

    @property
    def balance_generation(self) -> int | None:
        return next((s.generation for s in self.summary if s.balanced), None)


def fitness_transform(length: float) -> float:
    if not length > 0:
        raise ValueError(f"tour length must be positive, got {length}")
    return 1.0 / length


def roulette_select(pop: Sequence[Individual], rng: random.Random,
                    cum_weights: Sequence[float] | None = None) -> Individual:
    """Draw one individual with probability proportional to its fitness."""
    if not pop:
        raise ValueError("cannot select from an empty population")
    if cum_weights is None:
        cum_weights = list(accumulate(ind.fitness for ind in pop))
    r = rng.random() * cum_weights[-1]
    return pop[bisect_right(cum_weights, r)]


def _neighbours(t: Tour) -> list[tuple[int, int]]:
    n = len(t)
    nb = [(0, 0)] * n
    for k, c in enumerate(t):
        nb[c] = (t[k - 1], t[(k + 1) % n])
    return nb


def shared_edges(a: Tour, b: Tour) -> int:
    """Number of undirected edges two tours have in common."""
    nb = _neighbours(b)
    return sum(1 for u, v in zip(a, a[1:] + a[:1]) if v in nb[u])


def eer_child(t1: Tour, t2: Tour, rng: random.Random) -> Tour:
    """Enhanced edge recombination of two canonical tours.

    Edges present in both parents are followed first; otherwise the
    neighbour with the fewest remaining edges wins. Ties prefer the
    successor in ``t1`` (so identical parents reproduce ``t1`` exactly),
    then a random pick. An exhausted edge list falls back to a random
    unvisited city.
    """
    if t2 == t1 or t2 == reverse_tour(t1):
        # one edge set: every step is a forced common edge
        return t1
    n = len(t1)
    edges: list[dict[int, bool]] = [{} for _ in range(n)]
    for t in (t1, t2):
        prev = t[-1]
        for c in t:
            ep, ec = edges[prev], edges[c]
            ep[c] = c in ep
            ec[prev] = prev in ec
            prev = c
    succ1 = [0] * n
    prev = t1[-1]
    for c in t1:
        succ1[prev] = c
        prev = c

    unvisited = set(range(1, n))
    cur = 0
    for b in edges[0]:
        del edges[b][0]
    child = [0]
    while unvisited:
        options = edges[cur]
        if options:
            cands = [b for b, common in options.items() if common] or list(options)
            if len(cands) == 1:
                nxt = cands[0]
            else:
                sizes = [len(edges[b]) for b in cands]
                fewest = min(sizes)
                best = [b for b, s in zip(cands, sizes) if s == fewest]
                if len(best) == 1:
                    nxt = best[0]
                elif succ1[cur] in best:
                    nxt = succ1[cur]
                else:
                    nxt = rng.choice(best)
        else:
            nxt = rng.choice(sorted(unvisited))
        for b in edges[nxt]:
            del edges[b][nxt]
        unvisited.discard(nxt)
        child.append(nxt)
        cur = nxt
    return tuple(child)


def dominant_of(child: Tour, p1: Individual, p2: Individual) -> Individual:
    s1, s2 = shared_edges(child, p1.tour), shared_edges(child, p2.tour)
    if s1 != s2:
        return p1 if s1 > s2 else p2
    if p1.fitness != p2.fitness:
        return p1 if p1.fitness > p2.fitness else p2
    return p1


def eer_crossover(p1: Individual, p2: Individual, rng: random.Random) -> tuple[Tour, NodeId]:
    child = eer_child(p1.tour, p2.tour, rng)
    return child, dominant_of(child, p1, p2).id


def invert_span(t: Tour, i: int, k: int) -> Tour:
    """Reverse positions i..k inclusive (1 <= i < k <= n-1)."""
    if not 1 <= i < k < len(t):
        raise ValueError(f"invalid inversion span ({i}, {k}) for a tour of {len(t)} cities")
    return t[:i] + t[i:k + 1][::-1] + t[k + 1:]


def inversion_mutate(t: Tour, rng: random.Random) -> Tour:
    i, k = sorted(rng.sample(range(1, len(t)), 2))
    return invert_span(t, i, k)


def reverse_insertion(pop: Sequence[Individual]) -> list[Individual]:
    """Replace one copy of each repeated tour whose reverse is missing.

    The last duplicate slot is replaced by an uncoupled individual carrying
    the reversed tour. Presence checks use the input population, so
    replacements made in this call never trigger further ones.
    """
    out = list(pop)
    present = {ind.tour for ind in pop}
    slots: dict[Tour, list[int]] = {}
    for k, ind in enumerate(pop):
        slots.setdefault(ind.tour, []).append(k)
    for tour, ks in slots.items():
        if len(ks) < 2:
            continue
        rev = reverse_tour(tour)
        if rev in present:
            continue
        old = out[ks[-1]]
        out[ks[-1]] = Individual(old.id, rev, old.length, old.fitness, uncoupled=True)
    return out


def _record(ind: Individual) -> BirthRecord:
    return BirthRecord(ind.id, ind.dominant_parent, ind.id[1], ind.is_clone, ind.uncoupled)


def _clone(parent: Individual, slot: NodeId) -> Individual:
    return Individual(slot, parent.tour, parent.length, parent.fitness,
                      dominant_parent=parent.id, is_clone=True, age=parent.age + 1)


def _may_survive(parent: Individual, config: GaConfig) -> bool:
    return config.max_age is None or parent.age < config.max_age


def step_generation(inst: TspInstance, pop: Sequence[Individual], config: GaConfig,
                    rng: random.Random) -> tuple[list[Individual], list[BirthRecord]]:
    n_pop = config.population_size
    if len(pop) != n_pop:
        raise ValueError(f"population has {len(pop)} individuals, expected {n_pop}")
    j = pop[0].id[1] + 1
    cum = list(accumulate(ind.fitness for ind in pop))
    new: list[Individual] = []
    for i in range(1, n_pop + 1):
        pa = roulette_select(pop, rng, cum)
        pb = roulette_select(pop, rng, cum)
        if rng.random() < config.crossover_prob:
            tour = eer_child(pa.tour, pb.tour, rng)
            dom = dominant_of(tour, pa, pb)
            other = pb if dom is pa else pa
        else:
            tour, dom, other = pa.tour, pa, None
        if rng.random() < config.mutation_prob:
            tour = inversion_mutate(tour, rng)
        length = tour_length(inst, tour)
        fit = fitness_transform(length)
        if config.elitism and fit <= dom.fitness and _may_survive(dom, config):
            new.append(_clone(dom, (i, j)))
        else:
            new.append(Individual((i, j), tour, length, fit, dominant_parent=dom.id,
                                  other_parent=None if other is None else other.id))

    if config.elitism:
        # per-slot survival can still lose the best tour when it is never drawn
        best = min(pop, key=lambda ind: ind.length)
        if min(ind.length for ind in new) > best.length and _may_survive(best, config):
            worst = max(range(n_pop), key=lambda k: (new[k].length, k))
            new[worst] = _clone(best, new[worst].id)

    if config.reverse_insertion:
        new = reverse_insertion(new)
    return new, [_record(ind) for ind in new]


def _summarize(pop: Sequence[Individual]) -> GenerationSummary:
    lengths = [ind.length for ind in pop]
    return GenerationSummary(
        generation=pop[0].id[1],
        best_length=min(lengths),
        mean_length=math.fsum(lengths) / len(lengths),
        balanced=min(lengths) == max(lengths),
        n_clones=sum(ind.is_clone for ind in pop),
        n_uncoupled=sum(ind.uncoupled for ind in pop),
    )


def initial_population(inst: TspInstance, config: GaConfig, rng: random.Random) -> list[Individual]:
    pop = []
    for i in range(1, config.population_size + 1):
        t = random_tour(inst.n, rng)
        length = tour_length(inst, t)
        pop.append(Individual((i, 1), t, length, fitness_transform(length), uncoupled=True))
    return pop


def run(inst: TspInstance, config: GaConfig) -> GaResult:
    rng = random.Random(config.seed)
    pop = initial_population(inst, config, rng)
    records = [_record(ind) for ind in pop]
    summary = [_summarize(pop)]
    for _ in range(2, config.max_generations + 1):
        pop, recs = step_generation(inst, pop, config, rng)
        records.extend(recs)
        summary.append(_summarize(pop))
    return GaResult(pop, records, summary)


def write_records(records: Iterable[BirthRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_line() + "\n")


def read_records(path: str | Path) -> list[BirthRecord]:
    with open(path) as fh:
        return [BirthRecord.from_line(line) for line in fh if line.strip() and not line.startswith("#")]
