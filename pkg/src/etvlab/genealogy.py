"""Genealogical graph over birth records and Event Takeover Values.

Nodes are indexed ``(j - 1) * N + (i - 1)`` for birth ``i`` of generation
``j``. Each non-root node has exactly one edge, to its dominant parent in
generation ``j - 1``.

Hitchhiking removal (``detach=True``) sweeps generations oldest first. At
generation ``g`` the living nodes push their counts up the parent chain,
most recent ancestors first. An ancestor whose whole flow at ``g`` arrives
through a single non-clone child loses that edge from ``g`` on: it accrues
nothing more, and the child becomes a root. Clone children are the parent
itself surviving under elitism, so they never trigger a cut.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .ga import BirthRecord, NodeId

NO_CUT = np.iinfo(np.int64).max


class GenealogyError(ValueError):
    pass


class CutEdge(NamedTuple):
    parent: NodeId
    child: NodeId
    generation: int


@dataclass
class GenealogyGraph:
    pop_size: int
    generations: int
    parent: np.ndarray
    is_clone: np.ndarray
    uncoupled: np.ndarray
    cut_generation: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.cut_generation is None:
            self.cut_generation = np.full(self.parent.shape, NO_CUT, dtype=np.int64)

    @property
    def n_nodes(self) -> int:
        return self.pop_size * self.generations

    def index(self, node: NodeId) -> int:
        i, j = node
        if not (1 <= i <= self.pop_size and 1 <= j <= self.generations):
            raise KeyError(f"no node {node}")
        return (j - 1) * self.pop_size + (i - 1)

    def node_id(self, idx: int) -> NodeId:
        j, i = divmod(int(idx), self.pop_size)
        return (i + 1, j + 1)

    def generation_of(self, idx) -> np.ndarray | int:
        return idx // self.pop_size + 1

    def generation_slice(self, j: int) -> slice:
        return slice((j - 1) * self.pop_size, j * self.pop_size)

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(self.parent >= 0))

    @property
    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.parent < 0)

    def children(self, idx: int) -> np.ndarray:
        return np.flatnonzero(self.parent == idx)


def build_graph(records: Iterable[BirthRecord]) -> GenealogyGraph:
    """Ingest a birth-record stream grouped by generation, N records each."""
    records = list(records)
    if not records:
        raise GenealogyError("empty record stream")
    n_pop = sum(1 for r in records if r.generation == 1)
    if n_pop == 0:
        raise GenealogyError("stream does not start with generation 1")
    if len(records) % n_pop:
        raise GenealogyError(f"{len(records)} records is not a multiple of N = {n_pop}")
    n_gen = len(records) // n_pop
    parent = np.full(n_pop * n_gen, -1, dtype=np.int64)
    is_clone = np.zeros(n_pop * n_gen, dtype=bool)
    uncoupled = np.zeros(n_pop * n_gen, dtype=bool)
    seen = np.zeros(n_pop * n_gen, dtype=bool)
    for pos, rec in enumerate(records):
        i, j = rec.child
        expected_gen = pos // n_pop + 1
        if j != expected_gen or rec.generation != j:
            raise GenealogyError(f"record {rec.child} out of generation order (expected generation {expected_gen})")
        if not 1 <= i <= n_pop:
            raise GenealogyError(f"birth index {i} outside 1..{n_pop}")
        idx = (j - 1) * n_pop + (i - 1)
        if seen[idx]:
            raise GenealogyError(f"duplicate node {rec.child}")
        seen[idx] = True
        is_clone[idx] = rec.is_clone
        if j == 1 or rec.uncoupled:
            uncoupled[idx] = True
            continue
        if rec.dominant_parent is None:
            raise GenealogyError(f"coupled node {rec.child} has no dominant parent")
        pi, pj = rec.dominant_parent
        if pj != j - 1 or not 1 <= pi <= n_pop:
            raise GenealogyError(f"node {rec.child} references nonexistent parent {rec.dominant_parent}")
        parent[idx] = (pj - 1) * n_pop + (pi - 1)
    return GenealogyGraph(n_pop, n_gen, parent, is_clone, uncoupled)


def etvgen(graph: GenealogyGraph, ancestor: NodeId, gen: int) -> int:
    """Generation-``gen`` nodes whose live parent chain reaches ``ancestor``."""
    a = graph.index(ancestor)
    ja = ancestor[1]
    if not ja < gen <= graph.generations:
        raise ValueError(f"gen must lie in ({ja}, {graph.generations}], got {gen}")
    count = 0
    for v in range(*graph.generation_slice(gen).indices(graph.n_nodes)):
        u = v
        for _ in range(gen - ja):
            if graph.parent[u] < 0 or graph.cut_generation[u] <= gen:
                u = -1
                break
            u = graph.parent[u]
        count += u == a
    return count


@dataclass(frozen=True)
class EtvTable:
    horizon: int
    pop_size: int
    values: np.ndarray  # indexed like graph nodes, generations 1..horizon

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, node: NodeId) -> int:
        i, j = node
        if not (1 <= i <= self.pop_size and 1 <= j <= self.horizon):
            raise KeyError(node)
        return int(self.values[(j - 1) * self.pop_size + (i - 1)])

    def items(self) -> Iterator[tuple[NodeId, int]]:
        for idx, v in enumerate(self.values.tolist()):
            j, i = divmod(idx, self.pop_size)
            yield (i + 1, j + 1), v

    def write(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# horizon {self.horizon} pop_size {self.pop_size}\n")
            for (i, j), v in self.items():
                fh.write(f"{i},{j} {v}\n")

    @classmethod
    def read(cls, path: str | Path) -> "EtvTable":
        with open(path) as fh:
            head = fh.readline().split()
            horizon, pop_size = int(head[2]), int(head[4])
            values = np.zeros(horizon * pop_size, dtype=np.int64)
            for line in fh:
                node, v = line.split()
                i, j = map(int, node.split(","))
                values[(j - 1) * pop_size + (i - 1)] = int(v)
        return cls(horizon, pop_size, values)


def _sweep(graph: GenealogyGraph, horizons: Sequence[int], edge_cap: int | None,
           detach: bool) -> tuple[dict[int, EtvTable], list[tuple[int, int, int]]]:
    n_pop = graph.pop_size
    horizons = sorted(set(horizons))
    if horizons and not (1 <= horizons[0] and horizons[-1] <= graph.generations):
        raise ValueError(f"horizons must lie in [1, {graph.generations}]")
    cap = np.iinfo(np.int64).max if edge_cap is None else edge_cap
    parent = graph.parent
    clone = graph.is_clone
    cut = graph.cut_generation.copy()
    best = np.zeros(graph.n_nodes, dtype=np.int64)
    new_cuts: list[tuple[int, int, int]] = []
    tables: dict[int, EtvTable] = {}
    wanted = set(horizons)
    last = horizons[-1] if horizons else 0
    for g in range(1, last + 1):
        if g > 1:
            u = np.arange((g - 1) * n_pop, g * n_pop)
            w = np.ones(n_pop, dtype=np.int64)
            while u.size:
                p = parent[u]
                live = (p >= 0) & (cut[u] > g)
                if not live.all():
                    u, w, p = u[live], w[live], p[live]
                    if not u.size:
                        break
                anc, inv, n_child = np.unique(p, return_inverse=True, return_counts=True)
                flow = np.bincount(inv, weights=w, minlength=anc.size).astype(np.int64)
                if detach:
                    sole = n_child == 1
                    cut_child = sole[inv] & ~clone[u]
                    if cut_child.any():
                        for c in u[cut_child].tolist():
                            cut[c] = g
                            new_cuts.append((int(parent[c]), c, g))
                        keep = ~np.isin(anc, p[cut_child])
                        anc, flow = anc[keep], flow[keep]
                np.maximum.at(best, anc, np.minimum(flow, cap))
                u, w = anc, flow
        if g in wanted:
            tables[g] = EtvTable(g, n_pop, np.maximum(best[: g * n_pop], 1))
    return tables, new_cuts


def compute_etv_snapshot(graph: GenealogyGraph, t: int, edge_cap: int | None = None,
                         detach: bool = False) -> EtvTable:
    """ETV of every node born up to ``t``: max(1, max over g in (j, t] of ETVgen)."""
    return _sweep(graph, [t], edge_cap, detach)[0][t]


def etv_snapshots(graph: GenealogyGraph, horizons: Sequence[int], edge_cap: int | None = None,
                  detach: bool = False) -> dict[int, EtvTable]:
    """Snapshots at several horizons from a single forward sweep.

    Every rule the sweep applies at ``g`` depends only on generations up to
    ``g``, so each snapshot equals a separate :func:`compute_etv_snapshot`.
    """
    return _sweep(graph, horizons, edge_cap, detach)[0]


def detach_hitchhikers(graph: GenealogyGraph, upto: int) -> set[CutEdge]:
    """Record hitchhiking cuts through generation ``upto`` in ``graph``.

    Returns the cut edges; their children are flagged uncoupled.
    """
    _, cuts = _sweep(graph, [upto], None, True)
    out = set()
    for p, c, g in cuts:
        graph.cut_generation[c] = g
        graph.uncoupled[c] = True
        out.add(CutEdge(graph.node_id(p), graph.node_id(c), g))
    return out
