"""ETV frequency tables pooled across runs."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .genealogy import EtvTable


@dataclass(frozen=True)
class EtvHistogram:
    counts: dict[int, int]
    total: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise ValueError("histogram counts do not sum to total")
        if any(x < 1 for x in self.counts):
            raise ValueError("ETV values must be >= 1")


@dataclass(frozen=True)
class PooledDistribution:
    x: np.ndarray       # sorted support, zero-count values omitted
    counts: np.ndarray  # pooled n(x) over runs
    total: int          # pooled node count
    runs: int
    horizon: int | None = None

    @property
    def freq(self) -> np.ndarray:
        return self.counts / self.total

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.x.tolist(), self.freq.tolist()))

    def write(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# horizon {self.horizon} runs {self.runs} total {self.total}\n")
            for x, c in zip(self.x.tolist(), self.counts.tolist()):
                fh.write(f"{x} {c / self.total!r}\n")

    @classmethod
    def read(cls, path: str | Path) -> "PooledDistribution":
        """Read a two-column (x, frequency) file; counts are recovered from the header total."""
        horizon, runs, total = None, 1, None
        xs, fs = [], []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    tok = line[1:].split()
                    meta = dict(zip(tok[::2], tok[1::2]))
                    horizon = None if meta.get("horizon") in (None, "None") else int(meta["horizon"])
                    runs = int(meta.get("runs", 1))
                    total = int(meta["total"]) if "total" in meta else None
                    continue
                if line.strip():
                    a, b = line.split()
                    xs.append(int(a))
                    fs.append(float(b))
        freq = np.array(fs)
        if total is None:
            return cls(np.array(xs), freq, 1, runs, horizon)
        return cls(np.array(xs), np.rint(freq * total).astype(np.int64), total, runs, horizon)


def histogram(table: EtvTable) -> EtvHistogram:
    if len(table) == 0:
        raise ValueError("empty ETV table")
    counts = Counter(table.values.tolist())
    return EtvHistogram(dict(sorted(counts.items())), len(table))


def pool(hists: Sequence[EtvHistogram], horizon: int | None = None) -> PooledDistribution:
    """Pooled frequency sum_r n_r(x) / sum_r N_r."""
    if not hists:
        raise ValueError("need at least one histogram to pool")
    acc: Counter[int] = Counter()
    for h in hists:
        acc.update(h.counts)
    xs = sorted(x for x, c in acc.items() if c > 0)
    total = sum(h.total for h in hists)
    return PooledDistribution(np.array(xs, dtype=np.int64),
                              np.array([acc[x] for x in xs], dtype=np.int64),
                              total, len(hists), horizon)


def max_etv_mean(tables: Sequence[EtvTable | EtvHistogram]) -> float:
    """Mean over runs of each run's largest ETV."""
    if not tables:
        raise ValueError("need at least one ETV table")
    return math.fsum(max(t.counts) if isinstance(t, EtvHistogram) else int(t.values.max())
                     for t in tables) / len(tables)
