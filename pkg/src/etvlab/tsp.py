"""TSPLIB instances, canonical tours and tour length."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

Tour = tuple[int, ...]

SUPPORTED_WEIGHT_TYPES = ("EUC_2D", "GEO", "EXPLICIT")
SUPPORTED_FORMATS = ("FULL_MATRIX", "UPPER_ROW", "LOWER_DIAG_ROW")

_SECTIONS = ("NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION", "DISPLAY_DATA_SECTION")


class TspParseError(ValueError):
    pass


@dataclass(frozen=True)
class TspInstance:
    name: str
    n: int
    weight_kind: str
    dist: np.ndarray
    coords: tuple[tuple[float, float], ...] | None = None
    # nested tuples: indexing these is much cheaper than numpy scalars in the GA loop
    rows: tuple[tuple[float, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        if self.n < 3:
            raise TspParseError(f"DIMENSION must be at least 3, got {self.n}")
        if d.shape != (self.n, self.n):
            raise TspParseError(f"distance matrix shape {d.shape} does not match DIMENSION {self.n}")
        if not np.array_equal(d, d.T):
            raise TspParseError("distance matrix is not symmetric")
        if np.any(np.diag(d) != 0):
            raise TspParseError("distance matrix has a nonzero diagonal")
        if np.any(d < 0):
            raise TspParseError("distance matrix has negative entries")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "rows", tuple(tuple(r) for r in d.tolist()))


def _nint(x: float) -> int:
    return int(x + 0.5)


def _euc_2d(coords) -> np.ndarray:
    n = len(coords)
    d = np.zeros((n, n))
    for a in range(n):
        xa, ya = coords[a]
        for b in range(a + 1, n):
            xb, yb = coords[b]
            d[a, b] = d[b, a] = _nint(math.hypot(xa - xb, ya - yb))
    return d


def _geo_radians(v: float) -> float:
    deg = int(v)
    minutes = v - deg
    return 3.141592 * (deg + 5.0 * minutes / 3.0) / 180.0


def _geo(coords) -> np.ndarray:
    rrr = 6378.388
    lat = [_geo_radians(x) for x, _ in coords]
    lon = [_geo_radians(y) for _, y in coords]
    n = len(coords)
    d = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            q1 = math.cos(lon[a] - lon[b])
            q2 = math.cos(lat[a] - lat[b])
            q3 = math.cos(lat[a] + lat[b])
            d[a, b] = d[b, a] = int(rrr * math.acos(0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)) + 1.0)
    return d


def _explicit(values: list[float], n: int, fmt: str) -> np.ndarray:
    d = np.zeros((n, n))
    if fmt == "FULL_MATRIX":
        expected = n * n
        cells = [(a, b) for a in range(n) for b in range(n)]
    elif fmt == "UPPER_ROW":
        expected = n * (n - 1) // 2
        cells = [(a, b) for a in range(n) for b in range(a + 1, n)]
    else:  # LOWER_DIAG_ROW
        expected = n * (n + 1) // 2
        cells = [(a, b) for a in range(n) for b in range(a + 1)]
    if len(values) != expected:
        raise TspParseError(
            f"EDGE_WEIGHT_SECTION has {len(values)} entries, {fmt} with DIMENSION {n} needs {expected}"
        )
    for (a, b), v in zip(cells, values):
        d[a, b] = v
        if fmt != "FULL_MATRIX":
            d[b, a] = v
    return d


def parse_tsplib(text: str) -> TspInstance:
    """Parse a symmetric TSPLIB instance (TYPE: TSP).

    Distances are materialized for EUC_2D (rounded Euclidean), GEO and
    EXPLICIT matrices in FULL_MATRIX, UPPER_ROW or LOWER_DIAG_ROW layout.
    """
    header: dict[str, str] = {}
    coord_lines: list[str] = []
    weight_tokens: list[str] = []
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        key = line.split(":")[0].strip().upper()
        if line == "EOF":
            break
        if key in _SECTIONS:
            section = key
            continue
        if ":" in line and not line[0].isdigit() and line[0] not in "-+.":
            header[key] = line.split(":", 1)[1].strip()
            section = None
            continue
        if section == "NODE_COORD_SECTION":
            coord_lines.append(line)
        elif section == "EDGE_WEIGHT_SECTION":
            weight_tokens.extend(line.split())
        elif section == "DISPLAY_DATA_SECTION":
            pass
        else:
            raise TspParseError(f"unexpected line outside any section: {line!r}")

    kind = header.get("TYPE", "TSP").split()[0].upper()
    if kind != "TSP":
        raise TspParseError(f"unsupported TYPE: {kind}")
    if "DIMENSION" not in header:
        raise TspParseError("missing DIMENSION")
    try:
        n = int(header["DIMENSION"])
    except ValueError:
        raise TspParseError(f"bad DIMENSION: {header['DIMENSION']!r}") from None
    wtype = header.get("EDGE_WEIGHT_TYPE", "").upper()
    if wtype not in SUPPORTED_WEIGHT_TYPES:
        raise TspParseError(f"unsupported EDGE_WEIGHT_TYPE: {wtype or '<missing>'}")
    name = header.get("NAME", "unnamed")

    coords = None
    if wtype in ("EUC_2D", "GEO"):
        if len(coord_lines) != n:
            raise TspParseError(f"NODE_COORD_SECTION has {len(coord_lines)} nodes, DIMENSION is {n}")
        parsed = []
        for line in coord_lines:
            parts = line.split()
            if len(parts) < 3:
                raise TspParseError(f"bad NODE_COORD_SECTION line: {line!r}")
            parsed.append((float(parts[1]), float(parts[2])))
        coords = tuple(parsed)
        dist = _euc_2d(coords) if wtype == "EUC_2D" else _geo(coords)
    else:
        fmt = header.get("EDGE_WEIGHT_FORMAT", "").upper()
        if fmt not in SUPPORTED_FORMATS:
            raise TspParseError(f"unsupported EDGE_WEIGHT_FORMAT: {fmt or '<missing>'}")
        try:
            values = [float(tok) for tok in weight_tokens]
        except ValueError as exc:
            raise TspParseError(f"non-numeric EDGE_WEIGHT_SECTION entry ({exc})") from None
        dist = _explicit(values, n, fmt)
    return TspInstance(name=name, n=n, weight_kind=wtype, dist=dist, coords=coords)


def load_instance(path: str | Path) -> TspInstance:
    return parse_tsplib(Path(path).read_text())


def validate_tour(t: Tour, n: int) -> None:
    if len(t) != n or t[0] != 0 or sorted(t) != list(range(n)):
        raise ValueError(f"not a canonical tour over {n} cities: {t}")


def tour_length(inst: TspInstance, t: Tour) -> float:
    rows = inst.rows
    # fsum is exactly rounded, so a tour and its reverse give bit-identical lengths
    return math.fsum(rows[a][b] for a, b in zip(t, t[1:] + t[:1]))


def reverse_tour(t: Tour) -> Tour:
    return t[:1] + t[:0:-1]


def canonical(cycle) -> Tour:
    """Rotate a cyclic sequence so that city 0 comes first, keeping direction."""
    cycle = tuple(cycle)
    k = cycle.index(0)
    return cycle[k:] + cycle[:k]


def random_tour(n: int, rng: random.Random) -> Tour:
    rest = list(range(1, n))
    rng.shuffle(rest)
    return (0, *rest)
