"""Core state and jump types for countable-type population processes.

A population state assigns a nonnegative count to each type index
``j = 0, 1, 2, ...``; only finitely many entries are nonzero.  Jumps are
finite signed integer vectors over the same index set.  Densities (counts
divided by the patch number ``N``) are handled as plain 1-D numpy arrays
with the convention that indices beyond the array length are zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SparseCounts",
    "JumpVector",
    "RateEntry",
    "RateTable",
    "Trajectory",
    "as_density",
    "unit_density",
]


def _validated_entries(entries: dict[int, int]) -> dict[int, int]:
    clean: dict[int, int] = {}
    for j, n in entries.items():
        j = int(j)
        n = int(n)
        if j < 0:
            raise ValueError(f"negative type index {j}")
        if n < 0:
            raise ValueError(f"negative count {n} at type {j}")
        if n > 0:
            clean[j] = n
    return clean


@dataclass
class SparseCounts:
    """Finite-support map from type index to nonnegative integer count.

    Zero entries are never stored; the total count is kept cached.
    """

    entries: dict[int, int]
    total: int = field(init=False)

    def __post_init__(self) -> None:
        self.entries = _validated_entries(self.entries)
        self.total = sum(self.entries.values())

    @classmethod
    def from_dense(cls, counts: np.ndarray) -> "SparseCounts":
        arr = np.asarray(counts)
        return cls({int(j): int(arr[j]) for j in np.nonzero(arr)[0]})

    @classmethod
    def single(cls, j: int, n: int) -> "SparseCounts":
        """All ``n`` patches at type ``j``."""
        return cls({j: n})

    def to_dense(self, width: int | None = None) -> np.ndarray:
        w = self.width if width is None else width
        if self.entries and w <= max(self.entries):
            raise ValueError(f"width {w} too small for support {max(self.entries)}")
        out = np.zeros(w, dtype=np.int64)
        for j, n in self.entries.items():
            out[j] = n
        return out

    def to_density(self, scale: float, width: int | None = None) -> np.ndarray:
        return self.to_dense(width) / float(scale)

    @property
    def width(self) -> int:
        return max(self.entries) + 1 if self.entries else 1

    def get(self, j: int) -> int:
        return self.entries.get(j, 0)

    def apply_jump(self, jump: "JumpVector") -> "SparseCounts":
        new = dict(self.entries)
        for j, d in jump.entries:
            new[j] = new.get(j, 0) + d
        return SparseCounts(new)

    def copy(self) -> "SparseCounts":
        return SparseCounts(dict(self.entries))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SparseCounts) and self.entries == other.entries


@dataclass(frozen=True)
class JumpVector:
    """Finite signed jump over the type space, stored sparsely.

    Entries are (index, delta) pairs, sorted by index, deltas nonzero.
    Deltas of -1 occur in every jump family; -2 occurs only when a
    migration step drains two patches of equal size, so the lower bound
    here is -2 and feasibility is enforced through the rates instead.
    """

    entries: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        idx = [j for j, _ in self.entries]
        if idx != sorted(set(idx)):
            raise ValueError("entries must be sorted with unique indices")
        for j, d in self.entries:
            if j < 0:
                raise ValueError(f"negative type index {j}")
            if d == 0:
                raise ValueError(f"zero delta at type {j}")
            if d < -2:
                raise ValueError(f"delta {d} below -2 at type {j}")

    @classmethod
    def from_dict(cls, deltas: dict[int, int]) -> "JumpVector":
        items = tuple(sorted((int(j), int(d)) for j, d in deltas.items() if d != 0))
        return cls(items)

    @property
    def is_null(self) -> bool:
        return not self.entries

    @property
    def mass(self) -> int:
        """Total absolute change, sum_j |J^j|."""
        return sum(abs(d) for _, d in self.entries)

    @property
    def net(self) -> int:
        return sum(d for _, d in self.entries)

    def to_dense(self, width: int) -> np.ndarray:
        out = np.zeros(width, dtype=np.int64)
        for j, d in self.entries:
            out[j] = d
        return out

    def canonical_key(self) -> bytes:
        """Order-independent serialization, used to key Poisson streams."""
        return ";".join(f"{j}:{d}" for j, d in self.entries).encode()

    def __str__(self) -> str:
        if not self.entries:
            return "0"
        return " ".join(f"{d:+d}e({j})" for j, d in self.entries)


@dataclass(frozen=True)
class RateEntry:
    """One active transition: its jump, total rate, and family label.

    ``family`` is one of "down", "up", "catastrophe", "migration".
    For migration, ``source`` and ``dest`` give the patch sizes (i, k);
    ``self_move`` marks the destination being the migrant's own patch,
    which leaves the state unchanged.
    """

    jump: JumpVector
    rate: float
    family: str
    source: int
    dest: int = -1
    self_move: bool = False


class RateTable:
    """All active transitions out of one state, with their total rates."""

    def __init__(self, entries: list[RateEntry]):
        seen = set()
        for e in entries:
            if e.rate <= 0.0:
                raise ValueError("rate table entries must have positive rate")
            key = (e.family, e.source, e.dest, e.self_move)
            if key in seen:
                raise ValueError(f"duplicate entry {key}")
            seen.add(key)
        self.entries = entries
        self.total_rate = float(sum(e.rate for e in entries))
        if not np.isfinite(self.total_rate):
            raise OverflowError("total rate overflowed the floating range")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def find(self, family: str, source: int, dest: int = -1) -> RateEntry | None:
        for e in self.entries:
            if e.family == family and e.source == source and e.dest == dest:
                return e
        return None

    def drift(self, width: int) -> np.ndarray:
        """sum_J J * rate over the table, as a dense vector."""
        out = np.zeros(width)
        for e in self.entries:
            for j, d in e.jump.entries:
                out[j] += d * e.rate
        return out


@dataclass
class Trajectory:
    """A recorded sample path of the count process.

    ``counts[k]`` is the dense state at ``times[k]``.  With jump
    recording, consecutive rows differ by exactly one jump; with grid
    recording, rows are snapshots at the requested times.
    """

    times: np.ndarray
    counts: np.ndarray
    scale: int
    mode: str
    events: int
    absorbed: bool = False
    t_end: float = -1.0

    def __post_init__(self) -> None:
        if self.counts.ndim != 2 or len(self.times) != len(self.counts):
            raise ValueError("times and counts must align")
        if self.mode not in ("jumps", "grid"):
            raise ValueError(f"unknown recording mode {self.mode!r}")
        if self.t_end < 0.0:
            self.t_end = float(self.times[-1]) if len(self.times) else 0.0

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    def densities(self) -> np.ndarray:
        return self.counts / float(self.scale)

    def final_counts(self) -> SparseCounts:
        return SparseCounts.from_dense(self.counts[-1])


def as_density(x, width: int | None = None) -> np.ndarray:
    """Coerce a density given as array, dict, or SparseCounts-free map."""
    if isinstance(x, SparseCounts):
        raise TypeError("counts need a scale; use SparseCounts.to_density")
    if isinstance(x, dict):
        w = max(x) + 1 if x else 1
        out = np.zeros(max(w, width or 0))
        for j, v in x.items():
            out[j] = v
        return out
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("density must be one-dimensional")
    if width is not None and width > arr.size:
        arr = np.concatenate([arr, np.zeros(width - arr.size)])
    return arr


def unit_density(j: int, width: int | None = None) -> np.ndarray:
    """Point mass e(j) as a dense density vector."""
    out = np.zeros(width if width is not None else j + 1)
    out[j] = 1.0
    return out
