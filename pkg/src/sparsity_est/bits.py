"""Boolean vectors and matrices for the OR (group testing) measurement model.

Rows and vectors are packed into Python ints: bit ``j`` of a row is the
entry in column ``j``.  Indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Iterable, Iterator, Sequence


def _mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def _indices_of(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


@dataclass(frozen=True)
class SupportSet:
    """Sorted set of nonzero (defective) positions of a length-``n`` vector."""

    indices: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if self.n < 0:
            raise ValueError(f"ambient dimension must be >= 0, got {self.n}")
        for a, b in zip(idx, idx[1:]):
            if a >= b:
                raise ValueError(f"support indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 0 or idx[-1] >= self.n):
            raise ValueError(f"support indices out of range [0, {self.n}): {idx}")

    @classmethod
    def of(cls, indices: Iterable[int], n: int) -> SupportSet:
        return cls(tuple(sorted(set(indices))), n)

    @classmethod
    def from_mask(cls, mask: int, n: int) -> SupportSet:
        return cls(_indices_of(mask), n)

    @cached_property
    def mask(self) -> int:
        return _mask_of(self.indices)

    @property
    def weight(self) -> int:
        return len(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, item: object) -> bool:
        return item in self.indices

    def union(self, other: SupportSet) -> SupportSet:
        if other.n != self.n:
            raise ValueError("support dimension mismatch")
        return SupportSet.from_mask(self.mask | other.mask, self.n)


@dataclass(frozen=True)
class BitVector:
    """Length-``length`` binary vector, packed."""

    length: int
    bits: int = 0

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("length must be >= 0")
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError(f"bits do not fit in length {self.length}")

    @classmethod
    def from_list(cls, values: Sequence[int]) -> BitVector:
        bits = 0
        for i, v in enumerate(values):
            if v not in (0, 1, True, False):
                raise ValueError(f"entry {i} is not a bit: {v!r}")
            if v:
                bits |= 1 << i
        return cls(len(values), bits)

    @classmethod
    def from_support(cls, support: Iterable[int], length: int) -> BitVector:
        return cls(length, _mask_of(support))

    @classmethod
    def parse(cls, line: str) -> BitVector:
        line = line.strip()
        if set(line) - {"0", "1"}:
            raise ValueError(f"bit vector line may contain only 0/1: {line!r}")
        return cls.from_list([int(c) for c in line])

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.bits >> i) & 1

    def __iter__(self) -> Iterator[int]:
        return (self[i] for i in range(self.length))

    @property
    def weight(self) -> int:
        return self.bits.bit_count()

    @property
    def support(self) -> tuple[int, ...]:
        return _indices_of(self.bits)

    def to_list(self) -> list[int]:
        return list(self)

    def __str__(self) -> str:
        return "".join(str(b) for b in self)


@dataclass(frozen=True)
class BitMatrix:
    """``m x n`` boolean test design; ``rows[i]`` is the packed i-th test."""

    m: int
    n: int
    rows: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        rows = tuple(int(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if self.m < 0 or self.n < 0:
            raise ValueError("matrix dimensions must be >= 0")
        if len(rows) != self.m:
            raise ValueError(f"expected {self.m} rows, got {len(rows)}")
        for i, r in enumerate(rows):
            if r < 0 or r >> self.n:
                raise ValueError(f"row {i} does not fit in {self.n} columns")

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[int]]) -> BitMatrix:
        if not rows:
            return cls(0, 0, ())
        n = len(rows[0])
        packed = []
        for r in rows:
            if len(r) != n:
                raise ValueError("ragged matrix rows")
            packed.append(BitVector.from_list(r).bits)
        return cls(len(rows), n, tuple(packed))

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def zeros(cls, m: int, n: int) -> BitMatrix:
        return cls(m, n, (0,) * m)

    @classmethod
    def ones(cls, m: int, n: int) -> BitMatrix:
        return cls(m, n, ((1 << n) - 1,) * m)

    def get(self, i: int, j: int) -> int:
        if not (0 <= i < self.m and 0 <= j < self.n):
            raise IndexError((i, j))
        return (self.rows[i] >> j) & 1

    def with_bit(self, i: int, j: int, value: int) -> BitMatrix:
        """Return a copy with entry ``(i, j)`` set to ``value``."""
        self.get(i, j)
        rows = list(self.rows)
        if value:
            rows[i] |= 1 << j
        else:
            rows[i] &= ~(1 << j)
        return BitMatrix(self.m, self.n, tuple(rows))

    @cached_property
    def columns(self) -> tuple[int, ...]:
        """Packed columns: bit ``i`` of ``columns[j]`` is entry ``(i, j)``."""
        cols = [0] * self.n
        for i, r in enumerate(self.rows):
            for j in _indices_of(r):
                cols[j] |= 1 << i
        return tuple(cols)

    def to_lists(self) -> list[list[int]]:
        return [[(r >> j) & 1 for j in range(self.n)] for r in self.rows]

    def vstack(self, other: BitMatrix) -> BitMatrix:
        if other.n != self.n:
            raise ValueError("column count mismatch")
        return BitMatrix(self.m + other.m, self.n, self.rows + other.rows)

    def to_text(self) -> str:
        lines = [f"{self.m} {self.n}"]
        lines += [str(BitVector(self.n, r)) for r in self.rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> BitMatrix:
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix text")
        header = lines[0].split()
        if len(header) != 2:
            raise ValueError(f"matrix header must be 'm n', got {lines[0]!r}")
        m, n = int(header[0]), int(header[1])
        body = lines[1:]
        if len(body) != m:
            raise ValueError(f"header promises {m} rows, found {len(body)}")
        rows = []
        for k, ln in enumerate(body):
            if len(ln) != n:
                raise ValueError(f"row {k} has {len(ln)} entries, expected {n}")
            rows.append(BitVector.parse(ln).bits)
        return cls(m, n, tuple(rows))


@dataclass(frozen=True)
class NoiseBudget:
    """At most ``e0`` false positives (0->1) and ``e1`` false negatives (1->0)."""

    e0: int = 0
    e1: int = 0

    def __post_init__(self) -> None:
        if self.e0 < 0 or self.e1 < 0:
            raise ValueError(f"noise budget must be nonnegative, got ({self.e0}, {self.e1})")

    @property
    def total(self) -> int:
        return self.e0 + self.e1


def or_output_bits(matrix: BitMatrix, support_mask: int) -> int:
    """Packed OR-measurement of a support given as a column mask."""
    cols = matrix.columns
    out = 0
    while support_mask:
        low = support_mask & -support_mask
        out |= cols[low.bit_length() - 1]
        support_mask ^= low
    return out


def or_measure(matrix: BitMatrix, x: SupportSet) -> BitVector:
    """Result bit ``i`` is 1 iff test ``i`` contains a defective of ``x``."""
    if x.n != matrix.n:
        raise ValueError(f"support dimension {x.n} != matrix columns {matrix.n}")
    return BitVector(matrix.m, or_output_bits(matrix, x.mask))


def apply_noise(b: BitVector, flips0: Iterable[int], flips1: Iterable[int]) -> BitVector:
    """Flip the listed 0-positions up and 1-positions down.

    Raises ``ValueError`` when a flip targets a bit of the wrong polarity,
    is out of range, or appears in both sets.
    """
    m0, m1 = _mask_of(flips0), _mask_of(flips1)
    if (m0 | m1) >> b.length:
        raise ValueError("flip position out of range")
    if m0 & m1:
        raise ValueError("flip sets must be disjoint")
    if m0 & b.bits:
        raise ValueError(f"false-positive flips hit 1-positions {_indices_of(m0 & b.bits)}")
    if m1 & ~b.bits:
        raise ValueError(f"false-negative flips hit 0-positions {_indices_of(m1 & ~b.bits)}")
    return BitVector(b.length, b.bits ^ m0 ^ m1)


def close_bits(x: int, y: int, e0: int, e1: int) -> bool:
    return (y & ~x).bit_count() <= e0 and (x & ~y).bit_count() <= e1


def is_close(x: BitVector, y: BitVector, budget: NoiseBudget) -> bool:
    """True iff ``y`` has at most ``e0`` extra ones and at most ``e1`` missing ones vs ``x``.

    The relation is asymmetric: ``is_close(x, y, (e0, e1))`` equals
    ``is_close(y, x, (e1, e0))``.
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch {len(x)} != {len(y)}")
    return close_bits(x.bits, y.bits, budget.e0, budget.e1)


def _lowest(mask: int, k: int) -> int:
    out = 0
    for _ in range(k):
        if not mask:
            break
        low = mask & -mask
        out |= low
        mask ^= low
    return out


def midpoint_witness(x1: BitVector, x2: BitVector, budget: NoiseBudget) -> BitVector:
    """Vector ``y`` with both ``(x1, y)`` and ``(x2, y)`` (e0, e1)-close.

    Requires ``(x1, x2)`` to be ``(E, E)``-close with ``E = e0 + e1``.  The
    support is the common part plus the lowest-index ``min(., e0)`` elements
    of each one-sided difference.
    """
    if len(x1) != len(x2):
        raise ValueError(f"length mismatch {len(x1)} != {len(x2)}")
    e = budget.total
    if not close_bits(x1.bits, x2.bits, e, e):
        raise ValueError(f"inputs are not ({e}, {e})-close")
    only2 = x2.bits & ~x1.bits
    only1 = x1.bits & ~x2.bits
    p = _lowest(only2, min(only2.bit_count(), budget.e0))
    r = _lowest(only1, min(only1.bit_count(), budget.e0))
    return BitVector(x1.length, (x1.bits & x2.bits) | p | r)


def asym_ball_size(m: int, w: int, r1: int, r2: int) -> int:
    """Number of ``y`` in F_2^m with at most ``r1`` deletions from and ``r2`` insertions into a weight-``w`` support."""
    if not 0 <= w <= m:
        raise ValueError(f"need 0 <= w <= m, got w={w}, m={m}")
    if r1 < 0 or r2 < 0:
        raise ValueError("radii must be nonnegative")
    dels = sum(comb(w, i) for i in range(min(r1, w) + 1))
    ins = sum(comb(m - w, j) for j in range(min(r2, m - w) + 1))
    return dels * ins
