"""Prime fields, exact rationals, and matrices over them with Gauss-Jordan elimination."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


class PrimeField:
    """Integers modulo a prime ``q``."""

    zero = 0
    one = 1

    def __init__(self, q: int):
        if not is_prime(q):
            raise ValueError(f"field size must be prime, got {q}")
        self.q = q

    def __repr__(self) -> str:
        return f"GF({self.q})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PrimeField) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("GF", self.q))

    @property
    def is_finite(self) -> bool:
        return True

    def coerce(self, v: Any) -> int:
        if isinstance(v, Fraction):
            if v.denominator != 1:
                return v.numerator * self.inv(v.denominator % self.q) % self.q
            v = v.numerator
        return int(v) % self.q

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return a * b % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(a, self.q - 2, self.q)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def elements(self) -> range:
        return range(self.q)

    def nonzero(self) -> range:
        return range(1, self.q)

    def format(self, a: int) -> str:
        return str(a)


class RealField:
    """Real numbers, represented exactly as :class:`fractions.Fraction`."""

    q = 0
    zero = Fraction(0)
    one = Fraction(1)

    def __repr__(self) -> str:
        return "R"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RealField)

    def __hash__(self) -> int:
        return hash("R")

    @property
    def is_finite(self) -> bool:
        return False

    def coerce(self, v: Any) -> Fraction:
        return Fraction(v)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return 1 / Fraction(a)

    def div(self, a, b):
        return Fraction(a) / b

    def format(self, a: Fraction) -> str:
        if a.denominator == 1:
            return str(a.numerator)
        return repr(float(a))


Field = PrimeField | RealField


def field_ops(q: int) -> Field:
    """Arithmetic suite for GF(q), or for the reals when ``q == 0``."""
    return RealField() if q == 0 else PrimeField(q)


def rref(field: Field, rows: Sequence[Sequence], ncols: int) -> tuple[list[list], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    work = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(work)) if work[i][c] != 0), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        inv = field.inv(work[r][c])
        work[r] = [field.mul(inv, v) for v in work[r]]
        for i in range(len(work)):
            if i != r and work[i][c] != 0:
                f = work[i][c]
                work[i] = [field.sub(a, field.mul(f, b)) for a, b in zip(work[i], work[r])]
        pivots.append(c)
        r += 1
        if r == len(work):
            break
    return work[:r], pivots


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """Dense ``m x n`` matrix over a prime field or the reals."""

    field: Field
    entries: tuple[tuple, ...]
    ncols: int

    def __post_init__(self) -> None:
        for i, row in enumerate(self.entries):
            if len(row) != self.ncols:
                raise ValueError(f"row {i} has {len(row)} entries, expected {self.ncols}")

    @classmethod
    def from_rows(cls, field: Field, rows: Iterable[Iterable], ncols: int | None = None) -> FieldMatrix:
        ent = tuple(tuple(field.coerce(v) for v in row) for row in rows)
        if ncols is None:
            if not ent:
                raise ValueError("ncols is required for an empty matrix")
            ncols = len(ent[0])
        return cls(field, ent, ncols)

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def n(self) -> int:
        return self.ncols

    @property
    def q(self) -> int:
        return self.field.q

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FieldMatrix)
            and other.field == self.field
            and other.ncols == self.ncols
            and other.entries == self.entries
        )

    def __hash__(self) -> int:
        return hash((self.field, self.ncols, self.entries))

    def column(self, j: int) -> tuple:
        return tuple(row[j] for row in self.entries)

    def select_columns(self, cols: Sequence[int]) -> FieldMatrix:
        return FieldMatrix(self.field, tuple(tuple(row[j] for j in cols) for row in self.entries), len(cols))

    def transpose(self) -> FieldMatrix:
        return FieldMatrix(self.field, tuple(self.column(j) for j in range(self.n)), self.m)

    def mul_vec(self, x: Sequence) -> tuple:
        if len(x) != self.n:
            raise ValueError(f"vector length {len(x)} != columns {self.n}")
        F = self.field
        x = [F.coerce(v) for v in x]
        out = []
        for row in self.entries:
            acc = F.zero
            for a, v in zip(row, x):
                if a != 0 and v != 0:
                    acc = F.add(acc, F.mul(a, v))
            out.append(acc)
        return tuple(out)

    def rref(self) -> tuple[list[list], list[int]]:
        return rref(self.field, self.entries, self.n)

    def rank(self) -> int:
        return len(self.rref()[1])

    def kernel_basis(self) -> FieldMatrix:
        """Rows form a basis of ``{x : M x = 0}``."""
        F = self.field
        red, piv = self.rref()
        free = [j for j in range(self.n) if j not in set(piv)]
        basis = []
        for f in free:
            v = [F.zero] * self.n
            v[f] = F.one
            for row, p in zip(red, piv):
                v[p] = F.neg(row[f])
            basis.append(tuple(v))
        return FieldMatrix(F, tuple(basis), self.n)

    def solve(self, b: Sequence) -> tuple[tuple, FieldMatrix] | None:
        """Particular solution of ``M y = b`` and a kernel basis, or None if inconsistent."""
        F = self.field
        if len(b) != self.m:
            raise ValueError(f"rhs length {len(b)} != rows {self.m}")
        aug = [list(row) + [F.coerce(v)] for row, v in zip(self.entries, b)]
        red, piv = rref(F, aug, self.n + 1)
        if piv and piv[-1] == self.n:
            return None
        y = [F.zero] * self.n
        for row, p in zip(red, piv):
            y[p] = row[self.n]
        return tuple(y), self.kernel_basis()

    def to_text(self) -> str:
        lines = [f"{self.m} {self.n} {self.q}"]
        lines += [" ".join(self.field.format(v) for v in row) for row in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> FieldMatrix:
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix text")
        header = lines[0].split()
        if len(header) != 3:
            raise ValueError(f"field matrix header must be 'm n q', got {lines[0]!r}")
        m, n, q = (int(h) for h in header)
        field = field_ops(q)
        if len(lines) - 1 != m:
            raise ValueError(f"header promises {m} rows, found {len(lines) - 1}")
        rows = []
        for k, ln in enumerate(lines[1:]):
            toks = ln.split()
            if len(toks) != n:
                raise ValueError(f"row {k} has {len(toks)} entries, expected {n}")
            if field.is_finite and any(int(t) != int(t) % q for t in toks):
                raise ValueError(f"row {k} has entries outside [0, {q})")
            rows.append([Fraction(t) if q == 0 else int(t) for t in toks])
        return cls.from_rows(field, rows, n)
