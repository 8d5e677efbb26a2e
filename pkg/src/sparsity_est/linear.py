"""Sparsity estimation from linear measurements over GF(q) or the reals.

A matrix estimates sparsity within ``Delta`` for all ``|x| <= D`` exactly
when its kernel is (Delta, D)-distinguishing: no coset holds two vectors of
weight ``<= D`` whose weights differ by more than a ``Delta**2`` factor.  A
kernel of minimum distance above ``2D`` makes the weight-``<= D`` vector in
each coset unique, so sparsity is recovered exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np

from .certifier import CertResult
from .bits import SupportSet
from .fields import Field, FieldMatrix, PrimeField, RealField, field_ops, rref
from .seeding import derive_seed

GV_MAX_ATTEMPTS = 64
DEFAULT_BUDGET = 20_000_000
COSET_ENUM_LIMIT = 4096


def q_entropy(x: float, q: int) -> float:
    """``H_q(x) = x log_q(q-1) - x log_q x - (1-x) log_q(1-x)`` with 0 log 0 = 0."""
    if not 0 <= x <= 1:
        raise ValueError(f"entropy argument must lie in [0, 1], got {x}")
    lq = math.log(q)
    out = x * math.log(q - 1) / lq if q > 2 else 0.0
    if 0 < x:
        out -= x * math.log(x) / lq
    if x < 1:
        out -= (1 - x) * math.log(1 - x) / lq
    return out


def gv_rows(n: int, D: int, q: int) -> int:
    """``ceil(n * H_q((2D+1)/n))``, the random-code row count."""
    v = n * q_entropy((2 * D + 1) / n, q)
    r = round(v)
    return r if abs(v - r) < 1e-9 else math.ceil(v)


@dataclass(frozen=True, eq=False)
class LinearScheme:
    matrix: FieldMatrix
    D: int
    delta: float | None
    construction: str
    seed: int | None = None

    @property
    def field(self) -> Field:
        return self.matrix.field

    @property
    def q(self) -> int:
        return self.matrix.q

    @property
    def m(self) -> int:
        return self.matrix.m

    @property
    def n(self) -> int:
        return self.matrix.n

    def measure(self, x: Sequence) -> tuple:
        return self.matrix.mul_vec(x)

    def sidecar(self) -> dict:
        return {
            "n": self.n,
            "D": self.D,
            "delta": self.delta,
            "q": self.q,
            "construction": self.construction,
            "seed": self.seed,
            "m": self.m,
        }


# ---------------------------------------------------------------------------
# minimum distance


def _gf2_columns(H: FieldMatrix) -> list[int]:
    return [sum(1 << i for i, v in enumerate(H.column(j)) if v) for j in range(H.n)]


def _subset_xors(cols: list[int], h: int) -> tuple[np.ndarray, np.ndarray]:
    """XOR of every subset of ``cols`` with at most ``h`` members.

    Returns ``(values, members)`` with ``members`` padded by -1 to width ``h``.
    """
    n = len(cols)
    colv = np.array(cols, dtype=np.uint64)
    vals = np.zeros(1, dtype=np.uint64)
    idx = np.full((1, h), -1, dtype=np.int16)
    last = np.full(1, -1, dtype=np.int64)
    all_vals, all_idx = [vals], [idx]
    for k in range(h):
        nv, ni, nl = [], [], []
        for j in range(n):
            cut = np.searchsorted(last, j, side="left")
            if cut == 0:
                continue
            nv.append(vals[:cut] ^ colv[j])
            block = idx[:cut].copy()
            block[:, k] = j
            ni.append(block)
            nl.append(np.full(cut, j, dtype=np.int64))
        if not nv:
            break
        vals, idx, last = np.concatenate(nv), np.concatenate(ni), np.concatenate(nl)
        all_vals.append(vals)
        all_idx.append(idx)
    return np.concatenate(all_vals), np.concatenate(all_idx)


def _members(row: np.ndarray) -> frozenset[int]:
    return frozenset(int(v) for v in row if v >= 0)


def _min_distance_gf2(H: FieldMatrix, limit: int, budget: int) -> int | None:
    h = (limit + 1) // 2
    if sum(comb(H.n, i) for i in range(h + 1)) > budget:
        raise ValueError(f"meet-in-the-middle table for limit {limit} exceeds budget {budget}")
    if H.m > 64:
        raise ValueError("packed GF(2) search supports at most 64 rows")
    vals, idx = _subset_xors(_gf2_columns(H), h)
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    dup = np.flatnonzero(sv[1:] == sv[:-1])
    best: int | None = None
    if dup.size:
        starts = dup[np.r_[True, dup[1:] != dup[:-1] + 1]]
        for s in starts:
            e = s + 1
            while e < len(sv) and sv[e] == sv[s]:
                e += 1
            group = [_members(idx[order[k]]) for k in range(s, e)]
            for a, b in itertools.combinations(group, 2):
                w = len(a ^ b)
                if best is None or w < best:
                    best = w
    return best if best is not None and best <= limit else None


def min_distance(H: FieldMatrix, limit: int, budget: int = DEFAULT_BUDGET, method: str = "auto") -> int | None:
    """Smallest weight ``w <= limit`` of a nonzero kernel vector of ``H``, else None.

    None certifies that every nonzero kernel vector is heavier than
    ``limit``.  ``enumerate`` tests every column subset of size ``w`` for a
    linear dependency, by increasing ``w``; the first dependent size is the
    distance.  ``mitm`` (GF(2) only) looks for two distinct subsets of at most
    ``ceil(limit/2)`` columns with equal sums.
    """
    if limit < 1:
        return None
    if method == "auto":
        method = "mitm" if H.q == 2 and H.m <= 64 and sum(comb(H.n, i) for i in range(limit + 1)) > 200_000 else "enumerate"
    if method == "mitm":
        if H.q != 2:
            raise ValueError("meet-in-the-middle distance search needs GF(2)")
        return _min_distance_gf2(H, limit, budget)
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")
    if sum(comb(H.n, i) for i in range(1, limit + 1)) > budget:
        raise ValueError(f"enumerating column subsets up to size {limit} exceeds budget {budget}")
    cols = [H.column(j) for j in range(H.n)]
    for w in range(1, min(limit, H.n) + 1):
        for sub in itertools.combinations(range(H.n), w):
            if w > H.m or len(rref(H.field, [cols[j] for j in sub], H.m)[1]) < w:
                return w
    return None


# ---------------------------------------------------------------------------
# constructions


def build_random_gv(n: int, D: int, q: int, seed: int = 0, max_attempts: int = GV_MAX_ATTEMPTS) -> LinearScheme:
    """Uniform random ``ceil(n H_q((2D+1)/n)) x n`` matrix over GF(q) whose kernel has distance > 2D.

    Seeds are rederived until the sample has independent rows and no
    nonzero kernel vector of weight ``<= 2D``.
    """
    field = PrimeField(q)
    if D < 0 or n < 1:
        raise ValueError("need n >= 1 and D >= 0")
    if (2 * D + 1) / n > 1 - 1 / q:
        raise ValueError(f"need (2D+1)/n <= 1 - 1/q; got {(2 * D + 1) / n:.4g} > {1 - 1 / q:.4g}")
    m = gv_rows(n, D, q)
    for attempt in range(max_attempts):
        s = seed if attempt == 0 else derive_seed(seed, attempt)
        rng = np.random.default_rng(s)
        H = FieldMatrix.from_rows(field, rng.integers(0, q, size=(m, n)).tolist(), n)
        if H.rank() == m and min_distance(H, 2 * D) is None:
            return LinearScheme(H, D, None, "random_gv", s)
    raise RuntimeError(f"no random code with distance > {2 * D} in {max_attempts} attempts")


def build_vandermonde_real(n: int, D: int) -> LinearScheme:
    """``2D x n`` real Vandermonde matrix on nodes 1..n."""
    if not 0 <= 2 * D <= n:
        raise ValueError(f"need 2D <= n, got D={D}, n={n}")
    rows = [[j**i for j in range(1, n + 1)] for i in range(2 * D)]
    return LinearScheme(FieldMatrix.from_rows(RealField(), rows, n), D, None, "vandermonde_real")


def build_rs_parity(n: int, D: int, q: int) -> LinearScheme:
    """``2D x n`` Reed-Solomon parity check over GF(q), ``q >= n``.

    Evaluation points are 1..n when they fit among the nonzero elements,
    otherwise 0..n-1 (with ``0**0 = 1``).
    """
    field = PrimeField(q)
    if q < n:
        raise ValueError(f"Reed-Solomon parity check needs q >= n, got q={q}, n={n}")
    if not 0 <= 2 * D <= n:
        raise ValueError(f"need 2D <= n, got D={D}, n={n}")
    points = range(1, n + 1) if n <= q - 1 else range(n)
    rows = [[pow(a, i, q) for a in points] for i in range(2 * D)]
    return LinearScheme(FieldMatrix.from_rows(field, rows, n), D, None, "rs_parity")


# ---------------------------------------------------------------------------
# distinguishing spaces


def _weighted_vectors(field: PrimeField, n: int, D: int):
    """All vectors of weight <= D over a finite field, by increasing weight."""
    nz = list(field.nonzero())
    for w in range(min(D, n) + 1):
        for sup in itertools.combinations(range(n), w):
            for vals in itertools.product(nz, repeat=w):
                v = [0] * n
                for j, a in zip(sup, vals):
                    v[j] = a
                yield sup, v


def _count_weighted(q: int, n: int, D: int) -> int:
    return sum(comb(n, w) * (q - 1) ** w for w in range(min(D, n) + 1))


def _coset_verdict(groups: dict, delta: float, n: int, checked: int) -> CertResult:
    d2 = delta * delta
    for min_ne, heavy, has_empty in groups.values():
        if min_ne is not None and len(heavy) > d2 * len(min_ne):
            return CertResult(False, (SupportSet(heavy, n), SupportSet(min_ne, n)), checked, "exhaustive")
        if has_empty and min_ne is not None:
            return CertResult(False, (SupportSet(min_ne, n), SupportSet((), n)), checked, "exhaustive")
    return CertResult(True, None, checked, "exhaustive")


def _group_by_key(field: PrimeField, n: int, D: int, key) -> tuple[dict, int]:
    groups: dict = {}
    checked = 0
    for sup, v in _weighted_vectors(field, n, D):
        checked += 1
        k = key(v)
        g = groups.get(k)
        if g is None:
            g = groups[k] = [None, (), False]
        if not sup:
            g[2] = True
        elif g[0] is None:
            g[0] = sup
        if len(sup) > len(g[1]):
            g[1] = sup
    return groups, checked


def certify_distinguishing(kernel_basis: FieldMatrix, D: int, delta: float, budget: int = DEFAULT_BUDGET) -> CertResult:
    """Check that the row space ``V`` of ``kernel_basis`` is (delta, D)-distinguishing.

    Finite fields: every vector of weight ``<= D`` is reduced to a canonical
    coset representative and cosets are scanned for weight ratios above
    ``delta**2`` (zero against nonzero counts as infinite).  Reals: for each
    support union ``U`` of size ``<= 2D`` the subspace of ``V`` living on
    ``U`` is computed, and every split of ``U`` into x-only / y-only / shared
    coordinates whose one-sided coordinates are not forced to zero is a
    realizable pair.
    """
    n = kernel_basis.n
    field = kernel_basis.field
    D = min(D, n)
    if isinstance(field, PrimeField):
        total = _count_weighted(field.q, n, D)
        if total > budget:
            raise ValueError(f"coset enumeration needs {total} vectors (> {budget})")
        red, piv = kernel_basis.rref()

        def canon(v: list[int]) -> tuple:
            v = list(v)
            for row, p in zip(red, piv):
                c = v[p]
                if c:
                    v = [field.sub(a, field.mul(c, b)) for a, b in zip(v, row)]
            return tuple(v)

        groups, checked = _group_by_key(field, n, D, canon)
        return _coset_verdict(groups, delta, n, checked)
    return _certify_distinguishing_real(kernel_basis, D, delta, budget)


def _restricted_subspace(K: FieldMatrix, U: Sequence[int]) -> list[tuple]:
    """Basis of ``{v in rowspace(K) : v_j = 0 for j not in U}``."""
    F = K.field
    outside = [j for j in range(K.n) if j not in set(U)]
    if K.m == 0:
        return []
    if not outside:
        return list(K.entries)
    # coefficients c with c K[:, outside] = 0
    coeffs = K.select_columns(outside).transpose().kernel_basis()
    out = []
    for c in coeffs.entries:
        v = [F.zero] * K.n
        for ci, row in zip(c, K.entries):
            if ci != 0:
                v = [F.add(a, F.mul(ci, b)) for a, b in zip(v, row)]
        out.append(tuple(v))
    return out


def _certify_distinguishing_real(K: FieldMatrix, D: int, delta: float, budget: int) -> CertResult:
    n = K.n
    d2 = delta * delta
    if K.m == 0:
        return CertResult(True, None, 0, "exhaustive")
    top = min(2 * D, n)
    total = sum(comb(n, u) * 3**u for u in range(1, top + 1))
    if total > budget:
        raise ValueError(f"support-split enumeration needs {total} cases (> {budget})")
    checked = 0
    for u in range(1, top + 1):
        for U in itertools.combinations(range(n), u):
            W = _restricted_subspace(K, U)
            if not W:
                continue
            free = [j for j in U if any(v[j] != 0 for v in W)]
            forced = [j for j in U if j not in free]
            for roles in itertools.product((0, 1, 2), repeat=len(free)):
                checked += 1
                xs = [j for j, r in zip(free, roles) if r == 0]
                ys = [j for j, r in zip(free, roles) if r == 1]
                both = [j for j, r in zip(free, roles) if r == 2] + forced
                if not xs and not ys:
                    continue
                sx = tuple(sorted(xs + both))
                sy = tuple(sorted(ys + both))
                light, heavy = sorted((sx, sy), key=len)
                if len(heavy) > D:
                    continue
                if (not light and heavy) or len(heavy) > d2 * len(light):
                    return CertResult(False, (SupportSet(heavy, n), SupportSet(light, n)), checked, "exhaustive")
    return CertResult(True, None, checked, "exhaustive")


def certify_linear(M: FieldMatrix, D: int, delta: float, budget: int = DEFAULT_BUDGET) -> CertResult:
    """Pairwise check on ``M`` itself: no two weight-``<= D`` inputs with ratio > delta**2 share ``M x``.

    Over the reals this defers to :func:`certify_distinguishing` on the kernel.
    """
    if not isinstance(M.field, PrimeField):
        return certify_distinguishing(M.kernel_basis(), D, delta, budget)
    D = min(D, M.n)
    total = _count_weighted(M.q, M.n, D)
    if total > budget:
        raise ValueError(f"enumeration needs {total} vectors (> {budget})")
    groups, checked = _group_by_key(M.field, M.n, D, M.mul_vec)
    return _coset_verdict(groups, delta, M.n, checked)


# ---------------------------------------------------------------------------
# decoding


def _full_support_solution(M: FieldMatrix, S: Sequence[int], b: Sequence) -> bool:
    """Is there ``y`` with ``M_S y = b`` and every ``y_j != 0``?"""
    F = M.field
    if not S:
        return all(v == 0 for v in b)
    sol = M.select_columns(S).solve(b)
    if sol is None:
        return False
    p, K = sol
    if isinstance(F, PrimeField):
        for coeffs in itertools.product(range(F.q), repeat=K.m):
            y = list(p)
            for c, row in zip(coeffs, K.entries):
                if c:
                    y = [F.add(a, F.mul(c, r)) for a, r in zip(y, row)]
            if all(v != 0 for v in y):
                return True
        return False
    # infinite field: an affine space avoids all coordinate hyperplanes unless one contains it
    return all(p[k] != 0 or any(row[k] != 0 for row in K.entries) for k in range(len(S)))


def _consistent(M: FieldMatrix, S: Sequence[int], b: Sequence) -> bool:
    if not S:
        return all(v == 0 for v in b)
    return M.select_columns(S).solve(b) is not None


class _Gf2Table:
    """Syndromes of all column subsets of size <= h, sorted, with members packed into two 64-bit words."""

    def __init__(self, M: FieldMatrix, h: int):
        if M.n > 128:
            raise ValueError("packed GF(2) decoding supports at most 128 columns")
        vals, idx = _subset_xors(_gf2_columns(M), h)
        order = np.argsort(vals, kind="stable")
        self.vals = vals[order]
        idx = idx[order].astype(np.int64)
        self.words = np.zeros((len(idx), 2), dtype=np.uint64)
        for k in range(idx.shape[1]):
            col = idx[:, k]
            for w in range(2):
                hit = (col >= 64 * w) & (col < 64 * (w + 1))
                shift = np.where(hit, col - 64 * w, 0).astype(np.uint64)
                self.words[:, w] |= np.where(hit, np.left_shift(np.uint64(1), shift), np.uint64(0))

    def weights(self, b: int, D: int) -> np.ndarray:
        """Weights ``<= D`` of all ``x = A xor B`` whose syndrome is ``b``."""
        targets = self.vals ^ np.uint64(b)
        lo = np.searchsorted(self.vals, targets, side="left")
        hi = np.searchsorted(self.vals, targets, side="right")
        a = np.flatnonzero(hi > lo)
        if a.size == 0:
            return np.zeros(0, dtype=np.int64)
        counts = hi[a] - lo[a]
        left = np.repeat(a, counts)
        starts = np.repeat(lo[a] - np.cumsum(counts) + counts, counts)
        right = np.arange(counts.sum()) + starts
        x = self.words[left] ^ self.words[right]
        w = np.bitwise_count(x).sum(axis=1).astype(np.int64)
        return w[w <= D]


_GF2_TABLES: dict[tuple[FieldMatrix, int], _Gf2Table] = {}


def _gf2_table(M: FieldMatrix, h: int) -> _Gf2Table:
    key = (M, h)
    tab = _GF2_TABLES.get(key)
    if tab is None:
        if len(_GF2_TABLES) > 8:
            _GF2_TABLES.clear()
        tab = _GF2_TABLES[key] = _Gf2Table(M, h)
    return tab


def _coset_enum_weights(M: FieldMatrix, b: Sequence, D: int) -> tuple[int, int]:
    F = M.field
    sol = M.solve(b)
    ws: list[int] = []
    if sol is not None:
        p, K = sol
        for coeffs in itertools.product(range(F.q), repeat=K.m):
            y = list(p)
            for c, row in zip(coeffs, K.entries):
                if c:
                    y = [F.add(a, F.mul(c, r)) for a, r in zip(y, row)]
            w = sum(1 for v in y if v)
            if w <= D:
                ws.append(w)
    if not ws:
        raise ValueError(f"no x of weight <= {D} is consistent with the measurement")
    return min(ws), max(ws)


def coset_weights(M: FieldMatrix, b: Sequence, D: int, method: str = "auto") -> tuple[int, int]:
    """(lightest weight, heaviest weight <= D) among ``x`` with ``M x = b``.

    ``coset`` walks the whole solution space (finite fields with a small
    kernel); ``enumerate`` scans supports by size with a rank test; ``mitm``
    matches syndromes of half-size subsets over GF(2).

    Raises ``ValueError`` when no ``x`` of weight ``<= D`` is consistent.
    """
    F = M.field
    b = [F.coerce(v) for v in b]
    if len(b) != M.m:
        raise ValueError(f"measurement length {len(b)} != rows {M.m}")
    D = min(D, M.n)
    if method == "auto":
        big = sum(comb(M.n, w) for w in range(D + 1)) > 50_000
        if M.q == 2 and M.m <= 64 and M.n <= 128 and big:
            method = "mitm"
        elif isinstance(F, PrimeField) and F.q ** (M.n - M.rank()) <= COSET_ENUM_LIMIT:
            method = "coset"
        else:
            method = "enumerate"
    if method == "coset":
        if not isinstance(F, PrimeField):
            raise ValueError("coset enumeration needs a finite field")
        return _coset_enum_weights(M, b, D)
    if method == "mitm":
        if M.q != 2:
            raise ValueError("meet-in-the-middle decoding needs GF(2)")
        packed = sum(1 << i for i, v in enumerate(b) if v)
        ws = _gf2_table(M, (D + 1) // 2).weights(packed, D)
        if ws.size == 0:
            raise ValueError(f"no x of weight <= {D} is consistent with the measurement")
        return int(ws.min()), int(ws.max())
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")
    lo = None
    for w in range(D + 1):
        if any(_consistent(M, S, b) for S in itertools.combinations(range(M.n), w)):
            lo = w
            break
    if lo is None:
        raise ValueError(f"no x of weight <= {D} is consistent with the measurement")
    for w in range(D, lo - 1, -1):
        if any(_full_support_solution(M, S, b) for S in itertools.combinations(range(M.n), w)):
            return lo, w
    raise AssertionError("lightest solution must itself be realizable")


def coset_decode(scheme: LinearScheme | FieldMatrix, b: Sequence, D: int | None = None, method: str = "auto") -> float:
    """Geometric mean of the extreme weights of consistent inputs of weight <= D."""
    M = scheme.matrix if isinstance(scheme, LinearScheme) else scheme
    if D is None:
        if not isinstance(scheme, LinearScheme):
            raise ValueError("D is required when decoding against a bare matrix")
        D = scheme.D
    lo, hi = coset_weights(M, b, D, method)
    return math.sqrt(lo * hi)


def random_sparse_vector(field: Field, n: int, d: int, rng: np.random.Generator) -> list:
    """Weight-``d`` vector with random support; nonzero values are random field elements
    (small nonzero integers over the reals)."""
    sup = sorted(int(i) for i in rng.choice(n, size=d, replace=False))
    x = [field.zero] * n
    for j in sup:
        if isinstance(field, PrimeField):
            x[j] = int(rng.integers(1, field.q))
        else:
            v = int(rng.integers(1, 10)) * (1 if rng.random() < 0.5 else -1)
            x[j] = Fraction(v, int(rng.integers(1, 4)))
    return x


__all__ = [
    "LinearScheme",
    "build_random_gv",
    "build_rs_parity",
    "build_vandermonde_real",
    "certify_distinguishing",
    "certify_linear",
    "coset_decode",
    "coset_weights",
    "field_ops",
    "gv_rows",
    "min_distance",
    "q_entropy",
    "random_sparse_vector",
]
