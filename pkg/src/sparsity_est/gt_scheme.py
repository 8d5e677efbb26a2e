"""Randomized blocked group-testing design with a single-pass majority decoder.

Tests are arranged in index blocks ``l = index_lo .. index_hi``.  Every test
in block ``l`` includes each item independently with probability
``1 - (1 - 1/D) ** (b ** l)``, so a test in block ``l`` is negative with
probability ``(1 - 1/D) ** (d * b ** l)`` when ``d`` items are defective.
The decoder finds the highest block whose tests are mostly negative and
inverts that probability at 1/2.

Noise robustness pads every block with ``2 * (e0 + e1)`` extra tests.  An
all-ones sentinel test (replicated ``2 * (e0 + e1) + 1`` times) separates
``d = 0`` from everything else.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .bits import BitMatrix, BitVector, NoiseBudget

DEFAULT_T_CONSTANT = 4.0
_LOG_TOL = 1e-9


def _floor_log(x: float, base: float) -> int:
    v = math.log(x) / math.log(base)
    r = round(v)
    return r if abs(v - r) < _LOG_TOL else math.floor(v)


def _ceil_log(x: float, base: float) -> int:
    v = math.log(x) / math.log(base)
    r = round(v)
    return r if abs(v - r) < _LOG_TOL else math.ceil(v)


def index_range(D: int, b: float) -> tuple[int, int]:
    """Block indices ``[floor(log_b ln 2), ceil(log_b D)]``."""
    return _floor_log(math.log(2), b), _ceil_log(D, b)


def negative_prob(d: float, l: float, D: int, b: float) -> float:
    """Probability that a block-``l`` test misses all of ``d`` defectives.

    For ``D = 1`` the base is 0, so the result is 0 for any ``d > 0``.
    """
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    if d < 0:
        raise ValueError(f"d must be >= 0, got {d}")
    if d == 0:
        return 1.0
    return (1.0 - 1.0 / D) ** (d * b**l)


def inclusion_prob(l: int, D: int, b: float) -> float:
    p = 1.0 - (1.0 - 1.0 / D) ** (b**l)
    return min(1.0, max(0.0, p))


def default_t(n: int, D: int, delta: float, b: float, c: float = DEFAULT_T_CONSTANT) -> int:
    """``ceil(c * (D / log_b(delta)) * ln n)``, at least 1."""
    log_ratio = math.log(delta) / math.log(b)
    return max(1, math.ceil(c * (D / log_ratio) * math.log(n)))


@dataclass(frozen=True)
class GtSchemeParams:
    n: int
    D: int
    delta: float
    b: float
    s: int
    t: int
    e0: int = 0
    e1: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        problems = self.violations()
        if problems:
            raise ValueError("invalid scheme parameters: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if self.n < 1:
            out.append(f"n must be >= 1 (got {self.n})")
        if not 1 <= self.D <= self.n:
            out.append(f"need 1 <= D <= n (got D={self.D}, n={self.n})")
        if not self.delta > 1:
            out.append(f"delta must be > 1 (got {self.delta})")
        if not self.b > 1:
            out.append(f"b must be > 1 (got {self.b})")
        if self.delta > 1 and self.b > 1 and not self.s < self.log_ratio - 1:
            out.append(f"need s < log_b(delta) - 1 = {self.log_ratio - 1:.6g} (got s={self.s})")
        if self.t < 1:
            out.append(f"t must be >= 1 (got {self.t})")
        if self.e0 < 0 or self.e1 < 0:
            out.append(f"noise budget must be nonnegative (got e0={self.e0}, e1={self.e1})")
        if not 0 <= self.seed < 2**64:
            out.append(f"seed must fit in 64 bits (got {self.seed})")
        return out

    @classmethod
    def with_defaults(
        cls,
        n: int,
        D: int,
        delta: float,
        *,
        b: float | None = None,
        s: int = 0,
        t: int | None = None,
        e0: int = 0,
        e1: int = 0,
        seed: int = 0,
        c: float = DEFAULT_T_CONSTANT,
    ) -> GtSchemeParams:
        """Fill ``b = sqrt(delta)`` and ``t = ceil(c (D / log_b delta) ln n)`` when omitted."""
        if b is None:
            b = math.sqrt(delta)
        if t is None:
            if delta <= 1 or b <= 1:
                raise ValueError("delta and b must exceed 1")
            t = default_t(n, D, delta, b, c)
        return cls(n=n, D=D, delta=delta, b=b, s=s, t=t, e0=e0, e1=e1, seed=seed)

    @property
    def log_ratio(self) -> float:
        """``log_b(delta)``."""
        return math.log(self.delta) / math.log(self.b)

    @property
    def budget(self) -> NoiseBudget:
        return NoiseBudget(self.e0, self.e1)

    @property
    def index_range(self) -> tuple[int, int]:
        return index_range(self.D, self.b)

    @property
    def tests_per_index(self) -> int:
        return self.t + 2 * (self.e0 + self.e1)

    @property
    def sentinel_rows(self) -> int:
        return 2 * (self.e0 + self.e1) + 1

    def replace(self, **changes) -> GtSchemeParams:
        return GtSchemeParams(**{**asdict(self), **changes})


def scheme_row_budget(params: GtSchemeParams) -> int:
    """Exact row count produced by :func:`build_scheme`."""
    lo, hi = params.index_range
    return (hi - lo + 1) * params.tests_per_index + params.sentinel_rows


@dataclass(frozen=True)
class Block:
    index: int
    start: int
    size: int

    @property
    def mask(self) -> int:
        return ((1 << self.size) - 1) << self.start


@dataclass(frozen=True, eq=False)
class GtScheme:
    params: GtSchemeParams
    matrix: BitMatrix
    index_lo: int
    index_hi: int
    tests_per_index: int
    sentinel_rows: int

    def __post_init__(self) -> None:
        expected = self.num_indices * self.tests_per_index + self.sentinel_rows
        if self.matrix.m != expected:
            raise ValueError(f"matrix has {self.matrix.m} rows, layout needs {expected}")
        if self.matrix.n != self.params.n:
            raise ValueError("matrix columns do not match params.n")

    @property
    def num_indices(self) -> int:
        return self.index_hi - self.index_lo + 1

    @property
    def has_sentinel(self) -> bool:
        return self.sentinel_rows > 0

    @property
    def m(self) -> int:
        return self.matrix.m

    @cached_property
    def blocks(self) -> tuple[Block, ...]:
        """Index blocks in increasing index order."""
        k = self.tests_per_index
        return tuple(
            Block(l, (l - self.index_lo) * k, k) for l in range(self.index_lo, self.index_hi + 1)
        )

    @cached_property
    def sentinel_block(self) -> Block:
        return Block(self.index_lo - 1, self.num_indices * self.tests_per_index, self.sentinel_rows)

    @cached_property
    def _scan(self) -> tuple[tuple[int, int, int], ...]:
        # (index, mask, strict-majority threshold) from the top block down
        return tuple((blk.index, blk.mask, blk.size // 2 + 1) for blk in reversed(self.blocks))

    def estimate_for_index(self, L: int) -> float:
        p = self.params
        if p.D == 1:
            return 1.0
        return -1.0 / (p.b ** (L - p.s) * math.log2(1.0 - 1.0 / p.D))

    def decode_bits(self, y: int) -> float:
        """Decode a packed result vector (no length check)."""
        if self.has_sentinel:
            sb = self.sentinel_block
            if ((y & sb.mask).bit_count()) * 2 <= sb.size:
                return 0.0
        L = self.index_lo - 1
        for index, mask, need in self._scan:
            if self.tests_per_index - (y & mask).bit_count() >= need:
                L = index
                break
        return self.estimate_for_index(L)

    def majority_index(self, y: int) -> int:
        for index, mask, need in self._scan:
            if self.tests_per_index - (y & mask).bit_count() >= need:
                return index
        return self.index_lo - 1

    def sidecar(self) -> dict:
        p = self.params
        return {
            "n": p.n,
            "D": p.D,
            "delta": p.delta,
            "b": p.b,
            "s": p.s,
            "t": p.t,
            "e0": p.e0,
            "e1": p.e1,
            "seed": p.seed,
            "index_lo": self.index_lo,
            "index_hi": self.index_hi,
            "sentinel": self.sentinel_rows,
        }


def build_scheme(params: GtSchemeParams) -> GtScheme:
    """Draw the blocked Bernoulli design; deterministic in ``params.seed``."""
    lo, hi = params.index_range
    k = params.tests_per_index
    rng = np.random.default_rng(params.seed)
    rows: list[int] = []
    for l in range(lo, hi + 1):
        p = inclusion_prob(l, params.D, params.b)
        draws = rng.random((k, params.n)) < p
        for r in draws:
            rows.append(int.from_bytes(np.packbits(r, bitorder="little").tobytes(), "little"))
    full = (1 << params.n) - 1
    rows.extend([full] * params.sentinel_rows)
    matrix = BitMatrix(len(rows), params.n, tuple(rows))
    return GtScheme(params, matrix, lo, hi, k, params.sentinel_rows)


def decode(scheme: GtScheme, y: BitVector) -> float:
    """Estimate the number of defectives from (possibly noisy) results ``y``.

    Returns 0 when the sentinel majority is negative.  Otherwise ``L`` is the
    highest block with strictly more than half its tests negative (or
    ``index_lo - 1`` when there is none) and the estimate is
    ``-1 / (b ** (L - s) * log2(1 - 1/D))``.
    """
    if len(y) != scheme.m:
        raise ValueError(f"result length {len(y)} != scheme rows {scheme.m}")
    return scheme.decode_bits(y.bits)


def deviation(d_hat: float, d: int) -> float:
    """Multiplicative error ``max(d_hat/d, d/d_hat)``; infinite when exactly one side is 0."""
    if d == 0:
        return 1.0 if d_hat == 0 else math.inf
    if d_hat <= 0:
        return math.inf
    return max(d_hat / d, d / d_hat)


def _pick(mask: int, k: int) -> list[int]:
    out = []
    while mask and len(out) < k:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass(frozen=True)
class NoiseAttack:
    flips0: tuple[int, ...]
    flips1: tuple[int, ...]
    d_hat: float
    deviation: float

    @property
    def weight(self) -> int:
        return len(self.flips0) + len(self.flips1)


def worst_case_noise(scheme: GtScheme, b: int, budget: NoiseBudget, d: int) -> NoiseAttack:
    """Exact worst-case noise pattern against :meth:`GtScheme.decode_bits`.

    The decoder only sees the negative count of each block and the sentinel
    majority, so every reachable decoder outcome has a cheapest pattern that
    can be computed block by block.  ``b`` is the noiseless packed output.
    """
    full = (1 << scheme.m) - 1
    sb = scheme.sentinel_block
    sent_pos = (b & sb.mask).bit_count()
    options: list[tuple[list[int], list[int]]] = []

    if scheme.has_sentinel:
        # sentinel voted negative: estimate 0
        need = max(0, sent_pos - sb.size // 2)
        options.append(([], _pick(b & sb.mask, need)))
        sent_fp = _pick(~b & full & sb.mask, max(0, sb.size // 2 + 1 - sent_pos))
    else:
        sent_fp = []

    blocks = scheme.blocks
    neg = [blk.size - (b & blk.mask).bit_count() for blk in blocks]
    for target in range(scheme.index_lo - 1, scheme.index_hi + 1):
        f0 = list(sent_fp)
        f1: list[int] = []
        for k, blk in enumerate(blocks):
            if blk.index > target:
                excess = neg[k] - blk.size // 2
                if excess > 0:
                    f0 += _pick(~b & full & blk.mask, excess)
            elif blk.index == target:
                short = blk.size // 2 + 1 - neg[k]
                if short > 0:
                    f1 += _pick(b & blk.mask, short)
        options.append((f0, f1))

    best: NoiseAttack | None = None
    for f0, f1 in options:
        if len(f0) > budget.e0 or len(f1) > budget.e1:
            continue
        y = b
        for i in f0:
            y |= 1 << i
        for i in f1:
            y &= ~(1 << i)
        d_hat = scheme.decode_bits(y)
        cand = NoiseAttack(tuple(sorted(f0)), tuple(sorted(f1)), d_hat, deviation(d_hat, d))
        if best is None or (cand.deviation, -cand.weight) > (best.deviation, -best.weight):
            best = cand
    assert best is not None  # the empty pattern is always among the options
    return best


def save_scheme(scheme: GtScheme, path: str | Path) -> tuple[Path, Path]:
    """Write the matrix text to ``path`` and the JSON sidecar to ``path + '.json'``."""
    path = Path(path)
    side = path.with_name(path.name + ".json")
    path.write_text(scheme.matrix.to_text(), encoding="utf-8")
    side.write_text(json.dumps(scheme.sidecar(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path, side


def load_scheme(path: str | Path) -> GtScheme:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text(encoding="utf-8"))
    matrix = BitMatrix.from_text(path.read_text(encoding="utf-8"))
    keys = ("n", "D", "delta", "b", "s", "t", "e0", "e1", "seed")
    params = GtSchemeParams(**{k: meta[k] for k in keys})
    lo, hi = params.index_range
    if (lo, hi) != (meta["index_lo"], meta["index_hi"]):
        raise ValueError("sidecar index range disagrees with parameters")
    return GtScheme(params, matrix, lo, hi, params.tests_per_index, int(meta["sentinel"]))
