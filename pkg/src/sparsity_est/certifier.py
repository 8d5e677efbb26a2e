"""Brute-force certification of group-testing designs and reference decoders.

A design can Delta-approximate sparsity up to ``D`` exactly when no two
supports with weight ratio above ``Delta**2`` produce the same OR output
(with noise: outputs that are ``(E, E)``-close).  The empty support counts as
infinitely lighter than any nonempty one, so a zero column is a violation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np

from .bits import BitMatrix, BitVector, NoiseBudget, SupportSet, close_bits, or_output_bits
from .gt_scheme import (
    GtScheme,
    GtSchemeParams,
    NoiseAttack,
    build_scheme,
    deviation,
    worst_case_noise,
)
from .seeding import derive_seed
from .setcover import min_cover

DEFAULT_SAMPLES = 10**6
MAX_EXHAUSTIVE_SUPPORTS = 20_000_000


@dataclass(frozen=True)
class CertResult:
    """Verdict of a certification run.

    ``counterexample`` is ``(v1, v2)`` with ``|v1| > Delta**2 |v2|`` (or
    ``v2`` empty) whose outputs collide.  ``checked`` counts the supports
    examined; pairs are compared implicitly through output grouping.
    """

    passed: bool
    counterexample: tuple[SupportSet, SupportSet] | None
    checked: int
    mode: str

    def __post_init__(self) -> None:
        if not self.passed and self.counterexample is None:
            raise ValueError("a failed certification must carry a counterexample")

    def to_json(self) -> dict:
        cx = self.counterexample
        return {
            "passed": self.passed,
            "counterexample_v1": list(cx[0].indices) if cx else None,
            "counterexample_v2": list(cx[1].indices) if cx else None,
            "checked": self.checked,
            "mode": self.mode,
        }

    @classmethod
    def from_json(cls, data: dict, n: int) -> CertResult:
        cx = None
        if data.get("counterexample_v1") is not None:
            cx = (SupportSet.of(data["counterexample_v1"], n), SupportSet.of(data["counterexample_v2"], n))
        return cls(bool(data["passed"]), cx, int(data["checked"]), str(data["mode"]))


def count_supports(n: int, D: int) -> int:
    return sum(comb(n, i) for i in range(min(D, n) + 1))


def iter_supports(n: int, D: int) -> Iterator[tuple[int, ...]]:
    """All supports of size <= D, by increasing size then lexicographically."""
    for w in range(min(D, n) + 1):
        yield from itertools.combinations(range(n), w)


def _mask(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


class _Group:
    __slots__ = ("out", "min_ne", "max", "has_empty")

    def __init__(self, out: int):
        self.out = out
        self.min_ne: tuple[int, ...] | None = None
        self.max: tuple[int, ...] = ()
        self.has_empty = False


def _group_outputs(matrix: BitMatrix, D: int) -> tuple[list[_Group], int]:
    groups: dict[int, _Group] = {}
    checked = 0
    for sup in iter_supports(matrix.n, D):
        checked += 1
        out = or_output_bits(matrix, _mask(sup))
        g = groups.get(out)
        if g is None:
            g = groups[out] = _Group(out)
        if not sup:
            g.has_empty = True
        elif g.min_ne is None:
            g.min_ne = sup
        if len(sup) > len(g.max):
            g.max = sup
    return list(groups.values()), checked


def _pair_violation(heavy: _Group, light: _Group, delta2: float) -> tuple[tuple, tuple] | None:
    if light.min_ne is not None and len(heavy.max) > delta2 * len(light.min_ne):
        return heavy.max, light.min_ne
    if light.has_empty and heavy.max:
        return (heavy.min_ne if heavy is light else heavy.max), ()
    return None


def _check_exhaustive_budget(n: int, D: int, limit: int) -> None:
    total = count_supports(n, D)
    if total > limit:
        raise ValueError(f"exhaustive enumeration needs {total} supports (> {limit}); use sampled mode")


def _closure(matrix: BitMatrix, out: int) -> list[int]:
    """Items whose columns lie inside the positive rows of ``out``."""
    return [j for j, col in enumerate(matrix.columns) if not col & ~out]


def _random_support(rng: np.random.Generator, n: int, w: int) -> tuple[int, ...]:
    return tuple(sorted(int(i) for i in rng.choice(n, size=w, replace=False)))


def certify_noiseless(
    matrix: BitMatrix,
    D: int,
    delta: float,
    mode: str = "exhaustive",
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> CertResult:
    """Check that supports of size ``<= D`` with weight ratio > delta**2 never collide.

    ``exhaustive`` groups every support by its output and compares the
    lightest nonempty and heaviest member of each group.  ``sampled`` uses
    the OR-model closure: the heaviest support sharing the output of ``S`` has
    ``min(D, |closure(S)|)`` items, so only light supports ``S`` with
    ``|S| * delta**2 < D`` need checking.  When those fit in ``samples`` they
    are all checked and the result is reported as exhaustive.
    """
    n = matrix.n
    D = min(D, n)
    delta2 = delta * delta
    if mode == "exhaustive":
        _check_exhaustive_budget(n, D, MAX_EXHAUSTIVE_SUPPORTS)
        groups, checked = _group_outputs(matrix, D)
        for g in groups:
            hit = _pair_violation(g, g, delta2)
            if hit:
                return CertResult(False, _as_pair(hit, n), checked, "exhaustive")
        return CertResult(True, None, checked, "exhaustive")
    if mode != "sampled":
        raise ValueError(f"unknown certification mode {mode!r}")

    zero_cols = [j for j, col in enumerate(matrix.columns) if col == 0]
    if D >= 1 and zero_cols:
        return CertResult(False, _as_pair(((zero_cols[0],), ()), n), 1, "sampled")
    light = [w for w in range(1, D + 1) if w * delta2 < D]
    total = sum(comb(n, w) for w in light)
    checked = 1

    def check(sup: tuple[int, ...]) -> CertResult | None:
        out = or_output_bits(matrix, _mask(sup))
        clo = _closure(matrix, out)
        if min(D, len(clo)) > delta2 * len(sup):
            extra = [j for j in clo if j not in sup][: D - len(sup)]
            heavy = tuple(sorted(sup + tuple(extra)))
            return CertResult(False, _as_pair((heavy, sup), n), checked, mode_used)
        return None

    if total <= samples:
        mode_used = "exhaustive"
        for w in light:
            for sup in itertools.combinations(range(n), w):
                checked += 1
                res = check(sup)
                if res:
                    return res
        return CertResult(True, None, checked, mode_used)
    mode_used = "sampled"
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        checked += 1
        res = check(_random_support(rng, n, int(rng.choice(light))))
        if res:
            return res
    return CertResult(True, None, checked, mode_used)


def _as_pair(hit: tuple[tuple, tuple], n: int) -> tuple[SupportSet, SupportSet]:
    return SupportSet(tuple(hit[0]), n), SupportSet(tuple(hit[1]), n)


def certify_noisy(
    matrix: BitMatrix,
    D: int,
    delta: float,
    budget: NoiseBudget,
    mode: str = "exhaustive",
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> CertResult:
    """Check that supports with weight ratio > delta**2 have ``(E, E)``-far outputs.

    ``E = e0 + e1``.  With ``E = 0`` this reproduces :func:`certify_noiseless`
    exactly, counterexample included.  The sampled mode grows a heavy
    support greedily around each sampled light one and is a heuristic search.
    """
    n = matrix.n
    D = min(D, n)
    E = budget.total
    delta2 = delta * delta
    if mode == "exhaustive":
        _check_exhaustive_budget(n, D, MAX_EXHAUSTIVE_SUPPORTS)
        groups, checked = _group_outputs(matrix, D)
        by_weight: dict[int, list[_Group]] = {}
        for g in groups:
            by_weight.setdefault(g.out.bit_count(), []).append(g)
        for light in groups:
            hit = _pair_violation(light, light, delta2)
            if hit:
                return CertResult(False, _as_pair(hit, n), checked, "exhaustive")
            if E == 0:
                continue
            w = light.out.bit_count()
            for ww in range(max(0, w - E), w + E + 1):
                for heavy in by_weight.get(ww, ()):
                    if heavy is light or not close_bits(heavy.out, light.out, E, E):
                        continue
                    hit = _pair_violation(heavy, light, delta2)
                    if hit:
                        return CertResult(False, _as_pair(hit, n), checked, "exhaustive")
        return CertResult(True, None, checked, "exhaustive")
    if mode != "sampled":
        raise ValueError(f"unknown certification mode {mode!r}")

    cols = matrix.columns
    rng = np.random.default_rng(seed)
    light_weights = [0] + [w for w in range(1, D + 1) if w * delta2 < D]
    checked = 0
    for _ in range(samples):
        checked += 1
        w = int(rng.choice(light_weights))
        sup = _random_support(rng, n, w)
        base = or_output_bits(matrix, _mask(sup))
        heavy = list(sup)
        out = base
        pool = [j for j in range(n) if j not in sup]
        while len(heavy) < D and pool:
            j = min(pool, key=lambda j: (cols[j] & ~out).bit_count())
            new_out = out | cols[j]
            if (new_out & ~base).bit_count() > E:
                break
            heavy.append(j)
            pool.remove(j)
            out = new_out
        too_heavy = len(heavy) > delta2 * w if w else len(heavy) > 0
        if too_heavy and close_bits(out, base, E, E):
            return CertResult(False, _as_pair((tuple(sorted(heavy)), sup), n), checked, "sampled")
        if light_weights == [0]:
            # only the empty support is light; the greedy growth is deterministic
            break
    return CertResult(True, None, checked, "sampled")


def universal_decode_gt(matrix: BitMatrix, b: BitVector, D: int) -> float:
    """Geometric mean of the lightest and heaviest (<= D) supports explaining ``b``.

    Candidates are the items absent from every negative test.  The heaviest
    consistent support is ``min(D, #candidates)``; the lightest is an exact
    minimum cover of the positive tests by candidates.
    """
    if len(b) != matrix.m:
        raise ValueError(f"result length {len(b)} != matrix rows {matrix.m}")
    pos = b.bits
    cand = [j for j, col in enumerate(matrix.columns) if not col & ~pos]
    covered = 0
    for j in cand:
        covered |= matrix.columns[j]
    if covered != pos:
        raise ValueError("result vector is not achievable: positive tests left uncovered")
    cover = min_cover(pos, [matrix.columns[j] for j in cand], limit=D)
    if cover is None:
        raise ValueError(f"result vector needs more than D={D} defectives")
    lo, hi = len(cover), min(D, len(cand))
    return math.sqrt(lo * hi)


def consistent_supports(matrix: BitMatrix, y: BitVector, D: int, budget: NoiseBudget) -> list[tuple[int, ...]]:
    """Supports of size <= D whose output is (e0, e1)-close to the observation ``y``."""
    if len(y) != matrix.m:
        raise ValueError(f"result length {len(y)} != matrix rows {matrix.m}")
    _check_exhaustive_budget(matrix.n, D, MAX_EXHAUSTIVE_SUPPORTS)
    return [
        sup
        for sup in iter_supports(matrix.n, D)
        if close_bits(or_output_bits(matrix, _mask(sup)), y.bits, budget.e0, budget.e1)
    ]


def universal_decode_gt_noisy(matrix: BitMatrix, y: BitVector, D: int, budget: NoiseBudget) -> float:
    sups = consistent_supports(matrix, y, D, budget)
    if not sups:
        raise ValueError("no support of size <= D explains the observation within the noise budget")
    return math.sqrt(min(map(len, sups)) * max(map(len, sups)))


def partition_count(matrix: BitMatrix, D: int, max_supports: int = 5_000_000) -> int:
    """Number of distinct OR outputs over all supports of size <= D."""
    _check_exhaustive_budget(matrix.n, D, max_supports)
    return len({or_output_bits(matrix, _mask(sup)) for sup in iter_supports(matrix.n, D)})


@dataclass(frozen=True)
class AttackResult:
    flips0: tuple[int, ...]
    flips1: tuple[int, ...]
    d_true: int
    d_hat: float
    deviation: float
    exhaustive: bool
    evaluated: int

    def violates(self, delta: float) -> bool:
        return self.deviation > delta


def adversarial_noise_search(
    scheme: GtScheme, x: SupportSet, budget: NoiseBudget, effort: int = 100_000
) -> AttackResult:
    """Worst noise pattern within ``budget`` against the scheme's decoder.

    Every legal pattern is tried when there are at most ``effort`` of them.
    Otherwise the exact block-count adversary from
    :func:`gt_scheme.worst_case_noise` is used.
    """
    b = or_output_bits(scheme.matrix, x.mask)
    d = x.weight
    m = scheme.m
    zeros = [i for i in range(m) if not (b >> i) & 1]
    ones = [i for i in range(m) if (b >> i) & 1]
    n0 = sum(comb(len(zeros), i) for i in range(min(budget.e0, len(zeros)) + 1))
    n1 = sum(comb(len(ones), j) for j in range(min(budget.e1, len(ones)) + 1))
    if n0 * n1 > effort:
        att: NoiseAttack = worst_case_noise(scheme, b, budget, d)
        return AttackResult(att.flips0, att.flips1, d, att.d_hat, att.deviation, False, 1)

    best: tuple | None = None
    evaluated = 0
    for i in range(min(budget.e0, len(zeros)) + 1):
        for f0 in itertools.combinations(zeros, i):
            up = b | _mask(f0)
            for j in range(min(budget.e1, len(ones)) + 1):
                for f1 in itertools.combinations(ones, j):
                    evaluated += 1
                    d_hat = scheme.decode_bits(up & ~_mask(f1))
                    dev = deviation(d_hat, d)
                    if best is None or dev > best[0]:
                        best = (dev, f0, f1, d_hat)
    assert best is not None
    dev, f0, f1, d_hat = best
    return AttackResult(tuple(f0), tuple(f1), d, d_hat, dev, True, evaluated)


@dataclass(frozen=True)
class Verification:
    passed: bool
    checked: int
    worst_deviation: float
    failing_support: SupportSet | None = None


def verify_scheme(scheme: GtScheme, samples: int = 20_000, seed: int = 0) -> Verification:
    """Decoder check: every support of weight <= 2 plus ``samples`` random ones.

    For padded schemes each support is attacked with the exact worst-case
    noise pattern within the design budget.
    """
    p = scheme.params
    n, D = p.n, p.D
    budget = p.budget
    noisy = budget.total > 0
    worst = 1.0
    checked = 0

    def run(sup: tuple[int, ...]) -> bool:
        nonlocal worst, checked
        checked += 1
        b = or_output_bits(scheme.matrix, _mask(sup))
        if noisy:
            dev = worst_case_noise(scheme, b, budget, len(sup)).deviation
        else:
            dev = deviation(scheme.decode_bits(b), len(sup))
        worst = max(worst, dev)
        return dev <= p.delta

    small = min(D, 2)
    if count_supports(n, D) <= samples:
        small = D
    for sup in iter_supports(n, small):
        if not run(sup):
            return Verification(False, checked, worst, SupportSet(sup, n))
    if small < D:
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            sup = _random_support(rng, n, int(rng.integers(1, D + 1)))
            if not run(sup):
                return Verification(False, checked, worst, SupportSet(sup, n))
    return Verification(True, checked, worst)


def reseed(seed: int, attempt: int) -> int:
    """Seed for the ``attempt``-th construction try; attempt 0 keeps ``seed``."""
    return seed if attempt == 0 else derive_seed(seed, attempt)


@dataclass(frozen=True)
class AcceptedScheme:
    scheme: GtScheme
    attempts: int
    certificate: CertResult
    verification: Verification


def build_verified_scheme(
    params: GtSchemeParams,
    samples: int = 20_000,
    max_reseeds: int = 64,
    cert_samples: int = 20_000,
) -> AcceptedScheme:
    """Regenerate with derived seeds until the design certifies and decodes correctly.

    Raises ``RuntimeError`` when ``max_reseeds`` attempts all fail.
    """
    for attempt in range(max_reseeds):
        cand = params.replace(seed=reseed(params.seed, attempt))
        scheme = build_scheme(cand)
        if cand.budget.total:
            cert = certify_noisy(scheme.matrix, cand.D, cand.delta, cand.budget, "sampled",
                                 samples=cert_samples, seed=cand.seed)
        else:
            cert = certify_noiseless(scheme.matrix, cand.D, cand.delta, "sampled",
                                     samples=cert_samples, seed=cand.seed)
        if not cert.passed:
            continue
        ver = verify_scheme(scheme, samples=samples, seed=cand.seed)
        if ver.passed:
            return AcceptedScheme(scheme, attempt + 1, cert, ver)
    raise RuntimeError(f"no accepted scheme within {max_reseeds} seeds")
