"""Seeded Monte-Carlo estimation sweeps over constructed schemes.

Each trial draws its randomness from ``derive_seed(master_seed, trial)``, so
the output does not depend on how trials are scheduled across workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from .bits import NoiseBudget, SupportSet, or_output_bits
from .certifier import adversarial_noise_search, build_verified_scheme
from .gt_scheme import GtScheme, GtSchemeParams, build_scheme, deviation
from .linear import (
    LinearScheme,
    build_random_gv,
    build_rs_parity,
    build_vandermonde_real,
    coset_decode,
    min_distance,
    random_sparse_vector,
)
from .seeding import derive_seed

MODELS = ("gt", "gv", "rs", "vandermonde")
NOISE_MODES = ("none", "random", "adversarial")
CSV_COLUMNS = ("trial", "model", "n", "D", "delta", "m", "d_true", "d_hat", "ratio", "within_bounds", "noise_w", "seed")
# slack for estimates that land on the Delta boundary up to float rounding
BOUNDS_RTOL = 1e-12


@dataclass
class ExperimentConfig:
    model: str = "gt"
    n: int = 64
    D: int = 8
    delta: float = 4.0
    b: float | None = None
    s: int = 0
    t: int | None = None
    e0: int = 0
    e1: int = 0
    q: int = 2
    seed: int = 0
    trials: int = 10
    d_values: list[int] | None = None
    noise: str = "none"
    out: str | None = None
    workers: int = 1
    effort: int = 100_000
    samples: int = 20_000
    allow_uncertified: bool = False

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        problems = []
        if self.model not in MODELS:
            problems.append(f"model must be one of {MODELS}")
        if self.noise not in NOISE_MODES:
            problems.append(f"noise must be one of {NOISE_MODES}")
        if self.n < 1 or self.D < 0 or self.D > self.n:
            problems.append(f"need 0 <= D <= n, n >= 1 (got n={self.n}, D={self.D})")
        if self.trials < 0:
            problems.append("trials must be >= 0")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        if self.e0 < 0 or self.e1 < 0:
            problems.append("noise budget must be nonnegative")
        if self.model != "gt" and (self.noise != "none" or self.e0 or self.e1):
            problems.append("noise is only modelled for group testing")
        if self.model == "gt" and self.noise != "none" and self.e0 + self.e1 == 0:
            problems.append("noisy runs need a nonzero budget (e0, e1)")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must fit in 64 bits")
        for d in self.d_values or ():
            if not 0 <= d <= self.D:
                problems.append(f"d value {d} outside [0, D]")
        if problems:
            raise ValueError("invalid experiment config: " + "; ".join(problems))

    @property
    def sweep(self) -> list[int]:
        return sorted(set(self.d_values)) if self.d_values else list(range(self.D + 1))

    def gt_params(self) -> GtSchemeParams:
        return GtSchemeParams.with_defaults(
            self.n, self.D, self.delta, b=self.b, s=self.s, t=self.t, e0=self.e0, e1=self.e1, seed=self.seed
        )


@dataclass
class Prepared:
    """A scheme ready for simulation plus how it was certified."""

    scheme: GtScheme | LinearScheme
    certified: bool
    note: str
    attempts: int = 1


def construct(cfg: ExperimentConfig) -> GtScheme | LinearScheme:
    """Deterministic construction from the config, without certification."""
    if cfg.model == "gt":
        return build_scheme(cfg.gt_params())
    if cfg.model == "gv":
        return build_random_gv(cfg.n, cfg.D, cfg.q, cfg.seed)
    if cfg.model == "rs":
        return build_rs_parity(cfg.n, cfg.D, cfg.q)
    return build_vandermonde_real(cfg.n, cfg.D)


def prepare(cfg: ExperimentConfig) -> Prepared:
    """Build a certified scheme for the config, or an uncertified one when allowed."""
    if cfg.model == "gt":
        if cfg.allow_uncertified:
            return Prepared(build_scheme(cfg.gt_params()), False, "uncertified by request")
        acc = build_verified_scheme(cfg.gt_params(), samples=cfg.samples, cert_samples=cfg.samples)
        return Prepared(acc.scheme, True, f"certified ({acc.certificate.mode}) and verified", acc.attempts)
    if cfg.model == "gv":
        return Prepared(build_random_gv(cfg.n, cfg.D, cfg.q, cfg.seed), True, f"kernel distance > {2 * cfg.D}")
    if cfg.model == "rs":
        sch = build_rs_parity(cfg.n, cfg.D, cfg.q)
        try:
            ok = min_distance(sch.matrix, 2 * cfg.D) is None
        except ValueError:
            return Prepared(sch, cfg.allow_uncertified, "distance check over budget")
        return Prepared(sch, ok or cfg.allow_uncertified, f"kernel distance > {2 * cfg.D}" if ok else "distance check failed")
    return Prepared(build_vandermonde_real(cfg.n, cfg.D), True, "every 2D columns independent")


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return f"{v:.12g}"


def within_bounds(d_hat: float, d: int, delta: float) -> bool:
    return deviation(d_hat, d) <= delta * (1 + BOUNDS_RTOL)


def _random_flips(rng: np.random.Generator, b: int, m: int, budget: NoiseBudget) -> tuple[list[int], list[int]]:
    zeros = [i for i in range(m) if not (b >> i) & 1]
    ones = [i for i in range(m) if (b >> i) & 1]
    k0 = int(rng.integers(0, min(budget.e0, len(zeros)) + 1))
    k1 = int(rng.integers(0, min(budget.e1, len(ones)) + 1))
    f0 = sorted(int(i) for i in rng.choice(zeros, size=k0, replace=False)) if k0 else []
    f1 = sorted(int(i) for i in rng.choice(ones, size=k1, replace=False)) if k1 else []
    return f0, f1


def _gt_estimate(cfg: ExperimentConfig, scheme: GtScheme, d: int, rng: np.random.Generator) -> tuple[float, int]:
    sup = sorted(int(i) for i in rng.choice(cfg.n, size=d, replace=False))
    b = or_output_bits(scheme.matrix, SupportSet(tuple(sup), cfg.n).mask)
    budget = NoiseBudget(cfg.e0, cfg.e1)
    if cfg.noise == "none":
        return scheme.decode_bits(b), 0
    if cfg.noise == "random":
        f0, f1 = _random_flips(rng, b, scheme.m, budget)
        y = b
        for i in f0:
            y |= 1 << i
        for i in f1:
            y &= ~(1 << i)
        return scheme.decode_bits(y), len(f0) + len(f1)
    att = adversarial_noise_search(scheme, SupportSet(tuple(sup), cfg.n), budget, cfg.effort)
    return att.d_hat, len(att.flips0) + len(att.flips1)


def run_trial(cfg: ExperimentConfig, scheme: GtScheme | LinearScheme, trial: int) -> list[dict]:
    seed = derive_seed(cfg.seed, trial)
    rng = np.random.default_rng(seed)
    rows = []
    for d in cfg.sweep:
        if isinstance(scheme, GtScheme):
            d_hat, noise_w = _gt_estimate(cfg, scheme, d, rng)
        else:
            x = random_sparse_vector(scheme.field, cfg.n, d, rng)
            d_hat, noise_w = coset_decode(scheme, scheme.measure(x), cfg.D), 0
        if d:
            ratio = d_hat / d
        else:
            ratio = 1.0 if d_hat == 0 else math.inf
        rows.append(
            {
                "trial": trial,
                "model": cfg.model,
                "n": cfg.n,
                "D": cfg.D,
                "delta": cfg.delta,
                "m": scheme.m,
                "d_true": d,
                "d_hat": d_hat,
                "ratio": ratio,
                "within_bounds": within_bounds(d_hat, d, cfg.delta),
                "noise_w": noise_w,
                "seed": seed,
            }
        )
    return rows


_WORKER: tuple[ExperimentConfig, Any] | None = None


def _init_worker(cfg: ExperimentConfig, scheme: Any) -> None:
    global _WORKER
    _WORKER = (cfg, scheme)


def _worker_trial(trial: int) -> list[dict]:
    assert _WORKER is not None
    return run_trial(_WORKER[0], _WORKER[1], trial)


def simulate(cfg: ExperimentConfig, scheme: GtScheme | LinearScheme) -> list[dict]:
    trials = range(cfg.trials)
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(cfg, scheme)) as pool:
            chunks = list(pool.map(_worker_trial, trials, chunksize=max(1, cfg.trials // (4 * cfg.workers))))
    else:
        chunks = [run_trial(cfg, scheme, t) for t in trials]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r["trial"], r["d_true"]))
    return rows


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        out = []
        for col in CSV_COLUMNS:
            v = r[col]
            if isinstance(v, bool):
                out.append("1" if v else "0")
            elif isinstance(v, float):
                out.append(_fmt(v))
            else:
                out.append(str(v))
        w.writerow(out)
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def summarize(rows: list[dict], cfg: ExperimentConfig, prepared: Prepared) -> dict:
    ratios = [r["ratio"] for r in rows if r["d_true"] > 0 and math.isfinite(r["ratio"])]
    return {
        "config": asdict(cfg),
        "m": prepared.scheme.m,
        "certified": prepared.certified,
        "certification": prepared.note,
        "construction_attempts": prepared.attempts,
        "rows": len(rows),
        "violations": sum(1 for r in rows if not r["within_bounds"]),
        "min_ratio": min(ratios) if ratios else None,
        "max_ratio": max(ratios) if ratios else None,
        "mean_ratio": sum(ratios) / len(ratios) if ratios else None,
    }


def write_outputs(rows: list[dict], summary: dict, out: str | Path) -> tuple[Path, Path]:
    """Write ``<out>`` (CSV) and ``<out>.summary.json``."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(to_csv(rows), encoding="utf-8")
    side = out.with_name(out.name + ".summary.json")
    side.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out, side


__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "Prepared",
    "construct",
    "prepare",
    "read_csv",
    "run_trial",
    "simulate",
    "summarize",
    "to_csv",
    "within_bounds",
    "write_outputs",
]
