"""Command-line front end: ``construct``, ``certify``, ``simulate`` and ``bounds``.

Exit codes: 0 success or certified, 1 certification failed, 2 usage or IO error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bits import BitMatrix, NoiseBudget
from .bounds import GuardError, gt_bounds, linear_bounds, render_table
from .certifier import CertResult, certify_noiseless, certify_noisy
from .fields import FieldMatrix
from .gt_scheme import GtScheme, save_scheme, scheme_row_budget
from .linear import LinearScheme, certify_linear
from .simulate import ExperimentConfig, construct, prepare, simulate, summarize, to_csv, write_outputs

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

CONFIG_KEYS = (
    "model", "n", "D", "delta", "b", "s", "t", "e0", "e1", "q", "seed",
    "trials", "noise", "out", "workers", "effort", "samples", "allow_uncertified", "d_values",
)


class UsageError(Exception):
    pass


def _d_values(text: str) -> list[int] | None:
    if text == "all":
        return None
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers or 'all', got {text!r}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config; explicit flags override its fields")
    p.add_argument("--model", choices=("gt", "gv", "rs", "vandermonde"))
    p.add_argument("--n", type=int)
    p.add_argument("--D", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--s", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--e0", type=int)
    p.add_argument("--e1", type=int)
    p.add_argument("--q", type=int, help="prime field size; 0 for the reals")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsity-est", description="Sparsity estimation designs and experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a measurement matrix and write it with a JSON sidecar")
    _common(p)

    p = sub.add_parser("certify", help="check a matrix file for the weight-ratio collision condition")
    p.add_argument("matrix", help="matrix text file (group testing 'm n' or field 'm n q' header)")
    p.add_argument("--D", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--e0", type=int, default=None)
    p.add_argument("--e1", type=int, default=None)
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="seeded Monte-Carlo sweep; writes CSV and a JSON summary")
    _common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--noise", choices=("none", "random", "adversarial"))
    p.add_argument("--d-values", dest="d_values", type=_d_values, help="comma-separated d values, or 'all'")
    p.add_argument("--workers", type=int)
    p.add_argument("--effort", type=int, help="noise patterns tried exhaustively before the exact adversary")
    p.add_argument("--samples", type=int, help="sampled supports used to accept a group-testing design")
    p.add_argument("--allow-uncertified", dest="allow_uncertified", action="store_true", default=None)

    p = sub.add_parser("bounds", help="print lower/upper measurement-count figures per model")
    _common(p)
    p.add_argument("--json", action="store_true", help="emit bound reports as JSON instead of a table")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    try:
        return ExperimentConfig.from_mapping(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))


def _write_linear(scheme: LinearScheme, path: Path) -> None:
    path.write_text(scheme.matrix.to_text(), encoding="utf-8")
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(scheme.sidecar(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_construct(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    try:
        scheme = construct(cfg)
    except (ValueError, RuntimeError) as exc:
        raise UsageError(str(exc))
    out = Path(cfg.out or f"{cfg.model}_n{cfg.n}_D{cfg.D}.txt")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(scheme, GtScheme):
            save_scheme(scheme, out)
        else:
            _write_linear(scheme, out)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}")
    print(f"wrote {out} ({scheme.m} x {scheme.matrix.n})")
    print(f"m = {scheme.m}")
    try:
        if isinstance(scheme, GtScheme):
            rep = gt_bounds(cfg.n, cfg.D, cfg.delta, cfg.e0 + cfg.e1)
            assert scheme.m == scheme_row_budget(scheme.params)
        else:
            rep = linear_bounds(cfg.n, cfg.D, cfg.delta, 0 if cfg.model == "vandermonde" else cfg.q)
        print(f"bounds: lower {rep.lower:.6g}, upper {rep.upper:.6g}, constructive {rep.constructive}")
    except GuardError as exc:
        print(f"bounds: {exc}")
    return EXIT_OK


def _read_matrix(path: str) -> BitMatrix | FieldMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}")
    head = text.split("\n", 1)[0].split()
    try:
        if len(head) == 3:
            return FieldMatrix.from_text(text)
        return BitMatrix.from_text(text)
    except ValueError as exc:
        raise UsageError(f"cannot parse {path}: {exc}")


def _sidecar(path: str) -> dict:
    side = Path(path).with_name(Path(path).name + ".json")
    if side.exists():
        try:
            return json.loads(side.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return {}
    return {}


def cmd_certify(args: argparse.Namespace) -> int:
    M = _read_matrix(args.matrix)
    meta = _sidecar(args.matrix)
    D = args.D if args.D is not None else meta.get("D")
    delta = args.delta if args.delta is not None else meta.get("delta")
    if delta is None and meta.get("construction"):
        delta = 1.0  # exact-recovery constructions: any two weights must be told apart
    if D is None or delta is None:
        raise UsageError("--D and --delta are required (no sidecar supplies them)")
    e0 = args.e0 if args.e0 is not None else 0
    e1 = args.e1 if args.e1 is not None else 0
    try:
        if isinstance(M, FieldMatrix):
            res: CertResult = certify_linear(M, D, delta)
        elif e0 or e1:
            res = certify_noisy(M, D, delta, NoiseBudget(e0, e1), args.mode, samples=args.samples, seed=args.seed)
        else:
            res = certify_noiseless(M, D, delta, args.mode, samples=args.samples, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    text = json.dumps(res.to_json(), sort_keys=True)
    print(text)
    if args.out:
        try:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc}")
    if not res.passed:
        v1, v2 = res.counterexample
        print(f"counterexample: {list(v1.indices)} and {list(v2.indices)} give the same output", file=sys.stderr)
    return EXIT_OK if res.passed else EXIT_FAILED


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    try:
        prepared = prepare(cfg)
    except RuntimeError as exc:
        print(f"refusing to simulate: {exc}; pass --allow-uncertified to override", file=sys.stderr)
        return EXIT_FAILED
    except ValueError as exc:
        raise UsageError(str(exc))
    if not prepared.certified and not cfg.allow_uncertified:
        print(f"refusing to simulate an uncertified scheme ({prepared.note})", file=sys.stderr)
        return EXIT_FAILED
    rows = simulate(cfg, prepared.scheme)
    summary = summarize(rows, cfg, prepared)
    if cfg.out:
        try:
            write_outputs(rows, summary, cfg.out)
        except OSError as exc:
            raise UsageError(f"cannot write {cfg.out}: {exc}")
    else:
        sys.stdout.write(to_csv(rows))
    print(json.dumps({k: summary[k] for k in ("m", "rows", "violations", "min_ratio", "max_ratio", "mean_ratio")},
                     sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    E = cfg.e0 + cfg.e1
    if getattr(args, "json", False):
        reports = {}
        for name, fn in (
            ("gt", lambda: gt_bounds(cfg.n, cfg.D, cfg.delta, E)),
            ("linear_fq", lambda: linear_bounds(cfg.n, cfg.D, cfg.delta, cfg.q)),
            ("linear_reals", lambda: linear_bounds(cfg.n, cfg.D, cfg.delta, 0)),
        ):
            try:
                reports[name] = fn().to_json()
            except ValueError as exc:
                reports[name] = {"error": str(exc)}
        print(json.dumps(reports, indent=2, sort_keys=True))
    else:
        sys.stdout.write(render_table(cfg.n, cfg.D, cfg.delta, cfg.q, E))
    return EXIT_OK


COMMANDS = {"construct": cmd_construct, "certify": cmd_certify, "simulate": cmd_simulate, "bounds": cmd_bounds}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
