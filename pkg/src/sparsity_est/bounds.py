"""Closed-form measurement-count bounds for sparsity estimation.

Logs are base 2 unless a field size fixes base ``q``.  Asymptotic ``O`` and
``Omega`` terms are instantiated with constant 1; such figures are labelled
indicative, while exact constructive row counts are reported separately.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .bits import asym_ball_size
from .gt_scheme import GtSchemeParams, scheme_row_budget
from .linear import gv_rows

# N * t for the default blocked scheme expands to 4 ln 2 * D log D log n / log delta
GT_UPPER_CONSTANT = 4 * math.log(2)


class GuardError(ValueError):
    """A bound was evaluated outside the regime where it is stated."""

    def __init__(self, guard: str, detail: str = ""):
        self.guard = guard
        super().__init__(f"guard violated: {guard}" + (f" ({detail})" if detail else ""))


def binary_entropy(x: float) -> float:
    if not 0 <= x <= 1:
        raise ValueError(f"entropy argument must lie in [0, 1], got {x}")
    if x in (0, 1):
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def _xlog2(a: float, x: float) -> float:
    """``a * log2(x)`` with ``0 * log 0 = 0``."""
    return 0.0 if a == 0 else a * math.log2(x)


def gt_lower(n: int, D: int, delta: float) -> float:
    """``(D/delta^2 - 1) (log2(n / (D - delta^2)) - log2 e)``; 0 at ``D = delta^2``."""
    d2 = delta * delta
    if D > n / 2:
        raise GuardError("D <= n/2", f"D={D}, n={n}")
    if math.isclose(D, d2, rel_tol=1e-12):
        return 0.0
    if D < d2:
        raise GuardError("D > delta^2", f"D={D}, delta^2={d2:g}")
    k = D / d2 - 1
    return k * math.log2(n / (D - d2)) - k * math.log2(math.e)


def gt_lower_unbounded(n: int, delta: float) -> float:
    """``n (h(delta^-4) - delta^-2 h(delta^-2))`` for the case ``D = n``."""
    if delta <= 1:
        raise GuardError("delta > 1", f"delta={delta}")
    a = delta**-2
    return n * (binary_entropy(a * a) - a * binary_entropy(a))


def gt_upper(n: int, D: int, delta: float, c: float = GT_UPPER_CONSTANT) -> float:
    """``max(1, c (D log2 D / log2 delta) log2 n)``."""
    if delta <= 1:
        raise GuardError("delta > 1", f"delta={delta}")
    if D < 1 or n < 1:
        raise GuardError("n, D >= 1", f"n={n}, D={D}")
    return max(1.0, c * D * math.log2(D) / math.log2(delta) * math.log2(n))


def gt_noisy_lower(n: int, D: int, delta: float, E: int) -> float:
    """``m0 + E - (E/2) log2 E + (E/2) log2(m0 - E)`` with ``m0 = gt_lower``.

    Only evaluated for ``0 <= E < (D/delta^2) log2 n`` and ``E < m0``.  The
    expression is not monotone in ``E``: it peaks and then falls once ``E``
    approaches ``m0``.
    """
    if E < 0:
        raise GuardError("E >= 0", f"E={E}")
    cap = D / (delta * delta) * math.log2(n)
    if E >= cap:
        raise GuardError("E < (D/delta^2) log2 n", f"E={E}, cap={cap:.6g}")
    m0 = gt_lower(n, D, delta)
    if E == 0:
        return m0
    if m0 - E <= 0:
        raise GuardError("E < gt_lower", f"E={E}, gt_lower={m0:.6g}")
    return m0 + E - _xlog2(E / 2, E) + _xlog2(E / 2, m0 - E)


def sphere_packing_asym(m: int, E: int) -> float:
    """``2^m`` over the smallest asymmetric ball with radii ``(E//2, E//2)``, scanning all centre weights."""
    if not 0 <= E <= m:
        raise GuardError("0 <= E <= m", f"E={E}, m={m}")
    r = E // 2
    smallest = min(asym_ball_size(m, w, r, r) for w in range(m + 1))
    return 2**m / smallest


def _check_small_field(n: int, D: int, delta: float, q: int) -> None:
    if not 1 <= D <= n / 4:
        raise GuardError("1 <= D <= n/4", f"D={D}, n={n}")
    if q < 2:
        raise GuardError("q prime, q < n", f"q={q}")


def _check_lower_regime(n: int, D: int, delta: float) -> None:
    floor_d2 = math.floor(delta * delta + 1e-12)
    if D < 2 * floor_d2 - 4:
        raise GuardError("D >= 2 floor(delta^2) - 4", f"D={D}, delta={delta:g}")
    if (D - 1) // 2 > n / 2:
        raise GuardError("floor((D-1)/2) <= n/2", f"D={D}, n={n}")


def is_big_field(n: int, q: int) -> bool:
    return q == 0 or q >= n


def linear_lower(n: int, D: int, delta: float, q: int) -> float:
    """``D - 1`` over the reals or ``q >= n``; ``(D/2) log_q(n/D)`` otherwise."""
    _check_lower_regime(n, D, delta)
    if is_big_field(n, q):
        return float(D - 1)
    _check_small_field(n, D, delta, q)
    return D / 2 * math.log(n / D, q)


def linear_upper(n: int, D: int, delta: float, q: int) -> float:
    """``2D`` over the reals or ``q >= n``; ``2D log_q(n/D)`` otherwise."""
    if is_big_field(n, q):
        return float(2 * D)
    _check_small_field(n, D, delta, q)
    return 2 * D * math.log(n / D, q)


def linear_code_figure(n: int, D: int, q: int) -> float:
    """``(2D+1) log_q(n/(2D+1)) + (2D+1) log_q(q-1)``, the leading expansion of the random-code count."""
    k = 2 * D + 1
    if q < 2 or k / n > 1 - 1 / q:
        raise GuardError("(2D+1)/n <= 1 - 1/q", f"D={D}, n={n}, q={q}")
    return k * math.log(n / k, q) + (k * math.log(q - 1, q) if q > 2 else 0.0)


@dataclass
class BoundReport:
    model: str
    lower: float | None
    upper: float | None
    n: int
    D: int
    delta: float
    q: int | None = None
    E: int | None = None
    constructive: int | None = None
    extra: dict = field(default_factory=dict)
    indicative: bool = True

    def to_json(self) -> dict:
        return asdict(self)


def gt_bounds(n: int, D: int, delta: float, E: int = 0) -> BoundReport:
    noisy = E > 0
    lower = gt_noisy_lower(n, D, delta, E) if noisy else gt_lower(n, D, delta)
    params = GtSchemeParams.with_defaults(n, D, delta, e0=E - E // 2, e1=E // 2)
    return BoundReport(
        model="gt_noisy" if noisy else "gt_noiseless",
        lower=lower,
        upper=gt_upper(n, D, delta),
        n=n,
        D=D,
        delta=delta,
        E=E,
        constructive=scheme_row_budget(params),
    )


def linear_bounds(n: int, D: int, delta: float, q: int) -> BoundReport:
    """Table-style lower/upper figures; small fields also carry the exact random-code row count."""
    lower = linear_lower(n, D, delta, q)
    upper = linear_upper(n, D, delta, q)
    if is_big_field(n, q):
        return BoundReport("linear_big_field", lower, upper, n, D, delta, q=q, constructive=2 * D, indicative=False)
    return BoundReport(
        "linear_fq",
        lower,
        upper,
        n,
        D,
        delta,
        q=q,
        constructive=gv_rows(n, D, q),
        extra={"code_figure": linear_code_figure(n, D, q)},
    )


def _cell(fn, *args) -> str:
    try:
        v = fn(*args)
    except GuardError as exc:
        return f"n/a [{exc.guard}]"
    except ValueError:
        return "n/a"
    return _fmt(v)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:.4f}"


def render_table(n: int, D: int, delta: float, q: int, E: int = 0) -> str:
    """Text table: one row per measurement model, with a ``D = n`` column and ``D << n`` lower/upper columns."""
    small_q = q if 2 <= q < n else None
    unbounded = _cell(gt_lower_unbounded, n, delta) + " .. " + str(n)
    gt_lo = _cell(gt_noisy_lower, n, D, delta, E) if E else _cell(gt_lower, n, D, delta)
    gt_cons = _cell(lambda: scheme_row_budget(GtSchemeParams.with_defaults(n, D, delta, e0=E - E // 2, e1=E // 2)))
    table = [("Group testing" + (f", E={E}" if E else ""), unbounded, gt_lo, _cell(gt_upper, n, D, delta), gt_cons)]
    if small_q:
        table.append(
            (
                f"Linear over GF({small_q})",
                str(n),
                _cell(linear_lower, n, D, delta, small_q),
                _cell(linear_upper, n, D, delta, small_q),
                _cell(gv_rows, n, D, small_q) + " / " + _cell(linear_code_figure, n, D, small_q),
            )
        )
    big = q if q == 0 or q >= n else 0
    name = "Linear over R" if big == 0 else f"Linear over GF({big})"
    table.append((name, str(n), _cell(linear_lower, n, D, delta, big), _cell(linear_upper, n, D, delta, big), str(2 * D)))
    head = ("Model", "D = n", "Lower", "Upper", "Constructive")
    widths = [max(len(r[i]) for r in [head, *table]) for i in range(len(head))]
    lines = [f"n={n} D={D} delta={delta:g}" + (f" q={q}" if q else "") + (f" E={E}" if E else "")]
    for r in [head, *table]:
        lines.append(" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if r is head:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
