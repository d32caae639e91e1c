"""Exact rational coefficients of the order-R implicit leapfrog scheme.

The interior step carries the correction series ``sum_s gamma_s dt^(2s) A^(2s)``
with ``gamma_s = 4^-s * [x^(2s+1)] tanh(x)``, i.e. 1, -1/12, 1/120, -17/20160, ...

Two independent routes are provided. ``gamma_series`` divides the sinh series
by the cosh series. ``gamma_composition`` sums over compositions (k_1..k_a) of s
the products ``C_{k_1} * prod_{c>=2} 1/(2 k_c)!`` with
``C_k = 1/(2k)! - 1/(2k+1)!``. The compositions must be weighted by the depth
sign (-1)^(a+1); without it the s=2 term is 1/80 instead of 1/120.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

MAX_ORDER = 32


def _check_order(R) -> int:
    if isinstance(R, bool) or not isinstance(R, int):
        raise ValueError(f"R must be an even integer, got {R!r}")
    if R % 2:
        raise ValueError(f"R must be even, got {R}")
    if not 2 <= R <= MAX_ORDER:
        raise ValueError(f"R must lie in [2, {MAX_ORDER}], got {R}")
    return R


def tanh_taylor(nterms: int) -> list[Fraction]:
    """Odd Taylor coefficients t_0, t_1, ... of tanh x = sum t_s x^(2s+1)."""
    # tanh(x)/x = (sinh(x)/x) / cosh(x), both as series in x^2
    num = [Fraction(1, factorial(2 * k + 1)) for k in range(nterms)]
    den = [Fraction(1, factorial(2 * k)) for k in range(nterms)]
    out: list[Fraction] = []
    for s in range(nterms):
        acc = num[s] - sum(out[j] * den[s - j] for j in range(s))
        out.append(acc / den[0])
    return out


def gamma_series(R: int) -> list[Fraction]:
    R = _check_order(R)
    t = tanh_taylor(R // 2)
    return [t[s] / 4**s for s in range(R // 2)]


def compositions(s: int):
    """All compositions of s into positive parts, in lexicographic order."""
    if s == 0:
        yield ()
        return
    for first in range(1, s + 1):
        for rest in compositions(s - first):
            yield (first,) + rest


def c_k(k: int) -> Fraction:
    return Fraction(1, factorial(2 * k)) - Fraction(1, factorial(2 * k + 1))


@lru_cache(maxsize=None)
def composition_sum(s: int, signed: bool = True) -> Fraction:
    """Sum over compositions of s of C_{k1} prod_{c>=2} 1/(2k_c)!, optionally depth-signed."""
    total = Fraction(0)
    for comp in compositions(s):
        term = c_k(comp[0])
        for k in comp[1:]:
            term /= factorial(2 * k)
        if signed and len(comp) % 2 == 0:
            term = -term
        total += term
    return total


def gamma_composition(R: int, signed: bool = True) -> list[Fraction]:
    """gamma_s from the composition formula.

    The signed sum equals ``-4^s gamma_s`` for s >= 1, so the returned values are
    ``-composition_sum(s) / 4^s``. With ``signed=False`` the literal all-positive
    reading is returned (mapped the same way); it disagrees from s=2 on.
    """
    R = _check_order(R)
    return [Fraction(1)] + [-composition_sum(s, signed) / 4**s for s in range(1, R // 2)]


@dataclass(frozen=True)
class SchemeCoefficients:
    """gamma_s for one order R plus the bootstrap scalings.

    Relative to the interior multiplier ``gamma_s dt^(2s)``, the bootstrap step
    uses ``2^-(2s+1)`` for the p-E coupling and the H-row, and ``2^-2s`` for the
    E-row coupling to H.
    """

    R: int
    gamma: tuple[Fraction, ...]
    bootstrap_half_factor: Fraction = Fraction(1, 2)

    @classmethod
    def for_order(cls, R: int) -> "SchemeCoefficients":
        return cls(R=R, gamma=tuple(gamma_series(R)))

    def floats(self) -> list[float]:
        return [float(g) for g in self.gamma]

    def interior_multipliers(self, dt: float) -> list[float]:
        return [float(g) * dt ** (2 * s) for s, g in enumerate(self.gamma)]

    def bootstrap_multipliers(self, dt: float) -> dict[str, list[float]]:
        base = self.interior_multipliers(dt)
        return {
            "p_coupling": [m * 0.5 ** (2 * s + 1) for s, m in enumerate(base)],
            "e_row_h_coupling": [m * 0.5 ** (2 * s) for s, m in enumerate(base)],
            "h_row": [m * 0.5 ** (2 * s + 1) for s, m in enumerate(base)],
        }


def coefficient_table(R: int) -> dict:
    """Serializable table of gamma_s from both routes with bootstrap factors."""
    series = gamma_series(R)
    comp = gamma_composition(R)
    rows = []
    for s, (g, gc) in enumerate(zip(series, comp)):
        rows.append({
            "s": s,
            "gamma": str(g),
            "gamma_decimal": float(g),
            "gamma_composition": str(gc),
            "interior": f"({g}) dt^{2 * s}",
            "bootstrap_p_coupling": str(Fraction(1, 2 ** (2 * s + 1))),
            "bootstrap_e_row_h_coupling": str(Fraction(1, 2 ** (2 * s))),
            "bootstrap_h_row": str(Fraction(1, 2 ** (2 * s + 1))),
        })
    return {"R": R, "routes_agree": series == comp, "rows": rows}


def render_json(table: dict) -> str:
    return json.dumps(table, indent=2)


def parse_json(text: str) -> dict:
    return json.loads(text)


def render_text(table: dict) -> str:
    head = ("s", "gamma_s", "decimal", "boot p-E", "boot E<-H", "boot H")
    body = [
        (str(r["s"]), r["gamma"], f"{r['gamma_decimal']:.16e}", r["bootstrap_p_coupling"],
         r["bootstrap_e_row_h_coupling"], r["bootstrap_h_row"])
        for r in table["rows"]
    ]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    lines = [f"LF_{table['R']} coefficients (gamma_s multiplies dt^(2s))"]
    for row in (head, *body):
        lines.append("  ".join(x.rjust(w) for x, w in zip(row, widths)))
    lines.append("series == composition: " + ("OK" if table["routes_agree"] else "MISMATCH"))
    return "\n".join(lines)
