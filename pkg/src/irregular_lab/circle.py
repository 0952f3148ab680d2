"""The doubling map ``x -> 2x mod 1`` through exact rationals and binary digits.

Iterating a rounded float under doubling loses one bit per step, so orbits
are never computed that way here. Rational points are iterated in integer
arithmetic; general points carry their binary itinerary (a point of the full
2-shift) and ``f^j(x)`` is read off digits ``j, j+1, ...``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .symbolic import SymbolicPoint, full_shift, materialize_prefix, periodic_point

__all__ = [
    "CirclePoint",
    "OrbitData",
    "rational_point",
    "bit_backed",
    "rational_orbit",
    "cycle_to_rational",
    "binary_expansion",
    "trig_value",
    "evaluate_trig_along",
    "trig_integral_periodic",
    "section4_report",
]

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class OrbitData:
    preperiod: tuple[Fraction, ...]
    cycle: tuple[Fraction, ...]

    @property
    def period(self) -> int:
        return len(self.cycle)

    def point(self, j: int) -> Fraction:
        if j < len(self.preperiod):
            return self.preperiod[j]
        return self.cycle[(j - len(self.preperiod)) % len(self.cycle)]


@dataclass(frozen=True)
class CirclePoint:
    """Either an exact rational or a point backed by binary digits.

    For a bit-backed point, ``f^j(x)`` uses digits ``j .. j + guard_bits`` so
    each evaluation has absolute error at most ``2**-guard_bits`` regardless
    of ``j``.
    """

    rational: Fraction | None = None
    bits: SymbolicPoint | None = field(default=None, compare=False)
    guard_bits: int = 128

    def __post_init__(self):
        if (self.rational is None) == (self.bits is None):
            raise ValueError("a circle point is either rational or bit-backed")
        if self.rational is not None and not 0 <= self.rational < 1:
            raise ValueError("rational circle points lie in [0, 1)")
        if self.bits is not None and self.guard_bits < 64:
            raise ValueError("guard_bits must be at least 64")

    def trig_values(self, phi, n: int) -> np.ndarray:
        from .observables import Trig, values_along

        if not isinstance(phi, Trig):
            raise TypeError("circle points carry trigonometric observables only")
        if self.bits is not None:
            materialize_prefix(self.bits, n + self.guard_bits)
            return values_along(self.bits, phi, n)
        orbit = rational_orbit(self.rational.numerator, self.rational.denominator)
        pre = [trig_value(x, phi.kind, phi.frequency) for x in orbit.preperiod]
        cyc = np.array([trig_value(x, phi.kind, phi.frequency) for x in orbit.cycle])
        if n <= len(pre):
            return np.array(pre[:n])
        m = n - len(pre)
        return np.concatenate([np.array(pre), np.tile(cyc, -(-m // cyc.size))[:m]])


def rational_point(p: int, q: int) -> CirclePoint:
    return CirclePoint(rational=Fraction(p, q))


def bit_backed(point: SymbolicPoint, guard_bits: int = 128) -> CirclePoint:
    if point.space.k != 2:
        raise ValueError("binary itineraries live on the full 2-shift")
    return CirclePoint(bits=point, guard_bits=guard_bits)


def rational_orbit(p: int, q: int) -> OrbitData:
    """Exact doubling orbit of ``p/q``, split into preperiod and cycle."""
    if q < 1 or not 0 <= p < q:
        raise ValueError("need 0 <= p < q")
    if math.gcd(p, q) != 1:
        raise ValueError("p/q must be in lowest terms")
    seen: dict[int, int] = {}
    seq = []
    x = p
    while x not in seen:
        seen[x] = len(seq)
        seq.append(x)
        x = (2 * x) % q
    start = seen[x]
    frac = [Fraction(v, q) for v in seq]
    return OrbitData(tuple(frac[:start]), tuple(frac[start:]))


def cycle_to_rational(cycle) -> Fraction:
    """The point whose binary expansion is ``cycle`` repeated forever."""
    L = len(cycle)
    num = 0
    for b in cycle:
        num = 2 * num + int(b)
    return Fraction(num, 2**L - 1) % 1


def binary_expansion(x: Fraction) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Binary digits of ``x`` as (preperiod, cycle); dyadic points end in ``0``."""
    orbit = rational_orbit(x.numerator, x.denominator)
    digit = lambda y: int(2 * y >= 1)  # noqa: E731
    return tuple(map(digit, orbit.preperiod)), tuple(map(digit, orbit.cycle))


def binary_point(x: Fraction) -> SymbolicPoint:
    pre, cyc = binary_expansion(x)
    return periodic_point(full_shift(2), cyc, pre)


def trig_value(x: Fraction, kind: str, m: int) -> float:
    # reduce m*x mod 1 exactly before handing it to floating point
    t = (m * x) % 1
    angle = TWO_PI * (t.numerator / t.denominator)
    return math.sin(angle) if kind == "sin" else math.cos(angle)


def evaluate_trig_along(x: CirclePoint, kind: str, m: int, j: int) -> float:
    if x.rational is not None:
        orbit = rational_orbit(x.rational.numerator, x.rational.denominator)
        return trig_value(orbit.point(j), kind, m)
    g = x.guard_bits
    bits = materialize_prefix(x.bits, j + g)[j:]
    y = Fraction(int("".join(map(str, bits.tolist())), 2), 2**g)
    with mpmath.workprec(g + 64):
        t = (m * y) % 1
        t = mpmath.mpf(t.numerator) / t.denominator
        val = mpmath.sin(2 * mpmath.pi * t) if kind == "sin" else mpmath.cos(2 * mpmath.pi * t)
    return float(val)


def trig_integral_periodic(orbit: OrbitData, kind: str, m: int) -> float:
    """Average of ``kind(2 pi m x)`` over the cycle (integral for the periodic measure)."""
    if not orbit.cycle:
        raise ValueError("orbit has no cycle")
    return math.fsum(trig_value(x, kind, m) for x in orbit.cycle) / len(orbit.cycle)


def section4_report(horizon: int = 10**6, seed: int = 42, max_frequency: int = 8, tol: float = 0.01) -> dict:
    """Witness gaps for sin/cos of frequencies ``1..max_frequency`` and a jointly-irregular point.

    Returns a dict with ``frequencies`` (per-frequency integral gaps),
    ``certificates`` (for ``sin 2 pi x`` and ``cos 2 pi x`` along the constructed
    point), ``trace`` rows and the ``point`` and ``plan`` objects.
    """
    from .measures import periodic_measure
    from .observables import Trig, birkhoff_averages, checkpoint_plan
    from .synthesis import build_jointly_irregular_point

    if horizon < 10**5:
        raise ValueError("horizon must be at least 1e5")
    freqs = []
    fixed = rational_orbit(0, 1)
    for m in range(1, max_frequency + 1):
        orbit = rational_orbit(1, 7 * m)
        row = {"m": m, "period": orbit.period}
        for kind in ("sin", "cos"):
            a = trig_integral_periodic(fixed, kind, m)
            b = trig_integral_periodic(orbit, kind, m)
            row[f"{kind}_delta0"] = a
            row[f"{kind}_mu"] = b
            row[f"{kind}_gap"] = abs(a - b)
        freqs.append(row)

    space = full_shift(2)
    delta0 = periodic_measure(space, "0")
    mu7 = periodic_measure(space, "001")
    sin1, cos1 = Trig("sin", 1), Trig("cos", 1)
    point, plan, certs = build_jointly_irregular_point(
        space, [sin1, cos1], [(delta0, mu7), (delta0, mu7)], seed=seed, horizon=horizon, tol=tol
    )
    circle_point = bit_backed(point)
    cps = checkpoint_plan("geometric:1.25", horizon)
    trace = birkhoff_averages(circle_point, [sin1, cos1], cps)
    return {
        "frequencies": freqs,
        "certificates": {name: (c.to_dict() if c else None) for name, c in certs.items()},
        "expected": {
            "sin": [0.0, math.sqrt(7) / 6],
            "cos": [1.0, -1 / 6],
        },
        "trace": list(trace.rows()),
        "point": circle_point,
        "plan": plan,
    }
