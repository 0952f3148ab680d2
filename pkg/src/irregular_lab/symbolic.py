"""Shift spaces, admissibility, word counting, bridges and lazily built points.

Words are handled in two forms. Short words (kneading digits, bridges,
cycles) are plain tuples of ints; long materialized prefixes are numpy
``uint8`` arrays. Every public function accepts either, plus strings of
decimal digits such as ``"0101"`` for the convenience of tests and JSON.

The metric on one-sided sequences is ``d(x, y) = 2**-min{i : x_i != y_i}``,
so a Bowen ball of radius ``2**-m`` around an orbit segment of length ``n``
is the cylinder of depth ``n + m``. All entropy and pressure numerics in this
package work at cylinder depth and in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np
import sympy

__all__ = [
    "ShiftSpace",
    "SymbolicPoint",
    "BridgeError",
    "PrecisionError",
    "HorizonError",
    "as_word",
    "word_str",
    "make_space",
    "full_shift",
    "sft",
    "golden_sft",
    "beta_shift",
    "beta_kneading",
    "is_admissible",
    "count_words",
    "enumerate_words",
    "bridge",
    "fixed_length_bridge",
    "materialize_prefix",
    "window_codes",
    "periodic_point",
]


class BridgeError(ValueError):
    """No connecting word exists within the allowed gap."""

    def __init__(self, message, min_gap=None):
        super().__init__(message)
        self.min_gap = min_gap


class PrecisionError(ArithmeticError):
    """A greedy floor decision could not be certified at the working precision."""


class HorizonError(IndexError):
    """A finite generator was asked for more symbols than it can produce."""

    def __init__(self, message, available=None):
        super().__init__(message)
        self.available = available


def as_word(w) -> np.ndarray:
    """Coerce a word given as str, sequence or array to a uint8 array."""
    if isinstance(w, np.ndarray):
        return w.astype(np.uint8, copy=False)
    if isinstance(w, str):
        return np.frombuffer(w.encode("ascii"), dtype=np.uint8) - ord("0")
    return np.asarray(list(w), dtype=np.uint8)


def word_str(w) -> str:
    w = as_word(w)
    if w.size and int(w.max()) > 9:
        return ",".join(str(int(s)) for s in w)
    return (w + ord("0")).tobytes().decode("ascii")


def window_codes(w, depth: int, k: int) -> np.ndarray:
    """Base-``k`` codes of all length-``depth`` windows of ``w`` (big-endian)."""
    w = as_word(w)
    n = w.size - depth + 1
    if n <= 0:
        return np.zeros(0, dtype=np.int64)
    codes = np.zeros(n, dtype=np.int64)
    for i in range(depth):
        codes *= k
        codes += w[i : i + n]
    return codes


@dataclass(frozen=True)
class ShiftSpace:
    """One-sided symbolic system: full shift, matrix SFT or beta-shift.

    ``mixing_gap`` is the smallest ``M`` with every entry of ``A**M`` positive
    for a matrix SFT, 0 for the full shift, and ``None`` when the space is not
    mixing (or is a beta-shift, which is bridged by search instead).
    """

    kind: str
    k: int
    transition: tuple[tuple[int, ...], ...] | None = None
    beta: str | None = None
    kneading: tuple[int, ...] | None = None
    mixing_gap: int | None = None
    kneading_terminates: bool = False
    precision_bits: int | None = None
    _beta_value: object = field(default=None, compare=False, repr=False)

    @property
    def depth(self) -> int | None:
        return None if self.kneading is None else len(self.kneading)

    @property
    def matrix(self) -> np.ndarray:
        if self.kind == "full":
            return np.ones((self.k, self.k), dtype=np.int64)
        if self.kind == "sft":
            return np.array(self.transition, dtype=np.int64)
        raise TypeError("beta-shifts have no finite transition matrix")

    @property
    def beta_value(self) -> mpmath.mpf:
        return self._beta_value

    @property
    def is_markov(self) -> bool:
        return self.kind in ("full", "sft")

    def describe(self) -> dict:
        out = {"type": self.kind, "k": self.k, "mixing_gap": self.mixing_gap}
        if self.kind == "sft":
            out["transition"] = [list(r) for r in self.transition]
        if self.kind == "beta":
            out["beta"] = self.beta
            out["kneading"] = list(self.kneading)
            out["kneading_depth"] = len(self.kneading)
            out["kneading_terminates"] = self.kneading_terminates
        return out


def full_shift(k: int = 2) -> ShiftSpace:
    if k < 2:
        raise ValueError(f"alphabet size must be at least 2, got {k}")
    return ShiftSpace("full", k, mixing_gap=0)


def _mixing_gap(A: np.ndarray) -> int | None:
    k = A.shape[0]
    B = (A > 0).astype(np.int64)
    P = B.copy()
    for m in range(1, k * k + 1):
        if (P > 0).all():
            return m
        P = ((P @ B) > 0).astype(np.int64)
    return None


def sft(transition) -> ShiftSpace:
    A = np.asarray(transition, dtype=np.int64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("transition matrix must be square")
    k = A.shape[0]
    if k < 2:
        raise ValueError(f"alphabet size must be at least 2, got {k}")
    if not np.isin(A, (0, 1)).all():
        raise ValueError("transition entries must be 0 or 1")
    if (A.sum(axis=1) == 0).any() or (A.sum(axis=0) == 0).any():
        raise ValueError("transition matrix has an empty row or column (stranded symbol)")
    return ShiftSpace(
        "sft", k, transition=tuple(tuple(int(v) for v in row) for row in A), mixing_gap=_mixing_gap(A)
    )


def golden_sft() -> ShiftSpace:
    """The golden mean shift: no two consecutive 1s."""
    return sft([[1, 1], [1, 0]])


# ---------------------------------------------------------------------------
# beta expansions


def _parse_beta(beta) -> sympy.Expr:
    if isinstance(beta, sympy.Expr):
        expr = beta
    elif isinstance(beta, (int, Fraction)):
        expr = sympy.Rational(beta)
    elif isinstance(beta, float):
        expr = sympy.Rational(repr(beta))
    else:
        s = str(beta).strip()
        if s.lower() in ("golden", "phi"):
            s = "(1+sqrt(5))/2"
        try:
            expr = sympy.Rational(s)
        except (TypeError, ValueError):
            expr = sympy.sympify(s, rational=True)
    if not expr.is_real or not expr.is_algebraic:
        raise ValueError(f"beta must be a real algebraic number, got {beta!r}")
    if expr.is_integer:
        raise ValueError(f"beta must not be an integer, got {beta!r}")
    if not bool(expr > 1):
        raise ValueError(f"beta must exceed 1, got {beta!r}")
    return expr


def _required_bits(digits: int, beta_float: float) -> int:
    return 64 + digits * math.ceil(math.log2(beta_float))


def _beta_kneading(expr: sympy.Expr, digits: int, precision_bits: int) -> tuple[tuple[int, ...], bool]:
    x = sympy.Symbol("x")
    minpoly = sympy.Poly(sympy.minimal_polynomial(expr, x), x)
    with mpmath.workprec(precision_bits):
        b = mpmath.mpf(sympy.N(expr, int(precision_bits * 0.302) + 10))
        guard = mpmath.mpf(2) ** (-(precision_bits // 2))
        # remainder r_n kept both numerically and as an integer polynomial in beta
        r = mpmath.mpf(1)
        rpoly = sympy.Poly(1, x)
        out = []
        for _ in range(digits):
            y = b * r
            m = int(mpmath.floor(y))
            frac = y - m
            if frac < guard or 1 - frac < guard:
                near = m if frac < guard else m + 1
                exact = (sympy.Poly(x, x) * rpoly - near).rem(minpoly)
                if exact.is_zero:
                    out.append(near)
                    out.extend([0] * (digits - len(out)))
                    return tuple(out), True
                raise PrecisionError(
                    f"digit {len(out) + 1} is within 2^-{precision_bits // 2} of an integer; "
                    "increase precision_bits"
                )
            out.append(m)
            r = y - m
            rpoly = sympy.Poly(x, x) * rpoly - m
    return tuple(out), False


def beta_kneading(beta, digits: int, precision_bits: int | None = None) -> tuple[int, ...]:
    """Greedy expansion of 1 in base ``beta``: ``a_n = floor(beta * r_{n-1})``.

    Every floor decision is certified to lie at least ``2**-(precision_bits/2)``
    from an integer. A remainder that vanishes exactly (checked against the
    minimal polynomial of ``beta``) terminates the expansion with zeros.
    """
    expr = _parse_beta(beta)
    need = _required_bits(digits, float(expr))
    if precision_bits is None:
        precision_bits = need
    if precision_bits < need:
        raise PrecisionError(f"precision_bits must be at least {need} for {digits} digits")
    return _beta_kneading(expr, digits, precision_bits)[0]


def _self_comparison_ok(a: Sequence[int]) -> bool:
    a = tuple(a)
    for i in range(1, len(a)):
        if a[i:] > a[: len(a) - i]:
            return False
    return True


def beta_shift(beta, kneading_depth: int = 64, precision_bits: int | None = None) -> ShiftSpace:
    expr = _parse_beta(beta)
    need = _required_bits(kneading_depth, float(expr))
    bits = max(precision_bits or 0, need, 128)
    digits, terminates = _beta_kneading(expr, kneading_depth, bits)
    if not _self_comparison_ok(digits):
        raise ValueError("kneading prefix fails the self-comparison condition")
    k = int(sympy.floor(expr)) + 1
    with mpmath.workprec(bits):
        value = mpmath.mpf(sympy.N(expr, int(bits * 0.302) + 10))
    return ShiftSpace(
        "beta",
        k,
        beta=str(beta),
        kneading=digits,
        mixing_gap=None,
        kneading_terminates=terminates,
        precision_bits=bits,
        _beta_value=value,
    )


def make_space(desc: dict) -> ShiftSpace:
    """Build a space from a JSON-style description."""
    kind = desc.get("type")
    if kind == "full":
        return full_shift(int(desc.get("k", 2)))
    if kind == "sft":
        if "transition" not in desc:
            raise ValueError("sft space requires 'transition'")
        space = sft(desc["transition"])
        if "k" in desc and int(desc["k"]) != space.k:
            raise ValueError("'k' disagrees with the transition matrix size")
        return space
    if kind == "beta":
        if "beta" not in desc:
            raise ValueError("beta space requires 'beta'")
        return beta_shift(
            desc["beta"], int(desc.get("kneading_depth", 64)), desc.get("precision_bits")
        )
    raise ValueError(f"unknown space type {kind!r}")


# ---------------------------------------------------------------------------
# admissibility


def _beta_admissible(a: np.ndarray, w: np.ndarray) -> bool:
    N = a.size
    n = w.size
    if n == 0:
        return True
    chunk = max(1, 2**20 // N)
    padded = np.concatenate([w, np.full(N, 255, dtype=np.uint8)])
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        rows = np.lib.stride_tricks.sliding_window_view(padded[start : stop + N - 1], N)
        valid = rows != 255
        diff = (rows != a) & valid
        has = diff.any(axis=1)
        first = np.argmax(diff, axis=1)
        vals = rows[np.arange(rows.shape[0]), first]
        if (has & (vals > a[first])).any():
            return False
    return True


def is_admissible(space: ShiftSpace, w) -> bool:
    w = as_word(w)
    if w.size and int(w.max()) >= space.k:
        raise ValueError("symbol out of range for this space")
    if w.size <= 1 or space.kind == "full":
        if space.kind == "beta" and w.size == 1:
            return int(w[0]) <= space.kneading[0]
        return True
    if space.kind == "sft":
        A = space.matrix
        return bool(A[w[:-1], w[1:]].all())
    return _beta_admissible(np.asarray(space.kneading, dtype=np.uint8), w)


# ---------------------------------------------------------------------------
# beta-shift automaton: state = offsets of suffixes still equal to the kneading prefix


def _beta_step(state: tuple[int, ...], s: int, a: tuple[int, ...]) -> tuple[int, ...] | None:
    N = len(a)
    nxt = []
    for o in state + (0,):
        if s > a[o]:
            return None
        if s == a[o] and o + 1 < N:
            nxt.append(o + 1)
    return tuple(nxt)


def _beta_counts(a: tuple[int, ...], k: int, n: int) -> int:
    layer = {(): 1}
    for _ in range(n):
        new: dict[tuple[int, ...], int] = {}
        for st, c in layer.items():
            for s in range(k):
                t = _beta_step(st, s, a)
                if t is not None:
                    new[t] = new.get(t, 0) + c
        layer = new
    return sum(layer.values())


def _int_matpow(A: list[list[int]], e: int) -> list[list[int]]:
    k = len(A)
    R = [[int(i == j) for j in range(k)] for i in range(k)]
    B = [row[:] for row in A]
    while e:
        if e & 1:
            R = [[sum(R[i][t] * B[t][j] for t in range(k)) for j in range(k)] for i in range(k)]
        B = [[sum(B[i][t] * B[t][j] for t in range(k)) for j in range(k)] for i in range(k)]
        e >>= 1
    return R


def count_words(space: ShiftSpace, n: int) -> int:
    """Exact number of admissible words of length ``n`` (a Python int)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if space.kind == "full":
        return space.k**n
    if space.kind == "sft":
        P = _int_matpow([list(r) for r in space.transition], n - 1)
        return sum(map(sum, P))
    return _beta_counts(space.kneading, space.k, n)


def enumerate_words(space: ShiftSpace, n: int) -> Iterable[tuple[int, ...]]:
    """Admissible words of length ``n`` in lexicographic order (prefix-tree walk)."""
    k = space.k
    if space.kind == "beta":
        a = space.kneading

        def walk(prefix, st):
            if len(prefix) == n:
                yield tuple(prefix)
                return
            for s in range(k):
                t = _beta_step(st, s, a)
                if t is not None:
                    prefix.append(s)
                    yield from walk(prefix, t)
                    prefix.pop()

        yield from walk([], ())
        return
    A = space.matrix

    def walk_sft(prefix):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for s in range(k):
            if not prefix or A[prefix[-1], s]:
                prefix.append(s)
                yield from walk_sft(prefix)
                prefix.pop()

    if n == 0:
        yield ()
        return
    yield from walk_sft([])


# ---------------------------------------------------------------------------
# specification bridges


def _junction_checker(space: ShiftSpace, u: np.ndarray, v: np.ndarray) -> Callable[[list[int], bool], bool]:
    if space.kind == "full":
        return lambda w, final: True
    if space.kind == "sft":
        A = space.matrix
        last = int(u[-1]) if u.size else None
        first = int(v[0]) if v.size else None

        def check_sft(w, final):
            prev = last if len(w) == 1 else (w[-2] if w else None)
            if w and prev is not None and not A[prev, w[-1]]:
                return False
            if final:
                tail = w[-1] if w else last
                if tail is not None and first is not None and not A[tail, first]:
                    return False
            return True

        return check_sft
    N = space.depth
    left = u[-N:] if u.size else u
    right = v[:N]

    def check_beta(w, final):
        mid = np.asarray(w, dtype=np.uint8)
        word = np.concatenate([left, mid, right]) if final else np.concatenate([left, mid])
        return is_admissible(space, word)

    return check_beta


def _shortest_bridge(space, u, v, limit):
    check = _junction_checker(space, u, v)
    k = space.k
    for L in range(limit + 1):
        w: list[int] = []

        def dfs():
            if len(w) == L:
                return check(w, True)
            for s in range(k):
                w.append(s)
                if check(w, False) and dfs():
                    return True
                w.pop()
            return False

        if dfs():
            return tuple(w)
    return None


def bridge(space: ShiftSpace, u, v, max_gap: int | None = None) -> tuple[int, ...]:
    """Shortest (then lexicographically smallest) ``w`` with ``u + w + v`` admissible."""
    u, v = as_word(u), as_word(v)
    if space.kind == "full":
        return ()
    if max_gap is None:
        max_gap = space.mixing_gap if space.mixing_gap is not None else space.k**2
    if space.kind == "beta":
        max_gap = max(max_gap, space.depth)
    found = _shortest_bridge(space, u, v, max_gap)
    if found is not None:
        return found
    cap = space.k**2 if space.kind == "sft" else space.depth
    wider = _shortest_bridge(space, u, v, cap) if cap > max_gap else None
    if wider is not None:
        raise BridgeError(f"no bridge within {max_gap}; minimum gap is {len(wider)}", len(wider))
    raise BridgeError("no bridge exists: space is not mixing", None)


def fixed_length_bridge(space: ShiftSpace, a: int, b: int, length: int) -> tuple[int, ...]:
    """Lexicographically smallest word of exactly ``length`` joining symbol ``a`` to ``b``."""
    check = _junction_checker(space, as_word([a]), as_word([b]))
    w: list[int] = []

    def dfs():
        if len(w) == length:
            return check(w, True)
        for s in range(space.k):
            w.append(s)
            if check(w, False) and dfs():
                return True
            w.pop()
        return False

    if not dfs():
        raise BridgeError(f"no bridge of length {length} from {a} to {b}")
    return tuple(w)


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class SymbolicPoint:
    """A one-sided sequence: finite prefix followed by a periodic cycle or a generator.

    ``generator`` is any object with ``extend_to(n) -> np.ndarray`` returning at
    least the first ``n`` symbols of the tail (a GluePlan in practice).
    """

    space: ShiftSpace
    prefix: tuple[int, ...] = ()
    cycle: tuple[int, ...] | None = None
    generator: object = field(default=None, compare=False)

    def __post_init__(self):
        if (self.cycle is None) == (self.generator is None):
            raise ValueError("a point needs exactly one of cycle or generator")
        if self.cycle is not None and len(self.cycle) == 0:
            raise ValueError("cycle must be nonempty")

    @property
    def period(self) -> int | None:
        if self.cycle is not None and not self.prefix:
            return len(self.cycle)
        return None


def periodic_point(space: ShiftSpace, cycle, prefix=()) -> SymbolicPoint:
    cyc = tuple(int(s) for s in as_word(cycle))
    pre = tuple(int(s) for s in as_word(prefix))
    if not is_admissible(space, pre + cyc * 2):
        raise ValueError("point is not admissible")
    return SymbolicPoint(space, pre, cycle=cyc)


def materialize_prefix(x: SymbolicPoint, n: int) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be nonnegative")
    pre = np.asarray(x.prefix, dtype=np.uint8)
    if n <= pre.size:
        return pre[:n].copy()
    m = n - pre.size
    if x.cycle is not None:
        cyc = np.asarray(x.cycle, dtype=np.uint8)
        tail = np.tile(cyc, -(-m // cyc.size))[:m]
    else:
        tail = x.generator.extend_to(m)[:m]
    return np.concatenate([pre, tail])
