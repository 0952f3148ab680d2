"""Observables, Birkhoff traces and finite-horizon irregularity evidence.

Nothing computed here proves that a Birkhoff average converges or diverges.
A :class:`Certificate` is finite evidence of divergence; its absence means only
that no evidence was found within the horizon.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .symbolic import ShiftSpace, SymbolicPoint, as_word, materialize_prefix, window_codes

__all__ = [
    "LocallyConstant",
    "Coboundary",
    "Trig",
    "BirkhoffTrace",
    "Certificate",
    "Witness",
    "locally_constant",
    "from_function",
    "constant",
    "indicator_symbol",
    "indicator_equal_pair",
    "coboundary",
    "trig",
    "observable_from_dict",
    "values_along",
    "birkhoff_averages",
    "checkpoint_plan",
    "irregularity_certificate",
    "truly_observable_witness",
]


@dataclass(frozen=True)
class LocallyConstant:
    """A function of the first ``range`` symbols, stored densely by word code.

    Words absent from the table hold NaN; evaluating on one is an error.
    """

    k: int
    range: int
    values: np.ndarray = field(compare=False)
    name: str = "phi"

    def __call__(self, w) -> float:
        w = as_word(w)[: self.range]
        code = 0
        for s in w:
            code = code * self.k + int(s)
        return float(self.values[code])

    @property
    def bounds(self) -> tuple[float, float]:
        v = self.values[~np.isnan(self.values)]
        return float(v.min()), float(v.max())

    def affine(self, a: float, b: float, name: str | None = None) -> "LocallyConstant":
        return LocallyConstant(self.k, self.range, a * self.values + b, name or self.name)

    def scaled(self, s: float) -> "LocallyConstant":
        return self.affine(s, 0.0)

    def extend_range(self, r: int) -> "LocallyConstant":
        """Same function viewed as depending on ``r >= range`` symbols."""
        if r < self.range:
            raise ValueError("cannot shrink the range of an observable")
        vals = np.repeat(self.values, self.k ** (r - self.range))
        return LocallyConstant(self.k, r, vals, self.name)

    def __add__(self, other: "LocallyConstant") -> "LocallyConstant":
        r = max(self.range, other.range)
        a, b = self.extend_range(r), other.extend_range(r)
        return LocallyConstant(self.k, r, a.values + b.values, f"{self.name}+{other.name}")


@dataclass(frozen=True)
class Coboundary(LocallyConstant):
    """``c + h - h o shift``; averages telescope to ``c`` at rate ``2 max|h| / n``."""

    h: LocallyConstant | None = None
    c: float = 0.0


@dataclass(frozen=True)
class Trig:
    """``sin`` or ``cos`` of ``2 pi m x`` on the circle, read through binary digits."""

    kind: str
    frequency: int
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise ValueError("kind must be 'sin' or 'cos'")
        if self.frequency < 1:
            raise ValueError("frequency must be positive")
        if not self.name:
            object.__setattr__(self, "name", f"{self.kind}{self.frequency}")

    @property
    def bounds(self) -> tuple[float, float]:
        return -1.0, 1.0

    @property
    def k(self) -> int:
        return 2


def _code(w, k: int) -> int:
    code = 0
    for s in w:
        code = code * k + int(s)
    return code


def locally_constant(k: int, r: int, table: dict, name: str = "phi") -> LocallyConstant:
    vals = np.full(k**r, np.nan)
    for w, v in table.items():
        w = as_word(w)
        if w.size != r:
            raise ValueError(f"table word {w.tolist()} has length {w.size}, expected {r}")
        if w.size and int(w.max()) >= k:
            raise ValueError("table word uses a symbol outside the alphabet")
        vals[_code(w, k)] = float(v)
    return LocallyConstant(k, r, vals, name)


def from_function(k: int, r: int, f, name: str = "phi") -> LocallyConstant:
    vals = np.array([float(f(w)) for w in itertools.product(range(k), repeat=r)])
    return LocallyConstant(k, r, vals, name)


def constant(k: int, c: float, name: str = "const") -> LocallyConstant:
    return LocallyConstant(k, 1, np.full(k, float(c)), name)


def indicator_symbol(k: int, symbol: int, name: str | None = None) -> LocallyConstant:
    return from_function(k, 1, lambda w: w[0] == symbol, name or f"ind[x0={symbol}]")


def indicator_equal_pair(k: int, name: str = "ind[x0=x1]") -> LocallyConstant:
    return from_function(k, 2, lambda w: w[0] == w[1], name)


def coboundary(h: LocallyConstant, c: float = 0.0, name: str = "cob") -> Coboundary:
    k, r = h.k, h.range
    vals = np.empty(k ** (r + 1))
    for i, w in enumerate(itertools.product(range(k), repeat=r + 1)):
        vals[i] = c + h(w[:r]) - h(w[1:])
    return Coboundary(k, r + 1, vals, name, h=h, c=float(c))


def trig(kind: str, frequency: int = 1) -> Trig:
    return Trig(kind, int(frequency))


def observable_from_dict(d: dict, k: int | None = None, name: str | None = None):
    kind = d.get("type")
    name = d.get("id", name)
    if kind == "trig":
        return Trig(d["kind"], int(d["frequency"]), name or "")
    if kind == "locally_constant":
        r = int(d["range"])
        table = d["table"]
        if k is None:
            k = d.get("k") or max(2, 1 + max(int(c) for w in table for c in w))
        return locally_constant(int(k), r, table, name or "phi")
    if kind == "constant":
        return constant(int(k or d.get("k", 2)), float(d["value"]), name or "const")
    raise ValueError(f"unknown observable type {kind!r}")


# ---------------------------------------------------------------------------
# evaluation along points


def _binary_positions(bits: np.ndarray, n: int) -> np.ndarray:
    """``f^i(x)`` for the doubling map from the 64 binary digits after position ``i``."""
    need = n + 64
    if bits.size < need:
        raise ValueError("not enough binary digits materialized")
    acc = np.zeros(n, dtype=np.uint64)
    for t in range(64):
        acc |= bits[t : t + n].astype(np.uint64) << np.uint64(63 - t)
    return acc.astype(np.float64) * 2.0**-64


def values_along(x, phi, n: int) -> np.ndarray:
    """``phi(f^i x)`` for ``i < n``."""
    from .circle import CirclePoint

    if isinstance(x, CirclePoint):
        return x.trig_values(phi, n)
    if isinstance(phi, Trig):
        if x.space.k != 2:
            raise ValueError("trigonometric observables need a binary point")
        pos = _binary_positions(materialize_prefix(x, n + 64), n)
        f = np.sin if phi.kind == "sin" else np.cos
        return f(2 * np.pi * ((phi.frequency * pos) % 1.0))
    w = materialize_prefix(x, n + phi.range - 1)
    vals = phi.values[window_codes(w, phi.range, phi.k)]
    if np.isnan(vals).any():
        raise ValueError("observable undefined on a word visited by the orbit")
    return vals


@dataclass
class BirkhoffTrace:
    """Running averages ``A_n`` at increasing checkpoints for each observable.

    ``window_sums[name][j]`` is the exact-rounded sum of ``phi(f^i x)`` over
    ``checkpoints[j-1] <= i < checkpoints[j]``.
    """

    checkpoints: list[int]
    averages: dict[str, list[float]]
    window_sums: dict[str, list[float]]

    def window_averages(self, name: str) -> list[float]:
        prev = 0
        out = []
        for c, s in zip(self.checkpoints, self.window_sums[name]):
            out.append(s / (c - prev))
            prev = c
        return out

    def rows(self):
        for name, avgs in self.averages.items():
            for c, a in zip(self.checkpoints, avgs):
                yield c, name, a


def _window_sums(x, phi, checkpoints: Sequence[int]) -> list[float]:
    n = checkpoints[-1]
    if isinstance(phi, LocallyConstant) and isinstance(x, SymbolicPoint):
        w = materialize_prefix(x, n + phi.range - 1)
        codes = window_codes(w, phi.range, phi.k)
        table = phi.values
        out = []
        prev = 0
        for c in checkpoints:
            counts = np.bincount(codes[prev:c], minlength=table.size)
            used = counts > 0
            if np.isnan(table[used]).any():
                raise ValueError("observable undefined on a word visited by the orbit")
            out.append(math.fsum(counts[used] * table[used]))
            prev = c
        return out
    vals = values_along(x, phi, n)
    out = []
    prev = 0
    for c in checkpoints:
        out.append(math.fsum(vals[prev:c]))
        prev = c
    return out


def birkhoff_averages(x, phis, checkpoints: Sequence[int]) -> BirkhoffTrace:
    cps = [int(c) for c in checkpoints]
    if not cps or cps[0] < 1 or any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be positive and strictly increasing")
    if not isinstance(phis, (list, tuple)):
        phis = [phis]
    averages, sums = {}, {}
    for phi in phis:
        ws = _window_sums(x, phi, cps)
        running = list(itertools.accumulate(ws, lambda a, b: math.fsum((a, b))))
        averages[phi.name] = [s / c for s, c in zip(running, cps)]
        sums[phi.name] = ws
    return BirkhoffTrace(cps, averages, sums)


def checkpoint_plan(spec, horizon: int, plan=None) -> list[int]:
    """Checkpoint indices from ``"geometric:<ratio>"``, ``"blocks"`` or an explicit list."""
    if spec is None:
        spec = "blocks" if plan is not None else "geometric:1.5"
    if isinstance(spec, str):
        if spec == "blocks":
            if plan is None:
                raise ValueError("block checkpoints need a glue plan")
            return plan.block_ends(horizon)
        if spec.startswith("geometric:"):
            ratio = float(spec.split(":", 1)[1])
            if ratio <= 1:
                raise ValueError("geometric ratio must exceed 1")
            out, j = [], 0
            while True:
                c = math.ceil(ratio**j)
                if c > horizon:
                    break
                if not out or c > out[-1]:
                    out.append(c)
                j += 1
            return out
        if spec.startswith("linear:"):
            step = int(spec.split(":", 1)[1])
            return list(range(step, horizon + 1, step))
        raise ValueError(f"unknown checkpoint plan {spec!r}")
    return [int(c) for c in spec if int(c) <= horizon]


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class Certificate:
    """Two checkpoint subsequences whose averages settle at values ``gap`` apart.

    With the ``window`` estimator the clustered values are averages over the
    windows between consecutive checkpoints; ``max_window_share`` bounds the
    share ``1 - n_{j-1}/n_j`` of the latest window, so a window gap forces the
    running averages to oscillate by at least ``(1 - history) * gap``.
    """

    observable: str
    estimator: str
    indices_a: tuple[int, ...]
    values_a: tuple[float, ...]
    alpha: float
    oscillation_a: float
    indices_b: tuple[int, ...]
    values_b: tuple[float, ...]
    beta: float
    oscillation_b: float
    tol: float
    windows_a: tuple[tuple[int, int], ...] = ()
    windows_b: tuple[tuple[int, int], ...] = ()

    @property
    def gap(self) -> float:
        return abs(self.alpha - self.beta)

    def to_dict(self) -> dict:
        return {
            "observable": self.observable,
            "estimator": self.estimator,
            "indices_a": list(self.indices_a),
            "alpha": self.alpha,
            "oscillation_a": self.oscillation_a,
            "indices_b": list(self.indices_b),
            "beta": self.beta,
            "oscillation_b": self.oscillation_b,
            "gap": self.gap,
            "tol": self.tol,
        }


def _two_means(values: Sequence[float]) -> list[int]:
    """Exact 1-D 2-means labels (0 = low cluster)."""
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    v = [values[i] for i in order]
    best, split = math.inf, 1
    for s in range(1, len(v)):
        lo, hi = v[:s], v[s:]
        ml, mh = sum(lo) / len(lo), sum(hi) / len(hi)
        cost = sum((a - ml) ** 2 for a in lo) + sum((a - mh) ** 2 for a in hi)
        if cost < best - 1e-15:
            best, split = cost, s
    labels = [0] * len(values)
    for rank, i in enumerate(order):
        labels[i] = 0 if rank < split else 1
    return labels


def _settled_tail(members: list[int], values: Sequence[float], tol: float) -> list[int]:
    """Longest run of latest members whose values span at most ``tol``."""
    tail: list[int] = []
    lo, hi = math.inf, -math.inf
    for i in reversed(members):
        lo2, hi2 = min(lo, values[i]), max(hi, values[i])
        if hi2 - lo2 > tol:
            break
        lo, hi = lo2, hi2
        tail.append(i)
    return sorted(tail)


def irregularity_certificate(
    x,
    phi,
    checkpoints=None,
    tol: float = 0.01,
    horizon: int | None = None,
    estimator: str = "window",
    labels: Sequence[int] | None = None,
    min_run: int = 3,
) -> Certificate | None:
    """Search the trace of ``phi`` along ``x`` for two separated settled clusters.

    When ``x`` is generated by a glue plan and no labels are given, checkpoints
    default to block ends and are grouped by the block's target. Otherwise the
    values are split by 1-D 2-means. Each group contributes its latest run of
    at least ``min_run`` values spanning no more than ``tol``; the pair of groups
    with the largest separation wins, provided it is at least ``2 * tol``.
    """
    plan = getattr(x, "generator", None)
    if estimator not in ("window", "running"):
        raise ValueError("estimator must be 'window' or 'running'")
    if horizon is None:
        horizon = checkpoints[-1] if isinstance(checkpoints, (list, tuple)) and checkpoints else None
        if horizon is None:
            raise ValueError("a horizon is needed to expand the checkpoint plan")
    cps = checkpoint_plan(checkpoints, horizon, plan if hasattr(plan, "block_ends") else None)
    if len(cps) < 2 * min_run:
        return None
    if labels is None and checkpoints in (None, "blocks") and hasattr(plan, "block_labels"):
        labels = plan.block_labels(len(cps))
    trace = birkhoff_averages(x, [phi], cps)
    if estimator == "window":
        values = trace.window_averages(phi.name)
    else:
        values = trace.averages[phi.name]
    if labels is None:
        labels = _two_means(values)
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels[: len(cps)]):
        groups.setdefault(int(lab), []).append(i)
    tails = {}
    for lab, members in groups.items():
        t = _settled_tail(members, values, tol)
        if len(t) >= min_run:
            tails[lab] = t
    best = None
    for la, lb in itertools.combinations(sorted(tails), 2):
        ta, tb = tails[la], tails[lb]
        a = math.fsum(values[i] for i in ta) / len(ta)
        b = math.fsum(values[i] for i in tb) / len(tb)
        if abs(a - b) >= 2 * tol and (best is None or abs(a - b) > best[0]):
            best = (abs(a - b), ta, tb, a, b)
    if best is None:
        return None
    _, ta, tb, a, b = best

    def win(i):
        return (cps[i - 1] if i else 0, cps[i])

    return Certificate(
        observable=phi.name,
        estimator=estimator,
        indices_a=tuple(cps[i] for i in ta),
        values_a=tuple(values[i] for i in ta),
        alpha=a,
        oscillation_a=max(values[i] for i in ta) - min(values[i] for i in ta),
        indices_b=tuple(cps[i] for i in tb),
        values_b=tuple(values[i] for i in tb),
        beta=b,
        oscillation_b=max(values[i] for i in tb) - min(values[i] for i in tb),
        tol=tol,
        windows_a=tuple(win(i) for i in ta),
        windows_b=tuple(win(i) for i in tb),
    )


class Witness(NamedTuple):
    mu1: object
    mu2: object
    integral1: float
    integral2: float

    @property
    def gap(self) -> float:
        return abs(self.integral1 - self.integral2)


def truly_observable_witness(space: ShiftSpace, phi, pool) -> Witness | None:
    """Pair of pool measures separating ``phi`` by more than 1e-9, or ``None``.

    A separating pair shows ``phi`` has irregular points on systems with
    specification; ``None`` is inconclusive beyond the given pool.
    """
    from .measures import integrate

    pool = list(pool)
    if not pool:
        raise ValueError("pool must be nonempty")
    vals = [integrate(mu, phi) for mu in pool]
    i = int(np.argmin(vals))
    j = int(np.argmax(vals))
    if vals[j] - vals[i] <= 1e-9:
        return None
    return Witness(pool[i], pool[j], vals[i], vals[j])
