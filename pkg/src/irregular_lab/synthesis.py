"""Points with prescribed empirical-measure behaviour, built by gluing orbit segments.

Every construction is a :class:`GluePlan`: an unbounded sequence of blocks,
each a generic segment for some target measure, joined to the previous block
by a shortest specification bridge. The plan generates blocks lazily and
deterministically, so a point backed by a plan can be materialized to any
horizon and always yields the same symbols for the same seed.

Tolerance bookkeeping is explicit. For block ``j`` ending at position ``T_j``
with segment length ``n_j`` and certified segment deviation ``dev_j``, the
depth-``D`` weak* distance from the prefix empirical measure to the target is
at most ``dev_j + (T_j - n_j) / (T_j - D + 1)``; both terms are stored.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .measures import (
    Bernoulli,
    MarkovChain,
    Mixture,
    PeriodicOrbit,
    cylinder_distribution,
    integrate,
    mixture,
    word_weakstar_deviation,
)
from .observables import irregularity_certificate
from .symbolic import (
    BridgeError,
    HorizonError,
    ShiftSpace,
    SymbolicPoint,
    as_word,
    bridge,
    fixed_length_bridge,
    is_admissible,
    window_codes,
)

__all__ = [
    "BlockSchedule",
    "SegmentRecord",
    "GluePlan",
    "SegmentError",
    "generic_segment",
    "build_irregular_point",
    "build_jointly_irregular_point",
    "build_saturated_point",
    "build_maximal_oscillation_point",
    "separated_irregular_family",
    "SeparatedFamily",
]

WEAKSTAR_DEPTH = 8
MAX_RETRIES = 20


class SegmentError(RuntimeError):
    """No sampled segment met the tolerance within the retry budget."""

    def __init__(self, message, best_deviation=None):
        super().__init__(message)
        self.best_deviation = best_deviation


@dataclass(frozen=True)
class BlockSchedule:
    """Block lengths and per-block tolerances.

    ``growth="default"`` gives ``l_{j+1} = max(2 l_j, j * S_j)``; a number ``c``
    gives ``l_{j+1} = max(2 l_j, c * S_j)``. ``S_j`` is the total of the first
    ``j + 1`` lengths. Tolerances are ``max(tol0 * tol_decay**j, tol_floor)``.
    """

    initial_length: int = 1000
    growth: str | float = "default"
    tol0: float = 0.05
    tol_decay: float = 0.9
    tol_floor: float = 0.005
    horizon_cap: int | None = None
    depth: int = WEAKSTAR_DEPTH

    def __post_init__(self):
        if self.initial_length < 1:
            raise ValueError("initial_length must be positive")
        if self.growth != "default" and float(self.growth) < 1:
            raise ValueError("growth factor below 1 breaks block domination")

    def next_length(self, j: int, lengths: Sequence[int]) -> int:
        if j == 0:
            return self.initial_length
        mult = (j - 1) if self.growth == "default" else float(self.growth)
        return max(2 * lengths[-1], math.ceil(mult * sum(lengths)))

    def lengths(self, count: int) -> list[int]:
        out: list[int] = []
        for j in range(count):
            out.append(self.next_length(j, out))
        return out

    def tol(self, j: int) -> float:
        return max(self.tol0 * self.tol_decay**j, self.tol_floor)

    @classmethod
    def from_dict(cls, d: dict) -> "BlockSchedule":
        allowed = {"initial_length", "growth", "tol0", "tol_decay", "tol_floor", "horizon_cap", "depth"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown schedule fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "initial_length": self.initial_length,
            "growth": self.growth,
            "tol0": self.tol0,
            "tol_decay": self.tol_decay,
            "tol_floor": self.tol_floor,
            "horizon_cap": self.horizon_cap,
            "depth": self.depth,
        }


# ---------------------------------------------------------------------------
# sampling


def _sample_markov(mu: MarkovChain, n: int, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(mu.P, axis=1)
    cum[:, -1] = 1.0
    cum_rows = cum.tolist()
    u = rng.random(n + 1).tolist()
    p0 = np.cumsum(mu.stationary)
    p0[-1] = 1.0
    s = int(np.searchsorted(p0, u[0], side="right"))
    states = [s]
    for t in range(1, n + 1):
        row = cum_rows[s]
        x = u[t]
        s = 0
        while row[s] <= x:
            s += 1
        states.append(s)
    if mu.memory == 1:
        return np.asarray(states[:n], dtype=np.uint8)
    blocks = mu.states
    out = list(blocks[states[0]])
    for st in states[1:]:
        if len(out) >= n:
            break
        out.append(blocks[st][-1])
    return np.asarray(out[:n], dtype=np.uint8)


def _sample(space: ShiftSpace, mu, n: int, rng: np.random.Generator) -> np.ndarray:
    if n <= 0:
        return np.zeros(0, dtype=np.uint8)
    if isinstance(mu, PeriodicOrbit):
        cyc = np.asarray(mu.cycle, dtype=np.uint8)
        return np.tile(cyc, -(-n // cyc.size))[:n]
    if isinstance(mu, Bernoulli):
        return rng.choice(mu.k, size=n, p=np.asarray(mu.weights)).astype(np.uint8)
    if isinstance(mu, MarkovChain):
        return _sample_markov(mu, n, rng)
    if isinstance(mu, Mixture):
        # consecutive sub-segments with lengths proportional to the weights
        sizes = [int(round(wt * n)) for wt, _ in mu.components]
        sizes[-1] = n - sum(sizes[:-1])
        parts: list[np.ndarray] = []
        for size, (_, comp) in zip(sizes, mu.components):
            if size <= 0:
                continue
            seg = _sample(space, comp, size, rng)
            if parts:
                parts.append(np.asarray(bridge(space, parts[-1][-1:], seg[:1]), dtype=np.uint8))
            parts.append(seg)
        return np.concatenate(parts)[:n]
    raise TypeError(f"cannot sample from {type(mu).__name__}")


def _generic_segment(space, mu, n, depth, tol, seed) -> tuple[np.ndarray, float]:
    seeds = seed if isinstance(seed, (list, tuple)) else [seed]
    best = math.inf
    attempts = 1 if isinstance(mu, PeriodicOrbit) else MAX_RETRIES
    for attempt in range(attempts):
        rng = np.random.default_rng([*seeds, attempt])
        w = _sample(space, mu, n, rng)
        if not is_admissible(space, w):
            continue
        dev = word_weakstar_deviation(w, mu, depth)
        if dev <= tol:
            return w, dev
        best = min(best, dev)
    raise SegmentError(
        f"no segment of length {n} within weak* tolerance {tol} after {attempts} tries "
        f"(best {best:.4g})",
        best,
    )


def generic_segment(space: ShiftSpace, mu, n: int, depth: int, tol: float, seed: int) -> np.ndarray:
    """Admissible word of length ``n`` whose windows are ``tol``-close to ``mu`` at ``depth``.

    Sampled from the model with seed ``seed``; up to 20 reseeded attempts.
    """
    if n < depth:
        raise ValueError("segment shorter than the certification depth")
    return _generic_segment(space, mu, n, depth, tol, seed)[0]


# ---------------------------------------------------------------------------
# glue plans


@dataclass(frozen=True)
class SegmentRecord:
    index: int
    label: int
    target: object = field(repr=False)
    start: int  # position of the bridge preceding the segment
    bridge: tuple[int, ...]
    length: int
    deviation: float
    tol: float
    end: int
    overhead: float
    prefix_distance: float

    @property
    def segment_start(self) -> int:
        return self.start + len(self.bridge)


class _Tracker:
    """Cumulative window counts of the generated prefix at depths 1..D."""

    def __init__(self, k: int, depth: int):
        self.k = k
        self.depth = depth
        self.counts = [np.zeros(k**m, dtype=np.int64) for m in range(1, depth + 1)]
        self.tail = np.zeros(0, dtype=np.uint8)
        self.length = 0

    def append(self, piece: np.ndarray):
        if piece.size == 0:
            return
        buf = np.concatenate([self.tail, piece])
        for m in range(1, self.depth + 1):
            codes = window_codes(buf, m, self.k)
            # windows already counted are those lying entirely inside the old tail
            skip = max(0, self.tail.size - m + 1)
            self.counts[m - 1] += np.bincount(codes[skip:], minlength=self.k**m)
        self.tail = buf[-(self.depth - 1) :] if self.depth > 1 else buf[:0]
        self.length += piece.size

    def distance(self, mu) -> float:
        total = 0.0
        for m in range(1, self.depth + 1):
            n_win = self.length - m + 1
            if n_win <= 0:
                total += 0.5**m
                continue
            emp = self.counts[m - 1] / n_win
            total += 0.5**m * 0.5 * float(np.abs(emp - cylinder_distribution(mu, m).probs).sum())
        return total


class GluePlan:
    """Lazily generated concatenation of bridged generic segments.

    ``policy(plan, j)`` returns ``(label, target, length)`` for block ``j`` or
    ``None`` to stop. Symbols are produced on demand by :meth:`extend_to`.
    """

    def __init__(
        self,
        space: ShiftSpace,
        policy: Callable,
        schedule: BlockSchedule,
        seed: int,
        prefix=(),
        theta: Sequence[float] | None = None,
        kind: str = "irregular",
    ):
        self.space = space
        self.policy = policy
        self.schedule = schedule
        self.seed = int(seed)
        self.theta = None if theta is None else tuple(theta)
        self.kind = kind
        self.close_periodic = False
        self.closing_bridge: tuple[int, ...] | None = None
        self.records: list[SegmentRecord] = []
        self._pieces: list[np.ndarray] = []
        self._cache = np.zeros(0, dtype=np.uint8)
        self._length = 0
        self._finished = False
        self.tracker = _Tracker(space.k, schedule.depth)
        pre = as_word(prefix)
        if pre.size:
            if not is_admissible(space, pre):
                raise ValueError("initial prefix is not admissible")
            self._push(pre)
        self.prefix_length = pre.size

    @property
    def length(self) -> int:
        return self._length

    @property
    def bridges(self) -> list[tuple[int, ...]]:
        return [r.bridge for r in self.records]

    def _push(self, piece: np.ndarray):
        self._pieces.append(piece)
        self.tracker.append(piece)
        self._length += piece.size

    def _last_symbols(self, n: int) -> np.ndarray:
        out = []
        need = n
        for piece in reversed(self._pieces):
            out.append(piece[-need:])
            need -= min(need, piece.size)
            if need == 0:
                break
        return np.concatenate(out[::-1]) if out else np.zeros(0, dtype=np.uint8)

    def _next_block(self) -> bool:
        j = len(self.records)
        nxt = self.policy(self, j)
        if nxt is None:
            self._finished = True
            return False
        label, target, n = nxt
        tol = self.schedule.tol(j)
        seg, dev = _generic_segment(self.space, target, n, self.schedule.depth, tol, [self.seed, j])
        start = self._length
        joint = ()
        if self._length:
            tail_len = self.space.depth or 1
            joint = bridge(self.space, self._last_symbols(tail_len), seg[: tail_len])
        if joint:
            self._push(np.asarray(joint, dtype=np.uint8))
        self._push(seg)
        end = self._length
        D = self.schedule.depth
        overhead = (end - n) / (end - D + 1) if end - D + 1 > 0 else 1.0
        self.records.append(
            SegmentRecord(
                index=j,
                label=label,
                target=target,
                start=start,
                bridge=tuple(joint),
                length=n,
                deviation=dev,
                tol=tol,
                end=end,
                overhead=overhead,
                prefix_distance=self.tracker.distance(target),
            )
        )
        return True

    def extend_to(self, n: int) -> np.ndarray:
        cap = self.schedule.horizon_cap
        if cap is not None and n > cap:
            raise HorizonError(f"plan horizon is capped at {cap} symbols", cap)
        while self._length < n:
            if self._finished or not self._next_block():
                raise HorizonError(f"plan stops after {self._length} symbols", self._length)
        if self._cache.size < n:
            self._cache = np.concatenate(self._pieces)
            self._pieces = [self._cache]
        return self._cache[:n]

    def block_ends(self, horizon: int) -> list[int]:
        while (not self.records or self.records[-1].end <= horizon) and not self._finished:
            if self.schedule.horizon_cap is not None and self._length >= self.schedule.horizon_cap:
                break
            if not self._next_block():
                break
        return [r.end for r in self.records if r.end <= horizon]

    def block_labels(self, count: int) -> list[int]:
        return [r.label for r in self.records[:count]]

    def to_dict(self) -> dict:
        from .measures import measure_to_dict

        return {
            "kind": self.kind,
            "seed": self.seed,
            "schedule": self.schedule.to_dict(),
            "prefix_length": self.prefix_length,
            "theta": None if self.theta is None else list(self.theta),
            "close_periodic": self.close_periodic,
            "closing_bridge": None if self.closing_bridge is None else list(self.closing_bridge),
            "segments": [
                {
                    "index": r.index,
                    "label": r.label,
                    "target": measure_to_dict(r.target),
                    "start": r.start,
                    "bridge": "".join(map(str, r.bridge)),
                    "length": r.length,
                    "end": r.end,
                    "deviation": r.deviation,
                    "tol": r.tol,
                    "overhead": r.overhead,
                    "prefix_distance": r.prefix_distance,
                }
                for r in self.records
            ],
        }


def _schedule_policy(targets: Sequence, schedule: BlockSchedule):
    def policy(plan: GluePlan, j: int):
        lengths = [r.length for r in plan.records]
        return j % len(targets), targets[j % len(targets)], schedule.next_length(j, lengths)

    return policy


def _closed_point(space: ShiftSpace, plan: GluePlan, horizon: int) -> SymbolicPoint:
    word = plan.extend_to(horizon).copy()
    tail_len = space.depth or 1
    closing = bridge(space, word[-tail_len:], word[:tail_len])
    cycle = np.concatenate([word, np.asarray(closing, dtype=np.uint8)])
    if not is_admissible(space, np.concatenate([cycle, cycle[: (space.depth or 1) + 1]])):
        raise BridgeError("closing bridge does not produce an admissible loop")
    plan.close_periodic = True
    plan.closing_bridge = tuple(closing)
    return SymbolicPoint(space, (), cycle=tuple(int(s) for s in cycle))


def _distinct(mu1, mu2, depth: int = WEAKSTAR_DEPTH) -> bool:
    for m in range(1, depth + 1):
        if np.abs(cylinder_distribution(mu1, m).probs - cylinder_distribution(mu2, m).probs).max() > 1e-12:
            return True
    return False


def build_irregular_point(
    space: ShiftSpace,
    mu1,
    mu2,
    schedule: BlockSchedule | None = None,
    seed: int = 0,
    prefix=(),
    close_periodic: bool = False,
    horizon: int | None = None,
) -> tuple[SymbolicPoint, GluePlan]:
    """Alternate generic segments of ``mu1`` and ``mu2`` with growing lengths.

    With ``close_periodic`` the plan is cut at ``horizon`` and closed into a
    periodic point by a bridge back to its start.
    """
    if not _distinct(mu1, mu2):
        raise ValueError("target measures agree on all cylinders up to depth 8")
    if space.kind == "sft" and space.mixing_gap is None:
        raise BridgeError("space is not mixing")
    schedule = schedule or BlockSchedule()
    plan = GluePlan(space, _schedule_policy([mu1, mu2], schedule), schedule, seed, prefix)
    if close_periodic:
        if horizon is None:
            raise ValueError("closing a point periodically needs a horizon")
        return _closed_point(space, plan, horizon), plan
    return SymbolicPoint(space, (), generator=plan), plan


def _hyperplane_weights(diff: list[list[float]], seed: int, draws: int = 100) -> tuple[Fraction, ...]:
    """Positive rational weights avoiding every hyperplane ``sum_i diff[j][i] * lam_i = 0``.

    All ``draws`` candidates are verified in exact arithmetic; the one whose
    smallest normalized separation is largest is returned.
    """
    k = len(diff)
    D = [[Fraction(v) for v in row] for row in diff]
    rng = random.Random(seed)
    best, best_score = None, Fraction(0)
    for _ in range(draws):
        lam = [Fraction(rng.randint(1, 999), 1000) for _ in range(k)]
        total = sum(lam)
        seps = [abs(sum(D[j][i] * lam[i] for i in range(k))) / total for j in range(k)]
        if min(seps) > 0 and min(seps) > best_score:
            best, best_score = lam, min(seps)
    if best is None:
        raise ValueError("could not avoid the separating hyperplanes in 100 draws")
    total = sum(best)
    return tuple(l / total for l in best)


def build_jointly_irregular_point(
    space: ShiftSpace,
    observables: Sequence,
    mu_pairs: Sequence[tuple],
    schedule: BlockSchedule | None = None,
    seed: int = 0,
    horizon: int = 10**6,
    tol: float = 0.01,
):
    """One point irregular for every observable at once.

    Pair ``i`` separates observable ``i``. Weighted mixtures of the first and of
    the second measures (weights off every separating hyperplane) become the
    two targets of :func:`build_irregular_point`. Returns the point, its plan
    and a dict of certificates keyed by observable name.
    """
    if len(observables) != len(mu_pairs) or not observables:
        raise ValueError("need one measure pair per observable")
    for phi, (a, b) in zip(observables, mu_pairs):
        if abs(integrate(a, phi) - integrate(b, phi)) <= 1e-12:
            raise ValueError(f"pair does not separate observable {phi.name}")
    diff = [
        [integrate(a, phi) - integrate(b, phi) for a, b in mu_pairs] for phi in observables
    ]
    theta = _hyperplane_weights(diff, seed)
    if len(theta) == 1:
        mu1, mu2 = mu_pairs[0]
    else:
        mu1 = mixture((float(t), a) for t, (a, _) in zip(theta, mu_pairs))
        mu2 = mixture((float(t), b) for t, (_, b) in zip(theta, mu_pairs))
    point, plan = build_irregular_point(space, mu1, mu2, schedule, seed)
    plan.theta = tuple(float(t) for t in theta)
    plan.kind = "jointly"
    certs = {
        phi.name: irregularity_certificate(point, phi, "blocks", tol, horizon) for phi in observables
    }
    return point, plan, certs


def build_maximal_oscillation_point(
    space: ShiftSpace, net: Sequence, schedule: BlockSchedule | None = None, seed: int = 0
) -> tuple[SymbolicPoint, GluePlan]:
    """Round-robin over ``net`` so every net measure is an empirical limit point."""
    net = list(net)
    if not net:
        raise ValueError("net must be nonempty")
    schedule = schedule or BlockSchedule(growth=1.0)
    plan = GluePlan(space, _schedule_policy(net, schedule), schedule, seed, kind="gmax")
    return SymbolicPoint(space, (), generator=plan), plan


def build_saturated_point(
    space: ShiftSpace,
    K: Sequence,
    schedule: BlockSchedule | None = None,
    seed: int = 0,
    eps0: float = 0.1,
) -> tuple[SymbolicPoint, GluePlan]:
    """Point whose empirical measures sweep the polyline through the vertices ``K``.

    Each block aims at the next vertex and is ``max(L0, eps * T)`` long for the
    current prefix length ``T``, so block-end empirical measures move in steps of
    order ``eps`` along the edges. A vertex counts as reached once the prefix is
    within ``eps / 4 + tol_j`` of it in the weak* metric; at either end of the
    polyline the sweep reverses and ``eps`` halves. A single vertex gives an
    ordinary generic point built with the schedule's growth rule.
    """
    K = list(K)
    if not K:
        raise ValueError("K needs at least one vertex")
    schedule = schedule or BlockSchedule()
    if len(K) == 1:
        plan = GluePlan(space, _schedule_policy(K, schedule), schedule, seed, kind="saturated")
        return SymbolicPoint(space, (), generator=plan), plan
    floor = 2 * schedule.tol_floor
    state = {"pos": 0, "dir": 1, "sweep": 0}

    def policy(plan: GluePlan, j: int):
        eps = max(eps0 / 2 ** state["sweep"], floor)
        if j > 0 and len(K) > 1:
            if plan.records[-1].prefix_distance <= eps / 4 + plan.records[-1].tol:
                nxt = state["pos"] + state["dir"]
                if not 0 <= nxt < len(K):
                    state["dir"] *= -1
                    state["sweep"] += 1
                    nxt = state["pos"] + state["dir"]
                    eps = max(eps0 / 2 ** state["sweep"], floor)
                state["pos"] = nxt
        n = max(schedule.initial_length, math.ceil(eps * plan.length))
        return state["pos"], K[state["pos"]], n

    plan = GluePlan(space, policy, schedule, seed, kind="saturated")
    return SymbolicPoint(space, (), generator=plan), plan


# ---------------------------------------------------------------------------
# separated families


class SeparatedFamily:
    """Words of length ``n`` alternating free blocks with fixed generic glue.

    Free blocks range over every admissible word compatible with the fixed
    symbols around them, so distinct choices give distinct ``n``-words (hence
    ``(n, cylinder)``-separated points). Counts and partition sums factor over
    free blocks and are computed without listing members.
    """

    def __init__(self, space: ShiftSpace, layout: list, n: int):
        self.space = space
        self.layout = layout  # ("fixed", word) or ("free", b, left_symbol, right_word)
        self.n = n
        self._tables = [self._suffix_counts(p) for p in layout if p[0] == "free"]

    @property
    def free_blocks(self) -> list:
        return [p for p in self.layout if p[0] == "free"]

    def _suffix_counts(self, piece):
        _, b, left, right = piece
        k = self.space.k
        A = self.space.matrix
        # tables[t][s]: admissible completions of positions t..b-1 given symbol s at t
        tables = [[0] * k for _ in range(b)]
        for s in range(k):
            tables[b - 1][s] = int(right is None or A[s, right])
        for t in range(b - 2, -1, -1):
            for s in range(k):
                tables[t][s] = sum(tables[t + 1][u] for u in range(k) if A[s, u])
        first = [int(left is None or A[left, s]) for s in range(k)]
        return tables, first

    @property
    def block_counts(self) -> list[int]:
        return [sum(f * c for f, c in zip(first, t[0])) for t, first in self._tables]

    @property
    def cardinality(self) -> int:
        return math.prod(self.block_counts)

    @property
    def rate(self) -> float:
        counts = self.block_counts
        return math.fsum(math.log(c) for c in counts) / self.n

    def _unrank(self, idx: int, rank: int) -> list[int]:
        (tables, first), b = self._tables[idx], self.free_blocks[idx][1]
        A = self.space.matrix
        out = []
        allowed = [s for s in range(self.space.k) if first[s]]
        for t in range(b):
            for s in allowed:
                c = tables[t][s]
                if rank < c:
                    out.append(s)
                    break
                rank -= c
            else:
                raise IndexError("rank out of range")
            allowed = [u for u in range(self.space.k) if A[out[-1], u]]
        return out

    def member(self, choices: Sequence[int]) -> np.ndarray:
        counts = self.block_counts
        if len(choices) != len(counts):
            raise ValueError("one choice per free block")
        parts = []
        i = 0
        for piece in self.layout:
            if piece[0] == "fixed":
                parts.append(np.asarray(piece[1], dtype=np.uint8))
            else:
                if not 0 <= choices[i] < counts[i]:
                    raise IndexError("choice out of range")
                parts.append(np.asarray(self._unrank(i, choices[i]), dtype=np.uint8))
                i += 1
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)

    def random_choices(self, rng: random.Random) -> list[int]:
        return [rng.randrange(c) for c in self.block_counts]

    def log_partition_sum(self, phi) -> float:
        """``ln sum_w exp(S_n phi(w))`` over all members, windows inside the word only."""
        r = phi.range
        k = self.space.k
        A = self.space.matrix
        total = 0.0
        spans = []
        concat: list = []
        for piece in self.layout:
            if piece[0] == "fixed":
                concat.extend(("f", int(s)) for s in piece[1])
            else:
                spans.append((len(concat), piece[1]))
                concat.extend([("v", None)] * piece[1])
        n = len(concat)
        touched = np.zeros(max(n - r + 1, 0), dtype=bool)
        for start, b in spans:
            touched[max(0, start - r + 1) : start + b] = True
        fixed_vals = [s for kind, s in concat]
        for i in range(n - r + 1):
            if not touched[i]:
                total += phi(fixed_vals[i : i + r])
        for start, b in spans:
            lo = max(0, start - r + 1)
            hi = min(n, start + b + r - 1)
            left = [fixed_vals[t] for t in range(lo, start)]
            right = [fixed_vals[t] for t in range(start + b, hi)]
            prev = fixed_vals[start - 1] if start > 0 else None
            nxt = fixed_vals[start + b] if start + b < n else None
            total += self._block_log_sum(phi, b, left, right, prev, nxt, A, k)
        return total

    @staticmethod
    def _block_log_sum(phi, b, left, right, prev, nxt, A, k) -> float:
        r = phi.range
        # dynamic programme over the last r-1 symbols (at least one, for admissibility)
        from collections import defaultdict

        mem = max(r - 1, 1)
        layer: dict[tuple, float] = {tuple(left): 0.0}
        for t in range(b):
            new: dict[tuple, list] = defaultdict(list)
            for hist, logw in layer.items():
                last = hist[-1] if hist else prev
                for s in range(k):
                    if last is not None and not A[last, s]:
                        continue
                    h2 = hist + (s,)
                    add = phi(h2[-r:]) if len(h2) >= r else 0.0
                    new[h2[-mem:] if len(h2) > mem else h2].append(logw + add)
            layer = {h: float(np.logaddexp.reduce(v)) for h, v in new.items()}
        finals = []
        for hist, logw in layer.items():
            if nxt is not None and not A[hist[-1], nxt]:
                continue
            h = list(hist)
            add = 0.0
            for s in right:
                h.append(s)
                if len(h) >= r:
                    add += phi(h[-r:])
            finals.append(logw + add)
        return float(np.logaddexp.reduce(finals))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "free_blocks": len(self.free_blocks),
            "block_counts": [str(c) for c in self.block_counts],
            "cardinality_log": math.fsum(math.log(c) for c in self.block_counts),
            "rate": self.rate,
        }


def separated_irregular_family(
    space: ShiftSpace,
    mu1,
    mu2,
    n: int,
    free_fraction: float,
    block_len: int = 100,
    seed: int = 0,
) -> SeparatedFamily:
    """Family of ``n``-words: free blocks of length ``block_len`` alternating with
    generic glue for ``mu1`` and ``mu2`` (each glue starts with a fixed bridge).
    """
    if not space.is_markov or space.mixing_gap is None:
        raise BridgeError("separated families need a mixing full shift or SFT")
    if block_len < 20:
        raise ValueError("block_len must be at least 20")
    if not 0 <= free_fraction < 1:
        raise ValueError("free_fraction must lie in [0, 1)")
    gap = max(space.mixing_gap - 1, 0)
    m_free = int(free_fraction * n) // block_len
    rng = np.random.default_rng([seed, 7])
    if m_free == 0:
        word = _sample(space, mu1, n, rng)
        return SeparatedFamily(space, [("fixed", tuple(int(s) for s in word))], n)
    rest = n - m_free * block_len - m_free * gap
    if rest < m_free:
        raise ValueError("free_fraction too large to leave room for glue")
    glue = [rest // m_free + (1 if i < rest % m_free else 0) for i in range(m_free)]
    layout = []
    A = space.matrix
    for i in range(m_free):
        mu = mu1 if i % 2 == 0 else mu2
        seg = _sample(space, mu, glue[i], rng)
        left = layout[-1][1][-1] if layout else None
        if gap:
            # fixed bridge into the glue; prefer the entry symbol most symbols can reach
            options = []
            for a in range(space.k):
                try:
                    options.append(fixed_length_bridge(space, a, int(seg[0]), gap))
                except BridgeError:
                    continue
            z = max(options, key=lambda zz: int(A[:, zz[0]].sum()))
            layout.append(("free", block_len, left, z[0]))
            layout.append(("fixed", tuple(z) + tuple(int(s) for s in seg)))
        else:
            layout.append(("free", block_len, left, int(seg[0])))
            layout.append(("fixed", tuple(int(s) for s in seg)))
    return SeparatedFamily(space, layout, n)
