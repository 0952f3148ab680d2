"""Computable invariant measures with exact cylinder probabilities.

Four model families cover everything the constructions need: periodic-orbit
measures, (block) Markov chains, Bernoulli measures and finite mixtures. All
of them expose ``word_prob`` and ``cylinder_distribution``, which is enough
to integrate locally constant observables exactly and to compare measures in
the truncated weak* metric.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .symbolic import ShiftSpace, as_word, is_admissible, window_codes

__all__ = [
    "PeriodicOrbit",
    "MarkovChain",
    "Bernoulli",
    "Mixture",
    "MeasureModel",
    "CylinderDistribution",
    "periodic_measure",
    "markov_measure",
    "bernoulli_measure",
    "mixture",
    "parry_measure",
    "cylinder_distribution",
    "integrate",
    "entropy_rate",
    "empirical_distribution",
    "weakstar_distance",
    "measure_from_dict",
    "measure_to_dict",
]

STOCH_TOL = 1e-12


def _words(k: int, d: int):
    return itertools.product(range(k), repeat=d)


@dataclass(frozen=True)
class PeriodicOrbit:
    k: int
    cycle: tuple[int, ...]

    def word_prob(self, w) -> float:
        w = tuple(int(s) for s in as_word(w))
        L = len(self.cycle)
        if not w:
            return 1.0
        reps = -(-(len(w) + L) // L) + 1
        ext = self.cycle * reps
        hits = sum(1 for i in range(L) if ext[i : i + len(w)] == w)
        return hits / L


@dataclass(frozen=True)
class MarkovChain:
    """Markov chain on symbols (``memory == 1``) or on admissible blocks.

    For ``memory == m > 1`` the states are the words listed in ``states``
    (each of length ``m``) and ``P`` moves between overlapping blocks; this is
    how equilibrium states of longer-range potentials are represented.
    """

    k: int
    P: np.ndarray = field(compare=False)
    stationary: np.ndarray = field(compare=False)
    memory: int = 1
    states: tuple[tuple[int, ...], ...] | None = None

    def _state_index(self):
        if self.states is None:
            return {(i,): i for i in range(self.k)}
        return {s: i for i, s in enumerate(self.states)}

    def word_prob(self, w) -> float:
        w = tuple(int(s) for s in as_word(w))
        m = self.memory
        if not w:
            return 1.0
        index = self._state_index()
        if len(w) < m:
            return float(
                sum(self.stationary[i] for s, i in index.items() if s[: len(w)] == w)
            )
        i = index.get(w[:m])
        if i is None:
            return 0.0
        p = float(self.stationary[i])
        for t in range(1, len(w) - m + 1):
            j = index.get(w[t : t + m])
            if j is None:
                return 0.0
            p *= float(self.P[i, j])
            i = j
        return p


@dataclass(frozen=True)
class Bernoulli:
    k: int
    weights: tuple[float, ...]

    def word_prob(self, w) -> float:
        p = 1.0
        for s in as_word(w):
            p *= self.weights[int(s)]
        return p


@dataclass(frozen=True)
class Mixture:
    k: int
    components: tuple[tuple[float, "MeasureModel"], ...]

    def word_prob(self, w) -> float:
        return math.fsum(wt * m.word_prob(w) for wt, m in self.components)


MeasureModel = Union[PeriodicOrbit, MarkovChain, Bernoulli, Mixture]


@dataclass(frozen=True)
class CylinderDistribution:
    """Probabilities of all ``depth``-words, stored densely by base-``k`` code.

    ``counts``/``total`` are kept for empirical distributions so that window
    counts can be compared exactly.
    """

    k: int
    depth: int
    probs: np.ndarray = field(compare=False)
    counts: np.ndarray | None = field(default=None, compare=False)
    total: int | None = None

    @property
    def frequencies(self) -> dict[str, float]:
        out = {}
        for code in np.flatnonzero(self.probs):
            out[_code_str(int(code), self.k, self.depth)] = float(self.probs[code])
        return out

    def marginal(self, m: int) -> np.ndarray:
        """Prefix marginal at depth ``m <= depth``."""
        if m > self.depth:
            raise ValueError(f"cannot marginalize depth {self.depth} to {m}")
        return self.probs.reshape(self.k**m, -1).sum(axis=1)


def _code_str(code: int, k: int, d: int) -> str:
    digits = []
    for _ in range(d):
        digits.append(code % k)
        code //= k
    return "".join(str(s) for s in reversed(digits))


# ---------------------------------------------------------------------------
# constructors


def periodic_measure(space: ShiftSpace, cycle) -> PeriodicOrbit:
    cyc = tuple(int(s) for s in as_word(cycle))
    if not cyc:
        raise ValueError("cycle must be nonempty")
    if max(cyc) >= space.k:
        raise ValueError("cycle symbol out of range")
    if not is_admissible(space, cyc * 2):
        raise ValueError(f"cycle {cyc} is not cyclically admissible")
    return PeriodicOrbit(space.k, cyc)


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, str)) and not isinstance(x, bool)


def _stationary_exact(P: list[list[Fraction]]) -> list[Fraction]:
    k = len(P)
    # solve p (P - I) = 0 with sum p = 1 by Gauss-Jordan over the rationals
    M = [[P[j][i] - (1 if i == j else 0) for j in range(k)] for i in range(k)]
    M[-1] = [Fraction(1)] * k
    rhs = [Fraction(0)] * (k - 1) + [Fraction(1)]
    for col in range(k):
        piv = next((r for r in range(col, k) if M[r][col] != 0), None)
        if piv is None:
            raise ValueError("transition matrix is reducible (singular stationary system)")
        M[col], M[piv] = M[piv], M[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        for r in range(k):
            if r != col and M[r][col] != 0:
                f = M[r][col] / M[col][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
                rhs[r] -= f * rhs[col]
    return [rhs[i] / M[i][i] for i in range(k)]


def _irreducible(support: np.ndarray) -> bool:
    k = support.shape[0]
    R = (support > 0).astype(np.int64) + np.eye(k, dtype=np.int64)
    reach = np.linalg.matrix_power(R, k) > 0
    return bool(reach.all())


def markov_measure(space: ShiftSpace, P) -> MarkovChain:
    """First-order Markov measure; stationary vector solved exactly when ``P`` is rational."""
    rows = [list(r) for r in P]
    k = space.k
    if len(rows) != k or any(len(r) != k for r in rows):
        raise ValueError(f"P must be {k}x{k}")
    exact = all(_is_exact(x) for r in rows for x in r)
    if exact:
        Pq = [[Fraction(x) for x in r] for r in rows]
        Pf = np.array([[float(x) for x in r] for r in Pq])
    else:
        Pf = np.array(rows, dtype=float)
    if (Pf < 0).any():
        raise ValueError("negative transition probability")
    if np.abs(Pf.sum(axis=1) - 1).max() > STOCH_TOL:
        raise ValueError("rows of P must sum to 1")
    if space.is_markov:
        allowed = space.matrix > 0
        if (Pf[~allowed] > 0).any():
            raise ValueError("P puts mass on a transition the space forbids")
    if not _irreducible(Pf):
        raise ValueError("P is reducible")
    if exact:
        p = np.array([float(v) for v in _stationary_exact(Pq)])
    else:
        A = Pf.T - np.eye(k)
        A[-1] = 1.0
        b = np.zeros(k)
        b[-1] = 1.0
        p = np.linalg.solve(A, b)
    if np.abs(p @ Pf - p).max() > STOCH_TOL:
        raise ValueError("stationary residual exceeds tolerance")
    return MarkovChain(k, Pf, p)


def block_markov(k: int, states, Q: np.ndarray, pi: np.ndarray) -> MarkovChain:
    states = tuple(tuple(s) for s in states)
    m = len(states[0])
    if m == 1:
        Pf = np.zeros((k, k))
        p = np.zeros(k)
        for a, (sa,) in enumerate(states):
            p[sa] = pi[a]
            for b, (sb,) in enumerate(states):
                Pf[sa, sb] = Q[a, b]
        for s in range(k):
            if p[s] == 0 and Pf[s].sum() == 0:
                Pf[s, s] = 1.0
        return MarkovChain(k, Pf, p)
    return MarkovChain(k, np.asarray(Q, dtype=float), np.asarray(pi, dtype=float), m, states)


def bernoulli_measure(space: ShiftSpace, weights) -> Bernoulli:
    w = tuple(float(Fraction(x)) if _is_exact(x) else float(x) for x in weights)
    if len(w) != space.k or min(w) < 0 or abs(sum(w) - 1) > STOCH_TOL:
        raise ValueError("Bernoulli weights must be a probability vector of length k")
    if space.kind == "sft" and not (space.matrix > 0).all():
        support = [i for i, x in enumerate(w) if x > 0]
        A = space.matrix
        if any(not A[i, j] for i in support for j in support):
            raise ValueError("Bernoulli measure not supported on this SFT")
    return Bernoulli(space.k, w)


def mixture(components) -> Mixture:
    comps = tuple((float(wt), m) for wt, m in components)
    if not comps:
        raise ValueError("mixture needs at least one component")
    if any(wt <= 0 for wt, _ in comps) or abs(math.fsum(wt for wt, _ in comps) - 1) > STOCH_TOL:
        raise ValueError("mixture weights must be positive and sum to 1")
    ks = {m.k for _, m in comps}
    if len(ks) != 1:
        raise ValueError("mixture components live on different alphabets")
    return Mixture(ks.pop(), comps)


def parry_measure(space: ShiftSpace) -> MarkovChain:
    """Measure of maximal entropy of a mixing SFT (Parry's construction)."""
    A = space.matrix.astype(float)
    vals, vecs = np.linalg.eig(A)
    i = int(np.argmax(vals.real))
    lam = vals[i].real
    r = np.abs(vecs[:, i].real)
    lv, lvecs = np.linalg.eig(A.T)
    l = np.abs(lvecs[:, int(np.argmax(lv.real))].real)
    P = A * r[None, :] / (lam * r[:, None])
    p = l * r / (l @ r)
    return MarkovChain(space.k, P, p)


# ---------------------------------------------------------------------------
# cylinder data


def cylinder_distribution(mu: MeasureModel, depth: int) -> CylinderDistribution:
    if isinstance(mu, CylinderDistribution):
        if mu.depth == depth:
            return mu
        return CylinderDistribution(mu.k, depth, mu.marginal(depth))
    k = mu.k
    if isinstance(mu, Bernoulli):
        probs = np.array([1.0])
        w = np.asarray(mu.weights)
        for _ in range(depth):
            probs = np.outer(probs, w).ravel()
    elif isinstance(mu, Mixture):
        probs = np.zeros(k**depth)
        for wt, m in mu.components:
            probs = probs + wt * cylinder_distribution(m, depth).probs
    elif isinstance(mu, PeriodicOrbit):
        L = len(mu.cycle)
        ext = np.asarray(mu.cycle * (-(-(depth + L) // L) + 1), dtype=np.uint8)
        codes = window_codes(ext[: L + depth - 1], depth, k)
        probs = np.bincount(codes, minlength=k**depth) / L
    elif mu.memory == 1:
        probs = np.asarray(mu.stationary, dtype=float)
        for _ in range(depth - 1):
            # extend every word by one symbol using the transition from its last symbol
            probs = (probs.reshape(-1, k)[:, :, None] * mu.P[None, :, :]).ravel()
    else:
        probs = np.array([mu.word_prob(w) for w in _words(k, depth)])
    return CylinderDistribution(k, depth, probs)


def integrate(mu, phi) -> float:
    """Exact integral of an observable against a measure model."""
    from .observables import LocallyConstant, Trig

    if isinstance(mu, Mixture):
        return math.fsum(wt * integrate(m, phi) for wt, m in mu.components)
    if isinstance(phi, LocallyConstant):
        if phi.k != mu.k:
            raise ValueError("observable and measure use different alphabets")
        if isinstance(mu, PeriodicOrbit):
            L = len(mu.cycle)
            ext = np.asarray(mu.cycle * (-(-(phi.range + L) // L) + 1), dtype=np.uint8)
            vals = phi.values[window_codes(ext[: L + phi.range - 1], phi.range, mu.k)]
            return math.fsum(vals) / L
        probs = cylinder_distribution(mu, phi.range).probs
        mask = probs > 0
        if np.isnan(phi.values[mask]).any():
            raise ValueError("observable table misses a word charged by the measure")
        return math.fsum(probs[mask] * phi.values[mask])
    if isinstance(phi, Trig):
        if isinstance(mu, PeriodicOrbit) and mu.k == 2:
            from .circle import cycle_to_rational, trig_value

            L = len(mu.cycle)
            vals = []
            for i in range(L):
                x = cycle_to_rational(mu.cycle[i:] + mu.cycle[:i])
                vals.append(trig_value(x, phi.kind, phi.frequency))
            return math.fsum(vals) / L
        raise ValueError("trigonometric observables integrate only against binary periodic orbits")
    raise TypeError(f"unsupported observable {type(phi).__name__}")


def _xlogx(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=float)
    nz = p > 0
    out[nz] = p[nz] * np.log(p[nz])
    return out


def entropy_rate(mu: MeasureModel) -> float:
    """Metric entropy in nats."""
    if isinstance(mu, PeriodicOrbit):
        return 0.0
    if isinstance(mu, Bernoulli):
        return float(-_xlogx(np.asarray(mu.weights)).sum())
    if isinstance(mu, Mixture):
        # entropy is affine on invariant measures
        return math.fsum(wt * entropy_rate(m) for wt, m in mu.components)
    return float(-(mu.stationary * _xlogx(mu.P).sum(axis=1)).sum())


def empirical_distribution(w, depth: int, k: int | None = None) -> CylinderDistribution:
    """Sliding-window frequencies of the ``len(w) - depth + 1`` windows of ``w``."""
    w = as_word(w)
    if depth < 1:
        raise ValueError("depth must be positive")
    if w.size < depth:
        raise ValueError(f"word of length {w.size} is shorter than depth {depth}")
    if k is None:
        k = max(2, int(w.max()) + 1)
    counts = np.bincount(window_codes(w, depth, k), minlength=k**depth)
    total = w.size - depth + 1
    return CylinderDistribution(k, depth, counts / total, counts, total)


def _distribution_at(x, m: int) -> np.ndarray:
    if isinstance(x, CylinderDistribution):
        return x.marginal(m) if x.depth != m else x.probs
    return cylinder_distribution(x, m).probs


def weakstar_distance(a, b, depth: int = 8) -> float:
    """``sum_m 2**-m * TV_m(a, b)`` over depths 1..``depth``."""
    total = 0.0
    for m in range(1, depth + 1):
        pa, pb = _distribution_at(a, m), _distribution_at(b, m)
        total += 0.5 ** m * 0.5 * float(np.abs(pa - pb).sum())
    return total


def word_weakstar_deviation(w, mu, depth: int = 8) -> float:
    """Weak* distance from the windows of ``w`` (counted at each depth) to ``mu``."""
    w = as_word(w)
    total = 0.0
    for m in range(1, depth + 1):
        emp = empirical_distribution(w, m, mu.k).probs
        total += 0.5 ** m * 0.5 * float(np.abs(emp - cylinder_distribution(mu, m).probs).sum())
    return total


# ---------------------------------------------------------------------------
# JSON


def measure_from_dict(space: ShiftSpace, d: dict) -> MeasureModel:
    kind = d.get("type")
    if kind == "periodic":
        return periodic_measure(space, d["cycle"])
    if kind == "markov":
        return markov_measure(space, d["P"])
    if kind == "bernoulli":
        return bernoulli_measure(space, d["weights"])
    if kind == "parry":
        return parry_measure(space)
    if kind == "mixture":
        return mixture((c["weight"], measure_from_dict(space, c["measure"])) for c in d["components"])
    raise ValueError(f"unknown measure type {kind!r}")


def measure_to_dict(mu: MeasureModel) -> dict:
    if isinstance(mu, PeriodicOrbit):
        return {"type": "periodic", "cycle": "".join(map(str, mu.cycle))}
    if isinstance(mu, Bernoulli):
        return {"type": "bernoulli", "weights": list(mu.weights)}
    if isinstance(mu, Mixture):
        return {
            "type": "mixture",
            "components": [{"weight": wt, "measure": measure_to_dict(m)} for wt, m in mu.components],
        }
    out = {"type": "markov", "P": mu.P.tolist(), "stationary": mu.stationary.tolist()}
    if mu.memory > 1:
        out["memory"] = mu.memory
        out["states"] = ["".join(map(str, s)) for s in mu.states]
    return out
