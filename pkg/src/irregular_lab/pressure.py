"""Topological pressure, equilibrium states, entropy estimates and Bowen roots.

All values are in nats. For a locally constant potential of range ``r`` on
a full shift or SFT the pressure is the log spectral radius of a weighted
transfer matrix on admissible ``max(r-1, 1)``-blocks. Everything else
(proper subsets, beta-shifts) goes through finite-``n`` partition sums over
cylinders.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measures import MarkovChain, block_markov
from .observables import LocallyConstant
from .symbolic import (
    ShiftSpace,
    _beta_step,
    as_word,
    beta_shift,
    count_words,
    enumerate_words,
)

__all__ = [
    "PressureResult",
    "ConvergenceError",
    "transfer_matrix",
    "transfer_pressure",
    "equilibrium_markov",
    "cylinder_pressure_estimate",
    "separated_entropy_estimate",
    "bs_dimension",
    "beta_entropy_estimate",
]

RESIDUAL_TOL = 1e-12
MAX_ITER = 100_000


class ConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PressureResult:
    value: float
    method: str  # transfer_exact | cylinder_estimate | variational_lower
    n: int | None = None
    depth_offset: int = 0
    error_bound: float | None = None
    residual: float | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "n": self.n,
            "depth_offset": self.depth_offset,
            "error_bound": self.error_bound,
            "residual": self.residual,
        }


def _check_potential(space: ShiftSpace, phi: LocallyConstant):
    if not isinstance(phi, LocallyConstant):
        raise TypeError("pressure needs a locally constant potential")
    if phi.k != space.k:
        raise ValueError("potential and space use different alphabets")


def transfer_matrix(space: ShiftSpace, phi: LocallyConstant):
    """Recoded states and the weighted matrix ``B[u, v] = exp(phi(u -> v))``.

    States are admissible words of length ``max(r - 1, 1)``; the edge ``u -> v``
    reads the word ``u + v[-1]`` and carries ``phi`` of its first ``r`` symbols.
    Returns ``(states, B, shift)`` with ``B`` scaled by ``exp(-shift)``.
    """
    _check_potential(space, phi)
    if not space.is_markov:
        raise TypeError("transfer matrices exist only for full shifts and SFTs")
    if space.mixing_gap is None:
        raise ValueError("space is not mixing")
    r = phi.range
    mem = max(r - 1, 1)
    states = list(enumerate_words(space, mem))
    index = {s: i for i, s in enumerate(states)}
    A = space.matrix
    shift = float(np.nanmax(phi.values))
    B = np.zeros((len(states), len(states)))
    for i, u in enumerate(states):
        for s in range(space.k):
            if not A[u[-1], s]:
                continue
            word = u + (s,)
            val = phi(word[:r])
            if math.isnan(val):
                raise ValueError(f"potential undefined on admissible word {word[:r]}")
            B[i, index[word[1:]]] = math.exp(val - shift)
    return states, B, shift


def _perron(B: np.ndarray) -> tuple[float, np.ndarray, float]:
    v = np.ones(B.shape[0])
    rho = 0.0
    for _ in range(MAX_ITER):
        w = B @ v
        rho = float(v @ w / (v @ v))
        res = float(np.abs(w - rho * v).max() / max(np.abs(v).max(), 1e-300))
        if res <= RESIDUAL_TOL * rho:
            return rho, v / v.sum(), res / rho
        v = w / np.abs(w).max()
    raise ConvergenceError("power iteration did not reach the residual tolerance")


def transfer_pressure(space: ShiftSpace, phi: LocallyConstant) -> PressureResult:
    """``ln`` of the spectral radius of the weighted transfer matrix."""
    _, B, shift = transfer_matrix(space, phi)
    rho, _, res = _perron(B)
    return PressureResult(math.log(rho) + shift, "transfer_exact", residual=res)


def equilibrium_markov(space: ShiftSpace, phi: LocallyConstant) -> tuple[MarkovChain, PressureResult]:
    """Equilibrium state of ``phi`` as a (block) Markov chain, with the pressure."""
    states, B, shift = transfer_matrix(space, phi)
    rho, right, res = _perron(B)
    _, left, _ = _perron(B.T)
    Q = B * right[None, :] / (rho * right[:, None])
    pi = left * right
    pi = pi / pi.sum()
    mu = block_markov(space.k, states, Q, pi)
    return mu, PressureResult(math.log(rho) + shift, "transfer_exact", residual=res)


# ---------------------------------------------------------------------------
# partition sums


def _log_partition_all(space: ShiftSpace, phi: LocallyConstant, n: int) -> float:
    """``ln sum exp(S_n phi(w))`` over all admissible ``n``-words (windows inside ``w``)."""
    r = phi.range
    k = space.k
    if space.kind == "beta":
        a = space.kneading
        layer: dict[tuple, float] = {((), ()): 0.0}
        for _ in range(n):
            new: dict[tuple, list] = defaultdict(list)
            for (st, hist), lw in layer.items():
                for s in range(k):
                    t = _beta_step(st, s, a)
                    if t is None:
                        continue
                    h2 = hist + (s,)
                    add = phi(h2[-r:]) if len(h2) >= r else 0.0
                    new[(t, h2[-(r - 1):] if r > 1 else ())].append(lw + add)
            layer = {key: float(np.logaddexp.reduce(v)) for key, v in new.items()}
        return float(np.logaddexp.reduce(list(layer.values())))
    states, B, shift = transfer_matrix(space, phi)
    mem = len(states[0])
    if n < mem:
        raise ValueError("n shorter than the recoding block")
    if r == 1:
        f = np.array([phi(u) - shift for u in states])
    else:
        f = np.zeros(len(states))
    # Z = 1^T B^(n - mem) exp(f), accumulated with explicit log scaling
    v = np.exp(f - f.max())
    logscale = f.max()
    for _ in range(n - mem):
        v = B @ v
        m = v.max()
        v /= m
        logscale += math.log(m)
    return math.log(v.sum()) + logscale + shift * n


def cylinder_pressure_estimate(space: ShiftSpace, E, phi: LocallyConstant, n: int) -> PressureResult:
    """``(1/n) ln sum_{w in E} exp(S_n phi(w))`` for a cover by ``n``-cylinders.

    ``E`` is ``None`` (all admissible words), an iterable of words, or any
    object with ``log_partition_sum(phi)`` and ``n`` (an implicit family).
    """
    _check_potential(space, phi)
    if n < phi.range:
        raise ValueError("n must be at least the range of the potential")
    if E is None:
        logz = _log_partition_all(space, phi, n)
    elif hasattr(E, "log_partition_sum"):
        if E.n != n:
            raise ValueError("family length differs from n")
        logz = E.log_partition_sum(phi)
    else:
        terms = []
        r = phi.range
        for w in E:
            w = as_word(w)
            if w.size != n:
                raise ValueError("every word in E must have length n")
            terms.append(math.fsum(phi(w[i : i + r]) for i in range(n - r + 1)))
        if not terms:
            raise ValueError("E is empty")
        logz = float(np.logaddexp.reduce(terms))
    return PressureResult(logz / n, "cylinder_estimate", n=n)


def separated_entropy_estimate(space: ShiftSpace, n: int, delta: float) -> float:
    """``(1/n) ln`` of a greedy maximal set of ``n``-words pairwise differing in
    at least ``ceil(delta * n)`` positions (lexicographic scan)."""
    if n > 24:
        raise ValueError("n > 24 would enumerate too many words")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    need = max(1, math.ceil(delta * n - 1e-12))
    chosen = np.zeros((0, n), dtype=np.uint8)
    for w in enumerate_words(space, n):
        w = np.asarray(w, dtype=np.uint8)
        if chosen.shape[0] == 0 or ((chosen != w).sum(axis=1) >= need).all():
            chosen = np.vstack([chosen, w])
    return math.log(chosen.shape[0]) / n


def bs_dimension(
    space: ShiftSpace,
    phi: LocallyConstant,
    tol: float = 1e-8,
    E=None,
    n: int | None = None,
) -> float:
    """Root ``s`` of ``P(-s phi) = 0`` by bisection on ``[0, P(0) / min phi]``.

    Uses the transfer pressure when ``E`` is the whole space of a full shift or
    SFT; otherwise the fixed-``n`` cylinder estimate over ``E``.
    """
    _check_potential(space, phi)
    lo_phi = float(np.nanmin(phi.values))
    if lo_phi <= 0:
        raise ValueError("BS-dimension needs a strictly positive potential")

    if E is None and space.is_markov:
        def pressure(s):
            return transfer_pressure(space, phi.scaled(-s)).value
    else:
        if n is None:
            n = E.n if hasattr(E, "n") else 20

        def pressure(s):
            return cylinder_pressure_estimate(space, E, phi.scaled(-s), n).value

    zero = LocallyConstant(phi.k, 1, np.zeros(phi.k))
    if E is None and space.is_markov:
        p0 = transfer_pressure(space, zero).value
    else:
        p0 = cylinder_pressure_estimate(space, E, zero, n).value
    lo, hi = 0.0, p0 / lo_phi
    f_lo, f_hi = pressure(lo), pressure(hi)
    if not f_lo > f_hi or f_lo < -tol or f_hi > tol:
        raise ArithmeticError("pressure is not decreasing across the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pressure(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_entropy_estimate(beta, n_list: Sequence[int], kneading_depth: int | None = None) -> list[dict]:
    """``(1/n) ln #words`` for the beta-shift, its error from ``ln beta`` and ``dim_H``."""
    depth = max(64, max(n_list)) if kneading_depth is None else kneading_depth
    space = beta_shift(beta, depth)
    log_beta = float(np.log(float(space.beta_value)))
    out = []
    for n in n_list:
        est = math.log(count_words(space, n)) / n
        out.append(
            {
                "n": n,
                "estimate": est,
                "error": abs(est - log_beta),
                "dim_H": est / log_beta,
                "log_beta": log_beta,
            }
        )
    return out
