"""Symmetrizability, worst-case state sequences and the Chernoff tail check."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    AvwcFamily,
    RandomEncoderCode,
    StateSequence,
    average_error,
    induced_message_channel,
    max_error,
    state_sequence_channel,
)
from .probability import Channel, _mutual_information_rows, as_rows
from .simplex import phase_one

FEASIBILITY_TOL = 1e-8
WITNESS_TOL = 1e-7
EXHAUSTIVE_LIMIT = 4096


@dataclass(frozen=True)
class Symmetrizability:
    """Outcome of the symmetrizability test; ``witness`` is T: X -> S when feasible."""

    feasible: bool
    witness: Channel | None
    residual: float

    def __bool__(self):
        return self.feasible


def symmetrizer_residual(mains: Sequence, t) -> float:
    """max over x, x', y of |sum_s W_s(y|x) T(s|x') - sum_s W_s(y|x') T(s|x)|."""
    w = np.array([as_rows(m) for m in mains])  # (S, X, Y)
    t = as_rows(t)
    # a[x, x', y] = sum_s W_s(y|x) T(s|x')
    a = np.einsum("sxy,ks->xky", w, t)
    return float(np.abs(a - a.transpose(1, 0, 2)).max())


def symmetrizability_check(mains: Sequence, tol: float = FEASIBILITY_TOL) -> Symmetrizability:
    """Decide whether the main family is X-symmetrizable by linear feasibility."""
    w = np.array([as_rows(m) for m in mains])
    if w.ndim != 3:
        raise ValueError("main channels must share alphabets")
    s, x, y = w.shape
    nvar = x * s
    rows, rhs = [], []
    for a, b in itertools.combinations(range(x), 2):
        for out in range(y):
            r = np.zeros(nvar)
            r[b * s:(b + 1) * s] += w[:, a, out]
            r[a * s:(a + 1) * s] -= w[:, b, out]
            rows.append(r)
            rhs.append(0.0)
    for a in range(x):
        r = np.zeros(nvar)
        r[a * s:(a + 1) * s] = 1.0
        rows.append(r)
        rhs.append(1.0)
    sol = phase_one(np.array(rows), np.array(rhs), tol=tol)
    if sol is None:
        return Symmetrizability(False, None, math.inf)
    t = sol.reshape(x, s)
    t = np.clip(t, 0.0, None)
    t /= t.sum(axis=1, keepdims=True)
    witness = Channel(t)
    return Symmetrizability(True, witness, symmetrizer_residual(w, witness))


# worst-case state sequences -----------------------------------------------

METRICS = ("avg_error", "max_error", "strong_leakage")


def sequence_metric(code: RandomEncoderCode, family: AvwcFamily, seq, metric: str) -> float:
    if metric == "avg_error":
        return average_error(code, state_sequence_channel(family, seq, "main"))
    if metric == "max_error":
        return max_error(code, state_sequence_channel(family, seq, "main"))
    if metric == "strong_leakage":
        g = induced_message_channel(code, state_sequence_channel(family, seq, "wiretap")).rows
        u = np.full(code.message_count, 1.0 / code.message_count)
        return _mutual_information_rows(u, g)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


@dataclass(frozen=True)
class WorstCase:
    sequence: StateSequence
    value: float
    exact: bool
    evaluations: int


def worst_state_sequence(code: RandomEncoderCode, family: AvwcFamily, n: int,
                         metric: str = "avg_error", budget: int | None = None, seed: int = 0,
                         exhaustive_limit: int = EXHAUSTIVE_LIMIT) -> WorstCase:
    """The jammer's best state sequence of length ``n`` for ``metric``.

    Exhaustive (``exact=True``) when |S|^n <= ``exhaustive_limit``; otherwise
    seeded random restarts with single-coordinate ascent, stopping after
    ``budget`` metric evaluations (default 2000).
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    ns = family.num_states
    cache: dict[tuple[int, ...], float] = {}

    def value(seq):
        if seq not in cache:
            cache[seq] = sequence_metric(code, family, seq, metric)
        return cache[seq]

    if ns**n <= exhaustive_limit:
        best = max(itertools.product(range(ns), repeat=n), key=value)
        return WorstCase(StateSequence(best), value(best), True, len(cache))

    budget = 2000 if budget is None else budget
    # never ask for more distinct sequences than exist
    budget = min(budget, ns**n)
    rng = np.random.default_rng(seed)
    best_seq, best_val = None, -math.inf
    while len(cache) < budget:
        seq = tuple(int(s) for s in rng.integers(0, ns, size=n))
        cur = value(seq)
        improved = True
        while improved and len(cache) < budget:
            improved = False
            for i in range(n):
                for s in range(ns):
                    if s == seq[i]:
                        continue
                    cand = seq[:i] + (s,) + seq[i + 1:]
                    v = value(cand)
                    if v > cur:
                        seq, cur, improved = cand, v, True
        if cur > best_val:
            best_seq, best_val = seq, cur
    return WorstCase(StateSequence(best_seq), best_val, False, len(cache))


# Chernoff tail ---------------------------------------------------------------

@dataclass(frozen=True)
class ChernoffReport:
    L: int
    p: float
    p1: float
    alpha: float
    trials: int
    empirical: float
    bound: float
    stderr: float
    passed: bool


def chernoff_tail_validate(L: int, p: float, p1: float, alpha: float,
                           trials: int = 100_000, seed: int = 0) -> ChernoffReport:
    """Monte Carlo estimate of Pr{sum of L Bernoulli(p) > L p1 (1+alpha)}
    against exp(-alpha^2 L p1 / 8)."""
    if L < 1 or trials < 1:
        raise ValueError("L and trials must be positive")
    if not 0.0 <= p <= p1 <= 1.0:
        raise ValueError("need 0 <= p <= p1 <= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    sums = rng.binomial(L, p, size=trials)
    empirical = float(np.mean(sums > L * p1 * (1.0 + alpha)))
    bound = math.exp(-alpha * alpha * L * p1 / 8.0)
    # binomial standard error of an estimate whose true value sits at the bound
    stderr = math.sqrt(bound * (1.0 - bound) / trials)
    return ChernoffReport(L, p, p1, alpha, trials, empirical, bound, stderr,
                          empirical <= bound + 3.0 * stderr)
