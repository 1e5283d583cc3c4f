"""Randomized extraction of a max-error, prior-free secure code from a base code.

A base code with small average error and small uniform-prior leakage is
turned into a code on J messages: each new message is a cluster of K base
messages drawn uniformly, and the encoder picks a cluster member at random.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .model import (
    ERROR,
    RandomEncoderCode,
    induced_message_channel,
    leakage_profile,
    per_message_error,
)
from .probability import LN2, Channel, _kl_rows_nats, _mutual_information_rows

DEFAULT_RETRIES = 64
MEASURE_TOL = 1e-9
# stand-in for a zero budget when the base guarantee is exactly zero
BUDGET_FLOOR = 1e-9


class ScheduleError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class ExtractionRefused(ValueError):
    """The base code does not meet the guarantees the parameters assume."""


class ExtractionFailed(RuntimeError):
    def __init__(self, step: int, attempts: int, residuals: dict):
        super().__init__(f"step {step}: no acceptable draw in {attempts} attempts; "
                         f"best residuals {residuals}")
        self.step = step
        self.attempts = attempts
        self.residuals = residuals


@dataclass(frozen=True)
class ExtractionParams:
    """(J, K, beta, A, B, delta) plus the base guarantees they were built from.

    ``base_error`` and ``base_leakage`` are the average-error and strong-leakage
    levels the base must meet; ``A``/``B`` are in bits / probability mass.
    """

    J: int
    K: int
    beta: float
    A: float
    B: float
    delta: float
    base_message_count: int
    base_error: float
    base_leakage: float
    retry_budget: int = DEFAULT_RETRIES
    seed: int = 0
    schedule: str = "explicit"
    notes: tuple[str, ...] = ()
    violations: tuple[str, ...] = ()

    def __post_init__(self):
        if self.J < 1 or self.K < 1:
            raise ScheduleError([f"need J >= 1 and K >= 1, got J={self.J}, K={self.K}"])
        if self.J * self.K > self.base_message_count:
            raise ScheduleError([f"J*K = {self.J * self.K} exceeds the base message count"])
        if self.A < 0 or self.B < 0 or self.delta < 0:
            raise ScheduleError(["budgets and delta must be non-negative"])
        if self.retry_budget < 1:
            raise ScheduleError(["retry budget must be positive"])

    @property
    def collision_budget(self) -> float:
        return 1.5 * self.K * self.beta

    @property
    def cluster_floor(self) -> float:
        return self.K * (1.0 - 1.5 * self.beta)

    @property
    def error_bound(self) -> float:
        return self.B / self.cluster_floor

    @property
    def leakage_bound(self) -> float:
        return self.A / self.cluster_floor

    @classmethod
    def explicit(cls, J: int, K: int, A: float, B: float, stats: "BaseStats", **kw):
        beta = J * K / stats.message_count
        return cls(J, K, beta, A, B, stats.delta, stats.message_count,
                   stats.error, stats.leakage, **kw)


def _schedule(n, K, lam, mu, base_message_count, delta, name, family_sizes, notes):
    if n < 1:
        raise ScheduleError(["block length must be positive"])
    if lam < 0 or mu < 0:
        raise ScheduleError(["lambda and mu must be non-negative"])
    K = max(1, int(round(K)))
    beta_target = 1.0 / n
    J = int(math.floor(beta_target * base_message_count / K))
    if J < 1:
        raise ScheduleError([f"J = floor({beta_target:.6g} * {base_message_count} / {K}) < 1"])
    notes = list(notes)
    # the base meets lambda/8 and mu/8; A = K mu / 2 then gives K (mu/8) = A/4
    A, B = K * mu / 2.0, K * lam / 2.0
    if A == 0:
        A = BUDGET_FLOOR
        notes.append("mu = 0: leakage budget set to a positive floor")
    if B == 0:
        B = BUDGET_FLOOR
        notes.append("lambda = 0: error budget set to a positive floor")
    notes.append("base guarantees taken as lambda/8 and mu/8")
    params = ExtractionParams(
        J=J, K=K, beta=J * K / base_message_count, A=A, B=B, delta=delta,
        base_message_count=base_message_count, base_error=lam / 8.0,
        base_leakage=mu / 8.0, schedule=name, notes=tuple(notes))
    violations = []
    if not params.beta < 0.25:
        violations.append(f"beta = {params.beta} is not below 1/4")
    if family_sizes is not None:
        violations.extend(check_preconditions(params, family_sizes).violations)
    return replace(params, violations=tuple(violations))


def derive_params_theorem1(n: int, epsilon: float, lam: float, mu: float,
                           base_message_count: int, delta: float,
                           family_sizes: tuple[int, int] | None = None) -> ExtractionParams:
    """K = 2^{n eps/3}, beta = 1/n, A = K mu/2, B = K lambda/2, J = floor(beta |U| / K)."""
    if epsilon <= 0:
        raise ScheduleError(["epsilon must be positive"])
    K = 2.0 ** (n * epsilon / 3.0)
    return _schedule(n, K, lam, mu, base_message_count, delta, "theorem1", family_sizes,
                     [f"K = round(2^({n}*{epsilon}/3))"])


def derive_params_theorem3(n: int, epsilon: float, lam: float, mu: float,
                           base_message_count: int, delta: float, a: float,
                           family_sizes: tuple[int, int] | None = None) -> ExtractionParams:
    """As the first schedule but K = 2^{n(a + eps/2)}, costing a + eps in rate."""
    if epsilon <= 0:
        raise ScheduleError(["epsilon must be positive"])
    if a < 0:
        raise ScheduleError(["a must be non-negative"])
    K = 2.0 ** (n * (a + epsilon / 2.0))
    return _schedule(n, K, lam, mu, base_message_count, delta, "theorem3", family_sizes,
                     [f"K = round(2^({n}*({a}+{epsilon}/2)))",
                      f"rate sacrifice a + eps = {a + epsilon}"])


@dataclass(frozen=True)
class PreconditionReport:
    """Log-domain margins (natural log of 1/4 minus log of each left side)."""

    leakage_margin: float
    error_margin: float
    collision_margin: float
    beta_margin: float
    violations: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def check_preconditions(params: ExtractionParams, family_sizes: tuple[int, int]) -> PreconditionReport:
    """Evaluate the three sufficient conditions plus beta < 1/4.

    |V| J exp(-A/(4 delta)) < 1/4, |W| J exp(-B/4) < 1/4 and
    J exp(-K beta/32) < 1/4, each as ln(1/4) - ln(lhs) > 0.
    """
    n_w, n_v = family_sizes
    quarter = math.log(0.25)
    log_j = math.log(params.J)
    if params.delta > 0:
        leak_exp = params.A / (4.0 * params.delta)
    else:
        # D is identically zero, so the leakage condition cannot fail
        leak_exp = math.inf
    leak = quarter - (math.log(n_v) + log_j - leak_exp)
    err = quarter - (math.log(n_w) + log_j - params.B / 4.0)
    coll = quarter - (log_j - params.K * params.beta / 32.0)
    beta = 0.25 - params.beta
    names = [("leakage", leak), ("error", err), ("collision", coll), ("beta", beta)]
    violations = tuple(f"{name} condition fails (margin {m:.6g})" for name, m in names
                       if not m > 0)
    return PreconditionReport(leak, err, coll, beta, violations)


@dataclass(frozen=True)
class BaseStats:
    message_count: int
    error: float
    leakage: float
    delta: float


def _profiles(base, mains, wiretaps):
    errors = np.array([per_message_error(base, m) for m in mains])
    leaks = np.array([leakage_profile(base, w) for w in wiretaps])
    return errors, leaks


def measure_base(base: RandomEncoderCode, mains: Sequence, wiretaps: Sequence) -> BaseStats:
    """Worst average error, worst uniform-prior leakage and the largest D_V(u)."""
    errors, leaks = _profiles(base, mains, wiretaps)
    return BaseStats(base.message_count, float(errors.mean(axis=1).max()),
                     float(leaks.mean(axis=1).max()), float(leaks.max()))


@dataclass(frozen=True)
class StepRecord:
    step: int
    attempts: int
    leak_excess: float
    error_excess: float
    collisions: int


@dataclass(frozen=True)
class ExtractionResult:
    derived: RandomEncoderCode
    clusters: tuple[tuple[int, ...], ...]
    step_log: tuple[StepRecord, ...]
    params: ExtractionParams
    base: RandomEncoderCode = field(repr=False)
    base_stats: BaseStats | None = None

    @property
    def retries(self) -> int:
        return sum(r.attempts - 1 for r in self.step_log)

    def to_dict(self) -> dict:
        return {
            "params": {k: getattr(self.params, k) for k in (
                "J", "K", "beta", "A", "B", "delta", "base_message_count", "base_error",
                "base_leakage", "retry_budget", "seed", "schedule")} | {
                "notes": list(self.params.notes), "violations": list(self.params.violations)},
            "clusters": [list(c) for c in self.clusters],
            "step_log": [vars(r).copy() for r in self.step_log],
            "base_stats": vars(self.base_stats).copy() if self.base_stats else None,
        }


def build_derived(base: RandomEncoderCode, clusters: Sequence[Sequence[int]]) -> RandomEncoderCode:
    """Encoder: uniform over the cluster, then the base encoder.  Decoder: cluster of the base decision."""
    enc = np.array([base.encoder.rows[list(c)].mean(axis=0) for c in clusters])
    cluster_of = np.full(base.message_count, ERROR, dtype=np.int64)
    for j, c in enumerate(clusters):
        if np.any(cluster_of[list(c)] != ERROR):
            raise ValueError("clusters must be pairwise disjoint")
        cluster_of[list(c)] = j
    dec = np.where(base.decoder >= 0, cluster_of[np.maximum(base.decoder, 0)], ERROR)
    return RandomEncoderCode(Channel(enc), dec)


def _draw(seed: int, step: int, attempt: int, size: int, K: int) -> np.ndarray:
    # keyed per attempt so a draw does not depend on how earlier steps went
    return np.random.default_rng([seed, step, attempt]).integers(0, size, size=K)


def extract(base: RandomEncoderCode, mains: Sequence, wiretaps: Sequence,
            params: ExtractionParams, tol: float = MEASURE_TOL) -> ExtractionResult:
    """Run the step-by-step cluster selection.

    The base is measured first and refused if it misses the guarantees in
    ``params``.  Step j draws K messages i.i.d. uniformly and accepts when, for
    every wiretap, the summed D_V is at most A; for every main, the summed
    per-message error is at most B; and at most 3K beta/2 draws hit a message
    used earlier or repeat within the draw.  A failed step is redrawn whole.
    """
    if not mains or not wiretaps:
        raise ValueError("need at least one main and one wiretap channel")
    errors, leaks = _profiles(base, mains, wiretaps)
    stats = BaseStats(base.message_count, float(errors.mean(axis=1).max()),
                      float(leaks.mean(axis=1).max()), float(leaks.max()))
    if stats.message_count != params.base_message_count:
        raise ExtractionRefused(f"base has {stats.message_count} messages, params expect "
                                f"{params.base_message_count}")
    for what, got, limit in (("average error", stats.error, params.base_error),
                             ("strong leakage", stats.leakage, params.base_leakage),
                             ("largest D_V(u)", stats.delta, params.delta)):
        if got > limit + tol:
            raise ExtractionRefused(f"base {what} {got:.6g} exceeds the assumed {limit:.6g}")

    size = base.message_count
    used = np.zeros(size, dtype=bool)
    clusters, log = [], []
    for step in range(params.J):
        best = None
        for attempt in range(params.retry_budget):
            draw = _draw(params.seed, step, attempt, size, params.K)
            leak_excess = float((leaks[:, draw].sum(axis=1) - params.A).max())
            error_excess = float((errors[:, draw].sum(axis=1) - params.B).max())
            seen, collisions = set(), 0
            for u in draw.tolist():
                collisions += used[u] or u in seen
                seen.add(u)
            res = dict(leak_excess=leak_excess, error_excess=error_excess,
                       collision_excess=collisions - params.collision_budget)
            if leak_excess <= 0 and error_excess <= 0 and collisions <= params.collision_budget:
                fresh = sorted(u for u in seen if not used[u])
                used[draw] = True
                clusters.append(tuple(fresh))
                log.append(StepRecord(step, attempt + 1, leak_excess, error_excess, collisions))
                break
            if best is None or max(res.values()) < max(best.values()):
                best = res
        else:
            raise ExtractionFailed(step, params.retry_budget, best)
    derived = build_derived(base, clusters)
    return ExtractionResult(derived, tuple(clusters), tuple(log), params, base, stats)


@dataclass(frozen=True)
class ExtractionAudit:
    error_bound: float
    leakage_bound: float
    worst_error: float
    worst_radius: float
    worst_uniform_leakage: float
    cluster_sizes: tuple[int, ...]
    flags: dict
    failures: tuple[str, ...]

    @property
    def error_slack(self) -> float:
        return self.error_bound - self.worst_error

    @property
    def leakage_slack(self) -> float:
        return self.leakage_bound - self.worst_radius

    @property
    def passed(self) -> bool:
        return all(self.flags.values())


def audit_extracted(result: ExtractionResult, mains: Sequence, wiretaps: Sequence,
                    params: ExtractionParams | None = None, slack: float = 1e-9) -> ExtractionAudit:
    """Recompute every guarantee of the derived code from scratch.

    Leakage is measured against the base code's uniform-prior output marginal,
    so the max over messages is a prior-free bound on I(U~; Z~).
    """
    params = params or result.params
    base, derived = result.base, result.derived
    clusters = result.clusters
    failures = []

    sizes = tuple(len(c) for c in clusters)
    members = [u for c in clusters for u in c]
    disjoint = len(members) == len(set(members))
    if not disjoint:
        failures.append("clusters overlap")
    big_enough = all(s >= params.cluster_floor - slack and s <= params.K for s in sizes)
    if not big_enough:
        failures.append(f"cluster sizes {sizes} outside [{params.cluster_floor}, {params.K}]")

    worst_error = 0.0
    for i, m in enumerate(mains):
        e = per_message_error(derived, m)
        worst_error = max(worst_error, float(e.max()))
        if e.max() > params.error_bound + slack:
            failures.append(f"main {i}: message {int(e.argmax())} error {e.max():.6g} "
                            f"> {params.error_bound:.6g}")

    worst_radius = worst_uniform = 0.0
    convex_ok = True
    u = np.full(derived.message_count, 1.0 / derived.message_count)
    for i, w in enumerate(wiretaps):
        base_rows = induced_message_channel(base, w).rows
        ref = base_rows.mean(axis=0)
        rows = induced_message_channel(derived, w).rows
        d = _kl_rows_nats(rows, ref) / LN2
        radius = float(d.max())
        uniform = _mutual_information_rows(u, rows)
        worst_radius = max(worst_radius, radius)
        worst_uniform = max(worst_uniform, uniform)
        if radius > params.leakage_bound + slack:
            failures.append(f"wiretap {i}: message {int(d.argmax())} radius {radius:.6g} "
                            f"> {params.leakage_bound:.6g}")
        if uniform > radius + slack:
            failures.append(f"wiretap {i}: uniform leakage exceeds the radius certificate")
        comp = _kl_rows_nats(base_rows, ref) / LN2
        for j, c in enumerate(clusters):
            if d[j] > comp[list(c)].mean() + slack:
                convex_ok = False
                failures.append(f"wiretap {i}: convexity fails on cluster {j}")

    flags = dict(
        disjoint=disjoint,
        cluster_sizes=big_enough,
        max_error=worst_error <= params.error_bound + slack,
        prior_free_leakage=worst_radius <= params.leakage_bound + slack,
        radius_dominates_uniform=worst_uniform <= worst_radius + slack,
        convexity=convex_ok,
    )
    return ExtractionAudit(params.error_bound, params.leakage_bound, worst_error, worst_radius,
                           worst_uniform, sizes, flags, tuple(failures))
