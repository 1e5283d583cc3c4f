"""Security advantages, their equivalence audit and the single-letter objective."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import AvwcFamily, RandomEncoderCode, induced_message_channel
from .probability import (
    LN2,
    Channel,
    Distribution,
    _kl_rows_nats,
    _mutual_information_rows,
    as_probs,
    as_rows,
)

AUDIT_SLACK = 1e-9


@dataclass(frozen=True)
class SearchConfig:
    dirichlet_samples: int = 256
    partition_cap: int = 6
    seed: int = 0


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    input: Distribution
    converged: bool
    iterations: int
    gap: float
    history: tuple[float, ...] = ()


@dataclass(frozen=True)
class SSResult:
    value: float
    wiretap: int
    prior: tuple[float, ...]
    partition: tuple[int, ...]
    restricted: bool


@dataclass(frozen=True)
class AdvantageReport:
    strong_leakage: float
    mis_advantage: float
    ds_advantage: float
    ss_advantage_lower: float
    worst_wiretap: int
    worst_pair: tuple[int, int]
    worst_prior: tuple[float, ...]
    worst_partition: tuple[int, ...]
    mis_converged: bool = True
    ss_restricted: bool = False


@dataclass(frozen=True)
class EquivalenceAudit:
    ss: float
    ds: float
    mis: float
    output_size: int
    ss_le_ds: float
    ds_le_2ss: float
    pinsker: float
    continuity: float
    flags: dict = field(default_factory=dict)
    note: str = ""

    @property
    def passed(self) -> bool:
        return all(self.flags.values())


def _induced(code: RandomEncoderCode, wiretaps: Sequence) -> list[np.ndarray]:
    return [induced_message_channel(code, w).rows for w in wiretaps]


def strong_leakage(code: RandomEncoderCode, wiretaps: Sequence) -> float:
    """max over wiretaps of I(U;Z) for a uniform message."""
    u = np.full(code.message_count, 1.0 / code.message_count)
    return max(_mutual_information_rows(u, g) for g in _induced(code, wiretaps))


def _ba_state(logp, w, wlogw):
    p = np.exp(logp)
    # D(W_x || q) = sum_y w log w - sum_y w log q
    d = wlogw - w @ np.log(np.maximum(p @ w, 1e-300))
    return p, d, float(p @ d)


def _ba_step(logp, d, step):
    out = logp + step * d
    out -= out.max()
    return out - math.log(np.exp(out).sum())


def blahut_arimoto(ch, tol: float = 1e-9, max_iter: int = 100_000,
                   track: bool = False, accelerate: bool = True) -> CapacityResult:
    """Capacity of ``ch`` in bits.

    Stops when the duality gap max_x D(W_x||q) - I(p) drops below ``tol``.
    With ``accelerate`` the exponent of the multiplicative update is scaled
    by an adaptive factor >= 1; a scaled step that lowers I(p) is replaced by
    the plain update, so I(p) never decreases.  ``converged`` is False when
    ``max_iter`` ran out first.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = as_rows(ch)
    m = w.shape[0]
    with np.errstate(divide="ignore"):
        wlogw = np.where(w > 0, w * np.log(np.where(w > 0, w, 1.0)), 0.0).sum(axis=1)
    logp = np.full(m, -math.log(m))
    p, d, lower = _ba_state(logp, w, wlogw)
    history = []
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        gap = (float(d.max()) - lower) / LN2
        if track:
            history.append(lower / LN2)
        if gap < tol:
            break
        if accelerate and step > 1.0:
            cand = _ba_step(logp, d, step)
            cp, cd, cl = _ba_state(cand, w, wlogw)
            if cl >= lower:
                logp, p, d, lower = cand, cp, cd, cl
                step = min(step * 2.0, 1e6)
                continue
            step = 1.0
        logp = _ba_step(logp, d, 1.0)
        p, d, lower = _ba_state(logp, w, wlogw)
        if accelerate:
            step = 2.0
    gap = max((float(d.max()) - lower) / LN2, 0.0)
    return CapacityResult(max(lower, 0.0) / LN2, Distribution(p / p.sum()), gap < tol, it,
                          gap, tuple(history))


def _mis_detail(code, wiretaps, tol=1e-9, max_iter=100_000):
    runs = [blahut_arimoto(g, tol, max_iter) for g in _induced(code, wiretaps)]
    i = max(range(len(runs)), key=lambda k: runs[k].capacity)
    return runs[i].capacity, i, runs[i].input, all(r.converged for r in runs)


def mis_advantage(code: RandomEncoderCode, wiretaps: Sequence, tol: float = 1e-9,
                  max_iter: int = 100_000) -> float:
    """max over priors and wiretaps of I(U;Z), via Blahut-Arimoto."""
    return _mis_detail(code, wiretaps, tol, max_iter)[0]


def _pairwise_tv(g: np.ndarray) -> np.ndarray:
    j = g.shape[0]
    out = np.zeros((j, j))
    for a in range(j - 1):
        out[a, a + 1:] = 0.5 * np.abs(g[a + 1:] - g[a]).sum(axis=1)
    return out


def _ds_detail(code, wiretaps):
    if code.message_count < 2:
        return 0.0, 0, (0, 0)
    best = (-1.0, 0, (0, 1))
    for i, g in enumerate(_induced(code, wiretaps)):
        tv = _pairwise_tv(g)
        a, b = np.unravel_index(int(np.argmax(tv)), tv.shape)
        if tv[a, b] > best[0]:
            best = (float(tv[a, b]), i, (int(a), int(b)))
    return min(best[0], 1.0), best[1], best[2]


def ds_advantage(code: RandomEncoderCode, wiretaps: Sequence) -> float:
    """max over message pairs and wiretaps of the total variation between outputs."""
    return _ds_detail(code, wiretaps)[0]


def set_partitions(n: int):
    """Yield every set partition of range(n) as a restricted-growth label tuple."""
    if n == 0:
        yield ()
        return
    labels = [0]

    def rec(blocks):
        if len(labels) == n:
            yield tuple(labels)
            return
        for c in range(blocks + 1):
            labels.append(c)
            yield from rec(max(blocks, c + 1))
            labels.pop()

    yield from rec(1)


def _candidate_priors(j: int, cfg: SearchConfig) -> np.ndarray:
    priors = [np.full(j, 1.0 / j)]
    for a, b in itertools.combinations(range(j), 2):
        p = np.zeros(j)
        p[[a, b]] = 0.5
        priors.append(p)
    if cfg.dirichlet_samples > 0 and j > 1:
        rng = np.random.default_rng(cfg.seed)
        priors.extend(rng.dirichlet(np.ones(j), size=cfg.dirichlet_samples))
    return np.array(priors)


def _ss_full(g: np.ndarray, priors: np.ndarray, labels: tuple[int, ...]):
    cells = max(labels) + 1
    ind = np.zeros((cells, len(labels)))
    ind[labels, np.arange(len(labels))] = 1.0
    # joint[k, v, z] = Pr{f(U)=v, Z=z} under prior k
    joint = np.einsum("vu,ku,uz->kvz", ind, priors, g)
    adversary = joint.max(axis=1).sum(axis=1)
    simulator = (priors @ ind.T).max(axis=1)
    adv = adversary - simulator
    k = int(np.argmax(adv))
    return float(adv[k]), k


def _ss_detail(code, wiretaps, cfg: SearchConfig) -> SSResult:
    j = code.message_count
    if j < 2:
        return SSResult(0.0, 0, (1.0,) * j, (0,) * j, False)
    induced = _induced(code, wiretaps)
    if j <= cfg.partition_cap:
        priors = _candidate_priors(j, cfg)
        parts = list(set_partitions(j))
        best = SSResult(-1.0, 0, (), (), False)
        for i, g in enumerate(induced):
            for labels in parts:
                val, k = _ss_full(g, priors, labels)
                if val > best.value:
                    best = SSResult(val, i, tuple(priors[k].tolist()), labels, False)
        return SSResult(max(best.value, 0.0), best.wiretap, best.prior, best.partition, False)

    # restricted: identity f with the uniform prior and every two-point prior
    best = SSResult(-1.0, 0, (), (), True)
    ident = tuple(range(j))
    for i, g in enumerate(induced):
        uni = float(g.max(axis=0).sum()) / j - 1.0 / j
        if uni > best.value:
            best = SSResult(uni, i, (1.0 / j,) * j, ident, True)
        tv = _pairwise_tv(g)
        a, b = np.unravel_index(int(np.argmax(tv)), tv.shape)
        # MAP on a uniform pair succeeds w.p. (1 + SD)/2; the simulator gets 1/2
        pair = 0.5 * float(tv[a, b])
        if pair > best.value:
            prior = np.zeros(j)
            prior[[a, b]] = 0.5
            best = SSResult(pair, i, tuple(prior.tolist()), ident, True)
    return SSResult(max(best.value, 0.0), best.wiretap, best.prior, best.partition, True)


def ss_advantage_lower(code: RandomEncoderCode, wiretaps: Sequence,
                       search: SearchConfig | None = None) -> float:
    """Certified lower bound on the semantic-security advantage.

    Enumerates set partitions f of the message set (up to
    ``search.partition_cap`` messages), the uniform prior, every uniform
    two-point prior and ``search.dirichlet_samples`` random priors.  For each
    candidate the MAP adversary and the best constant simulator are exact.
    """
    return _ss_detail(code, wiretaps, search or SearchConfig()).value


def advantage_report(code: RandomEncoderCode, wiretaps: Sequence,
                     search: SearchConfig | None = None, tol: float = 1e-9) -> AdvantageReport:
    cfg = search or SearchConfig()
    mis, _, _, converged = _mis_detail(code, wiretaps, tol)
    ds, ds_wt, pair = _ds_detail(code, wiretaps)
    ss = _ss_detail(code, wiretaps, cfg)
    return AdvantageReport(
        strong_leakage=strong_leakage(code, wiretaps),
        mis_advantage=mis,
        ds_advantage=ds,
        ss_advantage_lower=ss.value,
        worst_wiretap=ds_wt,
        worst_pair=pair,
        worst_prior=ss.prior,
        worst_partition=ss.partition,
        mis_converged=converged,
        ss_restricted=ss.restricted,
    )


PINSKER_NOTE = (
    "Pinsker step checked in squared form: mis >= ds^2 / (2 ln 2) bits. "
    "A linear '1/2 * ds' reading of the same chain is not asserted."
)


def continuity_bound(ds: float, output_size: int) -> float:
    """2 eps log2(|Z|/eps) with eps = ds; zero when ds is zero."""
    if ds <= 0:
        return 0.0
    return 2.0 * ds * math.log2(output_size / ds)


def audit_values(ss: float, ds: float, mis: float, output_size: int,
                 slack: float = AUDIT_SLACK) -> EquivalenceAudit:
    pinsker_floor = ds * ds / (2.0 * LN2)
    cont = continuity_bound(ds, output_size)
    slacks = dict(
        ss_le_ds=ds - ss,
        ds_le_2ss=2.0 * ss - ds,
        pinsker=mis - pinsker_floor,
        continuity=cont - mis,
    )
    flags = {k: v >= -slack for k, v in slacks.items()}
    return EquivalenceAudit(ss, ds, mis, output_size, flags=flags, note=PINSKER_NOTE, **slacks)


def equivalence_audit(code: RandomEncoderCode, wiretaps: Sequence,
                      search: SearchConfig | None = None, tol: float = 1e-9) -> EquivalenceAudit:
    """Check ss <= ds <= 2 ss, Pinsker and the entropy-continuity bound numerically.

    Failures are reported in ``flags``; nothing is raised.
    """
    cfg = search or SearchConfig()
    ss = _ss_detail(code, wiretaps, cfg).value
    ds = ds_advantage(code, wiretaps)
    mis = mis_advantage(code, wiretaps, tol)
    return audit_values(ss, ds, mis, as_rows(wiretaps[0]).shape[1])


# single-letter secrecy objective ------------------------------------------

def _mi_batch(prior: np.ndarray, comp: np.ndarray) -> np.ndarray:
    """I(U;Y) in bits for a batch of channels comp[k, u, y]."""
    marg = np.einsum("u,kuy->ky", prior, comp)
    d = _kl_rows_nats(comp, marg[:, None, :])
    return np.maximum(d @ prior, 0.0) / LN2


def _family_arrays(family: AvwcFamily):
    mains = np.array([m.rows for m in family.mains])
    wiretaps = np.array([w.rows for w in family.wiretaps])
    return mains, wiretaps


def _secrecy_terms(prior, cond, mains, wiretaps, qs):
    """(I(U;Y_q) for each q in qs, max_s I(U;Z_s))."""
    avg = np.tensordot(qs, mains, axes=1)
    reliable = _mi_batch(prior, np.einsum("ux,kxy->kuy", cond, avg))
    leak = _mi_batch(prior, np.einsum("ux,sxz->suz", cond, wiretaps)).max()
    return reliable, float(leak)


def single_letter_objective(prior, cond, family: AvwcFamily, q) -> float:
    """I(U;Y) under the q-averaged main channel minus max_s I(U;Z_s), in bits."""
    p = as_probs(prior)
    c = as_rows(cond)
    qv = as_probs(q)
    if c.shape[0] != p.size:
        raise ValueError("prior and conditional channel disagree on the auxiliary alphabet")
    if c.shape[1] != family.input_size:
        raise ValueError("conditional channel output must be the family input alphabet")
    if qv.size != family.num_states:
        raise ValueError("state distribution has the wrong size")
    mains, wiretaps = _family_arrays(family)
    reliable, leak = _secrecy_terms(p, c, mains, wiretaps, qv[None, :])
    return float(reliable[0]) - leak


def simplex_grid(dim: int, resolution: float) -> np.ndarray:
    steps = max(1, int(round(1.0 / resolution)))
    pts = [c for c in itertools.product(range(steps + 1), repeat=dim - 1) if sum(c) <= steps]
    arr = np.array([list(c) + [steps - sum(c)] for c in pts], dtype=float)
    return arr / steps


@dataclass(frozen=True)
class SingleLetterResult:
    value: float
    prior: tuple[float, ...]
    cond: tuple[tuple[float, ...], ...]
    q: tuple[float, ...]
    inner_exact: bool
    grid: float
    evaluations: int


class _InnerMin:
    def __init__(self, mains, wiretaps, grid, rng, heuristic_samples=2000):
        self.mains, self.wiretaps = mains, wiretaps
        s = mains.shape[0]
        self.exact = s <= 3
        if self.exact:
            self.points = simplex_grid(s, grid)
        else:
            self.points = np.vstack([np.eye(s), np.full((1, s), 1.0 / s),
                                     rng.dirichlet(np.ones(s), size=heuristic_samples)])
        self.grid = grid
        self.evaluations = 0

    def __call__(self, prior, cond):
        self.evaluations += 1
        reliable, leak = _secrecy_terms(prior, cond, self.mains, self.wiretaps, self.points)
        k = int(np.argmin(reliable))
        q, best = self.points[k], float(reliable[k])
        s = q.size
        if s > 1:
            q, best = self._refine(prior, cond, q, best)
        return best - leak, q

    def _refine(self, prior, cond, q, best):
        s = q.size
        dirs = []
        for a in range(s):
            for b in range(s):
                if a != b:
                    d = np.zeros(s)
                    d[a], d[b] = 1.0, -1.0
                    dirs.append(d)
        dirs = np.array(dirs)
        step = self.grid / 2
        while step > 1e-7:
            cand = q[None, :] + step * dirs
            cand = cand[np.all(cand >= -1e-15, axis=1)]
            if not len(cand):
                step /= 2
                continue
            cand = np.clip(cand, 0.0, None)
            cand /= cand.sum(axis=1, keepdims=True)
            vals, _ = _secrecy_terms(prior, cond, self.mains, self.wiretaps, cand)
            k = int(np.argmin(vals))
            if vals[k] < best - 1e-15:
                q, best = cand[k], float(vals[k])
            else:
                step /= 2
        return q, best


def _softmax(z: np.ndarray, axis=-1) -> np.ndarray:
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def optimize_single_letter(family: AvwcFamily, grid: float = 1e-2, aux_cap: int | None = None,
                           restarts: int = 8, seed: int = 0,
                           max_sweeps: int = 60) -> SingleLetterResult:
    """Best-found max over (P_U, P_X|U) of min_q [I(U;Y_q)] - max_s I(U;Z_s).

    A lower bound on the optimum: the inner minimum over q is a simplex grid
    search plus local refinement (exact to grid resolution when |S| <= 3),
    the outer maximum is random restarts with coordinate ascent on logits.
    """
    x = family.input_size
    k = aux_cap if aux_cap is not None else x + 1
    rng = np.random.default_rng(seed)
    mains, wiretaps = _family_arrays(family)
    inner = _InnerMin(mains, wiretaps, grid, rng)

    def evaluate(theta):
        prior = _softmax(theta[:k])
        cond = _softmax(theta[k:].reshape(k, x))
        val, q = inner(prior, cond)
        return val, q

    starts = []
    # U = X with a uniform law on the first |X| symbols
    ident = np.full((k, x), -30.0)
    for u in range(k):
        ident[u, u % x] = 0.0
    lp = np.full(k, -30.0)
    lp[:min(k, x)] = 0.0
    starts.append(np.concatenate([lp, ident.ravel()]))
    # constant U: objective exactly 0
    starts.append(np.concatenate([np.zeros(k), np.zeros(k * x)]))
    for _ in range(restarts):
        starts.append(rng.normal(0.0, 2.0, size=k + k * x))

    best_val, best_theta, best_q = -math.inf, None, None
    for theta in starts:
        val, q = evaluate(theta)
        for step in (1.0, 0.3, 0.1, 0.03, 0.01):
            for _ in range(max_sweeps):
                improved = False
                for i in range(theta.size):
                    for sgn in (1.0, -1.0):
                        cand = theta.copy()
                        cand[i] += sgn * step
                        cv, cq = evaluate(cand)
                        if cv > val + 1e-13:
                            theta, val, q, improved = cand, cv, cq, True
                            break
                if not improved:
                    break
        if val > best_val:
            best_val, best_theta, best_q = val, theta, q

    prior = _softmax(best_theta[:k])
    cond = _softmax(best_theta[k:].reshape(k, x))
    return SingleLetterResult(
        value=max(best_val, 0.0),
        prior=tuple(prior.tolist()),
        cond=tuple(tuple(r) for r in cond.tolist()),
        q=tuple(best_q.tolist()),
        inner_exact=inner.exact,
        grid=grid,
        evaluations=inner.evaluations,
    )
