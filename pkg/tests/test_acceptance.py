"""Acceptance gate: twelve criteria at their stated tolerances and time limits.

Each criterion is one test named ``test_criterion_NN_...``; the conftest hook
prints one PASS/FAIL line per criterion at the end of the run.
"""
import math
import time

import numpy as np
import pytest

from avwc import io
from avwc.avc import chernoff_tail_validate, symmetrizability_check
from avwc.cli import _channels
from avwc.counterexample import (
    ThetaSubset,
    adversarial_thetas,
    case1_attack,
    case2_certificate,
    case2_leakage_bound,
    case2_partition_code,
    gavc_erasure_channel,
    naive_identity_code,
    skewed_attack,
    strong_leakage_closed_form,
    theta_size,
    v_theta_channel,
)
from avwc.extraction import ExtractionParams, audit_extracted, extract, measure_base
from avwc.metrics import (
    SearchConfig,
    advantage_report,
    blahut_arimoto,
    optimize_single_letter,
)
from avwc.model import AvwcFamily, RandomEncoderCode, induced_message_channel, per_message_error
from avwc.probability import Channel, Distribution, mutual_information
from oracles import (
    brute_naive_leakage,
    brute_ss,
    grid_min_residual,
    grid_slack,
    h2,
    joint_mi,
    random_channel,
)


class Timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.2f} s, limit {self.limit} s"


def skewed_bound_oracle(n, f):
    size = 2**n
    return 0.5 * math.log2(2.0 / (1.0 + (size - f) / (size * (size - 1))))


def test_criterion_01_closed_form_matches_brute_force():
    rng = np.random.default_rng(101)
    with Timer(30):
        for n in range(2, 9):
            f = math.ceil(2 ** (n / 2))
            closed = strong_leakage_closed_form(n, f)
            for _ in range(16):
                theta = set(int(v) for v in rng.choice(2**n, size=f, replace=False))
                assert abs(closed - brute_naive_leakage(n, theta)) <= 1e-9, (n, sorted(theta))


def test_criterion_02_leakage_invariant_across_equal_size_theta():
    rng = np.random.default_rng(102)
    for n in range(1, 7):
        u = Distribution.uniform(2**n)
        for f in sorted({1, max(1, 2 ** (n // 2)), 2 ** (n - 1), 2**n - 1, 2**n} - {0}):
            vals = [mutual_information(u, v_theta_channel(ThetaSubset.random(n, f, rng)))
                    for _ in range(12)]
            assert max(vals) - min(vals) <= 1e-12, (n, f)


def test_criterion_03_skewed_attack_bound():
    rng = np.random.default_rng(103)
    for n in range(1, 9):
        for f in sorted({1, theta_size(n, 0.5), 2 ** (n - 1), 2**n}):
            others = rng.choice(np.arange(1, 2**n), size=f - 1, replace=False) if f > 1 else []
            theta = ThetaSubset(n, frozenset([0, *map(int, others)]))
            s = skewed_attack(n, f, theta)
            assert s.bound == pytest.approx(skewed_bound_oracle(n, f), abs=1e-12)
            assert s.exact >= skewed_bound_oracle(n, f), (n, f)
    assert abs(skewed_bound_oracle(8, 16) - 0.5) <= 0.02
    assert abs(skewed_attack(8, 16).bound - 0.5) <= 0.02


def _random_system(rng):
    j, x, z = int(rng.integers(2, 5)), int(rng.integers(2, 5)), int(rng.integers(2, 6))
    alpha = float(rng.choice([0.3, 1.0]))
    enc = Channel(random_channel(rng, j, x, alpha))
    code = RandomEncoderCode(enc, np.arange(x) % j)
    wiretaps = [Channel(random_channel(rng, x, z, alpha)) for _ in range(int(rng.integers(1, 4)))]
    return code, wiretaps


def test_criterion_04_security_notion_sandwich():
    rng = np.random.default_rng(104)
    cfg = SearchConfig(dirichlet_samples=32, seed=0)
    literal_misses, squared_misses = [], 0
    with Timer(60):
        for k in range(200):
            code, wiretaps = _random_system(rng)
            rep = advantage_report(code, wiretaps, cfg)
            ss, ds, mis = rep.ss_advantage_lower, rep.ds_advantage, rep.mis_advantage
            z = wiretaps[0].output_size
            assert ss <= ds + 1e-9, k
            assert ds <= 2 * ss + 1e-9, k
            # two-point construction: uniform prior on the worst pair, identity f
            a, b = rep.worst_pair
            prior = np.zeros(code.message_count)
            prior[[a, b]] = 0.5
            rows = induced_message_channel(code, wiretaps[rep.worst_wiretap]).rows
            two_point = brute_ss(rows, prior, tuple(range(code.message_count)))
            assert two_point == pytest.approx(ds / 2, abs=1e-9), k
            if ds > 0:
                assert mis <= 2 * ds * math.log2(z / ds) + 1e-9, k
            squared_misses += not ds * ds / (2 * math.log(2)) <= mis + 1e-9
            if not ds * ds / math.log(2) <= mis + 1e-9:
                literal_misses.append((k, ds * ds / math.log(2) - mis))
    # asserted exactly as stated; see the decisions ledger for the analysis
    assert not literal_misses, (
        f"(ds)^2/ln2 <= mis + 1e-9 fails on {len(literal_misses)}/200 systems, "
        f"worst excess {max(e for _, e in literal_misses):.4f} bits; "
        f"the (ds)^2/(2 ln2) form fails on {squared_misses}/200")


def test_criterion_05_blahut_arimoto_bsc_capacity():
    with Timer(1):
        for p in (0.1, 0.25, 0.4):
            assert abs(blahut_arimoto(Channel.bsc(p)).capacity - (1 - h2(p))) <= 1e-6


def test_criterion_06_symmetrizability():
    with Timer(10):
        xor = symmetrizability_check([Channel.identity(2), Channel([[0, 1], [1, 0]])])
        assert xor.feasible and xor.residual < 1e-7
        assert not symmetrizability_check([Channel([[0.9, 0.1], [0.2, 0.8]])]).feasible
        rng = np.random.default_rng(106)
        for _ in range(100):
            mains = [Channel(random_channel(rng, 2, 2)) for _ in range(2)]
            grid = grid_min_residual(mains)
            if symmetrizability_check(mains).feasible:
                assert grid <= grid_slack(2) + 1e-12
            else:
                assert grid > 1e-9


def test_criterion_07_chernoff_tail():
    trials = 100_000
    with Timer(60):
        for L in (50, 100, 400):
            for p1 in (0.05, 0.1, 0.3):
                for alpha in (0.25, 0.5, 0.9):
                    rep = chernoff_tail_validate(L, p1, p1, alpha, trials=trials, seed=107)
                    bound = math.exp(-alpha**2 * L * p1 / 8)
                    stderr = math.sqrt(bound * (1 - bound) / trials)
                    assert rep.trials == trials
                    assert rep.bound == pytest.approx(bound, rel=1e-12)
                    assert rep.empirical <= bound + 3 * stderr, (L, p1, alpha)


def test_criterion_08_extraction_end_to_end():
    with Timer(30):
        system = io.load_model(io.fixture("toy_extraction"))
        base = system.code
        mains, wiretaps, n = _channels(system.family, base)
        assert n == 8 and len(wiretaps) == 4 and mains[0] == Channel.identity(256)
        stats = measure_base(base, mains, wiretaps)
        K = 8
        params = ExtractionParams.explicit(2, K, 4 * K * stats.leakage, 4 * K * stats.error,
                                           stats, retry_budget=64, seed=7)
        res = extract(base, mains, wiretaps, params)
        assert all(r.attempts <= 64 for r in res.step_log)
        audit = audit_extracted(res, mains, wiretaps, params)
        assert audit.passed, audit.failures
        floor = K * (1 - 1.5 * params.beta)
        # direct recomputation of both bounds
        for m in mains:
            assert per_message_error(res.derived, m).max() <= params.B / floor + 1e-12
        base_ref = [induced_message_channel(base, w).rows.mean(axis=0) for w in wiretaps]
        for w, ref in zip(wiretaps, base_ref):
            rows = induced_message_channel(res.derived, w).rows
            radius = max(_kl_bits(r, ref) for r in rows)
            assert radius <= params.A / floor + 1e-9
        again = extract(base, mains, wiretaps, params)
        assert io.canonical_dumps(res.to_dict()) == io.canonical_dumps(again.to_dict())


def _kl_bits(p, q):
    nz = p > 0
    return float(np.sum(p[nz] * np.log2(p[nz] / q[nz])))


def test_criterion_09_case2_prior_free_certificate():
    n, a, b = 6, 1 / 6, 1 / 2
    rng = np.random.default_rng(109)
    with Timer(30):
        pc, code = case2_partition_code(n, 1 - b)
        f = theta_size(n, a)
        thetas = [ThetaSubset.random(n, f, rng) for _ in range(64)] + adversarial_thetas(pc, f)
        assert len(thetas) == 72
        bound = case2_leakage_bound(n, a, b)
        priors = [rng.dirichlet(np.ones(code.message_count)) for _ in range(8)]
        priors.append(np.eye(code.message_count)[0] * 0.5 + 0.5 / code.message_count)
        for t in thetas:
            cert = case2_certificate(code, t)
            assert cert <= bound, sorted(t.members)
            rows = induced_message_channel(code, v_theta_channel(t)).rows
            for prior in priors:
                assert joint_mi(prior[:, None] * rows) <= cert + 1e-9


def test_criterion_10_case1_attack():
    n, a, g = 6, 0.5, 2.0**-6
    with Timer(10):
        att = case1_attack(naive_identity_code(n), a, g)
        assert att.b == 0.0
        # independent recomputation: the identity decoder succeeds exactly on Theta
        rows = v_theta_channel(att.theta).rows
        success = float(att.prior.probs @ np.diag(rows))
        assert success == pytest.approx(att.eve_success, abs=1e-12)
        assert att.eve_success >= 1 - g
        assert att.fano_bound >= (a - 0.0) * (1 - g) - h2(g) / n


def test_criterion_11_gavc_erasure_gap():
    theta = ThetaSubset.random(6, 8, np.random.default_rng(111))
    err = per_message_error(naive_identity_code(6, erasure=True), gavc_erasure_channel(theta))
    assert err.max() == 1.0
    assert err.mean() == 0.125


def test_criterion_12_single_letter_degraded_bsc():
    family = AvwcFamily.from_lists([Channel.bsc(0.1)], [Channel.bsc(0.3)])
    with Timer(120):
        res = optimize_single_letter(family, grid=1e-2)
    assert res.value >= h2(0.3) - h2(0.1) - 2e-3
