import numpy as np
import pytest

from avwc.counterexample import ThetaSubset, naive_identity_code, strong_leakage_closed_form, v_theta_channel
from avwc.model import (
    ERROR,
    AvwcFamily,
    GavwcInstance,
    RandomEncoderCode,
    StateSequence,
    average_error,
    block_length_of,
    induced_message_channel,
    leakage_profile,
    max_error,
    per_message_error,
    state_sequence_channel,
    uniform_delta_bound,
)
from avwc.probability import Channel, Distribution, mutual_information, product_channel
from oracles import brute_errors, brute_naive_leakage, enumerate_product, loop_compose, random_channel


def _random_code(rng, j, x, y):
    enc = random_channel(rng, j, x, 0.5)
    dec = rng.integers(-1, j, size=y)
    return RandomEncoderCode(Channel(enc), dec)


def _binary_family(rng):
    return AvwcFamily.from_lists([random_channel(rng, 2, 2) for _ in range(2)],
                                 [random_channel(rng, 2, 3) for _ in range(2)])


def test_code_validation():
    with pytest.raises(ValueError):
        RandomEncoderCode(Channel.identity(2), np.array([0, 2]))
    with pytest.raises(ValueError):
        RandomEncoderCode(Channel.identity(2), np.array([0, -2]))
    code = RandomEncoderCode(Channel.identity(3), np.array([0, ERROR, 2]))
    assert code.message_count == 3
    assert [s.tolist() for s in code.decoding_sets()] == [[0], [], [2]]


def test_family_validation():
    with pytest.raises(ValueError):
        AvwcFamily.from_lists([Channel.identity(2), Channel.identity(3)], [Channel.identity(2)] * 2)
    with pytest.raises(ValueError):
        AvwcFamily(())
    with pytest.raises(ValueError):
        StateSequence((0, -1))


def test_state_sequence_channel_examples():
    rng = np.random.default_rng(1)
    fam = _binary_family(rng)
    assert state_sequence_channel(fam, (1,), "main") == fam.mains[1]
    same = state_sequence_channel(fam, (0, 0, 0), "wiretap")
    assert np.allclose(same.rows, product_channel([fam.wiretaps[0]] * 3).rows, atol=1e-12)
    mixed = state_sequence_channel(fam, StateSequence((0, 1)), "main")
    assert np.allclose(mixed.rows, enumerate_product([fam.mains[0].rows, fam.mains[1].rows]), atol=1e-15)
    with pytest.raises(ValueError):
        state_sequence_channel(fam, (2,), "main")
    with pytest.raises(ValueError):
        state_sequence_channel(fam, (0,), "sideways")


def test_block_instance_enumerates_all_sequences():
    fam = _binary_family(np.random.default_rng(2))
    inst = fam.block_instance(3)
    assert len(inst.mains) == len(inst.wiretaps) == 8
    assert inst.mains[0].shape == (8, 8)
    assert inst.wiretaps[0].shape == (8, 27)


def test_induced_message_channel():
    rng = np.random.default_rng(3)
    ch = Channel(random_channel(rng, 4, 3))
    det = RandomEncoderCode(Channel(np.eye(4)[[2, 0]]), np.zeros(3, dtype=int))
    assert np.array_equal(induced_message_channel(det, ch).rows, ch.rows[[2, 0]])
    flat = RandomEncoderCode(Channel(np.full((3, 4), 0.25)), np.zeros(3, dtype=int))
    rows = induced_message_channel(flat, ch).rows
    assert np.allclose(rows, ch.rows.mean(axis=0))
    code = _random_code(rng, 3, 4, 3)
    assert np.allclose(induced_message_channel(code, ch).rows, loop_compose(code.encoder.rows, ch.rows))


def test_leakage_profile_examples():
    rng = np.random.default_rng(4)
    w = Channel(random_channel(rng, 4, 3))
    same = RandomEncoderCode(Channel(np.tile(random_channel(rng, 1, 4), (3, 1))), np.zeros(3, dtype=int))
    assert np.allclose(leakage_profile(same, w), 0.0, atol=1e-15)
    single = RandomEncoderCode(Channel(random_channel(rng, 1, 4)), np.zeros(3, dtype=int))
    assert np.allclose(leakage_profile(single, w), 0.0, atol=1e-15)
    naive = naive_identity_code(2)
    theta = ThetaSubset(2, frozenset({1}))
    prof = leakage_profile(naive, v_theta_channel(theta))
    assert prof.mean() == pytest.approx(brute_naive_leakage(2, {1}), abs=1e-12)
    assert prof.mean() == pytest.approx(strong_leakage_closed_form(2, 1), abs=1e-12)


def test_mean_profile_is_uniform_mutual_information():
    rng = np.random.default_rng(5)
    for _ in range(30):
        j, x, z = rng.integers(1, 5, size=3)
        code = _random_code(rng, j, x, 2)
        w = Channel(random_channel(rng, x, z, 0.4))
        mi = mutual_information(Distribution.uniform(j), induced_message_channel(code, w))
        assert leakage_profile(code, w).mean() == pytest.approx(mi, abs=1e-9)


def test_error_examples():
    ident = RandomEncoderCode(Channel.identity(4), np.arange(4))
    assert average_error(ident, Channel.identity(4)) == 0.0
    # completely noisy channel, J equal decoding cells
    noisy = Channel(np.full((6, 6), 1 / 6))
    code = RandomEncoderCode(Channel(np.eye(6)[[0, 2, 4]]), np.arange(6) // 2)
    assert average_error(code, noisy) == pytest.approx(1 - 1 / 3, abs=1e-15)


def test_errors_match_enumeration_and_order():
    rng = np.random.default_rng(6)
    for _ in range(30):
        j, x, y = rng.integers(1, 5, size=3)
        code = _random_code(rng, j, x, y)
        main = Channel(random_channel(rng, x, y, 0.5))
        assert np.allclose(per_message_error(code, main), brute_errors(code.encoder.rows, code.decoder, main.rows),
                           atol=1e-12)
        assert average_error(code, main) <= max_error(code, main) + 1e-15


def test_error_symbol_always_counts_as_error():
    code = RandomEncoderCode(Channel.identity(2), np.array([0, ERROR]))
    assert per_message_error(code, Channel.identity(2)).tolist() == [0.0, 1.0]


def test_uniform_delta_bound_examples():
    exact = GavwcInstance(2, (Channel.identity(4),), (Channel(np.full((4, 4), 0.25)),))
    assert uniform_delta_bound(exact) == pytest.approx(2.0)
    assert uniform_delta_bound([Channel.identity(3)]) == 0.0
    theta = ThetaSubset(3, frozenset({0, 5}))
    assert uniform_delta_bound([v_theta_channel(theta)]) == pytest.approx(3.0)


def test_uniform_delta_bound_dominates_profiles():
    rng = np.random.default_rng(7)
    for _ in range(50):
        j, x, z = rng.integers(1, 6, size=3)
        code = _random_code(rng, j, x, 2)
        w = Channel(random_channel(rng, x, z, 0.3))
        assert leakage_profile(code, w).max() <= uniform_delta_bound([w]) + 1e-9


def test_block_length_of():
    assert block_length_of(naive_identity_code(3), 2) == 3
    with pytest.raises(ValueError):
        block_length_of(naive_identity_code(3), 3)
