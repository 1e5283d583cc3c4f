"""Block-level codes, wiretap families and error/leakage criteria."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .probability import (
    DEFAULT_CELL_CAP,
    LN2,
    Channel,
    Distribution,
    _kl_rows_nats,
    compose_channels,
    product_channel,
)

ERROR = -1
"""Decoder output that always counts as a decoding error."""


@dataclass(frozen=True, eq=False)
class RandomEncoderCode:
    """Stochastic encoder (messages -> input words) with a total decoder.

    ``decoder[y]`` is a message id or ``ERROR``.
    """

    encoder: Channel
    decoder: np.ndarray

    def __post_init__(self):
        if not isinstance(self.encoder, Channel):
            object.__setattr__(self, "encoder", Channel(self.encoder))
        dec = np.array(self.decoder, dtype=np.int64)
        if dec.ndim != 1 or dec.size < 1:
            raise ValueError("decoder must be a non-empty vector")
        if dec.min() < ERROR or dec.max() >= self.message_count:
            raise ValueError("decoder maps outside the message set")
        dec.setflags(write=False)
        object.__setattr__(self, "decoder", dec)

    @property
    def message_count(self) -> int:
        return self.encoder.input_size

    @property
    def input_size(self) -> int:
        return self.encoder.output_size

    @property
    def output_size(self) -> int:
        return self.decoder.size

    def decoding_sets(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.decoder == u) for u in range(self.message_count)]

    def __eq__(self, other):
        if not isinstance(other, RandomEncoderCode):
            return NotImplemented
        return self.encoder == other.encoder and np.array_equal(self.decoder, other.decoder)

    __hash__ = None


@dataclass(frozen=True)
class StateSequence:
    states: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(int(s) for s in self.states))
        if any(s < 0 for s in self.states):
            raise ValueError("state indices must be non-negative")

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class AvwcFamily:
    """Per-letter (main, wiretap) channel pairs indexed by state."""

    states: tuple[tuple[Channel, Channel], ...]

    def __post_init__(self):
        pairs = tuple((_chan(m), _chan(w)) for m, w in self.states)
        if not pairs:
            raise ValueError("a family needs at least one state")
        m0, w0 = pairs[0]
        for s, (m, w) in enumerate(pairs):
            if m.input_size != m0.input_size or w.input_size != m0.input_size:
                raise ValueError(f"state {s}: input alphabet differs")
            if m.output_size != m0.output_size:
                raise ValueError(f"state {s}: main output alphabet differs")
            if w.output_size != w0.output_size:
                raise ValueError(f"state {s}: wiretap output alphabet differs")
        object.__setattr__(self, "states", pairs)

    @classmethod
    def from_lists(cls, mains: Sequence, wiretaps: Sequence) -> "AvwcFamily":
        if len(mains) != len(wiretaps):
            raise ValueError("need one wiretap per main channel")
        return cls(tuple(zip(mains, wiretaps)))

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def mains(self) -> list[Channel]:
        return [m for m, _ in self.states]

    @property
    def wiretaps(self) -> list[Channel]:
        return [w for _, w in self.states]

    @property
    def input_size(self) -> int:
        return self.states[0][0].input_size

    def sequences(self, n: int):
        for seq in itertools.product(range(self.num_states), repeat=n):
            yield StateSequence(seq)

    def block_instance(self, n: int, cell_cap: int = DEFAULT_CELL_CAP) -> "GavwcInstance":
        """All |S|^n memoryless block channels as an explicit general instance."""
        seqs = list(self.sequences(n))
        mains = [state_sequence_channel(self, s, "main", cell_cap) for s in seqs]
        wiretaps = [state_sequence_channel(self, s, "wiretap", cell_cap) for s in seqs]
        return GavwcInstance(n, tuple(mains), tuple(wiretaps))


@dataclass(frozen=True)
class GavwcInstance:
    """Explicit block-length-n lists of main and wiretap channels."""

    block_length: int
    mains: tuple[Channel, ...]
    wiretaps: tuple[Channel, ...]

    def __post_init__(self):
        mains = tuple(_chan(m) for m in self.mains)
        wiretaps = tuple(_chan(w) for w in self.wiretaps)
        if not mains or not wiretaps:
            raise ValueError("need at least one main and one wiretap channel")
        if len({m.shape for m in mains}) != 1:
            raise ValueError("main channels must share alphabets")
        if len({w.shape for w in wiretaps}) != 1:
            raise ValueError("wiretap channels must share alphabets")
        if mains[0].input_size != wiretaps[0].input_size:
            raise ValueError("main and wiretap channels must share the input alphabet")
        object.__setattr__(self, "mains", mains)
        object.__setattr__(self, "wiretaps", wiretaps)

    @property
    def min_wiretap_entry(self) -> float:
        """v_n: smallest positive transition probability over all wiretaps."""
        return min(w.min_positive() for w in self.wiretaps)


def _chan(c) -> Channel:
    return c if isinstance(c, Channel) else Channel(c)


def state_sequence_channel(family: AvwcFamily, seq, side: str = "main",
                           cell_cap: int = DEFAULT_CELL_CAP) -> Channel:
    states = seq.states if isinstance(seq, StateSequence) else tuple(seq)
    if not states:
        raise ValueError("empty state sequence")
    if side not in ("main", "wiretap"):
        raise ValueError(f"side must be 'main' or 'wiretap', got {side!r}")
    k = 0 if side == "main" else 1
    for s in states:
        if not 0 <= s < family.num_states:
            raise ValueError(f"state {s} out of range for {family.num_states} states")
    return product_channel([family.states[s][k] for s in states], cell_cap)


def induced_message_channel(code: RandomEncoderCode, ch: Channel) -> Channel:
    return compose_channels(code.encoder, ch)


def leakage_profile(code: RandomEncoderCode, wiretap: Channel) -> np.ndarray:
    """D_V(u) in bits for every message, against the uniform-prior output law."""
    rows = induced_message_channel(code, wiretap).rows
    marginal = rows.mean(axis=0)
    d = _kl_rows_nats(rows, marginal)
    # every row is a mixture component of the marginal, so support cannot escape
    assert np.all(np.isfinite(d)), "leakage profile support escaped the marginal"
    return d / LN2


def per_message_error(code: RandomEncoderCode, main: Channel) -> np.ndarray:
    rows = induced_message_channel(code, main).rows
    if rows.shape[1] != code.output_size:
        raise ValueError("decoder is not defined on the main channel's outputs")
    correct = np.zeros(code.message_count)
    hit = code.decoder >= 0
    np.add.at(correct, code.decoder[hit], rows[code.decoder[hit], np.flatnonzero(hit)])
    return np.clip(1.0 - correct, 0.0, 1.0)


def average_error(code: RandomEncoderCode, main: Channel) -> float:
    return float(per_message_error(code, main).mean())


def max_error(code: RandomEncoderCode, main: Channel) -> float:
    return float(per_message_error(code, main).max())


def uniform_delta_bound(instance) -> float:
    """log2(1/v_n); bounds D_V(u) for every code on the instance's wiretaps."""
    if isinstance(instance, GavwcInstance):
        v = instance.min_wiretap_entry
    else:
        v = min(_chan(w).min_positive() for w in instance)
    if v <= 0:
        raise ValueError("minimum positive wiretap entry must be > 0")
    return max(-math.log2(v), 0.0)


def uniform_message_prior(code: RandomEncoderCode) -> Distribution:
    return Distribution.uniform(code.message_count)


def block_length_of(code: RandomEncoderCode, letter_size: int) -> int:
    """n such that letter_size**n == code.input_size."""
    if letter_size == 1:
        if code.input_size != 1:
            raise ValueError("code input alphabet does not match the family")
        return 1
    n = round(math.log(code.input_size, letter_size))
    if n < 1 or letter_size**n != code.input_size:
        raise ValueError(f"code input size {code.input_size} is not a power of {letter_size}")
    return n
