"""Finite-alphabet distributions, channels and information functionals.

All reported quantities are in bits.  Sums are accumulated in nats and
converted once at the end.
"""
from __future__ import annotations

import math
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

PROB_TOL = 1e-9
# sums this close to 1 are left alone so that reloading a saved matrix is exact
ROUNDING_TOL = 1e-12
DEFAULT_CELL_CAP = 2**20
LN2 = math.log(2.0)


class AlphabetTooLarge(ValueError):
    """Raised when a product alphabet would exceed the configured cell cap."""


class _Infinite:
    """Typed +inf for divergences whose first argument escapes the support of
    the second.  Deliberately has no arithmetic so it cannot leak into sums."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __float__(self):
        return math.inf

    def __eq__(self, other):
        return isinstance(other, _Infinite)

    def __hash__(self):
        return hash("avwc.INFINITE")

    def __gt__(self, other):
        return not isinstance(other, _Infinite)

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, _Infinite)


INFINITE = _Infinite()


def is_infinite(x) -> bool:
    return x is INFINITE


def _check_probs(probs: np.ndarray, what: str) -> np.ndarray:
    if probs.ndim != 1 or probs.size < 1:
        raise ValueError(f"{what} must be a non-empty vector")
    if not np.all(np.isfinite(probs)):
        raise ValueError(f"{what} has non-finite entries")
    if probs.min() < -PROB_TOL:
        raise ValueError(f"{what} has negative entry {probs.min()!r}")
    total = probs.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise ValueError(f"{what} sums to {total!r}, not 1")
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    return probs if abs(total - 1.0) <= ROUNDING_TOL else probs / total


class Distribution:
    """Immutable probability vector over symbols ``0..size-1``."""

    __slots__ = ("_p",)

    def __init__(self, probs):
        p = _check_probs(np.array(probs, dtype=float), "distribution")
        p.setflags(write=False)
        self._p = p

    @classmethod
    def uniform(cls, size: int) -> "Distribution":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point(cls, size: int, symbol: int) -> "Distribution":
        p = np.zeros(size)
        p[symbol] = 1.0
        return cls(p)

    @property
    def probs(self) -> np.ndarray:
        return self._p

    @property
    def size(self) -> int:
        return self._p.size

    def __len__(self):
        return self._p.size

    def __array__(self, dtype=None, copy=None):
        return self._p if dtype is None else self._p.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self._p, other._p)

    def __hash__(self):
        return hash(self._p.tobytes())

    def __repr__(self):
        return f"Distribution({self._p.tolist()!r})"


class Channel:
    """Immutable row-stochastic matrix; row ``x`` is the output law given ``x``."""

    __slots__ = ("_rows",)

    def __init__(self, rows):
        m = np.array(rows, dtype=float)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError("channel must be a non-empty 2-d matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("channel has non-finite entries")
        if m.min() < -PROB_TOL:
            raise ValueError(f"channel has negative entry {m.min()!r}")
        sums = m.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL)
        if bad.size:
            raise ValueError(f"channel row {int(bad[0])} sums to {sums[bad[0]]!r}, not 1")
        m = np.clip(m, 0.0, None)
        sums = m.sum(axis=1, keepdims=True)
        m = np.where(np.abs(sums - 1.0) <= ROUNDING_TOL, m, m / sums)
        m.setflags(write=False)
        self._rows = m

    @classmethod
    def identity(cls, size: int) -> "Channel":
        return cls(np.eye(size))

    @classmethod
    def constant(cls, input_size: int, row) -> "Channel":
        return cls(np.tile(np.asarray(row, dtype=float), (input_size, 1)))

    @classmethod
    def bsc(cls, p: float) -> "Channel":
        return cls([[1 - p, p], [p, 1 - p]])

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def input_size(self) -> int:
        return self._rows.shape[0]

    @property
    def output_size(self) -> int:
        return self._rows.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._rows.shape

    def row(self, x: int) -> Distribution:
        return Distribution(self._rows[x])

    def min_positive(self) -> float:
        return float(self._rows[self._rows > 0].min())

    def __array__(self, dtype=None, copy=None):
        return self._rows if dtype is None else self._rows.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Channel):
            return NotImplemented
        return np.array_equal(self._rows, other._rows)

    def __hash__(self):
        return hash((self._rows.shape, self._rows.tobytes()))

    def __repr__(self):
        return f"Channel({self.input_size}x{self.output_size})"


def as_probs(p) -> np.ndarray:
    if isinstance(p, Distribution):
        return p.probs
    return Distribution(p).probs


def as_rows(ch) -> np.ndarray:
    if isinstance(ch, Channel):
        return ch.rows
    return Channel(ch).rows


def _same_size(p: np.ndarray, q: np.ndarray):
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.size} vs {q.size}")


def _plogp_nats(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(np.sum(nz * np.log(nz)))


def entropy(p) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    return -_plogp_nats(as_probs(p)) / LN2


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -(x * math.log2(x) + (1 - x) * math.log2(1 - x))


def kl_divergence(p, q):
    """D(p || q) in bits, or ``INFINITE`` when supp p is not inside supp q."""
    p, q = as_probs(p), as_probs(q)
    _same_size(p, q)
    mask = p > 0
    if np.any(q[mask] == 0):
        return INFINITE
    return max(float(np.sum(p[mask] * np.log(p[mask] / q[mask]))) / LN2, 0.0)


def _kl_rows_nats(rows: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Row-wise KL(rows[i] || ref) in nats; inf where support escapes."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rows > 0, rows / ref, 1.0)
        terms = np.where(rows > 0, rows * np.log(ratio), 0.0)
    return np.maximum(terms.sum(axis=-1), 0.0)


def total_variation(p, q) -> float:
    p, q = as_probs(p), as_probs(q)
    _same_size(p, q)
    return min(0.5 * float(np.abs(p - q).sum()), 1.0)


def output_distribution(inp, ch) -> Distribution:
    p, w = as_probs(inp), as_rows(ch)
    if p.size != w.shape[0]:
        raise ValueError(f"input size {p.size} != channel input size {w.shape[0]}")
    return Distribution(p @ w)


def _mutual_information_rows(p: np.ndarray, w: np.ndarray) -> float:
    marginal = p @ w
    d = _kl_rows_nats(w, marginal)
    return max(float(np.sum(p[p > 0] * d[p > 0])), 0.0) / LN2


def mutual_information(inp, ch) -> float:
    """I(X;Y) in bits for input law ``inp`` through ``ch``."""
    p, w = as_probs(inp), as_rows(ch)
    if p.size != w.shape[0]:
        raise ValueError(f"input size {p.size} != channel input size {w.shape[0]}")
    return _mutual_information_rows(p, w)


def compose_channels(first, second) -> Channel:
    a, b = as_rows(first), as_rows(second)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot compose {a.shape} with {b.shape}")
    return Channel(a @ b)


def product_channel(factors: Sequence, cell_cap: int = DEFAULT_CELL_CAP) -> Channel:
    """Memoryless product of ``factors``.

    Word ids are little-endian mixed-radix: the first factor is the least
    significant digit.
    """
    if not factors:
        raise ValueError("product_channel needs at least one factor")
    mats = [as_rows(f) for f in factors]
    rows = math.prod(m.shape[0] for m in mats)
    cols = math.prod(m.shape[1] for m in mats)
    if rows * cols > cell_cap:
        raise AlphabetTooLarge(f"product channel {rows}x{cols} exceeds cap of {cell_cap} cells")
    return Channel(reduce(np.kron, reversed(mats)))


def information_radius_bound(rows: Iterable, reference):
    """max_i D(rows[i] || reference): an upper bound on I(U;Z) for every prior."""
    ref = as_probs(reference)
    mat = np.array([as_probs(r) for r in rows])
    if mat.ndim != 2 or mat.shape[1] != ref.size:
        raise ValueError("rows and reference must share a dimension")
    d = _kl_rows_nats(mat, ref)
    worst = float(d.max())
    if math.isinf(worst):
        return INFINITE
    return worst / LN2


def to_bits(nats: float) -> float:
    return nats / LN2
