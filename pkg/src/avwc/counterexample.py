"""The noiseless-main / Theta-wiretap system and the erasure GAVC.

Words of length n are integer ids in ``range(2**n)``; bit i of the id is
letter i, so the all-zero word is id 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ERROR, RandomEncoderCode, induced_message_channel, per_message_error
from .probability import (
    DEFAULT_CELL_CAP,
    AlphabetTooLarge,
    Channel,
    Distribution,
    binary_entropy,
    entropy,
    information_radius_bound,
    mutual_information,
)

MAX_N = 10


def _check_n(n: int):
    if n < 1:
        raise ValueError("block length must be positive")
    if n > MAX_N or 4**n > DEFAULT_CELL_CAP:
        raise AlphabetTooLarge(f"n={n} exceeds the enumeration cap")


def theta_size(n: int, a: float) -> int:
    """f(n) = ceil(2^{na}), ignoring float noise just above an integer."""
    return int(math.ceil(2.0 ** (n * a) - 1e-9))


@dataclass(frozen=True)
class ThetaSubset:
    n: int
    members: frozenset[int]

    def __post_init__(self):
        members = frozenset(int(m) for m in self.members)
        if any(not 0 <= m < 2**self.n for m in members):
            raise ValueError("Theta members must be words of length n")
        object.__setattr__(self, "members", members)

    @property
    def size(self) -> int:
        return len(self.members)

    def mask(self) -> np.ndarray:
        out = np.zeros(2**self.n, dtype=bool)
        out[list(self.members)] = True
        return out

    @classmethod
    def random(cls, n: int, f: int, rng: np.random.Generator) -> "ThetaSubset":
        return cls(n, frozenset(rng.choice(2**n, size=f, replace=False).tolist()))


def v_theta_channel(theta: ThetaSubset) -> Channel:
    """Identity on Theta, completely noisy (uniform) off Theta."""
    _check_n(theta.n)
    size = 2**theta.n
    rows = np.full((size, size), 1.0 / size)
    on = theta.mask()
    rows[on] = np.eye(size)[on]
    return Channel(rows)


def naive_identity_code(n: int, erasure: bool = False) -> RandomEncoderCode:
    """Rate-1 code: message = input word, decoder = identity.

    With ``erasure`` the decoder gains one extra output (the erasure symbol)
    mapped to ``ERROR``.
    """
    _check_n(n)
    size = 2**n
    dec = np.arange(size)
    if erasure:
        dec = np.append(dec, ERROR)
    return RandomEncoderCode(Channel.identity(size), dec)


def strong_leakage_closed_form(n: int, f: int) -> float:
    """Uniform-message leakage of the naive code through any V_Theta with |Theta| = f."""
    size = 2**n
    if not 1 <= f <= size:
        raise ValueError("need 1 <= f <= 2^n")
    r = f / size
    first = f * n / size
    second = -((size - f) ** 2 / size**2) * math.log2(1.0 - r) if f < size else 0.0
    third = -((2 * size - f) * f / size**2) * math.log2(2.0 - r)
    return first + second + third


def skewed_prior(n: int) -> Distribution:
    """Half the mass on the all-zero word, the rest spread uniformly."""
    size = 2**n
    p = np.full(size, 1.0 / (2 * (size - 1)))
    p[0] = 0.5
    return Distribution(p)


def skewed_attack_bound(n: int, f: int) -> float:
    size = 2**n
    return 0.5 * math.log2(2.0 / (1.0 + (size - f) / (size * (size - 1))))


@dataclass(frozen=True)
class SkewedAttack:
    n: int
    f: int
    bound: float
    exact: float


def skewed_attack(n: int, f: int, theta: ThetaSubset | None = None) -> SkewedAttack:
    """Leakage of the naive code under the skewed prior, with Theta containing 0."""
    if n < 1:
        raise ValueError("block length must be positive")
    if theta is None:
        theta = ThetaSubset(n, frozenset(range(f)))
    if theta.n != n or theta.size != f:
        raise ValueError("Theta does not match (n, f)")
    if 0 not in theta.members:
        raise ValueError("the skewed attack needs the all-zero word in Theta")
    bound = skewed_attack_bound(n, f)
    exact = mutual_information(skewed_prior(n), v_theta_channel(theta))
    if exact < bound - 1e-12:
        raise AssertionError(f"exact leakage {exact} fell below the closed-form bound {bound}")
    return SkewedAttack(n, f, bound, exact)


# Case 1: rate above 1 - a --------------------------------------------------

@dataclass(frozen=True)
class Case1Attack:
    n: int
    a: float
    b: float
    g: float
    covered: int
    theta: ThetaSubset
    prior: Distribution
    eve_success: float
    legit_error: float
    fano_bound: float
    exact_leakage: float


def _word_bits(size: int) -> int:
    n = size.bit_length() - 1
    if size != 2**n:
        raise ValueError("code input alphabet must be {0,1}^n")
    return n


def case1_attack(code: RandomEncoderCode, a: float, g: float,
                 main: Channel | None = None) -> Case1Attack:
    """Eavesdropper attack on a code of rate r > 1 - a.

    Sorts decoding sets by size (ties: lowest word id), covers the smallest
    2^{n(a-b)} of them with a Theta of size ceil(2^{na}), puts mass 1 - g on
    those messages and decodes with the code's own decoding sets through
    V_Theta.  The leakage bound is the Fano form
    (H(M) - h(Pe) - Pe log2(J - 1)) / n.
    """
    n = _word_bits(code.input_size)
    if code.output_size != code.input_size:
        raise ValueError("decoder must be defined on {0,1}^n")
    j = code.message_count
    r = math.log2(j) / n
    b = 1.0 - r
    if not r > 1.0 - a:
        raise ValueError(f"rate {r} does not exceed 1 - a = {1 - a}")
    if not 0.0 <= g < 1.0:
        raise ValueError("g must lie in [0, 1)")
    covered = max(1, int(math.floor(2.0 ** (n * (a - b)) + 1e-9)))
    covered = min(covered, j)
    f = theta_size(n, a)

    sets = code.decoding_sets()
    order = sorted(range(j), key=lambda i: (sets[i].size, sets[i].min() if sets[i].size else math.inf, i))
    cover = set()
    for i in order[:covered]:
        cover.update(int(y) for y in sets[i])
    if len(cover) > f:
        raise ValueError(f"cover of {len(cover)} words exceeds |Theta| = {f}")
    pad = (y for y in range(2**n) if y not in cover)
    while len(cover) < f:
        cover.add(next(pad))
    theta = ThetaSubset(n, frozenset(cover))

    prior = np.zeros(j)
    first = np.array(order[:covered])
    rest = np.array(order[covered:], dtype=int)
    prior[first] = (1.0 - g) / covered
    if rest.size:
        prior[rest] = g / rest.size
    else:
        prior[first] = 1.0 / covered
    prior = Distribution(prior)

    eve = 1.0 - per_message_error(code, v_theta_channel(theta))
    eve_success = float(prior.probs @ eve)
    main = main if main is not None else Channel.identity(2**n)
    legit_error = float(prior.probs @ per_message_error(code, main))

    pe = min(max(1.0 - eve_success, 0.0), 1.0)
    fano = (entropy(prior) - binary_entropy(pe) - pe * math.log2(max(j - 1, 1))) / n
    exact = mutual_information(prior, induced_message_channel(code, v_theta_channel(theta)))
    return Case1Attack(n, a, b, g, covered, theta, prior, eve_success, legit_error, fano,
                       exact / n)


# Case 2: rate below 1 - a --------------------------------------------------

@dataclass(frozen=True)
class PartitionCode:
    n: int
    rate: float
    cell_bits: int

    @property
    def cells(self) -> list[range]:
        size = 2**self.cell_bits
        return [range(i * size, (i + 1) * size) for i in range(2 ** (self.n - self.cell_bits))]


def case2_partition_code(n: int, r: float) -> tuple[PartitionCode, RandomEncoderCode]:
    """2^{nr} contiguous cells of 2^{n(1-r)} words; encoder uniform on a cell."""
    _check_n(n)
    nb = n * (1.0 - r)
    if not 0.0 <= r <= 1.0 or abs(nb - round(nb)) > 1e-9:
        raise ValueError(f"n(1-r) = {nb} must be a whole number of bits")
    nb = int(round(nb))
    pc = PartitionCode(n, r, nb)
    size = 2**n
    cells = size >> nb
    enc = np.zeros((cells, size))
    for i in range(cells):
        enc[i, i << nb:(i + 1) << nb] = 1.0 / (1 << nb)
    dec = np.arange(size) >> nb
    return pc, RandomEncoderCode(Channel(enc), dec)


def case2_leakage_bound(n: int, a: float, b: float) -> float:
    if not a < b:
        raise ValueError("need a < b")
    t = 2.0 ** (-n * (1.0 - b))
    return 2.0 ** (-n * (b - a)) * (1.0 + t) * math.log2(2.0 ** (n * (1.0 - b)) * (1.0 + t))


def case2_certificate(code: RandomEncoderCode, theta: ThetaSubset) -> float:
    """Prior-free leakage certificate: information radius against uniform Q."""
    rows = induced_message_channel(code, v_theta_channel(theta)).rows
    return float(information_radius_bound(rows, Distribution.uniform(2**theta.n)))


def adversarial_thetas(pc: PartitionCode, f: int) -> list[ThetaSubset]:
    """Theta sets packed into one cell, spread one-per-cell, and mixtures."""
    n = pc.n
    cells = pc.cells
    out = []
    cell_size = len(cells[0])
    for c in (0, len(cells) - 1):
        start = cells[c].start
        if f <= cell_size:
            out.append(ThetaSubset(n, frozenset(range(start, start + f))))
        else:
            out.append(ThetaSubset(n, frozenset((start + k) % 2**n for k in range(f))))
    for offset in (0, cell_size - 1):
        words = [cells[k % len(cells)].start + (offset + k // len(cells)) % cell_size
                 for k in range(f)]
        out.append(ThetaSubset(n, frozenset(words)))
    # half in one cell, the rest spread
    half = f // 2
    words = set(range(cells[0].start, cells[0].start + min(half, cell_size)))
    k = 1
    while len(words) < f:
        words.add(cells[k % len(cells)].start + (k // len(cells)) % cell_size)
        k += 1
    out.append(ThetaSubset(n, frozenset(words)))
    out.append(ThetaSubset(n, frozenset(range(2**n - f, 2**n))))
    out.append(ThetaSubset(n, frozenset(range(f))))
    stride = max(1, 2**n // f)
    out.append(ThetaSubset(n, frozenset(list(range(0, 2**n, stride))[:f])))
    return out


# GAVC erasure family ------------------------------------------------------

def gavc_erasure_channel(theta: ThetaSubset) -> Channel:
    """Identity off Theta; every Theta input goes to the erasure symbol (last output)."""
    _check_n(theta.n)
    size = 2**theta.n
    rows = np.zeros((size, size + 1))
    on = theta.mask()
    rows[~on, :size] = np.eye(size)[~on]
    rows[on, size] = 1.0
    return Channel(rows)
