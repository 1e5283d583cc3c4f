"""Independent reference computations used only by the tests.

Everything here is written with plain loops or mpmath so it shares no code
with the package.
"""
import itertools

import mpmath as mp
import numpy as np

mp.mp.dps = 50


def mp_entropy(p):
    return float(-sum(mp.mpf(x) * mp.log(mp.mpf(x), 2) for x in p if x > 0))


def mp_kl(p, q):
    total = mp.mpf(0)
    for a, b in zip(p, q):
        if a > 0:
            if b == 0:
                return float("inf")
            total += mp.mpf(a) * mp.log(mp.mpf(a) / mp.mpf(b), 2)
    return float(total)


def h2(x):
    return mp_entropy([x, 1 - x])


def loop_mi(p, w):
    """I(X;Y) from the joint table, with explicit loops."""
    w = np.asarray(w, dtype=float)
    m, k = w.shape
    joint = [[p[x] * w[x, y] for y in range(k)] for x in range(m)]
    py = [sum(joint[x][y] for x in range(m)) for y in range(k)]
    total = mp.mpf(0)
    for x in range(m):
        for y in range(k):
            if joint[x][y] > 0:
                total += mp.mpf(joint[x][y]) * mp.log(mp.mpf(joint[x][y]) / (mp.mpf(p[x]) * py[y]), 2)
    return float(total)


def loop_compose(a, b):
    a, b = np.asarray(a), np.asarray(b)
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


def enumerate_product(factors):
    """Product channel by enumerating words; letter 0 is the least significant digit."""
    mats = [np.asarray(f) for f in factors]
    ins = [m.shape[0] for m in mats]
    outs = [m.shape[1] for m in mats]
    out = np.zeros((int(np.prod(ins)), int(np.prod(outs))))
    for xs in itertools.product(*[range(s) for s in ins]):
        xi = sum(x * int(np.prod(ins[:i])) for i, x in enumerate(xs))
        for ys in itertools.product(*[range(s) for s in outs]):
            yi = sum(y * int(np.prod(outs[:i])) for i, y in enumerate(ys))
            out[xi, yi] = np.prod([mats[i][xs[i], ys[i]] for i in range(len(mats))])
    return out


def brute_errors(encoder, decoder, main):
    """Per-message error by summing over every (input word, output word)."""
    enc, main = np.asarray(encoder), np.asarray(main)
    errs = []
    for u in range(enc.shape[0]):
        ok = 0.0
        for x in range(enc.shape[1]):
            for y in range(main.shape[1]):
                if decoder[y] == u:
                    ok += enc[u, x] * main[x, y]
        errs.append(1.0 - ok)
    return errs


def brute_naive_leakage(n, theta, prior=None):
    """I(M;Y) for the rate-1 identity code through the Theta channel, from the joint law."""
    size = 2**n
    prior = [1.0 / size] * size if prior is None else list(prior)
    rows = np.zeros((size, size))
    for m in range(size):
        for y in range(size):
            if m in theta:
                rows[m, y] = 1.0 if y == m else 0.0
            else:
                rows[m, y] = 1.0 / size
    return joint_mi(np.array(prior)[:, None] * rows)


def joint_mi(joint):
    """I from a joint table: sum P(m,y) log2 P(m,y) / (P(m) P(y))."""
    joint = np.asarray(joint, dtype=float)
    pm = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log2(joint[nz] / (pm * py)[nz])))


def brute_ss(rows, prior, labels):
    """Adversary minus simulator for one (prior, f) with an exact MAP guesser."""
    rows = np.asarray(rows)
    cells = max(labels) + 1
    adv = 0.0
    for z in range(rows.shape[1]):
        best = 0.0
        for v in range(cells):
            best = max(best, sum(prior[u] * rows[u, z] for u in range(len(labels)) if labels[u] == v))
        adv += best
    sim = max(sum(prior[u] for u in range(len(labels)) if labels[u] == v) for v in range(cells))
    return adv - sim


def random_channel(rng, m, k, alpha=1.0):
    return rng.dirichlet(np.full(k, alpha), size=m)


def random_dist(rng, m, alpha=1.0):
    return rng.dirichlet(np.full(m, alpha))


GRID_STEP = 1e-2


def grid_min_residual(mains, step=GRID_STEP):
    """min over a grid of binary-state symmetrizers of the max equality residual."""
    w = np.array([m.rows for m in mains])
    ticks = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    t0, t1 = np.meshgrid(ticks, ticks, indexing="ij")
    # T(0|x) = t_x; a[x, x', y] = sum_s W_s(y|x) T(s|x')
    t = np.stack([np.stack([t0, 1 - t0], -1), np.stack([t1, 1 - t1], -1)], axis=-2)
    a = np.einsum("sxy,...ks->...xky", w, t)
    res = np.abs(a - np.swapaxes(a, -3, -2)).max(axis=(-3, -2, -1))
    return float(res.min())


def grid_slack(num_states, step=GRID_STEP):
    # each side moves by at most |S| * step/2 when T is rounded to the grid
    return num_states * step
