"""Independent reference computations used by the tests.

None of these call into the library's numerical kernels: they re-derive
each quantity by a different route (scalar math, Monte Carlo, Gauss-Legendre
quadrature on kink-aligned segments, exhaustive scan).
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def sigmoid_kernel(lam, lam_bar, beta, zeta) -> float:
    """Direct product of per-dimension sigmoid powers, scalar math only."""
    out = 1.0
    for x, xb, b, z in zip(lam, lam_bar, beta, zeta):
        out *= (1.0 / (1.0 + math.exp(b * (xb - x)))) ** z
    return out


def mc_trust(lower, upper, lam_bar, beta, zeta, samples: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    lam = rng.uniform(lower, upper, size=(samples, len(lower)))
    x = np.asarray(beta) * (np.asarray(lam_bar) - lam)
    return float(np.prod((1.0 / (1.0 + np.exp(x))) ** np.asarray(zeta), axis=1).mean())


def psi_ref(x: float, lo: float, hi: float) -> float:
    if x <= lo:
        return 1.0
    if x >= hi:
        return 0.0
    return (hi - x) / (hi - lo)


def _segment_nodes(breaks, order: int = 3):
    """Gauss-Legendre nodes and weights on every segment between sorted breakpoints."""
    g, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        nodes.extend(0.5 * (b - a) * g + 0.5 * (a + b))
        weights.extend(0.5 * (b - a) * w)
    return np.array(nodes), np.array(weights)


def brute_force_fit_2d(success, total, resolution: float):
    """Exhaustive scan of every (l1, u1, l2, u2) lattice tuple.

    The objective is the integral of (prod psi - tau_hat)^2 over the cells of
    non-empty bins.  Breakpoints include every lattice point and bin edge, so
    each segment is polynomial and 3-point Gauss-Legendre is exact.  Ties
    (within 1e-12) go to the smallest summed width, then to the smallest
    lower bounds in lexicographic order.

    Returns ``(objective, (l1, u1, l2, u2))``.
    """
    bins = success.shape[0]
    steps = round(1 / resolution)
    lattice = [k / steps for k in range(steps + 1)]
    breaks = np.unique(np.r_[np.arange(steps + 1) / steps, np.arange(bins + 1) / bins])
    x, w = _segment_nodes(breaks)
    cell = np.minimum((x * bins).astype(int), bins - 1)
    mask = total > 0
    rate = np.where(mask, success / np.maximum(total, 1), 0.0)
    m2 = mask[cell[:, None], cell[None, :]] * np.outer(w, w)
    c2 = rate[cell[:, None], cell[None, :]]
    pairs = [(lo, hi) for lo in lattice for hi in lattice if lo <= hi]
    psi_tab = np.array([[psi_ref(xx, lo, hi) for xx in x] for lo, hi in pairs])
    results = []
    for (a, pa), (b, pb) in itertools.product(enumerate(pairs), repeat=2):
        tau = np.outer(psi_tab[a], psi_tab[b])
        obj = float((m2 * (tau - c2) ** 2).sum())
        results.append((obj, pa[1] - pa[0] + pb[1] - pb[0], pa[0], pb[0], pa + pb))
    best = min(r[0] for r in results)
    tied = [r for r in results if r[0] <= best + 1e-12]
    tied.sort(key=lambda r: (round(r[1], 9), r[2], r[3]))
    return max(tied[0][0], 0.0), tied[0][4]
