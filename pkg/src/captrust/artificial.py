"""Artificial trust of a pragmatic (step-kernel) trustor, and identification of
capability bounds from logged task outcomes.

With an infinitely steep kernel the trust integral over a uniform belief has
a closed form: a product of piecewise-linear ramps.  A robot can fit the
ramp bounds to per-bin empirical success rates by least squares.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from captrust.belief import UniformBelief
from captrust.core import DEFAULT_BINS, DimensionError, OutcomeRecord, VectorLike, as_vector

DEFAULT_RESOLUTION = 0.05
# Objectives closer than this count as tied.
TIE_TOL = 1e-12
TIE_BREAKS = ("widest", "narrowest")


def psi(lam_bar_i: float, lower_i: float, upper_i: float) -> float:
    """Per-dimension artificial trust: 1 below ``lower_i``, 0 above ``upper_i``,
    linear in between."""
    if not (0.0 <= lower_i <= upper_i <= 1.0):
        raise ValueError(f"bounds ({lower_i}, {upper_i}) violate 0 <= lower <= upper <= 1")
    if lam_bar_i <= lower_i:
        return 1.0
    if lam_bar_i >= upper_i:
        return 0.0
    return (upper_i - lam_bar_i) / (upper_i - lower_i)


def psi_array(lam_bar, lower, upper) -> np.ndarray:
    """Broadcasting ``psi`` without bound validation."""
    lam_bar, lower, upper = np.broadcast_arrays(
        np.asarray(lam_bar, float), np.asarray(lower, float), np.asarray(upper, float)
    )
    width = upper - lower
    with np.errstate(divide="ignore", invalid="ignore"):
        ramp = (upper - lam_bar) / width
    return np.where(lam_bar <= lower, 1.0, np.where(lam_bar >= upper, 0.0, ramp))


def artificial_trust(belief: UniformBelief, lam_bar: VectorLike) -> float:
    lam_bar = as_vector(lam_bar)
    if len(lam_bar) != belief.n:
        raise DimensionError(f"task has {len(lam_bar)} dimensions, belief has {belief.n}")
    out = 1.0
    for r, (lo, hi) in zip(lam_bar, belief.intervals()):
        out *= psi(r, lo, hi)
    return out


def bin_centers(bins_per_dim: int) -> np.ndarray:
    return (np.arange(bins_per_dim) + 0.5) / bins_per_dim


def bin_index(lam_bar: VectorLike, bins_per_dim: int) -> tuple[int, ...]:
    """Bin of a requirement point; a coordinate of exactly 1 lands in the top bin."""
    return tuple(min(int(np.floor(r * bins_per_dim)), bins_per_dim - 1) for r in as_vector(lam_bar))


@dataclass
class EmpiricalTrustGrid:
    """Success and total counts of observed outcomes, binned by requirement."""

    bins_per_dim: int
    success_counts: np.ndarray
    total_counts: np.ndarray

    def __post_init__(self):
        self.success_counts = np.asarray(self.success_counts, dtype=np.int64)
        self.total_counts = np.asarray(self.total_counts, dtype=np.int64)
        shape = (self.bins_per_dim,) * self.success_counts.ndim
        if self.success_counts.shape != shape or self.total_counts.shape != shape:
            raise ValueError(f"count grids must have shape {shape}")
        if np.any(self.success_counts < 0) or np.any(self.success_counts > self.total_counts):
            raise ValueError("need 0 <= success_counts <= total_counts")

    @classmethod
    def empty(cls, n: int, bins_per_dim: int = DEFAULT_BINS) -> "EmpiricalTrustGrid":
        shape = (bins_per_dim,) * n
        return cls(bins_per_dim, np.zeros(shape, np.int64), np.zeros(shape, np.int64))

    @property
    def n(self) -> int:
        return self.total_counts.ndim

    def copy(self) -> "EmpiricalTrustGrid":
        return EmpiricalTrustGrid(self.bins_per_dim, self.success_counts.copy(), self.total_counts.copy())

    def add(self, record: OutcomeRecord) -> None:
        """In-place accumulation; see ``accumulate_outcome`` for the pure form."""
        lam_bar = record.task.requirements
        if len(lam_bar) != self.n:
            raise DimensionError(f"task has {len(lam_bar)} dimensions, grid has {self.n}")
        idx = bin_index(lam_bar, self.bins_per_dim)
        self.total_counts[idx] += 1
        self.success_counts[idx] += record.outcome

    def rates(self) -> np.ndarray:
        """Empirical success rate per bin, NaN where no task fell."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.total_counts > 0, self.success_counts / np.maximum(self.total_counts, 1), np.nan)

    def to_table(self) -> str:
        centers = bin_centers(self.bins_per_dim)
        header = [f"i{d}" for d in range(self.n)] + [f"c{d}" for d in range(self.n)] + ["successes", "totals"]
        rows = [",".join(header)]
        for idx in itertools.product(range(self.bins_per_dim), repeat=self.n):
            cells = [str(i) for i in idx] + [repr(float(centers[i])) for i in idx]
            cells += [str(int(self.success_counts[idx])), str(int(self.total_counts[idx]))]
            rows.append(",".join(cells))
        return "\n".join(rows) + "\n"

    @classmethod
    def from_table(cls, text: str) -> "EmpiricalTrustGrid":
        lines = [ln for ln in text.strip().splitlines() if ln]
        header = lines[0].split(",")
        n = sum(1 for h in header if h.startswith("i"))
        rows = [[int(c) if k < n or k >= 2 * n else float(c) for k, c in enumerate(ln.split(","))] for ln in lines[1:]]
        bins = max(r[d] for r in rows for d in range(n)) + 1
        grid = cls.empty(n, bins)
        for r in rows:
            idx = tuple(r[:n])
            grid.success_counts[idx], grid.total_counts[idx] = r[-2], r[-1]
        grid.__post_init__()
        return grid


def accumulate_outcome(grid: EmpiricalTrustGrid, record: OutcomeRecord) -> EmpiricalTrustGrid:
    out = grid.copy()
    out.add(record)
    return out


def tau_hat(grid: EmpiricalTrustGrid, bin_index: Sequence[int]) -> Optional[float]:
    """Empirical trust in one bin, or ``None`` when nothing was observed there."""
    idx = tuple(bin_index)
    total = int(grid.total_counts[idx])
    if total == 0:
        return None
    return int(grid.success_counts[idx]) / total


@dataclass(frozen=True)
class FitResult:
    belief: UniformBelief
    objective: float
    evaluations: int


def candidate_bounds(resolution: float) -> np.ndarray:
    """All lattice pairs ``(lower, upper)`` with ``lower <= upper``, shape ``(C, 2)``.

    Ordered by lower, then upper.
    """
    steps = round(1.0 / resolution)
    if steps < 1 or abs(steps * resolution - 1.0) > 1e-9:
        raise ValueError(f"resolution must divide 1 evenly, got {resolution}")
    lattice = np.arange(steps + 1) / steps
    lo, hi = np.triu_indices(steps + 1)
    return np.column_stack([lattice[lo], lattice[hi]])


def _pick(objectives: np.ndarray, widths: np.ndarray, lowers: np.ndarray, tie_break: str) -> int:
    """Argmin over flat candidates with the tolerance tie rule.

    Among candidates within TIE_TOL of the best objective, prefer the widest
    (or narrowest) total width, then the lexicographically smallest lower
    bounds.  ``lowers`` has shape ``(C, k)``.
    """
    best = objectives.min()
    tied = np.flatnonzero(objectives <= best + TIE_TOL)
    w = widths[tied]
    target = w.max() if tie_break == "widest" else w.min()
    tied = tied[np.abs(w - target) <= 1e-12]
    # lexsort uses the last key as primary
    order = np.lexsort(tuple(lowers[tied, k] for k in reversed(range(lowers.shape[1]))))
    return int(tied[order[0]])


def _check_tie_break(tie_break: str) -> None:
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}, got {tie_break!r}")


def _psi_primitive(x, lower, upper, power: int) -> np.ndarray:
    """``integral_0^x psi(t)**power dt`` for power 1 or 2, broadcasting."""
    width = upper - lower
    with np.errstate(divide="ignore", invalid="ignore"):
        ramp = lower + (width ** (power + 1) - (upper - x) ** (power + 1)) / ((power + 1) * width**power)
    return np.where(x <= lower, x, np.where(x >= upper, lower + width / (power + 1), ramp))


def cell_integrals(bins_per_dim: int, lower, upper, power: int) -> np.ndarray:
    """Integral of ``psi**power`` over each bin cell, shape ``(C, B)`` for
    ``C`` candidate bounds given as column vectors."""
    edges = np.arange(bins_per_dim + 1) / bins_per_dim
    lower = np.asarray(lower, float).reshape(-1, 1)
    upper = np.asarray(upper, float).reshape(-1, 1)
    prim = _psi_primitive(edges[None, :], lower, upper, power)
    return np.diff(prim, axis=1)


def fit_capability_bounds(
    grid: EmpiricalTrustGrid,
    resolution: float = DEFAULT_RESOLUTION,
    tie_break: str = "narrowest",
    sweeps: int = 3,
) -> FitResult:
    """Least-squares fit of the belief bounds to the grid's empirical trust.

    Minimizes the integral of ``(artificial_trust(belief, x) - tau_hat)**2``
    over the cells of the non-empty bins, where ``tau_hat`` is constant per
    bin.  Because ``psi`` is piecewise linear and the objective separates by
    dimension, each cell integral is exact (no quadrature).  Candidate bounds
    live on the lattice ``{0, resolution, ..., 1}``.  For ``n <= 2`` every
    joint combination is scanned; for larger ``n`` each dimension is scanned
    in turn for ``sweeps`` cyclic passes starting from ``U(0, 1)``.

    Objectives within TIE_TOL are tied.  Ties go to the smallest total width
    (``tie_break="narrowest"``) or the largest (``"widest"``), then to the
    lexicographically smallest lower bounds.
    """
    _check_tie_break(tie_break)
    mask = grid.total_counts > 0
    if not mask.any():
        raise ValueError("cannot fit capability bounds: every bin is empty")
    n, bins = grid.n, grid.bins_per_dim
    target = np.where(mask, grid.rates(), 0.0)
    # terms of (tau - c)^2 = tau^2 - 2 c tau + c^2 that do not depend on the candidate
    weight_lin = -2.0 * np.where(mask, target, 0.0)
    const = float((np.where(mask, target, 0.0) ** 2).sum() * bins ** (-n))
    cands = candidate_bounds(resolution)
    n_c = len(cands)
    lin = cell_integrals(bins, cands[:, 0], cands[:, 1], 1)  # (C, B)
    sq = cell_integrals(bins, cands[:, 0], cands[:, 1], 2)
    widths = cands[:, 1] - cands[:, 0]
    maskf = mask.astype(float)

    if n == 1:
        obj = sq @ maskf + lin @ weight_lin + const
        k = _pick(obj, widths, cands[:, :1], tie_break)
        return FitResult(UniformBelief((cands[k, 0],), (cands[k, 1],)), max(float(obj[k]), 0.0), n_c)

    if n == 2:
        # obj[a, b] = sum_cells M * sq_a sq_b + W * lin_a lin_b + const
        obj = sq @ maskf @ sq.T + lin @ weight_lin @ lin.T + const
        flat = obj.ravel()
        wsum = (widths[:, None] + widths[None, :]).ravel()
        lowers = np.stack(np.broadcast_arrays(cands[:, 0][:, None], cands[:, 0][None, :]), axis=-1).reshape(-1, 2)
        k = _pick(flat, wsum, lowers, tie_break)
        a, b = divmod(k, n_c)
        belief = UniformBelief((cands[a, 0], cands[b, 0]), (cands[a, 1], cands[b, 1]))
        return FitResult(belief, max(float(flat[k]), 0.0), n_c * n_c)

    full = int(np.flatnonzero((cands[:, 0] == 0.0) & (cands[:, 1] == 1.0))[0])
    current = [full] * n
    evaluations = 0
    obj_val = np.inf
    for _ in range(sweeps):
        for d in range(n):
            sq_w, lin_w = maskf, weight_lin
            # contract every other dimension against the current candidate
            for e in reversed(range(n)):
                if e == d:
                    continue
                sq_w = np.tensordot(sq_w, sq[current[e]], axes=([e], [0]))
                lin_w = np.tensordot(lin_w, lin[current[e]], axes=([e], [0]))
            obj = sq @ sq_w + lin @ lin_w + const
            evaluations += n_c
            current[d] = _pick(obj, widths, cands[:, :1], tie_break)
            obj_val = float(obj[current[d]])
    belief = UniformBelief(tuple(cands[c, 0] for c in current), tuple(cands[c, 1] for c in current))
    return FitResult(belief, max(obj_val, 0.0), evaluations)


def trust_surface(belief: UniformBelief, bins_per_dim: int = DEFAULT_BINS) -> np.ndarray:
    """Artificial trust evaluated on the bin-center grid, shape ``(B,) * n``."""
    centers = bin_centers(bins_per_dim)
    out = np.ones((bins_per_dim,) * belief.n)
    for d, (lo, hi) in enumerate(belief.intervals()):
        shape = [1] * belief.n
        shape[d] = bins_per_dim
        out = out * psi_array(centers, lo, hi).reshape(shape)
    return out


def surface_table(surface: np.ndarray) -> str:
    n, bins = surface.ndim, surface.shape[0]
    centers = bin_centers(bins)
    rows = [",".join([f"i{d}" for d in range(n)] + [f"c{d}" for d in range(n)] + ["trust"])]
    for idx in itertools.product(range(bins), repeat=n):
        cells = [str(i) for i in idx] + [repr(float(centers[i])) for i in idx] + [repr(float(surface[idx]))]
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"
