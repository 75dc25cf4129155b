"""Capability hypercube data model and the trust kernels.

A trustee's capabilities and a task's requirements are both points in the
unit hypercube ``[0, 1]^n``.  Trust is the probability of task success,
obtained by integrating a per-dimension sigmoid success kernel against the
trustor's belief over the trustee's capabilities.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Optional, Sequence, Union

import numpy as np

if TYPE_CHECKING:
    from captrust.belief import UniformBelief

# Per-dimension log-kernel floor; keeps exp() arithmetic finite for huge beta.
LOG_FLOOR = math.log(1e-300)

DEFAULT_BINS = 10


class DimensionError(ValueError):
    """Raised when vectors, beliefs or parameters disagree on dimension count."""


@dataclass(frozen=True)
class CapabilityVector:
    """A point in ``[0, 1]^n``: an agent's capabilities or a task's requirements."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DimensionError("capability vector needs at least one dimension")
        for i, v in enumerate(vals):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"capability value {v!r} at dimension {i} is outside [0, 1]")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


VectorLike = Union[CapabilityVector, Sequence[float], np.ndarray]


def as_vector(v: VectorLike) -> CapabilityVector:
    if isinstance(v, CapabilityVector):
        return v
    return CapabilityVector(tuple(np.asarray(v, dtype=float).ravel()))


@dataclass(frozen=True)
class TaskSpec:
    id: str
    requirements: CapabilityVector
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "requirements", as_vector(self.requirements))


class Role(str, enum.Enum):
    HUMAN = "human"
    ROBOT = "robot"


@dataclass(frozen=True)
class AgentId:
    role: Role
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))


@dataclass(frozen=True)
class TrustParams:
    """Per-dimension sigmoid steepness ``beta`` and exponent ``zeta`` (all > 0)."""

    beta: tuple[float, ...]
    zeta: tuple[float, ...]

    def __post_init__(self):
        beta = tuple(float(b) for b in np.ravel(self.beta))
        zeta = tuple(float(z) for z in np.ravel(self.zeta))
        if len(beta) != len(zeta):
            raise DimensionError(f"beta has {len(beta)} entries but zeta has {len(zeta)}")
        if not beta:
            raise DimensionError("trust params need at least one dimension")
        if not all(b > 0 and math.isfinite(b) for b in beta):
            raise ValueError(f"beta must be positive and finite, got {beta}")
        if not all(z > 0 and math.isfinite(z) for z in zeta):
            raise ValueError(f"zeta must be positive and finite, got {zeta}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "zeta", zeta)

    @property
    def n(self) -> int:
        return len(self.beta)

    @classmethod
    def uniform(cls, n: int, beta: float, zeta: float = 1.0) -> "TrustParams":
        return cls((beta,) * n, (zeta,) * n)


@dataclass(frozen=True)
class OutcomeRecord:
    """One observed execution of ``task`` at discrete time ``time``."""

    task: TaskSpec
    time: int
    outcome: int

    def __post_init__(self):
        if self.outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {self.outcome!r}")
        object.__setattr__(self, "outcome", int(self.outcome))
        if int(self.time) != self.time or self.time < 0:
            raise ValueError(f"time must be a non-negative integer, got {self.time!r}")
        object.__setattr__(self, "time", int(self.time))

    @property
    def failure(self) -> int:
        return 1 - self.outcome


def log_kernel(lam, lam_bar, beta, zeta) -> np.ndarray:
    """Per-dimension ``log tau_i``, broadcast over the inputs and floored at LOG_FLOOR."""
    x = np.asarray(beta) * (np.asarray(lam_bar) - np.asarray(lam))
    # log(1 / (1 + e^x)) = -softplus(x)
    out = -np.asarray(zeta) * np.logaddexp(0.0, x)
    return np.maximum(out, LOG_FLOOR)


def _check_dims(params: TrustParams, *vectors: CapabilityVector) -> None:
    for v in vectors:
        if len(v) != params.n:
            raise DimensionError(f"vector has {len(v)} dimensions, params have {params.n}")


def trust_given_capability(lam: VectorLike, lam_bar: VectorLike, params: TrustParams) -> float:
    """Probability of success of an agent with capabilities ``lam`` on a task
    requiring ``lam_bar``.

    Evaluated as ``exp(sum_i log tau_i)`` so that many small factors do not
    underflow the product; the sum is floored at LOG_FLOOR too, so the result
    stays positive for any finite beta.
    """
    lam, lam_bar = as_vector(lam), as_vector(lam_bar)
    _check_dims(params, lam, lam_bar)
    logs = log_kernel(lam.as_array(), lam_bar.as_array(), params.beta, params.zeta)
    return float(np.exp(max(logs.sum(), LOG_FLOOR)))


def midpoints(lower, upper, bins: int) -> np.ndarray:
    """Midpoint-rule nodes on ``[lower, upper]``, appended as a trailing axis."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    frac = (np.arange(bins) + 0.5) / bins
    return lower[..., None] + (upper - lower)[..., None] * frac


def trust_integral_batch(lower, upper, lam_bar, beta, zeta, bins_per_dim: int = DEFAULT_BINS) -> np.ndarray:
    """Vectorized trust integral for ``R`` beliefs/tasks at once.

    ``lower``, ``upper`` and ``lam_bar`` have shape ``(R, n)``; returns shape ``(R,)``.

    Both the kernel and the uniform belief factor over dimensions, so the
    tensor-grid midpoint rule equals the product of one-dimensional midpoint
    sums taken over each belief interval.  A zero-width interval collapses
    every node onto the point itself, which is exactly the point-mass case.
    """
    if bins_per_dim < 1:
        raise ValueError("bins_per_dim must be >= 1")
    nodes = midpoints(lower, upper, bins_per_dim)  # (R, n, B)
    lam_bar = np.asarray(lam_bar, dtype=float)[..., None]
    beta = np.asarray(beta, dtype=float)[:, None]
    zeta = np.asarray(zeta, dtype=float)[:, None]
    per_dim = np.exp(log_kernel(nodes, lam_bar, beta, zeta)).mean(axis=-1)
    return np.clip(per_dim.prod(axis=-1), 0.0, 1.0)


def trust_integral(
    belief: "UniformBelief",
    lam_bar: VectorLike,
    params: TrustParams,
    bins_per_dim: int = DEFAULT_BINS,
) -> float:
    """Trust as the belief-weighted success probability, by the midpoint rule."""
    lam_bar = as_vector(lam_bar)
    _check_dims(params, lam_bar)
    if belief.n != params.n:
        raise DimensionError(f"belief has {belief.n} dimensions, params have {params.n}")
    out = trust_integral_batch(
        np.asarray(belief.lower)[None],
        np.asarray(belief.upper)[None],
        lam_bar.as_array()[None],
        params.beta,
        params.zeta,
        bins_per_dim,
    )
    return float(out[0])
