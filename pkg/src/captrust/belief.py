"""Uniform capability belief: initialization and outcome-driven updates.

The belief over each capability dimension is ``U(lower_i, upper_i)``.  An
observed success or failure moves one bound per dimension toward (or past)
the task's requirement.  Ties with a bound change nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from captrust.core import DimensionError, OutcomeRecord, VectorLike, as_vector


@dataclass(frozen=True)
class UniformBelief:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper):
            raise DimensionError(f"{len(lower)} lower bounds but {len(upper)} upper bounds")
        if not lower:
            raise DimensionError("belief needs at least one dimension")
        for i, (lo, hi) in enumerate(zip(lower, upper)):
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"dimension {i}: bounds ({lo}, {hi}) violate 0 <= lower <= upper <= 1")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    @property
    def point_mass_dims(self) -> tuple[int, ...]:
        """Dimensions whose interval has collapsed to a single point."""
        return tuple(i for i, w in enumerate(self.widths) if w == 0.0)

    def intervals(self) -> Iterator[tuple[float, float]]:
        return zip(self.lower, self.upper)

    @classmethod
    def from_intervals(cls, intervals: Iterable[tuple[float, float]]) -> "UniformBelief":
        pairs = list(intervals)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def init_belief(n: int) -> UniformBelief:
    """The uninformed belief: ``U(0, 1)`` on every dimension."""
    if n < 1:
        raise ValueError(f"belief dimension must be >= 1, got {n}")
    return UniformBelief((0.0,) * n, (1.0,) * n)


def _update_bounds(lower: list, upper: list, lam_bar, outcome: int) -> None:
    for i, r in enumerate(lam_bar):
        if outcome == 1:
            if r > upper[i]:
                upper[i] = r
            elif r > lower[i]:
                lower[i] = r
        else:
            if r < lower[i]:
                lower[i] = r
            elif r < upper[i]:
                upper[i] = r


def update_belief(belief: UniformBelief, observation: OutcomeRecord) -> UniformBelief:
    """Return the belief after observing ``observation``; the input is untouched.

    Success at a requirement above the upper bound raises only the upper
    bound, and failure below the lower bound lowers only the lower bound.
    This is the literal update rule even though a success could be read as
    proof of capability >= requirement.
    """
    lam_bar = observation.task.requirements
    if len(lam_bar) != belief.n:
        raise DimensionError(f"task has {len(lam_bar)} dimensions, belief has {belief.n}")
    lower, upper = list(belief.lower), list(belief.upper)
    _update_bounds(lower, upper, lam_bar, observation.outcome)
    return UniformBelief(tuple(lower), tuple(upper))


def fold_observations(n: int, observations: Iterable[OutcomeRecord]) -> UniformBelief:
    """Start from ``init_belief(n)`` and apply ``observations`` in order."""
    belief = init_belief(n)
    lower, upper = list(belief.lower), list(belief.upper)
    for obs in observations:
        if len(obs.task.requirements) != n:
            raise DimensionError(f"task has {len(obs.task.requirements)} dimensions, belief has {n}")
        _update_bounds(lower, upper, obs.task.requirements, obs.outcome)
    return UniformBelief(tuple(lower), tuple(upper))


def belief_density(belief: UniformBelief, lam: VectorLike) -> float:
    """Density of ``lam`` under the belief.

    Point-mass dimensions have no finite density; they contribute a factor
    of 1 when ``lam`` sits on the point (check ``belief.point_mass_dims``).
    """
    lam = as_vector(lam)
    if len(lam) != belief.n:
        raise DimensionError(f"point has {len(lam)} dimensions, belief has {belief.n}")
    density = 1.0
    for x, (lo, hi) in zip(lam, belief.intervals()):
        if x < lo or x > hi:
            return 0.0
        if hi > lo:
            density /= hi - lo
    return density


def sample_belief(belief: UniformBelief, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` capability points from the belief, shape ``(size, n)``."""
    return rng.uniform(np.asarray(belief.lower), np.asarray(belief.upper), size=(size, belief.n))


def format_snapshot(time: int, belief: UniformBelief) -> str:
    """One text record: ``time,l_1,u_1,...,l_n,u_n``."""
    fields = [str(int(time))]
    for lo, hi in belief.intervals():
        fields += [repr(lo), repr(hi)]
    return ",".join(fields)


def parse_snapshot(line: str) -> tuple[int, UniformBelief]:
    parts = line.strip().split(",")
    if len(parts) < 3 or len(parts) % 2 == 0:
        raise ValueError(f"malformed belief snapshot: {line!r}")
    vals = [float(p) for p in parts[1:]]
    return int(parts[0]), UniformBelief(tuple(vals[0::2]), tuple(vals[1::2]))


@dataclass
class BeliefRecorder:
    """Applies updates to a belief and keeps every ``(time, belief)`` snapshot."""

    belief: UniformBelief
    history: list[tuple[int, UniformBelief]] = field(default_factory=list)

    def __post_init__(self):
        if not self.history:
            self.history.append((0, self.belief))

    def observe(self, observation: OutcomeRecord) -> UniformBelief:
        self.belief = update_belief(self.belief, observation)
        self.history.append((observation.time, self.belief))
        return self.belief

    def lines(self) -> list[str]:
        return [format_snapshot(t, b) for t, b in self.history]
