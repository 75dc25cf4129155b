"""Synthetic trustee agents and the capability-identification experiment.

A robot watches a trustee attempt ``N`` tasks with random requirements,
bins the outcomes, and fits the bounds of its capability belief.  Also a
one-line allocation rule for a human/robot pair.

Randomness: every run derives its streams from ``numpy.random.SeedSequence(seed)``
(PCG64 bit generator).  Child 0 draws task requirements, child 1 draws outcomes,
so changing ``p_high``/``p_low`` never changes the task list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from captrust.artificial import (
    DEFAULT_RESOLUTION,
    EmpiricalTrustGrid,
    FitResult,
    fit_capability_bounds,
    trust_surface,
)
from captrust.belief import UniformBelief, init_belief
from captrust.core import DEFAULT_BINS, AgentId, CapabilityVector, OutcomeRecord, Role, TaskSpec, as_vector

DEFAULT_SCHEDULE = (0, 50, 200, 1000)


@dataclass(frozen=True)
class SyntheticAgent:
    id: AgentId
    true_capabilities: CapabilityVector
    p_high: float = 0.95
    p_low: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "true_capabilities", as_vector(self.true_capabilities))
        if not (0.0 <= self.p_low < self.p_high <= 1.0):
            raise ValueError(f"need 0 <= p_low < p_high <= 1, got p_low={self.p_low}, p_high={self.p_high}")


@dataclass(frozen=True)
class SimConfig:
    n: int = 2
    task_count: int = 1000
    bins_per_dim: int = DEFAULT_BINS
    resolution: float = DEFAULT_RESOLUTION
    seed: int = 0
    schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    tie_break: str = "narrowest"

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(sorted(set(int(s) for s in self.schedule))))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.task_count < 0:
            raise ValueError("task_count must be >= 0")
        if any(s < 0 or s > self.task_count for s in self.schedule):
            raise ValueError(f"snapshot schedule {self.schedule} must lie within [0, {self.task_count}]")

    def streams(self) -> tuple[np.random.Generator, np.random.Generator]:
        task_ss, outcome_ss = np.random.SeedSequence(self.seed).spawn(2)
        return np.random.Generator(np.random.PCG64(task_ss)), np.random.Generator(np.random.PCG64(outcome_ss))


@dataclass(frozen=True)
class Snapshot:
    observations: int
    fit: Optional[FitResult]
    belief: UniformBelief
    surface: np.ndarray
    grid: EmpiricalTrustGrid = field(repr=False)


def generate_tasks(config: SimConfig, rng: Optional[np.random.Generator] = None) -> list[TaskSpec]:
    """``task_count`` tasks with requirements uniform on ``[0, 1]^n``."""
    if rng is None:
        rng = config.streams()[0]
    reqs = rng.random((config.task_count, config.n))
    return [TaskSpec(f"task{j:05d}", CapabilityVector(tuple(r))) for j, r in enumerate(reqs, start=1)]


def success_probability(agent: SyntheticAgent, task: TaskSpec) -> float:
    meets = all(r <= c for r, c in zip(task.requirements, agent.true_capabilities))
    return agent.p_high if meets else agent.p_low


def sample_outcome(agent: SyntheticAgent, task: TaskSpec, rng: np.random.Generator, time: int = 0) -> OutcomeRecord:
    if len(task.requirements) != len(agent.true_capabilities):
        raise ValueError("task and agent dimensions differ")
    return OutcomeRecord(task, time, int(rng.random() < success_probability(agent, task)))


def run_identification(agent: SyntheticAgent, config: SimConfig) -> list[Snapshot]:
    """Observe the agent on ``config.task_count`` random tasks and refit the
    belief at each scheduled observation count.

    A snapshot with no observations reports the uninformed belief.
    """
    task_rng, outcome_rng = config.streams()
    tasks = generate_tasks(config, task_rng)
    grid = EmpiricalTrustGrid.empty(config.n, config.bins_per_dim)
    due = set(config.schedule)
    snapshots = []

    def snap(count: int) -> None:
        if grid.total_counts.sum() == 0:
            fit, belief = None, init_belief(config.n)
        else:
            fit = fit_capability_bounds(grid, config.resolution, config.tie_break)
            belief = fit.belief
        snapshots.append(Snapshot(count, fit, belief, trust_surface(belief, config.bins_per_dim), grid.copy()))

    if 0 in due:
        snap(0)
    for t, task in enumerate(tasks, start=1):
        grid.add(sample_outcome(agent, task, outcome_rng, time=t))
        if t in due:
            snap(t)
    return snapshots


TieRule = Union[Role, str, Callable[[TaskSpec], AgentId]]


def allocate_task(
    task: TaskSpec,
    trust_in_human: float,
    trust_in_robot: float,
    tie_rule: TieRule = Role.ROBOT,
    human: Optional[AgentId] = None,
    robot: Optional[AgentId] = None,
) -> AgentId:
    """Hand ``task`` to whichever agent is trusted more; ties go by ``tie_rule``."""
    for t in (trust_in_human, trust_in_robot):
        if not (0.0 <= t <= 1.0):
            raise ValueError(f"trust value {t} outside [0, 1]")
    human = human or AgentId(Role.HUMAN, "H")
    robot = robot or AgentId(Role.ROBOT, "R")
    if trust_in_human > trust_in_robot:
        return human
    if trust_in_robot > trust_in_human:
        return robot
    if callable(tie_rule):
        return tie_rule(task)
    return human if Role(tie_rule) is Role.HUMAN else robot
