"""Trust-rating dataset files: schema, strict loading, and synthetic generation.

A dataset is one JSON document::

    {
      "schema": "captrust.dataset/1",
      "dimensions": ["sensing", "processing"],
      "records": [
        {
          "participant": "p0001",
          "tasks": {"t1": [0.2, 0.7], "t2": [0.5, 0.1], ...},
          "observations": [{"task": "t1", "outcome": 1}, ...],
          "prediction_task": "t4",
          "trust_rating_raw": 5            # Likert 1..7, or
          "trust_rating": 0.6667           # probability in [0, 1]
        }
      ]
    }

Exactly one of ``trust_rating_raw`` and ``trust_rating`` must be present.
Observations are applied in list order; their time index is their 1-based
position.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from captrust.core import DEFAULT_BINS, CapabilityVector, OutcomeRecord, TaskSpec, TrustParams
from captrust.fitting import TrialRecord, likert_to_probability, predict_trust

SCHEMA_VERSION = "captrust.dataset/1"
DEFAULT_DIMENSIONS = ("sensing", "processing")
RECORD_KEYS = {"participant", "tasks", "observations", "prediction_task", "trust_rating_raw", "trust_rating"}


class DatasetError(ValueError):
    """Dataset parse or validation failure; ``diagnostics`` lists every problem found."""

    def __init__(self, diagnostics: Sequence[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass(frozen=True)
class DatasetFile:
    schema: str
    dimensions: tuple[str, ...]
    records: tuple[TrialRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        object.__setattr__(self, "records", tuple(self.records))
        problems = []
        seen = set()
        for i, r in enumerate(self.records):
            if r.n != len(self.dimensions):
                problems.append(f"record {i} ({r.participant}): {r.n} dimensions, expected {len(self.dimensions)}")
            if r.participant in seen:
                problems.append(f"record {i}: duplicate participant {r.participant!r}")
            seen.add(r.participant)
        if problems:
            raise DatasetError(problems)

    @property
    def n(self) -> int:
        return len(self.dimensions)


def _parse_vector(raw, n: int, where: str, problems: list) -> Optional[CapabilityVector]:
    if not isinstance(raw, list) or len(raw) != n:
        problems.append(f"{where}: expected a list of {n} numbers, got {raw!r}")
        return None
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        problems.append(f"{where}: non-numeric entry in {raw!r}")
        return None
    bad = [v for v in raw if not (0.0 <= v <= 1.0)]
    if bad:
        problems.append(f"{where}: requirement {bad[0]!r} outside [0, 1]")
        return None
    return CapabilityVector(tuple(raw))


def _parse_record(i: int, raw, n: int, problems: list) -> Optional[TrialRecord]:
    where = f"record {i}"
    if not isinstance(raw, dict):
        problems.append(f"{where}: expected an object")
        return None
    if isinstance(raw.get("participant"), str):
        where += f" ({raw['participant']})"
    before = len(problems)
    unknown = set(raw) - RECORD_KEYS
    if unknown:
        problems.append(f"{where}: unknown fields {sorted(unknown)}")
    for key in ("participant", "tasks", "observations", "prediction_task"):
        if key not in raw:
            problems.append(f"{where}: missing field {key!r}")
    if len(problems) > before:
        return None
    if not isinstance(raw["participant"], str) or not raw["participant"]:
        problems.append(f"{where}: participant must be a non-empty string")
    tasks = {}
    if not isinstance(raw["tasks"], dict) or not raw["tasks"]:
        problems.append(f"{where}: tasks must be a non-empty object")
    else:
        for tid, vec in raw["tasks"].items():
            v = _parse_vector(vec, n, f"{where} task {tid!r}", problems)
            if v is not None:
                tasks[tid] = v
    observations = []
    if not isinstance(raw["observations"], list):
        problems.append(f"{where}: observations must be a list")
    else:
        for t, obs in enumerate(raw["observations"], start=1):
            if not isinstance(obs, dict) or set(obs) != {"task", "outcome"}:
                problems.append(f"{where} observation {t}: expected {{'task', 'outcome'}}, got {obs!r}")
                continue
            if obs["outcome"] not in (0, 1) or isinstance(obs["outcome"], (bool, float)):
                problems.append(f"{where} observation {t}: outcome must be 0 or 1, got {obs['outcome']!r}")
                continue
            if obs["task"] not in raw["tasks"]:
                problems.append(f"{where} observation {t}: unknown task {obs['task']!r}")
                continue
            if obs["task"] in tasks:
                observations.append(OutcomeRecord(TaskSpec(obs["task"], tasks[obs["task"]]), t, obs["outcome"]))
    if raw["prediction_task"] not in raw.get("tasks", {}):
        problems.append(f"{where}: unknown prediction task {raw['prediction_task']!r}")
    has_raw, has_prob = "trust_rating_raw" in raw, "trust_rating" in raw
    rating = None
    if has_raw == has_prob:
        problems.append(f"{where}: give exactly one of trust_rating_raw and trust_rating")
    elif has_raw:
        r = raw["trust_rating_raw"]
        if isinstance(r, int) and not isinstance(r, bool) and 1 <= r <= 7:
            rating = likert_to_probability(r)
        else:
            problems.append(f"{where}: trust_rating_raw must be an integer 1..7, got {r!r}")
    else:
        r = raw["trust_rating"]
        if isinstance(r, (int, float)) and not isinstance(r, bool) and 0.0 <= r <= 1.0:
            rating = float(r)
        else:
            problems.append(f"{where}: trust_rating must be a number in [0, 1], got {r!r}")
    if len(problems) > before:
        return None
    return TrialRecord(raw["participant"], tasks, tuple(observations), raw["prediction_task"], rating)


def parse_dataset(text: str) -> DatasetFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError([f"parse error: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise DatasetError(["top level must be an object"])
    if doc.get("schema") != SCHEMA_VERSION:
        raise DatasetError([f"schema version {doc.get('schema')!r} is not {SCHEMA_VERSION!r}"])
    dims = doc.get("dimensions")
    if not isinstance(dims, list) or not dims or not all(isinstance(d, str) for d in dims):
        raise DatasetError(["dimensions must be a non-empty list of labels"])
    raw_records = doc.get("records")
    if not isinstance(raw_records, list):
        raise DatasetError(["records must be a list"])
    problems: list[str] = []
    records = []
    for i, raw in enumerate(raw_records):
        rec = _parse_record(i, raw, len(dims), problems)
        if rec is not None:
            records.append(rec)
    if problems:
        raise DatasetError(problems)
    return DatasetFile(SCHEMA_VERSION, tuple(dims), tuple(records))


def load_dataset(path: Union[str, Path]) -> DatasetFile:
    return parse_dataset(Path(path).read_text())


def record_to_json(r: TrialRecord) -> dict:
    return {
        "participant": r.participant,
        "tasks": {tid: list(v.values) for tid, v in r.task_requirements.items()},
        "observations": [{"task": o.task.id, "outcome": o.outcome} for o in r.observations],
        "prediction_task": r.prediction_task,
        "trust_rating": r.trust_rating,
    }


def dumps_dataset(ds: DatasetFile) -> str:
    doc = {"schema": ds.schema, "dimensions": list(ds.dimensions), "records": [record_to_json(r) for r in ds.records]}
    return json.dumps(doc, indent=1) + "\n"


def save_dataset(ds: DatasetFile, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_dataset(ds))


def truncated_normal_noise(centers: np.ndarray, std: float, rng: np.random.Generator) -> np.ndarray:
    """``centers + N(0, std)`` conditioned on landing in ``[0, 1]`` (rejection sampling)."""
    out = centers + rng.normal(0.0, std, size=centers.shape)
    bad = (out < 0.0) | (out > 1.0)
    while bad.any():
        out[bad] = centers[bad] + rng.normal(0.0, std, size=int(bad.sum()))
        bad = (out < 0.0) | (out > 1.0)
    return out


def generate_synthetic_dataset(
    params: TrustParams,
    record_count: int,
    noise: Optional[float] = None,
    seed: int = 0,
    dimensions: Sequence[str] = DEFAULT_DIMENSIONS,
    observations_per_record: int = 3,
    bins_per_dim: int = DEFAULT_BINS,
) -> DatasetFile:
    """Experiment-shaped records whose ratings come from the trust model itself.

    Each record has ``observations_per_record + 1`` tasks with uniform random
    requirements, fair-coin outcomes on the observed ones, and a rating equal
    to ``predict_trust`` on the last task, optionally perturbed by truncated
    Gaussian noise with standard deviation ``noise``.
    """
    if record_count < 1:
        raise ValueError("record_count must be >= 1")
    n = len(dimensions)
    if params.n != n:
        raise ValueError(f"params have {params.n} dimensions, labels give {n}")
    rng = np.random.default_rng(seed)
    k = observations_per_record
    reqs = rng.random((record_count, k + 1, n))
    outcomes = rng.integers(0, 2, size=(record_count, k))
    records = []
    for i in range(record_count):
        tasks = {f"t{j + 1}": CapabilityVector(tuple(reqs[i, j])) for j in range(k + 1)}
        obs = tuple(OutcomeRecord(TaskSpec(f"t{j + 1}", tasks[f"t{j + 1}"]), j + 1, int(outcomes[i, j])) for j in range(k))
        rec = TrialRecord(f"p{i + 1:04d}", tasks, obs, f"t{k + 1}", 0.0)
        records.append(rec)
    ratings = np.array([predict_trust(r, params, bins_per_dim) for r in records])
    if noise:
        ratings = truncated_normal_noise(ratings, noise, rng)
    records = [
        TrialRecord(r.participant, r.task_requirements, r.observations, r.prediction_task, float(p))
        for r, p in zip(records, ratings)
    ]
    return DatasetFile(SCHEMA_VERSION, tuple(dimensions), tuple(records))
