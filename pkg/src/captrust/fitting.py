"""Fitting trust-kernel parameters to human trust ratings.

Ratings and model outputs are both read as Bernoulli success probabilities,
so the loss is their cross-entropy.  Parameters are fitted with Adam on
central finite-difference gradients, holding out a random 15% of the
training data for early stopping.  A task-agnostic linear trust-dynamics
baseline ("OPT") is fitted the same way for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from captrust.belief import fold_observations
from captrust.core import (
    DEFAULT_BINS,
    CapabilityVector,
    DimensionError,
    OutcomeRecord,
    TrustParams,
    as_vector,
    trust_integral_batch,
)

EPS = 1e-6


@dataclass(frozen=True)
class TrialRecord:
    """One participant: rated task requirements, watched outcomes, and a trust
    rating for the held-out prediction task."""

    participant: str
    task_requirements: Mapping[str, CapabilityVector]
    observations: tuple[OutcomeRecord, ...]
    prediction_task: str
    trust_rating: float

    def __post_init__(self):
        reqs = {str(k): as_vector(v) for k, v in self.task_requirements.items()}
        object.__setattr__(self, "task_requirements", reqs)
        object.__setattr__(self, "observations", tuple(self.observations))
        if not (0.0 <= self.trust_rating <= 1.0):
            raise ValueError(f"{self.participant}: trust rating {self.trust_rating} outside [0, 1]")
        dims = {len(v) for v in reqs.values()}
        if len(dims) > 1:
            raise DimensionError(f"{self.participant}: requirement vectors have mixed dimensions {sorted(dims)}")
        if self.prediction_task not in reqs:
            raise ValueError(f"{self.participant}: prediction task {self.prediction_task!r} has no requirements")
        for obs in self.observations:
            if obs.task.id not in reqs:
                raise ValueError(f"{self.participant}: observed task {obs.task.id!r} has no requirements")
            if obs.task.requirements != reqs[obs.task.id]:
                raise ValueError(f"{self.participant}: observed task {obs.task.id!r} disagrees with its rated requirements")

    @property
    def n(self) -> int:
        return len(self.task_requirements[self.prediction_task])

    @property
    def prediction_requirements(self) -> CapabilityVector:
        return self.task_requirements[self.prediction_task]


def likert_to_probability(rating: int, points: int = 7) -> float:
    """Map a Likert response ``1..points`` linearly onto ``[0, 1]``."""
    if int(rating) != rating or not (1 <= rating <= points):
        raise ValueError(f"Likert rating must be an integer in 1..{points}, got {rating!r}")
    return (int(rating) - 1) / (points - 1)


def predict_trust(record: TrialRecord, params: TrustParams, bins_per_dim: int = DEFAULT_BINS) -> float:
    """Trust in the prediction task after folding the record's observations
    into an uninformed belief."""
    if record.n != params.n:
        raise DimensionError(f"record has {record.n} dimensions, params have {params.n}")
    belief = fold_observations(record.n, record.observations)
    out = trust_integral_batch(
        np.asarray(belief.lower)[None],
        np.asarray(belief.upper)[None],
        record.prediction_requirements.as_array()[None],
        params.beta,
        params.zeta,
        bins_per_dim,
    )
    return float(out[0])


def cross_entropy_loss(predicted, rated, eps: float = EPS):
    """Bernoulli cross-entropy of ``rated`` under ``predicted``, clamped to ``[eps, 1 - eps]``.

    Works elementwise on arrays; returns a float for scalar input.
    """
    p = np.clip(np.asarray(predicted, dtype=float), eps, 1.0 - eps)
    r = np.asarray(rated, dtype=float)
    out = -(r * np.log(p) + (1.0 - r) * np.log1p(-p))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class OptWeights:
    """Baseline trust dynamics: ``tau += bias + w_success*S + w_failure*F``, clamped."""

    bias: float = 0.0
    w_success: float = 0.0
    w_failure: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.bias, self.w_success, self.w_failure])


OPT_INITIAL_TRUST = 0.5


def baseline_opt_predict(record: TrialRecord, weights) -> float:
    """Final trust of the task-agnostic linear baseline; requirements are ignored."""
    if not isinstance(weights, OptWeights):
        weights = OptWeights(*np.asarray(weights, dtype=float))
    tau = OPT_INITIAL_TRUST
    for obs in record.observations:
        step = weights.bias + (weights.w_success if obs.outcome else weights.w_failure)
        tau = min(max(tau + step, 0.0), 1.0)
    return tau


@dataclass
class FitConfig:
    learning_rate: float = 0.01
    epochs: int = 500
    patience: int = 50
    validation_fraction: float = 0.15
    fd_step: float = 1e-4
    bins_per_dim: int = DEFAULT_BINS
    init_beta: float = 5.0
    init_zeta: float = 1.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0


class _Batch:
    """Array view of a list of records; the beliefs do not depend on the
    parameters, so they are folded once."""

    def __init__(self, records: Sequence[TrialRecord]):
        if not records:
            raise ValueError("no records")
        n = records[0].n
        if any(r.n != n for r in records):
            raise DimensionError("records have mixed dimensions")
        self.n = n
        beliefs = [fold_observations(n, r.observations) for r in records]
        self.lower = np.array([b.lower for b in beliefs])
        self.upper = np.array([b.upper for b in beliefs])
        self.target = np.array([r.prediction_requirements.values for r in records])
        self.ratings = np.array([r.trust_rating for r in records])
        k = max((len(r.observations) for r in records), default=0)
        self.outcomes = np.zeros((len(records), k))
        self.observed = np.zeros((len(records), k), dtype=bool)
        for i, r in enumerate(records):
            for j, obs in enumerate(r.observations):
                self.outcomes[i, j] = obs.outcome
                self.observed[i, j] = True

    def __len__(self) -> int:
        return len(self.ratings)

    def subset(self, idx) -> "_Batch":
        out = object.__new__(_Batch)
        out.n = self.n
        for name in ("lower", "upper", "target", "ratings", "outcomes", "observed"):
            setattr(out, name, getattr(self, name)[idx])
        return out


class BTMModel:
    """Capability-based trust model; parameters are ``log(beta) ++ log(zeta)``."""

    name = "BTM"

    def __init__(self, n: int, config: FitConfig):
        self.n = n
        self.bins = config.bins_per_dim
        self.x0 = np.log(np.r_[np.full(n, config.init_beta), np.full(n, config.init_zeta)])

    def predict(self, batch: _Batch, x: np.ndarray) -> np.ndarray:
        return trust_integral_batch(batch.lower, batch.upper, batch.target, np.exp(x[: self.n]), np.exp(x[self.n :]), self.bins)

    def params(self, x: np.ndarray) -> TrustParams:
        return TrustParams(tuple(np.exp(x[: self.n])), tuple(np.exp(x[self.n :])))


class OPTModel:
    """Linear trust-dynamics baseline; parameters are ``(bias, w_success, w_failure)``."""

    name = "OPT"

    def __init__(self, n: int, config: FitConfig):
        self.x0 = np.zeros(3)

    def predict(self, batch: _Batch, x: np.ndarray) -> np.ndarray:
        tau = np.full(len(batch), OPT_INITIAL_TRUST)
        for j in range(batch.outcomes.shape[1]):
            s = batch.outcomes[:, j]
            step = x[0] + x[1] * s + x[2] * (1.0 - s)
            tau = np.where(batch.observed[:, j], np.clip(tau + step, 0.0, 1.0), tau)
        return tau

    def params(self, x: np.ndarray) -> OptWeights:
        return OptWeights(*map(float, x))


MODELS = {"BTM": BTMModel, "OPT": OPTModel}


def mean_loss(model, batch: _Batch, x: np.ndarray) -> float:
    return float(np.mean(cross_entropy_loss(model.predict(batch, x), batch.ratings)))


def fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, step: float) -> np.ndarray:
    """Central finite differences, one coordinate at a time."""
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return g


def split_validation(size: int, fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random (train, validation) index split.

    When the split would leave either side empty, both sides are the full set.
    """
    perm = rng.permutation(size)
    n_val = int(round(fraction * size))
    if n_val == 0 or n_val >= size:
        return perm, perm
    return perm[n_val:], perm[:n_val]


@dataclass
class FitTrace:
    x: np.ndarray
    best_epoch: int
    curve: list[tuple[float, float]]


def fit_model(model, records: Sequence[TrialRecord], config: FitConfig, rng: Optional[np.random.Generator] = None) -> FitTrace:
    """Adam on finite-difference gradients; keeps the lowest-validation-loss epoch.

    ``curve[e]`` holds (train loss, validation loss) after ``e`` updates.
    """
    if not records:
        raise ValueError("cannot fit on an empty training set")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    batch = records if isinstance(records, _Batch) else _Batch(records)
    train_idx, val_idx = split_validation(len(batch), config.validation_fraction, rng)
    train, val = batch.subset(train_idx), batch.subset(val_idx)

    def f_train(x):
        return mean_loss(model, train, x)

    x = model.x0.astype(float).copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    best_x, best_val, best_epoch = x.copy(), mean_loss(model, val, x), 0
    curve = [(f_train(x), best_val)]
    stale = 0
    b1, b2 = config.adam_beta1, config.adam_beta2
    for epoch in range(1, config.epochs + 1):
        g = fd_gradient(f_train, x, config.fd_step)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**epoch)
        v_hat = v / (1 - b2**epoch)
        x = x - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        val_loss = mean_loss(model, val, x)
        curve.append((f_train(x), val_loss))
        if val_loss < best_val:
            best_x, best_val, best_epoch, stale = x.copy(), val_loss, epoch, 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return FitTrace(best_x, best_epoch, curve)


def fit_params(train: Sequence[TrialRecord], config: Optional[FitConfig] = None) -> TrustParams:
    config = config or FitConfig()
    if not train:
        raise ValueError("cannot fit on an empty training set")
    model = BTMModel(train[0].n, config)
    return model.params(fit_model(model, train, config).x)


@dataclass
class FitReport:
    model: str
    params: object
    fold_params: list
    fold_mae: list[float]
    fold_nll: list[float]
    learning_curves: list[list[tuple[float, float]]] = field(repr=False)

    @property
    def folds(self) -> int:
        return len(self.fold_mae)

    # population std over folds
    @property
    def mean_mae(self) -> float:
        return float(np.mean(self.fold_mae))

    @property
    def std_mae(self) -> float:
        return float(np.std(self.fold_mae))

    @property
    def mean_nll(self) -> float:
        return float(np.mean(self.fold_nll))

    @property
    def std_nll(self) -> float:
        return float(np.std(self.fold_nll))


def fold_indices(size: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle cut into ``folds`` contiguous, near-equal parts."""
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if size < folds:
        raise ValueError(f"{size} records cannot fill {folds} folds")
    perm = np.random.default_rng(seed).permutation(size)
    return np.array_split(perm, folds)


def fold_rng(seed: int, fold: int) -> np.random.Generator:
    return np.random.default_rng([seed, fold])


def cross_validate(
    data: Sequence[TrialRecord],
    folds: int = 10,
    seed: int = 0,
    config: Optional[FitConfig] = None,
    model: str = "BTM",
) -> FitReport:
    """K-fold cross-validation of one model.

    ``params`` in the report comes from a final fit on all of ``data``.
    """
    config = config or FitConfig()
    parts = fold_indices(len(data), folds, seed)
    batch = _Batch(data)
    m = MODELS[model](batch.n, config)
    report = FitReport(model, None, [], [], [], [])
    for k, test_idx in enumerate(parts):
        train_idx = np.concatenate([p for j, p in enumerate(parts) if j != k])
        trace = fit_model(m, batch.subset(train_idx), config, fold_rng(seed, k))
        test = batch.subset(test_idx)
        pred = m.predict(test, trace.x)
        report.fold_params.append(m.params(trace.x))
        report.fold_mae.append(float(np.mean(np.abs(pred - test.ratings))))
        report.fold_nll.append(float(np.mean(cross_entropy_loss(pred, test.ratings))))
        report.learning_curves.append(trace.curve)
    report.params = m.params(fit_model(m, batch, config, fold_rng(seed, folds)).x)
    return report


def evaluate_models(
    data: Sequence[TrialRecord],
    folds: int = 10,
    seed: int = 0,
    config: Optional[FitConfig] = None,
    models: Sequence[str] = ("BTM", "OPT"),
) -> dict[str, FitReport]:
    """Cross-validate each model on the same fold partition."""
    return {name: cross_validate(data, folds, seed, config, name) for name in models}


def format_table(reports: Mapping[str, FitReport]) -> str:
    """Mean (std) of MAE and NLL per model, one row each."""
    rows = [f"{'model':<6} {'MAE':>15} {'NLL':>15}"]
    for name, r in reports.items():
        mae = f"{r.mean_mae:.3f} ({r.std_mae:.3f})"
        nll = f"{r.mean_nll:.3f} ({r.std_nll:.3f})"
        rows.append(f"{name:<6} {mae:>15} {nll:>15}")
    return "\n".join(rows) + "\n"


def fold_scores_table(reports: Mapping[str, FitReport]) -> str:
    rows = ["model,fold,mae,nll"]
    for name, r in reports.items():
        for k, (mae, nll) in enumerate(zip(r.fold_mae, r.fold_nll)):
            rows.append(f"{name},{k},{mae!r},{nll!r}")
    return "\n".join(rows) + "\n"


def learning_curve_table(reports: Mapping[str, FitReport]) -> str:
    rows = ["model,fold,epoch,train_loss,validation_loss"]
    for name, r in reports.items():
        for k, curve in enumerate(r.learning_curves):
            for e, (tl, vl) in enumerate(curve):
                rows.append(f"{name},{k},{e},{tl!r},{vl!r}")
    return "\n".join(rows) + "\n"
