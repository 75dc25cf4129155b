import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from captrust.core import CapabilityVector, OutcomeRecord, TaskSpec, TrustParams
from captrust.data import generate_synthetic_dataset
from captrust.fitting import (
    BTMModel,
    FitConfig,
    OptWeights,
    TrialRecord,
    _Batch,
    baseline_opt_predict,
    cross_entropy_loss,
    cross_validate,
    evaluate_models,
    fd_gradient,
    fit_model,
    fit_params,
    fold_indices,
    likert_to_probability,
    mean_loss,
    predict_trust,
)

SHARP = TrustParams.uniform(2, 1e4)


def make_record(observed, prediction, rating=0.5, name="p"):
    """``observed`` is a list of (requirements, outcome)."""
    tasks = {f"o{k}": CapabilityVector(r) for k, (r, _) in enumerate(observed)}
    tasks["q"] = CapabilityVector(prediction)
    obs = tuple(OutcomeRecord(TaskSpec(f"o{k}", r), k + 1, o) for k, (r, o) in enumerate(observed))
    return TrialRecord(name, tasks, obs, "q", rating)


@pytest.mark.parametrize(
    "observed,prediction,expected",
    [
        ([], (0.3, 0.4), 0.42),
        ([((0.5, 0.5), 1)], (0.2, 0.2), 1.0),
        ([((0.5, 0.5), 0)], (0.8, 0.8), 0.0),
    ],
)
def test_predict_examples(observed, prediction, expected):
    assert predict_trust(make_record(observed, prediction), SHARP) == pytest.approx(expected, abs=0.005)


def test_record_validation():
    with pytest.raises(ValueError):
        make_record([], (0.3, 0.4), rating=1.5)
    with pytest.raises(ValueError):
        TrialRecord("p", {"a": (0.1, 0.2)}, (), "missing", 0.5)
    with pytest.raises(ValueError):
        TrialRecord("p", {"a": (0.1, 0.2), "b": (0.1,)}, (), "a", 0.5)


def test_cross_entropy_examples():
    assert cross_entropy_loss(0.5, 0.5) == pytest.approx(math.log(2), abs=1e-12)
    expected = -(0.9 * math.log(0.9) + 0.1 * math.log(0.1))
    assert cross_entropy_loss(0.9, 0.9) == pytest.approx(expected, abs=1e-12)
    assert cross_entropy_loss(0.9, 0.9) == pytest.approx(0.3251, abs=5e-5)
    assert cross_entropy_loss(1 - 1e-6, 1.0) == pytest.approx(1e-6, rel=1e-3)
    # clamping keeps hard zeros and ones finite
    assert np.isfinite(cross_entropy_loss(0.0, 1.0))
    assert np.isfinite(cross_entropy_loss(1.0, 0.0))


def test_likert_mapping():
    vals = [likert_to_probability(r) for r in range(1, 8)]
    assert vals[0] == 0.0 and vals[3] == 0.5 and vals[6] == 1.0
    assert all(a < b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        likert_to_probability(8)
    with pytest.raises(ValueError):
        likert_to_probability(2.5)


def test_opt_examples():
    succ = (0.4, 0.4)
    rec3 = make_record([(succ, 1)] * 3, (0.5, 0.5))
    assert baseline_opt_predict(rec3, OptWeights()) == 0.5
    assert baseline_opt_predict(rec3, OptWeights(0.0, 0.2, -0.2)) == 1.0
    mixed = make_record([(succ, 1), ((0.6, 0.6), 0)], (0.5, 0.5))
    assert baseline_opt_predict(mixed, [0.0, 0.2, -0.2]) == pytest.approx(0.5)


unit = st.floats(0.0, 1.0, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(
    reqs=st.lists(st.tuples(unit, unit), min_size=2, max_size=4),
    outcome=st.sampled_from([0, 1]),
    target=st.tuples(unit, unit),
    seed=st.integers(0, 1000),
)
def test_same_outcome_orderings_commute(reqs, outcome, target, seed):
    # from the uninformed belief, successes only move lower bounds up (to the
    # max) and failures only move upper bounds down (to the min)
    params = TrustParams((6.0, 9.0), (1.0, 0.7))
    base = predict_trust(make_record([(r, outcome) for r in reqs], target), params)
    perm = np.random.default_rng(seed).permutation(len(reqs))
    shuffled = predict_trust(make_record([(reqs[i], outcome) for i in perm], target), params)
    assert shuffled == base


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.tuples(unit, unit), st.sampled_from([0, 1])), max_size=5), st.tuples(unit, unit))
def test_predictions_and_losses_finite(observed, target):
    rec = make_record(observed, target, rating=1.0)
    for params in (TrustParams.uniform(2, 1e-3, 1e-3), TrustParams.uniform(2, 1e6, 50.0)):
        p = predict_trust(rec, params)
        assert 0.0 <= p <= 1.0
        assert np.isfinite(cross_entropy_loss(p, rec.trust_rating))


@pytest.fixture(scope="module")
def synthetic20():
    return list(generate_synthetic_dataset(TrustParams((8, 12), (1, 1)), 20, seed=5).records)


def test_fd_gradient_agrees_with_refined_step(synthetic20):
    cfg = FitConfig()
    model = BTMModel(2, cfg)
    batch = _Batch(synthetic20)

    def f(x):
        return mean_loss(model, batch, x)

    coarse = fd_gradient(f, model.x0, 1e-4)
    fine = fd_gradient(f, model.x0, 1e-5)
    assert np.all(np.abs(coarse - fine) <= 1e-2 * np.abs(fine) + 1e-9)


def test_single_record_fit_is_finite():
    rec = make_record([((0.3, 0.6), 1)], (0.5, 0.5), rating=0.7)
    params = fit_params([rec], FitConfig(epochs=30))
    assert all(np.isfinite(params.beta)) and all(np.isfinite(params.zeta))


def test_constant_ratings_approach_log_two(synthetic20):
    recs = [TrialRecord(r.participant, r.task_requirements, r.observations, r.prediction_task, 0.5) for r in synthetic20]
    # the default step size needs more than 500 epochs to get here
    cfg = FitConfig(learning_rate=0.05)
    params = fit_params(recs, cfg)
    loss = np.mean([cross_entropy_loss(predict_trust(r, params), 0.5) for r in recs])
    assert loss == pytest.approx(math.log(2), rel=0.01)


def test_constant_ratings_give_both_models_small_mae(synthetic20):
    recs = [TrialRecord(r.participant, r.task_requirements, r.observations, r.prediction_task, 0.5) for r in synthetic20]
    reports = evaluate_models(recs, 4, 0, FitConfig(learning_rate=0.05))
    assert reports["BTM"].mean_mae < 0.05
    assert reports["OPT"].mean_mae < 0.05


def test_fold_partition_284():
    parts = fold_indices(284, 10, seed=0)
    sizes = [len(p) for p in parts]
    assert max(sizes) - min(sizes) <= 1
    joined = np.concatenate(parts)
    assert sorted(joined.tolist()) == list(range(284))
    with pytest.raises(ValueError):
        fold_indices(284, 1, 0)
    with pytest.raises(ValueError):
        fold_indices(3, 4, 0)


def test_cross_validate_is_deterministic(synthetic20):
    cfg = FitConfig(epochs=20)
    a = cross_validate(synthetic20, 4, seed=3, config=cfg)
    b = cross_validate(synthetic20, 4, seed=3, config=cfg)
    assert a.fold_mae == b.fold_mae and a.fold_nll == b.fold_nll
    assert a.params == b.params
    assert a.learning_curves == b.learning_curves
    assert len(a.fold_mae) == a.folds == 4
    assert a.mean_mae == pytest.approx(np.mean(a.fold_mae))
    assert a.std_nll == pytest.approx(np.std(a.fold_nll))


def test_identical_records_give_identical_folds():
    rec = make_record([((0.2, 0.3), 1), ((0.7, 0.1), 0)], (0.4, 0.4), rating=0.6)
    recs = [TrialRecord(f"p{k}", rec.task_requirements, rec.observations, "q", 0.6) for k in range(4)]
    report = cross_validate(recs, 2, seed=1, config=FitConfig(epochs=25))
    assert report.fold_mae[0] == pytest.approx(report.fold_mae[1], abs=1e-15)
    assert report.fold_nll[0] == pytest.approx(report.fold_nll[1], abs=1e-15)


def test_learning_curve_shape(synthetic20):
    cfg = FitConfig(epochs=15, patience=100)
    model = BTMModel(2, cfg)
    trace = fit_model(model, synthetic20, cfg)
    assert len(trace.curve) == 16
    assert all(len(pt) == 2 for pt in trace.curve)
    assert trace.curve[trace.best_epoch][1] == min(v for _, v in trace.curve)


def test_empty_training_rejected():
    with pytest.raises(ValueError):
        fit_params([])
