import json

import numpy as np
import pytest

from captrust.core import TrustParams
from captrust.data import (
    SCHEMA_VERSION,
    DatasetError,
    dumps_dataset,
    generate_synthetic_dataset,
    load_dataset,
    parse_dataset,
    save_dataset,
)
from captrust.fitting import predict_trust

PARAMS = TrustParams((8.0, 12.0), (1.0, 1.0))


def doc(records, **top):
    base = {"schema": SCHEMA_VERSION, "dimensions": ["sensing", "processing"], "records": records}
    base.update(top)
    return json.dumps(base)


def raw_record(**over):
    r = {
        "participant": "p1",
        "tasks": {"a": [0.2, 0.3], "b": [0.6, 0.5]},
        "observations": [{"task": "a", "outcome": 1}],
        "prediction_task": "b",
        "trust_rating_raw": 4,
    }
    r.update(over)
    return r


@pytest.mark.parametrize("raw,expected", [(7, 1.0), (4, 0.5), (1, 0.0)])
def test_likert_ratings_mapped_on_load(raw, expected):
    ds = parse_dataset(doc([raw_record(trust_rating_raw=raw)]))
    assert ds.records[0].trust_rating == expected


def test_requirement_out_of_range_rejected_with_row():
    bad = raw_record(tasks={"a": [0.2, 1.2], "b": [0.6, 0.5]})
    with pytest.raises(DatasetError) as err:
        parse_dataset(doc([raw_record(participant="ok"), bad]))
    assert any("record 1" in d and "1.2" in d for d in err.value.diagnostics)


def test_every_problem_reported():
    recs = [
        raw_record(participant="a", observations=[{"task": "zzz", "outcome": 1}]),
        raw_record(participant="b", trust_rating=0.5),
        raw_record(participant="c", prediction_task="nope", extra=1),
    ]
    with pytest.raises(DatasetError) as err:
        parse_dataset(doc(recs))
    text = " | ".join(err.value.diagnostics)
    assert "record 0" in text and "record 1" in text and "record 2" in text


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        doc([], schema="other/9"),
        doc([], dimensions=[]),
        doc([raw_record(), raw_record()]),
        doc([raw_record(tasks={"a": [0.2], "b": [0.6]})]),
        doc([raw_record(trust_rating_raw=9)]),
        doc([raw_record(observations=[{"task": "a", "outcome": 2}])]),
    ],
)
def test_invalid_documents_rejected(text):
    with pytest.raises(DatasetError):
        parse_dataset(text)


def test_zero_noise_ratings_equal_model():
    ds = generate_synthetic_dataset(PARAMS, 30, seed=2)
    for r in ds.records:
        assert r.trust_rating == predict_trust(r, PARAMS)
        assert len(r.observations) == 3


def test_generation_is_deterministic():
    assert dumps_dataset(generate_synthetic_dataset(PARAMS, 10, 0.1, seed=4)) == dumps_dataset(
        generate_synthetic_dataset(PARAMS, 10, 0.1, seed=4)
    )


def test_noise_perturbation_magnitude():
    clean = generate_synthetic_dataset(PARAMS, 1000, seed=8)
    noisy = generate_synthetic_dataset(PARAMS, 1000, 0.1, seed=8)
    diffs = [abs(a.trust_rating - b.trust_rating) for a, b in zip(clean.records, noisy.records)]
    assert 0.06 <= np.mean(diffs) <= 0.10
    assert all(0.0 <= r.trust_rating <= 1.0 for r in noisy.records)


def test_round_trip(tmp_path):
    ds = generate_synthetic_dataset(PARAMS, 25, 0.05, seed=1)
    path = tmp_path / "d.json"
    save_dataset(ds, path)
    assert load_dataset(path) == ds


def test_generator_rejects_bad_inputs():
    with pytest.raises(ValueError):
        generate_synthetic_dataset(PARAMS, 0)
    with pytest.raises(ValueError):
        generate_synthetic_dataset(PARAMS, 5, dimensions=("only",))
