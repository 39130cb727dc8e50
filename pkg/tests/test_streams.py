import json
import math

import numpy as np
import pytest

from core_types import DimensionError, L2Cost, Label, MarginTooDemandingError, ParameterError, StreamFormatError, as_vector
from streams import (
    FIXTURES,
    StreamRecord,
    StreamSpec,
    example1_stream,
    example2_stream,
    generate_separable_stream,
    generated_meta,
    iter_separable_stream,
    load_stream,
    sample_w_star,
    save_stream,
    stream_w_star,
    take,
)


def test_generated_stream_is_separable_and_bounded(small_spec):
    records = generate_separable_stream(small_spec)
    w_star = stream_w_star(small_spec)
    assert len(records) == small_spec.length
    assert np.linalg.norm(w_star) == pytest.approx(1.0 / small_spec.gamma)
    for record in records:
        assert np.linalg.norm(record.z) <= small_spec.R + 1e-12
        assert record.label.sign * float(np.dot(record.z, w_star)) >= 1.0


def test_generated_stream_is_deterministic_in_seed(small_spec):
    first = generate_separable_stream(small_spec)
    second = generate_separable_stream(small_spec)
    assert all(np.array_equal(a.z, b.z) and a.label == b.label for a, b in zip(first, second))


def test_lazy_stream_draws_the_same_records(small_spec):
    eager = generate_separable_stream(small_spec)
    lazy = list(iter_separable_stream(small_spec))
    assert len(lazy) == len(eager)
    assert all(np.array_equal(a.z, b.z) and a.label == b.label for a, b in zip(eager, lazy))


def test_lazy_stream_validates_before_drawing():
    with pytest.raises(ParameterError):
        iter_separable_stream(StreamSpec(d=2, R=0.1, gamma=0.5, length=10))
    # Infeasible margins only surface when the point is drawn.
    points = iter_separable_stream(StreamSpec(d=2, R=1.0, gamma=1.0, length=3, seed=1))
    with pytest.raises(MarginTooDemandingError):
        next(points)


def test_label_mix_is_stratified():
    spec = StreamSpec(d=2, R=5.0, gamma=0.5, length=100, seed=3, label_mix=0.3)
    labels = [r.label for r in generate_separable_stream(spec)]
    assert labels.count(Label.POSITIVE) == 30


def test_nonnegative_separator(nonnegative_spec):
    assert np.all(stream_w_star(nonnegative_spec) >= 0.0)
    meta = generated_meta(nonnegative_spec)
    assert meta["separable"] is True
    assert meta["w_star"] == stream_w_star(nonnegative_spec).tolist()


def test_sample_w_star_norm(rng):
    w = sample_w_star(rng, 7, 0.25)
    assert np.linalg.norm(w) == pytest.approx(4.0)


def test_explicit_w_star_must_match_gamma():
    with pytest.raises(ParameterError):
        generate_separable_stream(StreamSpec(d=2, R=5.0, gamma=0.5, length=3, w_star=(1.0, 0.0)))
    records = generate_separable_stream(StreamSpec(d=2, R=5.0, gamma=0.5, length=20, w_star=(2.0, 0.0)))
    assert all(r.label.sign * r.z[0] * 2.0 >= 1.0 for r in records)


@pytest.mark.parametrize(
    "spec",
    [
        StreamSpec(d=2, R=0.1, gamma=0.5, length=1),
        StreamSpec(d=0, R=1.0, gamma=0.5, length=1),
        StreamSpec(d=2, R=1.0, gamma=0.0, length=1),
        StreamSpec(d=2, R=1.0, gamma=0.5, length=1, label_mix=1.5),
    ],
)
def test_infeasible_specs_are_rejected(spec):
    with pytest.raises(ParameterError):
        generate_separable_stream(spec)


def test_margin_too_demanding():
    with pytest.raises(MarginTooDemandingError):
        generate_separable_stream(StreamSpec(d=50, R=1.0, gamma=0.99, length=1, seed=1))


def test_example1_streams():
    footnote = take(example1_stream("footnote"), 5)
    assert footnote[0].z.tolist() == [-1.0, 0.0] and footnote[0].label == Label.NEGATIVE
    assert [r.z.tolist() for r in footnote[1:]] == [[0.0, -1.0], [-0.5, -1.0]] * 2
    assert [r.label for r in footnote[1:]] == [Label.POSITIVE, Label.NEGATIVE] * 2
    original = take(example1_stream("original"), 1)
    assert original[0].z.tolist() == [1.0, 0.0] and original[0].label == Label.POSITIVE
    with pytest.raises(ParameterError):
        example1_stream("other")


def test_example2_stream_cycles_with_period_four():
    records = take(example2_stream(), 9)
    assert records[0].z.tolist() == [-4.0, -3.0]
    for k in range(1, 5):
        assert np.array_equal(records[k].z, records[k + 4].z)
        assert records[k].label == records[k + 4].label
    assert [r.label.sign for r in records[1:5]] == [-1, 1, -1, 1]


def test_example1_separator_certifies_the_points():
    fixture = FIXTURES["example1-footnote"]
    w_star = as_vector(fixture.w_star)
    for record in take(fixture.records(), 3):
        assert record.label.sign * float(np.dot(record.z, w_star)) >= 1.0
        assert np.linalg.norm(record.z) <= fixture.R + 1e-12


def test_fixture_registry_metadata():
    assert set(FIXTURES) == {"example1", "example1-footnote", "example2", "tie"}
    assert FIXTURES["example2"].cost_model == L2Cost(5.0)
    assert FIXTURES["example2"].zero_prediction == Label.NEGATIVE
    meta = FIXTURES["example2"].meta()
    assert meta["separable"] is False
    assert meta["R"] == pytest.approx(math.sqrt(50.0))


def test_save_and_load_round_trip(tmp_path, small_spec):
    records = generate_separable_stream(small_spec)
    path = tmp_path / "stream.jsonl"
    assert save_stream(str(path), records) == len(records)
    loaded = load_stream(str(path))
    assert all(np.array_equal(a.z, b.z) and a.label == b.label for a, b in zip(records, loaded))
    assert path.read_bytes().endswith(b"\n")
    assert b"\r\n" not in path.read_bytes()


def test_load_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"z": [1, 2], "label": 1}\n\n{"z": [1, 2], "label": 0}\n', encoding="utf-8")
    with pytest.raises(StreamFormatError) as info:
        load_stream(str(path))
    assert info.value.line_number == 3

    path.write_text('{"z": [1, 2], "label": 1}\nnot json\n', encoding="utf-8")
    with pytest.raises(StreamFormatError) as info:
        load_stream(str(path))
    assert info.value.line_number == 2


def test_load_rejects_mixed_dimensions(tmp_path):
    path = tmp_path / "mixed.jsonl"
    lines = [json.dumps({"z": [1, 2], "label": 1}), json.dumps({"z": [1, 2, 3], "label": -1})]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(DimensionError):
        load_stream(str(path))


def test_save_rejects_mixed_dimensions(tmp_path):
    records = [
        StreamRecord(z=as_vector([1.0, 2.0]), label=Label.POSITIVE),
        StreamRecord(z=as_vector([1.0]), label=Label.NEGATIVE),
    ]
    with pytest.raises(DimensionError):
        save_stream(str(tmp_path / "out.jsonl"), records)
