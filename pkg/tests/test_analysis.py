from __future__ import annotations

import math

import numpy as np
import pytest

from qramsim.analysis import (
    ADVERSARIAL,
    CSV_HEADER,
    TWO_PATTERN,
    UNIFORM,
    SweepConfig,
    SweepRow,
    binomial_sigma,
    exact_postselect_probability,
    expected_repetitions,
    generate_dataset,
    point_rng,
    powers_of_two,
    predicted_postselect_probability,
    rows_to_csv,
    run_sweep,
    sampled_postselect_probability,
)
from qramsim.dataset import Dataset
from qramsim.encoders import a_pqm_encode, encode, ff_qram_encode, ffp_qram_encode, preprocess_max_scale
from qramsim.errors import ValidationError
from qramsim.statevector import RegisterLayout, StateVector
from qramsim.verify import random_dataset

WORKED = Dataset.from_pairs([(math.sqrt(0.3), "000"), (math.sqrt(0.7), "001")])


# -- probabilities


def test_exact_probability_examples():
    assert abs(exact_postselect_probability(ff_qram_encode(WORKED)) - 0.125) <= 1e-15
    res = ffp_qram_encode(random_dataset(np.random.default_rng(1), 3, 4))
    assert abs(exact_postselect_probability(res) - 0.25) <= 1e-12


def test_exact_probability_rejects_deterministic():
    with pytest.raises(ValidationError):
        exact_postselect_probability(a_pqm_encode(WORKED))
    with pytest.raises(ValidationError):
        sampled_postselect_probability(a_pqm_encode(WORKED), 10, 0)


def test_formula_agrees_with_state():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        data = random_dataset(rng, n)
        alpha = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        alpha /= np.linalg.norm(alpha)
        init = StateVector(RegisterLayout.of(("B", n), ("R", 1)), np.kron(alpha, [1, 0]))
        p = exact_postselect_probability(ff_qram_encode(data, init))
        assert abs(p - predicted_postselect_probability(alpha, data)) <= 1e-12


def test_sampled_probability():
    res = ff_qram_encode(WORKED)
    sigma = math.sqrt(0.125 * 0.875 / 1024)
    assert abs(sigma - 0.0103) <= 1e-4
    for seed in range(5):
        assert abs(sampled_postselect_probability(res, 1024, seed) - 0.125) <= 4 * sigma
    assert sampled_postselect_probability(res, 1024, 7) == sampled_postselect_probability(res, 1024, 7)
    certain = ffp_qram_encode(Dataset.from_pairs([(1.0, "01")]))
    assert sampled_postselect_probability(certain, 333, 1) == 1.0


def test_expected_repetitions():
    assert expected_repetitions(1.0) == 1.0
    assert expected_repetitions(2**-8) == 256
    assert round(expected_repetitions(1 / (0.9801 * 2048)), 1) == 2007.2
    for bad in (0.0, -0.1):
        with pytest.raises(ValidationError):
            expected_repetitions(bad)


def test_binomial_sigma():
    assert binomial_sigma(0.5, 100) == 0.05
    assert binomial_sigma(1.0, 100) == 0.0


# -- dataset generation


def test_generate_two_pattern():
    d = generate_dataset(TWO_PATTERN, 5, 2, point_rng(0, 0))
    assert d.M == 2 and d.normalized
    assert np.allclose(d.amplitudes, [math.sqrt(0.3), math.sqrt(0.7)])
    with pytest.raises(ValidationError):
        generate_dataset(TWO_PATTERN, 5, 3, point_rng(0, 0))


def test_generate_uniform():
    d = generate_dataset(UNIFORM, 6, 40, point_rng(0, 1))
    assert d.M == 40 and d.normalized
    assert np.all(d.amplitudes.real >= 0)
    assert len(set(d.patterns)) == 40


@pytest.mark.parametrize("m", [2, 16, 256])
def test_generate_adversarial_peak(m):
    d = generate_dataset(ADVERSARIAL, 8, m, point_rng(3, m), peak=0.99)
    assert d.normalized
    assert abs(max(abs(d.amplitudes)) - 0.99) <= 1e-9


def test_point_rng_is_per_point():
    a = point_rng(5, 0).integers(1 << 30, size=3)
    b = point_rng(5, 0).integers(1 << 30, size=3)
    c = point_rng(5, 1).integers(1 << 30, size=3)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


# -- sweep configuration


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(encoder="pqm", preprocess=False, n=3, M_values=(2,)),
        dict(encoder="ff-qram", preprocess=False, n=3, M_values=(16,)),
        dict(encoder="ff-qram", preprocess=False, n=3, M_values=(2,), shots=0),
        dict(encoder="ff-qram", preprocess=False, n=3, M_values=()),
        dict(encoder="ff-qram", preprocess=False, n=3, M_values=(2,), distribution="gaussian"),
    ],
)
def test_sweep_config_validation(kwargs):
    with pytest.raises(ValidationError):
        SweepConfig(**kwargs)


def test_two_pattern_points():
    cfg = SweepConfig("ff-qram", False, 4, distribution=TWO_PATTERN)
    assert cfg.points() == [(1, 2), (2, 2), (3, 2), (4, 2)]


# -- sweeps


def test_two_pattern_ff_collapse():
    rows = run_sweep(SweepConfig("ff-qram", False, 8, distribution=TWO_PATTERN))
    assert [r.n for r in rows] == list(range(1, 9))
    assert abs(rows[2].exact_probability - 0.125) <= 1e-12
    for a, b in zip(rows, rows[1:]):
        assert abs(b.exact_probability - a.exact_probability / 2) <= 1e-15


def test_two_pattern_ffp_preprocessed_flat():
    rows = run_sweep(SweepConfig("ffp-qram", True, 8, distribution=TWO_PATTERN))
    for r in rows:
        assert abs(r.exact_probability - 5 / 7) <= 1e-12


def test_a_pqm_flat_line():
    rows = run_sweep(SweepConfig("a-pqm", False, 5, M_values=(4, 8, 16, 32)))
    for r in rows:
        assert r.exact_probability == r.sampled_probability == r.expected_repetitions == 1.0
        assert r.qubit_count == 7


def test_preprocessing_dominance_and_sparse_gain():
    rng = np.random.default_rng(12)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        data = generate_dataset(UNIFORM, n, int(rng.integers(1, 2**n + 1)), rng)
        _, c = preprocess_max_scale(data)
        for enc in ("ff-qram", "ffp-qram"):
            plain = exact_postselect_probability(encode(enc, data))
            pre = exact_postselect_probability(encode(enc, data, preprocess=True))
            assert pre >= plain - 1e-15
            if c < 1 - 1e-9:
                assert pre > plain
        ff = exact_postselect_probability(encode("ff-qram", data))
        ffp = exact_postselect_probability(encode("ffp-qram", data))
        assert abs(ffp - ff * 2**n / data.M) <= 1e-12


def test_sweep_rows_and_csv():
    cfg = SweepConfig("ffp-qram", True, 5, M_values=(4, 8), seed=3)
    rows = run_sweep(cfg)
    text = rows_to_csv(rows)
    lines = text.split("\n")
    assert lines[0] == ",".join(CSV_HEADER)
    assert text.endswith("\n") and "\r" not in text
    assert len(lines) == 4 and lines[-1] == ""
    fields = lines[1].split(",")
    assert fields[:4] == ["ffp-qram", "true", "5", "4"]
    assert float(fields[4]) == pytest.approx(rows[0].exact_probability, rel=1e-11)
    assert rows_to_csv(run_sweep(cfg)) == text


def test_parallel_sweep_matches_serial():
    cfg = SweepConfig("ff-qram", False, 5, M_values=(2, 4, 8, 16), seed=9)
    par = SweepConfig("ff-qram", False, 5, M_values=(2, 4, 8, 16), seed=9, workers=4)
    assert run_sweep(cfg) == run_sweep(par)


def test_csv_float_format():
    row = SweepRow("ff-qram", False, 3, 2, 1 / 3, 0.33, 3.0, 10, 4)
    assert row.csv_fields()[4] == "0.333333333333"
    assert row.csv_fields()[6] == "3"


def test_powers_of_two():
    assert powers_of_two(4, 64) == [4, 8, 16, 32, 64]
    assert powers_of_two(2, 3) == [2]


def test_deviation_is_flagged_not_fatal():
    cfg = SweepConfig("ff-qram", False, 2, M_values=(4,), shots=1)
    rows = run_sweep(cfg)
    assert len(rows) == 1
    # with a single shot the estimate is 0 or 1; flagged only when beyond 5 sigma
    r = rows[0]
    sigma = binomial_sigma(r.exact_probability, 1)
    assert r.flagged == (abs(r.sampled_probability - r.exact_probability) > 5 * sigma + 1e-12)
