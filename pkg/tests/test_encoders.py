from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qramsim.analysis import (
    ADVERSARIAL,
    exact_postselect_probability,
    fidelity_to_target,
    generate_dataset,
    loaded_state,
    point_rng,
)
from qramsim.circuit import Circuit, simulate
from qramsim.dataset import Dataset
from qramsim.encoders import (
    A_PQM,
    DETERMINISTIC,
    ENCODERS,
    a_pqm_encode,
    a_pqm_intermediate,
    encode,
    ff_qram_encode,
    ffp_qram_encode,
    plus_initial_state,
    pqm_memory_vector,
    pqm_store,
    preprocess_max_scale,
    target_state,
    theta_for_amplitude,
)
from qramsim.errors import AmplitudeDomainError, DatasetError, LayoutError, NormalizationError, ValidationError
from qramsim.statevector import RegisterLayout, StateVector, fidelity, new_state, project_postselect
from qramsim.verify import circuit_agreement, processing_mass, random_dataset

S = math.sqrt
WORKED = Dataset.from_pairs([(S(0.3), "000"), (S(0.7), "001")])
COMPLEX4 = Dataset.from_pairs(
    [(S(0.1) - 1j * S(0.2), "00"), (S(0.1) - 1j * S(0.1), "01"), (S(0.1), "10"), (S(0.4), "11")]
)


def kron_ff(data, alpha):
    """FF-QRAM by explicit operators: U_k = I + |p_k><p_k| (x) (Ry(theta_k) - I)."""
    n = data.n
    psi = np.kron(np.asarray(alpha, dtype=complex), [1, 0])
    for rec in data.records:
        theta = 2 * math.asin(rec.amplitude.real)
        ry = np.array([[math.cos(theta / 2), -math.sin(theta / 2)], [math.sin(theta / 2), math.cos(theta / 2)]])
        proj = np.zeros((2**n, 2**n))
        proj[rec.index, rec.index] = 1
        psi = (np.eye(2 ** (n + 1)) + np.kron(proj, ry - np.eye(2))) @ psi
    return psi


@st.composite
def real_datasets(draw, n_min=1, n_max=4):
    n = draw(st.integers(n_min, n_max))
    m = draw(st.integers(1, 2**n))
    idx = draw(st.permutations(range(2**n)))[:m]
    amps = np.array(draw(st.lists(st.floats(-1, 1), min_size=m, max_size=m)))
    if not np.any(abs(amps) > 1e-3):
        amps[0] = 1.0
    amps = amps / np.linalg.norm(amps)
    return Dataset.from_pairs(zip(amps, (format(i, f"0{n}b") for i in idx)), n)


@st.composite
def complex_datasets(draw, n_max=3):
    d = draw(real_datasets(1, n_max))
    phases = draw(st.lists(st.floats(-math.pi, math.pi), min_size=d.M, max_size=d.M))
    return d.with_amplitudes([a * cmath.exp(1j * p) for a, p in zip(d.amplitudes, phases)], normalized=True)


# -- theta


def test_theta_for_amplitude():
    assert round(theta_for_amplitude(S(0.3)), 4) == 1.1593
    assert round(theta_for_amplitude(S(0.7)), 4) == 1.9823
    assert theta_for_amplitude(0.0) == 0
    assert theta_for_amplitude(-0.5) == -theta_for_amplitude(0.5)
    with pytest.raises(AmplitudeDomainError, match="preprocess"):
        theta_for_amplitude(1.2)


# -- FF-QRAM


def test_ff_worked_example():
    res = ff_qram_encode(WORKED, plus_initial_state(3))
    assert abs(exact_postselect_probability(res) - 0.125) <= 1e-12
    assert abs(res.postselect_probability - 0.125) <= 1e-12
    post, p = project_postselect(res.final_state, 3, 1)
    assert abs(p - 0.125) <= 1e-12
    assert abs(post.amplitude("0001") - S(0.3)) <= 1e-12
    assert abs(post.amplitude("0011") - S(0.7)) <= 1e-12
    assert fidelity_to_target(res) >= 1 - 1e-10


def test_ff_single_bit_brute_force():
    data = Dataset.from_pairs([(1.0, "1")])
    res = ff_qram_encode(data)
    psi = kron_ff(data, [1 / S(2), 1 / S(2)])
    assert np.allclose(res.final_state.amplitudes, psi, atol=1e-15)
    assert abs(exact_postselect_probability(res) - 0.5) <= 1e-15


@settings(max_examples=60, deadline=None)
@given(real_datasets(), st.integers(0, 2**32 - 1))
def test_ff_matches_kron_operator_oracle(data, seed):
    rng = np.random.default_rng(seed)
    alpha = rng.normal(size=2**data.n) + 1j * rng.normal(size=2**data.n)
    alpha /= np.linalg.norm(alpha)
    initial = StateVector(RegisterLayout.of(("B", data.n), ("R", 1)), np.kron(alpha, [1, 0]))
    res = ff_qram_encode(data, initial)
    assert np.max(abs(res.final_state.amplitudes - kron_ff(data, alpha))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(real_datasets())
def test_ff_non_pattern_amplitudes_unchanged(data):
    init = plus_initial_state(data.n)
    res = ff_qram_encode(data, init)
    stored = {r.index for r in data.records}
    for i in range(2**data.n):
        if i not in stored:
            assert abs(res.final_state.amplitudes[2 * i] - init.amplitudes[2 * i]) <= 1e-12
            assert res.final_state.amplitudes[2 * i + 1] == 0


@pytest.mark.parametrize("n", range(2, 9))
def test_uniform_address_law(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        res = ff_qram_encode(random_dataset(rng, n))
        assert abs(exact_postselect_probability(res) - 2.0**-n) <= 1e-12


def test_ff_flip_flop_without_rotation_is_identity():
    res = ff_qram_encode(Dataset.from_pairs([(0.0, "0101"), (1.0, "0011")]))
    flips = Circuit(res.circuit.layout, tuple(g for g in res.circuit.gates if g.kind == "x"))
    for i in range(2**flips.num_qubits):
        s = new_state(flips.layout, i)
        assert np.array_equal(simulate(flips, s).amplitudes, s.amplitudes)


def test_ff_rejects_complex_and_large():
    with pytest.raises(AmplitudeDomainError, match="a_pqm_encode"):
        ff_qram_encode(COMPLEX4)
    with pytest.raises(AmplitudeDomainError):
        ff_qram_encode(Dataset.from_pairs([(1.5, "0")]))


def test_ff_rejects_bad_initial_state():
    with pytest.raises(LayoutError):
        ff_qram_encode(WORKED, new_state(RegisterLayout.of(("B", 3), ("R", 1)), "0001"))
    with pytest.raises(LayoutError):
        ff_qram_encode(WORKED, new_state(RegisterLayout.of(("B", 2), ("R", 1))))


def test_negative_amplitudes():
    data = Dataset.from_pairs([(-S(0.5), "01"), (S(0.5), "10")])
    res = ff_qram_encode(data)
    assert fidelity_to_target(res) >= 1 - 1e-12
    assert loaded_state(res).amplitude("01").real < 0


# -- PQM


def test_pqm_two_patterns():
    res = pqm_store(["00", "01"])
    amps = res.final_state.amplitudes
    h = 1 / S(2)
    assert abs(res.final_state.amplitude("01;00;00") - h) <= 1e-12
    assert abs(res.final_state.amplitude("01;00;01") - h) <= 1e-12
    assert np.sum(abs(amps) > 1e-12) == 2
    assert res.postselect_probability == DETERMINISTIC
    assert res.qubit_count == 6


def test_pqm_single_pattern():
    assert np.allclose(pqm_memory_vector(["1"]), [0, 1], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pqm_all_patterns_uniform_by_circuit(n):
    patterns = ["".join(b) for b in itertools.product("01", repeat=n)]
    res = pqm_store(patterns)
    sim = simulate(res.circuit, res.initial_state)
    m = loaded_state(replace(res, final_state=sim))
    assert np.max(abs(m.amplitudes - 1 / S(2**n))) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(real_datasets(1, 3))
def test_pqm_uniform_at_every_iteration(data):
    res = pqm_store(data.patterns)
    M = data.M
    lay = res.circuit.layout
    for k in range(M + 1):
        s = simulate(res.circuit.prefix(k), res.initial_state)
        t = s.tensor()
        stored = 0.0
        for rec in data.records[:k]:
            # u = 00 with memory p_s; p holds the last loaded pattern
            amp = np.sum(t.reshape(2**data.n, 4, 2**data.n)[:, 0, rec.index])
            assert abs(abs(amp) - 1 / S(M)) <= 1e-12
            stored += abs(amp) ** 2
        assert abs(processing_mass(s) - (M - k) / M) <= 1e-12
        assert abs(stored + processing_mass(s) - 1) <= 1e-12
    assert lay.total_qubits == 2 * data.n + 2


def test_pqm_rejects_duplicates():
    with pytest.raises(DatasetError):
        pqm_store(["01", "01"])


# -- FFP-QRAM


@pytest.mark.parametrize("M", [2, 4, 8, 16, 32, 64])
def test_ffp_probability_is_one_over_m(M):
    rng = np.random.default_rng(M)
    res = ffp_qram_encode(random_dataset(rng, 6, M))
    assert abs(exact_postselect_probability(res) - 1 / M) <= 1e-12
    assert fidelity_to_target(res) >= 1 - 1e-10


def test_ffp_single_record():
    res = ffp_qram_encode(Dataset.from_pairs([(1.0, "101")]))
    assert abs(exact_postselect_probability(res) - 1) <= 1e-12
    assert abs(loaded_state(res).amplitude("101")) ** 2 == pytest.approx(1, abs=1e-12)


def test_ffp_versus_ff_sparse_gap():
    rng = np.random.default_rng(3)
    picks = rng.choice(256, 2, replace=False)
    data = Dataset.from_pairs(zip([S(0.3), S(0.7)], (format(int(i), "08b") for i in picks)))
    p_ffp = exact_postselect_probability(ffp_qram_encode(data))
    p_ff = exact_postselect_probability(ff_qram_encode(data))
    assert abs(p_ffp - 0.5) <= 1e-12 and abs(p_ff - 2**-8) <= 1e-12
    assert abs(p_ffp / p_ff - 128) <= 1e-9


def test_ffp_circuit_matches_direct_state():
    rng = np.random.default_rng(0)
    for _ in range(5):
        f, _ = circuit_agreement(ffp_qram_encode(random_dataset(rng, 3)))
        assert f >= 1 - 1e-10


# -- preprocessing


def test_preprocess_two_pattern():
    scaled, c = preprocess_max_scale(WORKED)
    assert abs(c - S(0.7)) <= 1e-15
    assert np.allclose(scaled.amplitudes, [S(3 / 7), 1.0], atol=1e-15)
    assert not scaled.normalized
    p = exact_postselect_probability(ffp_qram_encode(scaled))
    assert abs(p - 5 / 7) <= 1e-12


def test_preprocess_uniform_is_certain():
    data = Dataset.from_patterns(["00", "01", "11"])
    scaled, c = preprocess_max_scale(data)
    assert abs(exact_postselect_probability(ffp_qram_encode(scaled)) - 1) <= 1e-12


def test_preprocess_all_zero():
    with pytest.raises(DatasetError):
        preprocess_max_scale(Dataset.from_pairs([(0.0, "0")]))


@settings(max_examples=40, deadline=None)
@given(real_datasets(1, 5))
def test_preprocessing_law(data):
    scaled, c = preprocess_max_scale(data)
    p = exact_postselect_probability(ffp_qram_encode(scaled))
    assert abs(p - 1 / (c * c * data.M)) <= 1e-12


def test_preprocess_adversarial_full_width():
    data = generate_dataset(ADVERSARIAL, 11, 2048, point_rng(0, 0), peak=0.99)
    c = max(abs(data.amplitudes))
    res = encode("ffp-qram", data, preprocess=True)
    p = exact_postselect_probability(res)
    assert abs(p - 1 / (c * c * 2048)) <= 1e-10
    assert abs(c - 0.99) <= 1e-3
    assert abs(p - 4.98e-4) <= 5e-6
    assert res.initial_state is None  # 25 qubits: circuit is not simulated densely


# -- A-PQM


def test_a_pqm_worked_example():
    res = a_pqm_encode(COMPLEX4)
    want = [S(0.1) - 1j * S(0.2), S(0.1) - 1j * S(0.1), S(0.1), S(0.4)]
    for i, w in enumerate(want):
        assert abs(res.final_state.amplitude("00" + format(i, "02b")) - w) <= 1e-12
    assert abs(np.linalg.norm(res.final_state.amplitudes[:4]) - 1) <= 1e-12
    assert res.postselect_probability == DETERMINISTIC
    assert res.qubit_count == 4
    assert fidelity(loaded_state(res), target_state(COMPLEX4)) >= 1 - 1e-10


def test_a_pqm_circuit_matches_worked_example():
    res = a_pqm_encode(COMPLEX4)
    sim = simulate(res.circuit, res.initial_state)
    assert np.max(abs(sim.amplitudes - res.final_state.amplitudes)) <= 1e-12


def test_a_pqm_single_record():
    res = a_pqm_encode(Dataset.from_pairs([(1.0, "101")]))
    assert abs(res.final_state.amplitude("00101") - 1) <= 1e-12


def test_a_pqm_all_patterns_n3():
    rng = np.random.default_rng(8)
    data = random_dataset(rng, 3, 8, complex_=True)
    res = a_pqm_encode(data)
    dense = np.zeros(8, dtype=complex)
    for r in data.records:
        dense[r.index] = r.amplitude
    assert abs(np.vdot(loaded_state(res).amplitudes, dense)) ** 2 >= 1 - 1e-10


def test_a_pqm_gamma_bookkeeping():
    amps = COMPLEX4.amplitudes
    gamma = 1.0
    for k in range(1, COMPLEX4.M + 1):
        s = a_pqm_intermediate(COMPLEX4, k)
        gamma -= abs(amps[k - 1]) ** 2
        assert abs(processing_mass(s) - max(gamma, 0)) <= 1e-12
        for j in range(k):
            assert abs(s.amplitude("00" + COMPLEX4.patterns[j]) - amps[j]) <= 1e-12


def test_a_pqm_zero_records():
    data = Dataset.from_pairs([(0.0, "00"), (0.6, "01"), (0.8j, "10"), (0.0, "11")])
    res = a_pqm_encode(data)
    assert fidelity_to_target(res) >= 1 - 1e-12
    assert circuit_agreement(res)[0] >= 1 - 1e-12


def test_a_pqm_rejects_unnormalized():
    with pytest.raises(NormalizationError, match="normalize"):
        a_pqm_encode(Dataset.from_pairs([(0.5, "0"), (0.5, "1")]))


@settings(max_examples=40, deadline=None)
@given(complex_datasets(), st.randoms(use_true_random=False))
def test_a_pqm_order_independent(data, rnd):
    recs = list(data.records)
    rnd.shuffle(recs)
    shuffled = Dataset(tuple(recs), data.n)
    a = loaded_state(a_pqm_encode(data))
    b = loaded_state(a_pqm_encode(shuffled))
    assert fidelity(a, b) >= 1 - 1e-10


@settings(max_examples=40, deadline=None)
@given(complex_datasets())
def test_a_pqm_against_dense_target(data):
    res = a_pqm_encode(data)
    assert res.final_state.norm() == pytest.approx(1, abs=1e-12)
    assert fidelity(loaded_state(res), target_state(data)) >= 1 - 1e-10


# -- agreement across encoders


@pytest.mark.parametrize("encoder", ENCODERS)
def test_circuit_agrees_with_direct_state(encoder):
    rng = np.random.default_rng(ENCODERS.index(encoder))
    for _ in range(10):
        n = int(rng.integers(1, 4))
        res = encode(encoder, random_dataset(rng, n, complex_=encoder == A_PQM))
        assert circuit_agreement(res)[0] >= 1 - 1e-10


def test_target_state():
    assert np.allclose(target_state(Dataset.from_pairs([(1.0, "0")])).amplitudes, [1, 0])
    assert abs(target_state(WORKED).norm() - 1) <= 1e-12
    with pytest.raises(NormalizationError):
        target_state(Dataset.from_pairs([(0.5, "0")]))


def test_encode_dispatch_errors():
    with pytest.raises(ValidationError):
        encode("bucket-brigade", WORKED)
    with pytest.raises(ValidationError):
        encode("ffp-qram", WORKED, initial=plus_initial_state(3))
