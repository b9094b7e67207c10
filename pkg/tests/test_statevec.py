import itertools
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import dense_expectation, ghz_amps, projector_probability
from ghzanon.statevec import (
    CapacityError,
    PauliAxis,
    PauliString,
    PhaseGate,
    Statevector,
    apply_phase_gate,
    apply_pauli,
    expectation,
    ghz_discriminate,
    make_ghz,
    measure_all,
    measure_pauli,
    outcome_distribution,
    overlap,
)


def test_make_ghz_three_minus():
    st3 = make_ghz(3, "minus")
    assert st3.amps[0] == pytest.approx(1 / sqrt(2))
    assert st3.amps[7] == pytest.approx(-1 / sqrt(2))
    assert np.count_nonzero(st3.amps) == 2


def test_make_ghz_single_qubit_plus():
    np.testing.assert_allclose(make_ghz(1, "plus").amps, [1 / sqrt(2), 1 / sqrt(2)])


def test_make_ghz_five_minus():
    st5 = make_ghz(5, "minus")
    assert st5.amps[0] == pytest.approx(1 / sqrt(2))
    assert st5.amps[31] == pytest.approx(-1 / sqrt(2))
    assert np.count_nonzero(st5.amps) == 2


@pytest.mark.parametrize("n", [0, 25, -1])
def test_make_ghz_capacity(n):
    with pytest.raises(CapacityError):
        make_ghz(n)


def test_basis_ordering_qubit0_is_most_significant():
    # X on qubit 0 of |000> gives |100>, index 4
    st = apply_pauli(Statevector.basis(3), PauliString.parse("XII"))
    assert abs(st.amps[4]) == pytest.approx(1.0)


def test_phase_gate_level0_is_z():
    np.testing.assert_allclose(PhaseGate(0).matrix(), np.diag([1, -1]))
    np.testing.assert_allclose(PhaseGate(1).matrix(), np.diag([1, 1j]), atol=1e-15)
    np.testing.assert_allclose(PhaseGate(2).matrix(), np.diag([1, np.exp(1j * np.pi / 4)]))
    with pytest.raises(ValueError):
        PhaseGate(-1)


@pytest.mark.parametrize("pair", list(itertools.combinations(range(3), 2)))
def test_two_z_gates_leave_ghz_unchanged(pair):
    st = make_ghz(3)
    for q in pair:
        st = apply_phase_gate(st, q, PhaseGate(0))
    assert overlap(st, make_ghz(3, "minus")) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("q", range(3))
def test_single_z_gate_flips_ghz(q):
    st = apply_phase_gate(make_ghz(3), q, PhaseGate(0))
    assert overlap(st, make_ghz(3, "plus")) == pytest.approx(1.0, abs=1e-12)


def test_all_three_z_flip_ghz():
    st = make_ghz(3)
    for q in range(3):
        st = apply_phase_gate(st, q, 0)
    assert overlap(st, make_ghz(3, "plus")) == pytest.approx(1.0, abs=1e-12)


def test_level1_after_level0_two_of_five_flips():
    st = make_ghz(5)
    for q in (1, 3):
        st = apply_phase_gate(st, q, 0)
        st = apply_phase_gate(st, q, 1)
    # direct amplitude check: |11111> picks up (-1)^2 * i^2 = -1
    assert st.amps[31] / st.amps[0] == pytest.approx(1.0)
    assert overlap(st, make_ghz(5, "plus")) == pytest.approx(1.0, abs=1e-12)


def test_phase_gate_bad_qubit():
    with pytest.raises(IndexError):
        apply_phase_gate(make_ghz(3), 3, 0)


@pytest.mark.parametrize("n", range(1, 10))
def test_phase_composition_law(n):
    """Level-0 then level-k by the same t parties: |Psi_n> when
    t = 0 mod 2^(k+1), |Psi_n^perp> when t = 2^k mod 2^(k+1)."""
    psi, perp = make_ghz(n, "minus"), make_ghz(n, "plus")
    for k in range(1, 5):
        for t in range(n + 1):
            st = make_ghz(n)
            for q in range(t):
                st = apply_phase_gate(apply_phase_gate(st, q, 0), q, k)
            assert abs(st.norm() - 1) < 1e-12
            if t % 2 ** (k + 1) == 0:
                assert overlap(st, psi) == pytest.approx(1.0, abs=1e-12)
            elif t % 2 ** (k + 1) == 2**k:
                assert overlap(st, perp) == pytest.approx(1.0, abs=1e-12)


GHZ_MINUS = [("XXX", -1), ("XYY", 1), ("YXY", 1), ("YYX", 1)]


@pytest.mark.parametrize("word,sign", GHZ_MINUS)
def test_ghz_minus_stabilizers(word, sign):
    st = make_ghz(3, "minus")
    assert expectation(st, PauliString.parse(word)) == pytest.approx(sign, abs=1e-9)
    assert dense_expectation(st.amps, word) == pytest.approx(sign, abs=1e-9)


@pytest.mark.parametrize("word,sign", [(w, -s) for w, s in GHZ_MINUS])
def test_ghz_plus_stabilizers(word, sign):
    st = make_ghz(3, "plus")
    assert expectation(st, PauliString.parse(word)) == pytest.approx(sign, abs=1e-9)


def test_identity_expectation():
    assert expectation(Statevector.basis(4), PauliString.parse("IIII")) == pytest.approx(1.0)


def test_expectation_length_mismatch():
    with pytest.raises(ValueError):
        expectation(make_ghz(3), PauliString.parse("XX"))


def random_state(seed, n):
    r = np.random.default_rng(seed)
    a = r.normal(size=2**n) + 1j * r.normal(size=2**n)
    return Statevector(n, a / np.linalg.norm(a))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), words=st.text("IXYZ", min_size=1, max_size=5))
def test_expectation_matches_dense_oracle(seed, words):
    st_ = random_state(seed, len(words))
    assert expectation(st_, PauliString.parse(words)) == pytest.approx(
        dense_expectation(st_.amps, words).real, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), data=st.data())
def test_outcome_distribution_matches_projectors(seed, n, data):
    st_ = random_state(seed, n)
    axes = data.draw(st.lists(st.sampled_from("XYZ"), min_size=n, max_size=n))
    dist = outcome_distribution(st_, axes)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    for outcome, p in dist.items():
        assert p == pytest.approx(projector_probability(st_.amps, axes, outcome), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), data=st.data())
def test_measurement_preserves_norm_and_is_idempotent(seed, n, data):
    st_ = random_state(seed, n)
    q = data.draw(st.integers(0, n - 1))
    axis = data.draw(st.sampled_from(list(PauliAxis)))
    rng = np.random.default_rng(seed)
    o1, post = measure_pauli(st_, q, axis, rng)
    assert abs(post.norm() - 1) < 1e-12
    for _ in range(5):
        o2, post = measure_pauli(post, q, axis, rng)
        assert o2 == o1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), level=st.integers(0, 6), data=st.data())
def test_phase_gate_preserves_norm(seed, n, level, data):
    st_ = random_state(seed, n)
    q = data.draw(st.integers(0, n - 1))
    out = apply_phase_gate(st_, q, level)
    assert abs(out.norm() - 1) < 1e-12


def test_collapsed_state_is_eigenstate(rng):
    o, post = measure_pauli(make_ghz(3), 1, "Y", rng)
    word = "IYI"
    assert dense_expectation(post.amps, word).real == pytest.approx(o, abs=1e-12)


def test_xxx_product_always_minus_one(rng):
    for _ in range(200):
        order = rng.permutation(3)
        st_ = make_ghz(3)
        outs = []
        for q in order:
            o, st_ = measure_pauli(st_, int(q), PauliAxis.X, rng)
            outs.append(o)
        assert np.prod(outs) == -1


def test_z_measure_of_zero_state(rng):
    st0 = Statevector.basis(4)
    for _ in range(50):
        o, post = measure_pauli(st0, 0, "Z", rng)
        assert o == 1
        assert overlap(post, st0) == pytest.approx(1.0)


def test_x_marginal_on_ghz_is_half(rng):
    # Born oracle: the reduced state of one GHZ qubit is I/2
    assert projector_probability(ghz_amps(3), "XII", (1, 1, 1)) + \
        projector_probability(ghz_amps(3), "XII", (1, -1, 1)) + \
        projector_probability(ghz_amps(3), "XII", (1, 1, -1)) + \
        projector_probability(ghz_amps(3), "XII", (1, -1, -1)) == pytest.approx(0.5)
    trials = 10_000
    plus = sum(measure_pauli(make_ghz(3), 0, "X", rng)[0] == 1 for _ in range(trials))
    sigma = sqrt(trials * 0.25)
    assert abs(plus - trials / 2) < 3 * sigma


def test_discriminate_genuine_states(rng):
    for _ in range(100):
        assert ghz_discriminate(make_ghz(3, "minus"), rng)[0] == "psi"
        assert ghz_discriminate(make_ghz(5, "plus"), rng)[0] == "psi_perp"
    # oracle: X^5 eigenvalue on the plus state
    assert dense_expectation(ghz_amps(5, +1), "XXXXX").real == pytest.approx(1.0)


def test_discriminate_product_state_is_coin(rng):
    # every X-outcome tuple of |00000> has probability 1/32, so parity is fair
    dist = outcome_distribution(Statevector.basis(5), "XXXXX")
    assert all(p == pytest.approx(1 / 32) for p in dist.values())
    trials = 10_000
    hits = sum(ghz_discriminate(Statevector.basis(5), rng)[0] == "psi" for _ in range(trials))
    assert abs(hits - trials / 2) < 3 * sqrt(trials * 0.25)


@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_proper_subsets_of_x_outcomes_are_uniform(n):
    dist = outcome_distribution(make_ghz(n), "X" * n)
    for size in range(1, n):
        for subset in itertools.combinations(range(n), size):
            marg = {}
            for outcome, p in dist.items():
                key = tuple(outcome[i] for i in subset)
                marg[key] = marg.get(key, 0.0) + p
            assert len(marg) == 2**size
            for p in marg.values():
                assert p == pytest.approx(2.0**-size, abs=1e-12)


def test_measure_all_length_check(rng):
    with pytest.raises(ValueError):
        measure_all(make_ghz(3), "XX", rng)


def test_pauli_string_rejects_junk():
    with pytest.raises(ValueError):
        PauliString.parse("XQ")
