import itertools

import numpy as np
import pytest

from conftest import PAULI, dense_expectation, ghz_amps, kron_all
from ghzanon.protocols import (
    ACCEPTED,
    CANCELLED,
    NSA_PAYS,
    UNANIMITY,
    VETO,
    AvOutcome,
    DcOutcome,
    DecisionVector,
    build_network,
    qav_even_adapter,
    qdc3_run,
    run_session,
    settle,
    verdict_from_public,
)
from ghzanon.simnet import InsufficientCopies, ProtocolConfig


def oracle_dc3(payers):
    """Classify a payer set from expectation values of the encoded state."""
    z = [PAULI["Z"] if p in payers else PAULI["I"] for p in (1, 2, 3)]
    amps = kron_all(z) @ ghz_amps(3)
    xxx = dense_expectation(amps, "XXX").real
    parity = "even" if np.isclose(xxx, -1) else "odd"
    on, off = ("Y", "X") if parity == "even" else ("X", "Y")
    word = "".join(on if p in payers else off for p in (1, 2, 3))
    val = dense_expectation(amps, word).real
    assert np.isclose(abs(val), 1)
    if parity == "even":
        sub = "zero_pay" if val < 0 else "double_pay"
    else:
        sub = "triple_pay" if val > 0 else "single_pay"
    return parity, sub


SUBSETS = [set(c) for r in range(4) for c in itertools.combinations((1, 2, 3), r)]


@pytest.mark.parametrize("payers", SUBSETS, ids=lambda s: "".join("ABC"[p - 1] for p in sorted(s)) or "none")
def test_dc3_truth_table(payers):
    parity, sub = oracle_dc3(payers)
    for seed in range(10):
        res = run_session("dc3", DecisionVector.from_active(3, payers), ProtocolConfig(n=3, seed=seed))
        assert (res.outcome.parity, res.outcome.subcase) == (parity, sub)


@pytest.mark.parametrize("payers,expected", [
    (set(), ("even", "zero_pay", NSA_PAYS)),
    ({2}, ("odd", "single_pay", ACCEPTED)),
    ({1, 2, 3}, ("odd", "triple_pay", CANCELLED)),
    ({1, 3}, ("even", "double_pay", CANCELLED)),
])
def test_dc3_examples(payers, expected):
    o = run_session("dc3", DecisionVector.from_active(3, payers), ProtocolConfig(n=3, seed=1)).outcome
    assert (o.parity, o.subcase, o.settlement) == expected


def test_dc3_without_s3():
    cfg = ProtocolConfig(n=3, seed=4, s3_enabled=False)
    res = run_session("dc3", DecisionVector.from_active(3, [1]), cfg)
    assert res.outcome == DcOutcome("odd", None, ACCEPTED)
    assert "S3" not in {r.step for r in res.transcript.of_type("SELECT")}


@pytest.mark.parametrize("n,active,settlement", [
    (5, [], NSA_PAYS), (5, [3], ACCEPTED), (3, [1], ACCEPTED), (9, [9], ACCEPTED),
])
def test_dcn_examples(n, active, settlement):
    res = run_session("dcn", DecisionVector.from_active(n, active), ProtocolConfig(n=n, seed=2))
    assert res.outcome.settlement == settlement


def test_dcn_double_payment_reads_as_none():
    res = run_session("dcn", DecisionVector.from_active(7, [2, 5]), ProtocolConfig(n=7, seed=2))
    assert res.outcome == DcOutcome("even", None, NSA_PAYS)


def test_dcn_even_needs_adapter():
    with pytest.raises(ValueError):
        run_session("dcn", DecisionVector.from_active(4, [1]), ProtocolConfig(n=4))
    res = run_session("dcn", DecisionVector.from_active(4, [1]), ProtocolConfig(n=4, even_adapter=True))
    assert res.outcome.settlement == ACCEPTED


@pytest.mark.parametrize("n,active,result,stop", [
    (5, [], UNANIMITY, 2),
    (5, [2, 4], VETO, 1),
    (7, [1, 2, 3, 4], VETO, 2),
    (3, [3], VETO, 0),
])
def test_av_examples(n, active, result, stop):
    res = run_session("av", DecisionVector.from_active(n, active), ProtocolConfig(n=n, seed=5))
    assert res.outcome.result == result
    assert res.outcome.stop_round == stop
    if result == UNANIMITY:
        assert res.outcome.rounds_run == 3


def test_av_residue_values():
    assert AvOutcome(VETO, 1, 2).residue == (2, 4)
    assert AvOutcome(VETO, 0, 1).residue == (1, 2)
    assert AvOutcome(UNANIMITY, 2, 3).residue is None


@pytest.mark.parametrize("n", [3, 5, 7])
def test_av_exhaustive_small(n):
    for bits in itertools.product((False, True), repeat=n):
        d = DecisionVector(bits)
        o = run_session("av", d, ProtocolConfig(n=n, seed=sum(bits), verification_rounds=0)).outcome
        assert (o.result == UNANIMITY) == (d.t == 0)
        if o.result == VETO:
            r, m = o.residue
            assert d.t % m == r


@pytest.mark.parametrize("n,active,result,residue", [
    (4, [], UNANIMITY, None),
    (4, [1], VETO, (1, 2)),
    (6, [2, 3], VETO, (2, 4)),
    (8, [1, 2, 3, 4], VETO, (4, 8)),
])
def test_even_adapter_examples(n, active, result, residue):
    res = run_session("av", DecisionVector.from_active(n, active), ProtocolConfig(n=n, seed=3, even_adapter=True))
    assert res.outcome.result == result
    assert res.outcome.residue == residue


@pytest.mark.parametrize("n", [4, 6])
def test_even_adapter_neutrality(n):
    """Adapter on n parties == plain run on n+1 parties with the extra one in favor."""
    for bits in itertools.product((False, True), repeat=n):
        d = DecisionVector(bits)
        a = run_session("av", d, ProtocolConfig(n=n, seed=7, even_adapter=True)).outcome
        b = run_session("av", DecisionVector(bits + (False,)), ProtocolConfig(n=n + 1, seed=7)).outcome
        assert a == b


def test_even_adapter_rejects_plain_network():
    cfg = ProtocolConfig(n=5)
    net = build_network("av", cfg)
    with pytest.raises(ValueError):
        qav_even_adapter(DecisionVector.from_active(4, []), net, cfg)


@pytest.mark.parametrize("protocol,n,active,steps", [
    ("dc3", 3, [1], 2), ("dcn", 5, [], 1), ("av", 7, [], 3), ("av", 7, [1, 2], 2), ("av", 9, [1], 1),
])
@pytest.mark.parametrize("rps", [1, 2, 3])
def test_copy_accounting(protocol, n, active, steps, rps):
    cfg = ProtocolConfig(n=n, seed=11, runs_per_step=rps, verification_rounds=5, total_copies=40)
    tr = run_session(protocol, DecisionVector.from_active(n, active), cfg).transcript
    selected = [r.copy for r in tr.of_type("SELECT")]
    assert len(selected) == len(set(selected))
    assert len([r for r in tr.of_type("SELECT") if r.step != "verify"]) == steps * rps
    assert len([r for r in tr.of_type("SELECT") if r.step == "verify"]) == 5


def test_insufficient_copies():
    cfg = ProtocolConfig(n=3, runs_per_step=2, verification_rounds=0)
    net = build_network("dc3", cfg)
    net.registry.consumed.update(net.registry.free()[:3])
    with pytest.raises(InsufficientCopies):
        qdc3_run(DecisionVector.from_active(3, []), net, cfg)


@pytest.mark.parametrize("protocol,n,active", [
    ("dc3", 3, [1, 3]), ("dc3", 3, [2]), ("dcn", 5, [5]), ("av", 9, [1, 2, 3, 4, 5, 6]),
    ("av", 7, []),
])
def test_verdict_reconstructible_from_public(protocol, n, active):
    for seed in range(5):
        res = run_session(protocol, DecisionVector.from_active(n, active), ProtocolConfig(n=n, seed=seed))
        assert verdict_from_public(res.transcript) == res.verdict
        (v,) = res.transcript.of_type("VERDICT")
        assert v.reason == res.verdict.text


def test_settle_labels():
    assert settle(DcOutcome("even", "zero_pay", NSA_PAYS)).text == "NSA pays"
    assert settle(DcOutcome("odd", "single_pay", ACCEPTED)).text == "payment accepted"
    assert settle(AvOutcome(UNANIMITY, 2, 3)).text == "decision carried unanimously"
    assert settle(AvOutcome(VETO, 1, 2)).text == "vetoed; count ≡ 2 (mod 4)"


def test_dc_outcome_invariants():
    with pytest.raises(ValueError):
        DcOutcome("even", "single_pay", ACCEPTED)
    with pytest.raises(ValueError):
        DcOutcome("odd", "triple_pay", ACCEPTED)


def test_decision_vector():
    d = DecisionVector.from_active(5, [2, 4])
    assert d.t == 2 and d.active() == [2, 4] and d[2] and not d[1]
    with pytest.raises(ValueError):
        DecisionVector.from_active(3, [4])


def test_decisions_stay_private():
    res = run_session("dc3", DecisionVector.from_active(3, [2]), ProtocolConfig(n=3, seed=0))
    decide = res.transcript.of_type("DECIDE")
    assert [r.visibility for r in decide] == ["private:1", "private:2", "private:3"]
    assert all(r.visibility.startswith("private") for r in res.transcript.of_type("MEASURE"))
    assert all(r.visibility.startswith("private") for r in res.transcript.of_type("GATE"))


def test_session_decision_count_mismatch():
    with pytest.raises(ValueError):
        run_session("av", DecisionVector.from_active(3, []), ProtocolConfig(n=5))
