"""Dining-cryptographers and anonymous-veto runs over shared GHZ copies.

Every protocol starts from copies of (|0..0> - |1..1>)/sqrt2. An active
party (payer, vetoer) applies Z to its qubit in every remaining copy, which
flips the state to the "+" GHZ state exactly when the number of active
parties t is odd. A discrimination step measures every qubit in X: product
-1 means the copy is still |Psi_n>, +1 means it flipped.

The veto protocol then walks up the binary digits of t. In round k >= 1
the active parties additionally apply diag(1, exp(i*pi/2**k)) to a fresh
batch; given that all earlier rounds were unflipped (t divisible by 2**k),
the batch flips iff t = 2**k mod 2**(k+1). After ceil(log2(n+1)) unflipped
rounds t must be zero.

Even groups borrow an extra qubit: party 1 holds two qubits per copy and
always plays the second one as inactive.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

from . import ghzcheck
from .simnet import (
    PUBLIC,
    Network,
    ProtocolAbort,
    ProtocolConfig,
    Transcript,
    consistency_check,
    distribute_copies,
    private,
    split_streams,
)
from .statevec import PauliAxis, Statevector, apply_phase_gate, make_ghz, measure_pauli

PROTOCOLS = ("dc3", "dcn", "av")

EVEN, ODD = "even", "odd"
ZERO_PAY, SINGLE_PAY, DOUBLE_PAY, TRIPLE_PAY = "zero_pay", "single_pay", "double_pay", "triple_pay"
NSA_PAYS, ACCEPTED, CANCELLED = "nsa_pays", "payment_accepted", "payment_cancelled"
UNANIMITY, VETO = "unanimity_in_favor", "veto_detected"

SETTLEMENT = {ZERO_PAY: NSA_PAYS, SINGLE_PAY: ACCEPTED, DOUBLE_PAY: CANCELLED, TRIPLE_PAY: CANCELLED}


class GenuinenessRejected(RuntimeError):
    def __init__(self, report: ghzcheck.GenuinenessReport, transcript: Transcript):
        super().__init__(f"shared copies failed the GHZ check (pass rate {report.pass_rate:.3f})")
        self.report = report
        self.transcript = transcript


@dataclass(frozen=True)
class DecisionVector:
    """Per-party flags, party ids 1..n; True means pay / veto."""

    decisions: tuple[bool, ...]

    @classmethod
    def from_active(cls, n: int, active: Iterable[int]) -> DecisionVector:
        active = set(active)
        bad = [p for p in active if not 1 <= p <= n]
        if bad:
            raise ValueError(f"party ids {sorted(bad)} outside 1..{n}")
        return cls(tuple(p in active for p in range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.decisions)

    @property
    def t(self) -> int:
        return sum(self.decisions)

    def active(self) -> list[int]:
        return [p for p, d in enumerate(self.decisions, start=1) if d]

    def __getitem__(self, party: int) -> bool:
        return self.decisions[party - 1]


@dataclass(frozen=True)
class DcOutcome:
    parity: str
    subcase: str | None
    settlement: str

    def __post_init__(self):
        allowed = {EVEN: (ZERO_PAY, DOUBLE_PAY), ODD: (SINGLE_PAY, TRIPLE_PAY)}[self.parity]
        if self.subcase is not None:
            if self.subcase not in allowed:
                raise ValueError(f"{self.subcase} impossible with {self.parity} parity")
            if SETTLEMENT[self.subcase] != self.settlement:
                raise ValueError(f"{self.subcase} must settle as {SETTLEMENT[self.subcase]}")


@dataclass(frozen=True)
class AvOutcome:
    result: str
    stop_round: int
    rounds_run: int

    @property
    def residue(self) -> tuple[int, int] | None:
        """(r, m) such that the veto count t = r mod m, for a detected veto."""
        if self.result != VETO:
            return None
        return 2**self.stop_round, 2 ** (self.stop_round + 1)


@dataclass(frozen=True)
class Verdict:
    text: str
    code: str
    exit_code: int = 0


def settle(outcome: DcOutcome | AvOutcome) -> Verdict:
    if isinstance(outcome, DcOutcome):
        text = {NSA_PAYS: "NSA pays", ACCEPTED: "payment accepted", CANCELLED: "payment cancelled"}
        code = ":".join(x for x in (outcome.parity, outcome.subcase, outcome.settlement) if x)
        return Verdict(text[outcome.settlement], code)
    if outcome.result == UNANIMITY:
        return Verdict("decision carried unanimously", f"{UNANIMITY}:{outcome.rounds_run}")
    r, m = outcome.residue
    return Verdict(f"vetoed; count ≡ {r} (mod {m})", f"{VETO}:{outcome.stop_round}")


# -- per-qubit roles -------------------------------------------------------

def spare_qubits(owners: Sequence[int]) -> set[int]:
    """Second and later qubits of a party; always played as inactive."""
    seen, spare = set(), set()
    for q, p in enumerate(owners):
        if p in seen:
            spare.add(q)
        seen.add(p)
    return spare


def qubit_activity(decisions: DecisionVector, owners: Sequence[int]) -> tuple[bool, ...]:
    spare = spare_qubits(owners)
    return tuple(decisions[p] and q not in spare for q, p in enumerate(owners))


def party_owners(n: int, even_adapter: bool = False) -> tuple[int, ...]:
    if even_adapter:
        return (1,) + tuple(range(1, n + 1))
    return tuple(range(1, n + 1))


def discrimination_axes(n_qubits: int) -> list[PauliAxis]:
    return [PauliAxis.X] * n_qubits


def s3_axes(active: Sequence[bool], parity: str) -> list[PauliAxis]:
    """Subcase bases for three parties: with even parity the active parties
    measure Y and the rest X; with odd parity the other way round."""
    on, off = (PauliAxis.Y, PauliAxis.X) if parity == EVEN else (PauliAxis.X, PauliAxis.Y)
    return [on if a else off for a in active]


def av_rounds(n_qubits: int) -> int:
    """ceil(log2(n+1)): enough binary digits to cover every t <= n."""
    return n_qubits.bit_length()


def prepare_copy(active: Sequence[bool], level: int | None = None) -> Statevector:
    """State of one copy after encoding, optionally followed by a veto-round
    phase gate of the given level on the active qubits."""
    st = make_ghz(len(active), "minus")
    for q, a in enumerate(active):
        if a:
            st = apply_phase_gate(st, q, 0)
            if level:
                st = apply_phase_gate(st, q, level)
    return st


# -- protocol steps --------------------------------------------------------

def _encode(net: Network, active: Sequence[bool], level: int, step: str, ids=None) -> None:
    qubits = [q for q, a in enumerate(active) if a]
    net.registry.apply_phase(qubits, level, ids)
    for p in sorted({net.owners[q] for q in qubits}):
        net.transcript.append("GATE", step=step, party=p, label=f"level={level}", visibility=private(p))


def _measure_step(net: Network, step: str, ids: Sequence[int], axes: Sequence[PauliAxis]) -> int:
    """Measure the selected copies, broadcast, and return the common product."""
    products = []
    for c in ids:
        state = net.registry.states[c]
        outcomes = []
        for q, axis in enumerate(axes):
            o, state = measure_pauli(state, q, axis, net.streams.nature)
            outcomes.append(o)
            owner = net.owners[q]
            net.transcript.append("MEASURE", step=step, copy=c, party=owner, qubit=q, outcome=o,
                                  label=axis.value, visibility=private(owner))
        net.registry.states[c] = state
        products.append(prod(net.broadcast(step, c, outcomes)))
    product = consistency_check(step, products, net.transcript)
    if product is None:
        raise ProtocolAbort(f"inconsistent announcements in step {step}", net.transcript)
    return product


def _check_decisions(decisions: DecisionVector, net: Network) -> tuple[bool, ...]:
    parties = sorted(set(net.owners))
    if parties != list(range(1, decisions.n + 1)):
        raise ValueError(f"{decisions.n} decisions for parties {parties}")
    return qubit_activity(decisions, net.owners)


def qdc3_run(decisions: DecisionVector, net: Network, cfg: ProtocolConfig) -> tuple[DcOutcome, Transcript]:
    """Three-party dining cryptographers with multiple-payment detection."""
    if decisions.n != 3 or net.registry.n_qubits != 3:
        raise ValueError("qdc3_run needs exactly three parties holding one qubit each")
    active = _check_decisions(decisions, net)
    _encode(net, active, 0, "S1")

    product = _measure_step(net, "S2", net.select(cfg.runs_per_step, "S2"), discrimination_axes(3))
    parity = EVEN if product == -1 else ODD
    if not cfg.s3_enabled:
        outcome = DcOutcome(parity, None, NSA_PAYS if parity == EVEN else ACCEPTED)
    else:
        product = _measure_step(net, "S3", net.select(cfg.runs_per_step, "S3"), s3_axes(active, parity))
        if parity == EVEN:
            subcase = ZERO_PAY if product == -1 else DOUBLE_PAY
        else:
            subcase = TRIPLE_PAY if product == 1 else SINGLE_PAY
        outcome = DcOutcome(parity, subcase, SETTLEMENT[subcase])
    _log_verdict(net.transcript, outcome)
    return outcome, net.transcript


def qdcn_run(decisions: DecisionVector, net: Network, cfg: ProtocolConfig) -> tuple[DcOutcome, Transcript]:
    """n-party dining cryptographers: encoding plus one parity step.

    Correct only when at most one party pays; two payers read as none.
    """
    if net.registry.n_qubits % 2 == 0:
        raise ValueError("generalized DC runs on an odd number of qubits; use the even adapter")
    active = _check_decisions(decisions, net)
    _encode(net, active, 0, "S1")
    product = _measure_step(net, "S2", net.select(cfg.runs_per_step, "S2"),
                            discrimination_axes(net.registry.n_qubits))
    outcome = DcOutcome(EVEN, None, NSA_PAYS) if product == -1 else DcOutcome(ODD, None, ACCEPTED)
    _log_verdict(net.transcript, outcome)
    return outcome, net.transcript


def qav_run(decisions: DecisionVector, net: Network, cfg: ProtocolConfig) -> tuple[AvOutcome, Transcript]:
    """Anonymous veto, stopping at the first round whose copies flip."""
    n_qubits = net.registry.n_qubits
    if n_qubits % 2 == 0:
        raise ValueError("the veto protocol runs on an odd number of qubits; use the even adapter")
    active = _check_decisions(decisions, net)
    _encode(net, active, 0, "S1")
    axes = discrimination_axes(n_qubits)
    m = av_rounds(n_qubits)
    outcome = None
    for k in range(m):
        step = f"R{k}"
        ids = net.select(cfg.runs_per_step, step)
        if k:
            _encode(net, active, k, step, ids)
        if _measure_step(net, step, ids, axes) == 1:
            outcome = AvOutcome(VETO, k, k + 1)
            break
    if outcome is None:
        outcome = AvOutcome(UNANIMITY, m - 1, m)
    _log_verdict(net.transcript, outcome)
    return outcome, net.transcript


def qav_even_adapter(decisions: DecisionVector, net: Network, cfg: ProtocolConfig) -> tuple[AvOutcome, Transcript]:
    if decisions.n % 2 or decisions.n < 4:
        raise ValueError("the even adapter is for even n >= 4")
    if net.owners != party_owners(decisions.n, even_adapter=True):
        raise ValueError("network was not set up with party 1 holding two qubits")
    return qav_run(decisions, net, cfg)


def _log_verdict(transcript: Transcript, outcome) -> None:
    v = settle(outcome)
    transcript.append("VERDICT", label=v.code, reason=v.text)


# -- sessions --------------------------------------------------------------

def max_steps(protocol: str, n_qubits: int, s3_enabled: bool = True) -> int:
    if protocol == "dc3":
        return 2 if s3_enabled else 1
    if protocol == "dcn":
        return 1
    if protocol == "av":
        return av_rounds(n_qubits)
    raise ValueError(f"unknown protocol {protocol!r}")


@dataclass
class SessionResult:
    outcome: DcOutcome | AvOutcome
    transcript: Transcript
    report: ghzcheck.GenuinenessReport | None
    verdict: Verdict


def build_network(protocol: str, cfg: ProtocolConfig, source=None) -> Network:
    """Seeded streams, START/OWNER records and freshly distributed copies.

    ``source`` overrides the copy source implied by ``cfg.adversary``.
    """
    from . import adversary

    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    if cfg.even_adapter and (cfg.n % 2 or cfg.n < 4):
        raise ValueError("the even adapter is for even n >= 4")
    if not cfg.even_adapter and protocol != "dc3" and cfg.n % 2 == 0:
        raise ValueError(f"{protocol} needs odd n; pass even_adapter for n={cfg.n}")
    if protocol == "dc3" and (cfg.n != 3 or cfg.even_adapter):
        raise ValueError("dc3 is the three-party protocol")
    owners = party_owners(cfg.n, cfg.even_adapter)
    spec = cfg.adversary or adversary.AdversarySpec()
    spec.validate(cfg.n)
    streams = split_streams(cfg.seed, cfg.n)
    transcript = Transcript()
    transcript.append("START", label=protocol)
    for q, p in enumerate(owners):
        transcript.append("OWNER", qubit=q, party=p)
    if source is None:
        source = adversary.source_for(spec, len(owners), streams.source)
    total = cfg.resolve_copies(max_steps(protocol, len(owners), cfg.s3_enabled))
    registry = distribute_copies(owners, total, source, transcript)
    return Network(registry, transcript, streams, adversary.policies_for(spec))


def verify_network(net: Network, rounds: int) -> ghzcheck.GenuinenessReport:
    """Spend ``rounds`` randomly chosen copies on the GHZ eigenvalue test."""
    ids = net.select(rounds, "verify")
    tr = net.transcript

    def log(rec: ghzcheck.RoundRecord) -> None:
        c = ids[rec.run_id]
        verifier = net.owners[rec.verifier - 1]
        for q, o in enumerate(rec.outcomes):
            tr.append("ANNOUNCE", step="verify", copy=c, party=net.owners[q], qubit=q, order=q, outcome=o)
        tr.append("VERIFY", step="verify", copy=c, party=verifier, outcome=rec.product,
                  label=f"O{rec.operator}", reason="pass" if rec.passed else "fail")

    states = (net.registry.states[c] for c in ids)
    return ghzcheck.run_verification(states, net.registry.n_qubits, rounds,
                                     net.streams.verification, on_round=log)


def run_session(protocol: str, decisions: DecisionVector, cfg: ProtocolConfig, source=None) -> SessionResult:
    """Distribute, verify, run and settle one protocol instance.

    Raises GenuinenessRejected if any verification round fails and
    ProtocolAbort when announcements disagree or copies run out; both carry
    the partial transcript.
    """
    if decisions.n != cfg.n:
        raise ValueError(f"{decisions.n} decisions for n={cfg.n}")
    net = build_network(protocol, cfg, source)
    report = None
    if cfg.verification_rounds:
        report = verify_network(net, cfg.verification_rounds)
        if report.verdict != "genuine":
            net.transcript.append("ABORT", step="verify", reason="genuineness check failed")
            raise GenuinenessRejected(report, net.transcript)
    for p in range(1, decisions.n + 1):
        net.transcript.append("DECIDE", party=p, label="active" if decisions[p] else "inactive",
                              visibility=private(p))
    run = {"dc3": qdc3_run, "dcn": qdcn_run, "av": qav_even_adapter if cfg.even_adapter else qav_run}[protocol]
    outcome, transcript = run(decisions, net, cfg)
    return SessionResult(outcome, transcript, report, settle(outcome))


# -- public reconstruction -------------------------------------------------

def step_products(transcript: Transcript) -> dict[str, list[int]]:
    """Per-step list of announced products, one per copy, from public records."""
    by_copy: dict[tuple[str, int], list[int]] = {}
    order: list[tuple[str, int]] = []
    for r in transcript:
        if r.type == "ANNOUNCE" and r.visibility == PUBLIC and r.step != "verify":
            key = (r.step, r.copy)
            if key not in by_copy:
                by_copy[key] = []
                order.append(key)
            by_copy[key].append(r.outcome)
    out: dict[str, list[int]] = {}
    for step, c in order:
        out.setdefault(step, []).append(prod(by_copy[(step, c)]))
    return out


def verdict_from_public(transcript: Transcript) -> Verdict:
    """Recompute the verdict using public records only."""
    pub = transcript.public()
    protocol = pub.protocol()
    steps = step_products(pub)

    def common(step: str) -> int:
        vals = set(steps[step])
        if len(vals) != 1:
            raise ProtocolAbort(f"inconsistent announcements in step {step}", transcript)
        return vals.pop()

    if protocol in ("dc3", "dcn"):
        parity = EVEN if common("S2") == -1 else ODD
        if protocol == "dc3" and "S3" in steps:
            p3 = common("S3")
            if parity == EVEN:
                subcase = ZERO_PAY if p3 == -1 else DOUBLE_PAY
            else:
                subcase = TRIPLE_PAY if p3 == 1 else SINGLE_PAY
            return settle(DcOutcome(parity, subcase, SETTLEMENT[subcase]))
        return settle(DcOutcome(parity, None, NSA_PAYS if parity == EVEN else ACCEPTED))

    n_qubits = len(pub.owners())
    m = av_rounds(n_qubits)
    for k in range(m):
        step = f"R{k}"
        if step not in steps:
            raise ValueError(f"transcript ends before round {k}")
        if common(step) == 1:
            return settle(AvOutcome(VETO, k, k + 1))
    return settle(AvOutcome(UNANIMITY, m - 1, m))
