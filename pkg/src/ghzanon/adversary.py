"""Dishonest parties, forged sources, and what colluders can infer."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import pi, prod, sqrt
from typing import Callable, Iterable, Sequence

import numpy as np

from .protocols import (
    EVEN,
    ODD,
    DecisionVector,
    av_rounds,
    discrimination_axes,
    prepare_copy,
    qubit_activity,
    s3_axes,
)
from .simnet import Policy, Transcript, private
from .statevec import Statevector, make_ghz, outcome_distribution

KINDS = ("honest", "last_flipper", "forged_source", "colluders")
SOURCE_KINDS = ("all_zero", "wrong_phase", "separable_random")
MAX_HYPOTHESES = 2**16


@dataclass(frozen=True)
class AdversarySpec:
    kind: str = "honest"
    party: int | None = None
    source_kind: str | None = None
    phase: float = pi
    colluders: frozenset[int] = frozenset()
    # None: the flipper cheats in every step it announces in
    flip_steps: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.kind == "last_flipper" and self.party is None:
            raise ValueError("last_flipper needs a party")
        if self.kind == "forged_source" and self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"forged_source needs one of {SOURCE_KINDS}")
        object.__setattr__(self, "colluders", frozenset(self.colluders))

    def validate(self, n: int) -> None:
        if self.party is not None and not 1 <= self.party <= n:
            raise ValueError(f"party {self.party} outside 1..{n}")
        if self.colluders:
            if not all(1 <= p <= n for p in self.colluders):
                raise ValueError(f"colluders {sorted(self.colluders)} outside 1..{n}")
            if len(self.colluders) >= n:
                raise ValueError("colluders must be a strict subset of the parties")

    @classmethod
    def parse(cls, text: str) -> AdversarySpec:
        """``honest``, ``last_flipper:P``, ``forged_source:KIND[:PHASE]``,
        ``colluders:P,Q,...``."""
        kind, _, rest = text.partition(":")
        if kind == "honest":
            return cls()
        if kind == "last_flipper":
            return cls(kind, party=int(rest))
        if kind == "forged_source":
            src, _, phase = rest.partition(":")
            return cls(kind, source_kind=src, phase=float(phase) if phase else pi)
        if kind == "colluders":
            return cls(kind, colluders=frozenset(int(p) for p in rest.split(",") if p))
        raise ValueError(f"unknown adversary {text!r}")

    def __str__(self) -> str:
        if self.kind == "last_flipper":
            return f"last_flipper:{self.party}"
        if self.kind == "forged_source":
            return f"forged_source:{self.source_kind}" + (f":{self.phase!r}" if self.source_kind == "wrong_phase" else "")
        if self.kind == "colluders":
            return "colluders:" + ",".join(map(str, sorted(self.colluders)))
        return "honest"


class LastFlipper:
    """Announces the negated outcome whenever it is the last to speak."""

    def __init__(self, steps: Iterable[str] | None = None):
        self.steps = None if steps is None else frozenset(steps)

    def __call__(self, step, outcome, heard, position, slots):
        if position == slots - 1 and (self.steps is None or step in self.steps):
            return -outcome
        return outcome


def last_flipper_behavior(party: int, steps: Iterable[str] | None = None) -> dict[int, Policy]:
    return {party: LastFlipper(steps)}


def policies_for(spec: AdversarySpec) -> dict[int, Policy]:
    if spec.kind == "last_flipper":
        return last_flipper_behavior(spec.party, spec.flip_steps)
    return {}


def flip_success_probability(slots: int, runs_per_step: int) -> float:
    """Chance a single last-announcer flips the step's verdict unnoticed:
    it must speak last in every one of the step's copies."""
    return (1 / slots) ** runs_per_step


def flip_abort_probability(slots: int, runs_per_step: int) -> float:
    p = 1 / slots
    return 1 - p**runs_per_step - (1 - p) ** runs_per_step


# -- sources ---------------------------------------------------------------

def genuine_source(n: int) -> Callable[[], Statevector]:
    return lambda: make_ghz(n, "minus")


def forged_source(kind: str, n: int, rng: np.random.Generator, phase: float = pi) -> Callable[[], Statevector]:
    """Stand-in copy sources for exercising the genuineness check.

    ``wrong_phase`` gives (|0..0> - e^{i phase}|1..1>)/sqrt2: phase 0 is the
    genuine state and phase pi is its orthogonal partner.
    ``separable_random`` draws a Haar-random pure state for every qubit of
    every copy.
    """
    if kind == "all_zero":
        return lambda: Statevector.basis(n, 0)
    if kind == "wrong_phase":
        def draw():
            amps = np.zeros(2**n, dtype=complex)
            amps[0] = 1 / sqrt(2)
            amps[-1] = -np.exp(1j * phase) / sqrt(2)
            return Statevector(n, amps)
        return draw
    if kind == "separable_random":
        def draw():
            qs = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
            qs /= np.linalg.norm(qs, axis=1, keepdims=True)
            return Statevector.product(qs)
        return draw
    raise ValueError(f"unknown source kind {kind!r}")


def source_for(spec: AdversarySpec, n_qubits: int, rng: np.random.Generator) -> Callable[[], Statevector]:
    if spec.kind == "forged_source":
        return forged_source(spec.source_kind, n_qubits, rng, spec.phase)
    return genuine_source(n_qubits)


# -- exact public distributions --------------------------------------------

def step_state(step: str, active: Sequence[bool]) -> Statevector:
    level = int(step[1:]) if step.startswith("R") else None
    return prepare_copy(active, level)


def step_axes(step: str, active: Sequence[bool], parity: str | None = None):
    if step == "S3":
        return s3_axes(active, parity)
    return discrimination_axes(len(active))


def honest_steps(protocol: str, decisions: DecisionVector, owners: Sequence[int],
                 s3_enabled: bool = True) -> list[str]:
    """Steps an honest run executes for these decisions."""
    if protocol == "dc3":
        return ["S2", "S3"] if s3_enabled else ["S2"]
    if protocol == "dcn":
        return ["S2"]
    t = sum(qubit_activity(decisions, owners))
    steps = []
    for k in range(av_rounds(len(owners))):
        steps.append(f"R{k}")
        if t % 2 ** (k + 1) == 2**k:
            break
    return steps


def announcement_distribution(protocol: str, decisions: DecisionVector, step: str,
                              owners: Sequence[int] | None = None) -> dict[tuple[int, ...], float]:
    """Born distribution of one copy's public outcome tuple (indexed by qubit)
    in an honest run. Announcement order is drawn independently of it."""
    owners = tuple(owners or range(1, decisions.n + 1))
    active = qubit_activity(decisions, owners)
    parity = ODD if sum(active) % 2 else EVEN
    return outcome_distribution(step_state(step, active), step_axes(step, active, parity))


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# -- collusion -------------------------------------------------------------

@dataclass
class Posterior:
    parties: tuple[int, ...]
    hypotheses: list[DecisionVector]
    weights: np.ndarray

    def weight(self, decisions: DecisionVector) -> float:
        for h, w in zip(self.hypotheses, self.weights):
            if h == decisions:
                return float(w)
        return 0.0

    def marginal(self, party: int) -> float:
        """Posterior probability that ``party`` is active."""
        return float(sum(w for h, w in zip(self.hypotheses, self.weights) if h[party]))

    def by_t(self) -> dict[int, list[float]]:
        out: dict[int, list[float]] = {}
        for h, w in zip(self.hypotheses, self.weights):
            out.setdefault(h.t, []).append(float(w))
        return out

    def map_estimate(self) -> DecisionVector:
        return self.hypotheses[int(np.argmax(self.weights))]


def colluder_infer(colluders: Iterable[int], transcript: Transcript,
                   protocol: str | None = None) -> Posterior:
    """Exact posterior over the other parties' decisions.

    The colluders see public records plus their own private ones. Each
    hypothesis is scored by the Born probability of every announced
    outcome tuple under an honest run, starting from a uniform prior.
    """
    colluders = frozenset(colluders)
    view = transcript.view_of(colluders)
    owners = transcript.owners()
    n = max(owners)
    protocol = protocol or transcript.protocol()
    if protocol not in ("dc3", "dcn", "av"):
        raise ValueError(f"unknown protocol {protocol!r}")
    if not colluders <= set(range(1, n + 1)) or len(colluders) >= n:
        raise ValueError("colluders must be a strict subset of the parties")

    known = {}
    for r in view.of_type("DECIDE"):
        if r.party in colluders and r.visibility == private(r.party):
            known[r.party] = r.label == "active"
    missing = colluders - known.keys()
    if missing:
        raise ValueError(f"no private decision records for colluders {sorted(missing)}")

    others = tuple(p for p in range(1, n + 1) if p not in colluders)
    if 2 ** len(others) > MAX_HYPOTHESES:
        raise ValueError(f"{2 ** len(others)} hypotheses exceed the {MAX_HYPOTHESES} limit")

    evidence: dict[tuple[str, int], dict[int, int]] = {}
    for r in view.of_type("ANNOUNCE"):
        if r.is_public and r.step != "verify":
            evidence.setdefault((r.step, r.copy), {})[r.qubit] = r.outcome
    tuples = [(step, tuple(v[q] for q in range(len(owners)))) for (step, _), v in evidence.items()]

    public_parity = None
    s2 = [prod(t) for step, t in tuples if step == "S2"]
    if s2:
        public_parity = EVEN if s2[0] == -1 else ODD

    hypotheses, weights = [], []
    cache: dict[tuple[str, tuple[bool, ...]], dict] = {}
    for bits in itertools.product((False, True), repeat=len(others)):
        d = dict(known)
        d.update(zip(others, bits))
        dv = DecisionVector(tuple(d[p] for p in range(1, n + 1)))
        active = qubit_activity(dv, owners)
        like = 1.0
        for step, outcome in tuples:
            key = (step, active)
            if key not in cache:
                cache[key] = outcome_distribution(step_state(step, active),
                                                  step_axes(step, active, public_parity))
            p = cache[key].get(outcome, 0.0)
            # Born round-off on impossible tuples
            like *= p if p > 1e-12 else 0.0
            if like == 0.0:
                break
        hypotheses.append(dv)
        weights.append(like)
    weights = np.asarray(weights)
    total = weights.sum()
    if total == 0:
        raise ValueError("announcements are inconsistent with every honest hypothesis")
    return Posterior(others, hypotheses, weights / total)
