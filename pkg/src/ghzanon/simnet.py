"""Simulated broadcast environment: seeded streams, copy registry, announcement
ordering and the append-only transcript.

Transcript wire format: one JSON object per line, always with the keys of
:data:`RECORD_FIELDS` in that order. Ids are integers, outcomes are +1/-1,
fields that do not apply to a record type are ``null``. ``visibility`` is
``"public"`` or ``"private:<party>"``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Iterable, Sequence

import numpy as np

from .statevec import PhaseGate, Statevector, apply_phase_gate

if TYPE_CHECKING:
    from .adversary import AdversarySpec

RECORD_TYPES = ("START", "OWNER", "SHARE", "VERIFY", "SELECT", "DECIDE", "GATE",
                "MEASURE", "ANNOUNCE", "VERDICT", "ABORT")
PUBLIC = "public"


def private(party: int) -> str:
    return f"private:{party}"


class ProtocolAbort(RuntimeError):
    """A run was abandoned. The partial transcript is kept for analysis."""

    def __init__(self, reason: str, transcript: Transcript | None = None):
        super().__init__(reason)
        self.reason = reason
        self.transcript = transcript


class InsufficientCopies(ProtocolAbort):
    pass


class SourceExhausted(ProtocolAbort):
    pass


@dataclass(frozen=True)
class Record:
    type: str
    step: str | None = None
    copy: int | None = None
    party: int | None = None
    qubit: int | None = None
    order: int | None = None
    outcome: int | None = None
    visibility: str = PUBLIC
    reason: str | None = None
    label: str | None = None

    def __post_init__(self):
        if self.type not in RECORD_TYPES:
            raise ValueError(f"unknown record type {self.type!r}")

    @property
    def is_public(self) -> bool:
        return self.visibility == PUBLIC

    def visible_to(self, parties: Iterable[int]) -> bool:
        return self.is_public or self.visibility in {private(p) for p in parties}


RECORD_FIELDS = tuple(f.name for f in fields(Record))


class Transcript:
    def __init__(self, records: Iterable[Record] = ()):
        self.records: list[Record] = list(records)

    def append(self, type: str, **kw) -> Record:
        rec = Record(type, **kw)
        self.records.append(rec)
        return rec

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def of_type(self, type: str) -> list[Record]:
        return [r for r in self.records if r.type == type]

    def public(self) -> Transcript:
        return Transcript(r for r in self.records if r.is_public)

    def view_of(self, parties: Iterable[int]) -> Transcript:
        parties = set(parties)
        return Transcript(r for r in self.records if r.visible_to(parties))

    def to_ndjson(self) -> str:
        return "".join(json.dumps(asdict(r), separators=(",", ":")) + "\n" for r in self.records)

    @classmethod
    def from_ndjson(cls, text: str) -> Transcript:
        out = []
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            missing = set(RECORD_FIELDS) - obj.keys()
            if missing:
                raise ValueError(f"transcript record missing fields {sorted(missing)}")
            out.append(Record(**{k: obj[k] for k in RECORD_FIELDS}))
        return cls(out)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_ndjson())

    @classmethod
    def read(cls, path: str | Path) -> Transcript:
        return cls.from_ndjson(Path(path).read_text())

    def owners(self) -> tuple[int, ...]:
        """Party holding each qubit, from the OWNER records."""
        owner = {r.qubit: r.party for r in self.of_type("OWNER")}
        return tuple(owner[q] for q in range(len(owner)))

    def protocol(self) -> str:
        starts = self.of_type("START")
        if not starts:
            raise ValueError("transcript has no START record")
        return starts[0].label


# -- randomness ------------------------------------------------------------

@dataclass
class Streams:
    """Independent generators derived from one master seed.

    ``SeedSequence(seed).spawn(4 + n)`` yields, in order: orchestrator
    (run selection, announcement order), nature (Born sampling),
    verification (check-operator choices and their measurements),
    source (forged-state sampling), then one stream per party 1..n.
    """

    orchestrator: np.random.Generator
    nature: np.random.Generator
    verification: np.random.Generator
    source: np.random.Generator
    parties: dict[int, np.random.Generator]


def split_streams(seed: int, n_parties: int) -> Streams:
    children = np.random.SeedSequence(seed).spawn(4 + n_parties)
    gens = [np.random.Generator(np.random.PCG64(c)) for c in children]
    return Streams(gens[0], gens[1], gens[2], gens[3],
                   {p: gens[3 + p] for p in range(1, n_parties + 1)})


# -- copies ----------------------------------------------------------------

class CopyRegistry:
    """Shared copies, the qubit-to-party map, and which copies are spent."""

    def __init__(self, owners: Sequence[int]):
        self.owners = tuple(owners)
        self.states: dict[int, Statevector] = {}
        self.consumed: set[int] = set()

    @property
    def n_qubits(self) -> int:
        return len(self.owners)

    def free(self) -> list[int]:
        return [c for c in sorted(self.states) if c not in self.consumed]

    def handles(self, party: int) -> list[tuple[int, int]]:
        """(copy id, qubit) pairs held by ``party``."""
        qs = [q for q, p in enumerate(self.owners) if p == party]
        return [(c, q) for c in sorted(self.states) for q in qs]

    def apply_phase(self, qubits: Iterable[int], level: int, ids: Iterable[int] | None = None) -> None:
        gate = PhaseGate(level)
        qubits = list(qubits)
        for c in (self.free() if ids is None else ids):
            st = self.states[c]
            for q in qubits:
                st = apply_phase_gate(st, q, gate)
            self.states[c] = st


def distribute_copies(owners: Sequence[int], total_copies: int,
                      source: Callable[[], Statevector], transcript: Transcript) -> CopyRegistry:
    """Draw ``total_copies`` states and hand qubit q of each to ``owners[q]``."""
    if total_copies < 1:
        raise ValueError("need at least one copy")
    reg = CopyRegistry(owners)
    for c in range(total_copies):
        try:
            st = source()
        except StopIteration:
            raise SourceExhausted(f"source ran dry after {c} copies", transcript) from None
        if st.n_qubits != reg.n_qubits:
            raise ValueError(f"source produced {st.n_qubits} qubits, expected {reg.n_qubits}")
        reg.states[c] = st
        transcript.append("SHARE", copy=c)
    return reg


def select_runs(registry: CopyRegistry, count: int, purpose: str,
                rng: np.random.Generator, transcript: Transcript) -> list[int]:
    free = registry.free()
    if count > len(free):
        reason = f"insufficient copies for {purpose}: need {count}, have {len(free)}"
        transcript.append("ABORT", step=purpose, reason=reason)
        raise InsufficientCopies(reason, transcript)
    picked = sorted(int(c) for c in rng.choice(free, size=count, replace=False))
    registry.consumed.update(picked)
    for c in picked:
        transcript.append("SELECT", step=purpose, copy=c)
    return picked


# -- broadcast -------------------------------------------------------------

# (step, own outcome, announcements heard so far, own position, slots) -> announced
Policy = Callable[[str, int, Sequence[int], int, int], int]


def honest(step, outcome, heard, position, slots):
    return outcome


def broadcast_round(step: str, copy_id: int, outcomes: Sequence[int], owners: Sequence[int],
                    policies: dict[int, Policy], rng: np.random.Generator,
                    transcript: Transcript) -> list[int]:
    """Announce one copy's outcomes in a uniformly random order.

    ``outcomes[q]`` is the measured value of qubit q; a party holding two
    qubits takes two slots. Returns the announced value per qubit.
    """
    slots = len(outcomes)
    order = rng.permutation(slots)
    announced = [0] * slots
    heard: list[int] = []
    for pos, q in enumerate(int(x) for x in order):
        party = owners[q]
        value = policies.get(party, honest)(step, outcomes[q], tuple(heard), pos, slots)
        announced[q] = value
        heard.append(value)
        transcript.append("ANNOUNCE", step=step, copy=copy_id, party=party, qubit=q,
                          order=pos, outcome=value)
    return announced


def consistency_check(step: str, products: Sequence[int], transcript: Transcript) -> int | None:
    """Common product of the step's copies, or None (with an ABORT record)
    when the copies disagree."""
    if not products:
        raise ValueError("consistency check needs at least one copy")
    if len(set(products)) == 1:
        return products[0]
    transcript.append("ABORT", step=step, reason=f"inconsistent products {list(products)}")
    return None


# -- config ----------------------------------------------------------------

@dataclass
class ProtocolConfig:
    n: int = 3
    runs_per_step: int = 2
    verification_rounds: int = 16
    total_copies: int | None = None
    seed: int = 0
    adversary: AdversarySpec | None = None
    s3_enabled: bool = True
    even_adapter: bool = False

    def __post_init__(self):
        if self.runs_per_step < 1:
            raise ValueError("runs_per_step must be >= 1")
        if self.verification_rounds < 0:
            raise ValueError("verification_rounds must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def copies_needed(self, max_steps: int) -> int:
        return self.verification_rounds + max_steps * self.runs_per_step

    def resolve_copies(self, max_steps: int) -> int:
        need = self.copies_needed(max_steps)
        if self.total_copies is None:
            return need
        if self.total_copies < need:
            raise ValueError(f"total_copies={self.total_copies} below the {need} this run may consume")
        return self.total_copies


@dataclass
class Network:
    """Everything a protocol run touches: copies, transcript, streams, policies."""

    registry: CopyRegistry
    transcript: Transcript
    streams: Streams
    policies: dict[int, Policy] = field(default_factory=dict)

    @property
    def owners(self) -> tuple[int, ...]:
        return self.registry.owners

    def select(self, count: int, purpose: str) -> list[int]:
        return select_runs(self.registry, count, purpose, self.streams.orchestrator, self.transcript)

    def broadcast(self, step: str, copy_id: int, outcomes: Sequence[int]) -> list[int]:
        return broadcast_round(step, copy_id, outcomes, self.owners, self.policies,
                               self.streams.orchestrator, self.transcript)
