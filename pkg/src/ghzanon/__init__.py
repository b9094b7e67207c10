"""Seeded simulator for GHZ-based dining-cryptographers and anonymous-veto protocols."""

from .adversary import AdversarySpec, colluder_infer, forged_source
from .ghzcheck import (
    GenuinenessReport,
    bell_value_exact,
    build_check_operator,
    lr_bound_bruteforce,
    run_verification,
    verify_round,
)
from .protocols import (
    AvOutcome,
    DcOutcome,
    DecisionVector,
    GenuinenessRejected,
    run_session,
    settle,
)
from .simnet import ProtocolAbort, ProtocolConfig, Transcript
from .statevec import (
    PauliAxis,
    PauliString,
    PhaseGate,
    Statevector,
    apply_phase_gate,
    expectation,
    ghz_discriminate,
    make_ghz,
    measure_pauli,
)

__version__ = "0.1.0"

__all__ = [
    "AdversarySpec",
    "colluder_infer",
    "forged_source",
    "GenuinenessReport",
    "bell_value_exact",
    "build_check_operator",
    "lr_bound_bruteforce",
    "run_verification",
    "verify_round",
    "AvOutcome",
    "DcOutcome",
    "DecisionVector",
    "GenuinenessRejected",
    "run_session",
    "settle",
    "ProtocolAbort",
    "ProtocolConfig",
    "Transcript",
    "PauliAxis",
    "PauliString",
    "PhaseGate",
    "Statevector",
    "apply_phase_gate",
    "expectation",
    "ghz_discriminate",
    "make_ghz",
    "measure_pauli",
]
