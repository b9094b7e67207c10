"""Genuineness checks for shared GHZ copies.

Check operators for odd n: ``O_0`` is X on every qubit; ``O_i`` (1 <= i <= n)
puts Y on parties i and i+1 (cyclically, so party n pairs with party 1) and
X elsewhere. The genuine state |Psi_n> has eigenvalue -1 under O_0 and +1
under every other O_i, and the Bell combination sum(O_i) - O_0 reaches
n+1 on it while local-realistic assignments stop at n-1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import sqrt
from typing import Callable, Iterable, Iterator

import numpy as np

from .simnet import SourceExhausted
from .statevec import PauliString, Statevector, expectation, measure_all


def _require_odd(n: int, minimum: int = 3) -> None:
    if n < minimum or n % 2 == 0:
        raise ValueError(f"check operators are defined for odd n >= {minimum}, got {n}")


def build_check_operator(i: int, n: int) -> PauliString:
    _require_odd(n)
    if not 0 <= i <= n:
        raise ValueError(f"operator index must be in 0..{n}, got {i}")
    slots = ["X"] * n
    if i > 0:
        slots[i - 1] = "Y"
        slots[i % n] = "Y"
    return PauliString(tuple(slots))


def expected_eigenvalue(i: int) -> int:
    return -1 if i == 0 else 1


@dataclass(frozen=True)
class RoundRecord:
    run_id: int
    verifier: int
    operator: int
    outcomes: tuple[int, ...]
    product: int
    eigenvalue: int

    @property
    def passed(self) -> bool:
        return self.product == self.eigenvalue

    @property
    def bell_term(self) -> int:
        # contribution of this round to sum(O_i) - O_0
        return -self.product if self.operator == 0 else self.product


@dataclass
class GenuinenessReport:
    n: int
    rounds: list[RoundRecord] = field(default_factory=list)

    @property
    def pass_rate(self) -> float:
        if not self.rounds:
            return float("nan")
        return sum(r.passed for r in self.rounds) / len(self.rounds)

    @property
    def verdict(self) -> str:
        return "genuine" if all(r.passed for r in self.rounds) else "rejected"

    @property
    def bell_estimate(self) -> tuple[float, float]:
        """Sampled value of <sum(O_i) - O_0> and its standard error.

        Operators are drawn uniformly from n+1 choices, so the per-round
        signed term is rescaled by n+1.
        """
        return sampled_bell_value([r.bell_term for r in self.rounds], self.n)


def sampled_bell_value(terms: Iterable[int], n: int) -> tuple[float, float]:
    terms = np.asarray(list(terms), dtype=float)
    if terms.size == 0:
        return float("nan"), float("inf")
    scale = n + 1
    estimate = scale * float(terms.mean())
    if terms.size < 2:
        return estimate, float("inf")
    stderr = scale * float(terms.std(ddof=1)) / sqrt(terms.size)
    return estimate, stderr


def verify_round(state: Statevector, op_index: int, rng: np.random.Generator,
                 run_id: int = 0, verifier: int = 1) -> RoundRecord:
    """Every party measures its qubit in the basis named by O_{op_index}; the
    verifier multiplies the outcomes and compares with the eigenvalue."""
    n = state.n_qubits
    op = build_check_operator(op_index, n)
    outcomes, _ = measure_all(state, op.axes(), rng)
    return RoundRecord(
        run_id=run_id,
        verifier=verifier,
        operator=op_index,
        outcomes=tuple(outcomes),
        product=int(np.prod(outcomes)),
        eigenvalue=expected_eigenvalue(op_index),
    )


def run_verification(source: Callable[[], Statevector] | Iterator[Statevector], n: int,
                     rounds: int, rng: np.random.Generator,
                     on_round: Callable[[RoundRecord], None] | None = None) -> GenuinenessReport:
    """Test ``rounds`` fresh copies drawn from ``source``.

    ``source`` is either a zero-argument callable or an iterator of states.
    Each round picks a verifier party and a check operator uniformly.
    """
    _require_odd(n)
    if rounds < 1:
        raise ValueError("at least one verification round is required")
    draw = source if callable(source) else (lambda it=iter(source): next(it))
    report = GenuinenessReport(n)
    for r in range(rounds):
        try:
            state = draw()
        except StopIteration:
            raise SourceExhausted(f"source ran dry after {r} of {rounds} rounds") from None
        if state.n_qubits != n:
            raise ValueError(f"source produced {state.n_qubits} qubits, expected {n}")
        verifier = int(rng.integers(1, n + 1))
        op_index = int(rng.integers(0, n + 1))
        record = verify_round(state, op_index, rng, run_id=r, verifier=verifier)
        report.rounds.append(record)
        if on_round is not None:
            on_round(record)
    return report


def bell_operator_terms(n: int) -> list[tuple[int, PauliString]]:
    """(sign, operator) pairs whose sum is sum(O_i) - O_0."""
    return [(-1, build_check_operator(0, n))] + [(1, build_check_operator(i, n)) for i in range(1, n + 1)]


def bell_value_exact(state: Statevector) -> float:
    n = state.n_qubits
    _require_odd(n)
    return sum(sign * expectation(state, op) for sign, op in bell_operator_terms(n))


LR_MAX_N = 7


def lr_bound_bruteforce(n: int) -> int:
    """Largest |sum(O_i) - O_0| over deterministic local +/-1 value tables.

    Each party p fixes an X-answer and a Y-answer in advance; an operator's
    value is the product of the answers its slots ask for.
    """
    _require_odd(n)
    if n > LR_MAX_N:
        raise ValueError(f"enumeration limited to n <= {LR_MAX_N}")
    ops = [(sign, build_check_operator(i, n).slots) for sign, i in
           [(-1, 0)] + [(1, i) for i in range(1, n + 1)]]
    best = 0
    for xs in itertools.product((1, -1), repeat=n):
        for ys in itertools.product((1, -1), repeat=n):
            total = 0
            for sign, slots in ops:
                v = sign
                for p, s in enumerate(slots):
                    v *= xs[p] if s == "X" else ys[p]
                total += v
            best = max(best, abs(total))
    return best
