"""Channel-level rectangles built from the Shor code.

An EC stage is :func:`ftlab.shor.stabilizer_ec`. A fault inside an EC is
modelled as a single-qubit Pauli injected either before the syndrome
readout (site ``"pre"``) or on the EC output (site ``"post"``). A 1-Ga is a
transversal logical gate followed by an optional single-qubit Pauli fault.

Transversal gates used here::

    "I"  identity
    "X"  Z^(x9) acts as logical X
    "Z"  X^(x9) acts as logical Z
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qcore import PauliString, StateVector, apply_operator, fidelity, l1_distance, OutcomeDistribution
from .shor import N_QUBITS, CodeSpaceError, LogicalQubit, decode, encode, stabilizer_ec
from .seeding import as_rng

TRANSVERSAL = {
    "I": PauliString("I" * N_QUBITS),
    "X": PauliString("Z" * N_QUBITS),
    "Z": PauliString("X" * N_QUBITS),
}
LOGICAL = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
EC_SITES = ("pre", "post")


def single_paulis() -> list[PauliString]:
    return [PauliString.single(N_QUBITS, q, a) for q in range(N_QUBITS) for a in "XYZ"]


def ec(state, fault: PauliString | None = None, site: str = "pre", seed=None) -> StateVector:
    if site not in EC_SITES:
        raise ValueError(f"site must be one of {EC_SITES}")
    if fault is not None and site == "pre":
        state = apply_operator(state, fault)
    out = stabilizer_ec(state, seed)
    if fault is not None and site == "post":
        out = apply_operator(out, fault)
    return out


def gate(state, name: str, fault: PauliString | None = None) -> StateVector:
    out = apply_operator(state, TRANSVERSAL[name])
    if fault is not None:
        out = apply_operator(out, fault)
    return out


def error_weight(state, intended) -> int | None:
    """0 if ``state`` equals ``intended`` up to phase, 1 if a single-qubit Pauli
    maps one onto the other, else ``None``."""
    if fidelity(state, intended) > 1 - 1e-9:
        return 0
    for p in single_paulis():
        if fidelity(apply_operator(state, p), intended) > 1 - 1e-9:
            return 1
    return None


def _in_code(state) -> bool:
    try:
        decode(state)
    except CodeSpaceError:
        return False
    return True


def _random_logicals(n: int, rng) -> list[StateVector]:
    out = []
    for _ in range(n):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        out.append(encode(LogicalQubit(complex(v[0]), complex(v[1]))))
    return out


def _ideal_gate_output(logical: StateVector, name: str) -> StateVector:
    return apply_operator(logical, TRANSVERSAL[name])


# --- The five conditions ----------------------------------------------------

def condition_1(seed=0, samples: int = 4) -> bool:
    """EC with at most one fault outputs a codeword (possibly with one error
    when the fault is on the output), for arbitrary 9-qubit inputs."""
    rng = as_rng(seed)
    for _ in range(samples):
        psi = rng.normal(size=1 << N_QUBITS) + 1j * rng.normal(size=1 << N_QUBITS)
        psi = StateVector(psi / np.linalg.norm(psi))
        for f in [None] + single_paulis():
            if not _in_code(ec(psi, f, "pre", rng)):
                return False
    return True


def condition_2(seed=0, samples: int = 2) -> bool:
    """Fault-free EC maps an input with at most one error to the ideal codeword."""
    rng = as_rng(seed)
    for ref in _random_logicals(samples, rng):
        for e in [None] + single_paulis():
            damaged = ref if e is None else apply_operator(ref, e)
            if error_weight(ec(damaged, seed=rng), ref) != 0:
                return False
    return True


def condition_3(seed=0, samples: int = 2) -> bool:
    """EC with one fault on an error-free input leaves at most one error."""
    rng = as_rng(seed)
    for ref in _random_logicals(samples, rng):
        for site in EC_SITES:
            for f in single_paulis():
                if error_weight(ec(ref, f, site, rng), ref) is None:
                    return False
    return True


def condition_4(seed=0, samples: int = 2) -> bool:
    """Fault-free Ga maps an input with at most one error to an output with at most one error."""
    rng = as_rng(seed)
    for ref in _random_logicals(samples, rng):
        for name in TRANSVERSAL:
            ideal = _ideal_gate_output(ref, name)
            for e in [None] + single_paulis():
                damaged = ref if e is None else apply_operator(ref, e)
                if error_weight(gate(damaged, name), ideal) is None:
                    return False
    return True


def condition_5(seed=0, samples: int = 2) -> bool:
    """Ga with one fault on an error-free input leaves at most one error."""
    rng = as_rng(seed)
    for ref in _random_logicals(samples, rng):
        for name in TRANSVERSAL:
            ideal = _ideal_gate_output(ref, name)
            for f in single_paulis():
                if error_weight(gate(ref, name, f), ideal) is None:
                    return False
    return True


def check_conditions(seed=0) -> dict[str, bool]:
    checks = (condition_1, condition_2, condition_3, condition_4, condition_5)
    return {f"condition_{i}": c(seed) for i, c in enumerate(checks, start=1)}


# --- Chains of exRecs -------------------------------------------------------

@dataclass(frozen=True)
class Fault:
    """A Pauli at one site of a gate chain: ``("ec", j, "pre"|"post")`` or ``("ga", j)``."""

    kind: str
    index: int
    pauli: PauliString
    site: str = "pre"


@dataclass
class GateChain:
    """``EC_0 Ga_1 EC_1 Ga_2 ... Ga_L EC_L``; exRec ``j`` is ``{EC_{j-1}, Ga_j, EC_j}``."""

    gates: tuple[str, ...]
    faults: list[Fault] = field(default_factory=list)

    def exrec_fault_counts(self) -> list[int]:
        counts = [0] * len(self.gates)
        for f in self.faults:
            if f.kind == "ga":
                counts[f.index - 1] += 1
            else:
                for j in (f.index, f.index + 1):
                    if 1 <= j <= len(self.gates):
                        counts[j - 1] += 1
        return counts

    def all_good(self) -> bool:
        return all(c <= 1 for c in self.exrec_fault_counts())

    def run(self, logical: LogicalQubit, seed=None) -> StateVector:
        rng = as_rng(seed)
        state = encode(logical)

        def at(kind, j, site=None):
            hits = [f.pauli for f in self.faults
                    if f.kind == kind and f.index == j and (site is None or f.site == site)]
            out = None
            for p in hits:
                out = p if out is None else p * out
            return out

        def do_ec(j, s):
            pre = at("ec", j, "pre")
            if pre is not None:
                s = apply_operator(s, pre)
            return ec(s, at("ec", j, "post"), "post", rng)

        state = do_ec(0, state)
        for j, name in enumerate(self.gates, start=1):
            state = gate(state, name, at("ga", j))
            state = do_ec(j, state)
        return state

    def ideal_logical(self, logical: LogicalQubit) -> np.ndarray:
        v = logical.vector()
        for name in self.gates:
            v = LOGICAL[name] @ v
        return v


def logical_distribution(state, seed=None) -> OutcomeDistribution:
    """Computational-basis statistics after an ideal decoder (perfect EC then decode)."""
    q = decode(stabilizer_ec(state, seed))
    return OutcomeDistribution(np.abs(q.vector()) ** 2)


def chain_l1(chain: GateChain, logical: LogicalQubit, seed=None) -> float:
    rng = as_rng(seed)
    actual = logical_distribution(chain.run(logical, rng), rng)
    ideal = OutcomeDistribution(np.abs(chain.ideal_logical(logical)) ** 2)
    return l1_distance(actual, ideal)
