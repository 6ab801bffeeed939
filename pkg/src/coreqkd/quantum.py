"""Dense exact quantum-state engine for registers of up to eight qubits.

Everything is plain numpy linear algebra on complex128 arrays: Bell-pair
construction, reduced density matrices, the two-spin correlation observable
along arbitrary measurement directions, and projective measurement (Bell
basis on a chosen qubit pair, computational basis on a single qubit) with
Born-rule sampling.

Conventions used throughout the package:

* Computational basis ordering is big-endian by qubit index: qubit 0 is the
  most significant bit of the amplitude index. A 2-qubit vector is therefore
  ordered |00>, |01>, |10>, |11>.
* Tolerances: 1e-12 for exact algebra, 1e-10 for the norm after measurement
  collapse and renormalisation.
* Randomness enters only through caller-supplied ``numpy.random.Generator``
  instances (PCG64, seeded with a 64-bit integer). Discrete outcomes are
  drawn by inverse CDF over branch probabilities, so a zero-probability
  branch is never selected and runs are reproducible from the seed alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 8
ATOL_EXACT = 1e-12
ATOL_NORM = 1e-10
_PROB_FLOOR = 1e-15

SQRT1_2 = 1.0 / math.sqrt(2.0)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class BellState(Enum):
    """The four maximally entangled two-qubit states.

    Each state encodes two key bits; the mapping is the fixed bijection
    PSI_MINUS -> 00, PSI_PLUS -> 01, PHI_MINUS -> 10, PHI_PLUS -> 11.
    """

    PSI_MINUS = 0
    PSI_PLUS = 1
    PHI_MINUS = 2
    PHI_PLUS = 3

    @property
    def key_bits(self) -> tuple[int, int]:
        return (self.value >> 1) & 1, self.value & 1

    @classmethod
    def from_bits(cls, high: int, low: int) -> "BellState":
        return cls(((high & 1) << 1) | (low & 1))


# Row k is the state vector of BellState(k) in the |00>,|01>,|10>,|11> basis.
_BELL_MATRIX = np.array(
    [
        [0.0, SQRT1_2, -SQRT1_2, 0.0],
        [0.0, SQRT1_2, SQRT1_2, 0.0],
        [SQRT1_2, 0.0, 0.0, -SQRT1_2],
        [SQRT1_2, 0.0, 0.0, SQRT1_2],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class Direction:
    """A unit 3-vector giving a spin measurement direction."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"direction must be a unit vector, |v| = {norm!r}")

    @classmethod
    def normalized(cls, x: float, y: float, z: float) -> "Direction":
        norm = math.sqrt(x * x + y * y + z * z)
        if norm == 0.0:
            raise ValueError("cannot normalise the zero vector")
        return cls(x / norm, y / norm, z / norm)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


X_DIR = Direction(1.0, 0.0, 0.0)
Y_DIR = Direction(0.0, 1.0, 0.0)
Z_DIR = Direction(0.0, 0.0, 1.0)


def random_direction(rng: np.random.Generator) -> Direction:
    """Draw a direction uniformly on the unit sphere."""
    while True:
        v = rng.normal(size=3)
        norm = float(np.linalg.norm(v))
        if norm > 1e-6:
            return Direction(v[0] / norm, v[1] / norm, v[2] / norm)


class StateVector:
    """Normalised amplitude vector over ``n_qubits`` qubits (1..8).

    Instances are immutable; operations that change the state return a new
    vector, so values are safe to share between threads.
    """

    __slots__ = ("n_qubits", "amps")

    def __init__(self, amps: Sequence[complex] | np.ndarray):
        arr = np.array(amps, dtype=complex)
        if arr.ndim != 1:
            raise ValueError("amplitudes must be a flat vector")
        n = int(arr.size).bit_length() - 1
        if arr.size != (1 << n) or not (1 <= n <= MAX_QUBITS):
            raise ValueError(
                f"amplitude count {arr.size} is not 2**n for n in 1..{MAX_QUBITS}"
            )
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > ATOL_NORM:
            raise ValueError(f"state vector norm {norm!r} is not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "n_qubits", n)
        object.__setattr__(self, "amps", arr)

    def __setattr__(self, name: str, value) -> None:
        raise AttributeError("StateVector is immutable")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StateVector)
            and self.n_qubits == other.n_qubits
            and bool(np.array_equal(self.amps, other.amps))
        )

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


def bell_state(symbol: BellState) -> StateVector:
    """The 2-qubit state vector of the given Bell state."""
    return StateVector(_BELL_MATRIX[symbol.value])


def computational_state(bits: Sequence[int]) -> StateVector:
    """Product state |b0 b1 ...> in the computational basis."""
    n = len(bits)
    index = 0
    for b in bits:
        index = (index << 1) | (b & 1)
    amps = np.zeros(1 << n, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps)


def tensor(*states: StateVector) -> StateVector:
    """Tensor product of registers, qubit indices concatenated left to right."""
    total = sum(s.n_qubits for s in states)
    if total > MAX_QUBITS:
        raise ValueError(f"register of {total} qubits exceeds the cap of {MAX_QUBITS}")
    amps = states[0].amps
    for s in states[1:]:
        amps = np.kron(amps, s.amps)
    return StateVector(amps)


def density(state: StateVector) -> np.ndarray:
    """Density matrix |psi><psi| of a pure state."""
    return np.outer(state.amps, state.amps.conj())


def check_density_matrix(rho: np.ndarray, atol: float = ATOL_EXACT) -> None:
    """Validate hermiticity, unit trace and positivity; raise ValueError if violated."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > atol or abs(np.trace(rho).imag) > atol:
        raise ValueError(f"density matrix trace {np.trace(rho)!r} is not 1")
    eigs = np.linalg.eigvalsh(rho)
    if eigs.min() < -1e-10:
        raise ValueError(f"density matrix has negative eigenvalue {eigs.min()!r}")


def partial_trace(rho: np.ndarray, keep: str) -> np.ndarray:
    """Reduced density matrix of one qubit of a 2-qubit density matrix.

    ``keep`` is ``"first"`` or ``"second"``. Rejects non-unit-trace input.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("partial_trace expects a 4x4 density matrix")
    tr = np.trace(rho)
    if abs(tr - 1.0) > 1e-9:
        raise ValueError(f"density matrix trace {tr!r} is not 1")
    r = rho.reshape(2, 2, 2, 2)
    if keep == "first":
        return np.einsum("abcb->ac", r)
    if keep == "second":
        return np.einsum("abad->bd", r)
    raise ValueError("keep must be 'first' or 'second'")


def partial_trace_register(rho: np.ndarray, n_qubits: int, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of the listed qubits of an n-qubit density matrix.

    The kept qubits appear in the output in the order given.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = 1 << n_qubits
    if rho.shape != (dim, dim):
        raise ValueError("density matrix shape does not match n_qubits")
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n_qubits])
    col = list(letters[n_qubits : 2 * n_qubits])
    for q in range(n_qubits):
        if q not in keep:
            col[q] = row[q]
    out = "".join(row[q] for q in keep) + "".join(col[q] for q in keep)
    reduced = np.einsum(
        "".join(row) + "".join(col) + "->" + out, rho.reshape([2] * (2 * n_qubits))
    )
    k = len(keep)
    return reduced.reshape(1 << k, 1 << k)


def mismatched_pair_density(ensemble: Iterable[BellState] | None = None) -> np.ndarray:
    """Joint density matrix of two halves taken from different pairs.

    For halves drawn from any ensemble of Bell pairs, each reduced state is
    maximally mixed, so the product is I/4 = diag(1/4, 1/4, 1/4, 1/4).
    """
    symbols = tuple(ensemble) if ensemble is not None else tuple(BellState)
    if not symbols:
        raise ValueError("ensemble must contain at least one Bell state")
    rho_a = np.zeros((2, 2), dtype=complex)
    rho_b = np.zeros((2, 2), dtype=complex)
    for s in symbols:
        rho = density(bell_state(s))
        rho_a += partial_trace(rho, "first")
        rho_b += partial_trace(rho, "second")
    rho_a /= len(symbols)
    rho_b /= len(symbols)
    return np.kron(rho_a, rho_b)


def pauli_along(direction: Direction) -> np.ndarray:
    """Spin observable sigma . v for a unit direction v."""
    return direction.x * SIGMA_X + direction.y * SIGMA_Y + direction.z * SIGMA_Z


def correlation_operator(a: Direction, b: Direction) -> np.ndarray:
    """Two-spin correlation observable (sigma . a) tensor (sigma . b)."""
    return np.kron(pauli_along(a), pauli_along(b))


def expectation(state: StateVector | np.ndarray, a: Direction, b: Direction) -> float:
    """Expectation value of the correlation observable in a 2-qubit state.

    Accepts a pure StateVector or a 4x4 density matrix.
    """
    op = correlation_operator(a, b)
    if isinstance(state, StateVector):
        if state.n_qubits != 2:
            raise ValueError("expectation is defined for 2-qubit states")
        return float(np.vdot(state.amps, op @ state.amps).real)
    rho = np.asarray(state, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("expectation expects a 2-qubit state")
    return float(np.trace(rho @ op).real)


def sample_index(probs: Sequence[float], rng: np.random.Generator) -> int:
    """Inverse-CDF draw of an index from a discrete distribution.

    Branches with probability at or below the floor are skipped, so a
    zero-probability outcome is never sampled.
    """
    u = rng.random()
    acc = 0.0
    last = -1
    for k, p in enumerate(probs):
        if p <= _PROB_FLOOR:
            continue
        acc += p
        last = k
        if u < acc:
            return k
    if last < 0:
        raise RuntimeError("no branch with positive probability")
    return last


def _duo_view(register: StateVector, qubit_i: int, qubit_j: int) -> np.ndarray:
    """Amplitudes reshaped to (4, rest) with the duo as the leading axis."""
    n = register.n_qubits
    if qubit_i == qubit_j:
        raise ValueError("duo qubits must be distinct")
    if not (0 <= qubit_i < n and 0 <= qubit_j < n):
        raise ValueError("qubit index out of range")
    psi = register.amps.reshape([2] * n)
    moved = np.moveaxis(psi, (qubit_i, qubit_j), (0, 1))
    return moved.reshape(4, -1)


def _duo_restore(block: np.ndarray, n: int, qubit_i: int, qubit_j: int) -> np.ndarray:
    moved = block.reshape([2, 2] + [2] * (n - 2))
    return np.moveaxis(moved, (0, 1), (qubit_i, qubit_j)).reshape(-1)


def bell_outcome_probabilities(
    register: StateVector, qubit_i: int, qubit_j: int
) -> np.ndarray:
    """Exact Born probabilities of the four Bell outcomes on qubits (i, j)."""
    coeffs = _BELL_MATRIX.conj() @ _duo_view(register, qubit_i, qubit_j)
    return (np.abs(coeffs) ** 2).sum(axis=1)


def bell_project(
    register: StateVector, qubit_i: int, qubit_j: int, outcome: BellState | int
) -> tuple[float, StateVector | None]:
    """Probability of a Bell outcome and the collapsed register, or None if 0."""
    k = outcome.value if isinstance(outcome, BellState) else int(outcome)
    view = _duo_view(register, qubit_i, qubit_j)
    coeff = _BELL_MATRIX[k].conj() @ view
    prob = float(np.vdot(coeff, coeff).real)
    if prob <= _PROB_FLOOR:
        return prob, None
    block = np.outer(_BELL_MATRIX[k], coeff / math.sqrt(prob))
    collapsed = StateVector(_duo_restore(block, register.n_qubits, qubit_i, qubit_j))
    return prob, collapsed


def bell_measure(
    register: StateVector, qubit_i: int, qubit_j: int, rng: np.random.Generator
) -> tuple[BellState, StateVector]:
    """Sample a Bell-basis measurement on qubits (i, j) and collapse.

    Returns the sampled outcome and the renormalised post-measurement
    register. Born probabilities are exact; the branch choice is the only
    random element.
    """
    view = _duo_view(register, qubit_i, qubit_j)
    coeffs = _BELL_MATRIX.conj() @ view
    probs = (np.abs(coeffs) ** 2).sum(axis=1)
    k = sample_index(probs, rng)
    prob = probs[k]
    block = np.outer(_BELL_MATRIX[k], coeffs[k] / math.sqrt(prob))
    amps = _duo_restore(block, register.n_qubits, qubit_i, qubit_j)
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > ATOL_NORM:
        raise RuntimeError("degenerate post-measurement state")
    return BellState(k), StateVector(amps)


def z_measure(
    register: StateVector, qubit: int, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Sample a computational-basis measurement of one qubit and collapse."""
    n = register.n_qubits
    if not 0 <= qubit < n:
        raise ValueError("qubit index out of range")
    moved = np.moveaxis(register.amps.reshape([2] * n), qubit, 0).reshape(2, -1)
    probs = (np.abs(moved) ** 2).sum(axis=1)
    k = sample_index(probs, rng)
    branch = np.zeros_like(moved)
    branch[k] = moved[k] / math.sqrt(probs[k])
    amps = np.moveaxis(branch.reshape([2] * n), 0, qubit).reshape(-1)
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > ATOL_NORM:
        raise RuntimeError("degenerate post-measurement state")
    return k, StateVector(amps)


def apply_single_qubit(
    register: StateVector, qubit: int, matrix: np.ndarray
) -> StateVector:
    """Apply a 2x2 unitary to one qubit of the register."""
    n = register.n_qubits
    moved = np.moveaxis(register.amps.reshape([2] * n), qubit, 0).reshape(2, -1)
    out = np.asarray(matrix, dtype=complex) @ moved
    return StateVector(np.moveaxis(out.reshape([2] * n), 0, qubit).reshape(-1))
