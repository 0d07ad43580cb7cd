"""Dense statevectors and exact Pauli-string algebra.

Qubit ``k`` (1-based) is bit ``k - 1`` of the computational basis index, so
qubit 1 is the least significant bit.  A :class:`PauliString` stores its
letters in qubit order: ``letters[0]`` acts on qubit 1.

Pauli strings act as a signed permutation of the amplitudes,
``(P psi)[b ^ x] = i**n_y * (-1)**popcount(b & z) * psi[b]``, which costs
O(2^N) and never builds a matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "DimensionError",
    "PauliString",
    "StateVector",
    "apply_pauli",
    "apply_rotation",
    "basis_probabilities",
    "expectation",
    "inner",
    "pauli_action",
    "pauli_matrix",
]

_LETTERS = frozenset("IXYZ")


class DimensionError(ValueError):
    """Raised when a Pauli string or state does not match the system size."""


@dataclass(frozen=True)
class PauliString:
    """Phase-free tensor product of single-qubit Paulis, one letter per qubit."""

    letters: str

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters or set(letters) - _LETTERS:
            raise ValueError(f"invalid Pauli string {self.letters!r}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def from_sites(cls, n: int, ops: dict[int, str]) -> PauliString:
        """Build a string on ``n`` qubits from ``{site: letter}`` with 1-based sites."""
        chars = ["I"] * n
        for site, letter in ops.items():
            if not 1 <= site <= n:
                raise DimensionError(f"site {site} outside 1..{n}")
            chars[site - 1] = letter
        return cls("".join(chars))

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        """1-based sites with a non-identity letter."""
        return tuple(k + 1 for k, c in enumerate(self.letters) if c != "I")

    def label(self) -> str:
        """Compact label such as ``Y2Y1`` (highest site first), identity as ``I``."""
        parts = [f"{self.letters[k - 1]}{k}" for k in reversed(self.support)]
        return "".join(parts) or "I"

    def __str__(self) -> str:
        return self.letters


class StateVector:
    """Normalized pure state of ``n_qubits`` qubits.

    The amplitude array is copied on construction and marked read-only, so
    instances can be shared freely.
    """

    __slots__ = ("amplitudes", "n_qubits")

    def __init__(self, amplitudes, n_qubits: int | None = None):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        dim = amps.shape[0]
        n = int(dim).bit_length() - 1
        if dim < 2 or 1 << n != dim:
            raise DimensionError(f"amplitude length {dim} is not a power of two")
        if n_qubits is not None and n_qubits != n:
            raise DimensionError(f"{dim} amplitudes do not describe {n_qubits} qubits")
        amps.flags.writeable = False
        self.amplitudes = amps
        self.n_qubits = n

    @classmethod
    def basis(cls, n: int, index: int = 0) -> StateVector:
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def plus(cls, n: int) -> StateVector:
        """The product state with every qubit in the +1 eigenstate of X."""
        return cls(np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


@lru_cache(maxsize=4096)
def pauli_action(letters: str) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(source, phase)`` with ``(P psi) = phase * psi[source]``."""
    n = len(letters)
    xmask = zmask = 0
    n_y = 0
    for k, c in enumerate(letters):
        if c in "XY":
            xmask |= 1 << k
        if c in "ZY":
            zmask |= 1 << k
        n_y += c == "Y"
    idx = np.arange(1 << n, dtype=np.int64)
    source = idx ^ xmask
    # sign from Z acting on the *source* basis state
    parity = np.zeros(1 << n, dtype=np.int64)
    masked = source & zmask
    for k in range(n):
        parity ^= (masked >> k) & 1
    phase = (1j) ** n_y * (1.0 - 2.0 * parity)
    source.flags.writeable = False
    phase.flags.writeable = False
    return source, phase


def _check(state: StateVector, p: PauliString):
    if len(p) != state.n_qubits:
        raise DimensionError(
            f"Pauli string of length {len(p)} applied to {state.n_qubits} qubits"
        )


def apply_pauli(state: StateVector, p: PauliString) -> StateVector:
    """Return ``P|psi>``."""
    _check(state, p)
    source, phase = pauli_action(p.letters)
    return StateVector(phase * state.amplitudes[source])


def apply_rotation(state: StateVector, p: PauliString, angle: float) -> StateVector:
    """Return ``exp(-i angle P)|psi> = cos(angle)|psi> - i sin(angle) P|psi>``."""
    _check(state, p)
    source, phase = pauli_action(p.letters)
    amps = state.amplitudes
    out = np.cos(angle) * amps - 1j * np.sin(angle) * (phase * amps[source])
    return StateVector(out)


def expectation(state: StateVector, p: PauliString) -> float:
    """``<psi|P|psi>`` as a real number."""
    _check(state, p)
    source, phase = pauli_action(p.letters)
    amps = state.amplitudes
    return float(np.real(np.vdot(amps, phase * amps[source])))


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


@lru_cache(maxsize=32)
def _hadamard_all(n: int) -> np.ndarray:
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.kron(h, out)
    out.flags.writeable = False
    return out


def basis_probabilities(state: StateVector, basis: str = "Z") -> np.ndarray:
    """Outcome distribution over bitstrings for a measurement of every qubit.

    In the X basis the state is rotated by a Hadamard on each qubit first, so
    bit value 0 means the +1 eigenvalue of X on that qubit.
    """
    amps = state.amplitudes
    basis = basis.upper()
    if basis == "X":
        amps = _hadamard_all(state.n_qubits) @ amps
    elif basis != "Z":
        raise ValueError(f"unknown measurement basis {basis!r}")
    probs = np.abs(amps) ** 2
    return probs / probs.sum()


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Dense matrix of ``p`` in the library's qubit ordering (for tests/oracles)."""
    single = {
        "I": np.eye(2, dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    }
    out = np.ones((1, 1), dtype=complex)
    # qubit 1 is the least significant bit, i.e. the rightmost kron factor
    for c in p.letters:
        out = np.kron(single[c], out)
    return out
