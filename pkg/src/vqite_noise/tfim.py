"""Open-boundary transverse-field Ising chain.

``H = -J sum_j Z_j Z_{j+1} - delta sum_j X_j``.  Every matrix element of H in
the computational basis is real, so the dense Hamiltonian is built as a real
symmetric array and diagonalized with ``numpy.linalg.eigh``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli_state import PauliString, StateVector, expectation, pauli_action

__all__ = [
    "DegenerateGroundStateWarning",
    "TfimParams",
    "build_hamiltonian",
    "energy",
    "energy_terms",
    "energy_variance",
    "exact_ground_state",
    "hamiltonian_matrix",
    "x_energy_values",
    "z_energy_values",
]


class DegenerateGroundStateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TfimParams:
    n: int
    j: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"TFIM needs at least two sites, got n={self.n}")


def build_hamiltonian(params: TfimParams) -> list[tuple[float, PauliString]]:
    """Weighted Pauli terms: the N-1 bond terms first, then the N field terms."""
    n = params.n
    terms = [
        (-params.j, PauliString.from_sites(n, {k: "Z", k + 1: "Z"}))
        for k in range(1, n)
    ]
    terms += [(-params.delta, PauliString.from_sites(n, {k: "X"})) for k in range(1, n + 1)]
    return terms


def _bits(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return (idx[:, None] >> np.arange(n)[None, :]) & 1


@lru_cache(maxsize=64)
def _spin_sums(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per basis index: sum_j z_j z_{j+1} and sum_j z_j with z = 1 - 2*bit."""
    z = 1 - 2 * _bits(n)
    bonds = (z[:, :-1] * z[:, 1:]).sum(axis=1).astype(float)
    singles = z.sum(axis=1).astype(float)
    bonds.flags.writeable = False
    singles.flags.writeable = False
    return bonds, singles


def z_energy_values(params: TfimParams) -> np.ndarray:
    """Value of the ZZ energy for each Z-basis outcome bitstring."""
    return -params.j * _spin_sums(params.n)[0]


def x_energy_values(params: TfimParams) -> np.ndarray:
    """Value of the field energy for each X-basis outcome (bit 0 means X = +1)."""
    return -params.delta * _spin_sums(params.n)[1]


def hamiltonian_matrix(params: TfimParams) -> np.ndarray:
    """Dense real symmetric Hamiltonian of shape (2^N, 2^N)."""
    n = params.n
    dim = 1 << n
    h = np.diag(z_energy_values(params))
    idx = np.arange(dim)
    for k in range(n):
        h[idx ^ (1 << k), idx] += -params.delta
    return h


def exact_ground_state(params: TfimParams) -> tuple[float, StateVector]:
    """Lowest eigenpair by dense diagonalization.

    The phase is fixed so the largest-magnitude amplitude is real and positive.
    A degenerate ground space (gap below 1e-10) triggers a warning and the
    first eigenvector from ``eigh`` is returned.
    """
    if params.n > 12:
        raise ValueError("dense diagonalization is limited to n <= 12")
    evals, evecs = np.linalg.eigh(hamiltonian_matrix(params))
    if evals[1] - evals[0] < 1e-10:
        warnings.warn(
            f"ground state of {params} is degenerate (gap {evals[1] - evals[0]:.2e})",
            DegenerateGroundStateWarning,
            stacklevel=2,
        )
    vec = evecs[:, 0].astype(np.complex128)
    k = int(np.argmax(np.abs(vec)))
    vec *= np.conj(vec[k]) / abs(vec[k])
    return float(evals[0]), StateVector(vec / np.linalg.norm(vec))


def energy_terms(state: StateVector, params: TfimParams) -> tuple[float, float]:
    """``(E_Z, E_X)``: the bond and field parts of the energy."""
    if state.n_qubits != params.n:
        raise ValueError(f"state has {state.n_qubits} qubits, model has {params.n}")
    probs = np.abs(state.amplitudes) ** 2
    e_z = float(probs @ z_energy_values(params))
    e_x = -params.delta * sum(
        expectation(state, PauliString.from_sites(params.n, {k: "X"}))
        for k in range(1, params.n + 1)
    )
    return e_z, float(e_x)


def energy(state: StateVector, params: TfimParams) -> float:
    e_z, e_x = energy_terms(state, params)
    return e_z + e_x


def energy_variance(state: StateVector, params: TfimParams) -> float:
    """``<H^2> - <H>^2`` computed as ``||H psi||^2 - <psi|H|psi>^2``."""
    psi = state.amplitudes
    h_psi = np.zeros_like(psi)
    for coeff, p in build_hamiltonian(params):
        source, phase = pauli_action(p.letters)
        h_psi += coeff * phase * psi[source]
    mean = float(np.real(np.vdot(psi, h_psi)))
    return float(np.real(np.vdot(h_psi, h_psi))) - mean**2
