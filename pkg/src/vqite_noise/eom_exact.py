"""Infinite-shot equations of motion for imaginary-time McLachlan dynamics.

Conventions used throughout the package:

* ``D[mu, nu] = <d_mu Psi | d_nu Psi>`` and ``O[mu] = <d_mu Psi | Psi>``
  (purely imaginary for a normalized state).
* ``M = Re(D + O O^T)`` (plain product, no conjugate), real symmetric.
* ``V[mu] = -Re <d_mu Psi | H | Psi> = -dE/dtheta_mu / 2``.
* With these normalizations the Frobenius-norm McLachlan distance of a pure
  state is ``L2 = 2 theta_dot^T M theta_dot - 4 V^T theta_dot + 2 var(H)``,
  minimized at ``theta_dot = M^-1 V`` with ``L2_min = 2 var(H) - 2 V^T M^-1 V``.

The ansatz gates are ``exp(-i theta P)``, so the two-point parameter-shift
rule uses shifts of ``+-pi/4`` and reads ``V = (E_minus - E_plus) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .ansatz import AnsatzSpec, derivative_states, prepare_array, shifted_states
from .pauli_state import _hadamard_all
from .tfim import TfimParams, hamiltonian_matrix, x_energy_values, z_energy_values

__all__ = [
    "SHIFT",
    "EomData",
    "basis_energies",
    "basis_distributions",
    "compute_SD",
    "compute_eom",
    "gradient_parameter_shift",
    "mclachlan_distance",
    "metric_from_raw",
]

SHIFT = np.pi / 4


@dataclass(frozen=True)
class EomData:
    D: np.ndarray
    O: np.ndarray
    M: np.ndarray
    V: np.ndarray
    E_Z: float
    E_X: float
    var_h: float
    L2: float
    E_plus: np.ndarray | None = None  # (n_params, 2): columns are (Z, X) basis
    E_minus: np.ndarray | None = None
    SD: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_params(self) -> int:
        return self.V.shape[0]

    @property
    def energy(self) -> float:
        return self.E_Z + self.E_X

    @property
    def b(self) -> np.ndarray:
        """Imaginary part of ``O``, the quantity a Hadamard test measures."""
        return self.O.imag

    def with_sd(self, sd: np.ndarray) -> EomData:
        return replace(self, SD=sd)


@lru_cache(maxsize=16)
def _hamiltonian(params: TfimParams) -> np.ndarray:
    h = hamiltonian_matrix(params)
    h.flags.writeable = False
    return h


def basis_distributions(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Z- and X-basis outcome probabilities for each row of ``states``."""
    states = np.atleast_2d(states)
    n = states.shape[1].bit_length() - 1
    pz = np.abs(states) ** 2
    px = np.abs(states @ _hadamard_all(n).T) ** 2
    return pz, px


def basis_energies(states: np.ndarray, params: TfimParams) -> tuple[np.ndarray, np.ndarray]:
    """``(E_Z, E_X)`` for each row of ``states``."""
    pz, px = basis_distributions(states)
    return pz @ z_energy_values(params), px @ x_energy_values(params)


def metric_from_raw(re_d: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``M = Re D - b b^T`` made exactly symmetric."""
    m = re_d - np.outer(b, b)
    return 0.5 * (m + m.T)


def gradient_parameter_shift(spec: AnsatzSpec, theta, params: TfimParams):
    """Return ``(V, E_plus, E_minus)`` from shifted full energies.

    ``E_plus[mu] = (E_Z, E_X)`` evaluated at ``theta_mu + pi/4``.
    """
    stack = shifted_states(spec, theta, SHIFT)
    e_z, e_x = basis_energies(stack, params)
    e = np.stack([e_z, e_x], axis=1)
    e_plus, e_minus = e[0::2], e[1::2]
    v = (e_minus.sum(axis=1) - e_plus.sum(axis=1)) / 2.0
    return v, e_plus, e_minus


def compute_eom(spec: AnsatzSpec, theta, params: TfimParams, *, shifts: bool = True) -> EomData:
    """All exact EOM ingredients at ``theta``.

    ``V`` is evaluated directly from the tangent vectors; the shifted energies
    are attached for the shot model when ``shifts`` is true.
    """
    psi, dpsi = derivative_states(spec, theta)
    d = dpsi.conj() @ dpsi.T
    d = 0.5 * (d + d.conj().T)
    o = dpsi.conj() @ psi
    m = np.real(d) + np.real(np.outer(o, o))
    m = 0.5 * (m + m.T)
    h = _hamiltonian(params)
    h_psi = h @ psi
    v = -np.real(dpsi.conj() @ h_psi)
    mean = float(np.real(np.vdot(psi, h_psi)))
    var_h = max(float(np.real(np.vdot(h_psi, h_psi))) - mean**2, 0.0)
    e_z, e_x = basis_energies(psi, params)
    l2 = 2.0 * var_h - 2.0 * float(v @ np.linalg.pinv(m, rcond=1e-12, hermitian=True) @ v)
    e_plus = e_minus = None
    if shifts:
        _, e_plus, e_minus = gradient_parameter_shift(spec, theta, params)
    return EomData(
        D=d, O=o, M=m, V=v, E_Z=float(e_z[0]), E_X=float(e_x[0]), var_h=var_h,
        L2=l2, E_plus=e_plus, E_minus=e_minus,
    )


def mclachlan_distance(eom: EomData, theta_dot, var_h: float | None = None) -> float:
    """``|| sum_mu d_mu rho theta_dot_mu - L[rho] ||_F^2`` for the pure state.

    Equal to ``2 theta_dot^T M theta_dot - 4 V^T theta_dot + 2 var(H)`` with the
    module's normalization of ``M`` and ``V``.
    """
    td = np.asarray(theta_dot, dtype=float)
    if td.shape != eom.V.shape:
        raise ValueError(f"theta_dot has shape {td.shape}, expected {eom.V.shape}")
    var_h = eom.var_h if var_h is None else var_h
    return float(2.0 * (td @ eom.M @ td) - 4.0 * (eom.V @ td) + 2.0 * var_h)


def compute_SD(spec: AnsatzSpec, theta_next) -> np.ndarray:
    """Tangent overlap matrix ``<d_nu Psi | d_nu' Psi>`` at the post-step angles."""
    _, dpsi = derivative_states(spec, theta_next)
    sd = dpsi.conj() @ dpsi.T
    return 0.5 * (sd + sd.conj().T)


def state_energy(spec: AnsatzSpec, theta, params: TfimParams) -> float:
    psi = prepare_array(spec, theta)
    e_z, e_x = basis_energies(psi, params)
    return float(e_z[0] + e_x[0])
