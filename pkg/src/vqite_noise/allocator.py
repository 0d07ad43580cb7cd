"""Measurement-budget allocation driven by propagated shot noise.

A cost ``C = sum_j sigma^2(Q_j)`` is linearized in the raw measurements,
``sigma^2(Q_j) = sum_k |dQ_j/dm_k|^2 sigma_k^2 / shots_k``, which is minimized
under a fixed budget by ``shots_k ~ p_k``.  Three choices of ``Q`` are
supported: the parameter velocity ``theta_dot`` (default), the next-step
wavefunction, and the minimized McLachlan distance.

Derivatives are taken at the regularized inverse ``A`` that the solver
actually applied, ``theta_dot = A V``.  Per-entry derivatives are

* ``d theta_dot_mu / dV_a = A[mu, a]``
* ``d theta_dot_mu / dM_ab = -A[mu, a] theta_dot_b``
* ``d L2 / dV_a = -4 theta_dot_a`` and ``d L2 / dM_ab = 2 theta_dot_a theta_dot_b``
  for ``L2_min = 2 var(H) - 2 V^T A V``

and chain to the raw circuits through ``M = Re D - b b^T`` (``b = Im O``) and
``V = (E_minus - E_plus) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eom_exact import EomData
from .shot_model import MeasurementLayout

__all__ = [
    "COST_KINDS",
    "InfeasibleBudget",
    "MetricJacobian",
    "allocate_shots",
    "allocation_cost",
    "chain_to_raw",
    "compute_weights",
    "jacobian_thetadot_wrt_M",
    "jacobian_thetadot_wrt_V",
    "l2_derivatives",
    "predicted_variance",
    "raw_jacobian",
    "allocate_continuous",
]

COST_KINDS = ("theta_dot", "wavefunction", "mclachlan")


class InfeasibleBudget(ValueError):
    pass


def jacobian_thetadot_wrt_V(m_reg_inverse) -> np.ndarray:
    """Matrix with entries ``d theta_dot_mu / d V_alpha``."""
    return np.array(m_reg_inverse, dtype=float, copy=True)


@dataclass(frozen=True)
class MetricJacobian:
    """Lazy access to ``d theta_dot / dM``.

    Calling ``jac(alpha, beta)`` gives the derivative under a simultaneous
    change of ``M[alpha, beta]`` and ``M[beta, alpha]``:
    ``-(A[:, alpha] theta_dot[beta] + A[:, beta] theta_dot[alpha])``.  On the
    diagonal this counts the single entry twice, which matches the
    symmetrized formula; :meth:`per_entry` gives the unsymmetrized tensor used
    for chaining.
    """

    m_reg_inverse: np.ndarray
    theta_dot: np.ndarray

    def __call__(self, alpha: int, beta: int) -> np.ndarray:
        a, td = self.m_reg_inverse, self.theta_dot
        return -(a[:, alpha] * td[beta] + a[:, beta] * td[alpha])

    def per_entry(self) -> np.ndarray:
        """Array ``J[mu, alpha, beta] = d theta_dot_mu / d M[alpha, beta]``."""
        return -np.einsum("ma,b->mab", self.m_reg_inverse, self.theta_dot)


def jacobian_thetadot_wrt_M(m_reg_inverse, theta_dot) -> MetricJacobian:
    return MetricJacobian(np.asarray(m_reg_inverse, float), np.asarray(theta_dot, float))


def l2_derivatives(theta_dot) -> tuple[np.ndarray, np.ndarray]:
    """``(dL2/dM per entry, dL2/dV)`` of ``L2_min = 2 var(H) - 2 V^T A V``."""
    td = np.asarray(theta_dot, dtype=float)
    return 2.0 * np.outer(td, td), -4.0 * td


def chain_to_raw(dq_dm, dq_dv, eom: EomData) -> np.ndarray:
    """Derivatives of quantities ``Q`` with respect to every raw circuit.

    ``dq_dm`` has shape ``(q, n, n)`` (per-entry derivatives, or ``(n, n)`` for
    a scalar ``Q``) and ``dq_dv`` shape ``(q, n)``.  The result has shape
    ``(q, n_measurements)`` in canonical measurement order.
    """
    dq_dm = np.asarray(dq_dm, dtype=float)
    dq_dv = np.asarray(dq_dv, dtype=float)
    scalar = dq_dm.ndim == 2
    if scalar:
        dq_dm, dq_dv = dq_dm[None], dq_dv[None]
    n = eom.n_params
    layout = MeasurementLayout(n)
    iu, ju = layout.triu()
    both = dq_dm + np.swapaxes(dq_dm, 1, 2)
    out = np.empty((dq_dm.shape[0], layout.size))
    # an off-diagonal raw D feeds M[mu, nu] and M[nu, mu]; a diagonal one only M[mu, mu]
    out[:, layout.d_slice] = np.where(iu == ju, dq_dm[:, iu, ju], both[:, iu, ju])
    out[:, layout.o_slice] = -both @ eom.b
    e = out[:, layout.e_slice].reshape(-1, n, 2, 2)
    e[:, :, 0, :] = -0.5 * dq_dv[:, :, None]
    e[:, :, 1, :] = 0.5 * dq_dv[:, :, None]
    out[:, layout.e_slice] = e.reshape(dq_dm.shape[0], -1)
    return out[0] if scalar else out


def raw_jacobian(m_reg_inverse, theta_dot, eom: EomData) -> np.ndarray:
    """``d theta_dot_mu / d m_kappa`` with shape ``(n_params, n_measurements)``."""
    jm = jacobian_thetadot_wrt_M(m_reg_inverse, theta_dot).per_entry()
    return chain_to_raw(jm, jacobian_thetadot_wrt_V(m_reg_inverse), eom)


def compute_weights(
    kind: str,
    eom: EomData,
    theta_dot,
    m_reg_inverse,
    variances,
    sd=None,
) -> np.ndarray:
    """Allocation weights ``p_kappa`` for one cost function.

    The overall ``dt**2`` factor of the wavefunction cost is dropped since it
    does not change the allocation.
    """
    sigma = np.sqrt(np.maximum(np.asarray(variances, dtype=float), 0.0))
    if kind == "theta_dot":
        jac = raw_jacobian(m_reg_inverse, theta_dot, eom)
        return np.sqrt(np.einsum("mk,mk->k", jac, jac)) * sigma
    if kind == "wavefunction":
        if sd is None:
            raise ValueError("the wavefunction cost needs the tangent overlap matrix")
        jac = raw_jacobian(m_reg_inverse, theta_dot, eom)
        quad = np.einsum("mk,mn,nk->k", jac, np.real(sd), jac)
        if quad.min(initial=0.0) < -1e-10:
            raise ArithmeticError(f"negative wavefunction variance {quad.min():.3e}")
        return np.sqrt(np.maximum(quad, 0.0)) * sigma
    if kind == "mclachlan":
        dm, dv = l2_derivatives(theta_dot)
        return np.abs(chain_to_raw(dm, dv, eom)) * sigma
    raise ValueError(f"unknown cost kind {kind!r}; expected one of {COST_KINDS}")


def predicted_variance(jac, variances, shots) -> float:
    """Linear variance propagation ``sum_mu sum_k jac^2 sigma_k^2 / shots_k``."""
    jac = np.atleast_2d(jac)
    return float(np.sum(jac**2 * (np.asarray(variances) / np.asarray(shots, dtype=float))))


def allocation_cost(p, shots) -> float:
    """Cost ``sum_k p_k^2 / shots_k`` minimized by the allocation."""
    return float(np.sum(np.asarray(p, float) ** 2 / np.asarray(shots, dtype=float)))


def allocate_continuous(p, m_min: float, m_tot: float) -> np.ndarray:
    """Proportional allocation with a floor, for weights in ascending order.

    Entries whose proportional share falls below ``m_min`` are pinned to it and
    the remaining budget is shared out again among the rest, until no share
    is below the floor.
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    if m_tot < n * m_min * (1 - 1e-12):
        raise InfeasibleBudget(f"budget {m_tot} cannot give {n} circuits {m_min} shots each")
    out = np.empty(n)
    start, budget = 0, float(m_tot)
    while start < n:
        rest = p[start:]
        total = rest.sum()
        if budget <= (n - start) * m_min or total <= 0:
            out[start:] = budget / (n - start)
            break
        share = rest * budget / total
        count = int(np.count_nonzero(share < m_min))
        if count == 0:
            out[start:] = share
            break
        # ascending order puts every under-floor entry first
        out[start : start + count] = m_min
        budget -= count * m_min
        start += count
    return out


def allocate_shots(p, m_min: int, m_tot: int, integer: bool = True) -> np.ndarray:
    """Allocate ``m_tot`` shots over weights ``p`` with a per-circuit floor ``m_min``.

    ``p`` may be given in any order; the result follows the input order.
    Integer rounding floors every share and hands the leftover shots to the
    largest fractional parts, ties going to the larger weight.
    """
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise ValueError("weights must be finite and non-negative")
    if m_min < 1:
        raise InfeasibleBudget("the shot floor must be at least 1")
    n = p.size
    if m_tot < n * m_min:
        raise InfeasibleBudget(f"budget {m_tot} cannot give {n} circuits {m_min} shots each")
    order = np.argsort(p, kind="stable")
    cont = np.empty(n)
    cont[order] = allocate_continuous(p[order], m_min, m_tot)
    if not integer:
        return cont
    shots = np.floor(cont + 1e-9).astype(np.int64)
    left = int(m_tot - shots.sum())
    if left > 0:
        frac = cont - shots
        # lexsort: last key is primary
        rank = np.lexsort((-p, -frac))
        shots[rank[:left]] += 1
    elif left < 0:
        rank = np.lexsort((p, cont - shots))
        rank = [k for k in rank if shots[k] > m_min]
        shots[rank[:-left]] -= 1
    return shots
