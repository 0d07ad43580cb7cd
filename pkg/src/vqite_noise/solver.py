"""Regularized solution of ``M theta_dot = V`` and adaptive Euler stepping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "INFINITE_CONDITION",
    "RegularizationPolicy",
    "SolverError",
    "StepControl",
    "StepRejected",
    "advance",
    "condition_number",
    "regularized_inverse",
    "solve_thetadot",
]

INFINITE_CONDITION = float("inf")


class SolverError(ArithmeticError):
    """The regularized metric could not be inverted."""


class StepRejected(ArithmeticError):
    """The proposed parameter velocity is not finite."""


@dataclass(frozen=True)
class RegularizationPolicy:
    method: str = "tikhonov"
    epsilon: float = 1e-2

    def __post_init__(self):
        if self.method not in ("tikhonov", "eigencut"):
            raise ValueError(f"unknown regularization method {self.method!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class StepControl:
    dt_max: float = 0.02
    dtheta_max: float = 0.05
    tau_final: float = 5.5


def _sym(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def regularized_inverse(m, policy: RegularizationPolicy) -> np.ndarray:
    """The matrix actually applied to ``V``: ``(M + eps I)^-1`` or the truncated pseudo-inverse."""
    m = _sym(m)
    lam, u = np.linalg.eigh(m)
    if policy.method == "tikhonov":
        shifted = lam + policy.epsilon
        if np.any(np.abs(shifted) < 1e-14 * max(1.0, np.abs(lam).max())):
            raise SolverError("M + eps*I is numerically singular")
        return (u / shifted) @ u.T
    keep = lam > policy.epsilon
    return (u[:, keep] / lam[keep]) @ u[:, keep].T


def solve_thetadot(m, v, policy: RegularizationPolicy = RegularizationPolicy()):
    """Solve the regularized equations of motion.

    Returns ``(theta_dot, diagnostics)`` where diagnostics holds the extreme
    eigenvalues of the symmetrized ``M`` and the retained rank.
    """
    m = _sym(m)
    v = np.asarray(v, dtype=float)
    if m.shape != (v.size, v.size):
        raise ValueError(f"M has shape {m.shape} but V has length {v.size}")
    lam, u = np.linalg.eigh(m)
    diag = {"lambda_min": float(lam[0]), "lambda_max": float(lam[-1]), "rank": v.size}
    if policy.method == "tikhonov":
        if lam[-1] + policy.epsilon <= 0 or np.any(np.abs(lam + policy.epsilon) < 1e-14):
            raise SolverError("M + eps*I is numerically singular")
        try:
            factor = scipy.linalg.cho_factor(m + policy.epsilon * np.eye(v.size))
            theta_dot = scipy.linalg.cho_solve(factor, v)
        except np.linalg.LinAlgError:
            # indefinite noisy M: fall back to the eigenbasis
            theta_dot = u @ ((u.T @ v) / (lam + policy.epsilon))
    else:
        keep = lam > policy.epsilon
        diag["rank"] = int(keep.sum())
        theta_dot = u[:, keep] @ ((u[:, keep].T @ v) / lam[keep])
    return theta_dot, diag


def condition_number(m) -> float:
    """``max|lambda| / min|lambda|``; infinite when the smallest is below 1e-300."""
    lam = np.abs(np.linalg.eigvalsh(_sym(m)))
    if lam.min() < 1e-300:
        return INFINITE_CONDITION
    return float(lam.max() / lam.min())


def advance(theta, theta_dot, control: StepControl, dt_limit: float | None = None):
    """Euler step with ``dt = min(dt_max, dtheta_max / max|theta_dot|)``.

    ``dt_limit`` caps the step further, e.g. to land exactly on ``tau_final``.
    """
    theta_dot = np.asarray(theta_dot, dtype=float)
    if not np.all(np.isfinite(theta_dot)):
        raise StepRejected("theta_dot contains non-finite entries")
    peak = np.abs(theta_dot).max(initial=0.0)
    dt = control.dt_max if peak == 0 else min(control.dt_max, control.dtheta_max / peak)
    if dt_limit is not None:
        dt = min(dt, dt_limit)
    return np.asarray(theta, dtype=float) + theta_dot * dt, dt
