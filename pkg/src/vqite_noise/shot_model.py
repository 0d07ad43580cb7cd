"""Finite-shot estimators for every raw measurement of one EOM evaluation.

One circuit yields one raw scalar ``m_kappa``:

* ``D(mu, nu)`` with ``mu <= nu``: a Hadamard test whose +-1 outcomes average
  to ``Re D[mu, nu]``;
* ``O(mu)``: a Hadamard test averaging to ``Im O[mu]``;
* ``E(shift, mu, basis)``: the Z-basis (bond) or X-basis (field) energy of the
  state with ``theta_mu`` shifted by ``+-pi/4``.

The canonical order is all D entries (row-major upper triangle), then O, then
for each ``mu`` the four energy circuits ``(+, Z), (+, X), (-, Z), (-, X)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .ansatz import AnsatzSpec, shifted_states
from .eom_exact import SHIFT, EomData, basis_distributions, compute_eom, metric_from_raw
from .tfim import TfimParams, x_energy_values, z_energy_values

__all__ = [
    "ConfigurationError",
    "MeasurementLayout",
    "RawMeasurementId",
    "RawSnapshot",
    "ShotPlan",
    "enumerate_measurements",
    "intrinsic_variance",
    "measure_eom",
    "raw_snapshot",
    "sample_measurement",
]

SAMPLING_MODES = ("bernoulli", "gaussian", "exact")


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class RawMeasurementId:
    kind: str  # "D", "O" or "E"
    index: int
    mu: int | None = None
    nu: int | None = None
    shift: str | None = None  # "+", "-" or "0"
    basis: str | None = None  # "Z" or "X"

    def describe(self) -> str:
        if self.kind == "D":
            return f"D[{self.mu},{self.nu}]"
        if self.kind == "O":
            return f"O[{self.mu}]"
        target = "" if self.mu is None else str(self.mu)
        return f"E{self.shift}{target}_{self.basis}"


@dataclass(frozen=True)
class MeasurementLayout:
    """Index bookkeeping for the canonical measurement order."""

    n_params: int

    @property
    def n_d(self) -> int:
        return self.n_params * (self.n_params + 1) // 2

    @property
    def n_o(self) -> int:
        return self.n_params

    @property
    def n_e(self) -> int:
        return 4 * self.n_params

    @property
    def size(self) -> int:
        return self.n_d + self.n_o + self.n_e

    @property
    def d_slice(self) -> slice:
        return slice(0, self.n_d)

    @property
    def o_slice(self) -> slice:
        return slice(self.n_d, self.n_d + self.n_o)

    @property
    def e_slice(self) -> slice:
        return slice(self.n_d + self.n_o, self.size)

    @property
    def hadamard_slice(self) -> slice:
        return slice(0, self.n_d + self.n_o)

    def triu(self) -> tuple[np.ndarray, np.ndarray]:
        return _triu(self.n_params)


@lru_cache(maxsize=64)
def _triu(n: int):
    iu, ju = np.triu_indices(n)
    iu.flags.writeable = False
    ju.flags.writeable = False
    return iu, ju


def enumerate_measurements(spec: AnsatzSpec) -> list[RawMeasurementId]:
    n = spec.n_params
    ids = []
    for mu, nu in zip(*_triu(n)):
        ids.append(RawMeasurementId("D", len(ids), int(mu), int(nu)))
    for mu in range(n):
        ids.append(RawMeasurementId("O", len(ids), mu))
    for mu in range(n):
        for shift in "+-":
            for basis in "ZX":
                ids.append(RawMeasurementId("E", len(ids), mu, shift=shift, basis=basis))
    return ids


@dataclass(frozen=True)
class ShotPlan:
    """Shots per raw measurement, aligned with :func:`enumerate_measurements`."""

    shots: np.ndarray
    m_ave: int
    r: float = 1.0

    def __post_init__(self):
        shots = np.asarray(self.shots, dtype=np.int64)
        if shots.ndim != 1 or np.any(shots < 1):
            raise ConfigurationError("every measurement needs at least one shot")
        shots.flags.writeable = False
        object.__setattr__(self, "shots", shots)

    @classmethod
    def uniform(cls, n_measurements: int, m_ave: int) -> ShotPlan:
        return cls(np.full(n_measurements, int(m_ave)), int(m_ave), 1.0)

    @property
    def m_tot(self) -> int:
        return int(self.shots.sum())

    @property
    def m_min(self) -> int:
        return max(1, int(round(self.r * self.m_ave)))

    def __len__(self) -> int:
        return self.shots.shape[0]

    def __getitem__(self, mid: RawMeasurementId) -> int:
        return int(self.shots[mid.index])

    def as_dict(self, ids: list[RawMeasurementId]) -> dict[RawMeasurementId, int]:
        return {mid: int(self.shots[mid.index]) for mid in ids}


@dataclass(frozen=True)
class RawSnapshot:
    """Exact expectation values and single-shot statistics of every circuit at one theta."""

    eom: EomData
    means: np.ndarray
    variances: np.ndarray
    energy_probs: np.ndarray  # (4 n_params, 2^N) outcome distributions
    energy_values: np.ndarray  # (4 n_params, 2^N) classical functional per outcome

    @property
    def layout(self) -> MeasurementLayout:
        return MeasurementLayout(self.eom.n_params)


def raw_snapshot(spec: AnsatzSpec, theta, params: TfimParams, eom: EomData | None = None) -> RawSnapshot:
    if eom is None:
        eom = compute_eom(spec, theta, params, shifts=False)
    layout = MeasurementLayout(spec.n_params)
    iu, ju = layout.triu()
    had = np.concatenate([np.real(eom.D[iu, ju]), eom.O.imag])
    if np.any(np.abs(had) > 1 + 1e-9):
        raise ArithmeticError("Hadamard-test expectation outside [-1, 1]")
    had = np.clip(had, -1.0, 1.0)

    stack = shifted_states(spec, theta, SHIFT)
    pz, px = basis_distributions(stack)
    zv, xv = z_energy_values(params), x_energy_values(params)
    # rows: for each mu, (+,Z), (+,X), (-,Z), (-,X)
    probs = np.empty((4 * spec.n_params, pz.shape[1]))
    probs[0::4], probs[1::4] = pz[0::2], px[0::2]
    probs[2::4], probs[3::4] = pz[1::2], px[1::2]
    probs /= probs.sum(axis=1, keepdims=True)
    values = np.empty_like(probs)
    values[0::2], values[1::2] = zv, xv
    e_mean = np.einsum("kd,kd->k", probs, values)
    e_var = np.maximum(np.einsum("kd,kd->k", probs, values**2) - e_mean**2, 0.0)

    means = np.concatenate([had, e_mean])
    variances = np.concatenate([1.0 - had**2, e_var])
    e_pairs = e_mean.reshape(spec.n_params, 2, 2)
    eom = replace(eom, E_plus=e_pairs[:, 0, :], E_minus=e_pairs[:, 1, :])
    return RawSnapshot(eom, means, variances, probs, values)


def intrinsic_variance(mid: RawMeasurementId, spec: AnsatzSpec, theta, params: TfimParams) -> float:
    """Single-shot variance ``<m^2> - <m>^2`` of one circuit."""
    return float(raw_snapshot(spec, theta, params).variances[mid.index])


def _sample_hadamard(means, shots, rng, mode):
    if mode == "exact":
        return means.copy()
    if mode == "gaussian":
        return means + np.sqrt((1.0 - means**2) / shots) * rng.standard_normal(means.shape)
    hits = rng.binomial(shots, (1.0 + means) / 2.0)
    return 2.0 * hits / shots - 1.0


def _sample_energy(probs, values, means, variances, shots, rng, mode):
    if mode == "exact":
        return means.copy()
    if mode == "gaussian":
        return means + np.sqrt(variances / shots) * rng.standard_normal(means.shape)
    counts = rng.multinomial(shots, probs)
    return np.einsum("kd,kd->k", counts, values) / shots


def _check_mode(mode):
    if mode not in SAMPLING_MODES:
        raise ConfigurationError(f"sampling mode must be one of {SAMPLING_MODES}, got {mode!r}")


def sample_measurement(
    mid: RawMeasurementId,
    spec: AnsatzSpec,
    theta,
    shots: int,
    rng: np.random.Generator,
    params: TfimParams,
    mode: str = "bernoulli",
    snapshot: RawSnapshot | None = None,
) -> float:
    """Finite-shot estimate of one raw measurement."""
    _check_mode(mode)
    if shots < 1:
        raise ConfigurationError("shots must be positive")
    snap = snapshot if snapshot is not None else raw_snapshot(spec, theta, params)
    k = mid.index
    if mid.kind in ("D", "O"):
        return float(_sample_hadamard(snap.means[k : k + 1], np.array([shots]), rng, mode)[0])
    j = k - snap.layout.e_slice.start
    est = _sample_energy(
        snap.energy_probs[j : j + 1], snap.energy_values[j : j + 1],
        snap.means[k : k + 1], snap.variances[k : k + 1], np.array([shots]), rng, mode,
    )
    return float(est[0])


def assemble_eom(estimates: np.ndarray, exact: EomData) -> EomData:
    """Noisy EOM data built from raw estimates in canonical order.

    Scalars that no circuit measures (unshifted energies, the energy variance)
    are taken from ``exact``.
    """
    n = exact.n_params
    layout = MeasurementLayout(n)
    iu, ju = layout.triu()
    re_d = np.zeros((n, n))
    re_d[iu, ju] = estimates[layout.d_slice]
    re_d[ju, iu] = estimates[layout.d_slice]
    b = estimates[layout.o_slice]
    m = metric_from_raw(re_d, b)
    e = estimates[layout.e_slice].reshape(n, 2, 2)
    e_plus, e_minus = e[:, 0, :], e[:, 1, :]
    v = (e_minus.sum(axis=1) - e_plus.sum(axis=1)) / 2.0
    l2 = 2.0 * exact.var_h - 2.0 * float(v @ np.linalg.pinv(m, rcond=1e-12, hermitian=True) @ v)
    return EomData(
        D=re_d.astype(complex), O=1j * b, M=m, V=v, E_Z=exact.E_Z, E_X=exact.E_X,
        var_h=exact.var_h, L2=l2, E_plus=e_plus, E_minus=e_minus,
    )


def measure_eom(
    spec: AnsatzSpec,
    theta,
    params: TfimParams,
    plan: ShotPlan | None,
    rng: np.random.Generator,
    mode: str = "bernoulli",
    snapshot: RawSnapshot | None = None,
):
    """Sample every raw circuit once according to ``plan``.

    Returns ``(noisy EomData, intrinsic variances)``.  ``mode="exact"`` (or
    ``plan=None``) returns the infinite-shot values.  Hadamard circuits are
    drawn before energy circuits, each in canonical order, so a seeded
    generator reproduces the output bit for bit.
    """
    _check_mode(mode)
    snap = snapshot if snapshot is not None else raw_snapshot(spec, theta, params)
    layout = snap.layout
    if plan is None:
        mode = "exact"
        shots = np.ones(layout.size, dtype=np.int64)
    else:
        if len(plan) != layout.size:
            raise ConfigurationError(
                f"shot plan covers {len(plan)} measurements, ansatz needs {layout.size}"
            )
        shots = plan.shots
    if mode == "exact":
        eom = compute_eom(spec, theta, params)
        return eom, snap.variances
    h, e = layout.hadamard_slice, layout.e_slice
    estimates = np.empty(layout.size)
    estimates[h] = _sample_hadamard(snap.means[h], shots[h], rng, mode)
    estimates[e] = _sample_energy(
        snap.energy_probs, snap.energy_values, snap.means[e], snap.variances[e],
        shots[e], rng, mode,
    )
    return assemble_eom(estimates, snap.eom), snap.variances
