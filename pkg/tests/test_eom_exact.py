import numpy as np
import pytest

from vqite_noise.ansatz import AnsatzSpec, build_default_ansatz, derivative_states, prepare_array
from vqite_noise.eom_exact import (
    compute_eom,
    compute_SD,
    gradient_parameter_shift,
    mclachlan_distance,
    state_energy,
)
from vqite_noise.pauli_state import PauliString
from vqite_noise.tfim import TfimParams, energy_variance, exact_ground_state, hamiltonian_matrix


def test_structure_at_zero():
    spec = build_default_ansatz(4)
    eom = compute_eom(spec, np.zeros(spec.n_params), TfimParams(4))
    for mu, g in enumerate(spec.generators):
        pure_x = set(g.letters) <= {"I", "X"}
        assert eom.M[mu, mu] == pytest.approx(0.0 if pure_x else 1.0, abs=1e-14)
    assert np.abs(eom.V).max() < 1e-14


def test_metric_matches_finite_difference_qgt(rng):
    spec = build_default_ansatz(4)
    theta = rng.uniform(-np.pi, np.pi, spec.n_params)
    eom = compute_eom(spec, theta, TfimParams(4))
    h = 1e-5
    psi = prepare_array(spec, theta)
    tangents = []
    for mu in range(spec.n_params):
        step = np.zeros(spec.n_params)
        step[mu] = h
        tangents.append((prepare_array(spec, theta + step) - prepare_array(spec, theta - step)) / (2 * h))
    t = np.array(tangents)
    d = t.conj() @ t.T
    o = t.conj() @ psi
    fd_metric = np.real(d + np.outer(o, o))
    assert np.abs(fd_metric - eom.M).max() < 1e-6
    assert np.allclose(eom.M, eom.M.T, atol=1e-12)
    assert np.allclose(eom.D, eom.D.conj().T, atol=1e-12)
    assert np.abs(eom.O.real).max() < 1e-12


@pytest.mark.parametrize("n", [4, 5, 6])
def test_parameter_shift_agrees_with_direct_gradient(n, rng):
    spec = build_default_ansatz(n)
    params = TfimParams(n)
    worst = 0.0
    for _ in range(50 if n < 6 else 10):
        theta = rng.uniform(-np.pi, np.pi, spec.n_params)
        v, e_plus, e_minus = gradient_parameter_shift(spec, theta, params)
        worst = max(worst, np.abs(v - compute_eom(spec, theta, params, shifts=False).V).max())
    assert worst < 1e-10
    v0, _, _ = gradient_parameter_shift(spec, np.zeros(spec.n_params), params)
    assert np.abs(v0).max() < 1e-12


def test_v_is_minus_half_energy_gradient():
    spec = AnsatzSpec(2, 1, (PauliString("YX"), PauliString("XI")), (1, 1))
    params = TfimParams(2)
    theta = np.array([0.3, -0.2])
    eom = compute_eom(spec, theta, params)
    h = 1e-6
    for mu in range(2):
        step = np.eye(2)[mu] * h
        grad = (state_energy(spec, theta + step, params) - state_energy(spec, theta - step, params)) / (2 * h)
        assert eom.V[mu] == pytest.approx(-0.5 * grad, abs=1e-8)


def _dense_mclachlan(spec, theta, params, theta_dot):
    psi, dpsi = derivative_states(spec, theta)
    h = hamiltonian_matrix(params)
    rho = np.outer(psi, psi.conj())
    e = np.real(psi.conj() @ h @ psi)
    target = -(h @ rho + rho @ h) + 2 * e * rho
    motion = sum(t * (np.outer(d, psi.conj()) + np.outer(psi, d.conj())) for t, d in zip(theta_dot, dpsi))
    return np.linalg.norm(motion - target) ** 2


def test_mclachlan_distance(rng):
    spec = build_default_ansatz(3)
    params = TfimParams(3)
    for _ in range(10):
        theta = rng.uniform(-np.pi, np.pi, spec.n_params)
        eom = compute_eom(spec, theta, params)
        td = rng.normal(size=spec.n_params)
        assert mclachlan_distance(eom, td) == pytest.approx(_dense_mclachlan(spec, theta, params, td), abs=1e-8)
        assert mclachlan_distance(eom, np.zeros_like(td)) == pytest.approx(2 * eom.var_h)
        # the stored minimum is the distance at the pseudo-inverse velocity
        td_opt = np.linalg.pinv(eom.M, rcond=1e-12, hermitian=True) @ eom.V
        assert eom.L2 == pytest.approx(mclachlan_distance(eom, td_opt), abs=1e-8)
        assert eom.L2 >= -1e-10


def test_mclachlan_zero_at_ground_state():
    params = TfimParams(4)
    _, gs = exact_ground_state(params)
    spec = build_default_ansatz(4)
    eom = compute_eom(spec, np.zeros(spec.n_params), params)
    assert mclachlan_distance(eom, np.zeros(spec.n_params), var_h=energy_variance(gs, params)) < 1e-10
    with pytest.raises(ValueError):
        mclachlan_distance(eom, np.zeros(2))


def test_sd_examples(rng):
    spec = build_default_ansatz(4)
    sd0 = compute_SD(spec, np.zeros(spec.n_params))
    plus = spec.reference().amplitudes
    from vqite_noise.pauli_state import pauli_matrix
    mats = [pauli_matrix(g) for g in spec.generators]
    expected = np.array([[plus @ a @ b @ plus for b in mats] for a in mats])
    assert np.allclose(sd0, expected)
    theta = rng.uniform(-1, 1, spec.n_params)
    sd = compute_SD(spec, theta)
    assert np.allclose(np.diag(sd), 1.0)
    assert np.allclose(sd, sd.conj().T)
    assert np.allclose(sd, compute_eom(spec, theta, TfimParams(4)).D)


def test_energy_split(rng):
    spec = build_default_ansatz(5)
    params = TfimParams(5)
    theta = rng.uniform(-1, 1, spec.n_params)
    eom = compute_eom(spec, theta, params)
    psi = prepare_array(spec, theta)
    assert eom.energy == pytest.approx(np.real(psi.conj() @ hamiltonian_matrix(params) @ psi), abs=1e-12)
