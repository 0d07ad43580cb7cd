"""Acceptance criteria, one test each.

Every test records one PASS/FAIL line (shown in the terminal summary) and
then asserts it.  The ensemble-based criteria share session-scoped ensembles
and take a total of roughly half an hour on one core.
"""

import numpy as np
import pytest

from vqite_noise.allocator import (
    allocate_shots,
    chain_to_raw,
    jacobian_thetadot_wrt_M,
    jacobian_thetadot_wrt_V,
    l2_derivatives,
    predicted_variance,
    raw_jacobian,
)
from vqite_noise.ansatz import build_default_ansatz
from vqite_noise.eom_exact import EomData, compute_eom
from vqite_noise.harness import RunConfig, run_ensemble, run_trajectory, sweep_r, verify_structure
from vqite_noise.shot_model import MeasurementLayout, ShotPlan, assemble_eom, measure_eom, raw_snapshot
from vqite_noise.solver import RegularizationPolicy, regularized_inverse, solve_thetadot
from vqite_noise.tfim import TfimParams

pytestmark = pytest.mark.slow

TAU = 5.5
R_GRID = (0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0)
NOISY6 = RunConfig(n=6, noise="sampled", shots=10_000, runs=20, seed=1000)


def combined(a, b):
    return float(np.hypot(a, b))


def at(ensemble, tau=TAU):
    return ensemble.summary.at(tau)


@pytest.fixture(scope="session")
def r_sweep6():
    return sweep_r(NOISY6, r_values=R_GRID)[1]


@pytest.fixture(scope="session")
def cost_sweeps(r_sweep6):
    sweeps = {"theta_dot": r_sweep6}
    for cost in ("wavefunction", "mclachlan"):
        cfg = NOISY6.with_overrides(cost=cost)
        ensembles = sweep_r(cfg, r_values=R_GRID[:-1])[1]
        ensembles[1.0] = r_sweep6[1.0]  # r = 1 never consults the cost
        sweeps[cost] = ensembles
    return sweeps


# ---------------------------------------------------------------- 1


def test_noiseless_regularization_benchmark(criterion):
    base = RunConfig(n=6, tau_final=TAU)
    final = {}
    for method, eps in [("tikhonov", 1e-4), ("tikhonov", 1e-3), ("tikhonov", 1e-2),
                        ("eigencut", 1e-4), ("eigencut", 1e-2)]:
        record = run_trajectory(base.with_overrides(method=method, epsilon=eps))
        assert record.ok
        final[(method, eps)] = record.final_infidelity
    tik_ok = all(final[("tikhonov", e)] < 1e-2 for e in (1e-4, 1e-3, 1e-2))
    cut_ok = final[("eigencut", 1e-4)] < 1e-2 and final[("eigencut", 1e-2)] > 1e-1
    detail = ", ".join(f"{m} {e:g}: {v:.3e}" for (m, e), v in final.items())
    assert criterion(1, "noiseless regularization benchmark", tik_ok and cut_ok, detail)


# ---------------------------------------------------------------- 2


def test_noisy_regularization_ordering(criterion):
    cfg = NOISY6.with_overrides(runs=50)
    order = [("tikhonov", 1e-2), ("eigencut", 1e-4), ("tikhonov", 1e-4)]
    stats = [at(run_ensemble(cfg.with_overrides(method=m, epsilon=e))) for m, e in order]
    gaps = [(b[0] - a[0]) / combined(a[1], b[1]) for a, b in zip(stats, stats[1:])]
    passed = all(g > 2.0 for g in gaps)
    detail = "; ".join(f"{m} {e:g}: {s[0]:.4e}+-{s[1]:.1e}" for (m, e), s in zip(order, stats))
    detail += f"; gaps in combined SE: {gaps[0]:.2f}, {gaps[1]:.2f}"
    assert criterion(2, "noisy regularization ordering (50 runs)", passed, detail)


# ---------------------------------------------------------------- 3


def test_allocation_advantage(criterion, r_sweep6):
    finals = {r: at(e) for r, e in r_sweep6.items()}
    (m04, s04), (m1, s1) = finals[0.4], finals[1.0]
    advantage = (m1 - m04) / combined(s04, s1)
    worst = max(finals, key=lambda r: finals[r][0])
    early = (at(r_sweep6[1.0], 1.0)[0] - at(r_sweep6[0.4], 1.0)[0]) / combined(
        at(r_sweep6[1.0], 1.0)[1], at(r_sweep6[0.4], 1.0)[1])
    passed = advantage > 2.0 and worst == 0.05
    detail = ", ".join(f"r={r:g}: {m:.3e}+-{s:.1e}" for r, (m, s) in finals.items())
    detail += f"; r=0.4 vs 1 at tau=5.5: {advantage:.2f} SE; at tau=1: {early:.2f} SE; worst r={worst:g}"
    assert criterion(3, "shot-allocation advantage at N=6", passed, detail)


# ---------------------------------------------------------------- 4


def test_shot_savings(criterion, r_sweep6):
    uniform = at(run_ensemble(NOISY6.with_overrides(shots=20_000)))
    allocated = at(r_sweep6[0.4])
    margin = combined(allocated[1], uniform[1])
    passed = allocated[0] <= uniform[0] + 2.0 * margin
    detail = (f"allocated(1e4, r=0.4)={allocated[0]:.3e}+-{allocated[1]:.1e}, "
              f"uniform(2e4)={uniform[0]:.3e}+-{uniform[1]:.1e}")
    assert criterion(4, "about 50% shot savings", passed, detail)


# ---------------------------------------------------------------- 5


def test_cost_function_comparison(criterion, cost_sweeps):
    def improvement(ensembles, r, tau):
        (a, sa), (b, sb) = at(ensembles[r], tau), at(ensembles[1.0], tau)
        return (b - a) / combined(sa, sb)

    def shows_optimum(ensembles):
        # r = 0.4 significantly beats uniform and no grid point significantly beats r = 0.4
        m04, s04 = at(ensembles[0.4])
        best_other = min((at(e) for r, e in ensembles.items() if r != 0.4), key=lambda x: x[0])
        return improvement(ensembles, 0.4, TAU) > 2.0 and m04 <= best_other[0] + 2 * combined(s04, best_other[1])

    td, wf, l2 = cost_sweeps["theta_dot"], cost_sweeps["wavefunction"], cost_sweeps["mclachlan"]
    agree = all(
        abs(at(td[0.4], t)[0] - at(wf[0.4], t)[0]) <= 2 * combined(at(td[0.4], t)[1], at(wf[0.4], t)[1])
        for t in (4.0, TAU)
    )
    l2_gain = {(r, t): improvement(l2, r, t) for r in R_GRID[:-1] for t in NOISY6.snapshots}
    l2_where = max(l2_gain, key=l2_gain.get)
    l2_best = l2_gain[l2_where]
    parts = {
        "theta_dot optimum": shows_optimum(td),
        "wavefunction optimum": shows_optimum(wf),
        "agree at tau>=4": agree,
        "L2 never significant": l2_best <= 2.0,
    }
    detail = ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in parts.items())
    detail += (f"; r=0.4 gains (SE): theta_dot {improvement(td, 0.4, TAU):.2f}, "
               f"wavefunction {improvement(wf, 0.4, TAU):.2f}, L2 best over {len(l2_gain)} (r, tau) points "
               f"{l2_best:.2f} at r={l2_where[0]:g}, tau={l2_where[1]:g}")
    assert criterion(5, "cost-function comparison", all(parts.values()), detail)


# ---------------------------------------------------------------- 6


def test_n8_replication(criterion):
    cfg = RunConfig(n=8, noise="sampled", shots=10_000, runs=20, seed=2000)
    ensembles = sweep_r(cfg, r_values=R_GRID)[1]
    m1, s1 = at(ensembles[1.0])
    results = {r: at(e) for r, e in ensembles.items() if r < 1.0}
    gains = {r: (m1 - m) / combined(s, s1) for r, (m, s) in results.items()}
    losers = [r for r, g in gains.items() if g <= 0]
    # hard: the allocation helps for all but at most one r; which r is exceptional is soft
    passed = len(losers) <= 1
    detail = f"r=1: {m1:.3e}+-{s1:.1e}; " + ", ".join(
        f"r={r:g}: {results[r][0]:.3e} ({g:+.2f} SE)" for r, g in gains.items())
    detail += f"; not better than r=1: {losers or 'none'}"
    assert criterion(6, "N=8 replication", passed, detail)


# ---------------------------------------------------------------- 7


def random_instance(rng):
    n = int(rng.integers(2, 11))
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    b = rng.uniform(-0.5, 0.5, n)
    m = (q * rng.uniform(0.05, 2.0, n)) @ q.T
    v = rng.normal(size=n)
    d = m + np.outer(b, b)
    e = rng.normal(size=(n, 2, 2))
    e[:, 1, :] = e[:, 0, :] + v[:, None]  # (E_minus - E_plus) summed over bases / 2 = v
    eom = EomData(D=d.astype(complex), O=1j * b, M=m, V=v, E_Z=0.0, E_X=0.0, var_h=1.0, L2=0.0,
                  E_plus=e[:, 0, :], E_minus=e[:, 1, :])
    return n, eom


def rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def test_derivative_oracles(criterion):
    rng = np.random.default_rng(7)
    policy = RegularizationPolicy("tikhonov", 1e-2)
    h = 1e-6
    worst = {"dtd/dV": 0.0, "dtd/dM": 0.0, "dL2/dV": 0.0, "dL2/dM": 0.0, "raw": 0.0}

    def td_of(m, v):
        return solve_thetadot(m, v, policy)[0]

    def l2_of(m, v):
        return 2.0 - 2.0 * v @ regularized_inverse(m, policy) @ v

    for _ in range(50):
        n, eom = random_instance(rng)
        m, v = eom.M, eom.V
        a = regularized_inverse(m, policy)
        td = a @ v
        eye = np.eye(n)
        fd_v = np.column_stack([(td_of(m, v + h * eye[k]) - td_of(m, v - h * eye[k])) / (2 * h) for k in range(n)])
        worst["dtd/dV"] = max(worst["dtd/dV"], rel_err(fd_v, jacobian_thetadot_wrt_V(a)))
        jac_m = jacobian_thetadot_wrt_M(a, td)
        per = jac_m.per_entry()
        dl2_m, dl2_v = l2_derivatives(td)
        # the solver symmetrizes M, so perturb M[i, j] and M[j, i] together and
        # compare with the symmetrized derivative (per entry on the diagonal)
        fd_m, an_m = np.empty((n, n, n)), np.empty((n, n, n))
        fd_l2m, an_l2m = np.empty((n, n)), np.empty((n, n))
        for i in range(n):
            for j in range(n):
                dm = np.zeros((n, n))
                dm[i, j] = dm[j, i] = h
                fd_m[:, i, j] = (td_of(m + dm, v) - td_of(m - dm, v)) / (2 * h)
                fd_l2m[i, j] = (l2_of(m + dm, v) - l2_of(m - dm, v)) / (2 * h)
                an_m[:, i, j] = per[:, i, i] if i == j else jac_m(i, j)
                an_l2m[i, j] = dl2_m[i, i] if i == j else dl2_m[i, j] + dl2_m[j, i]
        fd_l2v = np.array([(l2_of(m, v + h * eye[k]) - l2_of(m, v - h * eye[k])) / (2 * h) for k in range(n)])
        worst["dtd/dM"] = max(worst["dtd/dM"], rel_err(fd_m, an_m))
        worst["dL2/dM"] = max(worst["dL2/dM"], rel_err(fd_l2m, an_l2m))
        worst["dL2/dV"] = max(worst["dL2/dV"], rel_err(fd_l2v, dl2_v))
        # full pipeline: perturb each raw circuit value and re-assemble
        layout = MeasurementLayout(n)
        iu, ju = layout.triu()
        raw = np.concatenate([eom.D.real[iu, ju], eom.b,
                              np.stack([eom.E_plus, eom.E_minus], axis=1).reshape(-1)])
        fd_raw = np.empty((n, raw.size))
        for k in range(raw.size):
            up, dn = raw.copy(), raw.copy()
            up[k] += h
            dn[k] -= h
            eu, ed = assemble_eom(up, eom), assemble_eom(dn, eom)
            fd_raw[:, k] = (td_of(eu.M, eu.V) - td_of(ed.M, ed.V)) / (2 * h)
        worst["raw"] = max(worst["raw"], rel_err(fd_raw, raw_jacobian(a, td, eom)))
    passed = max(worst.values()) < 1e-5
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert criterion(7, "derivative oracle suite (50 instances)", passed, f"max relative errors: {detail}")


# ---------------------------------------------------------------- 8


def propagation_ratio(spec, params, theta, shots, reps, seed):
    snap = raw_snapshot(spec, theta, params)
    policy = RegularizationPolicy("tikhonov", 1e-2)
    plan = ShotPlan.uniform(snap.layout.size, shots)
    a = regularized_inverse(snap.eom.M, policy)
    predicted = predicted_variance(raw_jacobian(a, a @ snap.eom.V, snap.eom), snap.variances, plan.shots)
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(reps):
        eom, _ = measure_eom(spec, theta, params, plan, rng, snapshot=snap)
        samples.append(solve_thetadot(eom.M, eom.V, policy)[0])
    observed = float(np.sum(np.var(samples, axis=0, ddof=1)))
    return predicted, observed, float(np.linalg.eigvalsh(snap.eom.M)[0])


def test_variance_propagation_fidelity(criterion):
    # the angles of the default noiseless N=4 run; the check is made at its end state
    cfg = RunConfig(n=4, tau_final=TAU)
    record = run_trajectory(cfg, keep_theta=True)
    spec, params = cfg.ansatz(), cfg.model
    predicted, observed, lam = propagation_ratio(spec, params, record.thetas[-1], 10_000, 500, 9)
    ratio = observed / predicted
    # diagnostic only: earlier on the trajectory M is closer to singular and the
    # first-order formula under-predicts at this budget
    early = int(np.searchsorted(record["tau"], 1.0))
    p1, o1, lam1 = propagation_ratio(spec, params, record.thetas[early], 10_000, 500, 9)
    passed = abs(ratio - 1.0) <= 0.25
    detail = (f"tau=5.5 (lambda_min {lam:.3f}): predicted {predicted:.4e}, empirical {observed:.4e}, "
              f"ratio {ratio:.3f}; diagnostic tau=1 (lambda_min {lam1:.3f}): ratio {o1 / p1:.3f}")
    assert criterion(8, "variance-propagation fidelity", passed, detail)


# ---------------------------------------------------------------- 9


def test_structure_verification(criterion):
    report = verify_structure(RunConfig(seed=3), sizes=(4, 5, 6), samples=50, tol=1e-10)
    claims_ok = report.all_claims_pass
    # otherwise the report must document a dependency set that really is theta-independent
    rng = np.random.default_rng(10)
    documented_ok = True
    for entry in report.entries:
        n = entry["n"]
        full = build_default_ansatz(n, removed=())
        labels = full.labels()
        vectors = []
        for text in entry["null_vectors"]:
            vec = np.zeros(full.n_params)
            for term in text.split():
                coeff, label = term.split("*")
                vec[labels.index(label)] = float(coeff)
            vectors.append(vec)
        for _ in range(10):
            m = compute_eom(full, rng.uniform(-np.pi, np.pi, full.n_params), TfimParams(n), shifts=False).M
            documented_ok &= all(np.abs(m @ vec).max() < 1e-4 for vec in vectors)
        documented_ok &= entry["pruned_nonsingular"]
        documented_ok &= len(vectors) == entry["deficiency_min"] == entry["deficiency_max"]
    failed = [c["claim"] for e in report.entries for c in e["claims"] if not c["passed"]]
    passed = claims_ok or documented_ok
    detail = "all three relations hold" if claims_ok else (
        f"{len(failed)} relation checks fail ({failed[0]} ...); report documents the corrected "
        f"dependency set: " + " | ".join(f"N={e['n']}: " + "; ".join(e["null_vectors"]) for e in report.entries))
    detail += ", pruned M nonsingular at all sizes" if all(e["pruned_nonsingular"] for e in report.entries) else ""
    assert criterion(9, "structure verification", passed, detail)


# ---------------------------------------------------------------- 10


def test_allocation_unit_suite(criterion):
    checks = {"hand trace": allocate_shots([1.0, 1.0, 8.0], 20, 100).tolist() == [20, 20, 60]}
    rng = np.random.default_rng(11)
    conserve = floor = monotone = uniform = True
    for _ in range(500):
        n = int(rng.integers(1, 40))
        p = rng.exponential(size=n) * (rng.random(n) > 0.1)
        m_min = int(rng.integers(1, 200))
        m_tot = n * m_min + int(rng.integers(0, 20_000))
        shots = allocate_shots(p, m_min, m_tot)
        conserve &= shots.sum() == m_tot
        floor &= shots.min() >= m_min
        monotone &= bool(np.all(shots[:, None] >= shots[None, :], where=p[:, None] > p[None, :]))
        uniform &= bool(np.all(allocate_shots(p, m_min, n * m_min) == m_min))
    checks.update({"conservation": conserve, "floor": floor, "monotonicity": monotone, "r=1 uniform": uniform})
    detail = ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
    assert criterion(10, "allocation unit suite", all(checks.values()), detail)
