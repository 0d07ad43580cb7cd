"""
Shot noise, its propagation, and a smarter budget split
=======================================================

Every entry of M and V comes from a few raw circuits.  The noise on the
parameter velocity theta_dot can be predicted to first order, and the
prediction tells us which circuits deserve more shots.
"""

# %%
import numpy as np

from vqite_noise import RunConfig, run_ensemble
from vqite_noise.allocator import allocate_shots, compute_weights, predicted_variance, raw_jacobian
from vqite_noise.ansatz import initial_parameters
from vqite_noise.shot_model import ShotPlan, enumerate_measurements, measure_eom, raw_snapshot
from vqite_noise.solver import regularized_inverse, solve_thetadot

config = RunConfig(n=4)
spec, params = config.ansatz(), config.model
theta = initial_parameters(spec, "uniform", 0.6, seed=3)
ids = enumerate_measurements(spec)
print(f"{spec.n_params} parameters -> {len(ids)} raw circuits")

# %% [markdown]
# Predicted versus sampled variance of theta_dot with 10^4 shots per circuit.

# %%
snap = raw_snapshot(spec, theta, params)
a = regularized_inverse(snap.eom.M, config.policy)
jac = raw_jacobian(a, a @ snap.eom.V, snap.eom)
uniform = ShotPlan.uniform(len(ids), 10_000)
rng = np.random.default_rng(1)
draws = [solve_thetadot(*(lambda e: (e.M, e.V))(measure_eom(spec, theta, params, uniform, rng, snapshot=snap)[0]),
                        config.policy)[0] for _ in range(300)]
print(f"predicted {predicted_variance(jac, snap.variances, uniform.shots):.4e}, "
      f"sampled {np.sum(np.var(draws, axis=0, ddof=1)):.4e}")

# %% [markdown]
# Weights p_k = |d theta_dot / d m_k| sigma_k.  Shots go proportionally to
# p_k, with a floor of r times the average so no circuit is starved.

# %%
p = compute_weights("theta_dot", snap.eom, a @ snap.eom.V, a, snap.variances)
for r in (1.0, 0.4, 0.05):
    shots = allocate_shots(p, max(1, int(r * 10_000)), 10_000 * len(ids))
    var = predicted_variance(jac, snap.variances, shots)
    print(f"r={r:4.2f}: shots {shots.min():6d}..{shots.max():7d}, predicted variance {var:.4e}")
top = np.argsort(p)[::-1][:5]
print("largest weights:", ", ".join(ids[k].describe() for k in top))

# %% [markdown]
# Along a whole trajectory the effect is modest but measurable.  Here is a
# small ensemble at N=4; the acceptance tests run the N=6 and N=8 versions.

# %%
base = config.with_overrides(noise="sampled", runs=6, tau_final=3.0)
for r in (1.0, 0.4):
    result = run_ensemble(base.with_overrides(r=r))
    mean, sem = result.summary.at(3.0)
    print(f"r={r}: 1-f(3.0) = {mean:.3e} +- {sem:.1e}")
