"""
Why three gates are dropped from the first layer
================================================

Acting on |+...+>, the first bond box makes some metric columns depend on
each other for every angle.  ``verify_structure`` samples random angles,
checks the column relations that motivate pruning, and reports the null
space it actually finds.
"""

# %%
import numpy as np

from vqite_noise import RunConfig, verify_structure
from vqite_noise.ansatz import build_default_ansatz
from vqite_noise.eom_exact import compute_eom
from vqite_noise.tfim import TfimParams

report = verify_structure(RunConfig(), sizes=(4, 6), samples=20)
print(report.to_text())

# %% [markdown]
# Two null vectors survive at every angle: the lone X_N X_{N-1} column and
# the sum of the Y_N Y_{N-1} and Z_N Z_{N-1} columns.  Removing the three
# listed generators lifts both, leaving 5N - 7 parameters.

# %%
n = 4
full, pruned = build_default_ansatz(n, removed=()), build_default_ansatz(n)
print("removed:", [g.label() for g in pruned.removed])
rng = np.random.default_rng(0)
for spec in (full, pruned):
    theta = rng.uniform(-np.pi, np.pi, spec.n_params)
    lam = np.linalg.eigvalsh(compute_eom(spec, theta, TfimParams(n), shifts=False).M)
    print(f"{spec.n_params:3d} parameters: three smallest eigenvalues {np.array2string(lam[:3], precision=2)}")

# %% [markdown]
# The ansatz serializes to one Pauli string per line, qubit 1 first.

# %%
print(pruned.to_text(), end="")
