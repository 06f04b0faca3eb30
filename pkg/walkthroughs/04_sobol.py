"""Sobol indices of the Ishigami function and of a fitted model.

    python3 walkthroughs/04_sobol.py
"""

import numpy as np

from salix.attribution import gsa_over_model, sobol_design, sobol_indices
from salix.models.boosting import fit_gbt
from salix.synth import gen_ishigami

prob = gen_ishigami()
for k in (8, 10, 12, 14):
    ind = sobol_indices(prob, sobol_design(prob.bounds, 2 ** k), n_bootstrap=100)
    print(f"n_base=2^{k:2d}  S1={np.round(ind.s1, 3)}  ST={np.round(ind.st, 3)}")
print(f"analytic     S1={np.round(prob.s1, 3)}  ST={np.round(prob.st, 3)}")

# the same estimators over a model, inputs uniform over the training range
rng = np.random.default_rng(4)
X = rng.uniform(0, 1, (600, 4))
y = 4 * X[:, 0] + 2 * X[:, 1] * X[:, 2] + 0.1 * rng.standard_normal(600)
m = fit_gbt(X, y, feature_names=["a", "b", "c", "noise"])
s1, st, ind = gsa_over_model(m, X, n_base=2048)
for f, a, b, lo, hi in zip(ind.features, ind.s1, ind.st, ind.s1_ci[:, 0], ind.s1_ci[:, 1]):
    print(f"{f:6s} S1={a:6.3f} [{lo:6.3f}, {hi:6.3f}]  ST={b:6.3f}")
print("sampler:", ind.metadata.get("sampler"))
