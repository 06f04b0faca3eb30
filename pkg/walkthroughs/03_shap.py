"""Shapley values: the linear closed form, then kernel vs exact on boosted trees.

    python3 walkthroughs/03_shap.py
"""

import numpy as np

from salix.attribution import shap_exact_rows, shap_kernel_rows, shap_summary
from salix.models.boosting import GbtParams, fit_gbt
from salix.models.linear import fit_linear

rng = np.random.default_rng(0)

# linear model: phi_j = beta_j * (x_j - mean of background)
X = rng.standard_normal((300, 4))
lin = fit_linear(X, X @ [2.0, -1.0, 0.0, 0.5] + 3.0)
bg = X[:100]
phi, base = shap_exact_rows(lin, X[200:203], bg)
print("exact phi:\n", np.round(phi, 6))
print("closed form:\n", np.round(lin.coef * (X[200:203] - bg.mean(axis=0)), 6))

# a nonlinear model with 9 features, explained both ways
X = rng.uniform(-1, 1, (500, 9))
y = np.sin(3 * X[:, 0]) + X[:, 1] * X[:, 2] + 0.3 * X[:, 3]
gbt = fit_gbt(X, y, params=GbtParams(n_rounds=80))
rows, bg = X[400:410], X[:80]
ex, base = shap_exact_rows(gbt, rows, bg)
for budget in (64, 256, 510):
    ke, _, meta = shap_kernel_rows(gbt, rows, bg, n_coalitions=budget, seed=0)
    print(f"kernel budget {budget:4d}: max |kernel - exact| = {np.abs(ke - ex).max():.2e}"
          f"  enumerated={meta['enumerated']}")

# efficiency: contributions add up to prediction minus the background mean
print("efficiency gap:", np.abs(ex.sum(axis=1) + base - gbt.predict(rows)).max())

summary, _ = shap_summary(gbt, rows, bg)
print("mean |phi| ranking:", summary.top(4))
