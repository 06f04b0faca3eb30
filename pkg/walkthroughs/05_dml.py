"""Double machine learning on a planted linear effect and on the hydro table.

    python3 walkthroughs/05_dml.py
"""

from salix.config import PreprocessConfig
from salix.dml import dml_effect, dml_scan
from salix.models import LearnerSpec
from salix.pipeline import preprocess
from salix.synth import SynthSpec, gen_hydro, gen_linear_causal

# T = X.gamma + u, Y = 2 T + X.beta + e
ds, truth = gen_linear_causal(2000, 5, theta=2.0, seed=0)
for kind in ("linear", "gbt"):
    est = dml_effect(ds, "t", "y", truth["covariates"], LearnerSpec(kind), k_folds=5)
    print(f"{kind:6s} nuisance: theta={est.theta:.4f} se={est.stderr:.4f} p={est.p_value:.2g}")

# scan every predictor of a small hydro table, with drill-clustered errors
hydro, htruth = gen_hydro(SynthSpec(n_drills=60, years_per_drill=10,
                                    basin_sizes=(24, 15, 10, 7, 4), seed=5))
prep = preprocess(hydro, PreprocessConfig(standardize=False))
scan = dml_scan(prep.raw, learner=LearnerSpec("gbt", {"n_rounds": 100}), se="cluster")
print(scan.to_markdown())
print("planted signs:", {k: v["sign"] for k, v in htruth["effects"].items()})
print("inert:", htruth["inert"])
