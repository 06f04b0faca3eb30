"""Recursive feature elimination and cross-method rank agreement.

    python3 walkthroughs/06_rfe_compare.py
"""

from salix.attribution import gsa_over_model, rank_compare, rfe, sample_background, shap_summary
from salix.config import PreprocessConfig
from salix.models import LearnerSpec
from salix.pipeline import fit_model, preprocess
from salix.synth import SynthSpec, gen_hydro

ds, truth = gen_hydro(SynthSpec(n_drills=60, years_per_drill=10,
                                basin_sizes=(24, 15, 10, 7, 4), seed=6))
prep = preprocess(ds, PreprocessConfig())
spec = LearnerSpec("gbt", {"n_rounds": 100})

trace = rfe(prep.data, spec, prep.split, seed=0)
print("eliminated first to last:", trace.eliminated)
best = trace.to_result()
print("rfe top-5:", best.top(5))

model = fit_model(prep, spec, seed=0)
X = prep.data.X(prep.features)
bg, _ = sample_background(X[prep.split.train], 60, seed=0)
shap_res, _ = shap_summary(model, X[prep.split.valid][:20], bg)
s1, st, _ = gsa_over_model(model, X[prep.split.train], n_base=1024)
print("shap top-5:", shap_res.top(5))
print("gsa-s1 top-5:", s1.top(5))
print("planted top-3:", truth["top_drivers"][:3])

cmp = rank_compare([best, shap_res, s1], label="gbt")
print(cmp.to_markdown())
