"""Fitting the model zoo and comparing validation scores.

    python3 walkthroughs/02_models.py
"""

from salix.config import PreprocessConfig
from salix.models import LearnerSpec, impurity_importance
from salix.pipeline import evaluate_model, fit_model, preprocess
from salix.synth import SynthSpec, gen_hydro

ds, truth = gen_hydro(SynthSpec(n_drills=80, years_per_drill=12,
                                basin_sizes=(30, 20, 15, 10, 5), seed=2))
prep = preprocess(ds, PreprocessConfig())

specs = [LearnerSpec("linear"), LearnerSpec("tree"), LearnerSpec("forest", {"n_trees": 60}),
         LearnerSpec("gbt"), LearnerSpec("mlp", {"hidden_layers": [32, 16], "epochs": 150})]

fitted = {}
for spec in specs:
    m = fit_model(prep, spec, seed=0)
    ev = evaluate_model(m, prep)
    fitted[spec.kind] = m
    print(f"{spec.kind:7s} R2={ev.r2:.3f}  RMSE={ev.rmse:7.1f}  MAE={ev.mae:7.1f} mg/L")

# impurity importance of the boosted model against the planted ordering
imp = impurity_importance(fitted["gbt"])
best = sorted(imp, key=imp.get, reverse=True)[:5]
print("gbt top-5 by impurity:", best)
print("planted top-5:        ", truth["top_drivers"][:5])
