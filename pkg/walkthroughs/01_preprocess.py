"""Preprocessing a synthetic borehole-year table.

Generates a small hydro table, runs the cleaning chain and prints what
each step did, the basin weights and the shape of the temporal split.

    python3 walkthroughs/01_preprocess.py
"""

import numpy as np

from salix.config import PreprocessConfig
from salix.pipeline import preprocess
from salix.synth import SynthSpec, gen_hydro

spec = SynthSpec(n_drills=50, years_per_drill=10, basin_sizes=(20, 15, 8, 5, 2), seed=1)
ds, truth = gen_hydro(spec)
print(f"raw table: {ds.n_rows} rows, {len(ds.names)} columns, {ds.n_missing()} missing cells")

prep = preprocess(ds, PreprocessConfig())

# every step leaves one provenance line
for line in prep.data.provenance:
    print("  ", line)

# weights are constant inside a basin and scale like 1/sqrt(rows in basin)
raw = prep.raw
basin = raw.frame["basin"].to_numpy()
for b in np.unique(basin):
    n_b = int((basin == b).sum())
    print(f"basin {b}: {n_b:4d} rows  weight {raw.weights[basin == b][0]:.4f}")
print(f"mean weight {raw.weights.mean():.12f}")

print(f"features kept: {prep.features}")
print(f"split: {prep.split.train.size} train rows, {prep.split.valid.size} validation rows "
      f"({prep.split.rule})")

# the scaled twin has unit-variance features; the target stays in mg/L
X = prep.data.X()
print("feature std (ddof=1):", np.round(X.std(axis=0, ddof=1)[:4], 6), "...")
