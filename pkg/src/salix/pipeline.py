"""End-to-end workflow: prepare, train, evaluate, scan, attribute, compare.

Each stage is a plain function so the command-line subcommands can run
them one at a time over files and land on the same numbers as
:func:`run_pipeline`.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import dataset as D
from .attribution import (AttributionResult, RankComparison, comparison_table, gsa_over_model,
                          rank_compare, rfe, sample_background, shap_summary)
from .attribution.svg import ranking_svg, shap_svg, sobol_svg
from .config import RunConfig
from .dml import ScanResult, dml_scan
from .errors import SalixError
from .metrics import EvalReport, evaluate
from .models import LearnerSpec, TrainedModel, load_model

REPORT_VERSION = 1
TREE_KINDS = ("tree", "forest", "gbt")
COMPARED = ("rfe", "shap", "gsa-s1")


# ----------------------------------------------------------------------
# preparation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Prepared:
    """Cleaned data in original units, its scaled twin and the split."""

    raw: D.Dataset
    data: D.Dataset
    scaler: D.ScalerParams | None
    split: D.SplitPlan

    @property
    def features(self):
        return self.data.feature_names


def preprocess(ds: D.Dataset, pc) -> Prepared:
    """Outlier gate, imputation, encoding, pruning, weighting, split, scaling."""
    if pc.filter_outliers:
        ds = D.filter_salinity_outliers(ds, pc.outlier_threshold)
    if pc.impute:
        ds = D.impute_mean(ds)
    present = [c for c in pc.one_hot if c in ds.names]
    if present:
        ds = D.one_hot_encode(ds, present)
    if pc.drop_low_variance:
        ds = D.drop_low_variance(ds, pc.variance_eps)
    if pc.prune_correlated:
        ds = D.prune_correlated(ds, pc.correlation_threshold)
    if pc.weight_group:
        ds = D.basin_weights(ds, pc.weight_group, pc.density)
    split = D.temporal_split(ds, pc.valid_fraction)
    if pc.standardize:
        data, scaler = D.standardize(ds)
    else:
        data, scaler = ds, None
    return Prepared(ds, data, scaler, split)


def save_prepared(prep: Prepared, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prep.data.to_csv(out / "data.csv")
    prep.raw.to_csv(out / "raw.csv")
    D.save_schema(prep.data.columns, out / "schema.json")
    _write_json(out / "weights.json", [float(w) for w in prep.data.weights])
    _write_json(out / "split.json", prep.split.to_dict())
    _write_json(out / "scaler.json", prep.scaler.to_dict() if prep.scaler else None)
    (out / "provenance.log").write_text("\n".join(prep.data.provenance) + "\n", encoding="utf-8")


def load_prepared(path) -> Prepared:
    """Inverse of :func:`save_prepared`."""
    p = Path(path)
    if not (p / "data.csv").is_file():
        raise D.DataError(f"{p} is not a prepared directory (no data.csv)")
    schema = D.load_schema(p / "schema.json")
    weights = np.asarray(_read_json(p / "weights.json"), dtype=float)
    prov = tuple(line for line in (p / "provenance.log").read_text(encoding="utf-8").splitlines() if line)
    data = D.load_csv(p / "data.csv", schema)
    raw = D.load_csv(p / "raw.csv", schema)
    data = D.Dataset(data.columns, data.frame, weights, prov)
    raw = D.Dataset(raw.columns, raw.frame, weights, prov)
    sc = _read_json(p / "scaler.json")
    return Prepared(raw, data, D.ScalerParams.from_dict(sc) if sc else None,
                    D.SplitPlan.from_dict(_read_json(p / "split.json")))


# ----------------------------------------------------------------------
# models
# ----------------------------------------------------------------------

def fit_model(prep: Prepared, learner: LearnerSpec, seed: int) -> TrainedModel:
    names = prep.features
    tr = prep.split.train
    X = prep.data.X(names)
    return learner.with_seed(seed).fit(X[tr], prep.data.y()[tr], prep.data.weights[tr], names)


def evaluate_model(model: TrainedModel, prep: Prepared) -> EvalReport:
    """Unweighted MAE / RMSE / R² on the validation rows."""
    va = prep.split.valid
    return evaluate(prep.data.y()[va], model.predict(prep.data.X(model.feature_names)[va]))


def run_dml(prep: Prepared, cfg: RunConfig) -> ScanResult:
    dc = cfg.dml
    return dml_scan(prep.raw, dc.outcome, dc.learner.spec(), dc.k_folds, dc.alpha, cfg.seed,
                    dc.standardize_before_dml, dc.intercept, dc.se)


# ----------------------------------------------------------------------
# attribution
# ----------------------------------------------------------------------

@dataclass
class ModelAttribution:
    kind: str
    results: dict = field(default_factory=dict)   # method -> AttributionResult
    rfe_trace: object = None
    shap: object = None                            # ShapExplanation
    sobol: object = None                           # SobolIndices
    comparison: RankComparison | None = None

    def to_dict(self):
        d = {"results": {m: r.to_dict() for m, r in sorted(self.results.items())}}
        if self.rfe_trace is not None:
            d["rfe_trace"] = self.rfe_trace.to_dict()
        if self.sobol is not None:
            d["sobol"] = self.sobol.to_dict()
        if self.comparison is not None:
            d["spearman"] = self.comparison.to_dict()
        return d


def rfe_learner(kind, model_params, cfg: RunConfig) -> LearnerSpec:
    """Tree models eliminate with their own learner; others use the configured one."""
    if kind in TREE_KINDS:
        return LearnerSpec(kind, dict(model_params))
    return cfg.attribution.rfe.learner.spec()


def run_rfe(prep: Prepared, learner: LearnerSpec, min_features: int, seed: int):
    trace = rfe(prep.data, learner, prep.split, min_features, seed, prep.features)
    return trace, trace.to_result()


def run_shap(model, prep: Prepared, sc, seed: int):
    X = prep.data.X(model.feature_names)
    bg, _ = sample_background(X[prep.split.train], sc.background, seed)
    rows, _ = sample_background(X[prep.split.valid], sc.rows, seed + 1)
    res, expl = shap_summary(model, rows, bg, sc.mode, sc.n_coalitions, seed)
    res.metadata.update({"background_seed": seed, "rows_seed": seed + 1})
    return res, expl


def run_gsa(model, prep: Prepared, gc, seed: int):
    X = prep.data.X(model.feature_names)[prep.split.train]
    return gsa_over_model(model, X, gc.n_base, seed if gc.scramble else None, gc.sampler,
                          gc.n_bootstrap, seed)


def compare_methods(results: dict, label=None) -> RankComparison | None:
    have = [results[m] for m in COMPARED if m in results]
    if len(have) < 2:
        return None
    return rank_compare(have, label)


# ----------------------------------------------------------------------
# report
# ----------------------------------------------------------------------

@dataclass
class RunReport:
    report: dict
    timings: dict
    models: dict = field(default_factory=dict)
    attributions: dict = field(default_factory=dict)
    dml: ScanResult | None = None
    prepared: Prepared | None = None

    def to_json(self):
        return report_json(self.report)


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def build_report(cfg: RunConfig, prep: Prepared | None, evals: dict, scan: ScanResult | None,
                 attributions: dict, error: dict | None = None) -> dict:
    rep = {"report_version": REPORT_VERSION, "salix_version": __version__,
           "config": cfg.to_dict(), "seed": cfg.seed}
    if prep is not None:
        rep["provenance"] = list(prep.data.provenance)
        rep["data"] = {"rows": prep.data.n_rows, "features": list(prep.features),
                       "target": prep.data.target, "n_train": int(prep.split.train.size),
                       "n_valid": int(prep.split.valid.size), "split_rule": prep.split.rule}
    rep["models"] = {k: v.to_dict() for k, v in evals.items()}
    rep["dml"] = scan.to_dict() if scan is not None else None
    rep["attribution"] = {k: a.to_dict() for k, a in attributions.items()}
    if error is not None:
        rep["error"] = error
    return _clean(rep)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else None)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def report_markdown(report: dict, comparisons=()) -> str:
    lines = ["# salix run report", ""]
    data = report.get("data")
    if data:
        lines += [f"Rows after preprocessing: {data['rows']} "
                  f"({data['n_train']} train / {data['n_valid']} validation), "
                  f"{len(data['features'])} features, target `{data['target']}`.", ""]
    if report.get("models"):
        lines += ["## Validation scores", "", "| model | R2 | RMSE | MAE |", "|---|---:|---:|---:|"]
        for k, e in report["models"].items():
            r2 = "n/a" if e["r2"] is None else f"{e['r2']:.3f}"
            lines.append(f"| {k} | {r2} | {e['rmse']:.2f} | {e['mae']:.2f} |")
        lines.append("")
    if report.get("dml"):
        scan = report["dml"]
        lines += [f"## DML effects on `{scan['outcome']}` (alpha {scan['alpha']})", "",
                  "| treatment | theta | stderr | p | significant |", "|---|---:|---:|---:|:---:|"]
        for e in scan["estimates"]:
            unit = f" ({e['units']})" if e.get("units") else ""
            lines.append(f"| {e['treatment']}{unit} | {_g(e['theta'], 6)} | {_g(e['stderr'], 3)} | "
                         f"{_g(e['p_value'], 3)} | {'yes' if e['significant'] else 'no'} |")
        for name, msg in scan.get("errors", {}).items():
            lines.append(f"| {name} | error: {msg} | | | |")
        lines.append("")
    if report.get("attribution"):
        lines += ["## Top features per method", ""]
        for kind, a in report["attribution"].items():
            for m, r in a["results"].items():
                order = sorted(range(len(r["features"])), key=lambda i: (r["ranks"][i], i))
                lines.append(f"- {kind} / {m}: " + ", ".join(r["features"][i] for i in order[:5]))
        lines.append("")
    if comparisons:
        lines += ["## Rank agreement (Spearman rho)", "", comparison_table(comparisons)]
    if report.get("error"):
        err = report["error"]
        lines += ["## Aborted", "", f"Stage `{err['stage']}` failed: {err['type']}: {err['message']}", ""]
    return "\n".join(lines).rstrip("\n") + "\n"


def _g(v, digits):
    return v if isinstance(v, str) or v is None else f"{v:.{digits}g}"


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise D.DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise D.DataError(f"{path} is not valid JSON: {exc}") from exc


def write_attribution_artifacts(art_dir, kind, ma: ModelAttribution):
    art = Path(art_dir)
    art.mkdir(parents=True, exist_ok=True)
    for m, r in ma.results.items():
        r.to_csv(art / f"{kind}_{m}.csv")
        ranking_svg(r, art / f"{kind}_{m}.svg", f"{kind}: {m}")
    if ma.shap is not None:
        ma.shap.to_csv(art / f"{kind}_shap_values.csv")
        shap_svg(ma.results["shap"], art / f"{kind}_shap.svg", f"{kind}: mean |SHAP|")
    if ma.sobol is not None:
        ma.sobol.to_csv(art / f"{kind}_sobol.csv")
        sobol_svg(ma.sobol, art / f"{kind}_sobol.svg", f"{kind}: Sobol S1 / ST")
    if ma.comparison is not None:
        _write_json(art / f"{kind}_spearman.json", ma.comparison.to_dict())
        (art / f"{kind}_spearman.md").write_text(ma.comparison.to_markdown(), encoding="utf-8")


def write_outputs(out_dir, report: dict, timings: dict, comparisons=()):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(report), encoding="utf-8")
    (out / "report.md").write_text(report_markdown(report, comparisons), encoding="utf-8")
    _write_json(out / "timings.json", timings)


# ----------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------

class _Stages:
    def __init__(self):
        self.timings = {}
        self.current = None

    def __call__(self, name, fn, *args, **kw):
        self.current = name
        t0 = time.perf_counter()
        out = fn(*args, **kw)
        self.timings[name] = round(time.perf_counter() - t0, 4)
        return out


def run_pipeline(cfg: RunConfig, out_dir=None) -> RunReport:
    """Run every configured stage and write the report into ``out_dir``.

    On a stage failure a partial report carrying an ``error`` entry is
    written, and the exception is re-raised with ``stage`` and
    ``partial_report`` attributes.
    """
    if cfg.data.path is None or cfg.data.schema is None:
        raise D.DataError("config needs data.path and data.schema") from None
    out = Path(out_dir or cfg.out)
    art = out / "artifacts"
    stage = _Stages()
    prep, scan = None, None
    models, evals, attributions = {}, {}, {}
    seed = cfg.seed
    try:
        schema = stage("load", D.load_schema, cfg.data.schema)
        raw = stage("load", D.load_csv, cfg.data.path, schema)
        prep = stage("preprocess", preprocess, raw, cfg.preprocess)
        for kind in cfg.models:
            models[kind] = stage(f"train:{kind}", fit_model, prep, cfg.learner(kind), seed)
            evals[kind] = stage(f"eval:{kind}", evaluate_model, models[kind], prep)
        if cfg.dml.enabled:
            scan = stage("dml", run_dml, prep, cfg)
        ac = cfg.attribution
        for kind in cfg.attributed_models:
            ma = ModelAttribution(kind)
            model = models[kind]
            if ac.rfe.enabled:
                ma.rfe_trace, ma.results["rfe"] = stage(
                    f"rfe:{kind}", run_rfe, prep, rfe_learner(kind, cfg.models[kind], cfg),
                    ac.rfe.min_features, seed)
            if ac.shap.enabled:
                ma.results["shap"], ma.shap = stage(f"shap:{kind}", run_shap, model, prep, ac.shap, seed)
            if ac.gsa.enabled:
                s1, st, ma.sobol = stage(f"gsa:{kind}", run_gsa, model, prep, ac.gsa, seed)
                ma.results["gsa-s1"], ma.results["gsa-st"] = s1, st
            ma.comparison = stage(f"compare:{kind}", compare_methods, ma.results, kind)
            attributions[kind] = ma
    except SalixError as exc:
        err = {"stage": stage.current, "type": type(exc).__name__, "message": str(exc)}
        report = build_report(cfg, prep, evals, scan, attributions, err)
        write_outputs(out, report, stage.timings)
        exc.stage = stage.current
        exc.partial_report = report
        raise
    report = build_report(cfg, prep, evals, scan, attributions)
    comparisons = [a.comparison for a in attributions.values() if a.comparison is not None]
    write_outputs(out, report, stage.timings, comparisons)
    (out / "config.json").write_text(cfg.to_json(), encoding="utf-8")
    (art / "models").mkdir(parents=True, exist_ok=True)
    for kind, m in models.items():
        m.save(art / "models" / f"{kind}.json")
    for kind, ma in attributions.items():
        write_attribution_artifacts(art, kind, ma)
    if scan is not None:
        _write_json(art / "dml.json", scan.to_dict())
        (art / "dml.md").write_text(scan.to_markdown(), encoding="utf-8")
    return RunReport(report, stage.timings, models, attributions, scan, prep)


def load_models(paths) -> dict:
    out = {}
    for p in paths:
        m = load_model(p)
        out[m.kind if m.kind not in out else os.path.splitext(os.path.basename(p))[0]] = m
    return out


__all__ = [
    "Prepared", "preprocess", "save_prepared", "load_prepared", "fit_model", "evaluate_model",
    "run_dml", "ModelAttribution", "rfe_learner", "run_rfe", "run_shap", "run_gsa",
    "compare_methods", "RunReport", "build_report", "report_json", "report_markdown",
    "write_outputs", "write_attribution_artifacts", "run_pipeline", "load_models",
    "AttributionResult",
]
