"""``salix`` command line: one subcommand per workflow stage.

Stage commands read and write plain files inside ``--out`` so that running
``preprocess``, ``train``, ``eval``, ``dml``, ``rfe``, ``shap``, ``gsa``,
``compare`` and finally ``report`` over one directory reproduces the
``report.json`` written by ``salix run``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.  Failures print a one-line JSON diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import dataset as D
from . import pipeline as P
from .attribution import AttributionResult, gsa_over_model, rank_compare, sample_background, shap_summary
from .attribution.svg import ranking_svg, shap_svg, sobol_svg
from .config import RunConfig
from .errors import ConfigError, DataError, SalixError
from .models import LearnerSpec, load_model
from .synth import SynthSpec, gen_hydro, hydro_schema, write_truth


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _diagnose("usage", ConfigError(message))
        sys.exit(2)


def _diagnose(stage, exc, code=None):
    code = getattr(exc, "exit_code", 1) if code is None else code
    payload = {"stage": getattr(exc, "stage", None) or stage, "error": type(exc).__name__,
               "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, obj):
    P._write_json(path, obj)


def _say(args, text):
    if not args.quiet:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _prepared(args) -> P.Prepared:
    if not args.prepared:
        raise ConfigError("--prepared DIR is required")
    return P.load_prepared(args.prepared)


def _model(args):
    if not args.model:
        raise ConfigError("--model FILE is required")
    return load_model(args.model)


def _feature_rows(model, path):
    """Rows of a plain CSV restricted to the model's features."""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    missing = [f for f in model.feature_names if f not in frame.columns]
    if missing:
        raise D.SchemaError(f"{path} lacks model features {missing}")
    X = frame[list(model.feature_names)].to_numpy(dtype=float)
    if np.isnan(X).any():
        raise DataError(f"{path} has missing feature cells")
    return X


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_synth(args):
    spec = SynthSpec()
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            spec = SynthSpec.from_dict(json.load(fh))
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    ds, truth = gen_hydro(spec)
    out = _out(args)
    ds.to_csv(out / "data.csv")
    D.save_schema(hydro_schema(), out / "schema.json")
    write_truth(truth, out / (args.truth or "truth.json"))
    _say(args, f"wrote {ds.n_rows} rows to {out / 'data.csv'}")


def cmd_preprocess(args):
    cfg = _config(args)
    data = args.data or cfg.data.path
    schema = args.schema or cfg.data.schema
    if not data or not schema:
        raise ConfigError("preprocess needs --data and --schema (or data.* in --config)")
    prep = P.preprocess(D.load_csv(data, D.load_schema(schema)), cfg.preprocess)
    P.save_prepared(prep, args.out)
    _say(args, "\n".join(prep.data.provenance))


def cmd_train(args):
    cfg = _config(args)
    prep = _prepared(args)
    kind = args.kind
    if args.params:
        params = json.loads(args.params)
    else:
        params = dict(cfg.models.get(kind, {}))
    model = P.fit_model(prep, LearnerSpec(kind, params), cfg.seed)
    path = _out(args) / f"{kind}.json"
    model.save(path)
    _say(args, f"wrote {path}")


def cmd_eval(args):
    prep = _prepared(args)
    out = _out(args)
    for path in args.model:
        model = load_model(path)
        rep = P.evaluate_model(model, prep)
        _write_json(out / f"eval_{model.kind}.json", rep.to_dict())
        r2 = "n/a" if rep.r2 is None else f"{rep.r2:.4f}"
        _say(args, f"{model.kind}: R2={r2} RMSE={rep.rmse:.4g} MAE={rep.mae:.4g} n={rep.n}")


def cmd_dml(args):
    cfg = _config(args)
    if args.outcome:
        cfg = dataclasses.replace(cfg, dml=dataclasses.replace(cfg.dml, outcome=args.outcome))
    if args.prepared:
        prep = P.load_prepared(args.prepared)
    else:
        data = args.data or cfg.data.path
        schema = args.schema or cfg.data.schema
        if not data or not schema:
            raise ConfigError("dml needs --prepared, or --data and --schema")
        prep = P.preprocess(D.load_csv(data, D.load_schema(schema)), cfg.preprocess)
    scan = P.run_dml(prep, cfg)
    out = _out(args)
    _write_json(out / "dml.json", scan.to_dict())
    (out / "dml.md").write_text(scan.to_markdown(), encoding="utf-8")
    _say(args, scan.to_markdown())


def cmd_rfe(args):
    cfg = _config(args)
    prep = _prepared(args)
    if args.model:
        kind = load_model(args.model).kind
    elif args.learner:
        kind = args.learner
    else:
        raise ConfigError("rfe needs --model or --learner")
    params = cfg.models.get(kind, {})
    learner = P.rfe_learner(kind, params, cfg)
    min_f = args.min_features if args.min_features is not None else cfg.attribution.rfe.min_features
    trace, res = P.run_rfe(prep, learner, min_f, cfg.seed)
    out = _out(args)
    res.to_csv(out / f"{kind}_rfe.csv")
    ranking_svg(res, out / f"{kind}_rfe.svg", f"{kind}: rfe")
    _write_json(out / f"{kind}_rfe.json", {"results": {"rfe": res.to_dict()}, "rfe_trace": trace.to_dict()})
    _say(args, "eliminated: " + ", ".join(trace.eliminated) + "\nselected: " + ", ".join(trace.selected))


def cmd_shap(args):
    cfg = _config(args)
    model = _model(args)
    sc = cfg.attribution.shap
    over = {k: v for k, v in (("mode", args.mode), ("n_coalitions", args.n_coalitions),
                              ("rows", args.rows), ("background", args.background)) if v is not None}
    sc = dataclasses.replace(sc, **over)
    if args.prepared:
        res, expl = P.run_shap(model, P.load_prepared(args.prepared), sc, cfg.seed)
    elif args.data:
        X = _feature_rows(model, args.data)
        bg, _ = sample_background(X, sc.background, cfg.seed)
        rows, _ = sample_background(X, sc.rows, cfg.seed + 1)
        res, expl = shap_summary(model, rows, bg, sc.mode, sc.n_coalitions, cfg.seed)
    else:
        raise ConfigError("shap needs --prepared or --data")
    kind = model.kind
    out = _out(args)
    res.to_csv(out / f"{kind}_shap.csv")
    expl.to_csv(out / f"{kind}_shap_values.csv")
    shap_svg(res, out / f"{kind}_shap.svg", f"{kind}: mean |SHAP|")
    _write_json(out / f"{kind}_shap.json", {"results": {"shap": res.to_dict()}})
    _say(args, "top: " + ", ".join(res.top(5)))


def cmd_gsa(args):
    cfg = _config(args)
    model = _model(args)
    gc = cfg.attribution.gsa
    over = {k: v for k, v in (("n_base", args.n_base), ("sampler", args.sampler),
                              ("n_bootstrap", args.n_bootstrap)) if v is not None}
    gc = dataclasses.replace(gc, **over)
    if args.prepared:
        s1, st, ind = P.run_gsa(model, P.load_prepared(args.prepared), gc, cfg.seed)
    elif args.data:
        X = _feature_rows(model, args.data)
        s1, st, ind = gsa_over_model(model, X, gc.n_base, cfg.seed if gc.scramble else None,
                                     gc.sampler, gc.n_bootstrap, cfg.seed)
    else:
        raise ConfigError("gsa needs --prepared or --data")
    kind = model.kind
    out = _out(args)
    ind.to_csv(out / f"{kind}_sobol.csv")
    sobol_svg(ind, out / f"{kind}_sobol.svg", f"{kind}: Sobol S1 / ST")
    for r in (s1, st):
        r.to_csv(out / f"{kind}_{r.method}.csv")
        ranking_svg(r, out / f"{kind}_{r.method}.svg", f"{kind}: {r.method}")
    _write_json(out / f"{kind}_gsa.json",
                {"results": {"gsa-s1": s1.to_dict(), "gsa-st": st.to_dict()}, "sobol": ind.to_dict()})
    _say(args, "S1 top: " + ", ".join(s1.top(5)))


def cmd_compare(args):
    if len(args.results) < 2:
        raise ConfigError("compare needs at least two attribution CSV files")
    results = [AttributionResult.from_csv(p) for p in args.results]
    comp = rank_compare(results, args.label)
    out = _out(args)
    stem = f"{args.label}_spearman" if args.label else "spearman"
    _write_json(out / f"{stem}.json", comp.to_dict())
    (out / f"{stem}.md").write_text(comp.to_markdown(), encoding="utf-8")
    _say(args, comp.to_markdown())


def _load_fragment(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def cmd_report(args):
    """Merge stage outputs found in ``--inputs`` into report.json / report.md."""
    cfg = _config(args)
    src = Path(args.inputs or args.out)
    prep = P.load_prepared(args.prepared) if args.prepared else None
    evals = {}
    for kind in cfg.models:
        f = src / f"eval_{kind}.json"
        if f.is_file():
            evals[kind] = _DictView(_load_fragment(f))
    scan = _DictView(_load_fragment(src / "dml.json")) if (src / "dml.json").is_file() else None
    attributions, comparisons = {}, []
    for kind in cfg.attributed_models:
        merged = {"results": {}}
        for stage in ("rfe", "shap", "gsa"):
            f = src / f"{kind}_{stage}.json"
            if f.is_file():
                frag = _load_fragment(f)
                merged["results"].update(frag.pop("results", {}))
                merged.update(frag)
        f = src / f"{kind}_spearman.json"
        if f.is_file():
            merged["spearman"] = _load_fragment(f)
            d = merged["spearman"]
            comparisons.append(P.RankComparison(
                tuple(d["methods"]), tuple(d["features"]),
                np.array([[np.nan if v is None else v for v in row] for row in d["rho"]]), d["label"]))
        if merged["results"] or "spearman" in merged:
            merged["results"] = dict(sorted(merged["results"].items()))
            attributions[kind] = _DictView(merged)
    report = P.build_report(cfg, prep, evals, scan, attributions)
    P.write_outputs(_out(args), report, {}, comparisons)
    _say(args, f"wrote {Path(args.out) / 'report.json'}")


class _DictView:
    """Wrap an already-serialised fragment so build_report can call to_dict()."""

    def __init__(self, d):
        self._d = d

    def to_dict(self):
        return self._d


def cmd_run(args):
    cfg = _config(args)
    if args.data or args.schema:
        cfg = dataclasses.replace(cfg, data=dataclasses.replace(
            cfg.data, path=args.data or cfg.data.path, schema=args.schema or cfg.data.schema))
    out = args.out or cfg.out
    rep = P.run_pipeline(cfg, out)
    _say(args, P.report_markdown(rep.report, [a.comparison for a in rep.attributions.values()
                                              if a.comparison is not None]))


# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="salix", description="Explainable regression workflow for tabular data.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="run configuration JSON")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--quiet", action="store_true")
        p.set_defaults(func=fn)
        return p

    p = add("synth", cmd_synth, "generate the planted borehole fixture")
    p.add_argument("--spec", help="SynthSpec JSON")
    p.add_argument("--truth", help="file name for the ground truth JSON (default truth.json)")

    p = add("preprocess", cmd_preprocess, "clean, weight, split and scale a CSV")
    p.add_argument("--data")
    p.add_argument("--schema")

    p = add("train", cmd_train, "fit one model on a prepared directory")
    p.add_argument("--prepared")
    p.add_argument("--kind", required=True, choices=["linear", "tree", "forest", "gbt", "mlp"])
    p.add_argument("--params", help="learner parameters as JSON (default: config models.<kind>)")

    p = add("eval", cmd_eval, "validation metrics of saved models")
    p.add_argument("--prepared")
    p.add_argument("--model", nargs="+", required=True)

    p = add("dml", cmd_dml, "double machine learning scan over every predictor")
    p.add_argument("--prepared")
    p.add_argument("--data")
    p.add_argument("--schema")
    p.add_argument("--outcome")

    p = add("rfe", cmd_rfe, "recursive feature elimination")
    p.add_argument("--prepared")
    p.add_argument("--model")
    p.add_argument("--learner", choices=["tree", "forest", "gbt"])
    p.add_argument("--min-features", type=int)

    p = add("shap", cmd_shap, "Shapley attributions of a saved model")
    p.add_argument("--model")
    p.add_argument("--prepared")
    p.add_argument("--data", help="plain CSV holding the model's feature columns")
    p.add_argument("--mode", choices=["auto", "exact", "kernel"])
    p.add_argument("--n-coalitions", type=int)
    p.add_argument("--rows", type=int)
    p.add_argument("--background", type=int)

    p = add("gsa", cmd_gsa, "Sobol sensitivity indices of a saved model")
    p.add_argument("--model")
    p.add_argument("--prepared")
    p.add_argument("--data", help="plain CSV of training rows (feature ranges)")
    p.add_argument("--n-base", type=int)
    p.add_argument("--sampler", choices=["uniform", "empirical"])
    p.add_argument("--n-bootstrap", type=int)

    p = add("compare", cmd_compare, "Spearman agreement between attribution CSVs")
    p.add_argument("--results", nargs="+", required=True)
    p.add_argument("--label")

    p = add("report", cmd_report, "merge stage outputs into report.json")
    p.add_argument("--prepared")
    p.add_argument("--inputs", help="directory of stage outputs (default: --out)")

    p = add("run", cmd_run, "run the whole pipeline from a config")
    p.add_argument("--data")
    p.add_argument("--schema")
    p.set_defaults(out=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except SalixError as exc:
        return _diagnose(args.command, exc)
    except (OSError, json.JSONDecodeError) as exc:
        return _diagnose(args.command, exc, 3)
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostic
        return _diagnose(args.command, exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
