"""Double machine learning: cross-fitted residual-on-residual effect estimates.

For a treatment column ``T`` and outcome ``Y`` with covariates ``X``:

1. ``Y~ = Y - m(X)`` and ``T~ = T - g(X)`` with ``m``, ``g`` predicted
   out-of-fold (folds grouped by drill id),
2. ``theta = sum(T~ Y~) / sum(T~^2)`` (no-intercept OLS),
3. HC0 sandwich standard error and a two-sided t test with ``n - 1``
   degrees of freedom.  ``se="cluster"`` swaps in the drill-clustered
   sandwich (CR0) with ``G - 1`` degrees of freedom for ``G`` drills.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .dataset import Dataset, apply_scaler, standardize
from .errors import DataError, DegenerateTreatmentError, FoldInfeasibleError, SalixError
from .models import LearnerSpec

DEFAULT_LEARNER = LearnerSpec("gbt", {})


@dataclass(frozen=True)
class ResidualPair:
    outcome: np.ndarray
    treatment: np.ndarray
    folds: np.ndarray


@dataclass(frozen=True)
class CausalEstimate:
    treatment: str
    theta: float
    stderr: float
    t_stat: float
    p_value: float
    n: int
    nuisance_kind: str
    folds: int
    units: str | None = None
    significant: bool = False
    se_kind: str = "hc0"

    def to_dict(self):
        d = asdict(self)
        for k in ("theta", "stderr", "t_stat", "p_value"):
            if not math.isfinite(d[k]):
                d[k] = None if math.isnan(d[k]) else ("inf" if d[k] > 0 else "-inf")
        return d


@dataclass
class ScanResult:
    outcome: str
    alpha: float
    estimates: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)

    def to_dict(self):
        return {"outcome": self.outcome, "alpha": self.alpha,
                "estimates": [e.to_dict() for e in self.estimates], "errors": dict(self.errors)}

    def to_markdown(self):
        lines = ["| treatment | theta | stderr | p | significant |",
                 "|---|---:|---:|---:|:---:|"]
        for e in self.estimates:
            unit = f" ({e.units})" if e.units else ""
            lines.append(f"| {e.treatment}{unit} | {e.theta:.6g} | {e.stderr:.3g} | "
                         f"{e.p_value:.3g} | {'yes' if e.significant else 'no'} |")
        for name, msg in self.errors.items():
            lines.append(f"| {name} | error: {msg} | | | |")
        return "\n".join(lines) + "\n"


def group_folds(ds: Dataset, k_folds: int, seed: int) -> np.ndarray:
    """Assign every row a fold in ``0..k-1``; rows of one drill share a fold.

    Groups are shuffled with ``seed`` and dealt round-robin.  Without a
    group-key column each row is its own group.
    """
    if k_folds < 2:
        raise DataError("k_folds must be >= 2")
    if ds.group_key is not None:
        keys = ds.frame[ds.group_key].astype(str).to_numpy()
    else:
        keys = np.arange(ds.n_rows).astype(str)
    uniq, inverse = np.unique(keys, return_inverse=True)
    if uniq.size < k_folds:
        raise FoldInfeasibleError(f"{uniq.size} groups cannot fill {k_folds} folds")
    perm = np.random.default_rng(int(seed)).permutation(uniq.size)
    group_fold = np.empty(uniq.size, dtype=int)
    group_fold[perm] = np.arange(uniq.size) % k_folds
    return group_fold[inverse]


def _crossfit(X, target, w, folds, learner: LearnerSpec, names):
    pred = np.empty_like(target)
    for f in np.unique(folds):
        held = folds == f
        fit = ~held
        if X.shape[1] == 0:
            pred[held] = w[fit] @ target[fit] / w[fit].sum()
            continue
        model = learner.fit(X[fit], target[fit], w[fit], names)
        pred[held] = model.predict(X[held])
    return target - pred


def residualize(ds: Dataset, column: str, covariates, learner: LearnerSpec = DEFAULT_LEARNER,
                k_folds: int = 5, seed: int = 0, folds=None) -> np.ndarray:
    """Out-of-fold residuals of ``column`` regressed on ``covariates``.

    With no covariates the learner reduces to the weighted training mean.
    """
    covariates = list(covariates)
    if column in covariates:
        raise DataError(f"{column!r} cannot be its own covariate")
    if folds is None:
        folds = group_folds(ds, k_folds, seed)
    target = ds.frame[column].to_numpy(dtype=float)
    X = ds.X(covariates) if covariates else np.zeros((ds.n_rows, 0))
    return _crossfit(X, target, np.asarray(ds.weights), folds, learner.with_seed(seed), covariates)


def effect_from_residuals(y_res, t_res, *, intercept=False, clusters=None):
    """``(theta, stderr, t, p)`` of the residual regression.

    Standard errors are HC0, or cluster-robust (CR0) when ``clusters``
    gives a group label per row.
    """
    y_res = np.asarray(y_res, dtype=float)
    t_res = np.asarray(t_res, dtype=float)
    n = y_res.size
    if intercept:
        y_res = y_res - y_res.mean()
        t_res = t_res - t_res.mean()
    stt = float(t_res @ t_res)
    if stt < 1e-12:
        raise DegenerateTreatmentError("treatment is fully explained by the covariates")
    theta = float(t_res @ y_res) / stt
    e = y_res - theta * t_res
    if clusters is None:
        var = float((t_res * t_res) @ (e * e)) / stt ** 2
        df = n - 1
    else:
        _, inv = np.unique(np.asarray(clusters), return_inverse=True)
        score = np.bincount(inv, weights=t_res * e)
        var = float(score @ score) / stt ** 2
        df = max(score.size - 1, 1)
    se = math.sqrt(var)
    if se > 0:
        t = theta / se
        p = float(2.0 * stats.t.sf(abs(t), df=df))
    else:
        t = math.copysign(math.inf, theta) if theta != 0 else 0.0
        p = 0.0 if theta != 0 else 1.0
    return theta, se, t, p


def _clusters(ds: Dataset, se: str):
    if se == "hc0":
        return None
    if se != "cluster":
        raise DataError(f"se must be 'hc0' or 'cluster', got {se!r}")
    if ds.group_key is None:
        raise DataError("clustered standard errors need a group-key column")
    return ds.frame[ds.group_key].astype(str).to_numpy()


def dml_residuals(ds: Dataset, treatment: str, outcome: str, covariates,
                  learner: LearnerSpec = DEFAULT_LEARNER, k_folds: int = 5, seed: int = 0):
    folds = group_folds(ds, k_folds, seed)
    y_res = residualize(ds, outcome, covariates, learner, k_folds, seed, folds=folds)
    t_res = residualize(ds, treatment, covariates, learner, k_folds, seed, folds=folds)
    return ResidualPair(y_res, t_res, folds)


def dml_effect(ds: Dataset, treatment: str, outcome: str, covariates,
               learner: LearnerSpec = DEFAULT_LEARNER, k_folds: int = 5, seed: int = 0,
               intercept: bool = False, alpha: float = 0.05, se: str = "hc0") -> CausalEstimate:
    covariates = list(covariates)
    clusters = _clusters(ds, se)
    if treatment in covariates or outcome in covariates:
        raise DataError("covariates must exclude the treatment and the outcome")
    for col in (treatment, outcome):
        if ds.spec(col).kind not in ("numeric", "target"):
            raise DataError(f"{col!r} must be numeric")
    pair = dml_residuals(ds, treatment, outcome, covariates, learner, k_folds, seed)
    theta, stderr, t, p = effect_from_residuals(pair.outcome, pair.treatment, intercept=intercept,
                                                clusters=clusters)
    return CausalEstimate(treatment, theta, stderr, t, p, ds.n_rows, learner.kind, k_folds,
                          ds.spec(treatment).units, p < alpha, se)


def _indicator_source(name):
    return name.split("=", 1)[0] if "=" in name else None


def dml_scan(ds: Dataset, outcome: str | None = None, learner: LearnerSpec = DEFAULT_LEARNER,
             k_folds: int = 5, alpha: float = 0.05, seed: int = 0,
             standardize_before_dml: bool = False, intercept: bool = False,
             se: str = "hc0") -> ScanResult:
    """One DML estimate per numeric predictor, all others as covariates.

    Treatment ``i`` uses seed ``seed + i``.  For a one-hot indicator
    (``col=level``) the other indicators of ``col`` are not covariates.
    Failures are recorded per treatment.  Estimates are sorted by ``|theta|``, largest first.
    ``se="cluster"`` clusters standard errors by the group-key (drill).
    """
    outcome = outcome or ds.target
    if standardize_before_dml:
        ds = apply_scaler(ds, standardize(ds)[1])
    predictors = [c for c in ds.feature_names if c != outcome]
    result = ScanResult(outcome, alpha)
    for i, name in enumerate(predictors):
        # indicators of one source column sum to 1, so a level's siblings
        # would explain it exactly; they are left out of its covariates
        sib = _indicator_source(name)
        covs = [c for c in predictors if c != name and (sib is None or _indicator_source(c) != sib)]
        try:
            est = dml_effect(ds, name, outcome, covs, learner, k_folds, seed + i,
                             intercept=intercept, alpha=alpha, se=se)
        except SalixError as exc:
            result.errors[name] = f"{type(exc).__name__}: {exc}"
            continue
        result.estimates.append(est)
    result.estimates.sort(key=lambda e: (-abs(e.theta), e.treatment))
    return result
