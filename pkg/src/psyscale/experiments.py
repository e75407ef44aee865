"""Experiment orchestration: per-variant scoring, trained-vs-untrained
comparison, residualization, and scaling statistics.

The three experiment entry points mirror the analysis stages:

1. score vectors from trained models of increasing size;
2. score untrained and trained counterparts separately;
3. residualize trained vectors against their untrained counterparts to
   isolate what training adds beyond sheer predictor count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .corpus import (
    PartitionAssignment,
    PartitionLabel,
    PartitionMode,
    ResponseTable,
    VectorBundle,
)
from .errors import AlignmentError, ConfigError, DataError
from .features import DesignMatrix, build_design, word_vectors
from .regression import (
    ScoreResult,
    crossval_by_subject,
    fit_linear,
    normalize_ceiling,
    pearson,
    predict,
)

# relative variance below which a prediction series counts as constant;
# absorbs the numerical dust left when fit residuals are exactly
# orthogonal to the predictor columns
CONSTANT_PREDICTION_RTOL = 1e-8


@dataclass(frozen=True)
class VariantScore:
    """Held-out predictive power of one model variant on one dataset."""

    model_name: str
    family: str
    parameter_count: int
    training_steps: int
    dataset_id: str
    pearson_r: Optional[float]
    normalized_r: Optional[float]
    n_heldout: int

    def __post_init__(self):
        if self.parameter_count <= 0:
            raise DataError("parameter_count must be positive")
        if self.pearson_r is not None and not -1.0 <= self.pearson_r <= 1.0:
            raise DataError(f"pearson_r {self.pearson_r} out of [-1, 1]")


@dataclass(frozen=True)
class ScalingReport:
    """Best-fit line of score against log10 parameter count."""

    points: Tuple[VariantScore, ...]
    slope: float
    intercept: float
    p_positive: float
    p_negative: float
    n_permutations: int
    seed: int
    n_undefined: int = 0

    def __post_init__(self):
        if not math.isfinite(self.slope):
            raise DataError("slope must be finite")
        for p in (self.p_positive, self.p_negative):
            if not 0.0 < p <= 1.0:
                raise DataError(f"p-value {p} outside (0, 1]")


@dataclass(frozen=True)
class Dataset:
    """A preprocessed, partitioned response dataset ready for scoring."""

    dataset_id: str
    table: ResponseTable
    assignment: PartitionAssignment
    ceiling: Optional[float] = None   # per-dataset noise ceiling, if any

    def __post_init__(self):
        if len(self.table) != len(self.assignment):
            raise DataError("table and partition assignment differ in length")


def score_design(X: DesignMatrix,
                 dataset: Dataset,
                 ridge_lambda: float = 0.0,
                 solver: str = "auto") -> ScoreResult:
    """Fit on the fit partition and Pearson-score held-out predictions.

    CV-mode datasets are scored by by-subject cross-validation instead of
    the fit/held-out split.
    """
    y = dataset.table.responses()
    if dataset.assignment.mode is PartitionMode.CV5_BY_SUBJECT:
        cv = crossval_by_subject(X, y, dataset.assignment,
                                 ridge_lambda=ridge_lambda, solver=solver,
                                 ceiling=dataset.ceiling)
        return cv.mean
    fit_mask = dataset.assignment.mask(PartitionLabel.FIT)
    held_mask = dataset.assignment.mask(PartitionLabel.HELDOUT)
    if fit_mask.sum() == 0 or held_mask.sum() < 2:
        raise DataError("partition leaves too few fit or held-out rows")
    model = fit_linear(X.values[fit_mask], y[fit_mask],
                       ridge_lambda=ridge_lambda, solver=solver)
    preds = predict(model, X.values[held_mask])
    return pearson(preds, y[held_mask], ceiling=dataset.ceiling)


def score_bundle(bundle: VectorBundle,
                 dataset: Dataset,
                 ridge_lambda: float = 0.0,
                 solver: str = "auto") -> VariantScore:
    try:
        X = build_design(dataset.table, word_vectors(bundle))
    except AlignmentError as exc:
        raise AlignmentError(f"bundle {bundle.model_name!r}: {exc}") from exc
    score = score_design(X, dataset, ridge_lambda=ridge_lambda, solver=solver)
    n_held = score.n
    if dataset.assignment.mode is PartitionMode.THREE_WAY:
        n_held = int(dataset.assignment.mask(PartitionLabel.HELDOUT).sum())
    return VariantScore(
        model_name=bundle.model_name,
        family=bundle.family,
        parameter_count=bundle.parameter_count,
        training_steps=bundle.training_steps,
        dataset_id=dataset.dataset_id,
        pearson_r=score.pearson_r,
        normalized_r=score.normalized_r,
        n_heldout=n_held,
    )


def run_experiment1(bundles: Sequence[VectorBundle],
                    dataset: Dataset,
                    ridge_lambda: float = 0.0,
                    solver: str = "auto") -> List[VariantScore]:
    """Score each trained bundle on the dataset."""
    if not bundles:
        raise ConfigError("no bundles supplied")
    return [score_bundle(b, dataset, ridge_lambda=ridge_lambda, solver=solver)
            for b in bundles]


def run_experiment2(pairs: Sequence[Tuple[VectorBundle, VectorBundle]],
                    dataset: Dataset,
                    ridge_lambda: float = 0.0,
                    solver: str = "auto"
                    ) -> Tuple[List[VariantScore], List[VariantScore]]:
    """Score untrained and trained counterparts separately.

    Each pair must share architecture metadata; returns (untrained scores,
    trained scores) in pair order.
    """
    if not pairs:
        raise ConfigError("no bundle pairs supplied")
    for untrained, trained in pairs:
        if (untrained.d_model != trained.d_model
                or untrained.parameter_count != trained.parameter_count):
            raise DataError(
                f"pair {untrained.model_name!r}/{trained.model_name!r} differs "
                "in architecture metadata")
    untrained_scores = run_experiment1([p[0] for p in pairs], dataset,
                                       ridge_lambda=ridge_lambda, solver=solver)
    trained_scores = run_experiment1([p[1] for p in pairs], dataset,
                                     ridge_lambda=ridge_lambda, solver=solver)
    return untrained_scores, trained_scores


def residual_contribution(untrained_X: Union[np.ndarray, DesignMatrix],
                          trained_X: Union[np.ndarray, DesignMatrix],
                          y: np.ndarray,
                          assignment: PartitionAssignment,
                          ridge_lambda: float = 0.0,
                          solver: str = "auto") -> ScoreResult:
    """What the trained vectors predict beyond their untrained counterpart.

    Fits the untrained features to the responses, fits the trained
    features to the resulting fit-partition residuals, then correlates the
    trained model's held-out predictions with the held-out residuals.
    A (numerically) constant prediction series yields an UNDEFINED score.
    """
    Xu = untrained_X.values if isinstance(untrained_X, DesignMatrix) else np.asarray(untrained_X, dtype=np.float64)
    Xt = trained_X.values if isinstance(trained_X, DesignMatrix) else np.asarray(trained_X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if Xu.shape[0] != Xt.shape[0] or Xu.shape[0] != y.shape[0]:
        raise DataError("design matrices and responses must share rows")
    if assignment.mode is not PartitionMode.THREE_WAY:
        raise ConfigError("residualization requires a THREE_WAY partition")
    if len(assignment) != y.shape[0]:
        raise DataError("partition assignment does not match rows")

    fit_mask = assignment.mask(PartitionLabel.FIT)
    held_mask = assignment.mask(PartitionLabel.HELDOUT)
    if fit_mask.sum() == 0 or held_mask.sum() < 2:
        raise DataError("partition leaves too few fit or held-out rows")

    base = fit_linear(Xu[fit_mask], y[fit_mask],
                      ridge_lambda=ridge_lambda, solver=solver)
    resid_fit = y[fit_mask] - predict(base, Xu[fit_mask])
    top = fit_linear(Xt[fit_mask], resid_fit,
                     ridge_lambda=ridge_lambda, solver=solver)
    resid_held = y[held_mask] - predict(base, Xu[held_mask])
    preds_held = predict(top, Xt[held_mask])

    scale = max(float(np.std(resid_held)), float(np.std(resid_fit)), 1e-300)
    if float(np.std(preds_held)) <= CONSTANT_PREDICTION_RTOL * scale:
        return ScoreResult(pearson_r=None, n=int(held_mask.sum()))
    return pearson(preds_held, resid_held)


def fit_scaling_line(points: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """Ordinary least-squares line through (log10 params, r) points."""
    if len(points) < 2:
        raise DataError("need at least 2 points for a line")
    x = np.array([p[0] for p in points], dtype=np.float64)
    r = np.array([p[1] for p in points], dtype=np.float64)
    xc = x - x.mean()
    ss = float(xc @ xc)
    if ss == 0.0:
        raise DataError("all abscissae equal; slope undefined")
    slope = float(xc @ r) / ss
    intercept = float(r.mean()) - slope * float(x.mean())
    return slope, intercept


def permutation_test_slope(points: Sequence[Tuple[float, float]],
                           n: int = 1000,
                           seed: int = 0) -> Tuple[float, float]:
    """One-sided permutation p-values for the scaling slope, both tails.

    Scores are permuted against the fixed abscissae n times; the add-one
    estimator keeps p-values strictly positive.
    """
    if n < 1:
        raise ConfigError("need at least 1 permutation")
    if len(points) < 3:
        raise DataError("need at least 3 points for a permutation test")
    x = np.array([p[0] for p in points], dtype=np.float64)
    r = np.array([p[1] for p in points], dtype=np.float64)
    xc = x - x.mean()
    ss = float(xc @ xc)
    if ss == 0.0:
        raise DataError("all abscissae equal; slope undefined")
    observed = float(xc @ r) / ss

    rng = np.random.default_rng(seed)
    perms = np.stack([rng.permutation(r) for _ in range(n)])
    slopes = perms @ xc / ss
    p_positive = (1 + int(np.count_nonzero(slopes >= observed))) / (n + 1)
    p_negative = (1 + int(np.count_nonzero(slopes <= observed))) / (n + 1)
    return p_positive, p_negative


def scaling_report(scores: Sequence[VariantScore],
                   n_permutations: int = 1000,
                   seed: int = 0) -> ScalingReport:
    """Fit the scaling line over defined scores and permutation-test it.

    UNDEFINED scores are excluded from the fit but counted in the report.
    """
    defined = [s for s in scores if s.pearson_r is not None]
    n_undefined = len(scores) - len(defined)
    if len(defined) < 3:
        raise DataError(
            f"need at least 3 defined scores, have {len(defined)} "
            f"({n_undefined} undefined)")
    points = [(math.log10(s.parameter_count), s.pearson_r) for s in defined]
    slope, intercept = fit_scaling_line(points)
    p_pos, p_neg = permutation_test_slope(points, n=n_permutations, seed=seed)
    return ScalingReport(points=tuple(scores), slope=slope, intercept=intercept,
                         p_positive=p_pos, p_negative=p_neg,
                         n_permutations=n_permutations, seed=seed,
                         n_undefined=n_undefined)
