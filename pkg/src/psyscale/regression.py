"""Wide linear least-squares with minimum-norm and ridge solving.

Two solver routes are provided: a direct SVD of the (centered) design,
and a Gram-matrix dual route that is much cheaper when there are far more
columns than rows (e.g. a few hundred fit rows against thousands of
vector elements).  Both return the same minimum-norm / ridge solution up
to numerical tolerance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .corpus import PartitionAssignment, PartitionMode
from .errors import ConfigError, DataError, NumericalError
from .features import DesignMatrix

PEREIRA_CEILING = 0.32


@dataclass(frozen=True)
class LinearModel:
    """Fitted regression: weights, intercept, and solver diagnostics."""

    weights: np.ndarray
    intercept: float
    ridge_lambda: float
    effective_rank: int
    fit_row_count: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.intercept):
            raise NumericalError("fit produced non-finite coefficients")
        if self.effective_rank > min(self.fit_row_count, self.weights.shape[0]):
            raise NumericalError("effective rank exceeds min(N, d)")


@dataclass(frozen=True)
class ScoreResult:
    """Pearson correlation between predictions and responses.

    ``pearson_r`` is None (UNDEFINED) when either series is constant;
    scores are never silently coerced to 0.
    """

    pearson_r: Optional[float]
    n: int
    normalized_r: Optional[float] = None

    @property
    def is_defined(self) -> bool:
        return self.pearson_r is not None


def _as_matrix(X: Union[np.ndarray, DesignMatrix]) -> np.ndarray:
    if isinstance(X, DesignMatrix):
        return X.values
    return np.asarray(X, dtype=np.float64)


def _rank_cutoff(singular_values: np.ndarray, n: int, d: int,
                 rank_rtol: Optional[float]) -> float:
    if singular_values.size == 0:
        return 0.0
    smax = singular_values[0]
    rtol = rank_rtol if rank_rtol is not None else max(n, d) * np.finfo(np.float64).eps
    return rtol * smax


def fit_linear(X: Union[np.ndarray, DesignMatrix],
               y: np.ndarray,
               ridge_lambda: float = 0.0,
               rank_rtol: Optional[float] = None,
               solver: str = "auto") -> LinearModel:
    """Fit y ~ X with an intercept.

    With ridge_lambda 0 this is the minimum-Euclidean-norm least-squares
    solution (singular values below the rank cutoff discarded); with
    ridge_lambda > 0 the ridge solution.  The intercept is fitted by
    centering and is never penalized.
    """
    Xm = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if Xm.ndim != 2:
        raise DataError("X must be 2-D")
    n, d = Xm.shape
    if n == 0:
        raise DataError("cannot fit on zero rows")
    if y.shape != (n,):
        raise DataError(f"y has shape {y.shape}, expected ({n},)")
    if not (np.all(np.isfinite(Xm)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in regression inputs")
    if ridge_lambda < 0:
        raise ConfigError("ridge_lambda must be >= 0")
    if solver not in ("auto", "svd", "gram"):
        raise ConfigError(f"unknown solver {solver!r}")
    if solver == "auto":
        solver = "gram" if d > n else "svd"

    x_mean = Xm.mean(axis=0)
    y_mean = float(y.mean())
    Xc = Xm - x_mean
    yc = y - y_mean

    if solver == "svd":
        weights, rank = _solve_svd(Xc, yc, ridge_lambda, rank_rtol)
    else:
        weights, rank = _solve_gram(Xc, yc, ridge_lambda, rank_rtol)

    intercept = y_mean - float(x_mean @ weights)
    return LinearModel(weights=weights, intercept=intercept,
                       ridge_lambda=ridge_lambda, effective_rank=rank,
                       fit_row_count=n)


def _solve_svd(Xc: np.ndarray, yc: np.ndarray, lam: float,
               rank_rtol: Optional[float]) -> Tuple[np.ndarray, int]:
    n, d = Xc.shape
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    cutoff = _rank_cutoff(s, n, d, rank_rtol)
    keep = s > cutoff
    rank = int(np.count_nonzero(keep))
    s_kept = s[keep]
    if lam > 0:
        filt = s_kept / (s_kept ** 2 + lam)
    else:
        filt = 1.0 / s_kept
    coeffs = filt * (U[:, keep].T @ yc)
    return Vt[keep].T @ coeffs, rank


def _solve_gram(Xc: np.ndarray, yc: np.ndarray, lam: float,
                rank_rtol: Optional[float]) -> Tuple[np.ndarray, int]:
    # dual route: weights = Xc' alpha with alpha from the n x n Gram system
    n, d = Xc.shape
    K = Xc @ Xc.T
    evals, evecs = np.linalg.eigh(K)
    evals = np.maximum(evals, 0.0)
    s = np.sqrt(evals)
    order = np.argsort(s)[::-1]
    s = s[order]
    evecs = evecs[:, order]
    cutoff = _rank_cutoff(s, n, d, rank_rtol)
    keep = s > cutoff
    rank = int(np.count_nonzero(keep))
    s2 = evals[order][keep]
    if lam > 0:
        filt = 1.0 / (s2 + lam)
    else:
        filt = 1.0 / s2
    alpha = evecs[:, keep] @ (filt * (evecs[:, keep].T @ yc))
    return Xc.T @ alpha, rank


def predict(model: LinearModel, X: Union[np.ndarray, DesignMatrix]) -> np.ndarray:
    Xm = _as_matrix(X)
    if Xm.ndim != 2 or Xm.shape[1] != model.weights.shape[0]:
        raise DataError(
            f"X has {Xm.shape[1] if Xm.ndim == 2 else '?'} columns, model "
            f"expects {model.weights.shape[0]}")
    return Xm @ model.weights + model.intercept


def _is_constant(x: np.ndarray) -> bool:
    return bool(np.ptp(x) == 0.0)


def pearson(a: np.ndarray, b: np.ndarray,
            ceiling: Optional[float] = None) -> ScoreResult:
    """Product-moment correlation; UNDEFINED if either series is constant."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"length mismatch: {a.shape} vs {b.shape}")
    n = a.shape[0]
    if n < 2:
        raise DataError("need at least 2 points for a correlation")
    if _is_constant(a) or _is_constant(b):
        return ScoreResult(pearson_r=None, n=n)
    ac = a - a.mean()
    bc = b - b.mean()
    r = float((ac @ bc) / math.sqrt((ac @ ac) * (bc @ bc)))
    r = max(-1.0, min(1.0, r))
    norm = normalize_ceiling(r, ceiling) if ceiling is not None else None
    return ScoreResult(pearson_r=r, n=n, normalized_r=norm)


def normalize_ceiling(r: float, ceiling: float = PEREIRA_CEILING) -> float:
    """Divide a correlation by an estimated noise ceiling."""
    if ceiling <= 0:
        raise ConfigError("ceiling must be positive")
    return r / ceiling


@dataclass(frozen=True)
class CrossvalScore:
    """Cross-validated score: mean r over all (subject, fold) cells."""

    mean: ScoreResult
    fold_scores: Tuple[ScoreResult, ...]
    undefined_count: int


def crossval_by_subject(X: Union[np.ndarray, DesignMatrix],
                        y: np.ndarray,
                        folds: PartitionAssignment,
                        ridge_lambda: float = 0.0,
                        solver: str = "auto",
                        ceiling: Optional[float] = None) -> CrossvalScore:
    """By-subject 5-fold cross-validation.

    For each subject and fold, fit on the other folds of that subject and
    Pearson-score the held-out fold; the headline number is the plain
    average r over all cells.  UNDEFINED cells (constant series or folds
    with < 2 rows) are excluded from the average and counted.
    """
    if folds.mode is not PartitionMode.CV5_BY_SUBJECT:
        raise ConfigError("crossval_by_subject needs a CV5 assignment")
    Xm = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if Xm.shape[0] != len(folds) or y.shape[0] != len(folds):
        raise DataError("X, y, and fold assignment must align row-for-row")

    fold_arr = np.array(folds.folds)
    subj_arr = np.array(folds.subjects)
    scores: List[ScoreResult] = []
    undefined = 0
    rs = []
    for subject in dict.fromkeys(folds.subjects):
        sub_mask = subj_arr == subject
        for fold in range(5):
            test_mask = sub_mask & (fold_arr == fold)
            train_mask = sub_mask & (fold_arr != fold)
            if test_mask.sum() < 2 or train_mask.sum() < 1:
                undefined += 1
                scores.append(ScoreResult(pearson_r=None, n=int(test_mask.sum())))
                continue
            model = fit_linear(Xm[train_mask], y[train_mask],
                               ridge_lambda=ridge_lambda, solver=solver)
            score = pearson(predict(model, Xm[test_mask]), y[test_mask])
            scores.append(score)
            if score.is_defined:
                rs.append(score.pearson_r)
            else:
                undefined += 1
    if undefined:
        warnings.warn(f"{undefined} cross-validation cell(s) had undefined "
                      "scores and were excluded from the average")
    if not rs:
        mean = ScoreResult(pearson_r=None, n=int(len(folds)))
    else:
        mean_r = float(np.mean(rs))
        norm = normalize_ceiling(mean_r, ceiling) if ceiling is not None else None
        mean = ScoreResult(pearson_r=mean_r, n=int(len(folds)), normalized_r=norm)
    return CrossvalScore(mean=mean, fold_scores=tuple(scores),
                         undefined_count=undefined)
