"""Delimited result tables emitted and consumed by the CLI."""

from __future__ import annotations

from typing import List, Sequence

from .errors import ParseError, SchemaError
from .experiments import ScalingReport, VariantScore

SCORE_COLUMNS = ("dataset", "model", "params", "steps", "r", "normalized_r", "n")
NA = "NA"


def _fmt(value, digits: str = ".12g") -> str:
    return NA if value is None else format(value, digits)


def write_scores(scores: Sequence[VariantScore], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(SCORE_COLUMNS) + "\n")
        for s in scores:
            fh.write("\t".join([
                s.dataset_id,
                s.model_name,
                str(s.parameter_count),
                str(s.training_steps),
                _fmt(s.pearson_r),
                _fmt(s.normalized_r),
                str(s.n_heldout),
            ]) + "\n")


def read_scores(path) -> List[VariantScore]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty scores file")
    header = lines[0].split("\t")
    missing = [c for c in SCORE_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {missing}")
    col = {name: i for i, name in enumerate(header)}
    scores = []
    for row_no, line in enumerate(lines[1:], start=1):
        if not line:
            continue
        fields = line.split("\t")
        try:
            scores.append(VariantScore(
                model_name=fields[col["model"]],
                family="",
                parameter_count=int(fields[col["params"]]),
                training_steps=int(fields[col["steps"]]),
                dataset_id=fields[col["dataset"]],
                pearson_r=(None if fields[col["r"]] == NA
                           else float(fields[col["r"]])),
                normalized_r=(None if fields[col["normalized_r"]] == NA
                              else float(fields[col["normalized_r"]])),
                n_heldout=int(fields[col["n"]]),
            ))
        except ValueError:
            raise ParseError(f"{path} row {row_no}: malformed score row") from None
    return scores


def write_scaling_summary(report: ScalingReport, path) -> None:
    columns = ("slope", "intercept", "p_positive", "p_negative",
               "n_permutations", "seed", "n_points", "n_undefined")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(columns) + "\n")
        fh.write("\t".join([
            _fmt(report.slope),
            _fmt(report.intercept),
            _fmt(report.p_positive),
            _fmt(report.p_negative),
            str(report.n_permutations),
            str(report.seed),
            str(len(report.points) - report.n_undefined),
            str(report.n_undefined),
        ]) + "\n")
