"""Batch command-line surface.

Subcommands: synth, preprocess, evaluate, residualize, scaling.  Every
command is driven by one INI config (checked into the run directory for
provenance) and is idempotent given identical inputs, config, and seeds.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
error.
"""

from __future__ import annotations

import argparse
import glob
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

from . import report
from .catalog import FULLY_TRAINED_STEPS
from .config import RunConfig
from .corpus import (
    PartitionMode,
    ResponseKind,
    ResponseTable,
    read_partition,
    read_response_table,
    read_vector_bundle,
    write_partition,
    write_response_table,
    write_vector_bundle,
)
from .errors import ConfigError, DataError, NumericalError, PsyscaleError
from .experiments import (
    Dataset,
    VariantScore,
    residual_contribution,
    scaling_report,
    score_bundle,
)
from .features import build_design, word_vectors
from .plots import render_scaling_figure
from .preprocess import (
    attach_go_past,
    compute_go_past,
    filter_et,
    filter_spr,
    partition,
    read_comprehension_scores,
    read_fixations,
)
from .synth import SynthSpec, bundle_seed, gen_latent_regression, gen_random_feature_bundle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _outdir(args, cfg: RunConfig) -> str:
    out = args.output_dir or cfg.get_str("output", "dir", default=None)
    if not out:
        raise ConfigError("no output directory: pass --output-dir or set "
                          "[output] dir in the config")
    os.makedirs(out, exist_ok=True)
    return out


def _require_file(path: str, what: str) -> str:
    if not os.path.exists(path):
        raise DataError(f"{what} not found: {path}")
    return path


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args, cfg: RunConfig) -> int:
    out = _outdir(args, cfg)
    seed = args.seed if args.seed is not None else cfg.get_int("synth", "seed")
    spec = SynthSpec(
        n_subjects=cfg.get_int("synth", "n_subjects", default=1),
        n_docs=cfg.get_int("synth", "n_docs", default=2),
        sentences_per_doc=cfg.get_int("synth", "sentences_per_doc", default=50),
        words_per_sentence=cfg.get_int("synth", "words_per_sentence", default=5),
        latent_dim=cfg.get_int("synth", "latent_dim", default=8),
        noise_sigma=cfg.get_float("synth", "noise_sigma", default=1.0),
        feature_widths=tuple(cfg.get_int_list("synth", "feature_widths",
                                              default=[8, 32, 128, 512])),
        seed=seed,
    )
    leak = cfg.get_float("synth", "signal_leak", default=0.3)
    trained_leak = cfg.get_float("synth", "trained_signal_leak", default=None)

    data = gen_latent_regression(spec)
    table_path = os.path.join(out, "synth_responses.tsv")
    write_response_table(data.table, table_path)

    bundle_dir = os.path.join(out, "bundles")
    os.makedirs(bundle_dir, exist_ok=True)
    written = [table_path]
    for width in spec.feature_widths:
        bundle = gen_random_feature_bundle(
            data.word_keys, data.word_latents, width,
            seed=bundle_seed(seed, width, 0), signal_leak=leak,
            training_steps=0, model_name=f"synth-d{width}-step0")
        path = os.path.join(bundle_dir, f"synth_d{width}_step0.vbun")
        write_vector_bundle(bundle, path)
        written.append(path)
        if trained_leak is not None:
            trained = gen_random_feature_bundle(
                data.word_keys, data.word_latents, width,
                seed=bundle_seed(seed, width, FULLY_TRAINED_STEPS),
                signal_leak=trained_leak, training_steps=FULLY_TRAINED_STEPS,
                model_name=f"synth-d{width}-step{FULLY_TRAINED_STEPS}")
            path = os.path.join(bundle_dir,
                                f"synth_d{width}_step{FULLY_TRAINED_STEPS}.vbun")
            write_vector_bundle(trained, path)
            written.append(path)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# preprocess
# ---------------------------------------------------------------------------

def _load_table(cfg: RunConfig) -> ResponseTable:
    kind = ResponseKind(cfg.get_str("data", "kind"))
    path = _require_file(cfg.get_str("data", "response_table"), "response table")
    return read_response_table(path, kind)


def cmd_preprocess(args, cfg: RunConfig) -> int:
    out = _outdir(args, cfg)
    table = _load_table(cfg)
    audit = []

    if table.kind is ResponseKind.SPR:
        scores = read_comprehension_scores(_require_file(
            cfg.get_str("data", "comprehension_scores"), "comprehension scores"))
        result = filter_spr(table, scores)
        table, counts = result.table, result.excluded
    elif table.kind is ResponseKind.ET:
        fixations = read_fixations(_require_file(
            cfg.get_str("data", "fixations"), "fixation stream"))
        table = attach_go_past(table, compute_go_past(fixations))
        result = filter_et(table, fixations)
        table, counts = result.table, result.excluded
    else:
        counts = {}

    mode = PartitionMode(cfg.get_str("partition", "mode", default="three_way"))
    part_file = cfg.get_str("partition", "file", default=None)
    if part_file:
        assignment = read_partition(_require_file(part_file, "partition file"),
                                    table)
    else:
        part_seed = (args.seed if args.seed is not None
                     else cfg.get_int("partition", "seed"))
        assignment = partition(table, mode, part_seed)

    table_path = os.path.join(out, "preprocessed_responses.tsv")
    part_path = os.path.join(out, "partition.tsv")
    audit_path = os.path.join(out, "preprocess_audit.txt")
    write_response_table(table, table_path)
    write_partition(assignment, part_path)
    with open(audit_path, "w", encoding="utf-8", newline="\n") as fh:
        for rule, count in counts.items():
            fh.write(f"{rule}: {count}\n")
        fh.write(f"retained: {len(table)}\n")
    for path in (table_path, part_path, audit_path):
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate / residualize / scaling
# ---------------------------------------------------------------------------

def _expand_paths(patterns: Sequence[str], what: str) -> List[str]:
    paths: List[str] = []
    for pattern in patterns:
        matches = sorted(glob.glob(pattern)) if any(c in pattern for c in "*?[") \
            else [pattern]
        if not matches:
            raise DataError(f"{what} pattern matched nothing: {pattern}")
        paths.extend(matches)
    if not paths:
        raise ConfigError(f"empty {what} list")
    for path in paths:
        _require_file(path, what)
    return paths


def _load_dataset(cfg: RunConfig, section: str) -> Dataset:
    kind = ResponseKind(cfg.get_str("data", "kind"))
    table_path = cfg.get_str(section, "table", default=None) \
        or cfg.get_str("data", "response_table")
    table = read_response_table(_require_file(table_path, "response table"), kind)
    part_path = _require_file(cfg.get_str(section, "partition"), "partition file")
    assignment = read_partition(part_path, table)
    ceiling = cfg.get_float(section, "ceiling", default=None)
    dataset_id = cfg.get_str(section, "dataset_id", default="dataset")
    return Dataset(dataset_id=dataset_id, table=table, assignment=assignment,
                   ceiling=ceiling)


def cmd_evaluate(args, cfg: RunConfig) -> int:
    out = _outdir(args, cfg)
    dataset = _load_dataset(cfg, "evaluate")
    bundle_paths = _expand_paths(cfg.get_list("evaluate", "bundles"), "bundle")
    ridge = cfg.get_float("regression", "ridge_lambda", default=0.0)
    solver = cfg.get_str("regression", "solver", default="auto")

    def score_one(path: str) -> VariantScore:
        return score_bundle(read_vector_bundle(path), dataset,
                            ridge_lambda=ridge, solver=solver)

    workers = max(1, args.workers)
    if workers == 1:
        scores = [score_one(p) for p in bundle_paths]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(score_one, bundle_paths))

    scores_path = os.path.join(out, "scores.tsv")
    report.write_scores(scores, scores_path)
    print(f"wrote {scores_path}")
    for s in scores:
        r = "NA" if s.pearson_r is None else f"{s.pearson_r:.4f}"
        print(f"  {s.model_name}: r={r} (n={s.n_heldout})")
    return EXIT_OK


def cmd_residualize(args, cfg: RunConfig) -> int:
    out = _outdir(args, cfg)
    dataset = _load_dataset(cfg, "residualize")
    if dataset.assignment.mode is not PartitionMode.THREE_WAY:
        raise ConfigError("residualize requires a three-way partition")
    pairs_raw = cfg.get_list("residualize", "pairs")
    ridge = cfg.get_float("regression", "ridge_lambda", default=0.0)
    solver = cfg.get_str("regression", "solver", default="auto")

    y = dataset.table.responses()
    scores: List[VariantScore] = []
    for item in pairs_raw:
        if ":" not in item:
            raise ConfigError(f"[residualize] pairs entries must be "
                              f"untrained:trained, got {item!r}")
        untrained_path, trained_path = item.split(":", 1)
        untrained = read_vector_bundle(_require_file(untrained_path.strip(),
                                                     "bundle"))
        trained = read_vector_bundle(_require_file(trained_path.strip(),
                                                   "bundle"))
        if untrained.d_model != trained.d_model:
            raise DataError(f"pair {item!r} differs in d_model")
        Xu = build_design(dataset.table, word_vectors(untrained))
        Xt = build_design(dataset.table, word_vectors(trained))
        score = residual_contribution(Xu, Xt, y, dataset.assignment,
                                      ridge_lambda=ridge, solver=solver)
        scores.append(VariantScore(
            model_name=trained.model_name,
            family=trained.family,
            parameter_count=trained.parameter_count,
            training_steps=trained.training_steps,
            dataset_id=dataset.dataset_id,
            pearson_r=score.pearson_r,
            normalized_r=None,
            n_heldout=score.n,
        ))

    scores_path = os.path.join(out, "residual_scores.tsv")
    report.write_scores(scores, scores_path)
    print(f"wrote {scores_path}")
    return EXIT_OK


def cmd_scaling(args, cfg: RunConfig) -> int:
    out = _outdir(args, cfg)
    scores_path = _require_file(cfg.get_str("scaling", "scores"), "scores table")
    scores = report.read_scores(scores_path)
    if not scores:
        raise DataError(f"{scores_path}: no score rows")
    n_perm = cfg.get_int("scaling", "n_permutations", default=1000)
    seed = args.seed if args.seed is not None else cfg.get_int("scaling", "seed")

    rep = scaling_report(scores, n_permutations=n_perm, seed=seed)

    summary_path = os.path.join(out, "scaling_summary.tsv")
    report.write_scaling_summary(rep, summary_path)
    points = [(math.log10(s.parameter_count), s.pearson_r)
              for s in scores if s.pearson_r is not None]
    points_path = os.path.join(out, "scaling_points.tsv")
    with open(points_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("log10_params\tr\n")
        for x, r in points:
            fh.write(f"{x:.12g}\t{r:.12g}\n")
    figure_path = os.path.join(out, "scaling.svg")
    render_scaling_figure(points, rep.slope, rep.intercept,
                          rep.p_positive, rep.p_negative, figure_path,
                          title=f"Scaling: {scores[0].dataset_id}")
    for path in (summary_path, points_path, figure_path):
        print(f"wrote {path}")
    print(f"slope={rep.slope:.6g} p_positive={rep.p_positive:.6g} "
          f"p_negative={rep.p_negative:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "evaluate": cmd_evaluate,
    "residualize": cmd_residualize,
    "scaling": cmd_scaling,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psyscale",
        description="Regression harness for scoring language-model vectors "
                    "against human reading-time and brain-imaging responses.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("synth", "generate a synthetic corpus and feature bundles"),
            ("preprocess", "apply exclusion rules and partition a dataset"),
            ("evaluate", "score vector bundles against a dataset"),
            ("residualize", "score trained bundles residualized against "
                            "untrained counterparts"),
            ("scaling", "fit and test the score-vs-size scaling line")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="INI config file")
        cmd.add_argument("--output-dir", default=None,
                         help="where outputs go (default: [output] dir)")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the command's config seed")
        cmd.add_argument("--workers", type=int, default=1,
                         help="parallel workers for per-variant scoring")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
