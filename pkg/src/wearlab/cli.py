"""Command-line pipeline: synth, extract, stats, select, evaluate, run."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .cohortstats import group_summary_table, pearson_matrix, strong_pairs
from .evalharness import (
    SCENARIOS,
    grid_candidates,
    run_experiment,
    scenario_features,
    write_results_table,
    write_roc_csv,
)
from .featgen.matrix import build_matrix, read_features_csv, write_features_csv, write_registry_json
from .featselect import METHODS, SelectionConfig, run_selector
from .ingest import CleaningReport, IngestError, load_cohort, standardize_bundle, write_cohort
from .learners.models import MODEL_KINDS, ModelSpec
from .synthcohort import CohortSpec, generate_cohort

log = logging.getLogger("wearlab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# Default group-summary rows: demographics plus the signals of the cohort summary table.
SUMMARY_FEATURES = ["age", "sex", 1, 56, 61, 41, 66, 96, 98, 100, 124, 126, 130, 131, 138, 156,
                    157, 158, 159, 168, 174, 175, 180, 179, 181, 220, 221, 222, 265, 269, 271, 267]


class UsageError(Exception):
    """Invalid configuration; exits with status 2."""


@dataclass
class PipelineConfig:
    cohort: Optional[str] = None
    scenario: str = "combined"
    selector: Optional[SelectionConfig] = None
    model: ModelSpec = field(default_factory=lambda: ModelSpec("gb"))
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    output: str = "out"
    leaky_selection: bool = False
    threads: int = 1
    verbose: bool = False
    corr_threshold: float = 0.8
    summary_features: list = field(default_factory=lambda: list(SUMMARY_FEATURES))
    model_grid: Optional[dict] = None

    def to_json(self) -> dict:
        return {
            "cohort": self.cohort,
            "scenario": self.scenario,
            "selector": None if self.selector is None else self.selector.to_json(),
            "model": self.model.to_json(),
            "seeds": list(self.seeds),
            "output": self.output,
            "leaky_selection": self.leaky_selection,
            "threads": self.threads,
            "verbose": self.verbose,
            "corr_threshold": self.corr_threshold,
            "summary_features": list(self.summary_features),
            "model_grid": self.model_grid,
        }


def _model_from(doc) -> ModelSpec:
    if isinstance(doc, str):
        doc = {"kind": doc}
    kind = doc.get("kind")
    if kind not in MODEL_KINDS:
        raise UsageError(f"unknown model kind {kind!r}; valid kinds: {', '.join(MODEL_KINDS)}")
    try:
        return ModelSpec(kind, dict(doc.get("params", {})), int(doc.get("seed", 0)))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _selector_from(doc, model: ModelSpec, seed: int) -> Optional[SelectionConfig]:
    if doc is None or doc == "none" or (isinstance(doc, dict) and doc.get("method") == "none"):
        return None
    if isinstance(doc, str):
        doc = {"method": doc}
    method = doc.get("method")
    if method not in METHODS:
        raise UsageError(f"unknown selector {method!r}; valid: {', '.join(METHODS + ('none',))}")
    scorer = _model_from(doc["scorer_model"]) if doc.get("scorer_model") else model
    try:
        return SelectionConfig(method, scorer, int(doc.get("cv_folds", 5)),
                               int(doc.get("max_features", 25)), int(doc.get("seed", seed)),
                               dict(doc.get("params", {})))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def load_config(path: Optional[str], args: argparse.Namespace) -> PipelineConfig:
    """Read the JSON config (paths relative to its directory); command-line flags win."""
    doc = {}
    base = Path(".")
    if path:
        p = Path(path)
        if not p.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON: {exc}") from exc
        base = p.parent
    unknown = set(doc) - set(PipelineConfig.__dataclass_fields__)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")

    def path_of(v):
        return None if v is None else str(base / v) if not Path(v).is_absolute() else v

    cfg = PipelineConfig()
    cfg.cohort = path_of(doc.get("cohort"))
    cfg.output = path_of(doc.get("output", "out"))
    cfg.scenario = doc.get("scenario", cfg.scenario)
    cfg.seeds = [int(s) for s in doc.get("seeds", cfg.seeds)]
    cfg.leaky_selection = bool(doc.get("leaky_selection", False))
    cfg.threads = int(doc.get("threads", 1))
    cfg.verbose = bool(doc.get("verbose", False))
    cfg.corr_threshold = float(doc.get("corr_threshold", cfg.corr_threshold))
    cfg.summary_features = list(doc.get("summary_features", cfg.summary_features))
    model_doc = doc.get("model", {"kind": "gb"})
    sel_doc = doc.get("selector", "sffs")

    if getattr(args, "cohort", None):
        cfg.cohort = args.cohort
    if getattr(args, "out", None):
        cfg.output = args.out
    if getattr(args, "scenario", None):
        cfg.scenario = args.scenario
    if getattr(args, "seed", None) is not None:
        cfg.seeds = [args.seed + k for k in range(len(cfg.seeds))]
    if getattr(args, "seeds", None):
        cfg.seeds = [int(s) for s in args.seeds.split(",")]
    if getattr(args, "threads", None):
        cfg.threads = args.threads
    if getattr(args, "leaky_selection", False):
        cfg.leaky_selection = True
    if getattr(args, "verbose", False):
        cfg.verbose = True
    if getattr(args, "model", None):
        same = isinstance(model_doc, dict) and model_doc.get("kind") == args.model
        model_doc = model_doc if same else {"kind": args.model}
    if getattr(args, "selector", None):
        prev = sel_doc if isinstance(sel_doc, dict) else {}
        sel_doc = "none" if args.selector == "none" else {**prev, "method": args.selector}
    if cfg.scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario {cfg.scenario!r}; valid: {', '.join(SCENARIOS)}")
    if not cfg.seeds:
        raise UsageError("at least one seed is required")
    if cfg.threads < 1:
        raise UsageError("threads must be >= 1")
    cfg.model = _model_from(model_doc)
    cfg.selector = _selector_from(sel_doc, cfg.model, cfg.seeds[0])
    grid = doc.get("model_grid")
    if grid:
        if not isinstance(grid, dict) or not all(isinstance(v, list) and v for v in grid.values()):
            raise UsageError("model_grid must map parameter names to non-empty lists")
        try:
            grid_candidates(cfg.model, grid)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        cfg.model_grid = {k: list(grid[k]) for k in sorted(grid)}
    return cfg


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def _write_json(path: Path, doc):
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def write_demographics(path: Path, matrix):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "age", "sex"])
        for i, sid in enumerate(matrix.subject_ids):
            w.writerow([sid, repr(float(matrix.demographics["age"][i])),
                        "female" if matrix.demographics["sex"][i] == 1 else "male"])


def read_matrix(features_path: Path):
    m = read_features_csv(features_path)
    demo = features_path.parent / "demographics.csv"
    if demo.exists():
        rows = {r["subject_id"]: r for r in csv.DictReader(open(demo, encoding="utf-8"))}
        if all(s in rows for s in m.subject_ids):
            m.demographics = {
                "age": np.array([float(rows[s]["age"]) for s in m.subject_ids]),
                "sex": np.array([1.0 if rows[s]["sex"] == "female" else 0.0 for s in m.subject_ids]),
            }
    return m


def stage_extract(cohort: str, out: Path):
    bundles = load_cohort(cohort)
    if not bundles:
        raise IngestError("cohort manifest lists no subjects", path=cohort)
    clean = []
    for b in bundles:
        rep = CleaningReport(b.meta.subject_id)
        clean.append(standardize_bundle(b, report=rep))
        if rep.total_dropped:
            log.info("subject %s: dropped %d samples/records", b.meta.subject_id, rep.total_dropped)
        for v in rep.violations:
            log.warning("subject %s: %s", b.meta.subject_id, v)
    matrix = build_matrix(clean)
    out.mkdir(parents=True, exist_ok=True)
    write_features_csv(out / "features.csv", matrix)
    write_registry_json(out / "registry.json", matrix.registry)
    write_demographics(out / "demographics.csv", matrix)
    log.info("extracted %d subjects x %d features", matrix.n_subjects, matrix.n_features)
    return matrix


def stage_stats(matrix, out: Path, threshold: float, features: Sequence):
    out.mkdir(parents=True, exist_ok=True)
    cm = pearson_matrix(matrix)
    with open(out / "corr.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature"] + [f"f{int(f):03d}" for f in cm.ids])
        for f, row in zip(cm.ids, cm.rho):
            w.writerow([f"f{int(f):03d}"] + ["" if np.isnan(v) else repr(float(v)) for v in row])
    usable = [f for f in features if isinstance(f, str) and f in matrix.demographics
              or not isinstance(f, str) and int(f) in set(int(x) for x in matrix.feature_ids)]
    results, table = group_summary_table(matrix, usable)
    pairs = strong_pairs(cm, threshold)
    _write_json(out / "summary.json", {
        "n_subjects": matrix.n_subjects,
        "n_positive": int(matrix.labels.sum()),
        "group_tests": [r.to_json() for r in results],
        "table": table.splitlines(),
        "strong_pairs": {"threshold": threshold,
                         "pairs": [[a, b, r] for a, b, r in pairs]},
    })
    return results, table


def stage_select(matrix, cfg: PipelineConfig, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    m = matrix.select_features(scenario_features(matrix, cfg.scenario))
    if cfg.selector is None:
        doc = {"method": "none", "scope": "full_cohort", "scenario": cfg.scenario,
               "selected": [int(f) for f in m.feature_ids],
               "selected_names": [m.registry.name(int(f)) for f in m.feature_ids]}
    else:
        res = run_selector(m, cfg.selector)
        doc = res.to_json(m.registry)
        doc.update({"scope": "full_cohort", "scenario": cfg.scenario})
    doc["pipeline_config"] = cfg.to_json()
    _write_json(out / "selection.json", doc)
    return doc


def stage_evaluate(matrix, cfg: PipelineConfig, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    report = run_experiment(matrix, cfg.scenario, cfg.selector, cfg.model, cfg.seeds,
                            leaky_selection=cfg.leaky_selection, threads=cfg.threads,
                            model_grid=cfg.model_grid)
    doc = report.to_json()
    doc["pipeline_config"] = {k: v for k, v in cfg.to_json().items() if k not in ("threads", "verbose", "output")}
    (out / "eval.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    write_roc_csv(out / "roc.csv", report)
    write_results_table(out / "results_table.csv", [report])
    log.info("mean AUC %.4f over seeds %s", report.mean_auc, cfg.seeds)
    return report


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, *, pipeline: bool):
    p.add_argument("--verbose", "-v", action="store_true")
    if pipeline:
        p.add_argument("--config", help="pipeline JSON config")
        p.add_argument("--scenario", choices=SCENARIOS)
        p.add_argument("--selector", choices=METHODS + ("none",))
        p.add_argument("--model", choices=MODEL_KINDS)
        p.add_argument("--seed", type=int, help="base seed; runs use seed, seed+1, ...")
        p.add_argument("--seeds", help="comma-separated run seeds")
        p.add_argument("--threads", type=int)
        p.add_argument("--leaky-selection", action="store_true",
                       help="select features once on all subjects (leaks; for reproduction studies)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wearlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic cohort in the ingest layout")
    p.add_argument("--out", required=True)
    p.add_argument("--n-positive", type=int, default=55)
    p.add_argument("--n-negative", type=int, default=38)
    p.add_argument("--days", type=int, default=14)
    p.add_argument("--effect-scale", type=float, default=1.0)
    p.add_argument("--no-effect", action="append", default=[], metavar="SIGNAL",
                   help="remove the group effect of SIGNAL (repeatable; 'emotional' = DS9 signals)")
    p.add_argument("--seed", type=int, default=0)
    _common(p, pipeline=False)

    p = sub.add_parser("extract", help="ingest a cohort and write features.csv + registry.json")
    p.add_argument("--cohort", required=True)
    p.add_argument("--out", required=True)
    _common(p, pipeline=False)

    p = sub.add_parser("stats", help="correlations and group summary table")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.8)
    _common(p, pipeline=False)

    for name, helptext in (("select", "feature selection on the full cohort"),
                           ("evaluate", "paired leave-one-out evaluation")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--features", required=True)
        p.add_argument("--out", required=True)
        _common(p, pipeline=True)

    p = sub.add_parser("run", help="ingest -> extract -> stats -> select -> evaluate")
    p.add_argument("--cohort")
    p.add_argument("--out")
    _common(p, pipeline=True)
    return ap


def _run(args) -> int:
    if args.command == "synth":
        from .synthcohort import EMOTIONAL_STATE
        spec = CohortSpec(args.n_positive, args.n_negative, args.days,
                          effect_scale=args.effect_scale, seed=args.seed)
        names = []
        for n in args.no_effect:
            names += list(EMOTIONAL_STATE) if n == "emotional" else [n]
        if names:
            spec = spec.without_effects(names)
        cohort = generate_cohort(spec)
        write_cohort(args.out, cohort.bundles)
        _write_json(Path(args.out) / "cohort_spec.json", spec.to_json())
        log.info("wrote %d subjects to %s", len(cohort.bundles), args.out)
        return EXIT_OK
    if args.command == "extract":
        stage_extract(args.cohort, Path(args.out))
        return EXIT_OK
    if args.command == "stats":
        matrix = read_matrix(Path(args.features))
        stage_stats(matrix, Path(args.out), args.threshold, SUMMARY_FEATURES)
        return EXIT_OK
    cfg = load_config(args.config, args)
    if cfg.verbose:
        logging.getLogger().setLevel(logging.INFO)
    if args.command in ("select", "evaluate"):
        matrix = read_matrix(Path(args.features))
        if args.command == "select":
            stage_select(matrix, cfg, Path(cfg.output))
        else:
            stage_evaluate(matrix, cfg, Path(cfg.output))
        return EXIT_OK
    # run
    if not cfg.cohort:
        raise UsageError("no cohort given (config 'cohort' or --cohort)")
    if not Path(cfg.cohort).exists():
        raise UsageError(f"cohort path does not exist: {cfg.cohort}")
    out = Path(cfg.output)
    stage_extract(cfg.cohort, out)
    matrix = read_matrix(out / "features.csv")
    stage_stats(matrix, out, cfg.corr_threshold, cfg.summary_features)
    stage_select(matrix, cfg, out)
    stage_evaluate(matrix, cfg, out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.INFO)
    try:
        return _run(args)
    except UsageError as exc:
        print(f"wearlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestError, ValueError, RuntimeError, OSError) as exc:
        print(f"wearlab: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
