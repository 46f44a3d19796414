"""Batch command-line interface.

Verbs: ``simulate``, ``fit``, ``optimize``, ``evaluate``, ``report``.  Every
run writes its outputs plus a ``manifest.json`` holding the fully resolved
configuration; passing that manifest back through ``--config`` reproduces the
outputs byte for byte.  Exit codes: 0 success, 2 configuration/data problems,
3 numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import asdict, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import io as aio
from .errors import ConfigError, DataError, EstimationError, NumericalError
from .evaluation import (ACCURACY_METHODS, ALL_METHODS, POOLED_FILTER_NONE,
                         POOLED_FILTER_POSITIVE, TRUTH_EMPIRICAL,
                         TRUTH_RULE_DECISION, run_accuracy_study,
                         run_comparison, two_layer_config)
from .mixture import FitConfig, extract_aes, fit_mixture, fit_pooled
from .records import ExperimentRecord, PowerPolicy, RULE_WELCH, RULE_Z
from .simulate import (AccuracySimConfig, TrajectorySimConfig,
                       simulate_accuracy_corpus, simulate_trajectory_corpus)
from .utility import UtilityConfig, optimize_aes

SIM_KINDS = ("accuracy", "trajectory")
FIT_METHODS = ("pooled", "gmm2", "gmm3")
FORMATS = ("csv", "json")
DEFAULT_HISTOGRAM_BINS = 60


# ---------------------------------------------------------------------------
# config plumbing


def _build_dataclass(cls, data: Optional[dict], what: str, **overrides):
    """Instantiate a config dataclass from a JSON dict, rejecting unknown keys."""
    merged = dict(data or {})
    merged.update(overrides)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(merged) - names)
    if unknown:
        raise ConfigError("unknown %s option(s): %s" % (what, ", ".join(unknown)))
    try:
        return cls(**merged)
    except TypeError as exc:
        raise ConfigError("bad %s config: %s" % (what, exc))


def _load_config(path: Optional[str], command: str) -> dict:
    """Load ``--config``; a manifest (has a "command" key) is unwrapped."""
    if path is None:
        return {}
    data = aio.load_json(path)
    if not isinstance(data, dict):
        raise ConfigError("%s: config must be a JSON object" % path)
    if "command" in data:
        if data["command"] != command:
            raise ConfigError("manifest %s was written by %r, not %r"
                              % (path, data["command"], command))
        data = data.get("config", {})
        if not isinstance(data, dict):
            raise ConfigError("%s: manifest config must be a JSON object" % path)
    return data


def _check_keys(data: dict, allowed: Sequence[str], what: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError("unknown %s option(s): %s" % (what, ", ".join(unknown)))


def _build_utility(data: Optional[dict]) -> Tuple[UtilityConfig, bool]:
    """Build the utility config; also report whether the decision rule was
    set explicitly (auto-resolution must not override an explicit choice)."""
    merged = dict(data or {})
    policy_data = merged.pop("policy", None)
    explicit_rule = bool(policy_data) and "decision_rule" in policy_data
    policy = _build_dataclass(PowerPolicy, policy_data, "policy")
    ucfg = _build_dataclass(UtilityConfig, merged, "utility", policy=policy)
    return ucfg, explicit_rule


def _resolve_decision_rule(ucfg: UtilityConfig, explicit: bool,
                           corpus: Sequence[ExperimentRecord]) -> UtilityConfig:
    """Record the launch-test flavor the corpus actually supports.

    Unless the config pins a rule, the manifest gets the effective one: the
    two-sample test when every record carries arm summaries, the z decision
    otherwise.  An explicitly pinned rule is kept; the two-sample rule still
    falls back per record where summaries are missing.
    """
    if explicit:
        return ucfg
    summaries = all(exp.has_arm_summaries for exp in corpus)
    rule = RULE_WELCH if summaries else RULE_Z
    if rule == ucfg.policy.decision_rule:
        return ucfg
    return replace(ucfg, policy=replace(ucfg.policy, decision_rule=rule))


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(out: str, command: str, config: dict) -> None:
    aio.dump_json({"command": command, "config": config,
                   "version": __version__}, os.path.join(out, "manifest.json"))


def _final_week_arrays(corpus) -> Tuple[np.ndarray, np.ndarray]:
    d = np.array([exp.final_effect for exp in corpus])
    se2 = np.array([exp.final_se2 for exp in corpus])
    return d, se2


# ---------------------------------------------------------------------------
# verbs


def cmd_simulate(args) -> int:
    config = _load_config(args.config, "simulate")
    _check_keys(config, ["kind", "sim", "format"], "simulate")
    kind = args.kind or config.get("kind")
    if kind is None:
        raise ConfigError("simulate needs a kind (accuracy|trajectory), "
                          "as an argument or config key")
    if kind not in SIM_KINDS:
        raise ConfigError("unknown simulation kind %r" % (kind,))
    fmt = args.format or config.get("format") or "csv"
    if fmt not in FORMATS:
        raise ConfigError("unknown format %r" % (fmt,))
    sim_data = dict(config.get("sim") or {})
    if args.seed is not None:
        sim_data["seed"] = args.seed
    if kind == "accuracy":
        sim = _build_dataclass(AccuracySimConfig, sim_data, "sim")
        corpus = simulate_accuracy_corpus(sim)
    else:
        sim = _build_dataclass(TrajectorySimConfig, sim_data, "sim")
        corpus = simulate_trajectory_corpus(sim)

    out = _out_dir(args)
    corpus_name = "corpus.%s" % fmt
    path = os.path.join(out, corpus_name)
    if fmt == "csv":
        aio.write_corpus_csv(corpus, path)
    else:
        aio.write_corpus_json(corpus, path)
    _write_manifest(out, "simulate",
                    {"kind": kind, "sim": asdict(sim), "format": fmt})
    print("wrote %s (%d experiments)" % (path, len(corpus)))
    return 0


def cmd_fit(args) -> int:
    config = _load_config(args.config, "fit")
    _check_keys(config, ["method", "corpus", "fit", "pooled_filter"], "fit")
    method = args.method or config.get("method")
    if method is None:
        raise ConfigError("fit needs a method (pooled|gmm2|gmm3)")
    if method not in FIT_METHODS:
        raise ConfigError("unknown fit method %r" % (method,))
    corpus_path = args.corpus or config.get("corpus")
    if corpus_path is None:
        raise ConfigError("fit needs a corpus path")
    fit_data = dict(config.get("fit") or {})
    if args.seed is not None:
        fit_data["seed"] = args.seed
    fit_cfg = _build_dataclass(FitConfig, fit_data, "fit")
    pooled_filter = config.get("pooled_filter", POOLED_FILTER_NONE)
    if pooled_filter not in (POOLED_FILTER_NONE, POOLED_FILTER_POSITIVE):
        raise ConfigError("unknown pooled_filter %r" % (pooled_filter,))

    corpus = aio.read_corpus(corpus_path)
    d, se2 = _final_week_arrays(corpus)

    if method == "pooled":
        if pooled_filter == POOLED_FILTER_POSITIVE:
            mask = d > 0
            if not np.any(mask):
                raise EstimationError("no positive effects to pool")
            d, se2 = d[mask], se2[mask]
        pooled = fit_pooled(d, se2, var_floor=fit_cfg.var_floor)
        result = {"method": method, "m": int(d.size),
                  "params": aio.pooled_params_dict(pooled),
                  "aes": pooled.mu0 if pooled.mu0 > 0 else None}
    else:
        if method == "gmm2":
            params, _, diag = fit_mixture(d, None, two_layer_config(fit_cfg))
        else:
            params, _, diag = fit_mixture(d, se2, fit_cfg)
        result = {"method": method, "m": int(d.size),
                  "params": aio.mixture_params_dict(params, diag)}
        try:
            result["aes"] = extract_aes(params)
        except EstimationError as exc:
            result["aes"] = None
            result["aes_error"] = str(exc)

    out = _out_dir(args)
    path = os.path.join(out, "fit.json")
    aio.dump_json(result, path)
    _write_manifest(out, "fit", {"method": method, "corpus": corpus_path,
                                 "fit": asdict(fit_cfg),
                                 "pooled_filter": pooled_filter})
    print("wrote %s" % path)
    return 0


def cmd_optimize(args) -> int:
    config = _load_config(args.config, "optimize")
    _check_keys(config, ["corpus", "utility"], "optimize")
    corpus_path = args.corpus or config.get("corpus")
    if corpus_path is None:
        raise ConfigError("optimize needs a corpus path")
    ucfg, explicit = _build_utility(config.get("utility"))
    corpus = aio.read_corpus(corpus_path)
    ucfg = _resolve_decision_rule(ucfg, explicit, corpus)
    best, profile = optimize_aes(corpus, ucfg)

    out = _out_dir(args)
    path = os.path.join(out, "optimize.json")
    aio.dump_json({"best_aes": float(best),
                   "profile": [[float(a), float(r)] for a, r in profile]}, path)
    _write_manifest(out, "optimize",
                    {"corpus": corpus_path, "utility": asdict(ucfg)})
    print("wrote %s (best AES %.6g)" % (path, best))
    return 0


_EVALUATE_KEYS = ["study", "corpus", "methods", "pooled_filter", "truth_source",
                  "empirical_rule", "histogram_bins", "unit_label", "fit",
                  "utility", "sim"]


def cmd_evaluate(args) -> int:
    config = _load_config(args.config, "evaluate")
    _check_keys(config, _EVALUATE_KEYS, "evaluate")
    study = config.get("study", "comparison")
    if study not in ("comparison", "accuracy"):
        raise ConfigError("unknown study %r" % (study,))
    fit_data = dict(config.get("fit") or {})
    if args.seed is not None:
        fit_data["seed"] = args.seed
    fit_cfg = _build_dataclass(FitConfig, fit_data, "fit")
    pooled_filter = config.get("pooled_filter", POOLED_FILTER_POSITIVE)
    unit_label = config.get("unit_label")
    threads = args.threads or os.cpu_count() or 1
    out = _out_dir(args)

    if study == "accuracy":
        sim_data = dict(config.get("sim") or {})
        if args.seed is not None:
            sim_data["seed"] = args.seed
        sim = _build_dataclass(AccuracySimConfig, sim_data, "sim")
        methods = tuple(config.get("methods") or ACCURACY_METHODS)
        bins = int(config.get("histogram_bins", DEFAULT_HISTOGRAM_BINS))
        if bins < 1:
            raise ConfigError("histogram_bins must be >= 1")
        report = run_accuracy_study(sim, fit_cfg, methods, pooled_filter,
                                    n_jobs=threads)
        payload = aio.accuracy_report_dict(report)
        if unit_label is not None:
            payload["unit_label"] = unit_label
        aio.dump_json(payload, os.path.join(out, "accuracy.json"))
        aio.write_accuracy_csv(report, os.path.join(out, "accuracy.csv"))
        corpus0 = simulate_accuracy_corpus(sim, np.random.default_rng((sim.seed, 0)))
        d0, _ = _final_week_arrays(corpus0)
        aio.write_histogram_csv(d0, bins, os.path.join(out, "histogram.csv"))
        manifest = {"study": study, "sim": asdict(sim), "fit": asdict(fit_cfg),
                    "methods": list(methods), "pooled_filter": pooled_filter,
                    "histogram_bins": bins}
        if unit_label is not None:
            manifest["unit_label"] = unit_label
        _write_manifest(out, "evaluate", manifest)
        print("wrote %s" % os.path.join(out, "accuracy.json"))
        return 0

    corpus_path = args.corpus or config.get("corpus")
    if corpus_path is None:
        raise ConfigError("comparison study needs a corpus path")
    methods = tuple(config.get("methods") or ALL_METHODS)
    truth_source = config.get("truth_source", TRUTH_EMPIRICAL)
    empirical_rule = config.get("empirical_rule", TRUTH_RULE_DECISION)
    bins = int(config.get("histogram_bins", DEFAULT_HISTOGRAM_BINS))
    if bins < 1:
        raise ConfigError("histogram_bins must be >= 1")
    ucfg, explicit = _build_utility(config.get("utility"))
    corpus = aio.read_corpus(corpus_path)
    ucfg = _resolve_decision_rule(ucfg, explicit, corpus)

    report = run_comparison(corpus, methods, fit_cfg, ucfg, pooled_filter,
                            truth_source, empirical_rule, n_jobs=threads)
    payload = aio.evaluation_report_dict(report)
    if unit_label is not None:
        payload["unit_label"] = unit_label
    aio.dump_json(payload, os.path.join(out, "report.json"))
    aio.write_evaluation_csv(report, os.path.join(out, "report.csv"))
    d, _ = _final_week_arrays(corpus)
    aio.write_histogram_csv(d, bins, os.path.join(out, "histogram.csv"))
    manifest = {"study": study, "corpus": corpus_path, "methods": list(methods),
                "pooled_filter": pooled_filter, "truth_source": truth_source,
                "empirical_rule": empirical_rule,
                "histogram_bins": bins, "fit": asdict(fit_cfg),
                "utility": asdict(ucfg)}
    if unit_label is not None:
        manifest["unit_label"] = unit_label
    _write_manifest(out, "evaluate", manifest)
    print("wrote %s" % os.path.join(out, "report.json"))
    return 0


def _format_cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return "%.6g" % value
    return str(value)


def _print_table(columns: List[str], rows: List[List]) -> None:
    table = [columns] + [[_format_cell(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(columns))]
    for r, row in enumerate(table):
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if r == 0:
            print("  ".join("-" * widths[i] for i in range(len(columns))))


def cmd_report(args) -> int:
    config = _load_config(args.config, "report")
    _check_keys(config, ["report", "format"], "report")
    report_path = args.report or config.get("report")
    if report_path is None:
        raise ConfigError("report needs a path to an evaluation JSON")
    fmt = args.format or config.get("format") or "csv"
    if fmt not in FORMATS:
        raise ConfigError("unknown format %r" % (fmt,))
    data = aio.load_json(report_path)
    if not isinstance(data, dict) or "rows" not in data:
        raise DataError("%s: not an evaluation report" % report_path)

    accuracy = bool(data["rows"]) and "mse" in data["rows"][0]
    if accuracy:
        columns = ["method", "mse", "mae"]
        rows = [[r.get(c) for c in columns] for r in data["rows"]]
        print("replications: %s   truth: %s" % (data.get("replications"),
                                                _format_cell(data.get("truth"))))
    else:
        columns = aio.EVALUATION_CSV_COLUMNS
        rows = [[r.get(c) for c in columns] for r in data["rows"]]
        print("experiments: %s   truth source: %s" % (data.get("m"),
                                                      data.get("truth_source")))
    _print_table(columns, rows)

    out = _out_dir(args)
    name = "table.%s" % fmt
    path = os.path.join(out, name)
    if fmt == "json":
        aio.dump_json({"columns": columns, "rows": rows}, path)
    else:
        import csv as _csv
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = _csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow(["" if v is None else
                                 ("%.17g" % v if isinstance(v, float) else str(v))
                                 for v in row])
    _write_manifest(out, "report", {"report": report_path, "format": fmt})
    print("wrote %s" % path)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aeskit",
        description="Assumed-effect-size estimation for experiment power planning")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=False):
        p.add_argument("--config", help="JSON config or a previous manifest")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (default: current)")
        p.add_argument("--threads", type=int,
                       help="worker threads (default: machine parallelism)")
        if formats:
            p.add_argument("--format", choices=FORMATS)

    p = sub.add_parser("simulate", help="generate a synthetic corpus")
    p.add_argument("kind", nargs="?", choices=SIM_KINDS)
    common(p, formats=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one estimator to a corpus")
    p.add_argument("method", nargs="?", choices=FIT_METHODS)
    p.add_argument("corpus", nargs="?")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("optimize", help="grid-search the utility-maximizing AES")
    p.add_argument("corpus", nargs="?")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="run a study and write its report")
    p.add_argument("corpus", nargs="?")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render an evaluation JSON as a table")
    p.add_argument("report", nargs="?")
    common(p, formats=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError, FileNotFoundError, IsADirectoryError,
            PermissionError, json.JSONDecodeError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except (NumericalError, EstimationError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
