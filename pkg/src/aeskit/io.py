"""Corpus and report file formats.

Corpora are flat CSVs, one row per (experiment, week), with empty cells for
unavailable optional columns; floats carry 17 significant digits so a
write/read round trip reproduces every value exactly.  Params, reports, and
manifests are JSON with sorted keys and no timestamps, making every output
byte-reproducible from its inputs.
"""

from __future__ import annotations

import csv
import json
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import DataError
from .evaluation import AccuracyReport, EvaluationReport
from .mixture import FitDiagnostics, MixtureParams, PooledParams
from .records import ArmWeekly, CONTROL, ExperimentRecord, LATENT_LABELS, TREATMENT

CORPUS_HEADER = ["id", "week", "n_t", "n_c", "mean_t", "mean_c", "var_t",
                 "var_c", "effect", "effect_se2", "weekly_cost", "latent_label"]


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def write_corpus_csv(corpus: Sequence[ExperimentRecord], path: str) -> None:
    """Write a corpus in the flat weekly CSV format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CORPUS_HEADER)
        for exp in corpus:
            for t in range(exp.weeks):
                if exp.has_arms:
                    arms = [str(int(exp.treatment.cumulative_n[t])),
                            str(int(exp.control.cumulative_n[t]))]
                    if exp.has_arm_summaries:
                        arms += [_fmt(exp.treatment.cumulative_mean[t]),
                                 _fmt(exp.control.cumulative_mean[t]),
                                 _fmt(exp.treatment.cumulative_var[t]),
                                 _fmt(exp.control.cumulative_var[t])]
                    else:
                        arms += ["", "", "", ""]
                else:
                    arms = [""] * 6
                writer.writerow(
                    [exp.id, str(t + 1)] + arms
                    + [_fmt(exp.observed_effect[t]), _fmt(exp.effect_se2[t]),
                       _fmt(exp.weekly_cost), exp.latent_label or ""])


def _parse_float(value: str, column: str, line: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise DataError("line %d: column %r is not a number: %r"
                        % (line, column, value))


def _parse_int(value: str, column: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise DataError("line %d: column %r is not an integer: %r"
                        % (line, column, value))


class _Partial:
    """Accumulates one experiment's rows during CSV parsing."""

    def __init__(self, exp_id: str, line: int):
        self.id = exp_id
        self.first_line = line
        self.n_t: List[int] = []
        self.n_c: List[int] = []
        self.mean_t: List[float] = []
        self.mean_c: List[float] = []
        self.var_t: List[float] = []
        self.var_c: List[float] = []
        self.effect: List[float] = []
        self.se2: List[float] = []
        self.cost: Optional[float] = None
        self.label: Optional[str] = None
        self.has_counts: Optional[bool] = None
        self.has_summaries: Optional[bool] = None

    def add_row(self, row: List[str], line: int) -> None:
        week = _parse_int(row[1], "week", line)
        if week != len(self.effect) + 1:
            raise DataError("line %d: experiment %r expected week %d, got %d"
                            % (line, self.id, len(self.effect) + 1, week))
        counts = row[2] != "" or row[3] != ""
        if counts and (row[2] == "" or row[3] == ""):
            raise DataError("line %d: n_t and n_c must both be set or both empty"
                            % line)
        summaries = any(v != "" for v in row[4:8])
        if summaries and (not counts or any(v == "" for v in row[4:8])):
            raise DataError(
                "line %d: arm summaries need n_t, n_c and all four mean/var cells"
                % line)
        if self.has_counts is None:
            self.has_counts, self.has_summaries = counts, summaries
        elif (counts, summaries) != (self.has_counts, self.has_summaries):
            raise DataError("line %d: experiment %r mixes arm schemas across weeks"
                            % (line, self.id))
        if counts:
            self.n_t.append(_parse_int(row[2], "n_t", line))
            self.n_c.append(_parse_int(row[3], "n_c", line))
        if summaries:
            self.mean_t.append(_parse_float(row[4], "mean_t", line))
            self.mean_c.append(_parse_float(row[5], "mean_c", line))
            self.var_t.append(_parse_float(row[6], "var_t", line))
            self.var_c.append(_parse_float(row[7], "var_c", line))
        if row[8] == "" or row[9] == "":
            raise DataError("line %d: effect and effect_se2 are required" % line)
        self.effect.append(_parse_float(row[8], "effect", line))
        self.se2.append(_parse_float(row[9], "effect_se2", line))
        cost = _parse_float(row[10], "weekly_cost", line) if row[10] != "" else 0.0
        label = row[11] if row[11] != "" else None
        if label is not None and label not in LATENT_LABELS:
            raise DataError("line %d: unknown latent_label %r" % (line, label))
        if self.cost is None:
            self.cost, self.label = cost, label
        elif cost != self.cost or label != self.label:
            raise DataError(
                "line %d: experiment %r changes weekly_cost or latent_label "
                "across weeks" % (line, self.id))

    def build(self) -> ExperimentRecord:
        weeks = len(self.effect)
        treatment = control = None
        if self.has_counts:
            mt = vt = mc = vc = None
            if self.has_summaries:
                mt, vt = np.array(self.mean_t), np.array(self.var_t)
                mc, vc = np.array(self.mean_c), np.array(self.var_c)
            treatment = ArmWeekly(TREATMENT, np.array(self.n_t), mt, vt)
            control = ArmWeekly(CONTROL, np.array(self.n_c), mc, vc)
        record = ExperimentRecord(
            id=self.id, weeks=weeks, observed_effect=np.array(self.effect),
            effect_se2=np.array(self.se2), treatment=treatment, control=control,
            weekly_cost=self.cost, latent_label=self.label)
        record.validate()
        return record


def read_corpus_csv(path: str) -> List[ExperimentRecord]:
    """Read a corpus CSV; errors carry the first offending line number."""
    corpus: List[ExperimentRecord] = []
    seen: Dict[str, int] = {}
    current: Optional[_Partial] = None
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("line 1: empty file, expected corpus header")
        if header != CORPUS_HEADER:
            raise DataError("line 1: bad header, expected %s"
                            % ",".join(CORPUS_HEADER))
        for line, row in enumerate(reader, start=2):
            if len(row) != len(CORPUS_HEADER):
                raise DataError("line %d: expected %d columns, got %d"
                                % (line, len(CORPUS_HEADER), len(row)))
            exp_id = row[0]
            if exp_id == "":
                raise DataError("line %d: empty experiment id" % line)
            if current is None or exp_id != current.id:
                if exp_id in seen:
                    raise DataError(
                        "line %d: experiment %r rows are not contiguous "
                        "(first seen at line %d)" % (line, exp_id, seen[exp_id]))
                if current is not None:
                    corpus.append(current.build())
                current = _Partial(exp_id, line)
                seen[exp_id] = line
            current.add_row(row, line)
    if current is not None:
        corpus.append(current.build())
    if not corpus:
        raise DataError("line 2: corpus has no data rows")
    return corpus


# ---------------------------------------------------------------------------
# JSON forms


def _clean(x):
    """Replace non-finite floats by None for strict-JSON output."""
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def record_to_dict(exp: ExperimentRecord) -> dict:
    out = {
        "id": exp.id,
        "weeks": exp.weeks,
        "observed_effect": [float(v) for v in exp.observed_effect],
        "effect_se2": [float(v) for v in exp.effect_se2],
        "weekly_cost": float(exp.weekly_cost),
        "latent_label": exp.latent_label,
    }
    if exp.has_arms:
        for name, arm in (("treatment", exp.treatment), ("control", exp.control)):
            entry = {"cumulative_n": [int(v) for v in arm.cumulative_n]}
            if arm.has_summaries:
                entry["cumulative_mean"] = [float(v) for v in arm.cumulative_mean]
                entry["cumulative_var"] = [float(v) for v in arm.cumulative_var]
            out[name] = entry
    return out


def record_from_dict(data: dict) -> ExperimentRecord:
    arms = {}
    for name, label in (("treatment", TREATMENT), ("control", CONTROL)):
        entry = data.get(name)
        arms[name] = None if entry is None else ArmWeekly(
            label, np.array(entry["cumulative_n"]),
            None if "cumulative_mean" not in entry else np.array(entry["cumulative_mean"]),
            None if "cumulative_var" not in entry else np.array(entry["cumulative_var"]))
    record = ExperimentRecord(
        id=data["id"], weeks=int(data["weeks"]),
        observed_effect=np.array(data["observed_effect"], dtype=float),
        effect_se2=np.array(data["effect_se2"], dtype=float),
        treatment=arms["treatment"], control=arms["control"],
        weekly_cost=float(data.get("weekly_cost", 0.0)),
        latent_label=data.get("latent_label"))
    record.validate()
    return record


def write_corpus_json(corpus: Sequence[ExperimentRecord], path: str) -> None:
    dump_json([record_to_dict(exp) for exp in corpus], path)


def read_corpus_json(path: str) -> List[ExperimentRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not data:
        raise DataError("%s: expected a non-empty JSON array of records" % path)
    return [record_from_dict(entry) for entry in data]


def read_corpus(path: str) -> List[ExperimentRecord]:
    """Read a corpus file, dispatching on extension (.csv or .json)."""
    if path.endswith(".json"):
        return read_corpus_json(path)
    return read_corpus_csv(path)


def mixture_params_dict(params: MixtureParams,
                        diagnostics: Optional[FitDiagnostics] = None) -> dict:
    out = {
        "K": params.K,
        "weights": [float(w) for w in params.weights],
        "means": [float(m) for m in params.means],
        "comp_vars": [float(v) for v in params.comp_vars],
        "penalized_loglik": _clean(float(params.penalized_loglik)),
        "n_iterations": params.n_iterations,
        "converged": bool(params.converged),
    }
    if diagnostics is not None:
        out["diagnostics"] = {
            "best_start": diagnostics.best_start,
            "start_loglik": [_clean(v) for v in diagnostics.start_loglik],
            "start_converged": list(diagnostics.start_converged),
            "start_n_iterations": list(diagnostics.start_n_iterations),
            "start_init": list(diagnostics.start_init),
        }
    return out


def pooled_params_dict(params: PooledParams) -> dict:
    return {"mu0": float(params.mu0), "tau2": float(params.tau2),
            "loglik": float(params.loglik)}


def evaluation_report_dict(report: EvaluationReport) -> dict:
    rows = []
    for row in report.rows:
        rows.append({
            "method": row.method,
            "estimated_aes": _clean(row.estimated_aes),
            "fp_rate": _clean(row.fp_rate),
            "fn_rate": _clean(row.fn_rate),
            "avg_weeks": _clean(row.avg_weeks),
            "avg_opportunity_cost": _clean(row.avg_opportunity_cost),
            "avg_launch_impact": _clean(row.avg_launch_impact),
            "avg_in_experiment_impact": _clean(row.avg_in_experiment_impact),
            "avg_reward": _clean(row.avg_reward),
            "error": row.error,
        })
    out = {"m": report.m, "truth_source": report.truth_source, "rows": rows}
    if report.utility_profile is not None:
        out["utility_profile"] = [[float(a), float(r)]
                                  for a, r in report.utility_profile]
    return out


EVALUATION_CSV_COLUMNS = [
    "method", "estimated_aes", "fp_rate", "fn_rate", "avg_weeks",
    "avg_opportunity_cost", "avg_launch_impact", "avg_in_experiment_impact",
    "avg_reward", "error"]


def write_evaluation_csv(report: EvaluationReport, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVALUATION_CSV_COLUMNS)
        for row in report.rows:
            values = [row.estimated_aes, row.fp_rate, row.fn_rate, row.avg_weeks,
                      row.avg_opportunity_cost, row.avg_launch_impact,
                      row.avg_in_experiment_impact, row.avg_reward]
            writer.writerow([row.method]
                            + ["" if not math.isfinite(v) else _fmt(v) for v in values]
                            + [row.error or ""])


def accuracy_report_dict(report: AccuracyReport) -> dict:
    return {
        "truth": float(report.truth),
        "replications": report.replications,
        "rows": [{"method": row.method, "mse": float(row.mse),
                  "mae": float(row.mae),
                  "estimates": [float(e) for e in row.estimates]}
                 for row in report.rows],
    }


def write_accuracy_csv(report: AccuracyReport, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "mse", "mae"])
        for row in report.rows:
            writer.writerow([row.method, _fmt(row.mse), _fmt(row.mae)])


def write_histogram_csv(values: Sequence[float], bins: int, path: str) -> None:
    """Binned counts of observed effects, for external plotting."""
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count"])
        for i, count in enumerate(counts):
            writer.writerow([_fmt(edges[i]), _fmt(edges[i + 1]), str(int(count))])


def dump_json(obj, path: str) -> None:
    """Serialize with sorted keys and trailing newline (stable bytes)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
