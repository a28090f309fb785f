"""Grid search, benchmark orchestration and rule-table export."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .dataset import chronological_split, holdout_tail, load_csv, make_supervised
from .ensemble import EnsembleParams, RfNtskCombiner, fit_random_ensemble, fit_rf_ntsk
from .forest import ForestParams, fit_random_forest
from .genetic import GaConfig, run_ga
from .metrics import mape_details, ndei, nrmse, rmse
from .models import fit_base
from .nmr import NmrModel
from .ntsk import NtskModel

log = logging.getLogger(__name__)

VALIDATION_FRACTION = 0.25


@dataclass
class MetricReport:
    model: str
    dataset: str
    nrmse: float
    ndei: float
    mape: float
    rmse: float
    rules: int | None = None
    mape_skipped: int = 0


def make_report(y, y_hat, model="", dataset="", rules=None, zero_policy="skip") -> MetricReport:
    m, skipped = mape_details(y, y_hat, zero_policy)
    return MetricReport(model, dataset, nrmse(y, y_hat), ndei(y, y_hat), m, rmse(y, y_hat), rules, skipped)


def rule_count(model):
    return model.n_rules if isinstance(model, (NmrModel, NtskModel)) else None


# ---------------------------------------------------------------------------
# model construction

def fit_kind(kind, train, params=None, seed=0, ga=None, ensemble=None, forest=None):
    """Fit any configured model kind on a :class:`RegressionDataset`.

    ``ga``, ``ensemble`` and ``forest`` are :class:`GaConfig`,
    :class:`EnsembleParams` and :class:`ForestParams` (defaults when None).
    """
    params = dict(params or {})
    if kind in ("NMR", "NTSK-RLS", "NTSK-wRLS"):
        return fit_base(kind, train.X, train.y, params, attribute_names=train.attribute_names,
                        target_name=train.target_name)
    if kind.startswith("GEN-"):
        ga_cfg = GaConfig(**{**vars(ga or GaConfig()), "seed": seed})
        return run_ga(kind[4:], train, ga_cfg, params).model
    if kind == "R-NMR":
        return fit_random_ensemble("NMR", train, ensemble, params, seed)
    if kind == "R-NTSK":
        solver = params.pop("solver", "wRLS")
        return fit_random_ensemble(f"NTSK-{solver}", train, ensemble, params, seed)
    if kind == "RF-NTSK":
        solver = params.pop("solver", "wRLS")
        return fit_rf_ntsk(train, ensemble, forest, f"NTSK-{solver}", params, seed)
    if kind == "RF":
        return fit_random_forest(train.X, train.y, forest, seed)
    raise ValueError(f"unknown model kind {kind!r}")


def cell_seed(seed, *names):
    """Seed for one independent unit of work, derived from the run seed and stable names."""
    keys = [seed] + [zlib.crc32(n.encode()) for n in names]
    return int(np.random.SeedSequence(keys).generate_state(1)[0])


# ---------------------------------------------------------------------------
# grid search

@dataclass
class GridEntry:
    config: dict
    report: MetricReport | None
    score: float
    error: str | None = None


@dataclass
class GridResult:
    best_config: dict
    best_report: MetricReport
    entries: list[GridEntry] = field(default_factory=list)


def expand_grid(grid):
    """All configs of a named lattice, in product order of the given keys."""
    keys = list(grid)
    return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]


def grid_search(model_kind, grid, train, val, base_params=None, seed=0, ga=None, ensemble=None,
                forest=None, zero_policy="skip") -> GridResult:
    """Exhaustively evaluate ``grid`` on the validation set.

    Lowest validation RMSE wins; ties go to fewer rules, then to the
    earlier config in lattice order. Configs that fail score ``inf``.
    """
    configs = expand_grid(grid)
    if not configs:
        raise ValueError("empty grid")
    entries = []
    for cfg in configs:
        params = {**(base_params or {}), **cfg}
        try:
            model = fit_kind(model_kind, train, params, seed, ga, ensemble, forest)
            pred = model.predict(val.X)
            report = make_report(val.y, pred, model_kind, "validation", rule_count(model), zero_policy)
            score = report.rmse if math.isfinite(report.rmse) else math.inf
            entries.append(GridEntry(cfg, report, score))
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as err:
            log.info("grid point %s failed: %s", cfg, err)
            entries.append(GridEntry(cfg, None, math.inf, str(err)))

    def key(item):
        i, e = item
        rules = e.report.rules if e.report is not None and e.report.rules is not None else 0
        return (e.score, rules, i)

    _, best = min(enumerate(entries), key=key)
    if best.report is None:
        raise ArithmeticError(f"every grid point failed for {model_kind}")
    return GridResult(best.config, best.report, entries)


# ---------------------------------------------------------------------------
# rule tables

@dataclass
class RuleTable:
    columns: list[str]
    rows: list[list[str]]

    def to_markdown(self) -> str:
        out = ["| " + " | ".join(self.columns) + " |", "|" + "|".join("---" for _ in self.columns) + "|"]
        out += ["| " + " | ".join(r) + " |" for r in self.rows]
        return "\n".join(out) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        return buf.getvalue()


def export_rule_table(model, attribute_names=None, target_name=None, decimals=2) -> RuleTable:
    """One row per rule: ``mean (std)`` per selected attribute and the consequent interval.

    NMR rules show their target range; NTSK rules show the range of the
    expected one-step target variation.
    """
    if not isinstance(model, (NmrModel, NtskModel)):
        raise TypeError("not a single rule-based model")
    n_sel = int(model.feature_mask.sum())
    names = attribute_names or model.attribute_names or [f"x{j + 1}" for j in np.flatnonzero(model.feature_mask)]
    if len(names) != n_sel:
        raise ValueError(f"{len(names)} attribute names for {n_sel} selected attributes")
    target = target_name or model.target_name
    consequent = f"Next {target}" if isinstance(model, NmrModel) else f"Next {target} variation"
    fmt = f"{{:.{decimals}f}}"
    rows = []
    for i, rule in enumerate(model.rules, start=1):
        cells = [f"{fmt.format(m)} ({fmt.format(s)})" for m, s in zip(rule.antecedent.means, rule.antecedent.stds)]
        lo, hi = rule.range if isinstance(model, NmrModel) else rule.variation_range
        rows.append([str(i)] + cells + [f"[{fmt.format(lo)}, {fmt.format(hi)}]"])
    return RuleTable(["Rule"] + list(names) + [consequent], rows)


# ---------------------------------------------------------------------------
# benchmark

@dataclass
class CombinerCheck:
    dataset: str
    model: str
    rmse_rf: float
    rmse_rntsk: float
    rmse_combined: float

    @property
    def ok(self) -> bool:
        return self.rmse_combined <= max(self.rmse_rf, self.rmse_rntsk)


@dataclass
class BenchmarkResult:
    seed: int
    reports: list[MetricReport]
    failures: list[tuple[str, str, str]] = field(default_factory=list)
    checks: list[CombinerCheck] = field(default_factory=list)
    chosen: dict = field(default_factory=dict)


TABLE_COLUMNS = ["dataset", "model", "nrmse", "ndei", "mape", "rmse", "rules", "mape_skipped", "config"]


def _fmt(x):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def format_table(result: BenchmarkResult) -> str:
    buf = io.StringIO()
    buf.write(f"# seed={result.seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for r in result.reports:
        chosen = result.chosen.get((r.dataset, r.model), {})
        cfg = ";".join(f"{k}={v}" for k, v in chosen.items())
        writer.writerow([r.dataset, r.model, _fmt(r.nrmse), _fmt(r.ndei), _fmt(r.mape), _fmt(r.rmse),
                         "-" if r.rules is None else r.rules, r.mape_skipped, cfg])
    for ds, model, err in result.failures:
        writer.writerow([ds, model, "nan", "nan", "nan", "nan", "-", 0, f"failed: {err}"])
    return buf.getvalue()


def format_markdown(result: BenchmarkResult) -> str:
    """Per-dataset tables shaped like the usual NRMSE/NDEI/MAPE/Rules results table."""
    out = [f"Seed: {result.seed}", ""]
    for ds in dict.fromkeys(r.dataset for r in result.reports):
        out += [f"## {ds}", "", "| Model | NRMSE | NDEI | MAPE | Rules |", "|---|---|---|---|---|"]
        for r in result.reports:
            if r.dataset == ds:
                rules = "-" if r.rules is None else str(r.rules)
                out.append(f"| {r.model} | {r.nrmse:.5f} | {r.ndei:.5f} | {r.mape:.5f} | {rules} |")
        out.append("")
    return "\n".join(out)


def _search_blocks(cfg: RunConfig):
    ga = GaConfig(**cfg.ga.model_dump(), seed=cfg.seed)
    ens = EnsembleParams(**cfg.ensemble.model_dump())
    forest = ForestParams(**cfg.forest.model_dump())
    return ga, ens, forest


def load_dataset(spec):
    frame = load_csv(spec.path, spec.target, spec.drop_na, spec.time_column, spec.columns)
    return make_supervised(frame, spec.target, spec.horizon, spec.lags)


def fit_configured(cfg: RunConfig, model_spec, train, seed):
    """Fit one configured model on ``train``; grid-search first when the spec has a grid.

    Returns ``(model, chosen_params)``.
    """
    ga, ens, forest = _search_blocks(cfg)
    params = dict(model_spec.params)
    if model_spec.grid:
        inner, val = holdout_tail(train, VALIDATION_FRACTION)
        res = grid_search(model_spec.kind, model_spec.grid, inner, val, params, seed, ga, ens, forest,
                          cfg.mape_zero_policy)
        params.update(res.best_config)
    return fit_kind(model_spec.kind, train, params, seed, ga, ens, forest), params


def run_benchmark(cfg: RunConfig, output_dir=None, write=True) -> BenchmarkResult:
    """Train and score every (dataset, model) pair on its chronological test split.

    Writes ``results.csv`` (seed on the first line), ``results.md``,
    ``checks.csv``, one predictions CSV per pair and a Markdown rule table
    per rule-based model. A failing pair is logged and the run continues.
    """
    out = Path(output_dir or cfg.output_dir)
    result = BenchmarkResult(cfg.seed, [])
    if write:
        (out / "predictions").mkdir(parents=True, exist_ok=True)
        (out / "rules").mkdir(parents=True, exist_ok=True)

    for ds_spec in cfg.datasets:
        try:
            data = load_dataset(ds_spec)
            train, test = chronological_split(data, cfg.split_fraction)
        except (ValueError, OSError) as err:
            log.error("dataset %s failed to load: %s", ds_spec.name, err)
            for m in cfg.models:
                result.failures.append((ds_spec.name, m.name, str(err)))
            continue

        for m in cfg.models:
            seed = cell_seed(cfg.seed, ds_spec.name, m.name)
            log.info("fitting %s on %s (seed %d)", m.name, ds_spec.name, seed)
            try:
                model, chosen = fit_configured(cfg, m, train, seed)
                pred = model.predict(test.X)
                if not np.isfinite(pred).all():
                    raise ArithmeticError("non-finite predictions")
                report = make_report(test.y, pred, m.name, ds_spec.name, rule_count(model), cfg.mape_zero_policy)
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as err:
                log.error("%s on %s failed: %s", m.name, ds_spec.name, err)
                result.failures.append((ds_spec.name, m.name, str(err)))
                continue
            result.reports.append(report)
            result.chosen[(ds_spec.name, m.name)] = chosen

            if isinstance(model, RfNtskCombiner):
                y_rf, y_rn = model.component_predictions(test.X)
                check = CombinerCheck(ds_spec.name, m.name, rmse(test.y, y_rf), rmse(test.y, y_rn), report.rmse)
                if not check.ok:
                    log.error("combiner bound violated on %s: %s", ds_spec.name, check)
                result.checks.append(check)

            if write:
                stem = f"{ds_spec.name}__{m.name}"
                _write_predictions(out / "predictions" / f"{stem}.csv", test.y, pred)
                if rule_count(model) is not None:
                    table = export_rule_table(model)
                    (out / "rules" / f"{stem}.md").write_text(table.to_markdown())

    if write:
        (out / "results.csv").write_text(format_table(result))
        (out / "results.md").write_text(format_markdown(result))
        (out / "checks.csv").write_text(_format_checks(result.checks))
    return result


def _write_predictions(path, y, y_hat):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "y", "y_hat"])
        for i, (a, b) in enumerate(zip(y, y_hat)):
            writer.writerow([i, repr(float(a)), repr(float(b))])


def _format_checks(checks):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "model", "rmse_rf", "rmse_rntsk", "rmse_combined", "bound_ok"])
    for c in checks:
        writer.writerow([c.dataset, c.model, repr(c.rmse_rf), repr(c.rmse_rntsk), repr(c.rmse_combined), c.ok])
    return buf.getvalue()
