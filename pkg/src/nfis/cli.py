"""Command-line entry point: ``nfis <command> ...``.

Exit codes: 0 success, 1 config error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import dump_config, parse_config
from .dataset import chronological_split, holdout_tail, load_csv, make_supervised
from .ensemble import Ensemble, RfNtskCombiner
from .errors import ConfigError, DataError, NfisError, NumericalError
from .evalbench import (
    VALIDATION_FRACTION, _search_blocks, cell_seed, export_rule_table, fit_configured, format_markdown,
    grid_search, load_dataset, make_report, rule_count, run_benchmark,
)
from .forest import RandomForest
from .genetic import GaConfig, run_ga, write_history_csv
from .serialize import (
    forest_from_dict, forest_to_dict, load_ensemble, load_model, load_rf_ntsk, save_ensemble, save_model,
    save_rf_ntsk,
)

log = logging.getLogger("nfis")


def setup_logging(output_dir, seed, verbose=False):
    """Line-oriented run log whose first line records the seed."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "run.log"
    path.write_text(f"seed={seed}\n")
    root = logging.getLogger("nfis")
    root.handlers.clear()
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    fh = logging.FileHandler(path)
    fh.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(fh)
    sh = logging.StreamHandler(sys.stderr)
    sh.setLevel(logging.DEBUG if verbose else logging.WARNING)
    sh.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    root.addHandler(sh)


def _load_config(args):
    cfg = parse_config(args.config)
    if getattr(args, "output", None):
        cfg.output_dir = args.output
    setup_logging(cfg.output_dir, cfg.seed, args.verbose)
    log.info("config:\n%s", dump_config(cfg))
    return cfg


def _preprocessing(spec):
    return {"target": spec.target, "horizon": spec.horizon, "lags": spec.lags, "columns": spec.columns,
            "time_column": spec.time_column}


def save_artifact(model, path, preprocessing):
    path = Path(path)
    if isinstance(model, Ensemble):
        save_ensemble(model, path)
    elif isinstance(model, RfNtskCombiner):
        save_rf_ntsk(model, path)
    elif isinstance(model, RandomForest):
        path.mkdir(parents=True, exist_ok=True)
        (path / "manifest.json").write_text(json.dumps({"format": "nfis-forest", **forest_to_dict(model)}))
    else:
        save_model(model, path, extra={"preprocessing": preprocessing})
        return
    (path / "preprocessing.json").write_text(json.dumps(preprocessing, indent=1))


def load_artifact(path):
    path = Path(path)
    if path.is_file():
        model, extra = load_model(path)
        return model, extra.get("preprocessing", {})
    manifest = json.loads((path / "manifest.json").read_text())
    fmt = manifest.get("format")
    if fmt == "nfis-ensemble":
        model = load_ensemble(path)
    elif fmt == "nfis-rf-ntsk":
        model = load_rf_ntsk(path)
    elif fmt == "nfis-forest":
        model = forest_from_dict(manifest)
    else:
        raise DataError(f"unrecognised artifact at {path}")
    pre = path / "preprocessing.json"
    return model, json.loads(pre.read_text()) if pre.exists() else {}


def _report_line(report):
    rules = "-" if report.rules is None else report.rules
    return (f"{report.dataset} {report.model}: NRMSE={report.nrmse:.5f} NDEI={report.ndei:.5f} "
            f"MAPE={report.mape:.5f} RMSE={report.rmse:.5g} rules={rules}")


def cmd_fit(args):
    cfg = _load_config(args)
    ds_spec, m_spec = cfg.dataset(args.dataset), cfg.model(args.model)
    train, test = chronological_split(load_dataset(ds_spec), cfg.split_fraction)
    model, chosen = fit_configured(cfg, m_spec, train, cell_seed(cfg.seed, ds_spec.name, m_spec.name))
    target = args.model_out or str(Path(cfg.output_dir) / f"{ds_spec.name}__{m_spec.name}"
                                   f"{'.json' if rule_count(model) is not None else ''}")
    save_artifact(model, target, _preprocessing(ds_spec))
    report = make_report(test.y, model.predict(test.X), m_spec.name, ds_spec.name, rule_count(model),
                         cfg.mape_zero_policy)
    print(f"params: {json.dumps(chosen, sort_keys=True)}")
    print(_report_line(report))
    print(f"model written to {target}")


def cmd_predict(args):
    model, pre = load_artifact(args.model)
    target = args.target or pre.get("target")
    if target is None:
        raise ConfigError("--target is required when the model does not record its preprocessing")
    horizon = args.horizon if args.horizon is not None else pre.get("horizon", 1)
    lags = args.lags if args.lags is not None else pre.get("lags", 0)
    frame = load_csv(args.data, target, True, pre.get("time_column"), pre.get("columns"))
    ds = make_supervised(frame, target, horizon, lags)
    pred = model.predict(ds.X)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w")
    try:
        out.write("index,y,y_hat\n")
        for i, (a, b) in enumerate(zip(ds.y, pred)):
            out.write(f"{i},{a!r},{float(b)!r}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.out not in (None, "-"):
        print(_report_line(make_report(ds.y, pred, Path(args.model).stem, Path(args.data).stem, rule_count(model))))


def cmd_benchmark(args):
    cfg = _load_config(args)
    result = run_benchmark(cfg)
    print(format_markdown(result))
    for ds, model, err in result.failures:
        print(f"FAILED {ds} {model}: {err}", file=sys.stderr)
    bad = [c for c in result.checks if not c.ok]
    if bad:
        print(f"combiner bound violated in {len(bad)} run(s)", file=sys.stderr)
        return 3
    print(f"tables written to {cfg.output_dir}")
    return 0


def cmd_grid_search(args):
    cfg = _load_config(args)
    ds_spec, m_spec = cfg.dataset(args.dataset), cfg.model(args.model)
    if not m_spec.grid:
        raise ConfigError(f"models.{m_spec.name}.grid is required for grid-search")
    train, _ = chronological_split(load_dataset(ds_spec), cfg.split_fraction)
    inner, val = holdout_tail(train, VALIDATION_FRACTION)
    ga, ens, forest = _search_blocks(cfg)
    res = grid_search(m_spec.kind, m_spec.grid, inner, val, dict(m_spec.params),
                      cell_seed(cfg.seed, ds_spec.name, m_spec.name), ga, ens, forest, cfg.mape_zero_policy)
    for e in res.entries:
        rules = "-" if e.report is None or e.report.rules is None else e.report.rules
        print(f"{json.dumps(e.config, sort_keys=True)} rmse={e.score!r} rules={rules}")
    print(f"best: {json.dumps(res.best_config, sort_keys=True)}")
    print(json.dumps(asdict(res.best_report), indent=1))


def cmd_export_rules(args):
    model, _ = load_artifact(args.model)
    try:
        table = export_rule_table(model)
    except TypeError as err:
        raise DataError(str(err)) from None
    text = table.to_markdown() if args.format == "md" else table.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_ga_select(args):
    cfg = _load_config(args)
    ds_spec, m_spec = cfg.dataset(args.dataset), cfg.model(args.model)
    base = m_spec.kind[4:] if m_spec.kind.startswith("GEN-") else m_spec.kind
    if base not in ("NMR", "NTSK-RLS", "NTSK-wRLS"):
        raise ConfigError(f"ga-select needs a GEN-* or base fuzzy model, got {m_spec.kind}")
    train, test = chronological_split(load_dataset(ds_spec), cfg.split_fraction)
    ga_cfg = GaConfig(**cfg.ga.model_dump(), seed=cell_seed(cfg.seed, ds_spec.name, m_spec.name))
    res = run_ga(base, train, ga_cfg, dict(m_spec.params))
    out = Path(cfg.output_dir)
    stem = f"{ds_spec.name}__GEN-{base}"
    write_history_csv(res.history, out / f"{stem}__history.csv")
    save_artifact(res.model, out / f"{stem}.json", _preprocessing(ds_spec))
    selected = [n for n, keep in zip(train.attribute_names, res.best.mask) if keep]
    print(f"best mask {res.best.key} fitness={res.best.fitness!r} ({res.evaluations} distinct masks evaluated)")
    print(f"selected: {', '.join(selected)}")
    print(_report_line(make_report(test.y, res.model.predict(test.X), f"GEN-{base}", ds_spec.name,
                                   res.model.n_rules, cfg.mape_zero_policy)))


def cmd_ensemble_fit(args):
    cfg = _load_config(args)
    ds_spec, m_spec = cfg.dataset(args.dataset), cfg.model(args.model)
    if m_spec.kind not in ("R-NMR", "R-NTSK", "RF-NTSK"):
        raise ConfigError(f"ensemble-fit needs R-NMR, R-NTSK or RF-NTSK, got {m_spec.kind}")
    train, test = chronological_split(load_dataset(ds_spec), cfg.split_fraction)
    model, _ = fit_configured(cfg, m_spec, train, cell_seed(cfg.seed, ds_spec.name, m_spec.name))
    target = Path(cfg.output_dir) / f"{ds_spec.name}__{m_spec.name}"
    save_artifact(model, target, _preprocessing(ds_spec))
    print(_report_line(make_report(test.y, model.predict(test.X), m_spec.name, ds_spec.name, None,
                                   cfg.mape_zero_policy)))
    if isinstance(model, RfNtskCombiner):
        print(f"eps_rf={model.eps_rf!r} eps_rntsk={model.eps_rntsk!r}")
    print(f"manifest written to {target / 'manifest.json'}")


def build_parser():
    parser = argparse.ArgumentParser(prog="nfis", description="Data-driven fuzzy inference systems for forecasting.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="JSON run configuration")
        p.add_argument("-o", "--output", help="output directory (overrides config output_dir)")
        p.add_argument("--dataset", help="dataset name (default: first)")
        p.add_argument("--model", help="model name (default: first)")
        p.set_defaults(func=func)
        return p

    fit = with_config("fit", cmd_fit, "fit one model and save it")
    fit.add_argument("--model-out", help="path for the saved model")
    with_config("benchmark", cmd_benchmark, "run every dataset x model pair")
    with_config("grid-search", cmd_grid_search, "grid-search one model's hyperparameters")
    with_config("ga-select", cmd_ga_select, "genetic feature selection for one model")
    with_config("ensemble-fit", cmd_ensemble_fit, "fit an R-NMR, R-NTSK or RF-NTSK ensemble")

    pred = sub.add_parser("predict", help="predict with a saved model")
    pred.add_argument("model")
    pred.add_argument("data", help="CSV file")
    pred.add_argument("--target")
    pred.add_argument("--horizon", type=int)
    pred.add_argument("--lags", type=int)
    pred.add_argument("--out", help="predictions CSV (default stdout)")
    pred.set_defaults(func=cmd_predict)

    exp = sub.add_parser("export-rules", help="render a model's rule table")
    exp.add_argument("model")
    exp.add_argument("--format", choices=("md", "csv"), default="md")
    exp.add_argument("--out")
    exp.set_defaults(func=cmd_export_rules)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except NfisError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return NumericalError.exit_code
    except (ValueError, OSError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
