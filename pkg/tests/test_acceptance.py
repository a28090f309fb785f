"""Acceptance criteria, one test each; the summary prints a PASS/FAIL line per criterion.

Run alone with ``pytest -m acceptance``.
"""

import itertools
import json
import math
import os
import re
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import SMALL_BLOCKS
from synthetic import INFORMATIVE, four_level_frame, informative_noise_dataset, noisy_sinusoid
from nfis.config import config_from_dict, parse_config
from nfis.dataset import chronological_split, holdout_tail, make_supervised
from nfis.ensemble import rf_ntsk_combine
from nfis.evalbench import grid_search, run_benchmark
from nfis.fuzzy_core import AntecedentRule, GaussianSet, firing_degrees, membership
from nfis.genetic import GaConfig, evaluate_fitness, run_ga
from nfis.metrics import mape, ndei, nrmse, rmse
from nfis.nmr import assign_rule, assign_rules, fit_nmr, interval_size, rule_ranges
from nfis.ntsk import extend, fit_ntsk, run_rls

pytestmark = pytest.mark.acceptance

REL = 1e-10


def close(a, b, rel=REL):
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)


def write_frame_csv(path, frame):
    names = frame.names
    cols = [frame.columns[n] for n in names]
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# --- oracles written with plain loops, independent of the vectorized code ---------------

def oracle_firing(x, means, stds):
    acts = []
    for mu_row, s_row in zip(means, stds):
        a = 1.0
        for xj, m, s in zip(x, mu_row, s_row):
            a *= math.exp(-0.5 * ((xj - m) / s) ** 2)
        acts.append(a)
    total = sum(acts)
    return [a / total for a in acts]


def oracle_metrics(y, y_hat):
    n = len(y)
    mse = sum((a - b) ** 2 for a, b in zip(y, y_hat)) / n
    mean = sum(y) / n
    std = math.sqrt(sum((a - mean) ** 2 for a in y) / n)
    r = math.sqrt(mse)
    ape = [abs(a - b) / abs(a) for a, b in zip(y, y_hat)]
    return r, r / (max(y) - min(y)), r / std, sum(ape) / n


@pytest.mark.criterion("equation oracles (rel 1e-10, < 1 s)")
def test_equation_oracles():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()

    for _ in range(200):
        x, v, s = rng.normal(), rng.normal(), rng.uniform(0.2, 3)
        assert close(membership(x, GaussianSet(v, s)), math.exp(-0.5 * ((x - v) / s) ** 2))

    for _ in range(150):
        R, p = rng.integers(1, 6), rng.integers(1, 5)
        means, stds = rng.normal(size=(R, p)), rng.uniform(0.5, 2.0, size=(R, p))
        rules = [AntecedentRule(m, s) for m, s in zip(means, stds)]
        x = rng.normal(size=p)
        for got, want in zip(firing_degrees(x, rules), oracle_firing(x, means, stds)):
            assert close(got, want)

    X = rng.normal(size=(120, 3))
    y = X @ [1.0, -2.0, 0.5] + 0.2 * rng.normal(size=120)
    nmr = fit_nmr(X, y, rules=4)
    ntsk = fit_ntsk(X, y, rules=3, solver="wRLS")
    Q = rng.normal(size=(100, 3))
    nmr_pred, ntsk_pred = nmr.predict(Q), ntsk.predict(Q)
    for q, a, b in zip(Q, nmr_pred, ntsk_pred):
        w = oracle_firing(q, [r.antecedent.means for r in nmr.rules], [r.antecedent.stds for r in nmr.rules])
        assert close(a, sum(wi * r.consequent_mean for wi, r in zip(w, nmr.rules)) / sum(w))
        w = oracle_firing(q, [r.antecedent.means for r in ntsk.rules], [r.antecedent.stds for r in ntsk.rules])
        outs = [r.theta[0] + sum(t * qj for t, qj in zip(r.theta[1:], q)) for r in ntsk.rules]
        assert close(b, sum(wi * o for wi, o in zip(w, outs)))

    for _ in range(150):
        y_rf, y_rn = rng.normal(size=2) * 10
        e_rf, e_rn = rng.uniform(0.01, 5, size=2)
        assert close(rf_ntsk_combine(y_rf, y_rn, e_rf, e_rn), (e_rn * y_rf + e_rf * y_rn) / (e_rf + e_rn))

    for _ in range(150):
        n = int(rng.integers(2, 12))
        y = rng.uniform(1, 10, size=n) * rng.choice([-1, 1], size=n)
        y_hat = y + rng.normal(size=n)
        r, nr, nd, mp = oracle_metrics(list(y), list(y_hat))
        assert close(rmse(y, y_hat), r) and close(nrmse(y, y_hat), nr)
        assert close(ndei(y, y_hat), nd) and close(mape(y, y_hat), mp)

    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.2f} s"


@pytest.mark.criterion("RLS matches normal equations on 50 problems (rel 1e-6, < 5 s)")
def test_rls_correctness():
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    solved = 0
    while solved < 50:
        p = int(rng.integers(1, 6))
        X_ext = extend(rng.normal(size=(200, p)) * rng.uniform(0.3, 3, size=p) + rng.normal(size=p))
        if np.linalg.cond(X_ext) >= 1e3:
            continue
        y = X_ext @ rng.normal(size=p + 1) + 0.1 * rng.normal(size=200)
        theta, _ = run_rls(X_ext, y)
        exact = np.linalg.solve(X_ext.T @ X_ext, X_ext.T @ y)
        assert np.linalg.norm(theta - exact) <= 1e-6 * np.linalg.norm(exact)
        solved += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.2f} s"


@pytest.mark.criterion("partition invariants on 1000 triples (< 1 s)")
def test_partition_invariants():
    rng = np.random.default_rng(11)
    start = time.perf_counter()
    for _ in range(1000):
        y_min = rng.uniform(-1e3, 1e3)
        y_max = y_min + 10 ** rng.uniform(-3, 3)
        R = int(rng.integers(1, 51))
        IS = interval_size(y_min, y_max, R)
        ranges = rule_ranges(y_min, IS, R, y_max)
        assert len(ranges) == R
        assert ranges[0][0] == y_min and ranges[-1][1] == y_max
        assert all(a[1] == b[0] for a, b in zip(ranges, ranges[1:]))
        assert all(lo < hi for lo, hi in ranges)
        assert math.isclose(sum(hi - lo for lo, hi in ranges), y_max - y_min, rel_tol=1e-9)

        assert assign_rule(y_max, y_min, y_max, IS, R) == R
        assert assign_rule(y_min, y_min, y_max, IS, R) == 1
        ys = np.sort(rng.uniform(y_min, y_max, size=50))
        labels = assign_rules(ys, y_min, y_max, IS, R)
        assert (np.diff(labels) >= 0).all() and labels.min() >= 1 and labels.max() <= R
        mids = [(lo + hi) / 2 for lo, hi in ranges]
        assert assign_rules(mids, y_min, y_max, IS, R).tolist() == list(range(1, R + 1))
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.2f} s"


@pytest.mark.criterion("normalization and convex hull on 1e4 queries (< 5 s)")
def test_normalization_and_convexity():
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    X = rng.normal(size=(400, 3))
    y = np.sin(X[:, 0]) + X[:, 1] ** 2 + 0.1 * rng.normal(size=400)
    Q = rng.normal(size=(10_000, 3)) * rng.choice([1.0, 4.0], size=(10_000, 1))

    nmr = fit_nmr(X, y, rules=6)
    w = nmr.firing(Q)
    assert np.abs(w.sum(axis=1) - 1).max() <= 1e-12
    v = np.array([r.consequent_mean for r in nmr.rules])
    pred = nmr.predict(Q)
    assert (pred >= v.min() - 1e-12 * abs(v).max()).all() and (pred <= v.max() + 1e-12 * abs(v).max()).all()

    for solver in ("RLS", "wRLS"):
        ntsk = fit_ntsk(X, y, rules=5, solver=solver)
        w = ntsk.firing(Q)
        assert np.abs(w.sum(axis=1) - 1).max() <= 1e-12
        outs = ntsk.rule_outputs(Q)
        pred = ntsk.predict(Q)
        slack = 1e-12 * np.abs(outs).max(axis=1)
        assert (pred >= outs.min(axis=1) - slack).all() and (pred <= outs.max(axis=1) + slack).all()
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.2f} s"


@pytest.mark.criterion("forecasting sanity: NTSK(wRLS) beats persistence, NMR MAPE < 10% (< 30 s)")
def test_forecasting_sanity():
    start = time.perf_counter()
    ds = make_supervised(noisy_sinusoid(seed=0), "y", horizon=1, lags=3)
    train, test = chronological_split(ds, 0.8)
    inner, val = holdout_tail(train, 0.25)
    best = grid_search("NTSK-wRLS", {"rules": list(range(1, 11))}, inner, val).best_config
    model = fit_ntsk(train.X, train.y, solver="wRLS", **best)
    persistence = test.X[:, ds.attribute_names.index("y")]
    assert nrmse(test.y, model.predict(test.X)) < nrmse(test.y, persistence)

    steps = make_supervised(four_level_frame(seed=0), "level", horizon=1)
    train, test = chronological_split(steps, 0.8)
    lead_only = np.array([name == "lead" for name in steps.attribute_names])
    nmr = fit_nmr(train.X, train.y, rules=4, feature_mask=lead_only)
    assert mape(test.y, nmr.predict(test.X)) < 0.10
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.2f} s"


@pytest.mark.criterion("GA keeps all informative attributes in >= 9/10 runs, checked by enumeration (< 2 min)")
def test_ga_recovery():
    start = time.perf_counter()
    params = {"rules": 1}
    hits = 0
    for seed in range(10):
        ds = informative_noise_dataset(seed)
        train, val = holdout_tail(ds, 0.25)
        scores = {}
        for bits in itertools.product([False, True], repeat=ds.n_features):
            if any(bits):
                scores[bits] = evaluate_fitness(np.array(bits), "NTSK-RLS", train, val, params)
        with_all = [f for b, f in scores.items() if all(b[i] for i in INFORMATIVE)]
        missing = [f for b, f in scores.items() if not all(b[i] for i in INFORMATIVE)]
        # oracle: every mask holding the informative attributes beats every mask that drops one
        assert max(with_all) < min(missing)

        res = run_ga("NTSK-RLS", ds, GaConfig(seed=seed), params)
        assert res.best.fitness == scores[tuple(bool(b) for b in res.best.mask)]
        hits += res.best.fitness <= max(with_all) and all(res.best.mask[i] for i in INFORMATIVE)
    assert hits >= 9
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, f"took {elapsed:.2f} s"


@pytest.fixture(scope="module")
def bench_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("bench")
    write_frame_csv(root / "wave.csv", noisy_sinusoid(seed=1, T=400))
    write_frame_csv(root / "steps.csv", four_level_frame(seed=1, T=400))
    return root


@pytest.mark.criterion("combiner bound on every benchmark run (exact)")
def test_combiner_bound(bench_dir):
    datasets = [{"name": "wave", "path": "wave.csv", "target": "y", "lags": 2},
                {"name": "steps", "path": "steps.csv", "target": "level"}]
    checks = []
    for seed in range(3):
        cfg = config_from_dict({
            "datasets": datasets, "seed": seed,
            "models": [{"kind": "RF-NTSK", "params": {"rules": 3}},
                       {"kind": "RF-NTSK", "name": "RF-NTSK-RLS", "params": {"rules": 2, "solver": "RLS"}}],
            "ensemble": {"n_members": 4, "z": 3}, "forest": {"n_trees": 20},
        }, bench_dir)
        result = run_benchmark(cfg, write=False)
        assert not result.failures
        checks += result.checks
    assert len(checks) == 12
    bad = [c for c in checks if not c.rmse_combined <= max(c.rmse_rf, c.rmse_rntsk)]
    assert not bad, bad


@pytest.mark.criterion("determinism: byte-identical benchmark tables across processes")
def test_determinism(bench_dir, tmp_path):
    models = [{"kind": k, "params": {"rules": 3}} for k in
              ("NMR", "NTSK-RLS", "NTSK-wRLS", "GEN-NMR", "GEN-NTSK-RLS", "GEN-NTSK-wRLS", "R-NMR", "R-NTSK",
               "RF-NTSK")] + [{"kind": "RF"}, {"kind": "NTSK-wRLS", "name": "grid", "grid": {"rules": [2, 4]}}]
    cfg = {"datasets": [{"name": "wave", "path": str(bench_dir / "wave.csv"), "target": "y", "lags": 1}],
           "models": models, "seed": 5, **SMALL_BLOCKS}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    env = {k: v for k, v in os.environ.items() if k != "NFIS_SEED"}
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        proc = subprocess.run([sys.executable, "-m", "nfis.cli", "benchmark", str(path), "-o", str(out)],
                              env=env, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs.append(out)
    for name in ("results.csv", "results.md", "checks.csv"):
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()
    assert (outputs[0] / "results.csv").read_text().count("\n") == 2 + len(models)


# NRMSE of the proposed models on the four daily PV series
REFERENCE_NRMSE = {
    "alice1a": {"NMR": 0.24337, "NTSK-RLS": 0.24953, "NTSK-wRLS": 0.20957, "GEN-NMR": 0.23421,
                "GEN-NTSK-RLS": 0.22072, "GEN-NTSK-wRLS": 0.20711, "R-NMR": 0.23220, "R-NTSK": 0.21431,
                "RF-NTSK": 0.21177},
    "alice38": {"NMR": 0.24519, "NTSK-RLS": 0.25395, "NTSK-wRLS": 0.23656, "GEN-NMR": 0.26173,
                "GEN-NTSK-RLS": 0.21581, "GEN-NTSK-wRLS": 0.25224, "R-NMR": 0.21897, "R-NTSK": 0.21150,
                "RF-NTSK": 0.21087},
    "yulara1": {"NMR": 0.27135, "NTSK-RLS": 0.20606, "NTSK-wRLS": 0.22261, "GEN-NMR": 0.19319,
                "GEN-NTSK-RLS": 0.26105, "GEN-NTSK-wRLS": 0.21812, "R-NMR": 0.26611, "R-NTSK": 0.20941,
                "RF-NTSK": 0.18351},
    "yulara5": {"NMR": 0.32884, "NTSK-RLS": 0.22291, "NTSK-wRLS": 0.21398, "GEN-NMR": 0.29698,
                "GEN-NTSK-RLS": 0.22080, "GEN-NTSK-wRLS": 0.20625, "R-NMR": 0.36554, "R-NTSK": 0.20632,
                "RF-NTSK": 0.20749},
}


@pytest.mark.slow
@pytest.mark.criterion("PV reproduction within 0.03 NRMSE (data-gated, best effort)")
def test_pv_reproduction(tmp_path):
    path = os.environ.get("NFIS_REFERENCE_CONFIG")
    if not path:
        pytest.skip("set NFIS_REFERENCE_CONFIG to a config over the daily PV CSVs")
    cfg = parse_config(path)
    result = run_benchmark(cfg, tmp_path)
    assert not result.failures, result.failures
    assert "| Model | NRMSE | NDEI | MAPE | Rules |" in (tmp_path / "results.md").read_text()
    compared = 0
    for report in result.reports:
        ref = REFERENCE_NRMSE.get(re.sub(r"[^a-z0-9]", "", report.dataset.lower()), {})
        kind = cfg.model(report.model).kind
        if kind in ref:
            assert abs(report.nrmse - ref[kind]) <= 0.03, (report.dataset, kind, report.nrmse, ref[kind])
            compared += 1
    assert compared, "no dataset/model pair matched the reference table"
