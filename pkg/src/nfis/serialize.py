"""JSON model files and ensemble manifests.

Floats are written with ``repr`` precision by :mod:`json`, so a
save/load cycle reproduces predictions bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .ensemble import Ensemble, EnsembleMember, RfNtskCombiner
from .forest import ForestParams, RandomForest, RegressionTree
from .fuzzy_core import AntecedentRule
from .nmr import NmrModel, NmrRule
from .ntsk import NtskModel, NtskRule

FORMAT = "nfis-model"
VERSION = 1


def _ranges(rs):
    return [[float(lo), float(hi)] for lo, hi in rs]


def model_to_dict(model) -> dict:
    base = {
        "format": FORMAT,
        "version": VERSION,
        "R_max": model.R_max,
        "feature_mask": [int(b) for b in model.feature_mask],
        "attribute_names": model.attribute_names,
        "target_name": model.target_name,
        "ranges": _ranges(model.ranges),
    }
    if isinstance(model, NmrModel):
        base.update(kind="NMR", IS=model.IS, y_min=model.y_min, y_max=model.y_max, rules=[{
            "means": r.antecedent.means.tolist(),
            "stds": r.antecedent.stds.tolist(),
            "consequent_mean": r.consequent_mean,
            "consequent_std": r.consequent_std,
            "range": list(r.range),
            "support": r.support,
        } for r in model.rules])
    elif isinstance(model, NtskModel):
        base.update(kind="NTSK", solver=model.solver, lam=model.lam, delta_min=model.delta_min,
                    delta_max=model.delta_max, rules=[{
                        "means": r.antecedent.means.tolist(),
                        "stds": r.antecedent.stds.tolist(),
                        "theta": r.theta.tolist(),
                        "variation_range": list(r.variation_range),
                        "P": r.P.tolist(),
                        "support": r.support,
                    } for r in model.rules])
    else:
        raise TypeError(f"cannot serialize {type(model).__name__} as a single rule-based model")
    return base


def model_from_dict(d: dict):
    if d.get("format") != FORMAT:
        raise ValueError("not an nfis model file")
    mask = np.array(d["feature_mask"], dtype=bool)
    ranges = [tuple(r) for r in d["ranges"]]
    if d["kind"] == "NMR":
        rules = [NmrRule(AntecedentRule(r["means"], r["stds"]), r["consequent_mean"], r["consequent_std"],
                         tuple(r["range"]), r["support"]) for r in d["rules"]]
        return NmrModel(rules, d["R_max"], d["IS"], d["y_min"], d["y_max"], mask,
                        d["attribute_names"], d["target_name"], ranges)
    if d["kind"] == "NTSK":
        rules = [NtskRule(AntecedentRule(r["means"], r["stds"]), np.array(r["theta"]),
                          tuple(r["variation_range"]), np.array(r["P"]), r["support"]) for r in d["rules"]]
        return NtskModel(rules, d["R_max"], d["solver"], d["lam"], mask, d["delta_min"], d["delta_max"],
                         d["attribute_names"], d["target_name"], ranges)
    raise ValueError(f"unknown model kind {d['kind']!r}")


def forest_to_dict(forest: RandomForest) -> dict:
    return {
        "params": vars(forest.params),
        "seeds": forest.seeds,
        "trees": [t.to_dict() for t in forest.trees],
    }


def forest_from_dict(d: dict) -> RandomForest:
    params = ForestParams(**d["params"])
    trees = [RegressionTree.from_dict(t, max_depth=params.max_depth, min_samples_leaf=params.min_samples_leaf)
             for t in d["trees"]]
    return RandomForest(trees, d["seeds"], params)


def save_model(model, path, extra=None):
    d = model_to_dict(model)
    if extra:
        d["extra"] = extra
    Path(path).write_text(json.dumps(d, indent=1))


def load_model(path):
    d = json.loads(Path(path).read_text())
    return model_from_dict(d), d.get("extra", {})


def save_ensemble(ens: Ensemble, directory):
    """Write ``manifest.json`` plus one model file per member into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, m in enumerate(ens.members):
        fname = f"member_{i:03d}.json"
        save_model(m.model, directory / fname)
        entries.append({"mask": [int(b) for b in m.mask], "model": fname, "val_error": m.val_error,
                        "candidate_errors": m.candidate_errors})
    manifest = {"format": "nfis-ensemble", "version": VERSION, "model_kind": ens.model_kind,
                "z": ens.z, "combination": ens.combination, "members": entries}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=1))


def load_ensemble(directory) -> Ensemble:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("format") != "nfis-ensemble":
        raise ValueError("not an nfis ensemble manifest")
    members = []
    for e in manifest["members"]:
        model, _ = load_model(directory / e["model"])
        members.append(EnsembleMember(np.array(e["mask"], dtype=bool), model, e["val_error"], e["candidate_errors"]))
    return Ensemble(manifest["model_kind"], members, manifest["z"], manifest["combination"])


def save_rf_ntsk(comb: RfNtskCombiner, directory):
    directory = Path(directory)
    save_ensemble(comb.r_ntsk, directory / "r_ntsk")
    (directory / "forest.json").write_text(json.dumps(forest_to_dict(comb.forest)))
    meta = {"format": "nfis-rf-ntsk", "version": VERSION, "eps_rf": comb.eps_rf, "eps_rntsk": comb.eps_rntsk,
            "forest": "forest.json", "r_ntsk": "r_ntsk"}
    (directory / "manifest.json").write_text(json.dumps(meta, indent=1))


def load_rf_ntsk(directory) -> RfNtskCombiner:
    directory = Path(directory)
    meta = json.loads((directory / "manifest.json").read_text())
    forest = forest_from_dict(json.loads((directory / meta["forest"]).read_text()))
    return RfNtskCombiner(forest, load_ensemble(directory / meta["r_ntsk"]), meta["eps_rf"], meta["eps_rntsk"])
