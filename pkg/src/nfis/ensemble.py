"""Randomized fuzzy ensembles (R-NMR, R-NTSK) and the RF-NTSK combiner."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import holdout_tail
from .errors import NumericalError
from .forest import ForestParams, RandomForest, _as_seed, fit_random_forest
from .genetic import repair
from .metrics import rmse
from .models import BASE_KINDS, fit_base

VALIDATION_FRACTION = 0.25


@dataclass
class EnsembleParams:
    n_members: int = 10
    z: int = 5
    subset_prob: float = 0.5
    combination: str = "mean"

    def __post_init__(self):
        if self.n_members < 1 or self.z < 1:
            raise ValueError("n_members and z must be >= 1")
        if not 0.0 < self.subset_prob <= 1.0:
            raise ValueError("subset_prob must lie in (0, 1]")
        if self.combination not in ("mean", "error-weighted"):
            raise ValueError("combination must be 'mean' or 'error-weighted'")


@dataclass
class EnsembleMember:
    mask: np.ndarray
    model: object
    val_error: float
    candidate_errors: list[float] = field(default_factory=list)


@dataclass
class Ensemble:
    model_kind: str
    members: list[EnsembleMember]
    z: int
    combination: str = "mean"

    @property
    def n_members(self) -> int:
        return len(self.members)

    def member_predictions(self, X):
        return np.vstack([m.model.predict(X) for m in self.members])

    def weights(self):
        if self.combination == "mean":
            return np.full(self.n_members, 1.0 / self.n_members)
        inv = np.array([1.0 / max(m.val_error, 1e-300) for m in self.members])
        return inv / inv.sum()

    def predict(self, X):
        preds = self.member_predictions(X)
        if self.combination == "mean":
            return preds.mean(axis=0)
        return self.weights() @ preds


def _score(kind, fit_part, val_part, mask, params):
    try:
        model = fit_base(kind, fit_part.X, fit_part.y, params, feature_mask=mask)
        err = rmse(val_part.y, model.predict(val_part.X))
    except (ValueError, ArithmeticError, np.linalg.LinAlgError):
        return math.inf
    return err if math.isfinite(err) else math.inf


def fit_random_ensemble(model_kind, ds, params=None, model_params=None, rng=None) -> Ensemble:
    """Grow an ensemble one member per round.

    Each round draws ``z`` random attribute subsets (every attribute kept
    with probability ``subset_prob``), scores a candidate per subset on the
    chronological validation tail of ``ds`` and keeps the best one, refitted
    on all of ``ds``.
    """
    if model_kind not in BASE_KINDS:
        raise ValueError(f"unknown model kind {model_kind!r}")
    params = params or EnsembleParams()
    rng = np.random.default_rng(_as_seed(rng))
    fit_part, val_part = holdout_tail(ds, VALIDATION_FRACTION)
    p = ds.n_features

    members = []
    for _ in range(params.n_members):
        masks = [repair(rng.random(p) < params.subset_prob, rng) for _ in range(params.z)]
        errors = [_score(model_kind, fit_part, val_part, m, model_params) for m in masks]
        best = int(np.argmin(errors))
        if not math.isfinite(errors[best]):
            raise NumericalError("every candidate of an ensemble round failed to fit")
        model = fit_base(model_kind, ds.X, ds.y, model_params, feature_mask=masks[best],
                         attribute_names=ds.attribute_names, target_name=ds.target_name)
        members.append(EnsembleMember(masks[best], model, errors[best], errors))
    return Ensemble(model_kind, members, params.z, params.combination)


def predict_ensemble(e: Ensemble, x) -> float:
    return float(e.predict(np.asarray(x, dtype=float)[None, :])[0])


def rf_ntsk_combine(y_rf, y_rntsk, eps_rf, eps_rntsk):
    """Error-weighted average: each output is weighted by the *other* model's error.

    When both errors are zero the two outputs are averaged.
    """
    if eps_rf < 0 or eps_rntsk < 0:
        raise ValueError("errors must be non-negative")
    total = eps_rf + eps_rntsk
    w_rf, w_rntsk = (0.5, 0.5) if total == 0 else (eps_rntsk / total, eps_rf / total)
    return np.asarray(y_rf) * w_rf + np.asarray(y_rntsk) * w_rntsk


@dataclass
class RfNtskCombiner:
    forest: RandomForest
    r_ntsk: Ensemble
    eps_rf: float
    eps_rntsk: float

    def component_predictions(self, X):
        return self.forest.predict(X), self.r_ntsk.predict(X)

    def predict(self, X):
        y_rf, y_rn = self.component_predictions(X)
        return rf_ntsk_combine(y_rf, y_rn, self.eps_rf, self.eps_rntsk)


def fit_rf_ntsk(ds, ensemble_params=None, forest_params=None, model_kind="NTSK-wRLS",
                model_params=None, rng=None) -> RfNtskCombiner:
    """Fit RF and R-NTSK, estimate both errors on the validation tail, then refit on all of ``ds``."""
    forest_params = forest_params or ForestParams()
    seeds = np.random.SeedSequence(_as_seed(rng)).generate_state(2)
    rf_seed, ens_seed = int(seeds[0]), int(seeds[1])
    fit_part, val_part = holdout_tail(ds, VALIDATION_FRACTION)

    rf = fit_random_forest(fit_part.X, fit_part.y, forest_params, rf_seed)
    rn = fit_random_ensemble(model_kind, fit_part, ensemble_params, model_params, ens_seed)
    eps_rf = rmse(val_part.y, rf.predict(val_part.X))
    eps_rn = rmse(val_part.y, rn.predict(val_part.X))

    rf = fit_random_forest(ds.X, ds.y, forest_params, rf_seed)
    rn = fit_random_ensemble(model_kind, ds, ensemble_params, model_params, ens_seed)
    return RfNtskCombiner(rf, rn, eps_rf, eps_rn)
