"""New Mamdani Regressor.

Rules come from splitting the training-target amplitude into ``R_max``
equal-width intervals; every sample joins the rule whose interval holds its
target. Antecedents are Gaussian sets estimated from the rule's samples and
the output is the firing-degree-weighted mean of the consequent means.

The binning helpers here are shared with :mod:`nfis.ntsk`, which applies
them to one-step target variations instead of the target itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DataError
from .fuzzy_core import AntecedentRule, estimate_antecedent, firing_matrix, sigma_floor, stack_rules


def interval_size(y_min: float, y_max: float, R_max: int) -> float:
    if R_max < 1:
        raise ValueError("R_max must be >= 1")
    if not y_max > y_min:
        raise DataError("constant target: amplitude is zero")
    return (y_max - y_min) / R_max


def rule_ranges(y_min: float, IS: float, R_max: int, y_max: float | None = None) -> list[tuple[float, float]]:
    """Contiguous intervals ``[y_min + (i-1) IS, y_min + i IS]`` for ``i = 1..R_max``.

    Passing ``y_max`` pins the last upper edge to it exactly, so the
    intervals partition the amplitude without round-off gaps.
    """
    if not IS > 0:
        raise ValueError("IS must be positive")
    edges = [y_min + i * IS for i in range(R_max + 1)]
    if y_max is not None:
        edges[-1] = y_max
    return [(edges[i], edges[i + 1]) for i in range(R_max)]


def assign_rule(y: float, y_min: float, y_max: float, IS: float, R_max: int) -> int:
    """1-based rule index for a target value.

    Values at or above ``y_max`` go to ``R_max``; values below ``y_min``
    clamp to rule 1.
    """
    if y >= y_max:
        return R_max
    idx = math.floor((y - y_min) / IS) + 1
    return min(max(idx, 1), R_max)


def assign_rules(y, y_min, y_max, IS, R_max):
    """Vectorized :func:`assign_rule`."""
    y = np.asarray(y, dtype=float)
    idx = np.floor((y - y_min) / IS).astype(np.int64) + 1
    idx = np.clip(idx, 1, R_max)
    return np.where(y >= y_max, R_max, idx)


def _check_mask(mask, n_features):
    if mask is None:
        return np.ones(n_features, dtype=bool)
    mask = np.asarray(mask, dtype=bool).ravel()
    if mask.size != n_features:
        raise ValueError(f"feature mask has {mask.size} entries for {n_features} attributes")
    if not mask.any():
        raise ValueError("feature mask selects no attribute")
    return mask


@dataclass(frozen=True, eq=False)
class NmrRule:
    antecedent: AntecedentRule
    consequent_mean: float
    consequent_std: float
    range: tuple[float, float]
    support: int


@dataclass(frozen=True, eq=False)
class NmrModel:
    rules: list[NmrRule]
    R_max: int
    IS: float
    y_min: float
    y_max: float
    feature_mask: np.ndarray
    attribute_names: list[str] | None = None
    target_name: str = "y"
    ranges: list[tuple[float, float]] = field(default_factory=list)

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    @property
    def n_features_in(self) -> int:
        return self.feature_mask.size

    @cached_property
    def _stacked(self):
        means, stds = stack_rules([r.antecedent for r in self.rules])
        outputs = np.array([r.consequent_mean for r in self.rules])
        return means, stds, outputs

    def _select(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_in:
            raise ValueError(f"input has {X.shape[1]} attributes, model expects {self.n_features_in}")
        return X[:, self.feature_mask]

    def firing(self, X):
        means, stds, _ = self._stacked
        return firing_matrix(self._select(X), means, stds)

    def predict(self, X):
        """Defuzzified outputs for the rows of ``X`` (all ``n_features_in`` columns)."""
        w = self.firing(X)
        outputs = self._stacked[2]
        return (w @ outputs) / w.sum(axis=1)


def fit_nmr(X, y, rules=5, feature_mask=None, attribute_names=None, target_name="y") -> NmrModel:
    """Fit an NMR with at most ``rules`` rules; empty target bins are dropped."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DataError("X must be 2-D with one row per target value")
    if y.size < 1:
        raise DataError("empty dataset")
    R_max = int(rules)
    mask = _check_mask(feature_mask, X.shape[1])
    Xs = X[:, mask]

    y_min, y_max = float(y.min()), float(y.max())
    IS = interval_size(y_min, y_max, R_max)
    ranges = rule_ranges(y_min, IS, R_max, y_max)
    labels = assign_rules(y, y_min, y_max, IS, R_max)
    floor = sigma_floor(Xs.max(axis=0) - Xs.min(axis=0))
    y_floor = float(sigma_floor(y_max - y_min))

    fitted = []
    for i in range(1, R_max + 1):
        members = labels == i
        if not members.any():
            continue
        yi = y[members]
        fitted.append(NmrRule(
            antecedent=estimate_antecedent(Xs[members], floor),
            consequent_mean=float(yi.mean()),
            consequent_std=max(float(yi.std()), y_floor),
            range=ranges[i - 1],
            support=int(members.sum()),
        ))

    names = None
    if attribute_names is not None:
        names = [n for n, keep in zip(attribute_names, mask) if keep]
    return NmrModel(fitted, R_max, IS, y_min, y_max, mask, names, target_name, ranges)


def predict_nmr(model: NmrModel, x) -> float:
    return float(model.predict(np.asarray(x, dtype=float)[None, :])[0])
