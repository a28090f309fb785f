"""New Takagi-Sugeno-Kang model.

Rules are formed by equal-width binning of the one-step target variation
``y[k] - y[k-1]``; antecedents are Gaussian sets over each rule's samples and
consequents are affine functions of the selected attributes, estimated by
recursive least squares.

Two consequent estimators are available:

``RLS``
    each rule runs the recursion over its own (hard-assigned) samples.
``wRLS``
    each rule runs the recursion over every sample, with each update
    weighted by the rule's normalized firing degree for that sample.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DataError, NumericalError
from .fuzzy_core import AntecedentRule, estimate_antecedent, firing_matrix, sigma_floor, stack_rules
from .nmr import _check_mask, assign_rules, interval_size, rule_ranges

log = logging.getLogger(__name__)

SOLVERS = ("RLS", "wRLS")
DEFAULT_P0 = 1e8


def target_variations(y):
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 2:
        raise DataError("need at least two target values to compute variations")
    return np.diff(y)


def rls_update(theta, P, x_ext, y, weight=1.0, lam=1.0):
    """One exponentially weighted RLS step with observation weight ``weight``.

    Returns new ``(theta, P)``; the inputs are not modified. ``P`` is
    re-symmetrized after the update. Raises :class:`NumericalError` when the
    update is not finite, in which case the caller should reset ``P``.
    """
    if weight <= 0.0:
        return theta, P / lam
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        Px = P @ x_ext
        denom = lam / weight + x_ext @ Px
        gain = Px / denom
        theta = theta + gain * (y - x_ext @ theta)
        P = (P - np.outer(gain, Px)) / lam
    P = 0.5 * (P + P.T)
    if not (np.isfinite(theta).all() and np.isfinite(P).all()):
        raise NumericalError("non-finite RLS update")
    return theta, P


def run_rls(X_ext, y, weights=None, lam=1.0, P0=DEFAULT_P0):
    """Run :func:`rls_update` over the rows of ``X_ext`` starting at theta=0, P=P0*I."""
    n, d = X_ext.shape
    theta = np.zeros(d)
    P_init = P0 * np.eye(d)
    P = P_init
    for k in range(n):
        w = 1.0 if weights is None else float(weights[k])
        try:
            theta, P = rls_update(theta, P, X_ext[k], y[k], w, lam)
        except NumericalError:
            log.warning("ill-conditioned RLS state at sample %d; resetting P", k)
            P = P_init
            try:
                theta, P = rls_update(theta, P, X_ext[k], y[k], w, lam)
            except NumericalError:
                P = P_init
    return theta, P


def extend(X):
    X = np.atleast_2d(X)
    return np.hstack([np.ones((X.shape[0], 1)), X])


@dataclass(frozen=True, eq=False)
class NtskRule:
    antecedent: AntecedentRule
    theta: np.ndarray
    variation_range: tuple[float, float]
    P: np.ndarray
    support: int


@dataclass(frozen=True, eq=False)
class NtskModel:
    rules: list[NtskRule]
    R_max: int
    solver: str
    lam: float
    feature_mask: np.ndarray
    delta_min: float
    delta_max: float
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
        thetas = np.vstack([r.theta for r in self.rules])
        return means, stds, thetas

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

    def rule_outputs(self, X):
        """Affine output of every rule, shape (n_samples, n_rules)."""
        return extend(self._select(X)) @ self._stacked[2].T

    def predict(self, X):
        return np.sum(self.firing(X) * self.rule_outputs(X), axis=1)


def fit_ntsk(X, y, rules=5, solver="wRLS", lam=1.0, P0=DEFAULT_P0, feature_mask=None,
             attribute_names=None, target_name="y") -> NtskModel:
    """Fit an NTSK model with at most ``rules`` rules.

    Sample ``k`` is binned by the variation ``y[k] - y[k-1]``; the first
    sample has no predecessor and is binned as a zero variation.
    """
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}, got {solver!r}")
    if not 0.0 < lam <= 1.0:
        raise ValueError("forgetting factor must lie in (0, 1]")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DataError("X must be 2-D with one row per target value")
    R_max = int(rules)
    if R_max < 1:
        raise ValueError("rules must be >= 1")
    mask = _check_mask(feature_mask, X.shape[1])
    Xs = X[:, mask]

    dy = target_variations(y)
    delta = np.concatenate([[0.0], dy])
    d_min, d_max = float(dy.min()), float(dy.max())
    if d_max > d_min:
        IS = interval_size(d_min, d_max, R_max)
        ranges = rule_ranges(d_min, IS, R_max, d_max)
        labels = assign_rules(delta, d_min, d_max, IS, R_max)
    else:
        warnings.warn("target variation has zero amplitude; fitting a single rule", RuntimeWarning, stacklevel=2)
        ranges = [(d_min, d_max)]
        labels = np.ones(y.size, dtype=np.int64)

    floor = sigma_floor(Xs.max(axis=0) - Xs.min(axis=0))
    kept, antecedents = [], []
    for i in range(1, len(ranges) + 1):
        members = labels == i
        if members.any():
            kept.append(i)
            antecedents.append(estimate_antecedent(Xs[members], floor))

    Xe = extend(Xs)
    if solver == "wRLS":
        weights = firing_matrix(Xs, *stack_rules(antecedents))
    fitted = []
    for j, (i, ante) in enumerate(zip(kept, antecedents)):
        members = labels == i
        if solver == "RLS":
            theta, P = run_rls(Xe[members], y[members], None, lam, P0)
        else:
            theta, P = run_rls(Xe, y, weights[:, j], lam, P0)
        fitted.append(NtskRule(ante, theta, ranges[i - 1], P, int(members.sum())))

    names = None
    if attribute_names is not None:
        names = [n for n, keep in zip(attribute_names, mask) if keep]
    return NtskModel(fitted, R_max, solver, float(lam), mask, d_min, d_max, names, target_name, ranges)


def predict_ntsk(model: NtskModel, x) -> float:
    return float(model.predict(np.asarray(x, dtype=float)[None, :])[0])
