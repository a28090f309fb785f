"""Gaussian fuzzy sets, rule antecedents and normalized firing degrees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RELATIVE_SIGMA_FLOOR = 1e-6
ABSOLUTE_SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianSet:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError(f"std must be positive, got {self.std}")


@dataclass(frozen=True, eq=False)
class AntecedentRule:
    """One Gaussian set per (selected) attribute, stored column-wise."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float).ravel()
        stds = np.asarray(self.stds, dtype=float).ravel()
        if means.shape != stds.shape:
            raise ValueError("means and stds differ in length")
        if np.any(stds <= 0):
            raise ValueError("all stds must be positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @classmethod
    def from_sets(cls, sets):
        return cls([s.mean for s in sets], [s.std for s in sets])

    @property
    def sets(self) -> list[GaussianSet]:
        return [GaussianSet(float(m), float(s)) for m, s in zip(self.means, self.stds)]

    def __len__(self) -> int:
        return self.means.size


def sigma_floor(amplitude):
    """Smallest admissible std per attribute, from the training amplitude."""
    amplitude = np.asarray(amplitude, dtype=float)
    return np.where(amplitude > 0, RELATIVE_SIGMA_FLOOR * amplitude, ABSOLUTE_SIGMA_FLOOR)


def estimate_antecedent(X, floor) -> AntecedentRule:
    """Per-attribute mean and population std of the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return AntecedentRule(X.mean(axis=0), np.maximum(X.std(axis=0), floor))


def membership(x: float, s: GaussianSet) -> float:
    return float(np.exp(-0.5 * ((x - s.mean) / s.std) ** 2))


def stack_rules(rules):
    """(R, p) arrays of means and stds for a list of antecedents."""
    means = np.vstack([r.means for r in rules])
    stds = np.vstack([r.stds for r in rules])
    return means, stds


def log_activation(X, means, stds):
    """Log of the product of memberships, shape (n_samples, n_rules)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != means.shape[1]:
        raise ValueError(f"input has {X.shape[1]} attributes, rules expect {means.shape[1]}")
    z = (X[:, None, :] - means[None, :, :]) / stds[None, :, :]
    return -0.5 * np.einsum("nrp,nrp->nr", z, z)


def normalize_log(log_act):
    """Normalize log-activations row-wise so each row sums to one.

    Subtracting the row maximum first means a query far from every rule
    still yields finite weights instead of 0/0.
    """
    shifted = log_act - log_act.max(axis=-1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=-1, keepdims=True)


def firing_matrix(X, means, stds):
    return normalize_log(log_activation(X, means, stds))


def firing_degrees(x, rules):
    """Normalized firing degree of every rule for a single input vector."""
    if len(rules) < 1:
        raise ValueError("at least one rule is required")
    x = np.asarray(x, dtype=float).ravel()
    means, stds = stack_rules(rules)
    return firing_matrix(x[None, :], means, stds)[0]
