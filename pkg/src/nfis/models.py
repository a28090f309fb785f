"""Uniform entry point for fitting the single rule-based models."""

from __future__ import annotations

from .nmr import fit_nmr
from .ntsk import fit_ntsk

BASE_KINDS = ("NMR", "NTSK-RLS", "NTSK-wRLS")
BASE_PARAMS = {"NMR": {"rules"}, "NTSK-RLS": {"rules", "lam"}, "NTSK-wRLS": {"rules", "lam"}}


def check_params(kind, params):
    if kind not in BASE_KINDS:
        raise ValueError(f"unknown base model kind {kind!r}; expected one of {BASE_KINDS}")
    unknown = set(params) - BASE_PARAMS[kind]
    if unknown:
        raise ValueError(f"unknown hyperparameters for {kind}: {sorted(unknown)}")


def fit_base(kind, X, y, params=None, feature_mask=None, attribute_names=None, target_name="y"):
    """Fit ``kind`` (NMR, NTSK-RLS or NTSK-wRLS) with hyperparameters ``params``."""
    params = dict(params or {})
    check_params(kind, params)
    if kind == "NMR":
        return fit_nmr(X, y, rules=params.get("rules", 5), feature_mask=feature_mask,
                       attribute_names=attribute_names, target_name=target_name)
    solver = kind.split("-", 1)[1]
    return fit_ntsk(X, y, rules=params.get("rules", 5), solver=solver, lam=params.get("lam", 1.0),
                    feature_mask=feature_mask, attribute_names=attribute_names, target_name=target_name)
