"""Forecast error metrics, all in raw target units."""

from __future__ import annotations

import numpy as np

from .errors import DataError


def _pair(y, y_hat):
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.size} targets vs {y_hat.size} predictions")
    if y.size == 0:
        raise ValueError("empty vectors")
    return y, y_hat


def rmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def nrmse(y, y_hat) -> float:
    """RMSE divided by the amplitude (max - min) of ``y``."""
    y, y_hat = _pair(y, y_hat)
    amplitude = y.max() - y.min()
    if amplitude == 0:
        raise DataError("zero denominator: target amplitude is zero")
    return rmse(y, y_hat) / float(amplitude)


def ndei(y, y_hat) -> float:
    """RMSE divided by the population standard deviation of ``y``."""
    y, y_hat = _pair(y, y_hat)
    std = y.std()
    if std == 0:
        raise DataError("zero denominator: target standard deviation is zero")
    return rmse(y, y_hat) / float(std)


def mape_details(y, y_hat, zero_policy="skip", eps=1e-12):
    """MAPE (as a fraction) and the number of zero targets that were skipped.

    ``zero_policy="skip"`` drops samples whose target is exactly zero;
    ``"epsilon"`` divides by ``max(|y|, eps)`` instead.
    """
    y, y_hat = _pair(y, y_hat)
    err = np.abs(y - y_hat)
    denom = np.abs(y)
    if zero_policy == "skip":
        keep = denom != 0
        skipped = int((~keep).sum())
        if not keep.any():
            raise DataError("every target is zero; MAPE undefined")
        return float(np.mean(err[keep] / denom[keep])), skipped
    if zero_policy == "epsilon":
        return float(np.mean(err / np.maximum(denom, eps))), 0
    raise ValueError(f"unknown zero_policy {zero_policy!r}")


def mape(y, y_hat, zero_policy="skip", eps=1e-12) -> float:
    return mape_details(y, y_hat, zero_policy, eps)[0]
