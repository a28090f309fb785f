"""CSV ingestion and one-step-ahead supervised datasets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError


@dataclass(frozen=True)
class TimeSeriesFrame:
    columns: dict[str, np.ndarray]
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise DataError("columns have unequal lengths")
        for name, values in self.columns.items():
            if np.isnan(values).any():
                raise DataError(f"column {name!r} contains NaN")
        if self.timestamps is not None:
            if len(self.timestamps) != len(self):
                raise DataError("timestamps length does not match columns")
            steps = np.diff(self.timestamps)
            zero = np.timedelta64(0) if np.issubdtype(steps.dtype, np.timedelta64) else 0
            if not np.all(steps > zero):
                raise DataError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @property
    def names(self) -> list[str]:
        return list(self.columns)


@dataclass(frozen=True)
class RegressionDataset:
    """Predictor matrix ``X`` (samples x attributes) aligned with target ``y``."""

    X: np.ndarray
    y: np.ndarray
    attribute_names: list[str]
    target_name: str = "y"
    timestamps: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise DataError("X must be two-dimensional")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]} values")
        if X.shape[1] < 1:
            raise DataError("dataset needs at least one attribute")
        names = list(self.attribute_names)
        if len(names) != X.shape[1]:
            raise DataError("attribute_names length does not match X columns")
        if len(set(names)) != len(names):
            raise DataError("attribute names must be unique")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "attribute_names", names)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, rows: slice) -> RegressionDataset:
        ts = None if self.timestamps is None else self.timestamps[rows]
        return RegressionDataset(self.X[rows], self.y[rows], self.attribute_names, self.target_name, ts)

    def to_csv(self, path: str | Path) -> None:
        df = pd.DataFrame(self.X, columns=self.attribute_names)
        df[self.target_name] = self.y
        if self.timestamps is not None:
            df.insert(0, "timestamp", self.timestamps)
        df.to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_csv(cls, path: str | Path, target_name: str) -> RegressionDataset:
        df = pd.read_csv(path, float_precision="round_trip")
        ts = None
        if "timestamp" in df.columns:
            ts = pd.to_datetime(df.pop("timestamp")).to_numpy()
        y = df.pop(target_name).to_numpy(dtype=float)
        return cls(df.to_numpy(dtype=float), y, list(df.columns), target_name, ts)


def load_csv(path, target_column, drop_na=True, time_column=None, columns=None):
    """Read a comma-separated file into a :class:`TimeSeriesFrame`.

    Parameters
    ----------
    path : str or Path
        CSV with a header row.
    target_column : str
        Must appear in the header.
    drop_na : bool, default=True
        Drop every row holding a missing value. When False, missing values
        raise :class:`DataError`.
    time_column : str, optional
        Column parsed as timestamps and excluded from the numeric columns.
    columns : list of str, optional
        Restrict the numeric columns to this subset (the target is always kept).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    df = pd.read_csv(path, sep=",", decimal=".", encoding="utf-8", skipinitialspace=True,
                     float_precision="round_trip")
    if target_column not in df.columns:
        raise DataError(f"target column absent: {target_column!r}")
    if time_column is not None and time_column not in df.columns:
        raise DataError(f"time column absent: {time_column!r}")

    numeric = [c for c in df.columns if c != time_column]
    if columns is not None:
        missing = [c for c in columns if c not in df.columns]
        if missing:
            raise DataError(f"columns absent: {missing}")
        numeric = [c for c in numeric if c in columns or c == target_column]
    df = df[numeric + ([time_column] if time_column else [])]

    for c in numeric:
        # Blank cells are already NaN; anything else non-numeric is an error.
        converted = pd.to_numeric(df[c], errors="coerce")
        bad = converted.isna() & df[c].notna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataError(f"non-numeric cell in column {c!r} at data row {row + 1}: {df[c].iloc[row]!r}")
        df[c] = converted

    if drop_na:
        df = df.dropna(axis=0, how="any")
    elif df.isna().any().any():
        raise DataError("missing values present and drop_na is off")

    timestamps = None
    if time_column is not None:
        timestamps = pd.to_datetime(df[time_column]).to_numpy()
    cols = {c: df[c].to_numpy(dtype=float) for c in numeric}
    return TimeSeriesFrame(cols, timestamps)


def make_supervised(frame, target, horizon=1, lags=0):
    """Pair attributes at time ``k`` with the target at ``k + horizon``.

    With ``lags=L`` every attribute is additionally replicated at
    ``k-1 .. k-L`` (columns suffixed ``_lag1`` ...), which costs the first
    ``L`` rows.
    """
    if horizon < 1:
        raise DataError("horizon must be >= 1")
    if lags < 0:
        raise DataError("lags must be >= 0")
    if target not in frame.columns:
        raise DataError(f"target column absent: {target!r}")
    T = len(frame)
    if T < horizon + lags + 1:
        raise DataError(f"frame too short: {T} rows for horizon {horizon} and {lags} lags")

    n = T - horizon - lags
    blocks, names = [], []
    for name, values in frame.columns.items():
        blocks.append(values[lags:lags + n])
        names.append(name)
    for lag in range(1, lags + 1):
        for name, values in frame.columns.items():
            blocks.append(values[lags - lag:lags - lag + n])
            names.append(f"{name}_lag{lag}")
    X = np.column_stack(blocks)
    y = frame.columns[target][lags + horizon:lags + horizon + n]
    ts = None if frame.timestamps is None else frame.timestamps[lags:lags + n]
    return RegressionDataset(X, y, names, target, ts)


def split_point(n, fraction):
    # round() guards against e.g. 0.29 * 100 == 28.999999999999996
    return math.floor(round(fraction * n, 9))


def chronological_split(ds, train_fraction=0.8):
    """First ``floor(fraction * T)`` samples train, the rest test. No shuffling."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must lie in (0, 1)")
    cut = split_point(len(ds), train_fraction)
    if cut < 1 or cut >= len(ds):
        raise DataError(f"split of {len(ds)} samples at fraction {train_fraction} leaves an empty side")
    return ds.subset(slice(0, cut)), ds.subset(slice(cut, None))


def holdout_tail(ds, fraction=0.25):
    """Chronological (fit, validation) split keeping the last ``fraction`` for validation."""
    n_val = max(1, math.ceil(round(fraction * len(ds), 9)))
    if len(ds) - n_val < 1:
        raise DataError(f"{len(ds)} samples cannot be split into fit and validation parts")
    return ds.subset(slice(0, len(ds) - n_val)), ds.subset(slice(len(ds) - n_val, None))
