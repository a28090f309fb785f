"""Data-driven fuzzy inference systems (NMR, NTSK) with genetic and ensemble variants."""

from .dataset import RegressionDataset, TimeSeriesFrame, chronological_split, load_csv, make_supervised
from .ensemble import Ensemble, RfNtskCombiner, fit_random_ensemble, fit_rf_ntsk, rf_ntsk_combine
from .errors import ConfigError, DataError, NfisError, NumericalError
from .forest import RandomForest, fit_random_forest
from .genetic import GaConfig, run_ga
from .metrics import mape, ndei, nrmse, rmse
from .nmr import NmrModel, fit_nmr
from .ntsk import NtskModel, fit_ntsk

__version__ = "0.1.0"
