"""Self-contained OHLCV forecasting toolkit.

Four model families behind one backtesting harness: a persistence
baseline, a from-scratch multistep LSTM, an additive trend/seasonality
model with optional boosted-tree residual correction, and seasonal
ARIMA fit by conditional sum of squares.  A small HMM pipeline turns
news text into a daily sentiment regressor.

The heavier numerics stay in their own modules (`stockcast.lstm`,
`stockcast.additive`, `stockcast.boosting`, `stockcast.sarima`,
`stockcast.sentiment`); this namespace re-exports the everyday surface.
"""

from .config import RunConfig, load_config, parse_config
from .errors import ConfigError, DataError, FetchError, ModelError, StockcastError
from .evaluation import (
    ComparisonReport,
    ModelSpec,
    build_report,
    report_csv,
    report_json,
    rmse,
    run_backtest,
)
from .market_data import (
    OhlcvBar,
    OhlcvSeries,
    fetch_remote,
    parse_csv,
    rolling_splits,
    serialize_csv,
)
from .sarima import SarimaOrder
from .sentiment import HmmModel, SentimentSeries, align_sentiment, score_documents, viterbi
from .tuning import SearchParam, SearchSpace, grid_optimize, stepwise_optimize

__version__ = "0.1.0"

__all__ = [
    "ComparisonReport",
    "ConfigError",
    "DataError",
    "FetchError",
    "HmmModel",
    "ModelError",
    "ModelSpec",
    "OhlcvBar",
    "OhlcvSeries",
    "RunConfig",
    "SarimaOrder",
    "SearchParam",
    "SearchSpace",
    "SentimentSeries",
    "StockcastError",
    "align_sentiment",
    "build_report",
    "fetch_remote",
    "grid_optimize",
    "load_config",
    "parse_config",
    "parse_csv",
    "report_csv",
    "report_json",
    "rmse",
    "rolling_splits",
    "run_backtest",
    "score_documents",
    "serialize_csv",
    "stepwise_optimize",
    "viterbi",
]
