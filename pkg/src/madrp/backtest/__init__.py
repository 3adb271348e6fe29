"""Rolling-window backtests and out-of-sample performance metrics."""
from .engine import (BacktestResult, RollingConfig, metrics_table_csv, metrics_table_text,
                     rebalance_starts, run_backtest, wealth_csv)
from .metrics import (METRIC_NAMES, MetricSet, annual_mean, annual_std, drawdowns,
                      max_drawdown, metric_set, rachev, rank_strategies, sharpe, sortino,
                      tail_count, target_downside_deviation, turnover, ulcer_index)

__all__ = [
    "BacktestResult", "METRIC_NAMES", "MetricSet", "RollingConfig", "annual_mean",
    "annual_std", "drawdowns", "max_drawdown", "metric_set", "metrics_table_csv",
    "metrics_table_text", "rachev", "rank_strategies", "rebalance_starts", "run_backtest",
    "sharpe", "sortino", "tail_count", "target_downside_deviation", "turnover",
    "ulcer_index", "wealth_csv",
]
