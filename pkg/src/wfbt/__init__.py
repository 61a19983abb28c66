"""Walk-forward backtesting engine for ARIMA, LSTM, and hybrid LSTM-ARIMA
trading strategies with a risk-adjusted evaluation suite."""

__version__ = "0.1.0"
