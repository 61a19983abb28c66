"""Significance tests for strategy-vs-benchmark daily returns.

Both tests are one-sided (upper tail): the paired t-test asks whether the
strategy's mean daily return exceeds the benchmark's, and the OLS alpha
test asks whether the regression intercept exceeds zero. The beta p-value
is also upper-tail, which is why strongly negative betas print p ~ 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .errors import DegenerateRegressor, LengthMismatch, ZeroVarianceDifferences


@dataclass(frozen=True)
class PairedTestResult:
    mean_diff: float
    t_stat: float
    p_value: float
    n: int


@dataclass(frozen=True)
class OlsAlphaResult:
    alpha: float
    se_alpha: float
    t_alpha: float
    p_alpha: float
    beta: float
    se_beta: float
    t_beta: float
    p_beta: float
    degenerate: bool = False

    def as_row(self) -> list[float]:
        return [self.alpha, self.se_alpha, self.t_alpha, self.p_alpha,
                self.beta, self.se_beta, self.t_beta, self.p_beta]


OLS_COLUMNS = ["alpha", "se_alpha", "t_alpha", "p_alpha",
               "beta", "se_beta", "t_beta", "p_beta"]


def t_upper_tail_p(t: float, df: int) -> float:
    """P(T_df > t) via the regularized incomplete beta function."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    half_tail = 0.5 * float(betainc(df / 2.0, 0.5, x))
    return half_tail if t >= 0 else 1.0 - half_tail


def _one_sided_p(estimate: float, se: float, df: int) -> tuple[float, float]:
    """(t, upper-tail p) for estimate/se; handles the zero-se degenerate case."""
    if se == 0.0:
        if estimate > 0:
            return math.inf, 0.0
        if estimate < 0:
            return -math.inf, 1.0
        return 0.0, 0.5
    t = estimate / se
    return t, t_upper_tail_p(t, df)


def paired_t_test(strategy_returns, benchmark_returns) -> PairedTestResult:
    """One-sided paired t-test of mean(strategy - benchmark) > 0."""
    a = np.asarray(strategy_returns, dtype=float)
    b = np.asarray(benchmark_returns, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"paired series differ in length: {a.size} vs {b.size}")
    if a.size < 2:
        raise LengthMismatch("paired t-test needs at least two pairs")
    d = a - b
    sd = float(np.std(d, ddof=1))
    # constant-to-rounding differences are degenerate, not a tiny t-stat
    scale = float(np.max(np.abs(d)))
    if sd == 0.0 or float(np.ptp(d)) <= 1e-12 * scale:
        raise ZeroVarianceDifferences("paired differences are constant")
    mean = float(np.mean(d))
    t = mean / (sd / math.sqrt(d.size))
    return PairedTestResult(mean, t, t_upper_tail_p(t, d.size - 1), d.size)


def ols_alpha(strategy_returns, benchmark_returns) -> OlsAlphaResult:
    """Simple OLS of strategy on benchmark returns with one-sided t-tests.

    Closed-form estimates; standard errors use the residual variance with
    n-2 degrees of freedom. Exactly collinear data (zero residual variance)
    is flagged degenerate with se = 0.
    """
    y = np.asarray(strategy_returns, dtype=float)
    x = np.asarray(benchmark_returns, dtype=float)
    if y.shape != x.shape:
        raise LengthMismatch(f"series differ in length: {y.size} vs {x.size}")
    n = y.size
    if n < 3:
        raise LengthMismatch("ols_alpha needs at least three observations")
    x_mean = float(np.mean(x))
    y_mean = float(np.mean(y))
    sxx = float(np.sum((x - x_mean) ** 2))
    if sxx == 0.0:
        raise DegenerateRegressor("benchmark returns have zero variance")
    beta = float(np.sum((x - x_mean) * (y - y_mean))) / sxx
    alpha = y_mean - beta * x_mean
    resid = y - alpha - beta * x
    s2 = float(np.sum(resid**2)) / (n - 2)
    # exactly collinear data leaves only rounding noise in the residuals
    syy = float(np.sum((y - y_mean) ** 2))
    degenerate = s2 == 0.0 or s2 <= 1e-24 * syy / (n - 2)
    if degenerate:
        s2 = 0.0
    se_beta = math.sqrt(s2 / sxx)
    se_alpha = math.sqrt(s2 * (1.0 / n + x_mean**2 / sxx))
    t_a, p_a = _one_sided_p(alpha, se_alpha, n - 2)
    t_b, p_b = _one_sided_p(beta, se_beta, n - 2)
    return OlsAlphaResult(alpha, se_alpha, t_a, p_a, beta, se_beta, t_b, p_b,
                          degenerate=degenerate)
