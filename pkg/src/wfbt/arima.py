"""ARIMA(p,d,q) estimation by conditional least squares, order search, and
one-step forecasting.

The estimator minimizes the conditional sum of squared one-step errors on
the differenced series (first p values conditioned on, pre-sample errors
zeroed), equivalent to the conditional Gaussian likelihood. The MA terms
use the convention where theta coefficients enter with a plus sign.

Optimization is a deterministic quasi-Newton (BFGS) with central-difference
gradients, zero-initialized coefficients and the constant started at the
differenced-series mean, so identical inputs give bit-identical fits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .errors import AllFitsFailed, HistoryTooShort, NonConvergence, SeriesTooShort

GRAD_TOL = 1e-6
MAX_ITER = 500
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class ArimaSpec:
    p: int
    d: int
    q: int

    @property
    def k(self) -> int:
        """Parameter count for the information criteria (constant + variance)."""
        return self.p + self.q + 2


@dataclass(frozen=True)
class ArimaFit:
    spec: ArimaSpec
    constant: float
    phi: np.ndarray
    theta: np.ndarray
    sigma2: float
    loglik: float
    aic: float
    bic: float
    residuals: np.ndarray  # burn-in removed; length n_obs
    n_obs: int
    warn_nonstationary: bool = False
    warn_noninvertible: bool = False

    def __post_init__(self):
        self.phi.flags.writeable = False
        self.theta.flags.writeable = False
        self.residuals.flags.writeable = False


@dataclass(frozen=True)
class OrderSearchResult:
    best: ArimaFit
    #: (spec, criterion value, converged) for every grid cell
    table: list[tuple[ArimaSpec, float, bool]]


@dataclass(frozen=True)
class ArimaSearchConfig:
    p_min: int = 0
    p_max: int = 6
    d: int = 1
    q_min: int = 0
    q_max: int = 6
    criterion: str = "AIC"  # or "BIC"


def difference(series, d: int):
    """Apply first differencing d times."""
    x = np.asarray(series, dtype=float)
    if x.size <= d:
        raise SeriesTooShort(f"cannot difference length {x.size} series {d} times")
    for _ in range(d):
        x = np.diff(x)
    return x


def _one_step(w: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """One-step errors of the ARMA recursion on the differenced series.

    Conditions on the first p observations; returns eps for t = p..n-1 with
    pre-sample errors implicitly zero (the IIR filter starts at rest).
    """
    p, q = phi.size, theta.size
    n = w.size
    u = w[p:] - c
    for i in range(1, p + 1):
        u = u - phi[i - 1] * w[p - i:n - i]
    if q == 0:
        return u
    return lfilter([1.0], np.concatenate(([1.0], theta)), u)


def _css_value(w: np.ndarray, params: np.ndarray, p: int, q: int) -> float:
    """Profiled negative log-likelihood (0.5*n*log(SSE/n)), scale-stable."""
    c = params[0]
    phi = params[1:1 + p]
    theta = params[1 + p:]
    with np.errstate(over="ignore", invalid="ignore"):
        eps = _one_step(w, c, phi, theta)
        sse = float(np.dot(eps, eps))
    if not math.isfinite(sse):
        return math.inf
    n = w.size - p
    return 0.5 * n * math.log(max(sse / n, _LOG_FLOOR))


def _central_grad(fun, x: np.ndarray) -> np.ndarray:
    g = np.zeros_like(x)
    for i in range(x.size):
        h = 1e-5 * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2 * h)
    return g


def _poly_root_warning(coeffs: np.ndarray, sign: float) -> bool:
    """True when 1 + sign*(a1 z + ... + ak z^k) has a root on/inside the unit circle."""
    if coeffs.size == 0:
        return False
    poly = np.concatenate(([1.0], sign * coeffs))  # ascending powers
    roots = np.roots(poly[::-1])
    return bool(roots.size and np.min(np.abs(roots)) <= 1.0 + 1e-8)


def _estimate(w: np.ndarray, p: int, q: int, d: int,
              x0: np.ndarray | None = None) -> np.ndarray:
    """BFGS minimization of the CSS objective on a differenced series."""
    if w.size < 10 * (p + q + 1):
        raise SeriesTooShort(
            f"differenced length {w.size} below 10*(p+q+1)={10 * (p + q + 1)}")
    if w.size <= p:
        raise SeriesTooShort("not enough observations after lag burn-in")

    def objective(x):
        return _css_value(w, x, p, q)

    if x0 is None:
        x0 = np.zeros(1 + p + q)
        x0[0] = float(np.mean(w))
    res = minimize(objective, x0, jac=lambda x: _central_grad(objective, x),
                   method="BFGS", options={"gtol": GRAD_TOL, "maxiter": MAX_ITER})
    x = res.x
    if not np.all(np.isfinite(x)):
        raise NonConvergence(f"ARIMA{(p, d, q)}: non-finite parameters")
    if not res.success:
        # BFGS reports precision loss when FD noise dominates near the
        # optimum; accept if the gradient is already essentially flat
        gnorm = float(np.max(np.abs(_central_grad(objective, x))))
        if not math.isfinite(gnorm) or gnorm > 1e-3:
            raise NonConvergence(
                f"ARIMA{(p, d, q)}: {res.message} (grad {gnorm:.2e})")
    return x


def fit(series, spec: ArimaSpec, _x0: np.ndarray | None = None) -> ArimaFit:
    """Estimate an ARIMA model by conditional least squares.

    Raises NonConvergence when the optimizer fails its gradient tolerance
    within the iteration cap; unit-circle AR/MA roots only set warning flags.
    """
    w = difference(series, spec.d)
    p, q = spec.p, spec.q
    x = _estimate(w, p, q, spec.d, x0=_x0)
    c = float(x[0])
    phi = x[1:1 + p].copy()
    theta = x[1 + p:].copy()
    eps = _one_step(w, c, phi, theta)
    n_obs = eps.size
    sigma2 = float(np.dot(eps, eps)) / n_obs
    loglik = -0.5 * n_obs * (math.log(2 * math.pi * max(sigma2, _LOG_FLOOR)) + 1.0)
    k = spec.k
    return ArimaFit(
        spec=spec,
        constant=c,
        phi=phi,
        theta=theta,
        sigma2=sigma2,
        loglik=loglik,
        aic=-2.0 * loglik + 2.0 * k,
        bic=-2.0 * loglik + k * math.log(n_obs),
        residuals=eps,
        n_obs=n_obs,
        warn_nonstationary=_poly_root_warning(phi, -1.0),
        warn_noninvertible=_poly_root_warning(theta, +1.0),
    )


def search_orders(series, p_range, d: int, q_range, criterion: str = "AIC") -> OrderSearchResult:
    """Fit every (p,d,q) on the grid and select the lowest-criterion fit.

    Grid criteria are evaluated on a common conditioning window (the grid's
    largest p), because likelihoods over different effective sample sizes
    are not comparable and would bias selection toward larger models. The
    winner is refit on the full window, so `best` carries its standalone
    statistics. Non-converged cells are recorded with converged=False and
    excluded from selection; ties break to smaller p+q, then smaller p, so
    the result is independent of grid enumeration order.
    """
    p_values = list(p_range)
    q_values = list(q_range)
    if not p_values or not q_values:
        raise ValueError("empty order range")
    crit_key = criterion.upper()
    if crit_key not in ("AIC", "BIC"):
        raise ValueError(f"unknown criterion {criterion!r}")

    w = difference(series, d)
    n_cond = max(p_values)
    table: list[tuple[ArimaSpec, float, bool]] = []
    candidates: list[tuple[float, int, int, int, ArimaSpec, np.ndarray]] = []
    for p in p_values:
        for q in q_values:
            spec = ArimaSpec(p, d, q)
            try:
                # trim so every cell conditions on the same n_cond values
                w_cell = w[n_cond - p:]
                x = _estimate(w_cell, p, q, d)
                eps = _one_step(w_cell, float(x[0]), x[1:1 + p], x[1 + p:])
            except (NonConvergence, SeriesTooShort):
                table.append((spec, math.nan, False))
                continue
            n = eps.size
            sigma2 = max(float(np.dot(eps, eps)) / n, _LOG_FLOOR)
            loglik = -0.5 * n * (math.log(2 * math.pi * sigma2) + 1.0)
            value = -2.0 * loglik + (2.0 * spec.k if crit_key == "AIC"
                                     else spec.k * math.log(n))
            table.append((spec, value, True))
            candidates.append((value, p + q, p, q, spec, x))
    if not candidates:
        raise AllFitsFailed("no order converged on the grid")
    candidates.sort(key=lambda t: t[:4])
    # refit the winner on the full window, warm-started at the selection
    # estimate; fall through to the next candidate if the refit diverges
    for value, _, _, _, spec, x in candidates:
        try:
            return OrderSearchResult(best=fit(series, spec, _x0=x), table=table)
        except NonConvergence:
            table[[t[0] for t in table].index(spec)] = (spec, value, False)
    raise AllFitsFailed("no selected order survived the full-window refit")


def search_from_config(series, cfg: ArimaSearchConfig) -> OrderSearchResult:
    return search_orders(series, range(cfg.p_min, cfg.p_max + 1), cfg.d,
                         range(cfg.q_min, cfg.q_max + 1), cfg.criterion)


def forecast_one(fit_: ArimaFit, history) -> float:
    """One-step-ahead forecast of the original (undifferenced) series.

    Runs the ARMA recursion with the frozen coefficients on the differenced
    history tail (errors re-filtered from the supplied history, so rolling
    forecasts need no mutable state), then integrates d times.
    """
    x = np.asarray(history, dtype=float)
    spec = fit_.spec
    if x.size < spec.p + spec.d:
        raise HistoryTooShort(
            f"need at least p+d={spec.p + spec.d} observations, got {x.size}")
    levels = [x]
    for _ in range(spec.d):
        levels.append(np.diff(levels[-1]))
    w = levels[-1]
    p, q = spec.p, spec.q
    eps_full = np.zeros(w.size)
    if w.size > p:
        eps_full[p:] = _one_step(w, fit_.constant, fit_.phi, fit_.theta)
    w_hat = fit_.constant
    for i in range(1, p + 1):
        w_hat += fit_.phi[i - 1] * w[w.size - i]
    for j in range(1, q + 1):
        if w.size - j >= 0:
            w_hat += fit_.theta[j - 1] * eps_full[w.size - j]
    # integrate back up through the retained level tails
    forecast = w_hat
    for level in reversed(levels[:-1]):
        forecast += level[-1]
    return float(forecast)


def residual_series(fit_: ArimaFit) -> np.ndarray:
    """In-sample one-step errors aligned to the original series length.

    Differencing and lag burn-in positions are zero-filled at the front.
    """
    pad = fit_.spec.d + fit_.spec.p
    out = np.zeros(pad + fit_.n_obs)
    out[pad:] = fit_.residuals
    return out
