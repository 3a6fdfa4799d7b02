"""Multi-step state and variance forecasts, and the MAPE used to score them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import TransitionMatrix
from .errors import DomainError


@dataclass(frozen=True)
class ForecastPath:
    state_probs: np.ndarray  # (h_max, N)
    sigma2_hat: np.ndarray  # (h_max,)

    @property
    def horizons(self) -> np.ndarray:
        return np.arange(1, self.sigma2_hat.size + 1)

    def regime_probs(self) -> np.ndarray:
        n = self.state_probs.shape[1]
        return self.state_probs.reshape(-1, 2, n // 2).sum(axis=-1)


def forecast_states(P: TransitionMatrix | np.ndarray, xi, h: int) -> np.ndarray:
    """Row ``k - 1`` holds ``P**k @ xi`` for ``k = 1..h``."""
    M = P.matrix if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if h < 1:
        raise DomainError("horizon must be >= 1")
    if xi.shape != (M.shape[0],) or abs(xi.sum() - 1.0) > 1e-8:
        raise DomainError("xi must be a probability vector matching the chain")
    out = np.empty((h, xi.size))
    for k in range(h):
        xi = M @ xi
        out[k] = xi
    return out


def forecast_sigma2(model, state_probs) -> np.ndarray | float:
    """Expected conditional variance ``sum_j p_j * sd_j**2`` for one row or a matrix of rows."""
    p = np.asarray(state_probs, dtype=float)
    if p.shape[-1] != 2 * model.tau or np.any(p < -1e-12):
        raise DomainError("state probabilities do not match the model")
    v = p @ model.state_variances()
    return float(v) if np.ndim(v) == 0 else v


def forecast_path(model, xi, h: int, P=None) -> ForecastPath:
    P = model.transition() if P is None else P
    probs = forecast_states(P, xi, h)
    return ForecastPath(probs, forecast_sigma2(model, probs))


def mape(forecasts, truths, h: int | None = None) -> float:
    """Mean absolute percentage error over the first ``h`` elements."""
    f = np.asarray(forecasts, dtype=float)
    y = np.asarray(truths, dtype=float)
    if f.shape != y.shape:
        raise DomainError("forecasts and truths must have equal length")
    if h is not None:
        if not 1 <= h <= y.size:
            raise DomainError(f"h must lie in [1, {y.size}]")
        f, y = f[:h], y[:h]
    if np.any(y == 0):
        raise DomainError("MAPE undefined for a zero truth")
    return float(np.mean(np.abs((f - y) / y)))


def mape_curve(forecasts, truths) -> np.ndarray:
    """``MAPE(h)`` for every ``h = 1..len``."""
    return np.array([mape(forecasts, truths, h) for h in range(1, len(truths) + 1)])


def mape_difference(mape_logit, mape_ao):
    """``D = MAPE_logit - MAPE_ao``; positive favours the Aranda-Ordaz link."""
    return np.asarray(mape_logit) - np.asarray(mape_ao) if np.ndim(mape_logit) else mape_logit - mape_ao
