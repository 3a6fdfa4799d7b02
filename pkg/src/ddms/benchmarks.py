"""Expanding-window one-step variance forecasts for DDMS and Garch models.

At origin ``t`` a forecaster sees ``y[:t]`` only and predicts the variance of
``y[t]``. Parameters are refitted every ``refit_every`` origins (``0`` fits
once); between refits the forecast still moves through the filtered state.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import estimate
from .errors import DomainError, EstimationFailed
from .filtering import run_filter
from .forecast import forecast_sigma2, forecast_states
from .links import LinkKind
from .models import family_class, garch_filter

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowPlan:
    n: int
    oos_start: int
    refit_every: int = 1
    oos_end: int | None = None  # exclusive; defaults to n
    min_presample: int = 200

    def __post_init__(self):
        end = self.n if self.oos_end is None else self.oos_end
        if not self.min_presample <= self.oos_start < end <= self.n:
            raise DomainError(f"need {self.min_presample} <= oos_start < oos_end <= n, got "
                              f"oos_start={self.oos_start}, oos_end={end}, n={self.n}")
        if self.refit_every < 0:
            raise DomainError("refit_every must be >= 0")

    @property
    def origins(self) -> np.ndarray:
        return np.arange(self.oos_start, self.n if self.oos_end is None else self.oos_end)

    def refit_at(self, i: int) -> bool:
        """Whether the ``i``-th origin (counting from zero) triggers a fit."""
        return i == 0 if self.refit_every == 0 else i % self.refit_every == 0


class DDMSForecaster:
    """Duration-dependent model; each refit is warm-started at the previous estimate."""

    def __init__(self, link: str = "ao", tau: int = 5, family: str = "duration-vol", seed: int = 0,
                 start_config=None, local_config=None, warm_start: bool = True):
        self.link = LinkKind(link)
        self.tau = tau
        self.family = family
        self.seed = seed
        self.start_config = start_config
        self.local_config = local_config
        self.warm_start = warm_start
        self.name = f"DDMS-{self.link.value}-tau{tau}"

    def fit(self, y, previous=None):
        extra = previous.theta_hat if (self.warm_start and previous is not None) else None
        return estimate.fit(y, self.family, self.link, self.tau, self.start_config, self.local_config,
                            seed=self.seed, extra_starts=extra)

    def forecast(self, fitted, y) -> float:
        model = family_class(self.family).from_vector(fitted.theta_hat, self.tau, self.link)
        xi = run_filter(model, y).filtered[-1]
        return float(forecast_sigma2(model, forecast_states(model.transition(), xi, 1)[0]))

    @staticmethod
    def summary(fitted) -> dict:
        return {"loglik": fitted.loglik, "lambda_hat": fitted.lambda_hat, "n_starts_used": fitted.n_starts_used}


class GarchForecaster:
    """Garch(1,1) for ``k=1`` and the two-regime variant for ``k=2``."""

    def __init__(self, k: int = 1):
        self.k = k
        self.name = "Garch" if k == 1 else "MS-Garch"

    def fit(self, y, previous=None):
        starts = None
        if previous is not None:
            v = float(np.var(y))
            base = [(0.05, 0.90), (0.10, 0.80)]
            if self.k == 1:
                defaults = [[v * (1 - a - b), a, b] for a, b in base]
            else:
                defaults = [[0.5 * v * (1 - a - b), a, b, 2 * v * (1 - a - b), a, b, 0.95, 0.95] for a, b in base]
            starts = [previous.params.to_vector()] + defaults
        return estimate.fit_garch(y, self.k, starts)

    def forecast(self, fitted, y) -> float:
        return garch_filter(fitted.params, y).next_variance

    @staticmethod
    def summary(fitted) -> dict:
        return {"loglik": fitted.loglik, "converged": fitted.converged}


@dataclass
class ExpandingResult:
    name: str
    origins: np.ndarray
    sigma2_hat: np.ndarray  # NaN where the window failed
    failed: np.ndarray
    windows: list = field(default_factory=list)

    @property
    def lambda_path(self) -> np.ndarray:
        return np.array([w.get("lambda_hat") if w.get("lambda_hat") is not None else np.nan
                         for w in self.windows if w.get("refit")])


def expanding_forecasts(y, forecaster, plan: WindowPlan) -> ExpandingResult:
    """One-step forecasts at every origin of ``plan``; failed windows are flagged and left as NaN."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != plan.n:
        raise DomainError(f"plan expects {plan.n} observations, got {y.shape[0]}")
    origins = plan.origins
    out = np.full(origins.size, np.nan)
    failed = np.zeros(origins.size, dtype=bool)
    windows = []
    fitted = previous = None
    for i, t in enumerate(origins):
        seen = y[:t].copy()
        rec = {"origin": int(t), "refit": False}
        if plan.refit_at(i) or fitted is None:
            rec["refit"] = True
            try:
                fitted = forecaster.fit(seen, previous)
                previous = fitted
                rec.update(forecaster.summary(fitted))
            except EstimationFailed as exc:
                log.warning("%s: fit failed at origin %d: %s", forecaster.name, t, exc)
                fitted = None
                failed[i] = True
                rec["error"] = str(exc)
                windows.append(rec)
                continue
        out[i] = forecaster.forecast(fitted, seen)
        windows.append(rec)
    return ExpandingResult(forecaster.name, origins, out, failed, windows)


def combine_forecasts(streams) -> np.ndarray:
    """Elementwise mean of equally long forecast streams."""
    streams = [np.asarray(s, dtype=float) for s in streams]
    if not streams:
        raise DomainError("need at least one forecast stream")
    if len({s.shape for s in streams}) != 1:
        raise DomainError("forecast streams must have equal length")
    return np.mean(np.vstack(streams), axis=0)


def common_support(*streams) -> np.ndarray:
    """Mask of periods where every stream has a finite forecast."""
    return np.all(np.isfinite(np.vstack([np.asarray(s, dtype=float) for s in streams])), axis=0)
