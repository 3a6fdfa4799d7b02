"""Observation models over the extended states, plus the Garch benchmarks.

Two duration-dependent specifications share the same chain:

* ``MeanSwitchParams`` -- regime-specific mean and standard deviation
  (bull/bear returns model);
* ``DurationVolParams`` -- zero-mean returns whose scale depends on regime and
  duration, ``sigma(S, d) = (omega_S + zeta_S * d) ** 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import ClassVar

import numpy as np

from . import chain
from .errors import DegenerateLikelihood, DomainError
from .links import LinkKind, LinkSpec, clamp_prob

LOG_2PI = np.log(2.0 * np.pi)
GAMMA_NAMES = ("gamma1_0", "gamma2_0", "gamma1_1", "gamma2_1")


def _gammas(g) -> tuple:
    g = tuple(float(v) for v in g)
    if len(g) != 4:
        raise DomainError("gammas must hold (gamma1_0, gamma2_0, gamma1_1, gamma2_1)")
    return g


def gaussian_logpdf(y, mean, sd):
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = (y - mean) / sd
        return -0.5 * LOG_2PI - np.log(sd) - 0.5 * z * z


class _DDMS:
    """Behaviour shared by the duration-dependent models."""

    family: ClassVar[str]
    core_names: ClassVar[tuple]

    def stay_table(self, clamp: bool = False) -> np.ndarray:
        stay = chain.stay_table(self.link, self.gammas, self.tau)
        return clamp_prob(stay) if clamp else stay

    def transition(self) -> chain.TransitionMatrix:
        return chain.build_transition_matrix(self.link, self.gammas, self.tau)

    @property
    def n_states(self) -> int:
        return 2 * self.tau

    @classmethod
    def param_names(cls, link: LinkSpec | LinkKind | str = LinkKind.LOGIT) -> tuple:
        kind = link.kind if isinstance(link, LinkSpec) else LinkKind(link)
        extra = ("lam",) if kind is LinkKind.ARANDA_ORDAZ else ()
        return cls.core_names + GAMMA_NAMES + extra

    def to_vector(self) -> np.ndarray:
        v = [getattr(self, k) for k in self.core_names] + list(self.gammas)
        if self.link.has_parameter:
            v.append(self.link.lam)
        return np.array(v, dtype=float)

    @classmethod
    def from_vector(cls, theta, tau: int, link: LinkSpec | LinkKind | str, **kw):
        theta = np.asarray(theta, dtype=float)
        kind = link.kind if isinstance(link, LinkSpec) else LinkKind(link)
        k = len(cls.core_names)
        expected = k + 4 + (kind is LinkKind.ARANDA_ORDAZ)
        if theta.shape != (expected,):
            raise DomainError(f"{cls.family} with {kind.value} link needs {expected} parameters")
        spec = LinkSpec(kind, theta[-1]) if kind is LinkKind.ARANDA_ORDAZ else LinkSpec(kind)
        core = dict(zip(cls.core_names, theta[:k]))
        return cls(**core, gammas=tuple(theta[k:k + 4]), link=spec, tau=tau, **kw)

    def replace(self, **changes):
        return replace(self, **changes)

    def density_vector(self, y_t: float) -> np.ndarray:
        return density_vector(self, y_t)


@dataclass(frozen=True)
class MeanSwitchParams(_DDMS):
    mu0: float
    mu1: float
    sigma0: float
    sigma1: float
    gammas: tuple = (0.0, 0.0, 0.0, 0.0)
    link: LinkSpec = field(default_factory=LinkSpec.logit)
    tau: int = 1

    family: ClassVar[str] = "mean-switching"
    core_names: ClassVar[tuple] = ("mu0", "mu1", "sigma0", "sigma1")

    def __post_init__(self):
        object.__setattr__(self, "gammas", _gammas(self.gammas))
        if not (self.sigma0 > 0 and self.sigma1 > 0):
            raise DomainError("state standard deviations must be positive")
        if self.tau < 1:
            raise DomainError("tau must be >= 1")

    def state_mean(self, regime: int, d: int) -> float:
        return self.mu1 if regime else self.mu0

    def state_sd(self, regime: int, d: int) -> float:
        return self.sigma1 if regime else self.sigma0

    def state_means(self) -> np.ndarray:
        return np.repeat([self.mu0, self.mu1], self.tau)

    def state_sds(self) -> np.ndarray:
        return np.repeat([self.sigma0, self.sigma1], self.tau)

    def state_variances(self) -> np.ndarray:
        return self.state_sds() ** 2

    def log_density_matrix(self, y) -> np.ndarray:
        """``(T, 2)`` log densities; the columns are regimes since duration plays no role."""
        y = np.asarray(y, dtype=float)[:, None]
        return gaussian_logpdf(y, np.array([self.mu0, self.mu1]), np.array([self.sigma0, self.sigma1]))


@dataclass(frozen=True)
class DurationVolParams(_DDMS):
    """Zero-mean model with duration-dependent scale.

    With ``literal=True`` (default) the standard deviation of ``Y_t`` is
    ``(omega + zeta * d) ** 2``; with ``literal=False`` that square is taken
    to be the variance instead.
    """

    omega0: float
    omega1: float
    zeta0: float
    zeta1: float
    gammas: tuple = (0.0, 0.0, 0.0, 0.0)
    link: LinkSpec = field(default_factory=LinkSpec.logit)
    tau: int = 1
    literal: bool = True

    family: ClassVar[str] = "duration-vol"
    core_names: ClassVar[tuple] = ("omega0", "omega1", "zeta0", "zeta1")

    def __post_init__(self):
        object.__setattr__(self, "gammas", _gammas(self.gammas))
        if self.tau < 1:
            raise DomainError("tau must be >= 1")

    def state_mean(self, regime: int, d: int) -> float:
        return 0.0

    def state_sd(self, regime: int, d: int) -> float:
        return state_sigma(self, regime, d) if self.literal else abs(self._level(regime, d))

    def _level(self, regime, d):
        omega = np.where(regime, self.omega1, self.omega0)
        zeta = np.where(regime, self.zeta1, self.zeta0)
        return omega + zeta * np.minimum(d, self.tau)

    def state_means(self) -> np.ndarray:
        return np.zeros(2 * self.tau)

    def state_sds(self) -> np.ndarray:
        lvl = self._level(chain.state_regimes(self.tau), chain.state_durations(self.tau))
        return lvl ** 2 if self.literal else np.abs(lvl)

    def state_variances(self) -> np.ndarray:
        return self.state_sds() ** 2

    def log_density_matrix(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)[:, None]
        return gaussian_logpdf(y, 0.0, self.state_sds()[None, :])


DDMSModel = MeanSwitchParams | DurationVolParams
FAMILIES = {cls.family: cls for cls in (MeanSwitchParams, DurationVolParams)}


def family_class(name: str):
    try:
        return FAMILIES[name]
    except KeyError:
        raise DomainError(f"unknown model family {name!r}; choose from {sorted(FAMILIES)}") from None


def state_sigma(params: DurationVolParams, regime: int, d: int) -> float:
    """Conditional standard deviation ``(omega_regime + zeta_regime * d) ** 2``."""
    if not 1 <= d <= params.tau:
        raise DomainError(f"duration {d} outside [1, {params.tau}]")
    return float(params._level(regime, d) ** 2)


def density_vector(model: DDMSModel, y_t: float) -> np.ndarray:
    """Gaussian density of ``y_t`` under each of the ``N`` extended states."""
    if not np.isfinite(y_t):
        raise DomainError("observation must be finite")
    ld = model.log_density_matrix(np.array([y_t]))[0]
    if ld.shape[0] == 2:
        ld = np.repeat(ld, model.tau)
    return np.exp(ld)


# ---------------------------------------------------------------- Garch


@dataclass(frozen=True)
class GarchParams:
    """Gaussian Garch(1,1) (``K = 1``) or Haas-type two-regime Garch (``K = 2``).

    ``stay`` holds ``(p00, p11)`` for ``K = 2`` and is ``None`` otherwise.
    """

    omega: tuple
    alpha: tuple
    beta: tuple
    stay: tuple | None = None

    def __post_init__(self):
        for name in ("omega", "alpha", "beta"):
            object.__setattr__(self, name, tuple(float(v) for v in np.atleast_1d(getattr(self, name))))
        k = len(self.omega)
        if k not in (1, 2) or len(self.alpha) != k or len(self.beta) != k:
            raise DomainError("Garch needs K in {1, 2} regimes with matching parameter lengths")
        if k == 2:
            if self.stay is None or len(self.stay) != 2:
                raise DomainError("two-regime Garch needs stay=(p00, p11)")
            object.__setattr__(self, "stay", tuple(float(v) for v in self.stay))
        elif self.stay is not None:
            raise DomainError("single-regime Garch takes no transition probabilities")

    @property
    def k(self) -> int:
        return len(self.omega)

    def is_stationary(self) -> bool:
        o, a, b = map(np.asarray, (self.omega, self.alpha, self.beta))
        ok = np.all(o > 0) and np.all(a >= 0) and np.all(b >= 0) and np.all(a + b < 1)
        if self.k == 2:
            ok = ok and all(0 < p < 1 for p in self.stay)
        return bool(ok)

    def to_vector(self) -> np.ndarray:
        v = [x for trio in zip(self.omega, self.alpha, self.beta) for x in trio]
        return np.array(v + list(self.stay or ()), dtype=float)

    @classmethod
    def from_vector(cls, theta, k: int) -> "GarchParams":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (3 * k + 2 * (k == 2),):
            raise DomainError(f"Garch with K={k} needs {3 * k + 2 * (k == 2)} parameters")
        trio = theta[:3 * k].reshape(k, 3)
        stay = tuple(theta[3 * k:]) if k == 2 else None
        return cls(trio[:, 0], trio[:, 1], trio[:, 2], stay)

    @classmethod
    def param_names(cls, k: int) -> tuple:
        names = [f"{p}_{j}" for j in range(k) for p in ("omega", "alpha", "beta")]
        return tuple(names + (["p00", "p11"] if k == 2 else []))


@dataclass(frozen=True)
class GarchFilterResult:
    variances: np.ndarray  # (K, T + 1); last column is the one-step-ahead variance
    loglik: float
    filtered: np.ndarray  # (T, K) regime probabilities
    next_probs: np.ndarray  # (K,)

    @property
    def next_variance(self) -> float:
        return float(self.next_probs @ self.variances[:, -1])


def garch_filter(params: GarchParams, y) -> GarchFilterResult:
    """Per-regime variance recursions started at the unconditional level, mixed by a Hamilton filter."""
    from .filtering import dense_hamilton

    if not params.is_stationary():
        raise DomainError("Garch parameters violate positivity/stationarity bounds")
    y = np.asarray(y, dtype=float)
    T = y.shape[0]
    o, a, b = (np.asarray(v) for v in (params.omega, params.alpha, params.beta))
    var = np.empty((params.k, T + 1))
    var[:, 0] = o / (1.0 - a - b)
    with np.errstate(over="ignore", invalid="ignore"):  # overflow surfaces as a degenerate likelihood
        y2 = y * y
        for t in range(1, T + 1):
            var[:, t] = o + a * y2[t - 1] + b * var[:, t - 1]
    ld = gaussian_logpdf(y[:, None], 0.0, np.sqrt(var[:, :T].T))
    if params.k == 1:
        ll = float(ld.sum())
        filt = np.ones((T, 1))
        nxt = np.ones(1)
    else:
        p00, p11 = params.stay
        P = np.array([[p00, 1 - p11], [1 - p00, p11]])
        xi0 = np.array([1 - p11, 1 - p00]) / (2 - p00 - p11)
        ll, _, filt = dense_hamilton(P, ld, xi0)
        nxt = P @ filt[-1] if T else xi0
    if not np.isfinite(ll):
        raise DegenerateLikelihood("Garch log-likelihood is not finite")
    return GarchFilterResult(var, float(ll), filt, nxt)
