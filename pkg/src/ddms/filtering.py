"""Hamilton filter and Kim smoother over the extended states.

``brute_force_loglik`` and ``brute_force_regime_posterior`` enumerate every
regime path and serve as independent checks of the recursions on short series.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from . import _kernels, chain
from .chain import RCOND_MIN, TransitionMatrix
from .errors import DegenerateLikelihood, DomainError, SingularChain
from .links import clamp_prob, stay_probability

SMOOTH_FLOOR = 1e-300


@dataclass(frozen=True)
class FilterOutput:
    predictive: np.ndarray  # (T, N) xi_{t|t-1}
    filtered: np.ndarray  # (T, N) xi_{t|t}
    smoothed: np.ndarray  # (T, N) xi_{t|T}
    loglik: float
    tau: int

    def regimes(self, which: str = "filtered") -> np.ndarray:
        return regime_marginals(getattr(self, which), self.tau)


def scaled_densities(logdens: np.ndarray):
    """Split log densities into ``exp(logdens - max)`` and the row maxima."""
    offs = np.max(logdens, axis=1) if logdens.shape[0] else np.empty(0)
    with np.errstate(invalid="ignore"):
        dens = np.exp(logdens - offs[:, None])
    dens[~np.isfinite(dens)] = 0.0
    return np.ascontiguousarray(dens), np.ascontiguousarray(offs, dtype=float)


def _checked_series(y) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if np.any(np.isnan(y)):
        raise DomainError("series contains NaN")
    return y


def initial_distribution(stay: np.ndarray, rcond_min: float = RCOND_MIN) -> np.ndarray:
    pi, rc = _kernels.stationary(np.ascontiguousarray(stay, dtype=float), rcond_min)
    if pi.shape[0] == 0:
        raise SingularChain(rc, rcond_min)
    return pi


def loglik(model, y, rcond_min: float = RCOND_MIN) -> float:
    """Exact log-likelihood; ``-inf`` for singular chains or degenerate densities."""
    dens, offs = scaled_densities(model.log_density_matrix(_checked_series(y)))
    return float(_kernels.loglik(model.stay_table(clamp=True), dens, offs, rcond_min))


def run_filter(model, y, rcond_min: float = RCOND_MIN) -> FilterOutput:
    y = _checked_series(y)
    stay = model.stay_table(clamp=True)
    xi0 = initial_distribution(stay, rcond_min)
    n = 2 * model.tau
    if y.shape[0] == 0:
        empty = np.empty((0, n))
        return FilterOutput(empty, empty, empty, 0.0, model.tau)
    dens, offs = scaled_densities(model.log_density_matrix(y))
    ll, pred, filt = _kernels.forward(stay, dens, offs, xi0, True)
    if not np.isfinite(ll):
        raise DegenerateLikelihood("one-step predictive density is zero")
    out = FilterOutput(pred, filt, filt, float(ll), model.tau)
    return replace(out, smoothed=kim_smoother(out, chain.transition_from_stay(stay)))


def kim_smoother(filter_out: FilterOutput, P: TransitionMatrix | np.ndarray) -> np.ndarray:
    """Backward recursion ``xi_{t|T} = xi_{t|t} * P'(xi_{t+1|T} / xi_{t+1|t})``."""
    M = P.matrix if isinstance(P, TransitionMatrix) else np.asarray(P)
    filt, pred = filter_out.filtered, filter_out.predictive
    T = filt.shape[0]
    sm = np.empty_like(filt)
    if T == 0:
        return sm
    sm[-1] = filt[-1]
    for t in range(T - 2, -1, -1):
        p = pred[t + 1]
        ratio = np.where(p > SMOOTH_FLOOR, sm[t + 1] / np.maximum(p, SMOOTH_FLOOR), 0.0)
        row = filt[t] * (M.T @ ratio)
        sm[t] = row / row.sum()
    return sm


def regime_marginals(probs, tau: int) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    return probs.reshape(probs.shape[:-1] + (2, tau)).sum(axis=-1)


def dense_hamilton(P, logdens, xi0):
    """Plain Hamilton filter with a dense column-stochastic matrix.

    Returns ``(loglik, predictive, filtered)``.
    """
    P = np.asarray(P, dtype=float)
    logdens = np.asarray(logdens, dtype=float)
    T, n = logdens.shape
    pred = np.empty((T, n))
    filt = np.empty((T, n))
    xi = np.asarray(xi0, dtype=float)
    ll = 0.0
    for t in range(T):
        pred[t] = P @ xi
        m = np.max(logdens[t])
        w = pred[t] * np.exp(logdens[t] - m)
        c = w.sum()
        if not c > 0:
            return -np.inf, pred, filt
        ll += m + np.log(c)
        xi = filt[t] = w / c
    return ll, pred, filt


# ------------------------------------------------------------ oracles

MAX_BRUTE_T = 12


def _enumerate_paths(model, y):
    """Yield ``(path_logprob, regimes)`` for every initial state and regime path."""
    y = _checked_series(y)
    T = y.shape[0]
    if T > MAX_BRUTE_T:
        raise DomainError(f"path enumeration limited to T <= {MAX_BRUTE_T}")
    tau, link = model.tau, model.link
    g = np.asarray(model.gammas).reshape(2, 2)
    # same clamped stay probabilities as the likelihood
    stay = {(r, d): float(clamp_prob(stay_probability(link, g[r, 0], g[r, 1], d, tau)))
            for r in (0, 1) for d in range(1, tau + 1)}
    table = np.array([[stay[(r, d)] for d in range(1, tau + 1)] for r in (0, 1)])
    pi = chain.unconditional_probabilities(chain.transition_from_stay(table))
    logdens = {(r, d): norm.logpdf(y, model.state_mean(r, d), model.state_sd(r, d))
               for r in (0, 1) for d in range(1, tau + 1)}
    with np.errstate(divide="ignore"):
        for s0 in range(2 * tau):
            r0, d0 = chain.state_of(s0, tau)
            for path in itertools.product((0, 1), repeat=T):
                lp = np.log(pi[s0])
                r, d = r0, d0
                for t, rt in enumerate(path):
                    p = stay[(r, d)]
                    lp += np.log(p if rt == r else 1.0 - p)
                    d = chain.next_duration(d, rt == r, tau)
                    r = rt
                    lp += logdens[(r, d)][t]
                yield lp, path


def brute_force_loglik(model, y) -> float:
    """Log of the sum over all regime paths of path probability times densities."""
    lps = [lp for lp, _ in _enumerate_paths(model, y)]
    return float(logsumexp(lps))


def brute_force_regime_posterior(model, y) -> np.ndarray:
    """``P(S_t = regime | y_1..y_T)`` by path enumeration, shape ``(T, 2)``."""
    lps, paths = zip(*_enumerate_paths(model, y))
    lps = np.array(lps)
    w = np.exp(lps - logsumexp(lps))
    paths = np.array(paths)
    p1 = w @ paths
    return np.column_stack([1.0 - p1, p1])
