"""Compiled inner loops for the extended-chain likelihood.

The transition matrix of the duration chain has two non-zero entries per
column, so prediction is O(N) per step instead of O(N^2).
"""
import numpy as np
from numba import njit


@njit(cache=True)
def dense_transition(stay):
    tau = stay.shape[1]
    n = 2 * tau
    P = np.zeros((n, n))
    for r in range(2):
        base = r * tau
        other = (1 - r) * tau
        for d in range(tau):
            nd = d + 1 if d + 1 < tau else tau - 1
            P[base + nd, base + d] += stay[r, d]
            P[other, base + d] += 1.0 - stay[r, d]
    return P


@njit(cache=True)
def stationary(stay, rcond_min):
    """Return ``(pi, rcond)``; ``pi`` is empty when ``rcond < rcond_min``."""
    P = dense_transition(stay)
    n = P.shape[0]
    B = np.eye(n) - P
    G = B.T @ B + 1.0
    ev = np.linalg.eigvalsh(G)
    top = ev[-1]
    rc = ev[0] / top if top > 0 else 0.0
    if not rc >= rcond_min:
        return np.empty(0), max(rc, 0.0)
    pi = np.linalg.solve(G, np.ones(n))
    s = 0.0
    for j in range(n):
        if pi[j] < 0.0:
            pi[j] = 0.0
        s += pi[j]
    return pi / s, rc


@njit(cache=True)
def forward(stay, dens, offs, xi0, store):
    """Hamilton filter over extended states.

    ``dens[t, k] * exp(offs[t])`` is the observation density, with ``k`` the
    extended state (``dens.shape[1] == N``) or the regime (``== 2``).
    Returns ``(loglik, predictive, filtered)``; ``loglik`` is ``-inf`` when a
    normaliser is not positive.
    """
    T = dens.shape[0]
    per_state = dens.shape[1] != 2 or stay.shape[1] == 1
    tau = stay.shape[1]
    n = 2 * tau
    if store:
        pred_out = np.empty((T, n))
        filt_out = np.empty((T, n))
    else:
        pred_out = np.empty((0, n))
        filt_out = np.empty((0, n))
    xi = xi0.copy()
    pred = np.empty(n)
    ll = 0.0
    for t in range(T):
        pred[:] = 0.0
        for r in range(2):
            base = r * tau
            other = (1 - r) * tau
            for d in range(tau):
                m = xi[base + d]
                p = stay[r, d]
                nd = d + 1 if d + 1 < tau else tau - 1
                pred[base + nd] += m * p
                pred[other] += m * (1.0 - p)
        c = 0.0
        for j in range(n):
            e = dens[t, j] if per_state else dens[t, j // tau]
            w = pred[j] * e
            xi[j] = w
            c += w
        if not (c > 0.0) or not np.isfinite(offs[t]):
            return -np.inf, pred_out, filt_out
        ll += offs[t] + np.log(c)
        for j in range(n):
            xi[j] /= c
        if store:
            pred_out[t] = pred
            filt_out[t] = xi
    return ll, pred_out, filt_out


@njit(cache=True)
def loglik(stay, dens, offs, rcond_min):
    pi, rc = stationary(stay, rcond_min)
    if pi.shape[0] == 0:
        return -np.inf
    ll, _, _ = forward(stay, dens, offs, pi, False)
    return ll


@njit(cache=True)
def loglik_many(stays, dens, offs, rcond_min):
    out = np.empty(stays.shape[0])
    for k in range(stays.shape[0]):
        out[k] = loglik(stays[k], dens, offs, rcond_min)
    return out
