"""Duration-extended Markov chain.

An extended state is a pair ``(regime, duration)`` with ``regime in {0, 1}``
and ``1 <= duration <= tau``; it is stored at index ``regime * tau + duration - 1``
so there are ``N = 2 * tau`` states.

Orientation: ``matrix[j, i] = P(S_t = j | S_{t-1} = i)``, i.e. columns are
source states and every column sums to one, so that the one-step prediction
is ``xi_{t+1|t} = matrix @ xi_{t|t}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, SingularChain
from .links import LinkSpec

RCOND_MIN = 1e-9


class ExtendedState(NamedTuple):
    regime: int
    duration: int


def n_states(tau: int) -> int:
    return 2 + 2 * (tau - 1)


def state_index(regime: int, duration: int, tau: int) -> int:
    if regime not in (0, 1) or not 1 <= duration <= tau:
        raise DomainError(f"invalid extended state ({regime}, {duration}) for tau={tau}")
    return regime * tau + duration - 1


def state_of(index: int, tau: int) -> ExtendedState:
    if not 0 <= index < 2 * tau:
        raise DomainError(f"state index {index} out of range for tau={tau}")
    regime, dm1 = divmod(index, tau)
    return ExtendedState(regime, dm1 + 1)


def state_regimes(tau: int) -> np.ndarray:
    return np.repeat([0, 1], tau)


def state_durations(tau: int) -> np.ndarray:
    return np.tile(np.arange(1, tau + 1), 2)


def next_duration(d_prev: int, same_state: bool, tau: int) -> int:
    if tau < 1 or not 1 <= d_prev <= tau:
        raise DomainError(f"need 1 <= d_prev <= tau, got d_prev={d_prev}, tau={tau}")
    return min(d_prev + 1, tau) if same_state else 1


def stay_table(link: LinkSpec, gammas, tau: int) -> np.ndarray:
    """Stay probabilities as a ``(2, tau)`` array indexed by ``[regime, d - 1]``."""
    if tau < 1:
        raise DomainError("tau must be >= 1")
    g = np.asarray(gammas, dtype=float).reshape(2, 2)
    d = np.minimum(np.arange(1, tau + 1), tau)
    eta = g[:, [0]] + g[:, [1]] * d[None, :]
    return np.asarray(link.inverse(eta), dtype=float).reshape(2, tau)


@dataclass(frozen=True)
class TransitionMatrix:
    tau: int
    matrix: np.ndarray
    stay: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def transition_from_stay(stay: np.ndarray) -> TransitionMatrix:
    stay = np.array(stay, dtype=float)
    tau = stay.shape[1]
    n = 2 * tau
    P = np.zeros((n, n))
    for r in (0, 1):
        for d in range(1, tau + 1):
            src = r * tau + d - 1
            p = stay[r, d - 1]
            P[r * tau + min(d + 1, tau) - 1, src] += p
            P[(1 - r) * tau, src] += 1.0 - p
    P.setflags(write=False)
    stay.setflags(write=False)
    return TransitionMatrix(tau, P, stay)


def build_transition_matrix(link: LinkSpec, gammas, tau: int) -> TransitionMatrix:
    return transition_from_stay(stay_table(link, gammas, tau))


def gram_matrix(P) -> np.ndarray:
    """``A'A`` with ``A = [I - P; 1']``."""
    P = P.matrix if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=float)
    n = P.shape[0]
    A = np.vstack([np.eye(n) - P, np.ones((1, n))])
    return A.T @ A


def reciprocal_condition(M) -> float:
    """Smallest over largest singular value (2-norm reciprocal condition)."""
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s[0] == 0 or not np.all(np.isfinite(s)):
        return 0.0
    return float(s[-1] / s[0])


def unconditional_probabilities(P, rcond_min: float = RCOND_MIN) -> np.ndarray:
    """Least-squares stationary distribution ``(A'A)^{-1} A' [0_N; 1]``."""
    G = gram_matrix(P)
    rc = reciprocal_condition(G)
    if rc < rcond_min:
        raise SingularChain(rc, rcond_min)
    # A' [0_N; 1] is the all-ones vector
    pi = np.linalg.solve(G, np.ones(G.shape[0]))
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()
