"""Link functions between linear predictors and stay probabilities.

Three inverse links are supported: the logit, the asymmetric Aranda-Ordaz
family indexed by ``lam > 0`` (``lam = 1`` is the logit) and its ``lam -> 0``
limit, the complementary log-log.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DomainError

PROB_FLOOR = 1e-12


class LinkKind(str, enum.Enum):
    LOGIT = "logit"
    ARANDA_ORDAZ = "ao"
    CLOGLOG = "cloglog"


@dataclass(frozen=True)
class LinkSpec:
    """Which inverse link maps ``gamma1 + gamma2 * min(d, tau)`` to a stay probability."""

    kind: LinkKind = LinkKind.LOGIT
    lam: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LinkKind(self.kind))
        if self.kind is LinkKind.ARANDA_ORDAZ:
            if self.lam is None or not np.isfinite(self.lam) or self.lam <= 0:
                raise DomainError(f"Aranda-Ordaz link needs lam > 0, got {self.lam!r}")
            object.__setattr__(self, "lam", float(self.lam))
        elif self.lam is not None:
            raise DomainError(f"{self.kind.value} link takes no lam")

    @classmethod
    def logit(cls) -> "LinkSpec":
        return cls(LinkKind.LOGIT)

    @classmethod
    def aranda_ordaz(cls, lam: float) -> "LinkSpec":
        return cls(LinkKind.ARANDA_ORDAZ, lam)

    @classmethod
    def cloglog(cls) -> "LinkSpec":
        return cls(LinkKind.CLOGLOG)

    @property
    def has_parameter(self) -> bool:
        return self.kind is LinkKind.ARANDA_ORDAZ

    def with_lambda(self, lam: float) -> "LinkSpec":
        return LinkSpec(self.kind, lam) if self.has_parameter else self

    def inverse(self, x):
        if self.kind is LinkKind.LOGIT:
            return logit_inverse(x)
        if self.kind is LinkKind.CLOGLOG:
            return cloglog_inverse(x)
        return ao_inverse(x, self.lam)

    def link(self, y):
        if self.kind is LinkKind.LOGIT:
            return logit_link(y)
        if self.kind is LinkKind.CLOGLOG:
            return cloglog_link(y)
        return ao_link(y, self.lam)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "lam": self.lam}

    @classmethod
    def from_name(cls, name: str, lam: float = 1.0) -> "LinkSpec":
        kind = LinkKind(name)
        return cls(kind, lam if kind is LinkKind.ARANDA_ORDAZ else None)


def _check_prob(y):
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0) | ~(y < 1)):
        raise DomainError("probability argument must lie strictly inside (0, 1)")
    return y


def _check_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~np.isfinite(lam) | (lam <= 0)):
        raise DomainError(f"lam must be positive and finite, got {lam!r}")


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def ao_link(y, lam: float):
    """Aranda-Ordaz link ``log(((1 - y)**(-lam) - 1) / lam)``."""
    y = _check_prob(y)
    _check_lambda(lam)
    return _out(np.log(np.expm1(-lam * np.log1p(-y)) / lam))


def ao_inverse(x, lam: float):
    """Inverse Aranda-Ordaz link ``1 - (1 + lam * exp(x))**(-1/lam)``.

    Evaluated as ``-expm1(-softplus(x + log(lam)) / lam)`` so neither large
    positive ``x`` nor small ``lam`` overflows or cancels.
    """
    _check_lambda(lam)
    x = np.asarray(x, dtype=float)
    sp = np.logaddexp(0.0, x + np.log(lam))
    return _out(-np.expm1(-sp / lam))


def logit_inverse(x):
    return _out(expit(np.asarray(x, dtype=float)))


def logit_link(y):
    y = _check_prob(y)
    return _out(np.log(y) - np.log1p(-y))


def cloglog_inverse(x):
    return _out(-np.expm1(-np.exp(np.asarray(x, dtype=float))))


def cloglog_link(y):
    y = _check_prob(y)
    return _out(np.log(-np.log1p(-y)))


def stay_probability(link: LinkSpec, gamma1: float, gamma2: float, d: int, tau: int) -> float:
    """Probability of remaining in a regime that has lasted ``d`` periods."""
    if tau < 1 or d < 1:
        raise DomainError(f"need d >= 1 and tau >= 1, got d={d}, tau={tau}")
    return float(link.inverse(gamma1 + gamma2 * min(d, tau)))


def clamp_prob(p):
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)
