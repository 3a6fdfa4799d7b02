"""Data-generating processes for the duration-dependent models.

Each replication draws from its own generator ``default_rng([seed, rep])``
(PCG64 keyed by the pair), so results do not depend on the order or process in
which replications run. Normal variates come from numpy's ziggurat sampler.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import chain
from .errors import DomainError

RNG_METADATA = {
    "bit_generator": "PCG64",
    "seeding": "numpy.random.default_rng([seed, rep])",
    "normals": "numpy Generator.standard_normal (ziggurat)",
    "numpy": np.__version__,
}


@dataclass
class SimConfig:
    model: object
    n_keep: int
    n_burn: int = 200
    seed: int = 0
    n_reps: int = 1
    init_state: tuple | None = None  # (regime, duration); default draws from the stationary law

    def __post_init__(self):
        if self.n_keep < 1 or self.n_burn < 0 or self.n_reps < 1:
            raise DomainError("need n_keep >= 1, n_burn >= 0, n_reps >= 1")


@dataclass(frozen=True)
class SimPath:
    y: np.ndarray
    regime: np.ndarray
    duration: np.ndarray
    sigma2: np.ndarray

    @property
    def states(self) -> list:
        return [chain.ExtendedState(int(r), int(d)) for r, d in zip(self.regime, self.duration)]

    def to_frame(self):
        import pandas as pd

        return pd.DataFrame({"t": np.arange(1, self.y.size + 1), "y": self.y, "regime": self.regime,
                             "duration": self.duration, "sigma2": self.sigma2})


def rep_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(rep)])


def simulate_path(config: SimConfig, rep: int = 0) -> SimPath:
    model = config.model
    tau = model.tau
    stay = model.stay_table()
    rng = rep_rng(config.seed, rep)
    if config.init_state is None:
        pi = chain.unconditional_probabilities(model.transition())
        s = int(rng.choice(2 * tau, p=pi))
    else:
        s = chain.state_index(*config.init_state, tau)
    total = config.n_burn + config.n_keep
    u = rng.random(total)
    z = rng.standard_normal(total)
    means, sds = model.state_means(), model.state_sds()
    idx = np.empty(total, dtype=np.int64)
    r, d = divmod(s, tau)
    d += 1
    for t in range(total):
        if t > 0:
            same = u[t] < stay[r, d - 1]
            d = chain.next_duration(d, same, tau)
            r = r if same else 1 - r
        idx[t] = r * tau + d - 1
    keep = idx[config.n_burn:]
    y = means[keep] + sds[keep] * z[config.n_burn:]
    regime, dm1 = np.divmod(keep, tau)
    return SimPath(y, regime, dm1 + 1, sds[keep] ** 2)


def simulate(config: SimConfig) -> list:
    return [simulate_path(config, rep) for rep in range(config.n_reps)]


def holdout_split(y, h_max: int):
    """Split off the last ``h_max`` observations for out-of-sample evaluation."""
    y = np.asarray(y)
    if h_max < 0 or h_max >= y.shape[0]:
        raise DomainError(f"h_max={h_max} must be in [0, len(y) - 1] (len(y)={y.shape[0]})")
    cut = y.shape[0] - h_max
    return y[:cut], y[cut:]
