"""Realized measures, volatility losses, descriptive statistics and forecast comparison tests."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateDifferences, DomainError

MINRV_CONST = math.pi / (math.pi - 2.0)
MEDRV_CONST = math.pi / (6.0 - 4.0 * math.sqrt(3.0) + math.pi)

# Two-sided 5% critical values of the fluctuation test, Giacomini and Rossi
# (2010, Journal of Applied Econometrics), Table 1, indexed by window fraction.
GR_CRITICAL_5PCT = {0.1: 3.393, 0.2: 3.179, 0.3: 3.012}
NORMAL_CRITICAL_5PCT = 1.959963984540054


# ------------------------------------------------------- realized measures


@dataclass(frozen=True)
class RealizedDay:
    rv: float
    bv: float
    minrv: float
    medrv: float

    def as_dict(self) -> dict:
        return asdict(self)


def realized_measures(returns) -> RealizedDay:
    """RV, bipower variation, MinRV and MedRV of one day of intraday returns."""
    r = np.abs(np.asarray(returns, dtype=float).ravel())
    m = r.size
    if m < 3:
        raise DomainError(f"need at least 3 intraday returns, got {m}")
    if not np.all(np.isfinite(r)):
        raise DomainError("intraday returns must be finite")
    rv = float(np.sum(r * r))
    bv = float(0.5 * math.pi * m / (m - 1) * np.sum(r[:-1] * r[1:]))
    minrv = float(MINRV_CONST * m / (m - 1) * np.sum(np.minimum(r[:-1], r[1:]) ** 2))
    med = np.median(np.column_stack([r[:-2], r[1:-1], r[2:]]), axis=1)
    medrv = float(MEDRV_CONST * m / (m - 2) * np.sum(med * med))
    return RealizedDay(rv, bv, minrv, medrv)


def daily_realized(intraday, day_labels) -> dict:
    """Apply ``realized_measures`` per day; returns arrays keyed by measure name."""
    intraday = np.asarray(intraday, dtype=float)
    labels = np.asarray(day_labels)
    days, first = np.unique(labels, return_index=True)
    days = days[np.argsort(first)]
    rows = [realized_measures(intraday[labels == d]) for d in days]
    out = {k: np.array([getattr(row, k) for row in rows]) for k in ("rv", "bv", "minrv", "medrv")}
    out["day"] = days
    return out


# ------------------------------------------------------------------ losses

LOSSES = ("MSE", "QLIKE", "RLF")


def loss(name: str, proxy, forecast, literal_rlf: bool = False):
    """Per-period loss of ``forecast`` against the volatility ``proxy``.

    ``RLF`` is ``f - p + p * log(p / f)``, minimised at ``f == p``. With
    ``literal_rlf=True`` the variant ``f - p * (log(p / f) - 1)`` is returned
    instead; it is kept for comparison only as it is not minimised at the truth.
    """
    p = np.asarray(proxy, dtype=float)
    f = np.asarray(forecast, dtype=float)
    key = name.upper()
    if key == "MSE":
        out = 0.5 * (p - f) ** 2
    elif key in ("QLIKE", "RLF"):
        if np.any(~(p > 0)) or np.any(~(f > 0)):
            raise DomainError(f"{key} needs strictly positive proxy and forecast")
        ratio = p / f
        if key == "QLIKE":
            out = ratio - np.log(ratio) - 1.0
        elif literal_rlf:
            out = f - p * (np.log(ratio) - 1.0)
        else:
            out = f - p + p * np.log(ratio)
    else:
        raise DomainError(f"unknown loss {name!r}; choose from {LOSSES}")
    return float(out) if out.ndim == 0 else out


# ------------------------------------------------------ descriptive stats


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    mean: float
    std: float
    max: float
    min: float
    skewness: float
    kurtosis: float
    jb_stat: float
    jb_pvalue: float
    lm_arch: float
    lm_arch_pvalue: float
    ljung_box_sq: float
    ljung_box_sq_pvalue: float
    lags: int

    def as_dict(self) -> dict:
        return asdict(self)


def jarque_bera(skewness: float, kurtosis: float, n: int) -> float:
    return n * (skewness ** 2 / 6.0 + (kurtosis - 3.0) ** 2 / 24.0)


def lm_arch(e, k: int) -> float:
    """``n R^2`` from regressing ``e_t^2`` on a constant and ``k`` of its lags."""
    e2 = np.asarray(e, dtype=float) ** 2
    n = e2.size - k
    if n <= k + 1:
        raise DomainError(f"series too short for {k} ARCH lags")
    yv = e2[k:]
    X = np.column_stack([np.ones(n)] + [e2[k - j:-j] for j in range(1, k + 1)])
    beta, *_ = np.linalg.lstsq(X, yv, rcond=None)
    resid = yv - X @ beta
    tss = np.sum((yv - yv.mean()) ** 2)
    if tss == 0:
        raise DomainError("squared series is constant; ARCH test undefined")
    return float(n * (1.0 - resid @ resid / tss))


def ljung_box(x, k: int) -> float:
    x = np.asarray(x, dtype=float)
    n = x.size
    z = x - x.mean()
    den = z @ z
    if den == 0:
        raise DomainError("constant series; Ljung-Box undefined")
    rho = np.array([z[j:] @ z[:-j] for j in range(1, k + 1)]) / den
    return float(n * (n + 2) * np.sum(rho ** 2 / (n - np.arange(1, k + 1))))


def descriptive_stats(y, lags: int = 8) -> DescriptiveStats:
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < lags + 2:
        raise DomainError(f"need more than {lags + 1} observations")
    e = y - y.mean()
    m2 = np.mean(e ** 2)
    if m2 == 0:
        raise DomainError("constant series; moments and tests undefined")
    skew = float(np.mean(e ** 3) / m2 ** 1.5)
    kurt = float(np.mean(e ** 4) / m2 ** 2)
    jb = jarque_bera(skew, kurt, n)
    lm = lm_arch(e, lags)
    lb = ljung_box(e ** 2, lags)
    chi = stats.chi2
    return DescriptiveStats(n, float(y.mean()), float(y.std(ddof=1)), float(y.max()), float(y.min()),
                            skew, kurt, jb, float(chi.sf(jb, 2)), lm, float(chi.sf(lm, lags)),
                            lb, float(chi.sf(lb, lags)), lags)


# -------------------------------------------------------- DM-West and GR


def default_hac_lags(T: int) -> int:
    return int(math.floor(T ** (1.0 / 3.0)))


def hac_variance(d, lags: int) -> float:
    """Bartlett-kernel long-run variance of ``d`` around its mean."""
    d = np.asarray(d, dtype=float)
    z = d - d.mean()
    T = z.size
    lv = z @ z / T
    for j in range(1, min(lags, T - 1) + 1):
        lv += 2.0 * (1.0 - j / (lags + 1.0)) * (z[j:] @ z[:-j]) / T
    return float(lv)


@dataclass(frozen=True)
class DMResult:
    t_stat: float
    p_value: float
    mean_diff: float
    lags: int


def _dm(d, lags):
    T = d.size
    lv = hac_variance(d, lags)
    dbar = float(d.mean())
    if not lv > 0:
        raise DegenerateDifferences("loss differential has zero long-run variance")
    t = dbar / math.sqrt(lv / T)
    return DMResult(t, float(2.0 * stats.norm.sf(abs(t))), dbar, lags)


def dm_west_test(loss_a, loss_b, hac_lags: int | None = None, min_obs: int = 30) -> DMResult:
    """Test of equal average loss; ``t > 0`` means stream ``a`` has larger average loss."""
    a = np.asarray(loss_a, dtype=float)
    b = np.asarray(loss_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("loss series must be one-dimensional with equal length")
    if a.size < min_obs:
        raise DomainError(f"need at least {min_obs} observations, got {a.size}")
    lags = default_hac_lags(a.size) if hac_lags is None else int(hac_lags)
    if lags < 0:
        raise DomainError("HAC lags must be >= 0")
    return _dm(a - b, lags)


@dataclass(frozen=True)
class FluctuationResult:
    stats: np.ndarray  # one statistic per window, indexed by window end
    window: int
    critical_value: float
    window_ends: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.stats)))

    @property
    def rejects(self) -> bool:
        return self.max_abs > self.critical_value


def fluctuation_test(loss_a, loss_b, window_frac: float = 0.1, hac_lags: int | None = None) -> FluctuationResult:
    """Rolling DM-West statistics over windows of ``ceil(window_frac * T)`` observations.

    Critical values are tabulated for ``window_frac`` in {0.1, 0.2, 0.3}; the
    full-sample case ``window_frac = 1`` reduces to the DM-West test and uses
    the normal critical value.
    """
    a = np.asarray(loss_a, dtype=float)
    b = np.asarray(loss_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("loss series must be one-dimensional with equal length")
    if not 0 < window_frac <= 1:
        raise DomainError("window_frac must lie in (0, 1]")
    if window_frac == 1:
        crit = NORMAL_CRITICAL_5PCT
    else:
        key = round(window_frac, 10)
        if key not in GR_CRITICAL_5PCT:
            raise DomainError(f"no critical value tabulated for window_frac={window_frac}; "
                              f"use one of {sorted(GR_CRITICAL_5PCT)} or 1")
        crit = GR_CRITICAL_5PCT[key]
    T = a.size
    m = int(math.ceil(window_frac * T - 1e-9))
    if m < 10:
        raise DomainError(f"rolling window of {m} observations is too short (< 10)")
    lags = default_hac_lags(m) if hac_lags is None else int(hac_lags)
    d = a - b
    ends = np.arange(m, T + 1)
    out = np.array([_dm(d[e - m:e], lags).t_stat for e in ends])
    return FluctuationResult(out, m, crit, ends)


# -------------------------------------------------------------------- MCS


def stationary_bootstrap_indices(T: int, n_boot: int, block_len: float, rng) -> np.ndarray:
    """``(n_boot, T)`` resampling indices; blocks restart with probability ``1 / block_len``."""
    rng = np.random.default_rng(rng)
    if block_len < 1:
        raise DomainError("mean block length must be >= 1")
    idx = np.empty((n_boot, T), dtype=np.int64)
    idx[:, 0] = rng.integers(0, T, n_boot)
    restart = rng.random((n_boot, T)) < 1.0 / block_len
    fresh = rng.integers(0, T, (n_boot, T))
    for t in range(1, T):
        idx[:, t] = np.where(restart[:, t], fresh[:, t], (idx[:, t - 1] + 1) % T)
    return idx


@dataclass(frozen=True)
class MCSResult:
    included: list  # surviving model indices
    eliminated: list  # elimination order, first eliminated first
    pvalues: np.ndarray  # MCS p-value per model
    alpha: float

    def as_dict(self, names=None) -> dict:
        nm = (lambda i: names[i]) if names is not None else (lambda i: int(i))
        return {"included": [nm(i) for i in self.included], "eliminated": [nm(i) for i in self.eliminated],
                "pvalues": {str(nm(i)): float(p) for i, p in enumerate(self.pvalues)}, "alpha": self.alpha}


def _t_matrix(dbar, var):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = dbar / np.sqrt(var)
    t = np.where(var > 0, t, np.where(dbar > 0, np.inf, np.where(dbar < 0, -np.inf, 0.0)))
    return t


def model_confidence_set(losses, alpha: float = 0.2, n_boot: int = 1000, block_len: float = 10.0,
                         rng=None) -> MCSResult:
    """Model confidence set with the range statistic ``T_R = max |t_ij|``.

    ``losses`` is ``T x M``. The bootstrap draws one set of stationary-bootstrap
    indices and reuses it at every elimination step. At each step the model
    with the largest ``max_j t_ij`` is removed while the p-value of ``T_R`` is
    below ``alpha``.
    """
    L = np.asarray(losses, dtype=float)
    if L.ndim != 2 or L.shape[1] < 2:
        raise DomainError("losses must be T x M with M >= 2")
    T, M = L.shape
    if T < 50:
        raise DomainError(f"need at least 50 periods, got {T}")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    idx = stationary_bootstrap_indices(T, n_boot, block_len, rng)
    mean = L.mean(axis=0)
    boot = L[idx].mean(axis=1)  # (n_boot, M)
    dbar = mean[:, None] - mean[None, :]
    dboot = (boot[:, :, None] - boot[:, None, :]) - dbar[None]
    var = np.mean(dboot ** 2, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        tboot = np.where(var > 0, np.abs(dboot) / np.sqrt(var), 0.0)
    t = _t_matrix(dbar, var)

    alive = list(range(M))
    eliminated = []
    pvals = np.ones(M)
    running = 0.0
    stop_p = 1.0
    while len(alive) > 1:
        sub = np.ix_(alive, alive)
        ts = t[sub]
        TR = np.max(np.abs(ts))
        if TR == 0:
            break  # every remaining stream has the same losses
        Tb = tboot[(slice(None),) + sub].reshape(n_boot, -1).max(axis=1)
        running = max(running, float(np.mean(Tb >= TR)))
        if running >= alpha:
            stop_p = running
            break
        worst = alive[int(np.argmax(ts.max(axis=1)))]
        pvals[worst] = running
        eliminated.append(worst)
        alive.remove(worst)
    pvals[alive] = stop_p
    return MCSResult(sorted(alive), eliminated, pvals, alpha)
