"""Monte Carlo comparisons of the logit and Aranda-Ordaz links.

``mc_insample`` uses the bull/bear mean-switching DGP and scores regime
probabilities; ``mc_forecast`` uses the duration-dependent volatility DGP and
scores multi-step variance forecasts. Each replication draws its data and its
random start matrix from generators keyed by ``(seed, rep)``, so results do not
depend on the number of workers.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import estimate
from .errors import EstimationFailed, SingularChain
from .filtering import run_filter
from .forecast import forecast_path, mape_curve
from .links import LinkSpec
from .models import DurationVolParams, MeanSwitchParams
from .simulate import SimConfig, simulate_path

log = logging.getLogger(__name__)

LINKS = ("logit", "ao")
PROB_KINDS = ("predictive", "filtered", "smoothed")
PROB_FLOOR = 0.01
H_MAX = 10


def bull_bear_dgp(tau0: int = 8) -> MeanSwitchParams:
    return MeanSwitchParams(-0.5, 1.5, 6.0, 2.0, (-1.8, 0.7, -0.8, 0.6), LinkSpec.logit(), tau0)


def volatility_dgp(tau0: int = 15) -> DurationVolParams:
    return DurationVolParams(1.0, 1.3, -0.01, 0.02, (1.0, 0.1, 1.3, -0.01), LinkSpec.logit(), tau0)


@dataclass
class ExperimentConfig:
    kind: str  # "insample" or "forecast"
    tau0: int
    taus: tuple
    n_keep: int
    n_burn: int = 200
    n_holdout: int = 0
    n_reps: int = 100
    seed: int = 0
    n_random: int = 100
    s_keep: int = 10
    nest_start: bool = False  # also start the A-O search at the logit estimate with lam = 1

    def start_config(self) -> estimate.StartSearchConfig:
        return estimate.StartSearchConfig(n_random=self.n_random, s_keep=self.s_keep)

    def dgp(self):
        return bull_bear_dgp(self.tau0) if self.kind == "insample" else volatility_dgp(self.tau0)

    @property
    def family(self) -> str:
        return self.dgp().family

    def to_dict(self) -> dict:
        return asdict(self)


def _forecast_preset(tau0):
    return ExperimentConfig("forecast", tau0, tuple(tau0 + k for k in (-10, -5, 0, 5, 10)), 1000, n_holdout=H_MAX)


PRESETS = {
    "table1": ExperimentConfig("insample", 8, (4, 6, 8, 10, 12), 800),
    "table3-15": _forecast_preset(15),
    "table3-25": _forecast_preset(25),
    "table3-35": _forecast_preset(35),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    d = PRESETS[name].to_dict()
    d.update({k: v for k, v in overrides.items() if v is not None})
    d["taus"] = tuple(d["taus"])
    return ExperimentConfig(**d)


# ------------------------------------------------------------ replications


def probability_mape(est, truth, floor: float = PROB_FLOOR) -> float:
    """Mean over periods and both regimes of ``|p_hat - p| / max(p, floor)``."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    return float(np.mean(np.abs(est - truth) / np.maximum(truth, floor)))


def _regime_probs(model, y):
    out = run_filter(model, y)
    probs = {k: out.regimes(k) for k in PROB_KINDS}
    if model.mu0 > model.mu1:  # label regime 0 as the low-mean regime, as in the DGP
        probs = {k: v[:, ::-1] for k, v in probs.items()}
    return probs


def _fit_pair(cfg: ExperimentConfig, y, tau, C):
    fits = {}
    for link in LINKS:
        extra = None
        if link == "ao" and cfg.nest_start and fits.get("logit") is not None:
            extra = np.append(fits["logit"].theta_hat, 1.0)
        try:
            fits[link] = estimate.fit(y, cfg.family, link, tau, cfg.start_config(), C=C, extra_starts=extra)
        except (EstimationFailed, SingularChain) as exc:
            log.info("tau=%d %s fit failed: %s", tau, link, exc)
            fits[link] = None
    return fits


def _rep_streams(cfg: ExperimentConfig, rep: int):
    path = simulate_path(SimConfig(cfg.dgp(), cfg.n_keep + cfg.n_holdout, cfg.n_burn, cfg.seed), rep)
    rng = np.random.default_rng([cfg.seed, rep, 1])
    C = estimate.draw_start_matrix(cfg.family, cfg.start_config(), rng)
    return path, C


def insample_replication(cfg: ExperimentConfig, rep: int) -> dict:
    path, C = _rep_streams(cfg, rep)
    y = path.y
    truth = _regime_probs(cfg.dgp(), y)
    rows = []
    for tau in cfg.taus:
        fits = _fit_pair(cfg, y, tau, C)
        row = {"rep": rep, "tau": tau}
        for link, f in fits.items():
            row[f"converged_{link}"] = f is not None
            row[f"loglik_{link}"] = f.loglik if f else np.nan
            if link == "ao":
                row["lambda_hat"] = f.lambda_hat if f else np.nan
            for k in PROB_KINDS:
                row[f"mape_{k}_{link}"] = np.nan
            if f is not None:
                probs = _regime_probs(f.model(), y)
                for k in PROB_KINDS:
                    row[f"mape_{k}_{link}"] = probability_mape(probs[k], truth[k])
        rows.append(row)
    return {"rep": rep, "rows": rows}


def forecast_replication(cfg: ExperimentConfig, rep: int) -> dict:
    path, C = _rep_streams(cfg, rep)
    n = cfg.n_keep
    y, truth = path.y[:n], path.sigma2[n:n + cfg.n_holdout]
    rows = []
    for tau in cfg.taus:
        fits = _fit_pair(cfg, y, tau, C)
        row = {"rep": rep, "tau": tau}
        for link, f in fits.items():
            row[f"converged_{link}"] = f is not None
            row[f"loglik_{link}"] = f.loglik if f else np.nan
            if link == "ao":
                row["lambda_hat"] = f.lambda_hat if f else np.nan
            curve = np.full(cfg.n_holdout, np.nan)
            if f is not None:
                model = f.model()
                xi = run_filter(model, y).filtered[-1]
                curve = mape_curve(forecast_path(model, xi, cfg.n_holdout).sigma2_hat, truth)
            for h in range(cfg.n_holdout):
                row[f"mape_h{h + 1}_{link}"] = curve[h]
        rows.append(row)
    return {"rep": rep, "rows": rows}


def _run(cfg: ExperimentConfig, func, workers: int = 1) -> list:
    reps = range(cfg.n_reps)
    if workers <= 1:
        results = [func(cfg, r) for r in reps]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(func, [cfg] * cfg.n_reps, reps))
    results.sort(key=lambda r: r["rep"])
    return [row for r in results for row in r["rows"]]


# ------------------------------------------------------------- summaries


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    summary: dict = field(default_factory=dict)

    def frame(self):
        import pandas as pd

        return pd.DataFrame(self.rows)

    def to_dict(self) -> dict:
        return {"config": self.config, "summary": self.summary}


def _both(rows):
    return [r for r in rows if r["converged_logit"] and r["converged_ao"]]


def superiority(rows) -> float:
    """Share of jointly converged replications where the A-O log-likelihood is larger."""
    ok = _both(rows)
    return float(np.mean([r["loglik_ao"] > r["loglik_logit"] for r in ok])) if ok else np.nan


def _per_tau(rows, taus, fn):
    return {int(t): fn([r for r in rows if r["tau"] == t]) for t in taus}


def _failures(rows):
    return {link: int(sum(not r[f"converged_{link}"] for r in rows)) for link in LINKS}


def summarize_insample(rows, taus) -> dict:
    out = {"loglik_superiority": _per_tau(rows, taus, superiority),
           "failures": _per_tau(rows, taus, _failures),
           "n_joint": _per_tau(rows, taus, lambda rs: len(_both(rs)))}
    for k in PROB_KINDS:
        out[f"mape_proportion_{k}"] = _per_tau(
            rows, taus, lambda rs: float(np.mean([r[f"mape_{k}_ao"] < r[f"mape_{k}_logit"] for r in _both(rs)]))
            if _both(rs) else np.nan)
        out[f"mape_difference_{k}"] = _per_tau(
            rows, taus, lambda rs: float(np.mean([r[f"mape_{k}_logit"] - r[f"mape_{k}_ao"] for r in _both(rs)]))
            if _both(rs) else np.nan)
    return out


def summarize_forecast(rows, taus, h_max: int = H_MAX) -> dict:
    def dcurve(rs):
        ok = _both(rs)
        if not ok:
            return [np.nan] * h_max
        return [float(np.mean([r[f"mape_h{h}_logit"] - r[f"mape_h{h}_ao"] for r in ok])) for h in range(1, h_max + 1)]

    return {"loglik_superiority": _per_tau(rows, taus, superiority),
            "failures": _per_tau(rows, taus, _failures),
            "n_joint": _per_tau(rows, taus, lambda rs: len(_both(rs))),
            "mape_difference": _per_tau(rows, taus, dcurve)}


def mc_insample(cfg: ExperimentConfig | str = "table1", workers: int = 1, **overrides) -> ExperimentReport:
    cfg = preset(cfg, **overrides) if isinstance(cfg, str) else cfg
    rows = _run(cfg, insample_replication, workers)
    return ExperimentReport(cfg.to_dict(), rows, summarize_insample(rows, cfg.taus))


def mc_forecast(cfg: ExperimentConfig | str = "table3-15", workers: int = 1, **overrides) -> ExperimentReport:
    cfg = preset(cfg, **overrides) if isinstance(cfg, str) else cfg
    rows = _run(cfg, forecast_replication, workers)
    return ExperimentReport(cfg.to_dict(), rows, summarize_forecast(rows, cfg.taus, cfg.n_holdout))
