"""Command-line entry point: ``ddms <subcommand> ...``.

Every subcommand writes its outputs plus a ``manifest.json`` holding the
resolved configuration, its hash and the seed. Exit codes: 0 success,
2 estimation failure, 3 input or schema error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__, benchmarks, estimate, evaluate, experiments
from .chain import build_transition_matrix
from .errors import DegenerateDifferences, DegenerateLikelihood, DomainError, EstimationFailed, SingularChain
from .filtering import run_filter
from .forecast import forecast_path
from .links import LinkSpec
from .models import family_class
from .simulate import RNG_METADATA, SimConfig, simulate_path

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ESTIMATION, EXIT_INPUT = 0, 2, 3
FAMILY_ALIASES = {"bull-bear": "mean-switching", "volatility": "duration-vol"}

log = logging.getLogger("ddms")


class InputError(Exception):
    pass


# ----------------------------------------------------------------- helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, Path):
        return str(x)
    return x


def write_json(path: Path, obj) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **_jsonable(obj)}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def config_hash(config: dict) -> str:
    blob = json.dumps(_jsonable(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(out: Path, args, outputs) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    write_json(out / "manifest.json", {
        "command": args.command, "config": config, "config_hash": config_hash(config),
        "seed": getattr(args, "seed", None), "rng": RNG_METADATA, "version": __version__,
        "outputs": [str(p) for p in outputs],
    })


def read_series(path, column: str | None = None) -> np.ndarray:
    try:
        df = pd.read_csv(path)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from None
    if column is None:
        column = "y" if "y" in df.columns else None
        if column is None:
            numeric = df.select_dtypes("number").columns
            if len(numeric) == 0:
                raise InputError(f"{path}: no numeric column")
            column = numeric[-1]
    if column not in df.columns:
        raise InputError(f"{path}: column {column!r} not found")
    y = df[column].to_numpy(dtype=float)
    if not np.all(np.isfinite(y)):
        raise InputError(f"{path}: column {column!r} has missing or non-finite values")
    return y


def read_json(path) -> dict:
    try:
        d = json.loads(Path(path).read_text())
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if d.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema_version {d.get('schema_version')}")
    return d


def model_from_fit(d: dict):
    try:
        cls = family_class(d["family"])
        theta = [d["theta_hat"][n] for n in d["param_names"]]
        return cls.from_vector(theta, int(d["tau"]), d["link"])
    except KeyError as exc:
        raise InputError(f"fit JSON is missing {exc}") from None


def _family(name: str) -> str:
    return FAMILY_ALIASES.get(name, name)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ------------------------------------------------------------- subcommands


def cmd_simulate(args):
    fam = _family(args.family)
    if args.params:
        p = read_json(args.params)
        cls = family_class(fam)
        names = cls.param_names(args.link)
        try:
            model = cls.from_vector([p[n] for n in names], args.tau, args.link)
        except KeyError as exc:
            raise InputError(f"params JSON is missing {exc}") from None
    else:
        dgp = experiments.bull_bear_dgp if fam == "mean-switching" else experiments.volatility_dgp
        model = dgp(args.tau)
    out = _out_dir(args)
    path = simulate_path(SimConfig(model, args.n, args.burn, args.seed), args.rep)
    f = out / "simulated.csv"
    path.to_frame().to_csv(f, index=False)
    write_json(out / "metadata.json", {"family": fam, "params": dict(zip(model.param_names(model.link),
                                                                         model.to_vector())),
                                      "tau": model.tau, "seed": args.seed, "rep": args.rep, "rng": RNG_METADATA})
    return [f, out / "metadata.json"]


def _fit_configs(args):
    sc = estimate.StartSearchConfig(n_random=args.n_random, s_keep=args.s_keep)
    return sc, estimate.LocalSearchConfig()


def cmd_fit(args):
    y = read_series(args.input, args.column)
    sc, lc = _fit_configs(args)
    out = _out_dir(args)
    res = estimate.fit(y, _family(args.family), args.link, args.tau, sc, lc, seed=args.seed)
    f = out / "fit.json"
    write_json(f, {**res.to_dict(), "seed": args.seed})
    return [f]


def cmd_filter(args):
    y = read_series(args.input, args.column)
    model = model_from_fit(read_json(args.params))
    res = run_filter(model, y)
    out = _out_dir(args)
    df = pd.DataFrame({"t": np.arange(1, y.size + 1)})
    for kind in ("predictive", "filtered", "smoothed"):
        reg = res.regimes(kind)
        df[f"{kind}_regime0"] = reg[:, 0]
        df[f"{kind}_regime1"] = reg[:, 1]
    f = out / "probabilities.csv"
    df.to_csv(f, index=False)
    write_json(out / "filter.json", {"loglik": res.loglik, "n_obs": int(y.size)})
    return [f, out / "filter.json"]


def cmd_forecast(args):
    y = read_series(args.input, args.column)
    model = model_from_fit(read_json(args.params))
    xi = run_filter(model, y).filtered[-1]
    fp = forecast_path(model, xi, args.horizon)
    reg = fp.regime_probs()
    df = pd.DataFrame({"horizon": fp.horizons, "sigma2_hat": fp.sigma2_hat,
                       "p_regime0": reg[:, 0], "p_regime1": reg[:, 1]})
    out = _out_dir(args)
    f = out / "forecast.csv"
    df.to_csv(f, index=False)
    return [f]


def cmd_matrix(args):
    link = LinkSpec.from_name(args.link, args.lam)
    P = build_transition_matrix(link, args.gammas, args.tau)
    out = _out_dir(args)
    f = out / "transition.csv"
    labels = [f"r{r}d{d}" for r in (0, 1) for d in range(1, args.tau + 1)]
    pd.DataFrame(P.matrix, index=labels, columns=labels).to_csv(f)
    return [f]


def cmd_realized(args):
    try:
        df = pd.read_csv(args.input)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from None
    for col in (args.time_column, args.value_column):
        if col not in df.columns:
            raise InputError(f"{args.input}: column {col!r} not found")
    ts = pd.to_datetime(df[args.time_column])
    day = ts.dt.strftime("%Y-%m-%d").to_numpy()
    v = df[args.value_column].to_numpy(dtype=float)
    if args.prices:
        lp = np.log(v)
        r = np.diff(lp)
        same = day[1:] == day[:-1]  # drop overnight returns
        r, day = r[same], day[1:][same]
    else:
        r = v
    res = evaluate.daily_realized(r, day)
    out = _out_dir(args)
    f = out / "realized.csv"
    pd.DataFrame({"day": res["day"], "rv": res["rv"], "bv": res["bv"], "minrv": res["minrv"],
                  "medrv": res["medrv"]}).to_csv(f, index=False)
    return [f]


def evaluation_report(forecasts: pd.DataFrame, proxies: pd.DataFrame, benchmark: str | None,
                      alpha: float, n_boot: int, seed: int, window_frac: float) -> dict:
    """Average losses, MCS membership and DM-West/fluctuation statistics for every proxy and loss."""
    mask = np.all(np.isfinite(forecasts.to_numpy(dtype=float)), axis=1)
    mask &= np.all(np.isfinite(proxies.to_numpy(dtype=float)), axis=1)
    F, Pxy = forecasts[mask], proxies[mask]
    models = list(F.columns)
    report = {"n_periods": int(mask.sum()), "n_dropped": int((~mask).sum()), "models": models, "results": {}}
    for proxy in Pxy.columns:
        for lname in evaluate.LOSSES:
            L = np.column_stack([evaluate.loss(lname, Pxy[proxy].to_numpy(), F[m].to_numpy()) for m in models])
            entry = {"mean_loss": dict(zip(models, L.mean(axis=0)))}
            if len(models) >= 2 and L.shape[0] >= 50:
                mcs = evaluate.model_confidence_set(L, alpha, n_boot, rng=seed)
                entry["mcs"] = mcs.as_dict(models)
            if benchmark is not None:
                j = models.index(benchmark)
                tests = {}
                for i, m in enumerate(models):
                    if i == j:
                        continue
                    try:
                        dm = evaluate.dm_west_test(L[:, i], L[:, j])
                        fl = evaluate.fluctuation_test(L[:, i], L[:, j], window_frac)
                        tests[m] = {"t_stat": dm.t_stat, "p_value": dm.p_value, "fluctuation_max": fl.max_abs,
                                    "fluctuation_critical": fl.critical_value}
                    except (DegenerateDifferences, DomainError) as exc:
                        tests[m] = {"error": str(exc)}
                entry["vs_benchmark"] = tests
            report["results"][f"{proxy}/{lname}"] = entry
    return report


def cmd_evaluate(args):
    try:
        F = pd.read_csv(args.forecasts)
        Pxy = pd.read_csv(args.proxy)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from None
    F = F.drop(columns=[c for c in ("t", "origin", "day") if c in F.columns])
    Pxy = Pxy.drop(columns=[c for c in ("t", "origin", "day") if c in Pxy.columns])
    if len(F) != len(Pxy):
        raise InputError("forecast and proxy files must have the same number of rows")
    if args.benchmark is not None and args.benchmark not in F.columns:
        raise InputError(f"benchmark {args.benchmark!r} not among forecast columns")
    rep = evaluation_report(F, Pxy, args.benchmark, args.alpha, args.n_boot, args.seed, args.window_frac)
    out = _out_dir(args)
    f = out / "evaluation.json"
    write_json(f, rep)
    return [f]


def _forecasters(args):
    out = []
    for spec in args.models:
        kind, _, rest = spec.partition(":")
        if kind in ("garch", "ms-garch"):
            out.append(benchmarks.GarchForecaster(1 if kind == "garch" else 2))
        elif kind in ("logit", "ao"):
            try:
                tau = int(rest) if rest else args.tau
            except ValueError:
                raise InputError(f"bad model spec {spec!r}; use e.g. ao:5") from None
            sc = estimate.StartSearchConfig(n_random=args.n_random, s_keep=args.s_keep)
            out.append(benchmarks.DDMSForecaster(kind, tau, seed=args.seed, start_config=sc))
        else:
            raise InputError(f"unknown model {spec!r}; use garch, ms-garch, logit:TAU or ao:TAU")
    return out


def cmd_empirical_run(args):
    y = read_series(args.input, args.column)
    oos_start = y.size - args.oos
    try:
        plan = benchmarks.WindowPlan(y.size, oos_start, args.refit_every)
    except DomainError as exc:
        raise InputError(str(exc)) from None
    out = _out_dir(args)
    frame = pd.DataFrame({"origin": plan.origins})
    windows = {}
    for fc in _forecasters(args):
        res = benchmarks.expanding_forecasts(y, fc, plan)
        frame[fc.name] = res.sigma2_hat
        windows[fc.name] = {"failed_origins": res.origins[res.failed].tolist(), "windows": res.windows}
    ddms_logit = [c for c in frame.columns if c.startswith("DDMS-logit")]
    if len(ddms_logit) > 1:
        frame["Logit-Combination"] = benchmarks.combine_forecasts([frame[c] for c in ddms_logit])
    f = out / "forecasts.csv"
    frame.to_csv(f, index=False)
    write_json(out / "windows.json", windows)
    return [f, out / "windows.json"]


def _mc(args, func):
    overrides = {"n_reps": args.reps, "seed": args.seed, "n_random": args.n_random, "s_keep": args.s_keep,
                 "nest_start": args.nest_start}
    if args.taus:
        overrides["taus"] = tuple(args.taus)
    try:
        cfg = experiments.preset(args.preset, **overrides)
    except KeyError as exc:
        raise InputError(str(exc)) from None
    rep = func(cfg, workers=args.workers)
    out = _out_dir(args)
    f = out / "replications.csv"
    rep.frame().to_csv(f, index=False)
    write_json(out / "summary.json", rep.to_dict())
    return [f, out / "summary.json"]


def cmd_mc_insample(args):
    return _mc(args, experiments.mc_insample)


def cmd_mc_forecast(args):
    return _mc(args, experiments.mc_forecast)


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tau", type=int, default=5)
    common.add_argument("--link", choices=["logit", "ao", "cloglog"], default="ao")
    common.add_argument("--reps", type=int, default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--config", default=None, help="JSON file of option defaults")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--n-random", dest="n_random", type=int, default=100)
    common.add_argument("--s-keep", dest="s_keep", type=int, default=10)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", required=True)
    data.add_argument("--column", default=None)

    p = argparse.ArgumentParser(prog="ddms", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate a DDMS path")
    s.add_argument("--family", default="volatility",
                   choices=["bull-bear", "volatility", "mean-switching", "duration-vol"])
    s.add_argument("--params", default=None, help="JSON with named parameters (default: study DGP)")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--burn", type=int, default=200)
    s.add_argument("--rep", type=int, default=0)
    s.set_defaults(func=cmd_simulate, link="logit")

    s = sub.add_parser("fit", parents=[common, data], help="estimate a DDMS model")
    s.add_argument("--family", default="duration-vol", choices=list(FAMILY_ALIASES) + list(FAMILY_ALIASES.values()))
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("filter", parents=[common, data], help="regime probabilities from a fit")
    s.add_argument("--params", required=True, help="fit.json from `ddms fit`")
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("forecast", parents=[common, data], help="h-step variance forecasts from a fit")
    s.add_argument("--params", required=True)
    s.add_argument("--horizon", type=int, default=10)
    s.set_defaults(func=cmd_forecast)

    s = sub.add_parser("matrix", parents=[common], help="write the extended transition matrix")
    s.add_argument("--gammas", type=float, nargs=4, required=True, metavar=("G1_0", "G2_0", "G1_1", "G2_1"))
    s.add_argument("--lam", type=float, default=1.0)
    s.set_defaults(func=cmd_matrix)

    s = sub.add_parser("realized", parents=[common], help="daily realized measures from intraday data")
    s.add_argument("--input", required=True)
    s.add_argument("--time-column", dest="time_column", default="timestamp")
    s.add_argument("--value-column", dest="value_column", default="price")
    s.add_argument("--prices", action=argparse.BooleanOptionalAction, default=True,
                   help="values are prices (default) rather than returns")
    s.set_defaults(func=cmd_realized)

    s = sub.add_parser("evaluate", parents=[common], help="losses, MCS and DM-West tests")
    s.add_argument("--forecasts", required=True, help="CSV, one column per model")
    s.add_argument("--proxy", required=True, help="CSV, one column per volatility proxy")
    s.add_argument("--benchmark", default=None, help="forecast column used as DM-West benchmark")
    s.add_argument("--alpha", type=float, default=0.2)
    s.add_argument("--n-boot", dest="n_boot", type=int, default=1000)
    s.add_argument("--window-frac", dest="window_frac", type=float, default=0.1)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("empirical-run", parents=[common, data], help="expanding-window forecasts")
    s.add_argument("--models", nargs="+", default=["ao:5", "logit:5", "logit:15", "logit:25", "garch", "ms-garch"])
    s.add_argument("--oos", type=int, default=443)
    s.add_argument("--refit-every", dest="refit_every", type=int, default=1)
    s.set_defaults(func=cmd_empirical_run)

    for name, func, default in (("mc-insample", cmd_mc_insample, "table1"),
                                ("mc-forecast", cmd_mc_forecast, "table3-15")):
        s = sub.add_parser(name, parents=[common], help=f"Monte Carlo study (preset {default})")
        s.add_argument("--preset", default=default, choices=sorted(experiments.PRESETS))
        s.add_argument("--taus", type=int, nargs="+", default=None)
        s.add_argument("--nest-start", dest="nest_start", action=argparse.BooleanOptionalAction, default=None,
                       help="also start the A-O search at the logit estimate")
        s.set_defaults(func=func)
    return p


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_json(args.config)
        cfg.pop("schema_version", None)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        outputs = args.func(args)
        write_manifest(_out_dir(args), args, outputs)
    except EstimationFailed as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (InputError, DomainError, SingularChain, DegenerateLikelihood, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
