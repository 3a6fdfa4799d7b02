"""Maximum-likelihood estimation for the duration-dependent models and Garch.

The DDMS estimator is a multi-start procedure:

1. draw a matrix of random starting values (one row per candidate) and, for
   the Aranda-Ordaz link, cross it with a grid of ``lam`` values;
2. score every candidate by its exact log-likelihood and keep the best
   ``s_keep``;
3. from each kept start, maximise inside a box of half-width ``r`` around the
   start, subject to ``rcond(A'A) >= rcond_min``;
4. accept the first solution whose projected gradient is near zero and that
   does not sit on the box; otherwise widen the box (``r2``, then ``r3`` on
   the offending coordinates) or move on to the next start.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .chain import RCOND_MIN
from .errors import DegenerateLikelihood, DomainError, EstimationFailed
from .filtering import scaled_densities
from .links import LinkKind, LinkSpec, ao_inverse, clamp_prob
from .models import GarchParams, family_class, garch_filter

log = logging.getLogger(__name__)

PENALTY = 1e6
LAMBDA_BOUNDS = (1e-4, 50.0)
SIGMA_FLOOR = 1e-4

DEFAULT_START_BOUNDS = {
    "mean-switching": {"mu0": (-3, 3), "mu1": (-3, 3), "sigma0": (0.01, 10), "sigma1": (0.01, 10)},
    "duration-vol": {"omega0": (-3, 3), "omega1": (-3, 3), "zeta0": (-0.1, 0.1), "zeta1": (-0.1, 0.1)},
}
GAMMA_START_BOUNDS = {"gamma1_0": (-5, 5), "gamma2_0": (-2, 2), "gamma1_1": (-5, 5), "gamma2_1": (-2, 2)}


@dataclass
class StartSearchConfig:
    n_random: int = 100
    lambda_grid: tuple = tuple(np.linspace(0.1, 10.0, 100))
    bounds: dict | None = None
    s_keep: int = 10
    # keep at most one lambda per row of C so the kept starts are not near-copies
    distinct_rows: bool = True

    def start_bounds(self, family: str) -> dict:
        b = {**DEFAULT_START_BOUNDS[family], **GAMMA_START_BOUNDS}
        if self.bounds:
            b.update(self.bounds)
        return b


@dataclass
class LocalSearchConfig:
    r1: float = 1.0
    r2: float = 2.0
    r3: float = 10.0
    delta: float = 0.01
    rcond_min: float = RCOND_MIN
    optimality_tol: float = 1e-4
    max_iter: int = 500
    fd_step: float = 1e-6
    # solver stops once the projected gradient is this fraction of optimality_tol
    gtol_fraction: float = 0.01
    ftol: float = 1e-13

    def __post_init__(self):
        if not (0 < self.r1 < self.r2 < self.r3) or self.delta <= 0:
            raise DomainError("need 0 < r1 < r2 < r3 and delta > 0")


@dataclass
class LocalResult:
    theta: np.ndarray
    loglik: float
    first_order_norm: float
    proximity_pass: bool
    min_ratio: float
    offending: np.ndarray
    radius: np.ndarray
    message: str
    nfev: int


@dataclass
class FitResult:
    theta_hat: np.ndarray
    loglik: float
    converged: bool
    n_starts_used: int
    first_order_norm: float
    boundary_proximity: float
    lambda_hat: float | None
    family: str
    link: str
    tau: int
    param_names: tuple
    n_obs: int
    diagnostics: list = field(default_factory=list)

    def model(self):
        return family_class(self.family).from_vector(self.theta_hat, self.tau, self.link)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["theta_hat"] = dict(zip(self.param_names, map(float, self.theta_hat)))
        d["param_names"] = list(self.param_names)
        return d


# ----------------------------------------------------------- objective


def natural_bounds(family: str, link: LinkKind | str) -> np.ndarray:
    cls = family_class(family)
    names = cls.param_names(link)
    nb = np.tile([-np.inf, np.inf], (len(names), 1))
    for i, name in enumerate(names):
        if name.startswith("sigma"):
            nb[i, 0] = SIGMA_FLOOR
        elif name == "lam":
            nb[i] = LAMBDA_BOUNDS
    return nb


class Objective:
    """Negative average log-likelihood with cached density and chain pieces.

    Perturbing only observation parameters reuses the chain; perturbing only
    transition parameters reuses the densities.
    """

    def __init__(self, family: str, link: LinkKind | str, tau: int, y, rcond_min: float = RCOND_MIN):
        self.cls = family_class(family)
        self.kind = LinkKind(link)
        self.tau = tau
        self.y = np.asarray(y, dtype=float)
        self.rcond_min = rcond_min
        self.k_core = len(self.cls.core_names)
        self._dens_key = self._chain_key = None
        self.nfev = 0

    def _densities(self, theta):
        core = np.asarray(theta[:self.k_core], dtype=float)
        key = core.tobytes()
        if key != self._dens_key:
            model = self.cls.from_vector(np.concatenate([core, np.zeros(4)]), self.tau, LinkKind.LOGIT)
            self._dens = scaled_densities(model.log_density_matrix(self.y))
            self._dens_key = key
        return self._dens

    def _link(self, theta) -> LinkSpec:
        return LinkSpec(self.kind, theta[-1]) if self.kind is LinkKind.ARANDA_ORDAZ else LinkSpec(self.kind)

    def _chain(self, theta):
        key = theta[self.k_core:].tobytes()
        if key != self._chain_key:
            link = self._link(theta)
            g = theta[self.k_core:self.k_core + 4].reshape(2, 2)
            eta = g[:, [0]] + g[:, [1]] * np.arange(1, self.tau + 1)[None, :]
            stay = np.ascontiguousarray(clamp_prob(np.asarray(link.inverse(eta), dtype=float)))
            pi, rc = _kernels.stationary(stay, self.rcond_min)
            self._chain_val = (stay, pi, rc)
            self._chain_key = key
        return self._chain_val

    def evaluate(self, theta):
        """Return ``(loglik, rcond)``; ``loglik`` is ``-inf`` at infeasible points."""
        theta = np.asarray(theta, dtype=float)
        self.nfev += 1
        try:
            stay, pi, rc = self._chain(theta)
            if pi.shape[0] == 0:
                return -np.inf, rc
            dens, offs = self._densities(theta)
        except DomainError:
            return -np.inf, 0.0
        ll, _, _ = _kernels.forward(stay, dens, offs, pi, False)
        return float(ll), rc

    def loglik(self, theta) -> float:
        return self.evaluate(theta)[0]

    def __call__(self, theta) -> float:
        ll, rc = self.evaluate(theta)
        if not np.isfinite(ll):
            return PENALTY
        f = -ll / max(len(self.y), 1)
        soft = 10.0 * self.rcond_min
        if rc < soft:
            f += (np.log10(soft / rc)) ** 2
        return f


def fd_gradient(f, x, step: float = 1e-6, f0: float | None = None) -> np.ndarray:
    """Central differences with relative steps; one-sided where one side is infeasible."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fp, fm = f(xp), f(xm)
        if fp < PENALTY and fm < PENALTY:
            g[i] = (fp - fm) / (2 * h)
        else:
            if f0 is None:
                f0 = f(x)
            g[i] = (fp - f0) / h if fp < PENALTY else (f0 - fm) / h
    return g


def projected_gradient_norm(grad, x, lo, hi) -> float:
    g = np.array(grad, dtype=float)
    tol_lo = 1e-10 * (1 + np.abs(lo))
    tol_hi = 1e-10 * (1 + np.abs(hi))
    g[(x - lo <= tol_lo) & (g > 0)] = 0.0
    g[(hi - x <= tol_hi) & (g < 0)] = 0.0
    return float(np.max(np.abs(g))) if g.size else 0.0


# --------------------------------------------------------- step 1 and 2


def draw_start_matrix(family: str, config: StartSearchConfig, rng) -> np.ndarray:
    """Random non-link parameters, one candidate per row (``n_random x (kappa - 1)``)."""
    rng = np.random.default_rng(rng)
    cls = family_class(family)
    bounds = config.start_bounds(family)
    names = cls.param_names(LinkKind.LOGIT)
    lo = np.array([bounds[n][0] for n in names], dtype=float)
    hi = np.array([bounds[n][1] for n in names], dtype=float)
    if np.any(hi < lo):
        raise DomainError("start bounds must satisfy low <= high")
    return lo + (hi - lo) * rng.random((config.n_random, len(names)))


def score_candidates(family: str, link: LinkKind | str, tau: int, y, C, lambda_grid=None,
                     rcond_min: float = RCOND_MIN):
    """Log-likelihood of every candidate.

    Returns ``(thetas, scores)``; for the Aranda-Ordaz link each row of ``C``
    is paired with every grid value of ``lam``.
    """
    kind = LinkKind(link)
    obj = Objective(family, LinkKind.LOGIT, tau, y, rcond_min)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if kind is not LinkKind.ARANDA_ORDAZ:
        obj.kind = kind
        return C.copy(), np.array([obj.loglik(row) for row in C])
    grid = np.asarray(lambda_grid, dtype=float)
    d = np.arange(1, tau + 1)
    thetas, scores = [], []
    for row in C:
        g = row[obj.k_core:obj.k_core + 4].reshape(2, 2)
        eta = g[:, [0]] + g[:, [1]] * d[None, :]
        stays = clamp_prob(ao_inverse(eta[None, :, :], grid[:, None, None]))
        try:
            dens, offs = obj._densities(np.append(row, 1.0))
            sc = _kernels.loglik_many(np.ascontiguousarray(stays), dens, offs, rcond_min)
        except DomainError:
            sc = np.full(grid.size, -np.inf)
        thetas.append(np.column_stack([np.tile(row, (grid.size, 1)), grid]))
        scores.append(sc)
    return np.vstack(thetas), np.concatenate(scores)


def _rejection_reasons(family, link, tau, y, thetas, rcond_min):
    obj = Objective(family, link, tau, y, rcond_min)
    singular = degenerate = 0
    for th in thetas:
        try:
            _, pi, _ = obj._chain(th)
        except DomainError:
            degenerate += 1
            continue
        if pi.shape[0] == 0:
            singular += 1
        else:
            degenerate += 1
    return {"singular_chain": singular, "degenerate_density": degenerate}


def generate_starts(family: str, link: LinkKind | str, tau: int, y, config: StartSearchConfig | None = None,
                    rng=None, C=None, rcond_min: float = RCOND_MIN):
    """Score the candidate set and return the best ``s_keep`` as ``(thetas, scores)``, best first."""
    config = config or StartSearchConfig()
    if C is None:
        C = draw_start_matrix(family, config, rng)
    thetas, scores = score_candidates(family, link, tau, y, C, config.lambda_grid, rcond_min)
    finite = np.isfinite(scores)
    if not finite.any():
        reasons = _rejection_reasons(family, link, tau, y, thetas, rcond_min)
        raise EstimationFailed(f"all {len(scores)} candidate starts infeasible: {reasons}", [reasons])
    order = np.argsort(-np.where(finite, scores, -np.inf), kind="stable")
    order = order[finite[order]]
    if config.distinct_rows and LinkKind(link) is LinkKind.ARANDA_ORDAZ:
        rows = order // len(config.lambda_grid)
        _, first = np.unique(rows, return_index=True)
        order = order[np.sort(first)]
    keep = order[:config.s_keep]
    return thetas[keep], scores[keep]


# -------------------------------------------------------------- step 3-6


def proximity_check(theta1, theta0, radius, natural_bounds_mask=None, delta: float = 0.01):
    """Relative distance of a solution to the faces of its search box.

    ``natural_bounds_mask`` marks coordinates (shape ``(k,)``) or individual
    faces (shape ``(k, 2)``, lower then upper) to leave out. Coordinates with
    ``|theta1| < 1e-8`` use absolute distance divided by the radius.
    Returns ``(passed, min_ratio, offending)``.
    """
    theta1 = np.asarray(theta1, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    r = np.broadcast_to(np.asarray(radius, dtype=float), theta1.shape)
    dist = np.column_stack([np.abs(theta1 - (theta0 - r)), np.abs(theta1 - (theta0 + r))])
    scale = np.abs(theta1)
    small = scale < 1e-8
    scale = np.where(small, r, scale)
    ratios = dist / scale[:, None]
    mask = np.zeros_like(ratios, dtype=bool)
    if natural_bounds_mask is not None:
        m = np.asarray(natural_bounds_mask, dtype=bool)
        mask |= m if m.ndim == 2 else m[:, None]
    ratios = np.where(mask, np.inf, ratios)
    min_ratio = float(ratios.min()) if ratios.size else np.inf
    offending = (ratios <= delta).any(axis=1)
    return bool(min_ratio > delta), min_ratio, offending


def local_optimize(objective, start, radius, config: LocalSearchConfig | None = None,
                   natural=None, center=None) -> LocalResult:
    """Bounded quasi-Newton maximisation inside ``center +/- radius``.

    ``objective`` maps a parameter vector to a value to minimise (``PENALTY``
    at infeasible points) and may expose ``loglik``. The box is clipped to
    ``natural`` bounds; clipped faces are exempt from the proximity check.
    """
    config = config or LocalSearchConfig()
    start = np.asarray(start, dtype=float)
    center = start if center is None else np.asarray(center, dtype=float)
    k = start.size
    r = np.broadcast_to(np.asarray(radius, dtype=float), (k,)).copy()
    natural = np.tile([-np.inf, np.inf], (k, 1)) if natural is None else np.asarray(natural, dtype=float)
    lo = np.maximum(center - r, natural[:, 0])
    hi = np.minimum(center + r, natural[:, 1])
    face_mask = np.column_stack([center - r <= natural[:, 0], center + r >= natural[:, 1]])
    x0 = np.clip(start, lo, hi)

    def grad(x):
        return fd_gradient(objective, x, config.fd_step)

    res = minimize(objective, x0, jac=grad, method="L-BFGS-B", bounds=list(zip(lo, hi)),
                   options={"maxiter": config.max_iter, "ftol": config.ftol,
                            "gtol": config.optimality_tol * config.gtol_fraction, "maxcor": 20})
    x = np.clip(res.x, lo, hi)
    fx = objective(x)
    if fx >= PENALTY:
        fo = np.inf
    else:
        fo = projected_gradient_norm(grad(x), x, lo, hi)
    ll = objective.loglik(x) if hasattr(objective, "loglik") else -fx
    passed, min_ratio, offending = proximity_check(x, center, r, face_mask, config.delta)
    return LocalResult(x, float(ll), fo, passed, min_ratio, offending, r, str(res.message), int(res.nfev))


def _summary(stage, k, lr: LocalResult) -> dict:
    return {"start": k, "stage": stage, "loglik": lr.loglik, "first_order_norm": lr.first_order_norm,
            "min_ratio": lr.min_ratio, "message": lr.message}


def fit(y, family: str, link: LinkSpec | LinkKind | str, tau: int,
        start_config: StartSearchConfig | None = None, local_config: LocalSearchConfig | None = None,
        seed=None, C=None, extra_starts=None, min_obs: int = 50) -> FitResult:
    """Estimate a duration-dependent model by the multi-start retry ladder.

    ``C`` (random candidate matrix) is drawn from ``seed`` when not given, so
    two fits with the same seed share their random starts. ``extra_starts``
    are tried before the scored candidates.
    """
    start_config = start_config or StartSearchConfig()
    local_config = local_config or LocalSearchConfig()
    kind = link.kind if isinstance(link, LinkSpec) else LinkKind(link)
    y = np.asarray(y, dtype=float)
    if y.shape[0] < min_obs:
        raise DomainError(f"need at least {min_obs} observations, got {y.shape[0]}")
    if np.any(~np.isfinite(y)):
        raise DomainError("series contains non-finite values")
    names = family_class(family).param_names(kind)
    if C is None:
        C = draw_start_matrix(family, start_config, seed)
    starts, _ = generate_starts(family, kind, tau, y, start_config, C=C, rcond_min=local_config.rcond_min)
    if extra_starts is not None:
        extra = np.atleast_2d(np.asarray(extra_starts, dtype=float))
        starts = np.vstack([extra, starts])

    obj = Objective(family, kind, tau, y, local_config.rcond_min)
    natural = natural_bounds(family, kind)
    cfg = local_config
    tol = cfg.optimality_tol
    diagnostics = []

    def done(lr: LocalResult, k: int) -> FitResult:
        assert _kernels.stationary(obj._chain(lr.theta)[0], cfg.rcond_min)[0].shape[0] > 0
        return FitResult(lr.theta, lr.loglik, True, k + 1, lr.first_order_norm, lr.min_ratio,
                         float(lr.theta[-1]) if kind is LinkKind.ARANDA_ORDAZ else None,
                         family, kind.value, tau, names, int(y.shape[0]), diagnostics)

    for k, th0 in enumerate(starts):
        if not np.isfinite(obj.loglik(th0)):
            diagnostics.append({"start": k, "stage": "start", "message": "infeasible start"})
            continue
        lr = local_optimize(obj, th0, cfg.r1, cfg, natural)
        diagnostics.append(_summary("r1", k, lr))
        if not lr.first_order_norm <= tol:
            continue
        if lr.proximity_pass:
            return done(lr, k)
        lr = local_optimize(obj, lr.theta, cfg.r2, cfg, natural, center=th0)
        diagnostics.append(_summary("r2", k, lr))
        if not lr.first_order_norm <= tol:
            continue
        if lr.proximity_pass:
            return done(lr, k)
        radius = np.where(lr.offending, cfg.r3, cfg.r2)
        lr = local_optimize(obj, lr.theta, radius, cfg, natural, center=th0)
        diagnostics.append(_summary("r3", k, lr))
        if lr.first_order_norm <= tol and lr.proximity_pass:
            return done(lr, k)
    raise EstimationFailed(f"no start out of {len(starts)} met both acceptance criteria", diagnostics)


# ---------------------------------------------------------------- Garch


@dataclass
class GarchFit:
    params: GarchParams
    loglik: float
    std_errors: np.ndarray
    converged: bool

    def to_dict(self) -> dict:
        names = GarchParams.param_names(self.params.k)
        return {"theta_hat": dict(zip(names, map(float, self.params.to_vector()))),
                "std_errors": dict(zip(names, map(float, self.std_errors))),
                "loglik": self.loglik, "converged": self.converged, "k": self.params.k}


def _garch_loglik(theta, k, y) -> float:
    try:
        return garch_filter(GarchParams.from_vector(theta, k), y).loglik
    except (DomainError, DegenerateLikelihood):
        return -np.inf


def numerical_hessian(f, x, step: float = 1e-4) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    k = x.size
    h = step * np.maximum(1.0, np.abs(x))
    H = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h[i]
            ej[j] = h[j]
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            H[i, j] = H[j, i] = v
    return H


def fit_garch(y, k: int = 1, starts=None) -> GarchFit:
    """Gaussian quasi-likelihood fit of Garch(1,1) (``k=1``) or two-regime Garch (``k=2``)."""
    y = np.asarray(y, dtype=float)
    v = float(np.var(y))
    T = y.shape[0]
    if starts is None:
        base = [(0.05, 0.90), (0.10, 0.80), (0.03, 0.95)]
        if k == 1:
            starts = [[v * (1 - a - b), a, b] for a, b in base]
        else:
            starts = [[0.5 * v * (1 - a - b), a, b, 2.0 * v * (1 - a - b), a, b, 0.95, 0.95] for a, b in base]
    bounds = [(1e-8 * v, 10 * v), (0.0, 0.999), (0.0, 0.999)] * k + [(1e-3, 1 - 1e-3)] * (2 if k == 2 else 0)

    def f(th):
        a, b = th[1:3 * k:3], th[2:3 * k:3]
        if np.any(a + b >= 0.9999):
            return PENALTY
        ll = _garch_loglik(th, k, y)
        return -ll / T if np.isfinite(ll) else PENALTY

    best = None
    for s in starts:
        res = minimize(f, np.asarray(s, dtype=float), method="L-BFGS-B", bounds=bounds,
                       jac=lambda x: fd_gradient(f, x, 1e-6), options={"maxiter": 1000, "ftol": 1e-14})
        if best is None or res.fun < best.fun:
            best = res
    theta = best.x
    ll = _garch_loglik(theta, k, y)
    H = numerical_hessian(lambda th: _garch_loglik(th, k, y), theta)
    with np.errstate(invalid="ignore"):
        try:
            se = np.sqrt(np.diag(np.linalg.inv(-H)))
        except np.linalg.LinAlgError:
            se = np.full(theta.size, np.nan)
    return GarchFit(GarchParams.from_vector(theta, k), float(ll), se, bool(best.success))
