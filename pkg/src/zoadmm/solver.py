"""Linearized multi-block stochastic ADMM driven by zeroth-order estimators.

Five variants share one loop: two finite-sum variants with full periodic
anchors, two online variants with large-batch anchors, and a baseline that
replaces the recursion with a fresh mini-batch estimate every iteration.
Variant ids: zo_spider_admm_coo, zo_spider_admm_mixed, zoo_admm_plus_coo,
zoo_admm_plus_mixed, zo_sgd_admm ("mixed" = random-direction inner steps).
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .diagnostics import (TraceRecord, TraceWindow, augmented_lagrangian,
                          lyapunov, lyapunov_coefficients, objective_value,
                          stationarity_measure, theta_k)
from .errors import ConfigError, FactorizationFailure, NoFixedPoint
from .estimators import (SmoothingParams, SpiderState, _mean_coo,
                         spider_anchor, spider_step)
from .oracle import sample_batch
from .penalties import prox
from .problem import ProblemSpec, spectral_summary

logger = logging.getLogger("zoadmm")

ALGORITHMS = ("zo_spider_admm_coo", "zo_spider_admm_mixed",
              "zoo_admm_plus_coo", "zoo_admm_plus_mixed", "zo_sgd_admm")

_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str
    eta: float
    rho: float
    K: int
    lipschitz_L: float
    q: int = 1
    b: int = 1
    b1: int = 1
    b2: int = 1
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)
    seed: int = 0
    x_update: str = "linearized"
    r_x: float | None = None
    r_y: tuple | None = None
    x0: object = "zeros"
    query_budget: int | None = None


@dataclass
class IterateState:
    k: int
    x: np.ndarray
    y: list
    lam: np.ndarray
    spider: SpiderState | None = None


@dataclass
class Trace:
    records: list
    zeta: int
    k_star: int
    state: IterateState
    queries: dict
    config: SolverConfig
    wall_time: float = 0.0


def resolve_linearization(spec: ProblemSpec, config: SolverConfig):
    """The linearization weights, defaulting to their lower bounds
    r_x = rho*eta*sigma_max(A^T A) + 1 and r_y[j] = rho*sigma_max(B_j^T B_j) + 1."""
    sig = spectral_summary(spec)
    r_x = config.r_x
    if r_x is None:
        r_x = config.rho * config.eta * sig.sigma_max_A + 1.0
    if config.r_y is None:
        r_y = [config.rho * spec.block_sigma_max(j) + 1.0 for j in range(spec.m)]
    else:
        r_y = list(config.r_y)
    return float(r_x), r_y


def validate_config(spec: ProblemSpec, config: SolverConfig):
    """Check the config against the problem. Returns resolved (r_x, r_y)."""
    if config.algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {config.algorithm!r}", field="algorithm")
    for name in ("eta", "rho", "lipschitz_L"):
        if getattr(config, name) <= 0:
            raise ConfigError(f"{name} must be positive", field=name)
    for name in ("K", "q", "b", "b1", "b2"):
        v = getattr(config, name)
        if not isinstance(v, (int, np.integer)) or v < 1:
            raise ConfigError(f"{name} must be a positive integer", field=name)
    if config.x_update not in ("linearized", "exact"):
        raise ConfigError(f"unknown x_update mode {config.x_update!r}", field="x_update")
    if config.query_budget is not None and config.query_budget < 1:
        raise ConfigError("query_budget must be positive", field="query_budget")
    if config.algorithm.startswith("zo_spider") and spec.regime == "online":
        raise ConfigError("full-anchor variants need the finite_sum regime; "
                          "use a zoo_admm_plus variant online", field="algorithm")
    if isinstance(config.x0, str):
        if config.x0 not in ("zeros", "ones"):
            raise ConfigError(f"unknown x0 preset {config.x0!r}", field="x0")
    else:
        x0 = np.asarray(config.x0, dtype=float)
        if x0.shape != (spec.d,):
            raise ConfigError(f"x0 must have shape ({spec.d},)", field="x0")

    r_x, r_y = resolve_linearization(spec, config)
    sig = spectral_summary(spec)
    # G = r_x I - rho*eta*A^T A and each H_j = r_j I - rho*B_j^T B_j must
    # dominate the identity
    if r_x < config.rho * config.eta * sig.sigma_max_A + 1.0 - _BOUND_SLACK:
        raise ConfigError("r_x below rho*eta*sigma_max(A^T A) + 1", field="r_x")
    if len(r_y) != spec.m:
        raise ConfigError(f"r_y must have {spec.m} entries", field="r_y")
    for j, rj in enumerate(r_y):
        if rj < config.rho * spec.block_sigma_max(j) + 1.0 - _BOUND_SLACK:
            raise ConfigError(f"r_y[{j}] below rho*sigma_max(B^T B) + 1", field="r_y")
    return r_x, r_y


def _initial_x(config: SolverConfig, d: int) -> np.ndarray:
    if isinstance(config.x0, str):
        return np.ones(d) if config.x0 == "ones" else np.zeros(d)
    return np.asarray(config.x0, dtype=float).copy()


def _coupled_sum(spec: ProblemSpec, y: list) -> np.ndarray:
    s = np.zeros(spec.l)
    for blk, yj in zip(spec.blocks, y):
        s += blk.B @ yj
    return s


def y_update(spec: ProblemSpec, config: SolverConfig, state: IterateState,
             j: int, y_partial=()) -> np.ndarray:
    """Gauss-Seidel step for block j: prox of the penalty at the linearized
    point, with blocks before j already updated (taken from y_partial)."""
    _, r_y = resolve_linearization(spec, config)
    blk = spec.blocks[j]
    r_j = r_y[j]
    c_t = spec.A @ state.x - spec.c
    for i, other in enumerate(spec.blocks):
        if i == j:
            continue
        yi = y_partial[i] if i < len(y_partial) else state.y[i]
        c_t += other.B @ yi
    w = state.y[j] - blk.B.T @ (config.rho * (blk.B @ state.y[j] + c_t) - state.lam) / r_j
    return prox(blk.effective_penalty(), w, 1.0 / r_j)


def x_update_linearized(spec: ProblemSpec, config: SolverConfig, state: IterateState,
                        v: np.ndarray, y_new: list) -> np.ndarray:
    """Closed-form minimizer of the linearized surrogate:
    x+ = (G x)/r - (eta/r) v - (eta*rho/r) A^T (sum_j B_j y_j+ - c - lam/rho)."""
    r_x, _ = resolve_linearization(spec, config)
    eta, rho = config.eta, config.rho
    Gx = r_x * state.x - rho * eta * (spec._AtA @ state.x)
    t = spec.A.T @ (_coupled_sum(spec, y_new) - spec.c - state.lam / rho)
    return Gx / r_x - (eta / r_x) * v - (eta * rho / r_x) * t


def x_update_exact(spec: ProblemSpec, config: SolverConfig, state: IterateState,
                   v: np.ndarray, y_new: list) -> np.ndarray:
    """Solve (G/eta + rho A^T A) x+ = G x/eta - v - rho A^T (sum B y+ - c - lam/rho)
    with a cached Cholesky factorization."""
    r_x, _ = resolve_linearization(spec, config)
    eta, rho = config.eta, config.rho
    key = ("cho", eta, rho, r_x)
    fac = spec._solver_cache.get(key)
    if fac is None:
        G = r_x * np.eye(spec.d) - rho * eta * spec._AtA
        M = G / eta + rho * spec._AtA
        try:
            fac = scipy.linalg.cho_factor(M)
        except scipy.linalg.LinAlgError as e:
            raise FactorizationFailure(f"x-update system is not SPD: {e}") from e
        spec._solver_cache[key] = fac
    Gx = r_x * state.x - rho * eta * (spec._AtA @ state.x)
    rhs = Gx / eta - v - rho * (spec.A.T @ (_coupled_sum(spec, y_new) - spec.c - state.lam / rho))
    return scipy.linalg.cho_solve(fac, rhs)


def lambda_update(spec: ProblemSpec, config: SolverConfig, x_new: np.ndarray,
                  y_new: list, lam: np.ndarray) -> np.ndarray:
    return lam - config.rho * spec.constraint_residual(x_new, y_new)


def _effective_batch(spec: ProblemSpec, size: int) -> int:
    if spec.regime == "finite_sum":
        return min(size, spec.oracle.n)
    return size


def _draw_batch(rng, spec: ProblemSpec, size: int):
    """Uniform with-replacement draw; a finite-sum batch covering the whole
    dataset degrades to the deterministic full pass."""
    n = spec.oracle.n
    if spec.regime == "finite_sum" and size >= n:
        return np.arange(n)
    return sample_batch(rng, n, size)


def iteration_query_cost(spec: ProblemSpec, config: SolverConfig, k: int) -> int:
    """Exact oracle cost of iteration k's estimator, by construction."""
    d = spec.d
    a = config.algorithm
    if a == "zo_sgd_admm":
        return 2 * _effective_batch(spec, config.b) * d
    if k % config.q == 0:
        if a.startswith("zo_spider"):
            return 2 * spec.oracle.n * d
        return 2 * d * _effective_batch(spec, config.b1)
    if a == "zo_spider_admm_coo":
        return 4 * _effective_batch(spec, config.b) * d
    if a == "zo_spider_admm_mixed":
        return 4 * _effective_batch(spec, config.b)
    if a == "zoo_admm_plus_coo":
        return 4 * _effective_batch(spec, config.b2) * d
    return 4 * _effective_batch(spec, config.b2)


def _diag_value(spec, diag, x):
    if diag is not None:
        return float(diag.value(x))
    oracle = spec.oracle
    return sum(oracle.query(i, x, "diagnostic") for i in range(oracle.n)) / oracle.n


def run(spec: ProblemSpec, config: SolverConfig, diag=None) -> Trace:
    """Run the configured variant for up to K iterations (fewer when a query
    budget is set) and return the full per-iteration trace.

    diag, when given, supplies analytic full-objective value/gradient for
    trace reporting; without it the objective is measured through
    diagnostic-phase queries and the stationarity column is NaN.
    """
    t_start = time.perf_counter()
    r_x, r_y = validate_config(spec, config)
    rng = np.random.default_rng(config.seed)
    oracle = spec.oracle
    sig = spectral_summary(spec)
    d = spec.d
    a = config.algorithm

    x = _initial_x(config, d)
    y = [np.zeros(blk.penalty.dim) for blk in spec.blocks]
    lam = np.zeros(spec.l)

    sigma_max_G = r_x - config.rho * config.eta * sig.sigma_min_A
    coef_move, coef_epoch, dim_factor = lyapunov_coefficients(
        a, config.lipschitz_L, config.rho, config.eta,
        sig.sigma_min_A, sigma_max_G, config.b, config.b2, d)

    grad_fn = getattr(diag, "grad", None) if diag is not None else None
    offset = oracle.ledger.algorithmic
    spider = None
    x_prev = x.copy()
    epoch_sq: list = []
    records = []
    spent = 0

    for k in range(config.K):
        cost_k = iteration_query_cost(spec, config, k)
        if config.query_budget is not None and k > 0 and spent + cost_k > config.query_budget:
            break
        mu_k = config.smoothing.mu_at(k, d)
        nu_k = config.smoothing.nu_at(k, d)

        if a == "zo_sgd_admm":
            batch = _draw_batch(rng, spec, config.b)
            v = _mean_coo(oracle, batch, x, mu_k, "inner")
            anchored = k % config.q == 0
        elif k % config.q == 0:
            if a.startswith("zo_spider"):
                spider = spider_anchor(oracle, x, mu_k)
            else:
                batch = _draw_batch(rng, spec, config.b1)
                spider = spider_anchor(oracle, x, mu_k, batch=batch)
            v = spider.v
            anchored = True
        else:
            kind = "coo" if a.endswith("_coo") else "uni"
            size = config.b if a.startswith("zo_spider") else config.b2
            batch = _draw_batch(rng, spec, size)
            radius = mu_k if kind == "coo" else nu_k
            spider = spider_step(spider, oracle, x, batch, kind, radius, rng=rng)
            v = spider.v
            anchored = False
        spent = oracle.ledger.algorithmic - offset

        f_k = _diag_value(spec, diag, x)
        obj = objective_value(spec, y, f_k)
        aug = augmented_lagrangian(spec, config.rho, x, y, lam, f_k)
        res = spec.constraint_residual(x, y)
        res_norm = float(np.linalg.norm(res))
        if grad_fn is not None:
            stat = stationarity_measure(spec, x, y, lam, grad_fn(x))
        else:
            stat = float("nan")

        state = IterateState(k=k, x=x, y=y, lam=lam, spider=spider)
        y_new = []
        for j in range(spec.m):
            y_new.append(y_update(spec, config, state, j, y_new))
        if config.x_update == "exact":
            x_next = x_update_exact(spec, config, state, v, y_new)
        else:
            x_next = x_update_linearized(spec, config, state, v, y_new)
        if spec.m >= 1:
            lam_new = lambda_update(spec, config, x_next, y_new, lam)
        else:
            lam_new = lam  # no coupled blocks: multiplier stays at zero

        if anchored:
            epoch_sq = []
        dx = x_next - x
        epoch_sq.append(float(dx @ dx))
        window = TraceWindow(x_prev=x_prev, x=x, x_next=x_next, y=y,
                             y_next=y_new, epoch_sq_steps=list(epoch_sq))
        theta = theta_k(window, config.q, dim_factor)
        lyap = lyapunov(aug, window, coef_move, coef_epoch)
        records.append(TraceRecord(k=k, obj=obj, aug_lag=aug, residual=res_norm,
                                   stationarity=stat, theta=theta, lyapunov=lyap,
                                   queries_cum=spent))
        x_prev, x, y, lam = x, x_next, y_new, lam_new

    k_run = len(records)
    zeta = int(rng.integers(k_run))
    thetas = np.array([r.theta for r in records])
    k_star = int(np.argmin(thetas))
    final = IterateState(k=k_run, x=x, y=y, lam=lam, spider=spider)
    return Trace(records=records, zeta=zeta, k_star=k_star, state=final,
                 queries=oracle.ledger_snapshot(), config=config,
                 wall_time=time.perf_counter() - t_start)


@dataclass
class HyperparamRecipe:
    algorithm: str
    alpha: float
    epsilon: float
    L: float
    eta: float
    rho: float
    kappa_G: float
    r_x: float
    r_y: tuple
    q: int
    b: int
    b1: int
    b2: int
    mu: float
    nu: float
    K: int
    notes: tuple = ()

    def to_config(self, seed: int = 0, **overrides) -> SolverConfig:
        base = dict(
            algorithm=self.algorithm, eta=self.eta, rho=self.rho, K=self.K,
            lipschitz_L=self.L, q=self.q, b=self.b, b1=self.b1, b2=self.b2,
            smoothing=SmoothingParams(schedule="fixed", mu=self.mu, nu=self.nu),
            seed=seed, r_x=self.r_x, r_y=self.r_y)
        base.update(overrides)
        return SolverConfig(**base)


def derive_hyperparams(spec: ProblemSpec, L: float, algorithm: str,
                       alpha: float = 1.0, epsilon: float = 1e-2,
                       C: float = 1.0) -> HyperparamRecipe:
    """Resolve step sizes, penalty weight, batch plan, and smoothing radii
    from the target accuracy.

    The rho <- kappa(G) <- G <- rho circle is closed by fixed-point
    iteration with r_x held at its lower bound, which pins the smallest
    eigenvalue of G at 1 (so eta = alpha/(4L) throughout). Raises
    NoFixedPoint when the iteration does not settle within 100 rounds,
    which signals constraint spectra too spread out for this recipe.
    """
    if L <= 0:
        raise ConfigError("L must be positive", field="L")
    if alpha <= 0:
        raise ConfigError("alpha must be positive", field="alpha")
    if not 0 < epsilon <= 1:
        raise ConfigError("epsilon must lie in (0, 1]", field="epsilon")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}", field="algorithm")

    sig = spectral_summary(spec)
    smin, smax = sig.sigma_min_A, sig.sigma_max_A
    eta = alpha / (4.0 * L)
    notes = []
    if spec.m == 0 or smin <= 0:
        # no coupled blocks: penalty weight is inert, pick a neutral value
        rho, kappa, r_x = 1.0, 1.0, 1.0
        notes.append("rho defaulted: no constraint spectrum")
    else:
        coef = 2.0 * math.sqrt(237.0) * L / (smin * alpha)
        kappa = 1.0
        converged = False
        for _ in range(100):
            rho = coef * kappa
            r_x = rho * eta * smax + 1.0
            kappa_new = r_x - rho * eta * smin
            if abs(kappa_new - kappa) <= 1e-10 * max(1.0, abs(kappa_new)):
                kappa = kappa_new
                converged = True
                break
            kappa = kappa_new
        if not converged:
            raise NoFixedPoint(
                "penalty-weight fixed point did not converge in 100 rounds "
                f"(A^T A eigenvalue range [{smin:.3e}, {smax:.3e}])")
        rho = coef * kappa
        r_x = rho * eta * smax + 1.0

    d = spec.d
    n = spec.oracle.n
    root_n = math.isqrt(n)
    if root_n * root_n < n:
        root_n += 1  # ceil(sqrt(n))
    inv_root_eps = math.ceil(1.0 / math.sqrt(epsilon))
    if algorithm == "zo_spider_admm_coo":
        q = b = root_n
        b1 = b2 = b
    elif algorithm == "zo_spider_admm_mixed":
        q = root_n
        b = q * d
        if spec.regime == "finite_sum" and b > n:
            logger.info("capping inner batch %d at dataset size %d", b, n)
            notes.append(f"inner batch capped at n={n}")
            b = n
        b1 = b2 = b
    elif algorithm == "zoo_admm_plus_coo":
        q = b2 = inv_root_eps
        b1 = math.ceil(1.0 / epsilon)
        b = b2
    elif algorithm == "zoo_admm_plus_mixed":
        q = inv_root_eps
        b2 = d * q
        b1 = math.ceil(1.0 / epsilon)
        b = b2
    else:
        # zo_sgd_admm: no recursion, so a constant-step plan needs the batch
        # itself to push the estimator variance below the target accuracy
        q = 1
        b = math.ceil(1.0 / epsilon)
        if spec.regime == "finite_sum" and b > n:
            notes.append(f"batch capped at n={n}")
            b = n
        b1 = b2 = b
    mu = math.sqrt(epsilon / d)
    nu = math.sqrt(epsilon) / d
    K = math.ceil(C / epsilon)
    r_y = tuple(rho * spec.block_sigma_max(j) + 1.0 for j in range(spec.m))
    return HyperparamRecipe(algorithm=algorithm, alpha=alpha, epsilon=epsilon,
                            L=L, eta=eta, rho=rho, kappa_G=kappa, r_x=r_x,
                            r_y=r_y, q=q, b=b, b1=b1, b2=b2, mu=mu, nu=nu,
                            K=K, notes=tuple(notes))
