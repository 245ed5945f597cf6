"""Zeroth-order gradient estimators and the recursive variance-reduced state.

Two smoothing families: coordinate-wise central differences (2d queries per
sample) and a one-sided random-direction estimator (2 queries per sample).
The recursive estimator refreshes at periodic anchors and otherwise adds
mini-batch difference corrections; anchors always use coordinate smoothing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonUnitDirection

_UNIT_TOL = 1e-8


@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing radii. The decaying schedule follows mu_k = 1/sqrt(d*k) and
    nu_k = 1/(d*sqrt(k)) for k >= 1 (k is clamped below by 1)."""

    schedule: str = "decaying"
    mu: float = 1e-3
    nu: float = 1e-4

    def __post_init__(self):
        if self.schedule not in ("fixed", "decaying"):
            raise ConfigError(f"unknown smoothing schedule {self.schedule!r}", field="schedule")
        if self.mu <= 0 or self.nu <= 0:
            raise ConfigError("smoothing radii must be positive", field="mu")

    def mu_at(self, k: int, d: int) -> float:
        if self.schedule == "fixed":
            return self.mu
        return 1.0 / np.sqrt(d * max(k, 1))

    def nu_at(self, k: int, d: int) -> float:
        if self.schedule == "fixed":
            return self.nu
        return 1.0 / (d * np.sqrt(max(k, 1)))


def coo_grad_single(oracle, i: int, x: np.ndarray, mu: float, phase: str = "inner") -> np.ndarray:
    """Coordinate-wise central-difference estimate of grad f_i at x.

    Costs exactly 2*dim queries.
    """
    x = np.asarray(x, dtype=float)
    d = oracle.dim
    g = np.empty(d)
    xp = x.copy()
    for j in range(d):
        orig = xp[j]
        xp[j] = orig + mu
        fp = oracle.query(i, xp, phase)
        xp[j] = orig - mu
        fm = oracle.query(i, xp, phase)
        xp[j] = orig
        g[j] = (fp - fm) / (2.0 * mu)
    return g


def _mean_coo(oracle, indices, x, mu, phase) -> np.ndarray:
    acc = np.zeros(oracle.dim)
    cnt = 0
    for i in indices:
        acc += coo_grad_single(oracle, i, x, mu, phase)
        cnt += 1
    return acc / cnt


def coo_grad_full(oracle, x: np.ndarray, mu: float, phase: str = "anchor") -> np.ndarray:
    """Average coordinate estimate over the full index range (2*n*dim queries)."""
    return _mean_coo(oracle, range(oracle.n), x, mu, phase)


def sample_unit_sphere(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform draw from the unit sphere (normalized Gaussian)."""
    while True:
        u = rng.standard_normal(d)
        nrm = np.linalg.norm(u)
        if nrm > 1e-12:
            return u / nrm


def uni_grad_single(oracle, i: int, x: np.ndarray, nu: float, u: np.ndarray,
                    phase: str = "inner") -> np.ndarray:
    """One-sided random-direction estimate dim*(f_i(x+nu*u)-f_i(x))/nu * u.

    The direction is caller-supplied so a batch can reuse one draw across two
    evaluation points. Costs exactly 2 queries.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > _UNIT_TOL:
        raise NonUnitDirection(f"direction norm {np.linalg.norm(u):.3e} != 1")
    f_shift = oracle.query(i, x + nu * u, phase)
    f_base = oracle.query(i, x, phase)
    return (oracle.dim * (f_shift - f_base) / nu) * u


@dataclass
class SpiderState:
    """Recursive estimator state: current estimate and the iterate it was
    formed at."""

    v: np.ndarray
    x_prev: np.ndarray


def spider_anchor(oracle, x: np.ndarray, mu: float, batch=None,
                  phase: str = "anchor") -> SpiderState:
    """Refresh the recursion with a coordinate-smoothing batch average.

    batch=None averages over the full index range (finite-sum anchors);
    an explicit batch is the online large-batch anchor.
    """
    indices = range(oracle.n) if batch is None else batch
    v = _mean_coo(oracle, indices, x, mu, phase)
    return SpiderState(v=v, x_prev=np.asarray(x, dtype=float).copy())


def spider_step(state: SpiderState, oracle, x: np.ndarray, batch, kind: str,
                mu: float, rng: np.random.Generator = None,
                phase: str = "inner") -> SpiderState:
    """One recursive update: v += batch mean of per-sample estimate differences
    between x and the previous iterate.

    kind "coo" costs 4*b*dim queries; kind "uni" draws one fresh direction per
    sample, reused at both points, and costs 4*b queries.
    """
    x = np.asarray(x, dtype=float)
    diff = np.zeros(oracle.dim)
    cnt = 0
    if kind == "coo":
        for i in batch:
            diff += coo_grad_single(oracle, i, x, mu, phase)
            diff -= coo_grad_single(oracle, i, state.x_prev, mu, phase)
            cnt += 1
    elif kind == "uni":
        if rng is None:
            raise ConfigError("uni steps need an rng for direction draws", field="rng")
        for i in batch:
            u = sample_unit_sphere(rng, oracle.dim)
            diff += uni_grad_single(oracle, i, x, mu, u, phase)
            diff -= uni_grad_single(oracle, i, state.x_prev, mu, u, phase)
            cnt += 1
    else:
        raise ConfigError(f"unknown estimator kind {kind!r}", field="kind")
    v = state.v + diff / cnt
    return SpiderState(v=v, x_prev=x.copy())
