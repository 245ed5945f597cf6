"""Per-iteration diagnostics: objective, augmented Lagrangian, stationarity,
movement score, and the variant-matched potential function.

Conventions for a trace row at iteration k: the recorded point is the state
before the k-th update, the movement score spans the k-th update, and the
cumulative query count includes the k-th update's estimator cost.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientHistory
from .penalties import eval_penalty, subgrad_dist

CSV_FIELDS = ("k", "obj", "aug_lag", "residual", "stationarity", "theta",
              "lyapunov", "queries_cum")


@dataclass
class TraceRecord:
    k: int
    obj: float
    aug_lag: float
    residual: float
    stationarity: float
    theta: float
    lyapunov: float
    queries_cum: int


@dataclass
class TraceWindow:
    """Iterate history needed by theta_k and the potential at iteration k.

    epoch_sq_steps holds ||x_{i+1} - x_i||^2 for i from the current epoch
    start through i = k; its last entry is the square of the step the window
    spans. x_prev equals x at k = 0 (the pre-initial iterate is defined as
    the initial one).
    """

    x_prev: np.ndarray
    x: np.ndarray
    x_next: np.ndarray
    y: list
    y_next: list
    epoch_sq_steps: list


def penalty_total(spec, y: list) -> float:
    return sum(eval_penalty(blk.effective_penalty(), yj)
               for blk, yj in zip(spec.blocks, y))


def objective_value(spec, y: list, f_value: float) -> float:
    """f(x) + sum_j psi_j(y_j), with f supplied by the caller."""
    return f_value + penalty_total(spec, y)


def augmented_lagrangian(spec, rho: float, x, y: list, lam, f_value: float) -> float:
    res = spec.constraint_residual(x, y)
    return (f_value + penalty_total(spec, y)
            - float(lam @ res) + 0.5 * rho * float(res @ res))


def stationarity_measure(spec, x, y: list, lam, grad_f) -> float:
    """Squared distance of 0 to the (plain) Lagrangian's blockwise
    subdifferential: gradient block, one penalty block per y_j, and the
    constraint block."""
    res = spec.constraint_residual(x, y)
    xb = grad_f - spec.A.T @ lam
    total = float(xb @ xb) + float(res @ res)
    for blk, yj in zip(spec.blocks, y):
        dj = subgrad_dist(blk.effective_penalty(), yj, blk.B.T @ lam)
        total += dj * dj
    return total


def theta_k(window: TraceWindow, q: int, dim_factor: float) -> float:
    """Movement score around iteration k.

    dim_factor scales the epoch-window term: 1 for coordinate-smoothing inner
    steps, the problem dimension for random-direction inner steps.
    """
    if not window.epoch_sq_steps:
        raise InsufficientHistory("window carries no epoch steps")
    dx_next = window.x_next - window.x
    dx_prev = window.x - window.x_prev
    t = float(dx_next @ dx_next) + float(dx_prev @ dx_prev)
    t += (dim_factor / q) * float(np.sum(window.epoch_sq_steps))
    for yj, yj_next in zip(window.y, window.y_next):
        dy = yj - yj_next
        t += float(dy @ dy)
    return t


def lyapunov_coefficients(algorithm: str, L: float, rho: float, eta: float,
                          sigma_min_A: float, sigma_max_G: float,
                          b: int, b2: int, d: int):
    """Variant-matched potential coefficients and the theta dimension factor.

    Returns (coef_move, coef_epoch, dim_factor). coef_move multiplies
    ||x_k - x_{k-1}||^2; coef_epoch multiplies the epoch sum of squared steps
    up to k-1.
    """
    if sigma_min_A <= 0:
        # degenerate constraint geometry: potential reduces to the augmented
        # Lagrangian itself
        return 0.0, 0.0, 1.0
    coef_move = (5.0 * L ** 2 / (sigma_min_A * rho)
                 + 5.0 * sigma_max_G ** 2 / (sigma_min_A * eta ** 2 * rho))
    if algorithm in ("zo_spider_admm_coo", "zo_sgd_admm"):
        coef_epoch = 12.0 * L ** 2 / (sigma_min_A * rho * b)
        dim_factor = 1.0
    elif algorithm == "zo_spider_admm_mixed":
        coef_epoch = 12.0 * d * L ** 2 / (b * sigma_min_A * rho)
        dim_factor = float(d)
    elif algorithm == "zoo_admm_plus_coo":
        coef_epoch = 12.0 * L ** 2 / (sigma_min_A * rho * b2)
        dim_factor = 1.0
    elif algorithm == "zoo_admm_plus_mixed":
        coef_epoch = 12.0 * d * L ** 2 / (b2 * sigma_min_A * rho)
        dim_factor = float(d)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return coef_move, coef_epoch, dim_factor


def lyapunov(aug_lag_value: float, window: TraceWindow,
             coef_move: float, coef_epoch: float) -> float:
    """Potential at iteration k: augmented Lagrangian plus movement terms.

    The epoch sum excludes the current step (it runs through i = k-1), so at
    an epoch start the potential equals the augmented Lagrangian plus only
    the single-step term.
    """
    if not window.epoch_sq_steps:
        raise InsufficientHistory("window carries no epoch steps")
    dx_prev = window.x - window.x_prev
    val = aug_lag_value + coef_move * float(dx_prev @ dx_prev)
    if len(window.epoch_sq_steps) > 1:
        val += coef_epoch * float(np.sum(window.epoch_sq_steps[:-1]))
    return val
