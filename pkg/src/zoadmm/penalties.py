"""Separable penalty catalog: evaluation, proximal maps, subdifferential distances.

Every penalty psi is convex, proper, closed, and prox-friendly. The catalog is
closed by design; adding a kind means adding its closed forms here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatch, InfeasiblePoint

_BOUNDARY_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class PenaltyDescriptor:
    """One penalty block: kind tag plus its parameters.

    kind is one of "zero", "l1", "group_l2", "squared_l2", "box_linf".
    dim is the length of vectors the penalty acts on. For group_l2,
    group_idx optionally restricts the norm to a coordinate subset
    (the remaining coordinates are penalty-free).
    """

    kind: str
    dim: int
    tau: float = 0.0
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    eps_bound: float = 0.0
    group_idx: tuple[int, ...] | None = None


def zero(dim: int) -> PenaltyDescriptor:
    return PenaltyDescriptor(kind="zero", dim=int(dim))


def l1(tau: float, dim: int) -> PenaltyDescriptor:
    if tau < 0:
        raise ConfigError("l1 weight must be nonnegative", field="tau")
    return PenaltyDescriptor(kind="l1", dim=int(dim), tau=float(tau))


def group_l2(tau: float, dim: int, group_idx=None) -> PenaltyDescriptor:
    if tau < 0:
        raise ConfigError("group_l2 weight must be nonnegative", field="tau")
    if group_idx is not None:
        group_idx = tuple(int(i) for i in group_idx)
        if len(set(group_idx)) != len(group_idx):
            raise ConfigError("group indices must be unique", field="group_idx")
        if any(i < 0 or i >= dim for i in group_idx):
            raise ConfigError("group index outside [0, dim)", field="group_idx")
    return PenaltyDescriptor(kind="group_l2", dim=int(dim), tau=float(tau), group_idx=group_idx)


def squared_l2(tau: float, dim: int) -> PenaltyDescriptor:
    if tau < 0:
        raise ConfigError("squared_l2 weight must be nonnegative", field="tau")
    return PenaltyDescriptor(kind="squared_l2", dim=int(dim), tau=float(tau))


def box_linf(lo, hi, eps_bound: float, dim: int) -> PenaltyDescriptor:
    """Indicator of {y : lo <= y <= hi} intersected with the inf-norm ball of
    radius eps_bound. lo and hi broadcast to dim."""
    if eps_bound <= 0:
        raise ConfigError("inf-norm radius must be positive", field="eps_bound")
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,)).copy()
    lo_eff = np.maximum(lo, -eps_bound)
    hi_eff = np.minimum(hi, eps_bound)
    if np.any(lo_eff > hi_eff):
        raise ConfigError("box is empty after intersecting with the inf-norm ball", field="lo")
    return PenaltyDescriptor(kind="box_linf", dim=int(dim),
                             lo=lo_eff, hi=hi_eff, eps_bound=float(eps_bound))


def scaled(desc: PenaltyDescriptor, weight: float) -> PenaltyDescriptor:
    """Fold a nonnegative multiplier into the descriptor.

    Indicators are invariant under positive scaling; weight 0 drops any
    penalty to the zero penalty.
    """
    if weight < 0:
        raise ConfigError("penalty weight must be nonnegative", field="weight")
    if weight == 0:
        return zero(desc.dim)
    if weight == 1 or desc.kind in ("zero", "box_linf"):
        return desc
    return PenaltyDescriptor(kind=desc.kind, dim=desc.dim, tau=desc.tau * weight,
                             lo=desc.lo, hi=desc.hi, eps_bound=desc.eps_bound,
                             group_idx=desc.group_idx)


def _check_dim(desc: PenaltyDescriptor, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (desc.dim,):
        raise DimensionMismatch(f"expected vector of length {desc.dim}, got shape {y.shape}")
    return y


def _group_mask(desc: PenaltyDescriptor) -> np.ndarray:
    mask = np.zeros(desc.dim, dtype=bool)
    if desc.group_idx is None:
        mask[:] = True
    else:
        mask[list(desc.group_idx)] = True
    return mask


def eval_penalty(desc: PenaltyDescriptor, y) -> float:
    """psi(y). Returns +inf outside an indicator's feasible set."""
    y = _check_dim(desc, y)
    if desc.kind == "zero":
        return 0.0
    if desc.kind == "l1":
        return desc.tau * float(np.sum(np.abs(y)))
    if desc.kind == "group_l2":
        return desc.tau * float(np.linalg.norm(y[_group_mask(desc)]))
    if desc.kind == "squared_l2":
        return desc.tau * float(y @ y)
    if desc.kind == "box_linf":
        tol = _BOUNDARY_ATOL * (1.0 + np.abs(desc.hi) + np.abs(desc.lo))
        if np.any(y > desc.hi + tol) or np.any(y < desc.lo - tol):
            return float("inf")
        return 0.0
    raise ConfigError(f"unknown penalty kind {desc.kind!r}", field="kind")


def prox(desc: PenaltyDescriptor, w, scale: float) -> np.ndarray:
    """argmin_y 0.5*||y - w||^2 + scale * psi(y). scale is 1/r, r > 0."""
    w = _check_dim(desc, w)
    if scale <= 0:
        raise ConfigError("prox scale must be positive", field="scale")
    if desc.kind == "zero":
        return w.copy()
    if desc.kind == "l1":
        t = desc.tau * scale
        return np.sign(w) * np.maximum(np.abs(w) - t, 0.0)
    if desc.kind == "group_l2":
        mask = _group_mask(desc)
        t = desc.tau * scale
        out = w.copy()
        nrm = np.linalg.norm(w[mask])
        if nrm <= t:
            out[mask] = 0.0
        else:
            out[mask] *= 1.0 - t / nrm
        return out
    if desc.kind == "squared_l2":
        return w / (1.0 + 2.0 * desc.tau * scale)
    if desc.kind == "box_linf":
        return np.clip(w, desc.lo, desc.hi)
    raise ConfigError(f"unknown penalty kind {desc.kind!r}", field="kind")


def subgrad_dist(desc: PenaltyDescriptor, y, g) -> float:
    """Distance from g to the subdifferential of psi at y.

    Closed forms per kind; raises InfeasiblePoint when y lies outside an
    indicator's feasible set (the subdifferential is empty there).
    """
    y = _check_dim(desc, y)
    g = _check_dim(desc, g)
    if desc.kind == "zero":
        return float(np.linalg.norm(g))
    if desc.kind == "l1":
        # per coordinate: {tau*sign(y_i)} when y_i != 0, [-tau, tau] at 0
        d = np.where(y != 0.0,
                     np.abs(g - desc.tau * np.sign(y)),
                     np.maximum(np.abs(g) - desc.tau, 0.0))
        return float(np.linalg.norm(d))
    if desc.kind == "group_l2":
        mask = _group_mask(desc)
        yg, gg = y[mask], g[mask]
        nrm = np.linalg.norm(yg)
        if nrm == 0.0:
            d_group = max(np.linalg.norm(gg) - desc.tau, 0.0)
        else:
            d_group = np.linalg.norm(gg - desc.tau * yg / nrm)
        d_rest = np.linalg.norm(g[~mask])
        return float(np.hypot(d_group, d_rest))
    if desc.kind == "squared_l2":
        return float(np.linalg.norm(g - 2.0 * desc.tau * y))
    if desc.kind == "box_linf":
        tol = _BOUNDARY_ATOL * (1.0 + np.abs(desc.hi) + np.abs(desc.lo))
        if np.any(y > desc.hi + tol) or np.any(y < desc.lo - tol):
            raise InfeasiblePoint("point outside the box; subdifferential is empty")
        # normal cone: free where the box pins the coordinate, one-sided at
        # an active bound, {0} in the interior
        at_hi = y >= desc.hi - tol
        at_lo = y <= desc.lo + tol
        d = np.where(at_hi & at_lo, 0.0,
                     np.where(at_hi, np.maximum(-g, 0.0),
                              np.where(at_lo, np.maximum(g, 0.0), np.abs(g))))
        return float(np.linalg.norm(d))
    raise ConfigError(f"unknown penalty kind {desc.kind!r}", field="kind")
