"""Shared helpers: random composite instances with analytic gradients and a
manual ADMM step driver used by the identity tests."""
import numpy as np
import pytest

from zoadmm import (BlackBoxOracle, IterateState, PenaltyBlock, ProblemSpec,
                    SolverConfig, box_linf, build_problem, group_l2, l1,
                    lambda_update, squared_l2, x_update_exact,
                    x_update_linearized, y_update, zero)


class QuadraticInstance:
    """Finite-sum quadratic f_i(x) = 0.5 (x - t_i)^T Q_i (x - t_i) with
    analytic per-sample and mean gradients."""

    def __init__(self, rng, d, n, l_max=2.0):
        self.d, self.n = d, n
        self.Q = np.empty((n, d, d))
        self.t = rng.normal(size=(n, d))
        for i in range(n):
            M, _ = np.linalg.qr(rng.normal(size=(d, d)))
            eigs = rng.uniform(0.2, l_max, size=d)
            self.Q[i] = (M * eigs) @ M.T
        self.L = max(np.linalg.eigvalsh(Qi)[-1] for Qi in self.Q)

    def sample_value(self, i, x):
        r = x - self.t[i]
        return 0.5 * r @ self.Q[i] @ r

    def sample_grad(self, i, x):
        return self.Q[i] @ (x - self.t[i])

    def value(self, x):
        return sum(self.sample_value(i, x) for i in range(self.n)) / self.n

    def grad(self, x):
        return sum(self.sample_grad(i, x) for i in range(self.n)) / self.n


PENALTY_KINDS = ("l1", "group_l2", "squared_l2", "box_linf", "zero")


def make_penalty(kind, dim, rng):
    if kind == "l1":
        return l1(rng.uniform(0.05, 0.5), dim)
    if kind == "group_l2":
        k = max(dim // 2, 1)
        idx = rng.choice(dim, size=k, replace=False)
        return group_l2(rng.uniform(0.05, 0.5), dim, group_idx=np.sort(idx))
    if kind == "squared_l2":
        return squared_l2(rng.uniform(0.05, 0.5), dim)
    if kind == "box_linf":
        return box_linf(-1.0, 1.0, rng.uniform(0.5, 2.0), dim)
    return zero(dim)


def make_random_instance(seed, d=4, n=3, kinds=("l1", "squared_l2"),
                         regime="finite_sum"):
    """Small composite instance: full-column-rank A, one block per kind."""
    rng = np.random.default_rng(seed)
    quad = QuadraticInstance(rng, d, n)
    A = np.eye(d) + 0.1 * rng.normal(size=(d, d))
    blocks = []
    for kind in kinds:
        p = d if kind == "group_l2" else rng.integers(2, d + 1)
        B = 0.5 * rng.normal(size=(d, p))
        blocks.append(PenaltyBlock(B=B, penalty=make_penalty(kind, p, rng)))
    c = 0.1 * rng.normal(size=d)
    oracle = BlackBoxOracle(quad.sample_value, n=n, dim=d, regime=regime)
    spec = build_problem(oracle, A, blocks, c)
    return spec, quad


def admm_step(spec, config, state, v, x_update="linearized"):
    """One full primal-dual sweep from the exported update functions; returns
    the next IterateState."""
    y_new = []
    for j in range(len(spec.blocks)):
        y_new.append(y_update(spec, config, state, j, y_partial=y_new))
    if x_update == "exact":
        x_new = x_update_exact(spec, config, state, v, y_new)
    else:
        x_new = x_update_linearized(spec, config, state, v, y_new)
    lam_new = lambda_update(spec, config, x_new, y_new, state.lam)
    return IterateState(k=state.k + 1, x=x_new, y=y_new, lam=lam_new,
                        spider=state.spider)


def initial_state(spec, rng=None, scale=0.5):
    rng = rng or np.random.default_rng(0)
    x = scale * rng.normal(size=spec.d)
    y = []
    for blk in spec.blocks:
        p = blk.B.shape[1]
        cand = scale * rng.normal(size=p)
        pen = blk.effective_penalty()
        if pen.kind == "box_linf":
            cand = np.clip(cand, pen.lo, pen.hi)
        y.append(cand)
    lam = scale * rng.normal(size=spec.l)
    return IterateState(k=0, x=x, y=y, lam=lam, spider=None)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
