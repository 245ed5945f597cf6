"""Benchmark problem catalog.

Each builder returns a CatalogProblem: a validated problem instance plus the
analytic full objective and gradient (diagnostics only; the solver sees f
exclusively through the counted value oracle) and a certified gradient
Lipschitz constant L.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .errors import ConfigError, ZoadmmError
from .oracle import BlackBoxOracle
from .penalties import box_linf, group_l2, l1, squared_l2
from .problem import PenaltyBlock, ProblemSpec, build_problem

# sup |s''| for the logistic sigmoid s(z) = 1/(1+e^z), attained at
# s = (3 +- sqrt(3))/6
SIGMOID_CURV = 1.0 / (6.0 * math.sqrt(3.0))
# sup |tanh''| attained at tanh = 1/sqrt(3)
TANH_CURV = 4.0 / (3.0 * math.sqrt(3.0))


@dataclass
class CatalogProblem:
    name: str
    spec: ProblemSpec
    L: float
    value: object          # x -> full smooth objective (analytic, uncounted)
    grad: object           # x -> full gradient (analytic, uncounted)
    sample_value: object   # (i, x) -> f_i(x), same map the oracle wraps
    sample_grad: object    # (i, x) -> grad f_i(x)
    meta: dict = field(default_factory=dict)


def _self_test(prob: CatalogProblem, seed: int, points: int = 20,
               mu: float = 1e-6, scale: float = 0.1) -> None:
    """Construction check: per-sample analytic gradients must match central
    differences of the value map to within 10*L*mu."""
    rng = np.random.default_rng(seed)
    d = prob.spec.d
    n = prob.spec.oracle.n
    tol = 10.0 * prob.L * mu
    for _ in range(points):
        x = rng.uniform(-scale, scale, size=d)
        i = int(rng.integers(n))
        g = prob.sample_grad(i, x)
        fd = np.empty(d)
        for j in range(d):
            e = np.zeros(d)
            e[j] = mu
            fd[j] = (prob.sample_value(i, x + e) - prob.sample_value(i, x - e)) / (2 * mu)
        err = float(np.max(np.abs(fd - g)))
        if err > tol:
            raise ZoadmmError(
                f"{prob.name}: analytic gradient disagrees with central "
                f"differences ({err:.3e} > {tol:.3e})")


def build_quadratic_sanity(d: int = 8, n: int = 16, seed: int = 0,
                           tau: float = 0.1, l_target: float = 1.0,
                           regime: str = "finite_sum") -> CatalogProblem:
    """Mean of n strongly convex quadratics with an l1-coupled copy block.

    f_i(x) = 0.5 (x - t_i)^T Q_i (x - t_i), with Q_i eigenvalues drawn from
    [0.1, l_target]. Constraint x = y, psi(y) = tau*||y||_1. The online
    regime treats the n quadratics as a sampling pool.
    """
    if d < 1 or n < 1:
        raise ConfigError("need d >= 1 and n >= 1", field="d" if d < 1 else "n")
    rng = np.random.default_rng(seed)
    Q = np.empty((n, d, d))
    t = rng.standard_normal((n, d))
    for i in range(n):
        M = rng.standard_normal((d, d))
        R, _ = np.linalg.qr(M)
        eigs = rng.uniform(0.1, l_target, size=d)
        Q[i] = (R * eigs) @ R.T
    eig_max = max(float(np.linalg.eigvalsh(Q[i])[-1]) for i in range(n))

    Qbar = Q.mean(axis=0)
    Qt = np.einsum("ijk,ik->j", Q, t) / n
    c0 = 0.5 * float(np.einsum("ij,ijk,ik->", t, Q, t)) / n

    def sample_value(i, x):
        r = x - t[i]
        return 0.5 * float(r @ Q[i] @ r)

    def sample_grad(i, x):
        return Q[i] @ (x - t[i])

    def value(x):
        return 0.5 * float(x @ Qbar @ x) - float(Qt @ x) + c0

    def grad(x):
        return Qbar @ x - Qt

    oracle = BlackBoxOracle(sample_value, n=n, dim=d, regime=regime,
                            kind="quadratic_sanity")
    blocks = [PenaltyBlock(B=-np.eye(d), penalty=l1(tau, d))]
    spec = build_problem(oracle, np.eye(d), blocks, np.zeros(d))
    return CatalogProblem(name="quadratic_sanity", spec=spec, L=eig_max,
                          value=value, grad=grad, sample_value=sample_value,
                          sample_grad=sample_grad,
                          meta={"targets": t, "tau": tau, "seed": seed})


def build_graph_guided_fused_lasso(n: int = 200, d: int = 50, seed: int = 0,
                                   tau: float = 0.01,
                                   coupling: float = 0.01) -> CatalogProblem:
    """Nonconvex sigmoid classification loss with an l1 penalty on graph-
    correlated combinations y = A x.

    f_i(x) = s(l_i a_i^T x) with s the logistic sigmoid, ||a_i|| = 1, and
    labels planted by a hidden direction. A = I + S where S carries a chain
    plus random shortcut edges, rescaled to spectral norm `coupling` so the
    correlation matrix stays diagonally dominant and the hyperparameter
    fixed point is well posed.
    """
    rng = np.random.default_rng(seed)
    feats = rng.standard_normal((n, d))
    feats /= np.linalg.norm(feats, axis=1, keepdims=True)
    x_star = rng.standard_normal(d)
    x_star /= np.linalg.norm(x_star)
    labels = np.where(feats @ x_star >= 0, 1.0, -1.0)

    S = np.zeros((d, d))
    edges = [(i, i + 1) for i in range(d - 1)]
    for _ in range(max(d // 6, 1)):
        i, j = sorted(rng.choice(d, size=2, replace=False))
        edges.append((int(i), int(j)))
    for (i, j) in edges:
        S[i, j] += rng.uniform(0.5, 1.0) * rng.choice([-1.0, 1.0])
    nrm = np.linalg.norm(S, 2)
    if nrm > 0:
        S *= coupling / nrm
    A = np.eye(d) + S

    def sample_value(i, x):
        return float(expit(-labels[i] * (feats[i] @ x)))

    def sample_grad(i, x):
        z = labels[i] * (feats[i] @ x)
        return (-expit(-z) * expit(z) * labels[i]) * feats[i]

    def value(x):
        return float(np.mean(expit(-(labels * (feats @ x)))))

    def grad(x):
        z = labels * (feats @ x)
        w = -expit(-z) * expit(z) * labels
        return (w @ feats) / n

    L = SIGMOID_CURV * float(np.max(np.sum(feats ** 2, axis=1)))
    delta = 0.25 * float(np.max(np.linalg.norm(feats, axis=1)))
    oracle = BlackBoxOracle(sample_value, n=n, dim=d, regime="finite_sum",
                            kind="graph_guided_fused_lasso")
    blocks = [PenaltyBlock(B=-np.eye(d), penalty=l1(tau, d))]
    spec = build_problem(oracle, A, blocks, np.zeros(d))
    return CatalogProblem(name="graph_guided_fused_lasso", spec=spec, L=L,
                          value=value, grad=grad, sample_value=sample_value,
                          sample_grad=sample_grad,
                          meta={"delta": delta, "sigma": delta, "tau": tau,
                                "coupling": coupling, "seed": seed})


def _windows(grid: int, kernel: int, stride: int):
    out = []
    span = (grid - kernel) // stride + 1
    for r in range(span):
        for c in range(span):
            idx = [(r * stride + i) * grid + (c * stride + j)
                   for i in range(kernel) for j in range(kernel)]
            out.append(tuple(idx))
    return out


def build_structured_perturbation_toy(seed: int = 0, grid: int = 8,
                                      kernel: int = 3, stride: int = 1,
                                      n: int = 6, hidden: int = 12,
                                      tau1: float = 1.0, tau2: float = 2.0,
                                      tau3: float = 1.0,
                                      eps_bound: float = 0.4,
                                      beta: float = 50.0,
                                      smooth: bool = True) -> CatalogProblem:
    """Misclassification-margin loss of a frozen two-layer tanh network under
    a shared input perturbation, with overlapping window group penalties, a
    ridge block, and a data-consistent box block.

    The hinge and the runner-up maximum are both replaced by their softmax
    smoothings at temperature beta (smooth=False keeps the raw kinked forms:
    no analytic gradient, diagnostics limited). Every y_j equals x; the
    group-norm blocks act on one kernel window each and are free elsewhere.
    """
    d = grid * grid
    rng = np.random.default_rng(seed)
    W1 = rng.standard_normal((hidden, d)) / math.sqrt(d)
    b1 = 0.1 * rng.standard_normal(hidden)
    W2 = rng.standard_normal((3, hidden)) / math.sqrt(hidden)
    b2 = 0.1 * rng.standard_normal(3)
    data = rng.uniform(0.1, 0.9, size=(n, d))

    def logits(z):
        return W2 @ np.tanh(W1 @ z + b1) + b2

    labels = np.array([int(np.argmax(logits(a))) for a in data])

    def margin_smooth(i, x):
        f = logits(data[i] + x)
        lbl = labels[i]
        others = np.delete(f, lbl)
        return float(f[lbl] - logsumexp(beta * others) / beta)

    def margin_raw(i, x):
        f = logits(data[i] + x)
        lbl = labels[i]
        return float(f[lbl] - np.max(np.delete(f, lbl)))

    def sample_value(i, x):
        if smooth:
            return float(np.logaddexp(0.0, beta * margin_smooth(i, x)) / beta)
        return max(margin_raw(i, x), 0.0)

    def _grad_logits(z):
        # rows: grad_z F_j = W1^T ((1 - tanh^2) * W2[j])
        h = np.tanh(W1 @ z + b1)
        return (W2 * (1.0 - h ** 2)) @ W1  # (3, d)

    def sample_grad(i, x):
        if not smooth:
            raise ZoadmmError("raw hinge variant has no analytic gradient")
        z = data[i] + x
        f = logits(z)
        J = _grad_logits(z)
        lbl = labels[i]
        others = np.delete(f, lbl)
        Jo = np.delete(J, lbl, axis=0)
        w = np.exp(beta * others - logsumexp(beta * others))
        gm = J[lbl] - w @ Jo
        m = f[lbl] - logsumexp(beta * others) / beta
        return float(expit(beta * m)) * gm

    def value(x):
        return sum(sample_value(i, x) for i in range(n)) / n

    def grad(x):
        return sum(sample_grad(i, x) for i in range(n)) / n

    # certified (loose) gradient Lipschitz bound from the weight norms
    g_f = float(np.linalg.norm(W1, 2)) * float(np.max(np.linalg.norm(W2, axis=1)))
    h_f = float(np.linalg.norm(W1, 2)) ** 2 * TANH_CURV * float(np.max(np.abs(W2)))
    L = 2.0 * beta * g_f ** 2 + 2.0 * h_f

    wins = _windows(grid, kernel, stride)
    m_blocks = len(wins) + 2
    l_rows = m_blocks * d
    A = np.tile(np.eye(d), (m_blocks, 1))
    blocks = []
    for j, win in enumerate(wins):
        E = np.zeros((l_rows, d))
        E[j * d:(j + 1) * d] = np.eye(d)
        blocks.append(PenaltyBlock(B=-E, penalty=group_l2(1.0, d, group_idx=win),
                                   weight=tau1))
    j_sq = len(wins)
    E = np.zeros((l_rows, d))
    E[j_sq * d:(j_sq + 1) * d] = np.eye(d)
    blocks.append(PenaltyBlock(B=-E, penalty=squared_l2(1.0, d), weight=tau2))
    j_box = len(wins) + 1
    E = np.zeros((l_rows, d))
    E[j_box * d:(j_box + 1) * d] = np.eye(d)
    lo = -np.min(data, axis=0)
    hi = 1.0 - np.max(data, axis=0)
    blocks.append(PenaltyBlock(B=-E, penalty=box_linf(lo, hi, eps_bound, d),
                               weight=tau3))

    oracle = BlackBoxOracle(sample_value, n=n, dim=d, regime="finite_sum",
                            kind="structured_perturbation_toy")
    spec = build_problem(oracle, A, blocks, np.zeros(l_rows))
    # the raw hinge/max forms are kinked, so no certified smoothness constant
    prob = CatalogProblem(name="structured_perturbation_toy", spec=spec,
                          L=L if smooth else None,
                          value=value if smooth else None,
                          grad=grad if smooth else None,
                          sample_value=sample_value,
                          sample_grad=sample_grad if smooth else None,
                          meta={"windows": len(wins), "labels": labels,
                                "beta": beta, "smooth": smooth, "seed": seed})
    if smooth:
        _self_test(prob, seed=seed + 1)
    return prob


CATALOG = {
    "quadratic_sanity": build_quadratic_sanity,
    "graph_guided_fused_lasso": build_graph_guided_fused_lasso,
    "structured_perturbation_toy": build_structured_perturbation_toy,
}
