"""Solver: config validation, update formulas against hand values and linear
solves, dual/residual identities, hyperparameter derivation, run loop
behaviour and exact query accounting."""
import math

import numpy as np
import pytest

from zoadmm import (ALGORITHMS, BlackBoxOracle, ConfigError, IterateState,
                    NoFixedPoint, PenaltyBlock, SmoothingParams, SolverConfig,
                    build_problem, build_quadratic_sanity, derive_hyperparams,
                    iteration_query_cost, lambda_update, prox,
                    resolve_linearization, run, spectral_summary, subgrad_dist,
                    validate_config, x_update_exact, x_update_linearized,
                    y_update, zero)
from conftest import admm_step, initial_state, make_random_instance

# ---------------------------------------------------------------- validation


def _base_config(**kw):
    defaults = dict(algorithm="zo_spider_admm_coo", eta=0.1, rho=1.0, K=4,
                    lipschitz_L=1.0, q=2, b=2)
    defaults.update(kw)
    return SolverConfig(**defaults)


def _tiny_spec():
    spec, _ = make_random_instance(0, d=3, n=2, kinds=("l1",))
    return spec


@pytest.mark.parametrize("kw,field", [
    (dict(algorithm="gradient_descent"), "algorithm"),
    (dict(eta=0.0), "eta"),
    (dict(rho=-1.0), "rho"),
    (dict(lipschitz_L=0.0), "lipschitz_L"),
    (dict(K=0), "K"),
    (dict(q=0), "q"),
    (dict(b=-2), "b"),
    (dict(b1=0), "b1"),
    (dict(b2=0), "b2"),
    (dict(x_update="cg"), "x_update"),
    (dict(query_budget=0), "query_budget"),
    (dict(x0="random"), "x0"),
    (dict(x0=np.zeros(5)), "x0"),
    (dict(r_x=0.5), "r_x"),
])
def test_validate_config_names_offending_field(kw, field):
    spec = _tiny_spec()
    with pytest.raises(ConfigError) as exc:
        validate_config(spec, _base_config(**kw))
    assert exc.value.field == field


def test_validate_spider_requires_finite_sum():
    spec, _ = make_random_instance(0, d=3, n=2, kinds=("l1",), regime="online")
    with pytest.raises(ConfigError) as exc:
        validate_config(spec, _base_config())
    assert exc.value.field == "algorithm"
    validate_config(spec, _base_config(algorithm="zoo_admm_plus_coo"))


def test_resolve_linearization_defaults():
    spec = _tiny_spec()
    config = _base_config()
    r_x, r_y = resolve_linearization(spec, config)
    sig = spectral_summary(spec)
    assert r_x == pytest.approx(config.rho * config.eta * sig.sigma_max_A + 1)
    for j, rj in enumerate(r_y):
        assert rj == pytest.approx(config.rho * spec.block_sigma_max(j) + 1)


# ------------------------------------------------------------- x/y/lambda


def _hand_instance():
    # d=1, A=1, rho=eta=1, r_x=2 so G = 1
    oracle = BlackBoxOracle(lambda i, x: 0.5 * float(x @ x), n=1, dim=1)
    blocks = [PenaltyBlock(B=np.eye(1), penalty=zero(1))]
    spec = build_problem(oracle, np.eye(1), blocks, np.zeros(1))
    config = SolverConfig(algorithm="zo_sgd_admm", eta=1.0, rho=1.0, K=1,
                          lipschitz_L=1.0, r_x=2.0)
    state = IterateState(k=0, x=np.array([1.0]), y=[np.array([0.3])],
                         lam=np.array([0.1]), spider=None)
    return spec, config, state


def test_x_update_hand_value():
    spec, config, state = _hand_instance()
    v = np.array([0.5])
    # (G x)/r - (eta/r) v - (eta rho / r) A^T (By - c - lam/rho)
    #   = 0.5 - 0.25 - 0.5*(0.3 - 0.1) = 0.15
    got = x_update_linearized(spec, config, state, v, state.y)
    assert got[0] == pytest.approx(0.15, abs=1e-15)
    exact = x_update_exact(spec, config, state, v, state.y)
    assert exact[0] == pytest.approx(0.15, abs=1e-12)


def test_x_update_exact_solve_residual(rng):
    # the exact step must satisfy its own normal equations to 1e-10 relative
    spec, _ = make_random_instance(3, d=5, n=2, kinds=("l1", "squared_l2"))
    config = _base_config(eta=0.3, rho=1.7)
    state = initial_state(spec, rng)
    v = rng.normal(size=5)
    x_new = x_update_exact(spec, config, state, v, state.y)
    r_x, _ = resolve_linearization(spec, config)
    AtA = spec.A.T @ spec.A
    G = r_x * np.eye(5) - config.rho * config.eta * AtA
    M = G / config.eta + config.rho * AtA
    coupled = sum(blk.B @ yj for blk, yj in zip(spec.blocks, state.y))
    rhs = (G @ state.x) / config.eta - v - config.rho * spec.A.T @ (
        coupled - spec.c - state.lam / config.rho)
    assert np.linalg.norm(M @ x_new - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_linearized_equals_exact_random_instances():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        spec, _ = make_random_instance(seed, d=4, n=2,
                                       kinds=("l1", "group_l2", "box_linf"))
        config = _base_config(eta=0.2, rho=0.9)
        state = initial_state(spec, rng)
        v = rng.normal(size=4)
        y_new = [y_update(spec, config, state, 0, [])]
        for j in range(1, len(spec.blocks)):
            y_new.append(y_update(spec, config, state, j, y_new))
        a = x_update_linearized(spec, config, state, v, y_new)
        b = x_update_exact(spec, config, state, v, y_new)
        assert np.linalg.norm(a - b) <= 1e-10 * max(1.0, np.linalg.norm(b))


def test_y_update_prox_optimality_and_decrease(rng):
    spec, _ = make_random_instance(7, d=4, n=2,
                                   kinds=("l1", "group_l2", "squared_l2"))
    config = _base_config(eta=0.25, rho=1.3)
    _, r_y = resolve_linearization(spec, config)
    state = initial_state(spec, rng)
    y_new = []
    for j, blk in enumerate(spec.blocks):
        got = y_update(spec, config, state, j, y_new)
        # rebuild the prox point independently
        c_t = spec.A @ state.x - spec.c
        for i, other in enumerate(spec.blocks):
            if i != j:
                yi = y_new[i] if i < len(y_new) else state.y[i]
                c_t = c_t + other.B @ yi
        r_j = r_y[j]
        w = state.y[j] - blk.B.T @ (
            config.rho * (blk.B @ state.y[j] + c_t) - state.lam) / r_j
        pen = blk.effective_penalty()
        assert np.allclose(got, prox(pen, w, 1.0 / r_j), atol=1e-12)
        # first-order optimality of the prox step
        assert subgrad_dist(pen, got, r_j * (w - got)) <= 1e-8

        def surrogate(yj):
            from zoadmm import eval_penalty
            lin = eval_penalty(pen, yj) - state.lam @ (blk.B @ yj)
            quad = 0.5 * config.rho * np.sum((blk.B @ yj + c_t) ** 2)
            H = r_j * np.eye(pen.dim) - config.rho * blk.B.T @ blk.B
            move = yj - state.y[j]
            return lin + quad + 0.5 * move @ H @ move

        assert surrogate(got) <= surrogate(state.y[j]) + 1e-12
        y_new.append(got)


def test_lambda_update_values():
    spec, config, state = _hand_instance()
    # lam - rho * residual: 1 - 2*0.5 = 0
    lam = lambda_update(spec, SolverConfig(algorithm="zo_sgd_admm", eta=1.0,
                                           rho=2.0, K=1, lipschitz_L=1.0,
                                           r_x=3.0),
                        np.array([0.2]), [np.array([0.3])], np.array([1.0]))
    assert lam[0] == pytest.approx(0.0)
    # zero residual leaves the multiplier alone
    lam2 = lambda_update(spec, config, np.array([0.4]), [np.array([-0.4])],
                         np.array([0.7]))
    assert lam2[0] == pytest.approx(0.7)


def test_dual_identity_both_updates(rng):
    # A^T lam+ = v + (G/eta)(x+ - x) after every x update
    for mode in ("linearized", "exact"):
        spec, _ = make_random_instance(11, d=4, n=2, kinds=("l1", "zero"))
        config = _base_config(eta=0.15, rho=2.1)
        state = initial_state(spec, rng)
        v = rng.normal(size=4)
        nxt = admm_step(spec, config, state, v, x_update=mode)
        r_x, _ = resolve_linearization(spec, config)
        G = r_x * np.eye(4) - config.rho * config.eta * spec.A.T @ spec.A
        lhs = spec.A.T @ nxt.lam
        rhs = v + (G @ (nxt.x - state.x)) / config.eta
        assert np.linalg.norm(lhs - rhs) <= 1e-8 * max(1.0, np.linalg.norm(rhs))


def test_residual_equals_multiplier_motion(rng):
    spec, _ = make_random_instance(13, d=4, n=3, kinds=("l1", "squared_l2"))
    config = _base_config(eta=0.21, rho=1.9)
    state = initial_state(spec, rng)
    nxt = admm_step(spec, config, state, rng.normal(size=4))
    res = np.linalg.norm(spec.constraint_residual(nxt.x, nxt.y))
    motion = np.linalg.norm(state.lam - nxt.lam) / config.rho
    assert motion == pytest.approx(res, rel=1e-13)


# ------------------------------------------------------------------ derive


def test_derive_unit_spectra_rho():
    # unit constraint spectra and L=1: rho collapses to 2 sqrt(237)
    prob = build_quadratic_sanity(d=4, n=16, seed=0)
    rec = derive_hyperparams(prob.spec, 1.0, "zo_spider_admm_coo")
    assert rec.rho == pytest.approx(2 * math.sqrt(237), rel=1e-12)
    assert rec.rho == pytest.approx(30.7896, abs=1e-4)
    assert rec.eta == pytest.approx(0.25)
    assert rec.kappa_G == pytest.approx(1.0)


def test_derive_finite_sum_batches():
    prob = build_quadratic_sanity(d=4, n=16, seed=0)
    rec = derive_hyperparams(prob.spec, prob.L, "zo_spider_admm_coo")
    assert rec.b == 4 and rec.q == 4
    mixed = derive_hyperparams(prob.spec, prob.L, "zo_spider_admm_mixed")
    assert mixed.q == 4 and mixed.b == 16  # q*d capped at n


def test_derive_mixed_batch_capped_with_note():
    prob = build_quadratic_sanity(d=4, n=9, seed=1)
    rec = derive_hyperparams(prob.spec, prob.L, "zo_spider_admm_mixed")
    assert rec.q == 3 and rec.b == 9
    assert any("cap" in note for note in rec.notes)


def test_derive_online_epsilon_batches():
    prob = build_quadratic_sanity(d=4, n=16, seed=0, regime="online")
    rec = derive_hyperparams(prob.spec, prob.L, "zoo_admm_plus_coo",
                             epsilon=0.01)
    assert rec.b2 == 10 and rec.q == 10 and rec.b1 == 100
    assert rec.mu == pytest.approx(0.05)
    assert rec.nu == pytest.approx(math.sqrt(0.01) / 4)
    assert rec.K == 100
    mixed = derive_hyperparams(prob.spec, prob.L, "zoo_admm_plus_mixed",
                               epsilon=0.01)
    assert mixed.b2 == 40  # d * q


def test_derive_baseline_plan():
    # no recursion: the per-iteration batch alone must control the estimator
    # variance, so b grows like 1/epsilon (capped at n for finite sums)
    prob = build_quadratic_sanity(d=4, n=16, seed=0)
    rec = derive_hyperparams(prob.spec, prob.L, "zo_sgd_admm")
    assert rec.q == 1 and rec.b == 16
    assert any("capped" in note for note in rec.notes)
    loose = derive_hyperparams(prob.spec, prob.L, "zo_sgd_admm", epsilon=0.125)
    assert loose.b == 8 and not loose.notes


def test_derive_fixed_point_self_consistent():
    # nonunit spectra: the returned (rho, r_x, kappa) must satisfy both
    # defining equations
    spec, quad = make_random_instance(5, d=3, n=2, kinds=("l1",))
    A = np.diag([1.0, 1.01, 1.02])
    from zoadmm import BlackBoxOracle, build_problem
    oracle = BlackBoxOracle(quad.sample_value, n=2, dim=3)
    spec2 = build_problem(oracle, A, spec.blocks, np.zeros(3))
    rec = derive_hyperparams(spec2, quad.L, "zo_spider_admm_coo", alpha=0.8)
    sig = spectral_summary(spec2)
    want_rho = 2 * math.sqrt(237) * rec.kappa_G * quad.L / (sig.sigma_min_A * 0.8)
    assert rec.rho == pytest.approx(want_rho, rel=1e-8)
    assert rec.r_x == pytest.approx(rec.rho * rec.eta * sig.sigma_max_A + 1, rel=1e-12)
    assert rec.kappa_G == pytest.approx(rec.r_x - rec.rho * rec.eta * sig.sigma_min_A,
                                        rel=1e-8)


def test_derive_no_fixed_point_for_spread_spectrum():
    spec, quad = make_random_instance(5, d=2, n=2, kinds=("l1",))
    from zoadmm import BlackBoxOracle, build_problem
    oracle = BlackBoxOracle(quad.sample_value, n=2, dim=2)
    spec2 = build_problem(oracle, np.diag([1.0, 10.0]), spec.blocks[:1],
                          np.zeros(2))
    with pytest.raises(NoFixedPoint):
        derive_hyperparams(spec2, quad.L, "zo_spider_admm_coo")


def test_derive_validation_errors():
    prob = build_quadratic_sanity(d=4, n=16, seed=0)
    with pytest.raises(ConfigError):
        derive_hyperparams(prob.spec, -1.0, "zo_spider_admm_coo")
    with pytest.raises(ConfigError):
        derive_hyperparams(prob.spec, 1.0, "newton")
    with pytest.raises(ConfigError):
        derive_hyperparams(prob.spec, 1.0, "zo_spider_admm_coo", epsilon=0.0)


def test_recipe_to_config_roundtrip():
    prob = build_quadratic_sanity(d=4, n=16, seed=0)
    rec = derive_hyperparams(prob.spec, prob.L, "zo_spider_admm_coo")
    config = rec.to_config(seed=9, K=5, x0="ones")
    assert config.seed == 9 and config.K == 5 and config.x0 == "ones"
    assert config.eta == rec.eta and config.rho == rec.rho
    assert config.smoothing.schedule == "fixed"
    assert config.smoothing.mu == rec.mu
    validate_config(prob.spec, config)


# --------------------------------------------------------------- run loop


def _sanity_run(algo="zo_spider_admm_coo", K=8, seed=0, **kw):
    prob = build_quadratic_sanity(d=4, n=16, seed=3)
    config = SolverConfig(algorithm=algo, eta=0.25, rho=1.0, K=K,
                          lipschitz_L=prob.L, q=4, b=4,
                          smoothing=SmoothingParams(schedule="fixed", mu=1e-4,
                                                    nu=1e-4),
                          seed=seed, **kw)
    return prob, config, run(prob.spec, config, diag=prob)


def test_run_query_cadence_640():
    prob, config, trace = _sanity_run()
    cum = [r.queries_cum for r in trace.records]
    # anchors at k in {0, 4} cost 2*16*4 = 128, inner iterations 4*4*4 = 64
    assert cum == [128, 192, 256, 320, 448, 512, 576, 640]
    assert trace.queries["anchor"] == 256
    assert trace.queries["inner"] == 384
    assert trace.queries["diagnostic"] == 0  # analytic diagnostics
    assert [iteration_query_cost(prob.spec, config, k) for k in range(8)] == \
        [128, 64, 64, 64, 128, 64, 64, 64]


def test_run_deterministic_given_seed():
    _, _, t1 = _sanity_run(seed=5)
    _, _, t2 = _sanity_run(seed=5)
    assert t1.zeta == t2.zeta and t1.k_star == t2.k_star
    for a, b in zip(t1.records, t2.records):
        assert a == b
    _, _, t3 = _sanity_run(seed=6)
    assert any(a != b for a, b in zip(t1.records, t3.records))


def test_run_budget_stops_early():
    _, _, trace = _sanity_run(query_budget=256)
    ks = [r.k for r in trace.records]
    assert ks == [0, 1, 2]
    assert trace.records[-1].queries_cum == 256
    assert 0 <= trace.zeta < 3


def test_run_output_indices():
    _, _, trace = _sanity_run(K=12, seed=2)
    thetas = [r.theta for r in trace.records]
    assert trace.k_star == int(np.argmin(thetas))
    assert 0 <= trace.zeta < len(trace.records)
    assert all(r.theta >= 0 for r in trace.records)


def test_run_without_diag_uses_diagnostic_queries():
    prob = build_quadratic_sanity(d=4, n=16, seed=3)
    config = SolverConfig(algorithm="zo_sgd_admm", eta=0.25, rho=1.0, K=3,
                          lipschitz_L=prob.L, b=4)
    trace = run(prob.spec, config)
    assert trace.queries["diagnostic"] == 3 * 16  # one full pass per iteration
    assert all(math.isnan(r.stationarity) for r in trace.records)
    # diagnostic queries never count toward the algorithmic budget
    assert trace.records[-1].queries_cum == 3 * 2 * 4 * 4


def test_run_all_variants_smoke():
    for algo in ALGORITHMS:
        regime = "online" if algo.startswith("zoo") else "finite_sum"
        prob = build_quadratic_sanity(d=4, n=9, seed=1, regime=regime)
        rec = derive_hyperparams(prob.spec, prob.L, algo, epsilon=0.05)
        trace = run(prob.spec, rec.to_config(seed=0, K=5), diag=prob)
        assert len(trace.records) == 5
        assert np.isfinite([r.obj for r in trace.records]).all()
        assert np.isfinite([r.lyapunov for r in trace.records]).all()


def test_run_x0_presets():
    _, _, t_zero = _sanity_run(K=1)
    _, _, t_one = _sanity_run(K=1, x0="ones")
    assert t_zero.records[0].obj != t_one.records[0].obj
    prob = build_quadratic_sanity(d=4, n=16, seed=3)
    config = SolverConfig(algorithm="zo_sgd_admm", eta=0.25, rho=1.0, K=1,
                          lipschitz_L=prob.L, b=4, x0=np.full(4, 0.5))
    trace = run(prob.spec, config, diag=prob)
    assert len(trace.records) == 1


def test_baseline_reaches_feasibility():
    # full-batch baseline on the sanity problem drives the constraint
    # residual under 1e-3 within 200 iterations
    prob = build_quadratic_sanity(d=8, n=16, seed=0)
    rec = derive_hyperparams(prob.spec, prob.L, "zo_sgd_admm")
    config = rec.to_config(seed=0, K=200, b=16)
    trace = run(prob.spec, config, diag=prob)
    assert min(r.residual for r in trace.records) <= 1e-3


def test_run_unconstrained_problem():
    # no blocks: the multiplier step is skipped and lambda stays zero
    rng = np.random.default_rng(4)
    from conftest import QuadraticInstance
    quad = QuadraticInstance(rng, d=3, n=4)
    oracle = BlackBoxOracle(quad.sample_value, n=4, dim=3)
    spec = build_problem(oracle, np.zeros((0, 3)), [], np.zeros(0))
    rec = derive_hyperparams(spec, quad.L, "zo_spider_admm_coo")
    assert rec.rho == pytest.approx(1.0)
    config = rec.to_config(seed=0, K=30)
    trace = run(spec, config, diag=quad)
    assert np.allclose(trace.state.lam, 0.0)
    assert trace.records[0].residual == 0.0
    # pure smooth minimization should make progress
    assert trace.records[-1].obj < trace.records[0].obj
