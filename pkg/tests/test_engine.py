import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexgt.analysis import TheoryParams, max_stepsize
from flexgt.engine import (
    AlgoConfig,
    communication_phase,
    init_state,
    local_phase,
    run,
    run_round,
)
from flexgt.problem import QuadraticProblem, generate_problem, initial_point
from flexgt.topology import TopologySpec, WeightMatrix, build_weight_matrix

J2 = WeightMatrix(np.full((2, 2), 0.5))


@pytest.fixture(scope="module")
def default_problem():
    return generate_problem(20, 10, 0.1, 0.1, 0)


@pytest.fixture(scope="module")
def expo():
    return build_weight_matrix(TopologySpec("exponential", 20))


def two_node():
    # f_i = (x - vbar_i)^2 with vbar = (0, 2)
    return QuadraticProblem([[1.0], [1.0]], [0.0, 2.0], 0.0, 0.0)


def dsgt_reference(prob, W, gamma, rounds, X0):
    """Gradient tracking with one local step and one gossip sweep per iteration."""
    w = W.entries
    X = X0.copy()
    g = prob.gradients(X) + (prob.noise(0) if prob.sigma else 0.0)
    Y = g.copy()
    out = []
    for t in range(1, rounds + 1):
        X = X - gamma * Y
        g_new = prob.gradients(X) + (prob.noise(t) if prob.sigma else 0.0)
        Y = Y + g_new - g
        g = g_new
        X = w @ X
        Y = w @ Y
        out.append((X.copy(), Y.copy()))
    return out


def dpsgd_reference(prob, W, gamma, rounds, X0):
    w = W.entries
    X = X0.copy()
    out = []
    for t in range(rounds):
        X = w @ (X - gamma * (prob.gradients(X) + (prob.noise(t) if prob.sigma else 0.0)))
        out.append(X.copy())
    return out


def test_algo_config_validation():
    with pytest.raises(ValueError):
        AlgoConfig("sgd", 1, 1, 0.1)
    with pytest.raises(ValueError):
        AlgoConfig("flexgt", 0, 1, 0.1)
    with pytest.raises(ValueError):
        AlgoConfig("flexgt", 1, 0, 0.1)
    with pytest.raises(ValueError):
        AlgoConfig("flexgt", 1, 1, -0.1)
    assert AlgoConfig("flexgt", 1, 1, 0.1).tracking
    assert not AlgoConfig("dfl", 1, 1, 0.1).tracking


def test_rounds_zero_forbidden(default_problem, expo):
    with pytest.raises(ValueError):
        run(default_problem, AlgoConfig("flexgt", 1, 1, 0.01, rounds=0), expo)


def test_init_noiseless_tracker(default_problem, expo):
    prob = default_problem.with_sigma(0.0)
    state = init_state(prob, AlgoConfig("flexgt", 1, 1, 0.01), expo)
    X0 = initial_point(prob)
    assert np.array_equal(state.X, X0)
    for i in range(prob.n):
        np.testing.assert_allclose(state.Y[i], prob.exact_gradient(i, X0[i]), rtol=1e-14)
    assert (state.step, state.round, state.grad_evals, state.comm_steps) == (0, 0, 0, 0)


def test_init_tracking_identity_and_determinism(default_problem, expo):
    cfg = AlgoConfig("flexgt", 2, 3, 0.01)
    a = init_state(default_problem, cfg, expo)
    b = init_state(default_problem, cfg, expo)
    assert np.array_equal(a.Y, a.lastG)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)


def test_init_dimension_mismatch(default_problem):
    with pytest.raises(ValueError):
        init_state(default_problem, AlgoConfig("flexgt", 1, 1, 0.1), build_weight_matrix(TopologySpec("ring", 5)))
    with pytest.raises(ValueError):
        init_state(
            default_problem,
            AlgoConfig("flexgt", 1, 1, 0.1),
            build_weight_matrix(TopologySpec("ring", 20)),
            X0=np.zeros((20, 3)),
        )


def test_two_node_hand_trace():
    prob = two_node()
    cfg = AlgoConfig("flexgt", 1, 1, 0.1)
    state = init_state(prob, cfg, J2, X0=np.zeros((2, 1)))
    np.testing.assert_allclose(state.Y.ravel(), [0.0, -4.0])
    local_phase(state, prob, cfg)
    np.testing.assert_allclose(state.X.ravel(), [0.0, 0.4], atol=1e-15)
    np.testing.assert_allclose(state.Y.ravel(), [0.0, -3.2], atol=1e-15)
    communication_phase(state, J2, cfg)
    np.testing.assert_allclose(state.X.ravel(), [0.2, 0.2], atol=1e-15)
    np.testing.assert_allclose(state.Y.ravel(), [-1.6, -1.6], atol=1e-15)
    # the cached gradients stay local
    np.testing.assert_allclose(state.lastG.ravel(), [0.0, -3.2], atol=1e-15)
    assert (state.step, state.grad_evals, state.comm_steps) == (1, 2, 1)


def test_two_node_round_composes():
    prob = two_node()
    cfg = AlgoConfig("flexgt", 1, 1, 0.1)
    state = init_state(prob, cfg, J2, X0=np.zeros((2, 1)))
    run_round(state, prob, cfg, J2)
    np.testing.assert_allclose(state.X.ravel(), [0.2, 0.2], atol=1e-15)
    assert state.round == 1


def test_zero_stepsize(default_problem, expo):
    prob = default_problem.with_sigma(0.0)
    cfg = AlgoConfig("flexgt", 1, 3, 0.0)
    state = init_state(prob, cfg, expo)
    X, Y = state.X.copy(), state.Y.copy()
    local_phase(state, prob, cfg)
    assert np.array_equal(state.X, X)
    np.testing.assert_allclose(state.Y, Y, atol=1e-15)


def test_gossip_consensus_fixed_point(expo):
    prob = generate_problem(20, 3, 0.1, 0.0, 0)
    cfg = AlgoConfig("flexgt", 3, 1, 0.1)
    X = np.tile([0.1, 0.2, 0.3], (20, 1))
    state = init_state(prob, cfg, expo, X0=X)
    state.Y = np.tile([1.0, -1.0, 2.0], (20, 1))
    Y = state.Y.copy()
    communication_phase(state, expo, cfg)
    np.testing.assert_allclose(state.X, X, atol=1e-15)
    np.testing.assert_allclose(state.Y, Y, atol=1e-14)


def test_gossip_preserves_means(default_problem, expo):
    cfg = AlgoConfig("flexgt", 4, 1, 0.01)
    state = init_state(default_problem, cfg, expo)
    mx, my = state.X.mean(axis=0), state.Y.mean(axis=0)
    communication_phase(state, expo, cfg)
    assert np.max(np.abs(state.X.mean(axis=0) - mx)) <= 1e-13
    assert np.max(np.abs(state.Y.mean(axis=0) - my)) <= 1e-13
    assert state.comm_steps == 4


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_dsgt_reduction_bit_identical(default_problem, expo, seed):
    prob = default_problem.with_seed(seed)
    cfg = AlgoConfig("flexgt", 1, 1, 0.02)
    state = init_state(prob, cfg, expo)
    ref = dsgt_reference(prob, expo, 0.02, 200, initial_point(prob))
    for X, Y in ref:
        run_round(state, prob, cfg, expo)
        assert np.array_equal(state.X, X) and np.array_equal(state.Y, Y)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_dpsgd_reduction_bit_identical(default_problem, expo, seed):
    prob = default_problem.with_seed(seed)
    cfg = AlgoConfig("dfl", 1, 1, 0.02)
    state = init_state(prob, cfg, expo)
    for X in dpsgd_reference(prob, expo, 0.02, 200, initial_point(prob)):
        run_round(state, prob, cfg, expo)
        assert np.array_equal(state.X, X)
    assert state.Y is None


def test_lugt_structure(default_problem, expo):
    # flexgt(1, d2): d2 tracked local steps, then one gossip sweep
    prob = default_problem
    cfg = AlgoConfig("flexgt", 1, 3, 0.01)
    state = init_state(prob, cfg, expo)
    run_round(state, prob, cfg, expo)
    assert (state.step, state.grad_evals, state.comm_steps) == (3, 60, 1)
    assert len(state.period_X) == 4 and len(state.period_Y) == 3


@settings(max_examples=12, deadline=None)
@given(d1=st.integers(1, 4), d2=st.integers(1, 4), seed=st.integers(0, 1000))
def test_compact_form_oracle(d1, d2, seed):
    prob = generate_problem(20, 10, 0.1, 0.1, 0).with_seed(seed)
    W = build_weight_matrix(TopologySpec("exponential", 20))
    Wd = np.linalg.matrix_power(W.entries, d1)
    cfg = AlgoConfig("flexgt", d1, d2, 0.01)
    state = init_state(prob, cfg, W)
    for _ in range(20):
        X0, Y0, G0 = state.X, state.Y, state.lastG
        run_round(state, prob, cfg, W)
        X_pred = Wd @ (X0 - cfg.gamma * sum(state.period_Y))
        Y_pred = Wd @ (Y0 + state.lastG - G0)
        assert np.array_equal(state.period_X[0], X0) and np.array_equal(state.period_Y[0], Y0)
        assert np.linalg.norm(state.X - X_pred) <= 1e-12 * (1 + np.linalg.norm(X_pred))
        assert np.linalg.norm(state.Y - Y_pred) <= 1e-12 * (1 + np.linalg.norm(Y_pred))


def test_mean_iterate_identity(default_problem, expo):
    cfg = AlgoConfig("flexgt", 2, 3, 0.01)
    state = init_state(default_problem, cfg, expo)
    n = default_problem.n
    for _ in range(50):
        xbar = state.X.mean(axis=0)
        run_round(state, default_problem, cfg, expo)
        pred = xbar - cfg.gamma / n * sum(Y.sum(axis=0) for Y in state.period_Y)
        assert np.linalg.norm(state.X.mean(axis=0) - pred) <= 1e-12


@pytest.mark.parametrize("d1, d2", [(1, 1), (2, 2), (3, 1), (1, 3)])
def test_tracking_mean_identity_every_step(default_problem, expo, d1, d2):
    worst = []

    def check(state, kind):
        d = np.linalg.norm(state.Y.mean(axis=0) - state.lastG.mean(axis=0))
        worst.append(d / (1 + np.linalg.norm(state.lastG)))

    run(default_problem, AlgoConfig("flexgt", d1, d2, 0.01, rounds=200), expo, on_step=check)
    assert len(worst) == 200 * (d1 + d2)
    assert max(worst) <= 1e-12


def test_counters_and_step(default_problem, expo):
    cfg = AlgoConfig("dfl", 3, 2, 0.01, rounds=7)
    tr = run(default_problem, cfg, expo)
    last = tr.metrics[-1]
    assert (last.round, last.grad_evals, last.comm_steps) == (7, 20 * 2 * 7, 3 * 7)
    assert [m.round for m in tr.metrics] == list(range(1, 8))
    assert tr.initial.round == 0 and tr.initial.grad_evals == 0


def test_run_deterministic(default_problem, expo):
    cfg = AlgoConfig("flexgt", 2, 2, 0.01, rounds=30)
    a = run(default_problem, cfg, expo)
    b = run(default_problem, cfg, expo)
    assert a.metrics == b.metrics


def test_noiseless_run_decreases_gap(default_problem, expo):
    prob = default_problem.with_sigma(0.0)
    mu, L = prob.constants()
    gamma = max_stepsize(TheoryParams(mu=mu, L=L, rho=expo.rho, d1=2, d2=2))
    tr = run(prob, AlgoConfig("flexgt", 2, 2, gamma, rounds=200), expo)
    assert tr.metrics[-1].opt_gap < tr.initial.opt_gap


def test_huge_stepsize_diverges(default_problem, expo):
    tr = run(default_problem, AlgoConfig("flexgt", 1, 1, 100.0, rounds=2000), expo)
    assert tr.diverged
    assert len(tr.metrics) < 2000
    assert all(np.isfinite(m.lyapunov) for m in tr.metrics)


def test_heterogeneity_bias_sign(expo):
    # sigma = 0: tracking removes the heterogeneity bias, local SGD does not
    prob = generate_problem(20, 10, 0.1, 0.0, 0)
    gamma = (1 - expo.rho**3) ** 2 / (2 * prob.constants()[1])
    final = {}
    for variant in ("flexgt", "dfl"):
        cfg = AlgoConfig(variant, 3, 2, gamma)
        state = init_state(prob, cfg, expo)
        for _ in range(3000):
            run_round(state, prob, cfg, expo)
        final[variant] = state.X.mean(axis=0)
    assert np.linalg.norm(prob.full_gradient(final["flexgt"])) < 1e-9
    gap = final["dfl"] - prob.optimum()[0]
    assert gap @ gap > 1e-6
