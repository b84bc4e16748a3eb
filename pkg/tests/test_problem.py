import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexgt.problem import (
    DegenerateProblemError,
    QuadraticProblem,
    generate_problem,
    initial_point,
)


@pytest.fixture(scope="module")
def default_problem():
    return generate_problem(20, 10, 0.1, 0.1, 0)


def scalar_pair():
    # n=2, p=1, h=(1, 0), vbar=(1, 0), mu=0.1
    return QuadraticProblem([[1.0], [0.0]], [1.0, 0.0], 0.1, 0.0)


def test_generation_is_deterministic():
    a = generate_problem(20, 10, 0.1, 0.1, 7)
    b = generate_problem(20, 10, 0.1, 0.1, 7)
    assert np.array_equal(a.H, b.H) and np.array_equal(a.vbar, b.vbar)
    c = generate_problem(20, 10, 0.1, 0.1, 8)
    assert not np.array_equal(a.H, c.H)


def test_generation_scale_and_range(default_problem):
    prob = default_problem
    assert (prob.n, prob.p) == (20, 10)
    assert prob.H.min() >= 0 and prob.H.max() <= 1
    assert prob.vbar.min() >= 0 and prob.vbar.max() <= 1


def test_generation_rejects_bad_args():
    with pytest.raises(ValueError):
        generate_problem(0, 3, 0.1, 0.1, 0)
    with pytest.raises(ValueError):
        generate_problem(3, 3, -0.1, 0.1, 0)


def test_with_seed_keeps_data(default_problem):
    other = default_problem.with_seed(5)
    assert np.array_equal(other.H, default_problem.H)
    assert other.seed == 5


def test_gradient_regularizer_only():
    prob = QuadraticProblem(np.zeros((2, 3)), [0.3, 0.7], 0.5, 0.0)
    x = np.array([1.0, -2.0, 4.0])
    np.testing.assert_allclose(prob.exact_gradient(1, x), 0.5 * x)


def test_gradient_scalar():
    prob = QuadraticProblem([[1.0]], [0.0], 0.0, 0.0)
    assert prob.exact_gradient(0, np.array([3.0]))[0] == 6.0


def test_gradient_index_checked(default_problem):
    with pytest.raises(IndexError):
        default_problem.exact_gradient(20, np.zeros(10))
    with pytest.raises(IndexError):
        default_problem.exact_gradient(-1, np.zeros(10))


def test_gradient_matches_finite_differences(default_problem):
    prob = default_problem
    rng = np.random.default_rng(1)
    h = 1e-6
    for _ in range(10):
        i = int(rng.integers(prob.n))
        x = rng.normal(size=prob.p)
        fd = np.array(
            [
                (prob.local_objective(i, x + h * e) - prob.local_objective(i, x - h * e)) / (2 * h)
                for e in np.eye(prob.p)
            ]
        )
        g = prob.exact_gradient(i, x)
        assert np.linalg.norm(fd - g) <= 1e-5 * np.linalg.norm(g)


def test_batch_gradients_match_rows(default_problem):
    prob = default_problem
    X = np.random.default_rng(2).normal(size=(prob.n, prob.p))
    G = prob.gradients(X)
    for i in range(prob.n):
        np.testing.assert_allclose(G[i], prob.exact_gradient(i, X[i]), rtol=1e-13, atol=1e-14)
    np.testing.assert_allclose(
        prob.full_gradient(X[0]), prob.gradients(np.tile(X[0], (prob.n, 1))).mean(axis=0), atol=1e-13
    )


def test_noiseless_sample_is_exact(default_problem):
    prob = default_problem.with_sigma(0.0)
    x = np.linspace(0, 1, prob.p)
    s = prob.noisy_gradient(3, x, 17)
    assert np.array_equal(s.value, prob.exact_gradient(3, x))
    assert (s.node, s.step) == (3, 17)


def test_noise_is_keyed_not_sequential(default_problem):
    prob = default_problem
    x = np.zeros(prob.p)
    later = prob.noisy_gradient(4, x, 9).value
    earlier = prob.noisy_gradient(4, x, 3).value
    assert np.array_equal(prob.noisy_gradient(4, x, 9).value, later)
    assert not np.array_equal(earlier, later)
    assert np.array_equal(prob.noisy_gradients(np.zeros((prob.n, prob.p)), 9)[4], later)
    assert not np.array_equal(prob.with_seed(1).noise(9), prob.noise(9))


def test_noise_monte_carlo():
    # 10^5 draws at a fixed (i, x): unbiased, E||delta||^2 = sigma^2
    sigma = 0.3
    prob = generate_problem(2, 4, 0.1, sigma, 11)
    x = np.array([0.2, -0.4, 1.0, 0.0])
    g = prob.exact_gradient(1, x)
    k = 100_000
    deltas = np.array([prob.noisy_gradient(1, x, t).value for t in range(k)]) - g
    assert np.linalg.norm(deltas.mean(axis=0)) <= 4 * sigma / np.sqrt(k)
    second = np.mean(np.sum(deltas**2, axis=1))
    assert abs(second - sigma**2) <= 0.05 * sigma**2


def test_optimum_pure_regularizer():
    prob = QuadraticProblem(np.zeros((3, 2)), [0.2, 0.5, 0.9], 0.4, 0.0)
    np.testing.assert_allclose(prob.optimum()[0], 0.0, atol=1e-15)


def test_optimum_scalar_pair():
    prob = scalar_pair()
    assert prob.optimum()[0][0] == pytest.approx(1 / 1.1, abs=1e-14)


def test_optimum_includes_sigma_constant():
    prob = scalar_pair()
    x = prob.optimum()[0]
    assert prob.with_sigma(0.5).optimum()[1] == pytest.approx(prob.objective(x) + 0.25)


def test_optimum_gradient_descent_oracle(default_problem):
    prob = default_problem
    x_star, f_star = prob.optimum()
    assert np.linalg.norm(prob.full_gradient(x_star)) <= 1e-10
    lam_max = np.linalg.eigvalsh(prob.hessian)[-1]
    step = 0.5 / lam_max
    # plain descent on the raw per-node sums, no shared code with optimum()
    H, v, mu = prob.H, prob.vbar, prob.mu
    x = np.zeros(prob.p)
    for _ in range(100_000):
        x = x - step * (2 * H.T @ (H @ x - v) / prob.n + mu * x)
    assert np.linalg.norm(x - x_star) <= 1e-6
    assert f_star == pytest.approx(prob.objective(x), abs=1e-12)


def test_degenerate_problem():
    prob = QuadraticProblem([[1.0, 1.0], [1.0, 1.0]], [0.5, 0.5], 0.0, 0.0)
    with pytest.raises(DegenerateProblemError, match="degenerate problem"):
        prob.optimum()
    with pytest.raises(DegenerateProblemError):
        prob.heterogeneity_at_optimum()


def test_constants_examples():
    assert QuadraticProblem(np.zeros((2, 2)), [0, 0], 0.3, 0).constants() == (0.3, 0.3)
    assert QuadraticProblem([[1.0]], [0.4], 0.0, 0.0).constants() == (0.0, 2.0)


def test_default_L_regression(default_problem):
    assert default_problem.constants()[1] == pytest.approx(10.446173755363978, rel=1e-12)


def test_L_secant_oracle(default_problem):
    prob = default_problem
    L = prob.constants()[1]
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(2000):
        i = int(rng.integers(prob.n))
        x, y = rng.normal(size=(2, prob.p))
        y = x + rng.choice([1e-3, 1.0, 10.0]) * (y - x)
        ratio = np.linalg.norm(prob.exact_gradient(i, x) - prob.exact_gradient(i, y)) / np.linalg.norm(x - y)
        worst = max(worst, ratio)
    assert worst <= L + 1e-10


def test_heterogeneity_examples():
    assert scalar_pair().heterogeneity_at_optimum() == pytest.approx(0.00826446280991736, rel=1e-12)
    same = QuadraticProblem(np.tile([0.3, 0.6], (4, 1)), [0.5] * 4, 0.1, 0.0)
    assert same.heterogeneity_at_optimum() == pytest.approx(0.0, abs=1e-25)


def test_default_heterogeneity_regression(default_problem):
    assert default_problem.heterogeneity_at_optimum() == pytest.approx(0.9816038598485175, rel=1e-10)


def test_f_gap_matches_objective_difference(default_problem):
    prob = default_problem
    x = prob.optimum()[0] + 0.3
    assert prob.f_gap(x) == pytest.approx(prob.objective(x) - prob.optimum()[1], rel=1e-10)
    assert prob.f_gap(prob.optimum()[0]) == 0.0


def test_initial_point_seeded(default_problem):
    X0 = initial_point(default_problem)
    assert X0.shape == (20, 10)
    assert X0.min() >= 0 and X0.max() <= 1
    assert np.array_equal(X0, initial_point(default_problem))
    assert not np.array_equal(X0, initial_point(default_problem.with_seed(1)))


vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=4).map(np.array)


@settings(max_examples=100, deadline=None)
@given(i=st.integers(0, 19), x=vec, y=vec, seed=st.integers(0, 50))
def test_strong_convexity_and_smoothness(i, x, y, seed):
    prob = generate_problem(20, 4, 0.2, 0.0, seed)
    mu, L = prob.constants()
    dg = prob.exact_gradient(i, x) - prob.exact_gradient(i, y)
    d = x - y
    assert dg @ d >= mu * (d @ d) - 1e-10
    assert np.linalg.norm(dg) <= L * np.linalg.norm(d) + 1e-10
