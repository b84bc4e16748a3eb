"""Synthetic regularized least-squares problem with a seeded noisy gradient oracle.

Node ``i`` holds ``f_i(x) = (h_i^T x - vbar_i)^2 + (mu/2)||x||^2 + sigma^2``.
Noise is drawn from a counter-based generator keyed on ``(seed, step)``: the
noise matrix for a step is a pure function of those two integers, so results
never depend on call order or thread scheduling.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

__all__ = [
    "QuadraticProblem",
    "GradientSample",
    "DegenerateProblemError",
    "generate_problem",
    "initial_point",
]

_NOISE_STREAM = 0
_INIT_STREAM = 1
_PROBLEM_STREAM = 2


class DegenerateProblemError(ValueError):
    pass


class GradientSample(NamedTuple):
    value: np.ndarray
    node: int
    step: int


def _philox(seed: int, stream: int, counter: int = 0) -> np.random.Generator:
    key = [int(seed) % 2**64, stream]
    bitgen = np.random.Philox(key=key, counter=[0, 0, int(counter) % 2**64, 0])
    return np.random.Generator(bitgen)


@dataclass(frozen=True, eq=False)
class QuadraticProblem:
    """Per-node quadratic objectives.

    Attributes:
        H: (n, p) feature vectors, one row per node.
        vbar: (n,) target means.
        mu: ridge weight, also the strong convexity modulus.
        sigma: gradient noise level; ``E||noise||^2 = sigma^2``.
        seed: key of the noise stream.
    """

    H: np.ndarray
    vbar: np.ndarray
    mu: float
    sigma: float
    seed: int = 0

    def __post_init__(self):
        H = np.array(self.H, dtype=float, ndmin=2)
        vbar = np.array(self.vbar, dtype=float).reshape(-1)
        if H.shape[0] != vbar.shape[0]:
            raise ValueError(f"H has {H.shape[0]} rows but vbar has {vbar.shape[0]} entries")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(vbar))):
            raise ValueError("H and vbar must be finite")
        if self.mu < 0 or self.sigma < 0:
            raise ValueError("mu and sigma must be nonnegative")
        H.setflags(write=False)
        vbar.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "vbar", vbar)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def p(self) -> int:
        return self.H.shape[1]

    def with_seed(self, seed: int) -> QuadraticProblem:
        """Same data, different noise stream."""
        return dataclasses.replace(self, seed=seed)

    def with_sigma(self, sigma: float) -> QuadraticProblem:
        return dataclasses.replace(self, sigma=sigma)

    # -- objectives -------------------------------------------------------

    def local_objective(self, i: int, x: np.ndarray) -> float:
        self._check_node(i)
        x = np.asarray(x, dtype=float)
        r = self.H[i] @ x - self.vbar[i]
        return float(r * r + 0.5 * self.mu * (x @ x) + self.sigma**2)

    def objective(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        r = self.H @ x - self.vbar
        return float(np.mean(r * r) + 0.5 * self.mu * (x @ x) + self.sigma**2)

    @cached_property
    def hessian(self) -> np.ndarray:
        """Hessian of the network-average objective."""
        return 2.0 * (self.H.T @ self.H) / self.n + self.mu * np.eye(self.p)

    def f_gap(self, x: np.ndarray) -> float:
        """``f(x) - f*``, evaluated as a quadratic form so it stays exact near zero."""
        e = np.asarray(x, dtype=float) - self.optimum()[0]
        return float(max(0.5 * e @ self.hessian @ e, 0.0))

    # -- gradients --------------------------------------------------------

    def exact_gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        self._check_node(i)
        x = np.asarray(x, dtype=float)
        h = self.H[i]
        return 2.0 * h * (h @ x - self.vbar[i]) + self.mu * x

    def gradients(self, X: np.ndarray) -> np.ndarray:
        """Row ``i`` is the exact gradient of ``f_i`` at ``X[i]``."""
        r = np.einsum("ij,ij->i", self.H, X) - self.vbar
        return 2.0 * self.H * r[:, None] + self.mu * X

    def full_gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.hessian @ x - 2.0 * (self.H.T @ self.vbar) / self.n

    def noise(self, step: int) -> np.ndarray:
        """(n, p) noise matrix for inner step ``step``; row ``i`` belongs to node ``i``."""
        if self.sigma == 0.0:
            return np.zeros((self.n, self.p))
        z = _philox(self.seed, _NOISE_STREAM, step).standard_normal((self.n, self.p))
        return z * (self.sigma / np.sqrt(self.p))

    def noisy_gradients(self, X: np.ndarray, step: int) -> np.ndarray:
        g = self.gradients(X)
        if self.sigma == 0.0:
            return g
        return g + self.noise(step)

    def noisy_gradient(self, i: int, x: np.ndarray, step: int) -> GradientSample:
        g = self.exact_gradient(i, x)
        if self.sigma > 0.0:
            g = g + self.noise(step)[i]
        return GradientSample(g, i, step)

    # -- closed-form quantities -------------------------------------------

    def optimum(self) -> tuple[np.ndarray, float]:
        """Minimizer ``x*`` of the network objective and ``f(x*)``."""
        return self._optimum

    @cached_property
    def _optimum(self) -> tuple[np.ndarray, float]:
        A = self.hessian
        if self.mu == 0.0 and np.linalg.cond(A) > 1e12:
            raise DegenerateProblemError("degenerate problem")
        b = 2.0 * (self.H.T @ self.vbar) / self.n
        x_star = np.linalg.solve(A, b)
        x_star.setflags(write=False)
        return x_star, self.objective(x_star)

    def constants(self) -> tuple[float, float]:
        """``(mu, L)`` with ``L = max_i 2||h_i||^2 + mu``."""
        L = float(np.max(2.0 * np.sum(self.H**2, axis=1)) + self.mu)
        return self.mu, L

    def heterogeneity_at_optimum(self) -> float:
        x_star = self.optimum()[0]
        g = self.gradients(np.broadcast_to(x_star, (self.n, self.p)))
        return float(np.mean(np.sum(g * g, axis=1)))

    def _check_node(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"node index {i} outside [0, {self.n})")


def generate_problem(n: int, p: int, mu: float, sigma: float, seed: int) -> QuadraticProblem:
    """Draw ``h_i ~ U[0,1]^p`` and ``vbar_i ~ U[0,1]`` from the seeded generator."""
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    if mu < 0 or sigma < 0:
        raise ValueError("mu and sigma must be nonnegative")
    rng = _philox(seed, _PROBLEM_STREAM)
    H = rng.uniform(0.0, 1.0, size=(n, p))
    vbar = rng.uniform(0.0, 1.0, size=n)
    return QuadraticProblem(H, vbar, mu, sigma, seed)


def initial_point(prob: QuadraticProblem) -> np.ndarray:
    """Starting iterates ``X_0``, rows i.i.d. uniform on ``[0,1]^p``."""
    return _philox(prob.seed, _INIT_STREAM).uniform(0.0, 1.0, size=(prob.n, prob.p))
