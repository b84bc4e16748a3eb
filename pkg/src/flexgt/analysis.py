"""Round diagnostics and closed-form theory for FlexGT.

The theory evaluators take a :class:`TheoryParams` bundle. Complexity
expressions are evaluated with all hidden constants and logarithmic factors
set to one; they are meant to be compared across ``(d1, d2)``, not read as
step counts.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "TheoryParams",
    "RoundMetrics",
    "NoSpectralGapError",
    "StepsizeWarning",
    "lyapunov_coeffs",
    "lyapunov_value",
    "max_stepsize",
    "contraction_factor",
    "m_sigma",
    "noise_floor",
    "steady_state_bound",
    "comp_complexity",
    "comm_complexity",
    "weighted_cost",
    "minimize_weighted_cost",
    "optimality_gap_bound",
    "consensus_bound",
    "tracking_bound",
    "client_divergence_bound",
    "measure_round",
    "default_metrics_hook",
    "theory_params_for",
    "Reached",
    "Tradeoff",
    "steps_to_accuracy",
    "steady_state",
]


class NoSpectralGapError(ValueError):
    pass


class StepsizeWarning(UserWarning):
    """The stepsize exceeds the range where the contraction guarantee holds."""


@dataclass(frozen=True)
class TheoryParams:
    mu: float = 0.0
    L: float = 1.0
    rho: float = 0.0
    d1: int = 1
    d2: int = 1
    gamma: float = 0.0
    sigma: float = 0.0
    n: int = 1
    eps: float = 1e-5
    w1: float = 1.0
    w2: float = 1.0

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError(f"d1, d2 must be >= 1, got ({self.d1}, {self.d2})")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if self.mu < 0 or self.L <= 0 or self.mu > self.L:
            raise ValueError(f"need 0 <= mu <= L and L > 0, got mu={self.mu}, L={self.L}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")

    @property
    def rho_d1(self) -> float:
        """Effective mixing quantity of one round, ``rho ** d1``."""
        return self.rho**self.d1

    def replace(self, **changes) -> TheoryParams:
        return dataclasses.replace(self, **changes)


def _gap(tp: TheoryParams) -> float:
    gap = 1.0 - tp.rho_d1
    if gap <= 0.0:
        raise NoSpectralGapError("no spectral gap")
    return gap


# -- Lyapunov function and contraction ------------------------------------


def lyapunov_coeffs(tp: TheoryParams) -> tuple[float, float]:
    """Weights ``(c1, c2)`` of consensus and tracking error in the Lyapunov function."""
    gap = _gap(tp)
    c1 = 192 * tp.d2 * tp.gamma * tp.L / (tp.n * gap)
    c2 = 9312 * tp.d2**3 * tp.gamma**3 * tp.L / (tp.n * gap**3)
    return c1, c2


def max_stepsize(tp: TheoryParams) -> float:
    """Largest stepsize covered by the linear convergence guarantee.

    Terms whose denominator carries ``rho ** d1 = 0`` are infinite.
    """
    r = tp.rho_d1
    gap = 1.0 - r
    scale = tp.d2 * tp.L
    terms = [1.0 / (10 * scale)]
    if r > 0.0:
        terms.append(gap / (37 * scale * r**0.25))
        terms.append(gap**2 / (153 * scale * r**0.5))
    return min(terms)


def contraction_factor(tp: TheoryParams) -> float:
    """Per-round factor ``1 - min(mu d2 gamma / 4, (1 - rho^d1) / 8)``.

    Warns with :class:`StepsizeWarning` if ``gamma`` is above
    :func:`max_stepsize`; the factor is still returned.
    """
    if tp.gamma > max_stepsize(tp):
        warnings.warn(
            f"gamma={tp.gamma:g} exceeds the stepsize bound {max_stepsize(tp):g}",
            StepsizeWarning,
            stacklevel=2,
        )
    return 1.0 - min(tp.mu * tp.d2 * tp.gamma / 4, (1.0 - tp.rho_d1) / 8)


def m_sigma(tp: TheoryParams) -> float:
    r = tp.rho_d1
    s2 = tp.sigma**2
    return 36 * (1 - r) ** 3 * s2 + 3456 * (1 - r) * r * s2 + 55872 * r * s2


def noise_floor(tp: TheoryParams) -> float:
    """Additive noise per round in the Lyapunov recursion."""
    gap = _gap(tp)
    return (
        tp.d2 * tp.gamma**2 * tp.sigma**2 / tp.n
        + tp.d2**3 * tp.gamma**3 * tp.L * m_sigma(tp) / gap**3
    )


def steady_state_bound(tp: TheoryParams) -> float:
    """Fixed point ``noise / (1 - factor)`` of the Lyapunov recursion."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepsizeWarning)
        q = contraction_factor(tp)
    return noise_floor(tp) / (1.0 - q)


# -- complexity trade-off -------------------------------------------------


def _complexity_terms(tp: TheoryParams) -> tuple[float, float, float]:
    """The three terms of the computation complexity, without frequency factors."""
    gap = _gap(tp)
    r = tp.rho_d1
    s2 = tp.sigma**2
    lead = tp.L / (gap**2 * tp.mu)
    stochastic = s2 / (tp.mu**2 * tp.n * tp.eps)
    mixing = math.sqrt(tp.L * r * s2) / math.sqrt(tp.mu**3 * gap**3 * tp.eps)
    return lead, stochastic, mixing


def comp_complexity(tp: TheoryParams) -> float:
    """Computation steps to reach accuracy ``eps``."""
    lead, stochastic, mixing = _complexity_terms(tp)
    return tp.d2 * lead + stochastic + tp.d2 * mixing


def comm_complexity(tp: TheoryParams) -> float:
    """Communication steps to reach accuracy ``eps``."""
    lead, stochastic, mixing = _complexity_terms(tp)
    return tp.d1 * lead + tp.d1 * stochastic / tp.d2 + tp.d1 * mixing


def weighted_cost(tp: TheoryParams) -> float:
    return tp.w1 * comm_complexity(tp) + tp.w2 * comp_complexity(tp)


class Tradeoff(NamedTuple):
    d1: int
    d2: int
    cost: float
    grid: np.ndarray  # grid[d1 - 1, d2 - 1]


def minimize_weighted_cost(tp: TheoryParams, d1_max: int, d2_max: int) -> Tradeoff:
    """Exhaustive search over integer ``(d1, d2)``; ties go to smaller d1, then smaller d2."""
    if d1_max < 1 or d2_max < 1:
        raise ValueError("grid bounds must be >= 1")
    grid = np.empty((d1_max, d2_max))
    for d1 in range(1, d1_max + 1):
        for d2 in range(1, d2_max + 1):
            grid[d1 - 1, d2 - 1] = weighted_cost(tp.replace(d1=d1, d2=d2))
    # argmin returns the first minimum in row-major order, which is the tie rule
    i, j = np.unravel_index(int(np.argmin(grid)), grid.shape)
    return Tradeoff(int(i) + 1, int(j) + 1, float(grid[i, j]), grid)


# -- per-round inequalities (deterministic reading at sigma = 0) ----------


def optimality_gap_bound(tp, opt_gap, consensus_err, tracking_err, f_gap) -> float:
    g, d2, L, n = tp.gamma, tp.d2, tp.L, tp.n
    s2 = tp.sigma**2
    return (
        (1 - d2 * tp.mu * g / 2) * opt_gap
        + 12 * d2 * g * L / n * consensus_err
        + 12 * d2**3 * g**3 * L / n * tracking_err
        - d2 * g * f_gap
        + d2 * g**2 * s2 / n
        + 36 * d2**3 * g**3 * L * s2
    )


def consensus_bound(tp, consensus_err, tracking_err, f_gap) -> float:
    """Upper bound on next-round consensus error."""
    g, d2, L, n, r = tp.gamma, tp.d2, tp.L, tp.n, tp.rho_d1
    gap = _gap(tp)
    return (
        (3 + r) / 4 * consensus_err
        + 192 * n * d2**4 * g**4 * L**3 * r / gap * f_gap
        + 6 * d2**2 * g**2 * r / gap * tracking_err
        + 18 * n * d2**2 * g**2 * r / gap * tp.sigma**2
    )


def tracking_bound(tp, consensus_err, tracking_err, f_gap) -> float:
    """Upper bound on next-round tracking error."""
    g, d2, L, n, r = tp.gamma, tp.d2, tp.L, tp.n, tp.rho_d1
    gap = _gap(tp)
    return (
        (3 + r) / 4 * tracking_err
        + 30 * r * L**2 / gap * consensus_err
        + 96 * n * r * d2**2 * g**2 * L**3 / gap * f_gap
        + 6 * n * r * tp.sigma**2
    )


def client_divergence_bound(tp, consensus_err, tracking_err, f_gap) -> float:
    """Bound on within-round drift ``||X_{d2k+t} - 1 xbar_{d2k}||^2``, ``1 <= t < d2``."""
    g, d2, L, n = tp.gamma, tp.d2, tp.L, tp.n
    s2 = tp.sigma**2
    return (
        4 * consensus_err
        + 4 * d2**2 * g**2 * tracking_err
        + 16 * n * d2**2 * g**2 * L * f_gap
        + d2**2 * g**2 * (4 * s2 + 8 * n * s2)
    )


# -- measurements ---------------------------------------------------------


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    opt_gap: float
    f_gap: float
    consensus_err: float
    tracking_err: float
    lyapunov: float
    client_div: float
    grad_evals: int
    comm_steps: int


FIELDS = tuple(f.name for f in dataclasses.fields(RoundMetrics))


def _sq_dev(Z: np.ndarray) -> float:
    d = Z - Z.mean(axis=0)
    return float(np.sum(d * d))


def lyapunov_value(state, prob, tp: TheoryParams) -> float:
    """``||xbar - x*||^2 + c1 ||X - 1 xbar||^2 + c2 ||Y - 1 ybar||^2``; ``Y`` may be absent."""
    c1, c2 = lyapunov_coeffs(tp)
    e = state.X.mean(axis=0) - prob.optimum()[0]
    v = float(e @ e) + c1 * _sq_dev(state.X)
    if state.Y is not None:
        v += c2 * _sq_dev(state.Y)
    return v


def measure_round(state, prob, tp: TheoryParams, period_X: Sequence[np.ndarray] | None = None):
    """Fill a :class:`RoundMetrics` from the current state.

    ``period_X`` is the list of iterates of the last local phase starting at
    the round-start iterate; it defaults to ``state.period_X``.
    """
    c1, c2 = lyapunov_coeffs(tp)
    X = state.X
    xbar = X.mean(axis=0)
    e = xbar - prob.optimum()[0]
    opt_gap = float(e @ e)
    consensus = _sq_dev(X)
    tracking = 0.0 if state.Y is None else _sq_dev(state.Y)
    if period_X is None:
        period_X = state.period_X
    client_div = 0.0
    if len(period_X) > 2:
        start = period_X[0].mean(axis=0)
        for Xt in period_X[1:-1]:
            d = Xt - start
            client_div = max(client_div, float(np.sum(d * d)))
    return RoundMetrics(
        round=state.round,
        opt_gap=opt_gap,
        f_gap=prob.f_gap(xbar),
        consensus_err=consensus,
        tracking_err=tracking,
        lyapunov=opt_gap + c1 * consensus + c2 * tracking,
        client_div=client_div,
        grad_evals=state.grad_evals,
        comm_steps=state.comm_steps,
    )


def theory_params_for(prob, config, W, **extra) -> TheoryParams:
    mu, L = prob.constants()
    return TheoryParams(
        mu=mu,
        L=L,
        rho=W.rho,
        d1=config.d1,
        d2=config.d2,
        gamma=config.gamma,
        sigma=prob.sigma,
        n=prob.n,
        **extra,
    )


def default_metrics_hook(prob, config, W):
    tp = theory_params_for(prob, config, W)
    return lambda state: measure_round(state, prob, tp)


class Reached(NamedTuple):
    rounds: int
    grad_evals: int
    comm_steps: int


def steps_to_accuracy(trace, eps: float, metric: str = "opt_gap") -> Reached | None:
    """First round after which ``metric`` stays at or below ``eps``.

    Accepts an engine trace or a plain list of :class:`RoundMetrics`.
    Returns cumulative costs at that round, or ``None`` if the accuracy is
    never reached (including diverged traces).
    """
    if getattr(trace, "diverged", False):
        return None
    rows = list(getattr(trace, "metrics", trace))
    initial = getattr(trace, "initial", None)
    if initial is not None:
        rows = [initial] + rows
    if not rows:
        raise ValueError("empty trace")
    values = np.array([getattr(m, metric) for m in rows])
    above = np.nonzero(~(values <= eps))[0]
    first = 0 if above.size == 0 else int(above[-1]) + 1
    if first >= len(rows):
        return None
    m = rows[first]
    return Reached(m.round, m.grad_evals, m.comm_steps)


def steady_state(values: Sequence[float], frac: float = 0.2) -> float:
    """Mean over the final ``frac`` of a series."""
    values = np.asarray(values, dtype=float)
    k = max(1, int(math.ceil(frac * len(values))))
    return float(np.mean(values[-k:]))
