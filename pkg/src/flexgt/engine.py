"""Round-based execution of FlexGT and the decentralized SGD (DFL) baseline.

A round is ``d2`` local updates followed by ``d1`` gossip sweeps. With
gradient tracking each node keeps a tracker ``y_i`` and the stochastic
gradient it last sampled; the cached sample is subtracted on the next local
update, never re-drawn, so the network mean of ``Y`` always equals the mean
of the cached gradients.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .problem import QuadraticProblem, initial_point
from .topology import WeightMatrix

__all__ = [
    "AlgoConfig",
    "NetworkState",
    "Trace",
    "init_state",
    "local_phase",
    "communication_phase",
    "run_round",
    "run",
]

Variant = Literal["flexgt", "dfl"]
StepHook = Callable[["NetworkState", str], None]


@dataclass(frozen=True)
class AlgoConfig:
    """One algorithm instance.

    flexgt(1, 1) is DSGT, flexgt(1, d2) is LU-GT and dfl(1, 1) is D-PSGD.
    """

    variant: Variant
    d1: int
    d2: int
    gamma: float
    rounds: int = 1

    def __post_init__(self):
        if self.variant not in ("flexgt", "dfl"):
            raise ValueError(f"variant: unknown algorithm {self.variant!r}")
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError(f"d1, d2 must be >= 1, got ({self.d1}, {self.d2})")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if self.rounds < 0:
            raise ValueError(f"rounds must be nonnegative, got {self.rounds}")

    @property
    def tracking(self) -> bool:
        return self.variant == "flexgt"

    @property
    def label(self) -> str:
        return f"{self.variant}(d1={self.d1},d2={self.d2})"


@dataclass
class NetworkState:
    """Mutable per-node state of one run.

    ``period_X`` holds the iterates ``X_{d2k}, ..., X_{d2k+d2}`` of the most
    recent local phase (the last one before gossip) and ``period_Y`` the
    trackers ``Y_{d2k}, ..., Y_{d2k+d2-1}`` used in its updates.
    """

    X: np.ndarray
    Y: np.ndarray | None = None
    lastG: np.ndarray | None = None
    step: int = 0
    round: int = 0
    grad_evals: int = 0
    comm_steps: int = 0
    period_X: list[np.ndarray] = field(default_factory=list)
    period_Y: list[np.ndarray] = field(default_factory=list)

    def copy(self) -> NetworkState:
        return NetworkState(
            self.X.copy(),
            None if self.Y is None else self.Y.copy(),
            None if self.lastG is None else self.lastG.copy(),
            self.step,
            self.round,
            self.grad_evals,
            self.comm_steps,
            [a.copy() for a in self.period_X],
            [a.copy() for a in self.period_Y],
        )

    def is_finite(self) -> bool:
        ok = bool(np.all(np.isfinite(self.X)))
        if self.Y is not None:
            ok = ok and bool(np.all(np.isfinite(self.Y)))
        return ok


@dataclass
class Trace:
    """Per-round metrics of one run.

    ``metrics[k]`` describes the state after ``k + 1`` completed rounds;
    ``initial`` the state before the first round.
    """

    algo: AlgoConfig
    seed: int
    metrics: list = field(default_factory=list)
    initial: object = None
    diverged: bool = False
    wall_time: float = 0.0
    fingerprint: str = ""
    run_id: str = ""


def init_state(
    prob: QuadraticProblem, config: AlgoConfig, W: WeightMatrix, X0: np.ndarray | None = None
) -> NetworkState:
    """Draw ``X_0`` and, for tracking, set ``Y_0`` to the step-0 gradient samples."""
    if W.n != prob.n:
        raise ValueError(f"weight matrix has {W.n} nodes but problem has {prob.n}")
    X = initial_point(prob) if X0 is None else np.array(X0, dtype=float)
    if X.shape != (prob.n, prob.p):
        raise ValueError(f"X0 shape {X.shape} does not match ({prob.n}, {prob.p})")
    state = NetworkState(X)
    if config.tracking:
        state.lastG = prob.noisy_gradients(X, 0)
        state.Y = state.lastG.copy()
    return state


def local_phase(
    state: NetworkState, prob: QuadraticProblem, config: AlgoConfig, on_step: StepHook | None = None
) -> NetworkState:
    """Run ``d2`` local updates in place."""
    gamma = config.gamma
    state.period_X = [state.X]
    state.period_Y = []
    n = prob.n
    for _ in range(config.d2):
        if config.tracking:
            state.period_Y.append(state.Y)
            state.X = state.X - gamma * state.Y
            state.step += 1
            G = prob.noisy_gradients(state.X, state.step)
            state.Y = state.Y + G - state.lastG
            state.lastG = G
        else:
            G = prob.noisy_gradients(state.X, state.step)
            state.X = state.X - gamma * G
            state.step += 1
        state.grad_evals += n
        state.period_X.append(state.X)
        if on_step is not None:
            on_step(state, "local")
    return state


def communication_phase(
    state: NetworkState, W: WeightMatrix, config: AlgoConfig, on_step: StepHook | None = None
) -> NetworkState:
    """Run ``d1`` gossip sweeps on ``X`` (and ``Y``) in place; cached gradients stay local."""
    w = W.entries
    for _ in range(config.d1):
        state.X = w @ state.X
        if config.tracking:
            state.Y = w @ state.Y
        state.comm_steps += 1
        if on_step is not None:
            on_step(state, "gossip")
    return state


def run_round(
    state: NetworkState,
    prob: QuadraticProblem,
    config: AlgoConfig,
    W: WeightMatrix,
    on_step: StepHook | None = None,
) -> NetworkState:
    local_phase(state, prob, config, on_step)
    communication_phase(state, W, config, on_step)
    state.round += 1
    return state


MetricsHook = Callable[[NetworkState], object]


def run(
    prob: QuadraticProblem,
    config: AlgoConfig,
    W: WeightMatrix,
    metrics_hook: MetricsHook | None = None,
    *,
    X0: np.ndarray | None = None,
    on_step: StepHook | None = None,
) -> Trace:
    """Initialize and run ``config.rounds`` rounds, recording metrics after each.

    ``metrics_hook(state)`` is called once before the first round and after
    every round; by default it is :func:`flexgt.analysis.measure_round` with
    theory parameters derived from ``prob`` and ``W``. A non-finite state
    stops the run and sets ``diverged``.
    """
    if config.rounds < 1:
        raise ValueError("rounds must be >= 1")
    if metrics_hook is None:
        from .analysis import default_metrics_hook

        metrics_hook = default_metrics_hook(prob, config, W)
    t0 = time.perf_counter()
    trace = Trace(config, prob.seed)
    with np.errstate(over="ignore", invalid="ignore"):
        state = init_state(prob, config, W, X0)
        trace.initial = metrics_hook(state)
        for _ in range(config.rounds):
            run_round(state, prob, config, W, on_step)
            if not state.is_finite():
                trace.diverged = True
                break
            m = metrics_hook(state)
            if not np.isfinite(getattr(m, "lyapunov", 0.0)):
                trace.diverged = True
                break
            trace.metrics.append(m)
    trace.wall_time = time.perf_counter() - t0
    return trace
