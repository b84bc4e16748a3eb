"""Experiment configuration: JSON schema, validation and resolution."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..analysis import TheoryParams, max_stepsize
from ..engine import AlgoConfig
from ..problem import QuadraticProblem, generate_problem
from ..topology import TopologyError, TopologySpec, WeightMatrix, build_weight_matrix

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResolvedExperiment",
    "load_config",
    "parse_config",
    "resolve",
    "paper_config",
    "algorithm_name",
]


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists every violation."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n" + "\n".join(f"  - {e}" for e in self.errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ProblemConfig(_Strict):
    n: int = Field(20, ge=2)
    p: int = Field(10, ge=1)
    mu: float = Field(0.1, ge=0)
    sigma: float = Field(0.1, ge=0)
    seed: int = 0


class TopologyConfig(_Strict):
    kind: Literal["complete", "ring", "exponential", "custom"] = "exponential"
    offsets: list[int] | None = None
    edges: list[tuple[int, int]] | None = None


class AlgorithmConfig(_Strict):
    variant: Literal["flexgt", "dfl"]
    d1: int = Field(1, ge=1)
    d2: int = Field(1, ge=1)


class StepsizeConfig(_Strict):
    """``paper_rule``: ``gamma = c (1 - rho^d1)^2 / (d2 L)`` with ``L`` a number or
    ``"computed"``; ``theory_max``: ``scale`` times the guaranteed-convergence
    bound; ``explicit``: ``gamma`` as given."""

    rule: Literal["explicit", "paper_rule", "theory_max"] = "paper_rule"
    gamma: float | None = Field(None, gt=0)
    c: float = Field(10.0, gt=0)
    L: Union[float, Literal["computed"]] = 1.0
    scale: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.rule == "explicit" and self.gamma is None:
            raise ValueError("explicit stepsize rule needs 'gamma'")
        if isinstance(self.L, float) and self.L <= 0:
            raise ValueError("L must be positive or 'computed'")
        return self


class WeightsConfig(_Strict):
    w1: float = Field(1.0, ge=0)
    w2: float = Field(1.0, ge=0)


class ExperimentConfig(_Strict):
    problem: ProblemConfig = ProblemConfig()
    topology: TopologyConfig = TopologyConfig()
    algorithms: list[AlgorithmConfig] = Field(min_length=1)
    stepsize: StepsizeConfig = StepsizeConfig()
    rounds: int = Field(1000, ge=1)
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    eps: float = Field(1e-5, gt=0)
    weights: WeightsConfig = WeightsConfig()
    output_dir: str = "out"
    # written by export_json for the reader's benefit; ignored on input
    derived: dict[str, Any] | None = None

    @model_validator(mode="after")
    def _check(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"seeds must be distinct, got {self.seeds}")
        return self

    def fingerprint(self) -> str:
        """Hash of every parameter that influences results."""
        payload = self.model_dump(mode="json", exclude={"derived", "output_dir"})
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        errors = []
        for err in exc.errors():
            loc = ".".join(str(part) for part in err["loc"]) or "<root>"
            errors.append(f"{loc}: {err['msg']}")
        raise ConfigError(errors) from None


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a JSON config; ``OSError`` propagates, malformed content raises :class:`ConfigError`."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: not valid JSON ({exc})"]) from None
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be an object"])
    return parse_config(data)


def algorithm_name(variant: str, d1: int, d2: int) -> str:
    if variant == "flexgt":
        if d1 == 1:
            return "DSGT" if d2 == 1 else f"LU-GT(d2={d2})"
        return f"FlexGT(d1={d1},d2={d2})"
    if d1 == 1 and d2 == 1:
        return "D-PSGD"
    return f"DFL(d1={d1},d2={d2})"


@dataclass
class ResolvedExperiment:
    """A config together with the objects and derived constants it implies."""

    config: ExperimentConfig
    problem: QuadraticProblem
    W: WeightMatrix

    @cached_property
    def L(self) -> float:
        return self.problem.constants()[1]

    @property
    def L_rule(self) -> float:
        """Smoothness constant entering the stepsize rule and the theory surface."""
        L = self.config.stepsize.L
        if self.config.stepsize.rule == "paper_rule" and L != "computed":
            return float(L)
        return self.L

    def theory_params(self, d1: int, d2: int, gamma: float = 0.0) -> TheoryParams:
        cfg = self.config
        return TheoryParams(
            mu=self.problem.mu,
            L=max(self.L_rule, self.problem.mu),
            rho=self.W.rho,
            d1=d1,
            d2=d2,
            gamma=gamma,
            sigma=self.problem.sigma,
            n=self.problem.n,
            eps=cfg.eps,
            w1=cfg.weights.w1,
            w2=cfg.weights.w2,
        )

    def gamma(self, d1: int, d2: int) -> float:
        step = self.config.stepsize
        if step.rule == "explicit":
            return float(step.gamma)
        if step.rule == "paper_rule":
            return step.c * (1.0 - self.W.rho**d1) ** 2 / (d2 * self.L_rule)
        tp = TheoryParams(mu=self.problem.mu, L=self.L, rho=self.W.rho, d1=d1, d2=d2)
        return step.scale * max_stepsize(tp)

    def algo(self, variant: str, d1: int, d2: int) -> AlgoConfig:
        return AlgoConfig(variant, d1, d2, self.gamma(d1, d2), self.config.rounds)

    def algos(self) -> list[AlgoConfig]:
        return [self.algo(a.variant, a.d1, a.d2) for a in self.config.algorithms]

    def derived(self) -> dict[str, Any]:
        return {
            "fingerprint": self.config.fingerprint(),
            "rho_W": self.W.rho,
            "L": self.L,
            "L_rule": self.L_rule,
            "gamma": [
                {"variant": a.variant, "d1": a.d1, "d2": a.d2, "gamma": a.gamma}
                for a in self.algos()
            ],
        }


def resolve(config: ExperimentConfig) -> ResolvedExperiment:
    pc, tc = config.problem, config.topology
    try:
        spec = TopologySpec(
            tc.kind,
            pc.n,
            None if tc.offsets is None else tuple(tc.offsets),
            None if tc.edges is None else tuple(tc.edges),
        )
        W = build_weight_matrix(spec)
    except TopologyError as exc:
        raise ConfigError([f"topology: {exc}"]) from None
    prob = generate_problem(pc.n, pc.p, pc.mu, pc.sigma, pc.seed)
    return ResolvedExperiment(config, prob, W)


def paper_config(**overrides) -> ExperimentConfig:
    """The synthetic setup of the trade-off and heterogeneity experiments.

    n = 20, p = 10, exponential graph, ``gamma = 10 (1 - rho^d1)^2 / d2``
    (``L = 1``), target accuracy 1e-5, FlexGT(3, 2) against DFL, DSGT and
    D-PSGD.
    """
    data = {
        "problem": {"n": 20, "p": 10, "mu": 0.1, "sigma": 0.1, "seed": 0},
        "topology": {"kind": "exponential"},
        "algorithms": [
            {"variant": "flexgt", "d1": 3, "d2": 2},
            {"variant": "dfl", "d1": 3, "d2": 2},
            {"variant": "flexgt", "d1": 1, "d2": 1},
            {"variant": "dfl", "d1": 1, "d2": 1},
        ],
        "stepsize": {"rule": "paper_rule", "c": 10.0, "L": 1.0},
        "rounds": 1000,
        "seeds": [0],
        "eps": 1e-5,
        "weights": {"w1": 1.0, "w2": 1.0},
    }
    data.update(overrides)
    return parse_config(data)

