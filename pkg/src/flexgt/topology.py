"""Communication graphs and their doubly stochastic mixing matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import networkx as nx
import numpy as np

__all__ = [
    "TopologySpec",
    "WeightMatrix",
    "TopologyError",
    "build_weight_matrix",
    "spectral_radius_sq",
    "mix",
    "DEFAULT_OFFSETS",
]

DEFAULT_OFFSETS = (1, 2, 4, 8, 16)
STOCHASTIC_TOL = 1e-12

Kind = Literal["complete", "ring", "exponential", "custom"]


class TopologyError(ValueError):
    """Raised for invalid topology specs or weight matrices."""


@dataclass(frozen=True)
class TopologySpec:
    """Undirected communication graph description.

    ``offsets`` applies to the exponential kind only (node ``i`` links to
    ``(i + o) % n``); ``edges`` to the custom kind only.
    """

    kind: Kind
    n: int
    offsets: tuple[int, ...] | None = None
    edges: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("complete", "ring", "exponential", "custom"):
            raise TopologyError(f"kind: unknown topology kind {self.kind!r}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise TopologyError(f"n: need an integer >= 2, got {self.n!r}")
        if self.offsets is not None:
            if self.kind != "exponential":
                raise TopologyError("offsets: only valid for the exponential kind")
            offsets = tuple(int(o) for o in self.offsets)
            if len(set(offsets)) != len(offsets):
                raise TopologyError(f"offsets: duplicates in {offsets}")
            if any(o < 1 or o >= self.n for o in offsets):
                raise TopologyError(f"offsets: each offset must lie in [1, {self.n})")
            object.__setattr__(self, "offsets", offsets)
        if self.edges is not None:
            if self.kind != "custom":
                raise TopologyError("edges: only valid for the custom kind")
            edges = tuple((int(a), int(b)) for a, b in self.edges)
            for a, b in edges:
                if not (0 <= a < self.n and 0 <= b < self.n):
                    raise TopologyError(f"edges: endpoint of ({a}, {b}) outside [0, {self.n})")
                if a == b:
                    raise TopologyError(f"edges: self-loop at node {a}")
            object.__setattr__(self, "edges", edges)
        elif self.kind == "custom":
            raise TopologyError("edges: required for the custom kind")

    def resolved_offsets(self) -> tuple[int, ...]:
        if self.offsets is not None:
            return self.offsets
        return tuple(o for o in DEFAULT_OFFSETS if o < self.n)

    def graph(self) -> nx.Graph:
        n = self.n
        if self.kind == "complete":
            g = nx.complete_graph(n)
        elif self.kind == "ring":
            g = nx.cycle_graph(n)
        elif self.kind == "exponential":
            g = nx.empty_graph(n)
            g.add_edges_from((i, (i + o) % n) for i in range(n) for o in self.resolved_offsets())
        else:
            g = nx.empty_graph(n)
            g.add_edges_from(self.edges)
        return g


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Symmetric doubly stochastic mixing matrix.

    Attributes:
        entries: n x n weights, read-only.
        rho: ``||W - J||_2^2`` with ``J = 11^T / n``.
    """

    entries: np.ndarray
    rho: float = field(init=False)

    def __post_init__(self):
        w = np.array(self.entries, dtype=float)
        _check_doubly_stochastic(w)
        w.setflags(write=False)
        object.__setattr__(self, "entries", w)
        object.__setattr__(self, "rho", _rho(w))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _check_doubly_stochastic(w: np.ndarray) -> None:
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise TopologyError(f"weight matrix must be square, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise TopologyError("weight matrix must have finite nonnegative entries")
    if not np.array_equal(w, w.T):
        raise TopologyError("weight matrix must be symmetric")
    if np.max(np.abs(w.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
        raise TopologyError("weight matrix rows must sum to 1")
    if np.max(np.abs(w.sum(axis=0) - 1.0)) > STOCHASTIC_TOL:
        raise TopologyError("weight matrix columns must sum to 1")


def _rho(w: np.ndarray) -> float:
    n = w.shape[0]
    # eigenvalues of W - J: the consensus eigenvalue 1 is shifted to 0
    lam = np.linalg.eigvalsh(w - np.full((n, n), 1.0 / n))
    return float(min(np.max(lam**2), 1.0))


def build_weight_matrix(spec: TopologySpec) -> WeightMatrix:
    """Metropolis weights ``1 / (1 + max(deg_i, deg_j))`` on the graph of ``spec``."""
    g = spec.graph()
    if not nx.is_connected(g):
        raise TopologyError("disconnected topology")
    n = spec.n
    deg = np.array([g.degree(i) for i in range(n)])
    w = np.zeros((n, n))
    for i, j in g.edges():
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    for i in range(n):
        w[i, i] = 1.0 - (w[i].sum() - w[i, i])
    return WeightMatrix(w)


def spectral_radius_sq(w: WeightMatrix | np.ndarray) -> float:
    """Largest squared non-principal eigenvalue of a symmetric doubly stochastic matrix."""
    if isinstance(w, WeightMatrix):
        return w.rho
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or not np.allclose(w, w.T, rtol=0, atol=1e-12):
        raise TopologyError("spectral_radius_sq needs a symmetric square matrix")
    return _rho(0.5 * (w + w.T))


def mix(w: WeightMatrix | np.ndarray, z: np.ndarray, d1: int = 1) -> np.ndarray:
    """Apply ``d1`` successive gossip sweeps, returning ``W^d1 Z``."""
    entries = w.entries if isinstance(w, WeightMatrix) else np.asarray(w)
    z = np.asarray(z, dtype=float)
    if d1 < 1:
        raise ValueError(f"d1 must be >= 1, got {d1}")
    if z.shape[0] != entries.shape[0]:
        raise ValueError(f"row count {z.shape[0]} does not match {entries.shape[0]} nodes")
    for _ in range(d1):
        z = entries @ z
    return z
