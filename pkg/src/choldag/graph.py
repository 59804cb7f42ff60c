"""Weighted DAG representation, layer decomposition and identifiability
diagnostics for the equal/ordered-variance recovery guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular


class CyclicGraphError(ValueError):
    """The directed graph induced by the nonzero weights contains a cycle."""


@dataclass(frozen=True)
class WeightedDag:
    """Weighted adjacency matrix; weights[i, j] is the weight of edge i -> j."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {w.shape}")
        object.__setattr__(self, "weights", w)

    @property
    def p(self) -> int:
        return self.weights.shape[0]

    @property
    def num_edges(self) -> int:
        return int(np.count_nonzero(self.weights))

    def support(self) -> np.ndarray:
        return self.weights != 0


@dataclass(frozen=True)
class LayerDecomposition:
    """Partition of nodes by iterated source removal, in layer order."""

    layers: tuple[tuple[int, ...], ...]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self.layers)

    @property
    def r(self) -> int:
        return len(self.layers)


def layer_decomposition(dag: WeightedDag) -> LayerDecomposition:
    """Peel off source nodes repeatedly; ties within a layer sort by index."""
    w = dag.support()
    p = dag.p
    alive = np.ones(p, dtype=bool)
    layers = []
    while alive.any():
        in_deg = (w[alive][:, alive]).sum(axis=0)
        nodes = np.flatnonzero(alive)
        sources = nodes[in_deg == 0]
        if sources.size == 0:
            raise CyclicGraphError("graph has no source node; it contains a cycle")
        layers.append(tuple(int(i) for i in sources))
        alive[sources] = False
    return LayerDecomposition(tuple(layers))


def topological_order(dag: WeightedDag) -> np.ndarray:
    """Layer-respecting topological order (layers concatenated, index-sorted).

    The permuted adjacency weights[order][:, order] is strictly upper
    triangular; raises CyclicGraphError otherwise.
    """
    layers = layer_decomposition(dag)
    return np.array([i for layer in layers.layers for i in layer], dtype=int)


def order_matches_layers(order, layers: LayerDecomposition) -> bool:
    """True iff `order` lists layer 1 (any internal order), then layer 2, etc."""
    order = list(order)
    pos = 0
    for layer in layers.layers:
        chunk = set(order[pos:pos + len(layer)])
        if chunk != set(layer):
            return False
        pos += len(layer)
    return pos == len(order)


@dataclass(frozen=True)
class IdentifiabilityReport:
    """Numerical diagnostics for the ordering/structure recovery conditions.

    delta: variance-gap minimum over layer-ordered position pairs (+inf when
    the graph has a single layer and the minimum ranges over an empty set).
    mu_coh: row-norm coherence of I - T times that of its transpose.
    rho: max_i sigma_i / min_i sigma_i^2.
    omega_min: smallest nonzero edge magnitude (+inf for edgeless graphs).
    max_var: largest marginal variance of the model.
    """

    delta: float
    mu_coh: float
    rho: float
    omega_min: float
    max_var: float
    order: np.ndarray = field(repr=False, default=None)


def identifiability_report(dag: WeightedDag, noise_vars) -> IdentifiabilityReport:
    noise_vars = np.asarray(noise_vars, dtype=float)
    if noise_vars.shape != (dag.p,):
        raise ValueError("noise_vars must have one entry per node")
    if np.any(noise_vars <= 0):
        raise ValueError("noise variances must be strictly positive")

    layers = layer_decomposition(dag)
    order = np.array([i for layer in layers.layers for i in layer], dtype=int)
    p = dag.p
    T = dag.weights[np.ix_(order, order)]
    sigma = np.sqrt(noise_vars[order])

    eye = np.eye(p)
    imt = eye - T
    # U = diag(sigma) (I - T)^{-1}; column norms give the marginal variances.
    U = sigma[:, None] * solve_triangular(imt, eye, lower=False)

    # Position ranges of each layer in the permuted order.
    starts = np.cumsum([0] + [len(layer) for layer in layers.layers])
    delta = np.inf
    for j in range(layers.r):
        for k in range(j + 1, layers.r):
            for s in range(starts[j], starts[j + 1]):
                for t in range(starts[k], starts[k + 1]):
                    gap = (
                        noise_vars[order[t]]
                        - noise_vars[order[s]]
                        + float(U[s:t, t] @ U[s:t, t])
                    )
                    delta = min(delta, gap)

    mu_coh = float(
        np.linalg.norm(imt, axis=1).max() * np.linalg.norm(imt.T, axis=1).max()
    )
    rho = float(np.sqrt(noise_vars).max() / noise_vars.min())
    nonzero = np.abs(T[T != 0])
    omega_min = float(nonzero.min()) if nonzero.size else np.inf
    max_var = float((U * U).sum(axis=0).max())
    return IdentifiabilityReport(
        delta=float(delta),
        mu_coh=mu_coh,
        rho=rho,
        omega_min=omega_min,
        max_var=max_var,
        order=order,
    )
