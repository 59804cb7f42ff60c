"""Random graph generation, linear-SEM sampling and covariance construction.

All randomness is drawn from a single numpy Generator per call, in a fixed
documented order, so every output is bit-reproducible given (seed, params).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .graph import WeightedDag, topological_order

NOISE_FAMILIES = ("gaussian", "gumbel", "exponential")

# Var(Gumbel(0,1)) = pi^2/6, mean = Euler-Mascheroni constant.
_GUMBEL_STD = np.pi / np.sqrt(6.0)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family plus per-variable variances (A1: centered, finite)."""

    family: str
    variances: np.ndarray

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}; expected one of {NOISE_FAMILIES}")
        v = np.asarray(self.variances, dtype=float)
        if v.ndim != 1 or np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("variances must be a 1-d array of strictly positive finite values")
        object.__setattr__(self, "variances", v)

    @classmethod
    def equal(cls, family: str, p: int, sigma2: float = 1.0) -> "NoiseSpec":
        return cls(family, np.full(p, float(sigma2)))

    @property
    def p(self) -> int:
        return self.variances.shape[0]


@dataclass(frozen=True)
class CovMatrix:
    """Symmetric PD covariance with provenance."""

    values: np.ndarray
    source: str  # "population" or "empirical"
    gamma: float | None = None

    @property
    def p(self) -> int:
        return self.values.shape[0]


def as_matrix(sigma) -> np.ndarray:
    """Accept a CovMatrix or a plain array and return the ndarray."""
    if isinstance(sigma, CovMatrix):
        return sigma.values
    return np.asarray(sigma, dtype=float)


def gen_er(p: int, avg_edges_per_node: float, rng_seed: int) -> WeightedDag:
    """Erdos-Renyi DAG: random topological order, then each order-respecting
    pair is an edge independently with probability 2*avg/(p-1).

    Weights are set to the placeholder 1.0; call assign_weights afterwards.
    Draw order: node permutation, then the p(p-1)/2 pair uniforms.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(p)
    w = np.zeros((p, p))
    if p > 1:
        prob = min(max(2.0 * avg_edges_per_node / (p - 1), 0.0), 1.0)
        mask = np.triu(rng.random((p, p)) < prob, k=1)
        src, dst = np.nonzero(mask)
        w[order[src], order[dst]] = 1.0
    return WeightedDag(w)


def gen_sf(p: int, avg_edges_per_node: int, rng_seed: int) -> WeightedDag:
    """Scale-free DAG by preferential attachment.

    Node j (in attachment order) attaches min(j, m) out-edges toward
    distinct existing nodes chosen with probability proportional to
    degree + 1, so edges always point from newer to older and the result
    is acyclic by construction (high-degree early nodes end up as
    children, the standard attachment convention).  Total edge count is
    exactly m*(p-m) + m*(m-1)/2.
    """
    m = int(avg_edges_per_node)
    if not (1 <= m < p):
        raise ValueError(f"need p > avg_edges_per_node >= 1, got p={p}, m={m}")
    rng = np.random.default_rng(rng_seed)
    degree = np.zeros(p)
    w = np.zeros((p, p))
    for j in range(1, p):
        k = min(j, m)
        weights = degree[:j] + 1.0
        targets = []
        for _ in range(k):
            probs = weights / weights.sum()
            t = int(rng.choice(j, p=probs))
            targets.append(t)
            weights[t] = 0.0
        for t in targets:
            w[j, t] = 1.0  # newer node is the parent
            degree[t] += 1
        degree[j] += k
    return WeightedDag(w)


def assign_weights(
    dag: WeightedDag, low: float, high: float, rng_seed: int, positive: bool = False
) -> WeightedDag:
    """Draw each edge weight uniformly from +-[low, high], sign by fair coin.

    With positive=True all signs are +1 (the latent-experiment convention).
    Edges are enumerated in row-major order; magnitudes are drawn first,
    then signs.
    """
    if not (0 < low <= high):
        raise ValueError(f"invalid weight range [{low}, {high}]")
    rng = np.random.default_rng(rng_seed)
    src, dst = np.nonzero(dag.weights)
    mags = rng.uniform(low, high, size=src.size)
    signs = np.ones(src.size) if positive else rng.choice([-1.0, 1.0], size=src.size)
    w = np.zeros_like(dag.weights)
    w[src, dst] = mags * signs
    return WeightedDag(w)


def _draw_noise(noise: NoiseSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """n x p noise block, standardized to mean 0 and variance sigma_i^2."""
    p = noise.p
    std = np.sqrt(noise.variances)
    if noise.family == "gaussian":
        return rng.standard_normal((n, p)) * std
    if noise.family == "gumbel":
        raw = rng.gumbel(0.0, 1.0, size=(n, p))
        return (raw - np.euler_gamma) / _GUMBEL_STD * std
    raw = rng.exponential(1.0, size=(n, p))
    return (raw - 1.0) * std


def sample_sem(dag: WeightedDag, noise: NoiseSpec, n: int, rng_seed: int) -> np.ndarray:
    """Sample n rows of the linear SEM X = X W + N.

    Columns are filled in topological order so that X (I - W) = N holds
    exactly on the generated sample.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if noise.p != dag.p:
        raise ValueError("noise spec and graph disagree on p")
    order = topological_order(dag)
    rng = np.random.default_rng(rng_seed)
    N = _draw_noise(noise, n, rng)
    X = np.zeros((n, dag.p))
    for i in order:
        parents = np.flatnonzero(dag.weights[:, i])
        if parents.size:
            X[:, i] = X[:, parents] @ dag.weights[parents, i] + N[:, i]
        else:
            X[:, i] = N[:, i]
    return X


def population_covariance(dag: WeightedDag, noise: NoiseSpec) -> CovMatrix:
    """Exact model covariance (I-W)^{-T} Sigma_nn (I-W)^{-1}.

    Computed by two triangular solves in a topologically permuted basis,
    then permuted back to the original variable order.
    """
    if noise.p != dag.p:
        raise ValueError("noise spec and graph disagree on p")
    order = topological_order(dag)
    p = dag.p
    T = dag.weights[np.ix_(order, order)]
    A = np.eye(p) - T  # unit upper triangular
    snn = np.diag(noise.variances[order])
    Z = solve_triangular(A, snn, trans="T", lower=False)       # A^{-T} Snn
    S = solve_triangular(A, Z.T, trans="T", lower=False).T     # ... A^{-1}
    S = (S + S.T) / 2.0
    out = np.empty((p, p))
    out[np.ix_(order, order)] = S
    return CovMatrix(out, source="population")


def empirical_covariance(X: np.ndarray, gamma: float, center: bool = True) -> CovMatrix:
    """Augmented empirical covariance (1/n) X^T X + gamma*log(p)/n * I.

    Columns are mean-centered first unless center=False.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be an n x p matrix")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    n, p = X.shape
    if center:
        X = X - X.mean(axis=0, keepdims=True)
    C = (X.T @ X) / n
    C = (C + C.T) / 2.0
    lam = gamma * np.log(p) / n
    C[np.diag_indices(p)] += lam
    return CovMatrix(C, source="empirical", gamma=float(gamma))
