import numpy as np
import pytest

from choldag import assign_weights, gen_er
from choldag.graph import layer_decomposition


def random_pd(rng: np.random.Generator, p: int, shift: float | None = None) -> np.ndarray:
    """Random symmetric positive-definite matrix with a comfortable margin."""
    A = rng.normal(size=(p, p))
    return A @ A.T + (p if shift is None else shift) * np.eye(p)


def random_dag(rng: np.random.Generator, p: int, epn: float = 2.0):
    dag = gen_er(p, epn, int(rng.integers(2**31)))
    return assign_weights(dag, 0.5, 2.0, int(rng.integers(2**31)))


def layered_variances(dag, step: float = 0.3) -> np.ndarray:
    """Noise variances increasing by `step` per layer, guaranteeing the
    cross-layer variance gap (and hence delta) is at least `step`."""
    out = np.empty(dag.p)
    for li, layer in enumerate(layer_decomposition(dag).layers):
        for node in layer:
            out[node] = 1.0 + step * li
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
