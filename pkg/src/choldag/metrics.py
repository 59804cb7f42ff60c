"""Structure-recovery scoring: SHD, confusion-derived rates, F1, and the
best SHD over latent relabelings (recovery is only identifiable up to a
re-indexing of the latent variables).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .graph import WeightedDag

_MAX_LATENT_ENUM = 4


def _support(g) -> np.ndarray:
    if isinstance(g, WeightedDag):
        return g.support()
    g = np.asarray(g)
    return g != 0


@dataclass(frozen=True)
class StructureScore:
    shd: int
    tpr: float
    fdr: float
    fpr: float
    precision: float
    f1: float
    predicted_edges: int

    def as_dict(self) -> dict:
        return {
            "shd": self.shd,
            "tpr": self.tpr,
            "fdr": self.fdr,
            "fpr": self.fpr,
            "precision": self.precision,
            "f1": self.f1,
            "predicted_edges": self.predicted_edges,
        }


def shd(pred, truth, reversal_as_one: bool = True) -> int:
    """Structural Hamming distance between edge supports.

    Counts additions + deletions + reversals, with a reversal costing one
    edit by default (set reversal_as_one=False to count it as two, i.e.
    plain directed-Hamming distance).
    """
    a = _support(pred)
    b = _support(truth)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a != b
    if not reversal_as_one:
        return int(diff.sum())
    reversals = a & ~b & b.T & ~a.T
    return int(diff.sum() - (reversals | reversals.T).sum() // 2)


def max_weight_error(pred, truth) -> float:
    """Largest absolute weight deviation (debug metric)."""
    a = np.asarray(pred.weights if isinstance(pred, WeightedDag) else pred, dtype=float)
    b = np.asarray(truth.weights if isinstance(truth, WeightedDag) else truth, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).max()) if a.size else 0.0


def confusion_scores(pred, truth) -> StructureScore:
    """Directed-edge confusion rates over ordered node pairs.

    TPR = TP/T, FDR = FP/(TP+FP), FPR = FP/F with F the ordered non-edges
    of the truth, precision = TP/(TP+FP), F1 harmonic.  Zero denominators
    yield 0 by convention.
    """
    a = _support(pred)
    b = _support(truth)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    p = a.shape[0]
    tp = int((a & b).sum())
    fp = int((a & ~b).sum())
    n_true = int(b.sum())
    n_pred = tp + fp
    n_nonedge = p * (p - 1) - n_true

    def ratio(num, den):
        return num / den if den else 0.0

    tpr = ratio(tp, n_true)
    fdr = ratio(fp, n_pred)
    fpr = ratio(fp, n_nonedge)
    precision = ratio(tp, n_pred)
    f1 = ratio(2.0 * precision * tpr, precision + tpr)
    return StructureScore(
        shd=shd(a, b),
        tpr=tpr,
        fdr=fdr,
        fpr=fpr,
        precision=precision,
        f1=f1,
        predicted_edges=n_pred,
    )


def best_shd_over_latent_relabeling(pred, truth, latent_pred, latent_true) -> int:
    """Minimum SHD over bijections between predicted and true latent nodes.

    Non-latent nodes must carry the same labels in both graphs.  When the
    latent counts differ, the smaller side is padded with isolated dummy
    nodes, so every unmatched latent contributes its full edge count.
    """
    latent_pred = sorted(int(i) for i in latent_pred)
    latent_true = sorted(int(i) for i in latent_true)
    if max(len(latent_pred), len(latent_true)) > _MAX_LATENT_ENUM:
        raise ValueError(f"too many latents for enumeration (> {_MAX_LATENT_ENUM})")
    a = _support(pred)
    b = _support(truth)
    obs_pred = [i for i in range(a.shape[0]) if i not in set(latent_pred)]
    obs_true = [i for i in range(b.shape[0]) if i not in set(latent_true)]
    if obs_pred != obs_true:
        raise ValueError("observed node labels differ between prediction and truth")
    n_obs = len(obs_pred)
    L = max(len(latent_pred), len(latent_true))
    if L == 0:
        return shd(a, b)

    def embed(mat, latent):
        # observed nodes first, then that graph's latents, then isolated padding
        n = n_obs + L
        out = np.zeros((n, n), dtype=bool)
        order = obs_pred + list(latent)
        src = mat[np.ix_(order, order)]
        out[: src.shape[0], : src.shape[1]] = src
        return out

    A = embed(a, latent_pred)
    B = embed(b, latent_true)
    best = None
    slots = list(range(n_obs, n_obs + L))
    for perm in permutations(slots):
        relabel = list(range(n_obs)) + list(perm)
        candidate = np.zeros_like(A)
        candidate[np.ix_(relabel, relabel)] = A
        d = shd(candidate, B)
        best = d if best is None else min(best, d)
    return best
