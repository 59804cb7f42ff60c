"""Independent brute-force and analytic verifiers.

These are deliberately separate code paths from the incremental kernels:
factorizations here go through numpy/scipy directly, gradients through
central differences, orderings through exhaustive enumeration.  Tests pit
the production code against them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.linalg import solve_triangular

from .simulate import as_matrix

_MAX_BRUTE_P = 8


def brute_force_order(sigma) -> np.ndarray:
    """Exhaustive minimum-conditional-variance ordering (p <= 8).

    Enumerates all p! orderings, Cholesky-factorizes each permuted matrix
    and returns the ordering whose squared-diagonal sequence is
    lexicographically minimal, ties broken by the index sequence.  This is
    the greedy variance criterion verified globally.
    """
    S = as_matrix(sigma)
    p = S.shape[0]
    if p > _MAX_BRUTE_P:
        raise ValueError(f"p={p} too large for exhaustive search (max {_MAX_BRUTE_P})")
    best_key = None
    best_perm = None
    for perm in permutations(range(p)):
        idx = np.array(perm)
        U = np.linalg.cholesky(S[np.ix_(idx, idx)]).T
        key = tuple(np.diag(U) ** 2)
        if best_key is None or (key, perm) < (best_key, best_perm):
            best_key, best_perm = key, perm
    return np.array(best_perm, dtype=int)


def finite_diff_grad(f, S: np.ndarray, h: float) -> np.ndarray:
    """Central finite differences of f over the strict upper triangle of S."""
    if h <= 0:
        raise ValueError("h must be > 0")
    S = np.asarray(S, dtype=float)
    q = S.shape[0]
    grad = np.zeros_like(S)
    for i in range(q):
        for j in range(i + 1, q):
            Sp = S.copy()
            Sm = S.copy()
            Sp[i, j] += h
            Sm[i, j] -= h
            grad[i, j] = (f(Sp) - f(Sm)) / (2.0 * h)
    return grad


@dataclass
class MarginalizationWitness:
    """A marginalization instance: the full covariance with a designated
    middle row/column, its Cholesky blocks, and the blocks of the
    factorization after that row/column is deleted."""

    sigma_plus: np.ndarray
    p1: int
    # blocks of sigma_plus
    x: np.ndarray
    y: np.ndarray
    d2: float
    # Cholesky blocks of sigma_plus
    U11: np.ndarray
    x_hat: np.ndarray
    U12: np.ndarray
    d_hat: float
    y_hat: np.ndarray
    U22_hat: np.ndarray
    v: np.ndarray
    w: np.ndarray
    # Cholesky blocks of the marginalized covariance
    U11_marg: np.ndarray
    U12_marg: np.ndarray
    U22: np.ndarray


def build_marginalization_witness(sigma_plus: np.ndarray, p1: int) -> MarginalizationWitness:
    """Factor a PD matrix, delete row/column p1, and refactor."""
    sigma_plus = np.asarray(sigma_plus, dtype=float)
    q = sigma_plus.shape[0]
    if not (0 <= p1 < q):
        raise ValueError("p1 out of range")
    Up = np.linalg.cholesky(sigma_plus).T
    U11 = Up[:p1, :p1]
    x_hat = Up[:p1, p1]
    U12 = Up[:p1, p1 + 1:]
    d_hat = Up[p1, p1]
    y_hat = Up[p1, p1 + 1:]
    U22_hat = Up[p1 + 1:, p1 + 1:]

    keep = [i for i in range(q) if i != p1]
    sigma = sigma_plus[np.ix_(keep, keep)]
    U = np.linalg.cholesky(sigma).T

    v = solve_triangular(U11, x_hat, lower=False) if p1 else np.zeros(0)
    w = (
        solve_triangular(U22_hat, y_hat, trans="T", lower=False)
        if y_hat.size
        else np.zeros(0)
    )
    return MarginalizationWitness(
        sigma_plus=sigma_plus,
        p1=p1,
        x=sigma_plus[:p1, p1],
        y=sigma_plus[p1 + 1:, p1],
        d2=float(sigma_plus[p1, p1]),
        U11=U11,
        x_hat=x_hat,
        U12=U12,
        d_hat=float(d_hat),
        y_hat=y_hat,
        U22_hat=U22_hat,
        v=v,
        w=w,
        U11_marg=U[:p1, :p1],
        U12_marg=U[:p1, p1:],
        U22=U[p1:, p1:],
    )


def verify_marginalization_identities(witness: MarginalizationWitness) -> tuple[float, float, float]:
    """Residuals of the three marginalization identities.

    (a) the leading blocks are untouched and U22^T U22 equals the rank-1
        update of U22_hat by y_hat;
    (b) U22^{-1} = U22_hat^{-1} L^{-1} with L^T L = I + w w^T;
    (c) [U22]_kk = sqrt((1+||w_{1:k}||^2)/(1+||w_{1:k-1}||^2)) [U22_hat]_kk.
    """
    wts = witness
    res_a = max(
        float(np.linalg.norm(wts.U11 - wts.U11_marg)),
        float(np.linalg.norm(wts.U12 - wts.U12_marg)),
        float(
            np.linalg.norm(
                wts.U22.T @ wts.U22
                - (wts.U22_hat.T @ wts.U22_hat + np.outer(wts.y_hat, wts.y_hat))
            )
        ),
    )

    p2 = wts.w.shape[0]
    if p2:
        L = np.linalg.cholesky(np.eye(p2) + np.outer(wts.w, wts.w)).T
        lhs = np.linalg.inv(wts.U22)
        rhs = np.linalg.inv(wts.U22_hat) @ np.linalg.inv(L)
        res_b = float(np.linalg.norm(lhs - rhs))
        csum = np.concatenate([[0.0], np.cumsum(wts.w**2)])
        growth = np.sqrt((1.0 + csum[1:]) / (1.0 + csum[:-1]))
        res_c = float(np.abs(np.diag(wts.U22) - growth * np.diag(wts.U22_hat)).max())
    else:
        res_b = 0.0
        res_c = 0.0
    return res_a, res_b, res_c


@dataclass
class PerturbationReport:
    eps_d: float
    eps_2: float
    diag_identity_violation: float  # max over i of |col-norm gap| - eps_d
    entry_bound: float
    entry_max_diff: float

    @property
    def diag_identity_holds(self) -> bool:
        return self.diag_identity_violation <= 1e-10

    @property
    def entry_bound_holds(self) -> bool:
        return self.entry_max_diff <= self.entry_bound + 1e-12

    @property
    def slack(self) -> float:
        return self.entry_bound - self.entry_max_diff


def verify_cholesky_perturbation(sigma, sigma_tilde) -> PerturbationReport:
    """Check the factorization perturbation bounds on a matrix pair.

    The squared column norms of the two factors differ by at most the
    largest diagonal perturbation (an identity, checked exactly), and the
    inverse-factor entries above the diagonal differ by at most
    ||Ut^{-1}||_{2,inf} ||U^{-T}||_{2,inf} sqrt(2 eps_2).
    """
    S = as_matrix(sigma)
    St = as_matrix(sigma_tilde)
    if S.shape != St.shape:
        raise ValueError("matrices must share a shape")
    eps_d = float(np.abs(np.diag(S) - np.diag(St)).max())
    eps_2 = float(np.linalg.norm(S - St, 2))
    U = np.linalg.cholesky(S).T
    Ut = np.linalg.cholesky(St).T
    col_gap = np.abs((U * U).sum(axis=0) - (Ut * Ut).sum(axis=0))
    diag_violation = float((col_gap - eps_d).max())

    Uinv = np.linalg.inv(U)
    Utinv = np.linalg.inv(Ut)
    row_norm_ut = float(np.linalg.norm(Utinv, axis=1).max())
    col_norm_u = float(np.linalg.norm(Uinv, axis=0).max())  # rows of U^{-T}
    bound = row_norm_ut * col_norm_u * np.sqrt(2.0 * eps_2)
    upper = np.triu(np.ones_like(S, dtype=bool), k=1)
    diff = np.abs(Uinv - Utinv)
    max_diff = float(diff[upper].max()) if upper.any() else 0.0
    return PerturbationReport(
        eps_d=eps_d,
        eps_2=eps_2,
        diag_identity_violation=diag_violation,
        entry_bound=float(bound),
        entry_max_diff=max_diff,
    )
