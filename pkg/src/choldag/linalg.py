"""Dense triangular kernels: incremental Cholesky columns, inverse extension,
full factorization and rank-1 factor updates.

All factors are stored as upper-triangular ndarrays with strictly positive
diagonals; everything below the diagonal is exactly zero.  Functions are pure:
inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular


class NonPositiveDefiniteError(ValueError):
    """The (augmented) covariance matrix is not positive definite."""


def tri_solve_transposed(U: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Solve U^T beta = s by forward substitution for upper-triangular U.

    Parameters
    ----------
    U : (k, k) upper-triangular matrix with strictly positive diagonal.
    s : (k,) right-hand side.

    Returns
    -------
    beta : (k,) solution vector.
    """
    U = np.asarray(U, dtype=float)
    s = np.asarray(s, dtype=float)
    k = U.shape[0]
    if U.shape != (k, k) or s.shape != (k,):
        raise ValueError(f"dimension mismatch: U {U.shape}, s {s.shape}")
    if k == 0:
        return np.zeros(0)
    if np.any(np.diag(U) == 0.0):
        raise ZeroDivisionError("triangular solve with zero diagonal entry")
    return solve_triangular(U, s, trans="T", lower=False)


def full_cholesky(M: np.ndarray) -> np.ndarray:
    """Upper-triangular U with U^T U = M for symmetric positive-definite M."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefiniteError(str(exc)) from exc
    return L.T.copy()


def inverse_extend(factor_inv: np.ndarray, alpha: float, beta: np.ndarray) -> np.ndarray:
    """Extend a triangular inverse by one column.

    Given U_{k-1}^{-1} and the new column (beta, alpha) of U_k, returns
    U_k^{-1} = [[U_{k-1}^{-1}, -(1/alpha) U_{k-1}^{-1} beta], [0, 1/alpha]].
    """
    if alpha <= 0:
        raise NonPositiveDefiniteError(f"non-positive diagonal entry alpha={alpha}")
    factor_inv = np.asarray(factor_inv, dtype=float)
    beta = np.asarray(beta, dtype=float)
    k = factor_inv.shape[0]
    if beta.shape != (k,):
        raise ValueError(f"dimension mismatch: inverse is {k}x{k}, beta has shape {beta.shape}")
    out = np.zeros((k + 1, k + 1))
    out[:k, :k] = factor_inv
    if k:
        out[:k, k] = -(factor_inv @ beta) / alpha
    out[k, k] = 1.0 / alpha
    return out


def rank1_update(U: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Return the Cholesky factor of U^T U + v v^T.

    Classical update sweep: one plane rotation per row, numerically stable
    for positive updates (no downdating here).
    """
    U = np.array(U, dtype=float)
    v = np.array(v, dtype=float)
    n = U.shape[0]
    if v.shape != (n,):
        raise ValueError(f"dimension mismatch: U is {n}x{n}, v has shape {v.shape}")
    for k in range(n):
        r = np.hypot(U[k, k], v[k])
        c = r / U[k, k]
        s = v[k] / U[k, k]
        U[k, k] = r
        if k + 1 < n:
            U[k, k + 1:] = (U[k, k + 1:] + s * v[k + 1:]) / c
            v[k + 1:] = c * v[k + 1:] - s * U[k, k + 1:]
    return U


@dataclass(frozen=True)
class CholState:
    """Growing pivoted-factorization state.

    ordering holds original variable indices in pivot order; factor is the
    upper-triangular factor of the covariance restricted to `ordering`,
    factor_inv its inverse, alphas its diagonal.
    """

    ordering: tuple[int, ...]
    factor: np.ndarray
    factor_inv: np.ndarray
    alphas: np.ndarray

    @classmethod
    def empty(cls) -> "CholState":
        return cls((), np.zeros((0, 0)), np.zeros((0, 0)), np.zeros(0))

    @property
    def k(self) -> int:
        return len(self.ordering)

    def extended(self, index: int, alpha: float, beta: np.ndarray) -> "CholState":
        """Return the state grown by one pivot (pure, no mutation)."""
        k = self.k
        factor = np.zeros((k + 1, k + 1))
        factor[:k, :k] = self.factor
        factor[:k, k] = beta
        factor[k, k] = alpha
        return CholState(
            ordering=self.ordering + (index,),
            factor=factor,
            factor_inv=inverse_extend(self.factor_inv, alpha, beta),
            alphas=np.append(self.alphas, alpha),
        )


def cholesky_extend(state: CholState, sigma_col: np.ndarray, sigma_diag: float) -> tuple[float, np.ndarray]:
    """Evaluate the new factor column for one candidate variable.

    sigma_col holds the covariances between the candidate and the already
    pivoted variables (in ordering order), sigma_diag its variance.  Returns
    (alpha, beta) with beta = U^{-T} sigma_col and
    alpha = sqrt(sigma_diag - ||beta||^2).  The state is not modified.
    """
    sigma_col = np.asarray(sigma_col, dtype=float)
    if sigma_col.shape != (state.k,):
        raise ValueError(
            f"dimension mismatch: state has {state.k} pivots, sigma_col has shape {sigma_col.shape}"
        )
    beta = tri_solve_transposed(state.factor, sigma_col)
    rad = sigma_diag - float(beta @ beta)
    if rad <= 0.0:
        raise NonPositiveDefiniteError(
            f"conditional variance {rad} is not positive; the covariance matrix is not "
            "positive definite (use diagonal augmentation gamma > 0)"
        )
    return float(np.sqrt(rad)), beta
