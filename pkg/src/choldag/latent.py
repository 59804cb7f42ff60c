"""Latent-variable recovery under equal error variance.

A latent parent inflates the conditional variance of its children, which
shows up as an anomalously small diagonal entry of the inverse Cholesky
factor.  Each detected anomaly inserts one hidden variable into the
ordering; its links are fitted by matching the implied covariance to the
observed block under an l1 penalty, and the augmented covariance grows by
one row/column.  The loop repeats until the inverse-factor diagonal is flat.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .cdcf import CdcfConfig, RecoveryResult, cdcf, extract_adjacency
from .simulate import as_matrix


@dataclass(frozen=True)
class OptimizerConfig:
    """Adam with exponential learning-rate decay."""

    learning_rate: float = 0.05
    decay_factor: float = 0.99
    decay_every: int = 100
    max_steps: int = 10000
    loss_tol: float = 0.005     # stop once the penalized objective drops below
    s_init: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass(frozen=True)
class LatentConfig:
    sigma_hat: float
    zeta: float = 0.1
    mu: float = 0.05
    max_latent: int = 2
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    round_threshold: float = 0.4

    def __post_init__(self):
        if self.sigma_hat <= 0:
            raise ValueError("sigma_hat must be > 0")
        if not (0 < self.zeta < 1):
            raise ValueError("zeta must lie in (0, 1)")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.max_latent < 0:
            raise ValueError("max_latent must be >= 0")


@dataclass
class LatentOptState:
    """Final state of one penalized covariance fit."""

    S: np.ndarray           # strictly upper triangular
    loss_fit: float
    loss_l1: float
    step: int
    lr: float


@dataclass
class LatentRecoveryResult:
    ordering: np.ndarray            # over observed + inserted latent labels
    factor_inv: np.ndarray
    alphas: np.ndarray
    latent_positions: list[int]     # insertion position in the ordering, per latent
    adjacency: np.ndarray           # rounded, over observed + latent labels
    augmented_cov: np.ndarray
    num_observed: int
    traces: list[LatentOptState]
    hit_max_latent: bool

    @property
    def latent_labels(self) -> list[int]:
        return list(range(self.num_observed, self.augmented_cov.shape[0]))


def estimate_noise_std(sigma) -> float:
    """Noise std estimate under equal error variance: the smallest observed
    variance (the sample variance of a root node)."""
    d = as_matrix(sigma).diagonal()
    return float(np.sqrt(d.min()))


def detect_latent_position(factor_inv: np.ndarray, sigma_hat: float, zeta: float):
    """Position of the smallest inverse-factor diagonal entry, if it falls
    strictly below (1 - zeta)/sigma_hat; None otherwise."""
    d = np.diag(factor_inv)
    i = int(np.argmin(d))
    if d[i] < (1.0 - zeta) / sigma_hat:
        return i
    return None


def _strict_upper_mask(q: int) -> np.ndarray:
    return np.triu(np.ones((q, q), dtype=bool), k=1)


def build_cs(S: np.ndarray, sigma_hat: float) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky factor U(S) = sigma_hat (I - S)^{-1} and C(S) = U^T U.

    S must be strictly upper triangular; I - S is unit triangular, so every
    diagonal entry of U(S) equals sigma_hat.
    """
    S = np.asarray(S, dtype=float)
    q = S.shape[0]
    if np.any(np.tril(S) != 0):
        raise ValueError("S must be strictly upper triangular")
    if q == 0:
        return np.zeros((0, 0)), np.zeros((0, 0))
    U = sigma_hat * solve_triangular(np.eye(q) - S, np.eye(q), lower=False)
    return U, U.T @ U


def _loss_parts_and_grad(S, sigma_tilde, obs_in_c, obs_in_sigma, mu, sigma_hat):
    """(fit, l1, gradient) of the penalized objective in one pass.

    fit = ||C(S)_obs - Sigma_obs||_F^2, l1 = mu * sum|S|.  The fit gradient
    is (4 / sigma_hat) * U^T U R U^T restricted to the strict upper triangle,
    with R the residual embedded at the observed positions; the l1 term
    contributes mu * sign(S) with subgradient 0 at zero entries.
    """
    q = S.shape[0]
    U, C = build_cs(S, sigma_hat)
    resid = C[np.ix_(obs_in_c, obs_in_c)] - sigma_tilde[np.ix_(obs_in_sigma, obs_in_sigma)]
    fit = float((resid * resid).sum())
    l1 = mu * float(np.abs(S).sum())
    R = np.zeros((q, q))
    R[np.ix_(obs_in_c, obs_in_c)] = resid
    grad = (4.0 / sigma_hat) * (U.T @ (U @ R) @ U.T)
    grad = np.where(_strict_upper_mask(q), grad, 0.0)
    grad += mu * np.sign(S)
    return fit, l1, grad


def latent_loss(S, sigma_tilde, obs_in_c, obs_in_sigma, mu: float, sigma_hat: float) -> float:
    """Penalized covariance-matching objective (fit + mu * ||S||_1)."""
    sigma_tilde = as_matrix(sigma_tilde)
    if len(obs_in_c) != len(obs_in_sigma):
        raise ValueError("observed index sets must have equal size")
    _, C = build_cs(S, sigma_hat)
    resid = C[np.ix_(obs_in_c, obs_in_c)] - sigma_tilde[np.ix_(obs_in_sigma, obs_in_sigma)]
    return float((resid * resid).sum()) + mu * float(np.abs(S).sum())


def latent_loss_grad(S, sigma_tilde, obs_in_c, obs_in_sigma, mu: float, sigma_hat: float) -> np.ndarray:
    """Subgradient of latent_loss with respect to the strict upper triangle."""
    sigma_tilde = as_matrix(sigma_tilde)
    if len(obs_in_c) != len(obs_in_sigma):
        raise ValueError("observed index sets must have equal size")
    S = np.asarray(S, dtype=float)
    _, _, grad = _loss_parts_and_grad(S, sigma_tilde, obs_in_c, obs_in_sigma, mu, sigma_hat)
    return grad


def solve_latent(
    S0: np.ndarray,
    sigma_tilde,
    obs_in_c,
    obs_in_sigma,
    config: LatentConfig,
) -> LatentOptState:
    """Minimize the penalized objective by Adam with exponential lr decay.

    Stops once the objective (fit plus l1 penalty) drops below loss_tol or
    after max_steps gradient steps.  A fit-only stop would freeze the
    iterate on the fit-solution manifold before the l1 term has pulled it
    to the sparse corner, so the penalty counts toward the threshold.
    Non-convergence is reported in the returned state, not raised.
    """
    sigma_tilde = as_matrix(sigma_tilde)
    opt = config.optimizer
    q = S0.shape[0]
    mask = _strict_upper_mask(q)
    S = np.where(mask, np.asarray(S0, dtype=float), 0.0)
    m = np.zeros_like(S)
    v = np.zeros_like(S)
    lr = opt.learning_rate
    fit, l1, grad = _loss_parts_and_grad(S, sigma_tilde, obs_in_c, obs_in_sigma, config.mu, config.sigma_hat)
    step = 0
    while fit + l1 >= opt.loss_tol and step < opt.max_steps:
        step += 1
        m = opt.beta1 * m + (1.0 - opt.beta1) * grad
        v = opt.beta2 * v + (1.0 - opt.beta2) * grad * grad
        mhat = m / (1.0 - opt.beta1**step)
        vhat = v / (1.0 - opt.beta2**step)
        S = S - lr * mhat / (np.sqrt(vhat) + opt.eps)
        S = np.where(mask, S, 0.0)
        if step % opt.decay_every == 0:
            lr *= opt.decay_factor
        fit, l1, grad = _loss_parts_and_grad(S, sigma_tilde, obs_in_c, obs_in_sigma, config.mu, config.sigma_hat)
    return LatentOptState(S=S, loss_fit=fit, loss_l1=l1, step=step, lr=lr)


def covariance_update(sigma_tilde, C: np.ndarray, j: int, ordering=None) -> np.ndarray:
    """Append the fitted latent row/column of C to the covariance.

    C is laid out in factorization order with the latent at row/column j;
    d^2 = C[j, j] and the off-diagonal column provide the new last
    row/column.  When `ordering` (position -> variable label) is given, the
    column entries are scattered back to label order; otherwise positions
    are taken as labels directly.
    """
    sig = as_matrix(sigma_tilde)
    q_new = C.shape[0]
    if not (0 <= j < q_new):
        raise IndexError(f"latent position {j} out of range for size {q_new}")
    if q_new != sig.shape[0] + 1:
        raise ValueError("C must be one larger than the covariance it extends")
    z = np.empty(q_new - 1)
    if ordering is None:
        z[:j] = C[:j, j]
        z[j:] = C[j + 1:, j]
    else:
        ordering = np.asarray(ordering, dtype=int)
        for pos in range(q_new):
            if pos == j:
                continue
            z[ordering[pos]] = C[pos, j]
    out = np.empty((q_new, q_new))
    out[:-1, :-1] = sig
    out[:-1, -1] = z
    out[-1, :-1] = z
    out[-1, -1] = C[j, j]
    return out


def cdcf_plus(
    sigma_tilde,
    config: LatentConfig,
    cdcf_config: CdcfConfig | None = None,
) -> LatentRecoveryResult:
    """Recover a DAG over observed plus detected latent variables.

    Repeats: factorize with cdcf; if the smallest inverse-factor diagonal
    falls below (1 - zeta)/sigma_hat, insert a latent variable at that
    position, fit its links by solve_latent, append the implied row/column
    to the covariance, and loop.  Stops when the diagonal is flat or after
    max_latent insertions (a normal termination, flagged on the result).
    The final adjacency is extracted at the rounding threshold.
    """
    if cdcf_config is None:
        cdcf_config = CdcfConfig()
    sig = np.array(as_matrix(sigma_tilde), dtype=float)
    num_observed = sig.shape[0]
    positions: list[int] = []
    traces: list[LatentOptState] = []
    hit_max = False

    while True:
        res: RecoveryResult = cdcf(sig, cdcf_config)
        pos = detect_latent_position(res.factor_inv, config.sigma_hat, config.zeta)
        if pos is None:
            break
        if len(positions) >= config.max_latent:
            hit_max = True
            break
        q = sig.shape[0]
        new_label = q
        ordering_new = np.concatenate(
            [res.ordering[:pos], [new_label], res.ordering[pos:]]
        ).astype(int)
        # Fit blocks use only genuinely observed variables; rows of all
        # previously inserted latents are excluded alongside the new one.
        obs_in_c = [m for m in range(q + 1) if ordering_new[m] < num_observed]
        obs_in_sigma = [int(ordering_new[m]) for m in obs_in_c]
        S0 = np.where(_strict_upper_mask(q + 1), config.optimizer.s_init, 0.0)
        state = solve_latent(S0, sig, obs_in_c, obs_in_sigma, config)
        _, C = build_cs(state.S, config.sigma_hat)
        sig = covariance_update(sig, C, pos, ordering_new)
        positions.append(pos)
        traces.append(state)

    adjacency = extract_adjacency(
        res.factor_inv, res.alphas, res.ordering, config.round_threshold
    )
    return LatentRecoveryResult(
        ordering=res.ordering,
        factor_inv=res.factor_inv,
        alphas=res.alphas,
        latent_positions=positions,
        adjacency=adjacency,
        augmented_cov=sig,
        num_observed=num_observed,
        traces=traces,
        hit_max_latent=hit_max,
    )
