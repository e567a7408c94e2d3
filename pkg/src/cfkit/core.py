"""Dense linear-algebra kernels for compute-and-forward rate computations.

Conventions: a receiver with N_r antennas observes Y = H X + Z where the rows
of X are the user signals, H is N_r x L, Z is unit-variance AWGN, and user
powers sit on the diagonal of P.  Everything downstream (rate regions, integer
search, decoders) consumes the effective-noise variances computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNBOUNDED = math.inf

_RANK_RTOL = 1e-10  # singular values below this fraction of the max count as zero


@dataclass(frozen=True)
class ChannelInstance:
    """Real channel matrix H (N_r x L) plus per-user powers P (length L)."""

    H: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=float, ndmin=2)
        P = np.array(self.P, dtype=float).ravel()
        if H.ndim != 2 or H.shape[0] < 1 or H.shape[1] < 1:
            raise ValueError("H must be a matrix with at least one row and column")
        if not np.all(np.isfinite(H)):
            raise ValueError("H must be finite-valued")
        if P.shape[0] != H.shape[1]:
            raise ValueError(f"power vector length {P.shape[0]} != user count {H.shape[1]}")
        if not np.all(np.isfinite(P)) or np.any(P < 0):
            raise ValueError("powers must be finite and nonnegative")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "P", P)
        H.setflags(write=False)
        P.setflags(write=False)

    @property
    def num_users(self) -> int:
        return self.H.shape[1]

    @property
    def num_antennas(self) -> int:
        return self.H.shape[0]

    def require_positive_powers(self):
        zeros = np.flatnonzero(self.P == 0)
        if zeros.size:
            raise ValueError(
                f"user {zeros[0] + 1} has zero power; strip zero-power users first")

    def P_matrix(self) -> np.ndarray:
        return np.diag(self.P)


@dataclass
class NoiseReport:
    """Effective-noise variance with the equalizers that achieve it."""

    variance: float
    b_opt: np.ndarray
    c_opt: np.ndarray | None = None
    projector: np.ndarray | None = None


def lattice_gram(ch: ChannelInstance) -> np.ndarray:
    """(P^-1 + H^T H)^-1, the Gram matrix of the effective channel lattice."""
    ch.require_positive_powers()
    H, P = ch.H, ch.P
    M = np.diag(1.0 / P) + H.T @ H
    try:
        gram = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise ValueError("P^-1 + H^T H is singular") from exc
    return 0.5 * (gram + gram.T)


def _gram_woodbury(ch: ChannelInstance) -> np.ndarray:
    H = ch.H
    P = ch.P_matrix()
    G = np.eye(ch.num_antennas) + H @ P @ H.T
    return P - P @ H.T @ np.linalg.solve(G, H @ P)


def effective_matrix(ch: ChannelInstance) -> np.ndarray:
    """Lower-triangular F with F^T F = (P^-1 + H^T H)^-1.

    The factor is not unique; callers must only rely on F^T F.  The direct
    inverse is cross-checked against the equivalent Woodbury expression
    P - P H^T (I + H P H^T)^-1 H P as a numerical guard.
    """
    gram = lattice_gram(ch)
    alt = _gram_woodbury(ch)
    scale = max(1.0, float(np.max(np.abs(gram))))
    if np.max(np.abs(gram - alt)) > 1e-8 * scale:
        raise ArithmeticError("inconsistent Gram matrix; input is too ill-conditioned")
    rev = slice(None, None, -1)
    chol = np.linalg.cholesky(gram[rev, rev])  # gram reversed = chol @ chol.T
    return chol.T[rev, rev]


def sigma_para_eval(ch: ChannelInstance, a, b) -> float:
    """Effective noise variance ||b||^2 + ||(b^T H - a^T) P^(1/2)||^2."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape[0] != ch.num_users:
        raise ValueError("coefficient vector length must match user count")
    if b.shape[0] != ch.num_antennas:
        raise ValueError("equalizer length must match antenna count")
    mismatch = b @ ch.H - a
    return float(b @ b + mismatch @ (ch.P * mismatch))


def sigma_para_opt(ch: ChannelInstance, a) -> NoiseReport:
    """MMSE equalizer b and minimal variance a^T (P^-1 + H^T H)^-1 a = ||F a||^2."""
    a = np.asarray(a, dtype=float).ravel()
    if a.shape[0] != ch.num_users:
        raise ValueError("coefficient vector length must match user count")
    F = effective_matrix(ch)
    H = ch.H
    P = ch.P_matrix()
    G = np.eye(ch.num_antennas) + H @ P @ H.T
    b_opt = np.linalg.solve(G, H @ P @ a)
    variance = float(np.sum((F @ a) ** 2))
    return NoiseReport(variance=variance, b_opt=b_opt)


def sigma_succ_eval(ch: ChannelInstance, a_m, A_prev, b, c) -> float:
    """Variance ||b||^2 + ||(b^T H + c^T A_prev - a_m^T) P^(1/2)||^2."""
    a_m = np.asarray(a_m, dtype=float).ravel()
    A_prev = np.atleast_2d(np.asarray(A_prev, dtype=float)) if np.size(A_prev) else \
        np.zeros((0, ch.num_users))
    b = np.asarray(b, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel() if np.size(c) else np.zeros(0)
    if A_prev.shape[0] != c.shape[0]:
        raise ValueError("c must have one entry per prior combination")
    if A_prev.shape[0] and A_prev.shape[1] != ch.num_users:
        raise ValueError("A_prev column count must match user count")
    if a_m.shape[0] != ch.num_users or b.shape[0] != ch.num_antennas:
        raise ValueError("dimension mismatch")
    mismatch = b @ ch.H - a_m
    if A_prev.shape[0]:
        mismatch = mismatch + c @ A_prev
    return float(b @ b + mismatch @ (ch.P * mismatch))


def _numeric_rank(mat: np.ndarray) -> int:
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > _RANK_RTOL * s[0]))


def sigma_succ_opt(ch: ChannelInstance, a_m, A_prev) -> NoiseReport:
    """MMSE (b, c) pair given exact prior combinations A_prev, plus variance.

    A_prev must have full row rank; callers drop dependent rows first.  The
    variance is ||N F a_m||^2 for the projector N onto the orthogonal
    complement of F A_prev^T.
    """
    a_m = np.asarray(a_m, dtype=float).ravel()
    A_prev = np.atleast_2d(np.asarray(A_prev, dtype=float)) if np.size(A_prev) else \
        np.zeros((0, ch.num_users))
    if A_prev.shape[0] == 0:
        rep = sigma_para_opt(ch, a_m)
        rep.c_opt = np.zeros(0)
        rep.projector = np.eye(ch.num_users)
        return rep
    if A_prev.shape[1] != ch.num_users or a_m.shape[0] != ch.num_users:
        raise ValueError("dimension mismatch")
    if _numeric_rank(A_prev) != A_prev.shape[0]:
        raise ValueError("A_prev must have full row rank (drop dependent rows)")
    F = effective_matrix(ch)
    # orthogonal projection onto span(F A_prev^T) via QR: much better
    # conditioned than forming A_prev (F^T F) A_prev^T explicitly
    Q, R = np.linalg.qr(F @ A_prev.T)
    Fa = F @ a_m
    coeffs = Q.T @ Fa
    resid_vec = Fa - Q @ coeffs
    c_opt = np.linalg.solve(R, coeffs)
    resid = a_m - A_prev.T @ c_opt
    H = ch.H
    P = ch.P_matrix()
    G = np.eye(ch.num_antennas) + H @ P @ H.T
    b_opt = np.linalg.solve(G, H @ P @ resid)
    variance = float(resid_vec @ resid_vec)
    projector = np.eye(ch.num_users) - Q @ Q.T
    return NoiseReport(variance=variance, b_opt=b_opt, c_opt=c_opt,
                       projector=projector)


def sum_capacity(ch: ChannelInstance) -> float:
    """Multiple-access sum capacity 0.5 log2 det(I + H P H^T)."""
    H = ch.H
    G = np.eye(ch.num_antennas) + H @ ch.P_matrix() @ H.T
    sign, logdet = np.linalg.slogdet(G)
    if sign <= 0:
        raise ArithmeticError("I + H P H^T must be positive definite")
    return 0.5 * logdet / math.log(2.0)


def log2_plus(x: float) -> float:
    return max(0.0, math.log2(x)) if x > 0 else 0.0


def achievable_rate(power: float, variance: float) -> float:
    """0.5 log2^+(power / variance); zero variance with positive power is unbounded."""
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if variance == 0.0:
        return UNBOUNDED if power > 0 else 0.0
    return 0.5 * log2_plus(power / variance)
