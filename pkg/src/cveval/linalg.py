"""Indicator-matrix algebra and the two-factor (item + worker) Gaussian model.

An indicator matrix has exactly one unit entry per row and is stored as the
vector of column indices. Responses are rows; ``U`` maps responses to items
and ``V`` maps responses to workers. The model is

    y_i = x[u(i)] + w[v(i)] + r_i,
    x ~ N(mu_X, sigma_X2),  w ~ N(0, sigma_W2),  r ~ N(0, sigma_R2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    LengthMismatch,
    MalformedAssignment,
    NonIdentityU,
    NotSPD,
    RowCountMismatch,
    SingularD,
    SingularInner,
    SingularShift,
)

MAX_DIM = 1000
COND_LIMIT = 1e12
PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class IndicatorMatrix:
    cols: np.ndarray
    n_cols: int

    def __post_init__(self):
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        if cols.size and (cols.min() < 0 or cols.max() >= self.n_cols):
            raise MalformedAssignment(f"column index outside [0, {self.n_cols})")
        object.__setattr__(self, "cols", cols)

    @classmethod
    def from_assignment(cls, cols, n_cols: int | None = None) -> IndicatorMatrix:
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if n_cols is None:
            n_cols = int(cols.max()) + 1 if cols.size else 0
        return cls(cols, n_cols)

    @classmethod
    def identity(cls, m: int) -> IndicatorMatrix:
        return cls(np.arange(m), m)

    @property
    def m(self) -> int:
        return int(self.cols.size)

    def dense(self) -> np.ndarray:
        out = np.zeros((self.m, self.n_cols))
        out[np.arange(self.m), self.cols] = 1.0
        return out

    def is_injective(self) -> bool:
        return bool(np.all(column_counts(self) <= 1))


def gram(U: IndicatorMatrix) -> np.ndarray:
    """U U^T: entry (i, j) is 1 iff rows i and j share a column."""
    return (U.cols[:, None] == U.cols[None, :]).astype(float)


def column_counts(U: IndicatorMatrix) -> np.ndarray:
    """Diagonal of U^T U (which is always diagonal)."""
    return np.bincount(U.cols, minlength=U.n_cols).astype(np.int64)


def cross(U: IndicatorMatrix, V: IndicatorMatrix) -> np.ndarray:
    """W = U^T V, the item-by-worker co-occurrence counts."""
    if U.m != V.m:
        raise RowCountMismatch(f"U has {U.m} rows, V has {V.m}")
    W = np.zeros((U.n_cols, V.n_cols))
    np.add.at(W, (U.cols, V.cols), 1.0)
    return W


def inv_identity_plus_scaled_gram(k: float, U: IndicatorMatrix) -> np.ndarray:
    """(I + k U U^T)^{-1} = I - U diag(k / (1 + k c_j)) U^T.

    With every column count c_j equal to 1 this is I - k/(k+1) U U^T.
    """
    counts = column_counts(U)
    shift = 1.0 + k * counts
    if np.any(np.abs(shift[counts > 0]) < PIVOT_TOL):
        raise SingularShift(f"1 + k*c_j vanishes for k={k}")
    weight = np.zeros(U.n_cols)
    used = counts > 0
    weight[used] = k / shift[used]
    return np.eye(U.m) - gram(U) * weight[U.cols][:, None]


def woodbury_inverse(A_inv, U, C_inv, V) -> np.ndarray:
    """(A + U C V)^{-1} = A^{-1} - A^{-1} U (C^{-1} + V A^{-1} U)^{-1} V A^{-1}."""
    A_inv = np.atleast_2d(np.asarray(A_inv, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    C_inv = np.atleast_2d(np.asarray(C_inv, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    AU = A_inv @ U
    inner = C_inv + V @ AU
    if not np.all(np.isfinite(inner)) or np.linalg.cond(inner) > COND_LIMIT:
        raise SingularInner("inner matrix C^-1 + V A^-1 U is singular or ill-conditioned")
    return A_inv - AU @ np.linalg.solve(inner, V @ A_inv)


@dataclass(frozen=True)
class TwoFactorConfig:
    mu_X: float
    sigma_X2: float
    sigma_W2: float
    sigma_R2: float
    V: IndicatorMatrix
    U: IndicatorMatrix | None = None  # None means every response has its own item

    def __post_init__(self):
        if min(self.sigma_X2, self.sigma_W2, self.sigma_R2) < 0:
            raise ValueError("variances must be nonnegative")
        if self.U is not None and self.U.m != self.V.m:
            raise MalformedAssignment(f"U has {self.U.m} rows, V has {self.V.m}")
        if self.V.m > MAX_DIM:
            raise ValueError(f"dense utilities are capped at {MAX_DIM} responses")

    @property
    def m(self) -> int:
        return self.V.m

    @property
    def items(self) -> IndicatorMatrix:
        return self.U if self.U is not None else IndicatorMatrix.identity(self.m)


def _require_distinct_items(cfg: TwoFactorConfig) -> None:
    if cfg.U is not None and not cfg.U.is_injective():
        raise NonIdentityU("covariance form assumes a distinct item per response")


def two_factor_covariance(cfg: TwoFactorConfig) -> np.ndarray:
    _require_distinct_items(cfg)
    return (cfg.sigma_X2 + cfg.sigma_R2) * np.eye(cfg.m) + cfg.sigma_W2 * gram(cfg.V)


def two_factor_precision(cfg: TwoFactorConfig) -> np.ndarray:
    """Closed-form inverse of :func:`two_factor_covariance`.

    With D = sigma_X2 + sigma_R2 and worker group sizes c_j,
    Sigma^{-1} = (1/D) (I - V diag(sigma_W2 / (D + sigma_W2 c_j)) V^T).
    When every worker answers once this is C I - C' V V^T with C = 1/D and
    C' = sigma_W2 / (D (D + sigma_W2)).
    """
    _require_distinct_items(cfg)
    D = cfg.sigma_X2 + cfg.sigma_R2
    if D <= PIVOT_TOL:
        raise SingularD("sigma_X2 + sigma_R2 must be positive")
    counts = column_counts(cfg.V)
    weight = cfg.sigma_W2 / (D + cfg.sigma_W2 * counts)
    return (np.eye(cfg.m) - gram(cfg.V) * weight[cfg.V.cols][:, None]) / D


@dataclass(frozen=True)
class SufficientStats:
    t1: float
    t2: float
    t3: float
    t4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.t1, self.t2, self.t3, self.t4)


def sufficient_stats(y, V: IndicatorMatrix) -> SufficientStats:
    """||y||^2, ||V^T y||^2, 1^T y and 1^T V V^T y."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size != V.m:
        raise LengthMismatch(f"|y|={y.size} but V has {V.m} rows")
    group_sums = np.bincount(V.cols, weights=y, minlength=V.n_cols)
    counts = column_counts(V)
    return SufficientStats(
        t1=float(y @ y),
        t2=float(group_sums @ group_sums),
        t3=float(y.sum()),
        t4=float(counts @ group_sums),
    )


def _cholesky_spd(Sigma: np.ndarray) -> np.ndarray:
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
        raise NotSPD("covariance must be square")
    if not np.allclose(Sigma, Sigma.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(Sigma).max(initial=0.0)))):
        raise NotSPD("covariance is not symmetric")
    try:
        L = np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError as exc:
        raise NotSPD("covariance is not positive definite") from exc
    scale = max(1.0, float(np.max(np.diag(Sigma))))
    if np.min(np.diag(L)) ** 2 <= PIVOT_TOL * scale:
        raise NotSPD("covariance is numerically singular")
    return L


def gls_mean(y, Sigma) -> float:
    """Precision-weighted mean (1^T S^-1 y) / (1^T S^-1 1)."""
    y = np.asarray(y, dtype=float).ravel()
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.shape != (y.size, y.size):
        raise LengthMismatch(f"Sigma shape {Sigma.shape} does not match |y|={y.size}")
    L = _cholesky_spd(Sigma)
    ones = np.ones(y.size)
    # S^-1 v = L^-T L^-1 v, so 1^T S^-1 y = (L^-1 1) . (L^-1 y)
    a = np.linalg.solve(L, ones)
    b = np.linalg.solve(L, y)
    return float(a @ b / (a @ a))


def two_factor_log_density(y, cfg: TwoFactorConfig) -> float:
    """Gaussian log-density of one response vector under the two-factor model."""
    y = np.asarray(y, dtype=float).ravel()
    Sigma = two_factor_covariance(cfg)
    L = _cholesky_spd(Sigma)
    z = np.linalg.solve(L, y - cfg.mu_X)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return float(-0.5 * (z @ z + logdet + y.size * np.log(2 * np.pi)))
