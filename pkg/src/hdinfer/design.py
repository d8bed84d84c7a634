"""Design matrix handling: standardization, thin SVD, row-space projection
and the Ridge covariance quantities built on top of them."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Above this many covariates the p x p projection is never materialized.
MATERIALIZE_MAX_P = 8000


class DegenerateDesignError(ValueError):
    """Raised when the design carries no usable (non-constant) column."""


@dataclass(frozen=True, eq=False)
class DesignContext:
    """Standardized design with its cached thin SVD.

    Singular values are those of ``X_std / sqrt(n)`` so that
    ``X_std.T @ X_std / n == v_mat @ diag(s_vals**2) @ v_mat.T``.

    Attributes
    ----------
    X_std : ndarray of shape (n, p)
        Centered design with columns scaled to unit ``diag(X.T X / n)``.
        Constant columns are left at zero.
    col_means, col_scales : ndarray of shape (p,)
        Centering and scaling applied per column (scale 1 for constant
        columns).
    constant_mask : ndarray of bool, shape (p,)
        Columns excluded from testing.
    r_mat, s_vals, v_mat
        Thin SVD factors truncated at the numerical rank ``r``.
    """

    X_std: np.ndarray
    col_means: np.ndarray
    col_scales: np.ndarray
    constant_mask: np.ndarray
    r_mat: np.ndarray
    s_vals: np.ndarray
    v_mat: np.ndarray
    standardized: bool = True

    @property
    def n(self) -> int:
        return self.X_std.shape[0]

    @property
    def p(self) -> int:
        return self.X_std.shape[1]

    @property
    def r(self) -> int:
        return self.s_vals.shape[0]

    @property
    def testable(self) -> np.ndarray:
        return ~self.constant_mask

    @property
    def lambda_min_nonzero(self) -> float:
        """Smallest nonzero eigenvalue of ``X_std.T X_std / n``."""
        return float(self.s_vals[-1] ** 2)

    @cached_property
    def projection_diag(self) -> np.ndarray:
        """Diagonal of P_X, i.e. the squared row norms of V."""
        return np.einsum("jk,jk->j", self.v_mat, self.v_mat)

    @cached_property
    def p_x(self) -> np.ndarray:
        """The full p x p projection ``V V^T`` onto the row space."""
        if self.p > MATERIALIZE_MAX_P:
            raise MemoryError(
                f"p={self.p} exceeds {MATERIALIZE_MAX_P}; use projection_rows()"
            )
        px = self.v_mat @ self.v_mat.T
        # exact symmetry, rounding in the product is not symmetric
        return 0.5 * (px + px.T)

    def projection_rows(self, rows) -> np.ndarray:
        """Rows of P_X computed on demand from V."""
        rows = np.atleast_1d(np.asarray(rows))
        if self.p <= MATERIALIZE_MAX_P:
            return self.p_x[rows]
        return self.v_mat[rows] @ self.v_mat.T

    def project(self, beta: np.ndarray) -> np.ndarray:
        """P_X @ beta without forming P_X."""
        return self.v_mat @ (self.v_mat.T @ beta)

    @cached_property
    def offdiag_abs_max(self) -> np.ndarray:
        """``max_{k != j} |(P_X)_jk|`` for every j, computed in row blocks."""
        p = self.p
        out = np.empty(p)
        block = max(1, min(p, 2_000_000 // max(p, 1)))
        for start in range(0, p, block):
            stop = min(p, start + block)
            rows = np.abs(self.v_mat[start:stop] @ self.v_mat.T)
            rows[np.arange(stop - start), np.arange(start, stop)] = 0.0
            out[start:stop] = rows.max(axis=1) if p > 1 else 0.0
        return out

    def to_standardized(self, X: np.ndarray) -> np.ndarray:
        """Apply the stored centering and scaling to new rows."""
        return (np.asarray(X, dtype=float) - self.col_means) / self.col_scales

    def coef_to_original(self, beta: np.ndarray) -> np.ndarray:
        """Map standardized-scale coefficients back to the raw column scale."""
        return np.asarray(beta) / self.col_scales


def build_design(X_raw, standardize: bool = True) -> DesignContext:
    """Center, scale and decompose a raw design matrix.

    With ``standardize=False`` the columns are centered only.
    """
    X = np.array(X_raw, dtype=float, copy=True)
    if X.ndim != 2:
        raise ValueError(f"design must be 2-dimensional, got shape {X.shape}")
    n, p = X.shape
    if n < 2 or p < 1:
        raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
    if not np.all(np.isfinite(X)):
        raise ValueError("design contains non-finite entries")

    means = X.mean(axis=0)
    Xc = X - means
    raw_scale = np.sqrt(np.mean(Xc**2, axis=0))
    spread = np.ptp(X, axis=0)
    constant = spread <= 1e-12 * np.maximum(1.0, np.abs(means))
    if constant.all():
        raise DegenerateDesignError("degenerate design: all columns are constant")

    Xc[:, constant] = 0.0
    scales = np.ones(p)
    if standardize:
        scales[~constant] = raw_scale[~constant]
        Xc[:, ~constant] /= scales[~constant]

    u, s, vt = np.linalg.svd(Xc / np.sqrt(n), full_matrices=False)
    tol = s[0] * max(n, p) * np.finfo(float).eps
    r = int(np.count_nonzero(s > tol))
    v = np.ascontiguousarray(vt[:r].T)
    v[constant] = 0.0
    return DesignContext(
        X_std=Xc,
        col_means=means,
        col_scales=scales,
        constant_mask=constant,
        r_mat=np.ascontiguousarray(u[:, :r]),
        s_vals=s[:r].copy(),
        v_mat=v,
        standardized=standardize,
    )


@dataclass(frozen=True)
class RidgeCovariance:
    """Diagonal of ``Omega(lambda) = V diag(s^2 / (s^2 + lambda)^2) V^T``.

    ``a_factors_unit`` holds ``Omega_jj^{-1/2}`` (``inf`` where the diagonal
    vanishes), the part of the normalizing factor that depends on neither
    sigma nor n.
    """

    lam: float
    omega_diag: np.ndarray
    omega_min: float
    a_factors_unit: np.ndarray
    shrink: np.ndarray  # s / (s^2 + lambda), the Ridge filter on Rᵀy

    def a_factors(self, sigma: float, n: int) -> np.ndarray:
        """``a_{n,p;j}(sigma) = sqrt(n) / (sigma * sqrt(Omega_jj))``."""
        return np.sqrt(n) / sigma * self.a_factors_unit


def ridge_covariance(ctx: DesignContext, lam: float) -> RidgeCovariance:
    if not lam > 0:
        raise ValueError(f"ridge lambda must be positive, got {lam!r}")
    s2 = ctx.s_vals**2
    weights = s2 / (s2 + lam) ** 2
    omega = (ctx.v_mat**2) @ weights
    with np.errstate(divide="ignore"):
        a_unit = np.where(omega > 0, 1.0 / np.sqrt(omega), np.inf)
    return RidgeCovariance(
        lam=float(lam),
        omega_diag=omega,
        omega_min=float(omega.min()),
        a_factors_unit=a_unit,
        shrink=ctx.s_vals / (s2 + lam),
    )


def omega_min_limit(ctx: DesignContext) -> float:
    """Closed form of ``Omega_min(lambda)`` as lambda -> 0+."""
    return float(((ctx.v_mat**2) @ (1.0 / ctx.s_vals**2)).min())


def minvar_holds(ctx: DesignContext, columns=None) -> bool:
    """Whether every (selected) row of V has a nonzero entry."""
    rows = ctx.v_mat if columns is None else ctx.v_mat[columns]
    return bool(np.min(np.max(rows**2, axis=1)) > 0)


def ridge_fit(ctx: DesignContext, y, lam: float, center: bool = True) -> np.ndarray:
    """Ridge coefficients ``(Sigma_hat + lam I)^{-1} X^T y / n`` via the SVD."""
    y = np.asarray(y, dtype=float)
    if y.shape != (ctx.n,):
        raise ValueError(f"response has shape {y.shape}, expected ({ctx.n},)")
    if not lam > 0:
        raise ValueError(f"ridge lambda must be positive, got {lam!r}")
    if center:
        y = y - y.mean()
    s = ctx.s_vals
    filt = s / (np.sqrt(ctx.n) * (s**2 + lam))
    return ctx.v_mat @ (filt * (ctx.r_mat.T @ y))


@dataclass(frozen=True)
class KappaSummary:
    min: float
    q25: float
    median: float
    q75: float
    max: float

    def as_dict(self) -> dict:
        return {
            "min": self.min,
            "q25": self.q25,
            "median": self.median,
            "q75": self.q75,
            "max": self.max,
        }


def kappa_diagnostics(ctx: DesignContext):
    """Ratios ``max_{k != j} |P_jk| / |P_jj|`` and their five-number summary.

    Returns ``(kappa, summary, degenerate)`` where ``degenerate`` flags
    columns with a vanishing projection diagonal (reported as ``inf``).
    Constant columns are left out of the summary.
    """
    diag = np.abs(ctx.projection_diag)
    off = ctx.offdiag_abs_max
    degenerate = diag <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(degenerate, np.inf, off / np.where(degenerate, 1.0, diag))
    if np.any(degenerate & ctx.testable):
        warnings.warn(
            "projection diagonal vanishes for some columns; kappa set to inf",
            RuntimeWarning,
            stacklevel=2,
        )
    vals = kappa[ctx.testable]
    q = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0])
    return kappa, KappaSummary(*map(float, q)), degenerate


def detection_bound(
    ctx: DesignContext,
    cov: RidgeCovariance,
    sigma: float,
    s0_bound: int,
    mode: str = "single",
) -> np.ndarray:
    """Per-coefficient detection scale with unit constant.

    ``max(kappa_j * s0 * sqrt(log p / n), g / (|P_jj| * a_j(sigma)))``
    where ``g`` is 1 for single tests and ``sqrt(log p)`` under
    familywise adjustment. Multiply by your own constant.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if s0_bound < 1:
        raise ValueError("s0_bound must be at least 1")
    if mode not in ("single", "multiple"):
        raise ValueError(f"mode must be 'single' or 'multiple', got {mode!r}")
    n, p = ctx.n, ctx.p
    kappa, _, _ = kappa_diagnostics(ctx)
    first = kappa * s0_bound * np.sqrt(np.log(p) / n)
    g = np.sqrt(np.log(p)) if mode == "multiple" else 1.0
    denom = np.abs(ctx.projection_diag) * cov.a_factors(sigma, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        second = np.where(denom > 0, g / denom, np.inf)
    return np.maximum(first, second)
