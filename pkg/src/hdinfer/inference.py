"""Bias-corrected Ridge statistics and single / group p-values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ._montecarlo import MonteCarloConfig, null_draws
from .design import DesignContext, RidgeCovariance, ridge_fit
from .lasso import InitialFit


@dataclass(frozen=True)
class CorrectedRidgeFit:
    """Corrected Ridge estimates on the standardized scale.

    ``stats`` are ``a_j(sigma_used) * |beta_corr_j|`` and ``delta`` the
    matching projection-bias bounds. Untestable coefficients (constant
    columns or a vanishing Ridge variance) carry zero statistic and bound.
    """

    lam: float
    beta_ridge: np.ndarray
    beta_corr: np.ndarray
    stats: np.ndarray
    delta: np.ndarray
    xi: float
    sigma_used: float
    untestable: np.ndarray


@dataclass(frozen=True)
class GroupHypothesis:
    """Joint null ``beta_j = 0 for all j in indices`` (0-based indices)."""

    indices: tuple
    label: str = ""

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ValueError("group must contain at least one index")
        if len(set(idx)) != len(idx):
            raise ValueError(f"group {self.label!r} has duplicate indices")
        if min(idx) < 0:
            raise ValueError(f"group {self.label!r} has negative indices")
        object.__setattr__(self, "indices", idx)

    def check(self, p: int) -> None:
        if max(self.indices) >= p:
            raise ValueError(
                f"group {self.label!r} index {max(self.indices)} out of range for p={p}"
            )


def corrected_fit(
    ctx: DesignContext,
    cov: RidgeCovariance,
    init: InitialFit,
    y,
    lam: float | None = None,
    xi: float = 0.05,
) -> CorrectedRidgeFit:
    """Ridge fit minus the estimated projection bias of the other coefficients."""
    if lam is not None and not np.isclose(lam, cov.lam, rtol=1e-12, atol=0):
        raise ValueError(f"lambda {lam} does not match the covariance lambda {cov.lam}")
    if not 0 < xi < 0.5:
        raise ValueError(f"xi must lie in (0, 0.5), got {xi}")
    n, p = ctx.n, ctx.p
    beta_ridge = ridge_fit(ctx, y, cov.lam)
    binit = np.asarray(init.beta_init, dtype=float)
    bias = ctx.project(binit) - ctx.projection_diag * binit
    beta_corr = beta_ridge - bias

    untestable = ctx.constant_mask | ~(cov.omega_diag > 0)
    a = np.where(untestable, 0.0, cov.a_factors(init.sigma_hat, n))
    stats = a * np.abs(beta_corr)
    delta = a * ctx.offdiag_abs_max * (np.log(p) / n) ** (0.5 - xi)
    return CorrectedRidgeFit(
        lam=cov.lam,
        beta_ridge=beta_ridge,
        beta_corr=beta_corr,
        stats=stats,
        delta=delta,
        xi=xi,
        sigma_used=init.sigma_hat,
        untestable=untestable,
    )


def single_pvalues(fit: CorrectedRidgeFit) -> np.ndarray:
    """Two-sided p-values ``2 (1 - Phi((stat - delta)_+))``."""
    shifted = np.maximum(fit.stats - fit.delta, 0.0)
    pv = np.minimum(2.0 * norm.sf(shifted), 1.0)
    pv[fit.untestable] = 1.0
    return pv


def _group_columns(fit: CorrectedRidgeFit, group: GroupHypothesis) -> np.ndarray:
    idx = np.asarray(group.indices)
    return idx[~fit.untestable[idx]]


def group_pvalue(
    fit: CorrectedRidgeFit,
    cov: RidgeCovariance,
    ctx: DesignContext,
    group: GroupHypothesis,
    mc: MonteCarloConfig | None = None,
    draws: np.ndarray | None = None,
) -> float:
    """Monte Carlo p-value of the max statistic over ``group``.

    ``draws`` may supply precomputed ``|a_j Z_j|`` for the group's testable
    columns (one row per draw) so a fixed design can reuse them.
    """
    group.check(ctx.p)
    mc = mc or MonteCarloConfig()
    cols = _group_columns(fit, group)
    if cols.size == 0:
        return 1.0
    if draws is None:
        if mc.draws < 1000:
            raise ValueError("group p-values need at least 1000 draws")
        draws = null_draws(ctx, cov, mc, cols)
    gamma = fit.stats[cols].max()
    null_max = (draws + fit.delta[cols]).max(axis=1)
    exceed = np.count_nonzero(null_max >= gamma)
    return (1.0 + exceed) / (draws.shape[0] + 1.0)


def group_statistic(fit: CorrectedRidgeFit, group: GroupHypothesis) -> float:
    cols = _group_columns(fit, group)
    return float(fit.stats[cols].max()) if cols.size else 0.0
