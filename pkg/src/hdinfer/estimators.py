"""Estimator-style front ends for the testing pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from ._montecarlo import MonteCarloConfig
from ._validation import check_groups, check_ridge_lambda, check_scalar_range
from .design import build_design, ridge_covariance
from .inference import corrected_fit, group_pvalue, group_statistic, single_pvalues
from .lasso import DEFAULT_TOL, MAX_OUTER, scaled_lasso_fit
from .multiplicity import adjust_group_pvalues, adjust_pvalues, bonferroni_holm, simulate_fz

CORRECTIONS = ("westfall-young", "holm", "none")


def _check_data(est, X, y, lambda0):
    # the default penalty level vanishes at p = 1
    return validate_data(
        est,
        X,
        y,
        y_numeric=True,
        dtype=float,
        ensure_min_samples=2,
        ensure_min_features=2 if lambda0 is None else 1,
    )


class ScaledLasso(RegressorMixin, BaseEstimator):
    """Lasso with a jointly estimated noise level.

    Columns are centered and scaled internally; ``coef_`` and
    ``intercept_`` are on the scale of the input.

    Parameters
    ----------
    lambda0 : float or None
        Scale-free penalty level; ``None`` uses ``2 sqrt(log p / n)``.
    tol : float
        Coordinate descent tolerance on the largest coefficient move.
    max_outer : int
        Cap on the noise-level iterations.
    """

    def __init__(self, lambda0=None, tol=DEFAULT_TOL, max_outer=MAX_OUTER):
        self.lambda0 = lambda0
        self.tol = tol
        self.max_outer = max_outer

    def fit(self, X, y):
        X, y = _check_data(self, X, y, self.lambda0)
        ctx = build_design(X)
        init = scaled_lasso_fit(ctx, y, self.lambda0, tol=self.tol, max_outer=self.max_outer)
        self.design_ = ctx
        self.initial_fit_ = init
        self.coef_std_ = init.beta_init
        self.coef_ = ctx.coef_to_original(init.beta_init)
        self.intercept_ = float(y.mean() - ctx.col_means @ self.coef_)
        self.sigma_ = init.sigma_hat
        self.n_iter_ = init.iterations
        self.converged_ = init.converged
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, dtype=float, reset=False)
        return X @ self.coef_ + self.intercept_


class RidgeProjectionTest(SelectorMixin, BaseEstimator):
    """Significance tests for the coefficients of a high-dimensional linear model.

    Fits a Scaled Lasso for the initial estimate and noise level, corrects
    the Ridge estimate for its projection bias and turns the corrected
    statistics into p-values. Selected features are those whose adjusted
    p-value is at most ``alpha``.

    Parameters
    ----------
    alpha : float
        Level used by ``get_support`` and ``transform``.
    ridge_lambda : "auto" or float
        Ridge penalty; ``"auto"`` means ``1/n``.
    xi : float
        Exponent slack in the bias bound, in (0, 0.5).
    zeta : float
        Nonnegative offset inside the familywise adjustment.
    lambda0 : float or None
        Scaled Lasso penalty level; ``None`` uses ``2 sqrt(log p / n)``.
    correction : {"westfall-young", "holm", "none"}
        Multiplicity adjustment behind ``pvalues_corr_``.
    groups : list or None
        Group hypotheses: ``GroupHypothesis`` objects, 0-based index lists
        or ``(label, indices)`` pairs.
    mc_draws : int
        Monte Carlo draws for group p-values and the null distribution.
    seed : int
        Seed of every Monte Carlo stream.
    threads : int or None
        Worker threads; ``None`` falls back to ``HDINFER_THREADS``, then 1.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Corrected coefficients on the input scale.
    statistics_, delta_ : ndarray
        Standardized statistics and their bias bounds.
    pvalues_, pvalues_corr_ : ndarray
        Raw and adjusted two-sided p-values.
    group_pvalues_, group_pvalues_corr_ : ndarray
        Raw and adjusted group p-values, in the order of ``groups_``.
    sigma_ : float
        Noise level estimate.
    untestable_ : ndarray of bool
        Coefficients that cannot be tested (p-value fixed at 1).
    """

    def __init__(
        self,
        alpha=0.05,
        ridge_lambda="auto",
        xi=0.05,
        zeta=0.0,
        lambda0=None,
        correction="westfall-young",
        groups=None,
        mc_draws=10000,
        seed=0,
        threads=None,
    ):
        self.alpha = alpha
        self.ridge_lambda = ridge_lambda
        self.xi = xi
        self.zeta = zeta
        self.lambda0 = lambda0
        self.correction = correction
        self.groups = groups
        self.mc_draws = mc_draws
        self.seed = seed
        self.threads = threads

    def _check_params(self):
        check_scalar_range(self.alpha, "alpha", 0.0, 1.0, low_open=True, high_open=True)
        check_scalar_range(self.xi, "xi", 0.0, 0.5, low_open=True, high_open=True)
        check_scalar_range(self.zeta, "zeta", 0.0)
        if self.correction not in CORRECTIONS:
            raise ValueError(f"correction must be one of {CORRECTIONS}, got {self.correction!r}")
        if int(self.mc_draws) < 1000:
            raise ValueError("mc_draws must be at least 1000")
        if int(self.seed) < 0:
            raise ValueError("seed must be nonnegative")

    def fit(self, X, y):
        self._check_params()
        X, y = _check_data(self, X, y, self.lambda0)
        n, p = X.shape
        groups = check_groups(self.groups, p)
        lam = check_ridge_lambda(self.ridge_lambda, n)
        draws, seed = int(self.mc_draws), int(self.seed)

        ctx = build_design(X)
        cov = ridge_covariance(ctx, lam)
        init = scaled_lasso_fit(ctx, y, self.lambda0)
        fit = corrected_fit(ctx, cov, init, y, xi=self.xi)
        raw = single_pvalues(fit)

        null = None
        if self.correction == "westfall-young":
            null = simulate_fz(ctx, cov, MonteCarloConfig(draws, seed, self.threads))
            adj = adjust_pvalues(raw, null, self.zeta)
        elif self.correction == "holm":
            adj = bonferroni_holm(raw)
        else:
            adj = raw.copy()

        graw = np.array(
            [
                group_pvalue(fit, cov, ctx, g, MonteCarloConfig(draws, seed + 1 + k, self.threads))
                for k, g in enumerate(groups)
            ]
        )
        if not groups:
            gadj = graw
        elif self.correction == "westfall-young":
            gadj = adjust_group_pvalues(
                graw,
                groups,
                ctx,
                cov,
                MonteCarloConfig(draws, seed + 1 + len(groups), self.threads),
                delta=fit.delta,
                zeta=self.zeta,
                untestable=fit.untestable,
            )
        elif self.correction == "holm":
            gadj = bonferroni_holm(graw)
        else:
            gadj = graw.copy()

        self.design_ = ctx
        self.covariance_ = cov
        self.initial_fit_ = init
        self.ridge_fit_ = fit
        self.null_distribution_ = null
        self.ridge_lambda_ = lam
        self.coef_ = ctx.coef_to_original(fit.beta_corr)
        self.statistics_ = fit.stats
        self.delta_ = fit.delta
        self.sigma_ = init.sigma_hat
        self.untestable_ = fit.untestable
        self.pvalues_ = raw
        self.pvalues_corr_ = adj
        self.groups_ = groups
        self.group_statistics_ = np.array([group_statistic(fit, g) for g in groups])
        self.group_pvalues_ = graw
        self.group_pvalues_corr_ = gadj
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "pvalues_corr_")
        return self.pvalues_corr_ <= self.alpha
