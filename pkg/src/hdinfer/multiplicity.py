"""Familywise error control via the simulated distribution of the minimal
null p-value (a Westfall-Young style adjustment), plus Bonferroni-Holm."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ._montecarlo import MonteCarloConfig, map_null_chunks
from .design import DesignContext, RidgeCovariance
from .inference import GroupHypothesis


@dataclass(frozen=True)
class NullDistribution:
    """Sorted Monte Carlo sample of the minimal null p-value."""

    sorted_min_pvalues: np.ndarray
    draws: int
    seed: int
    kind: str = "individual"

    def cdf(self, c) -> np.ndarray:
        """Empirical ``P[min p <= c]``."""
        c = np.asarray(c, dtype=float)
        hits = np.searchsorted(self.sorted_min_pvalues, c, side="right")
        return hits / self.draws


def simulate_fz(
    ctx: DesignContext,
    cov: RidgeCovariance,
    mc: MonteCarloConfig | None = None,
) -> NullDistribution:
    mc = mc or MonteCarloConfig()
    if mc.draws < 1000:
        raise ValueError("the null distribution needs at least 1000 draws")
    parts = map_null_chunks(ctx, cov, mc, lambda block: block.max(axis=1))
    # smallest p-value of a draw belongs to its largest |a Z|
    minp = np.minimum(2.0 * norm.sf(np.concatenate(parts)), 1.0)
    return NullDistribution(np.sort(minp), mc.draws, mc.seed, "individual")


def adjust_pvalues(raw, fz: NullDistribution, zeta: float = 0.0) -> np.ndarray:
    """``P_corr = F_Z(P + zeta)`` with the empirical ``F_Z``."""
    if zeta < 0:
        raise ValueError("zeta must be nonnegative")
    raw = np.asarray(raw, dtype=float)
    if np.any((raw < 0) | (raw > 1)):
        raise ValueError("raw p-values must lie in [0, 1]")
    return np.clip(fz.cdf(raw + zeta), 0.0, 1.0)


def simulate_group_fz(
    groups,
    ctx: DesignContext,
    cov: RidgeCovariance,
    mc: MonteCarloConfig | None = None,
    delta=None,
    untestable=None,
) -> NullDistribution:
    """Null sample of ``min_g (1 - J_g(max_{j in g} a_j |Z_j|))``.

    ``J_g`` is estimated from the same ensemble: the null p-value of draw
    ``b`` for group ``g`` is the fraction of draws whose Delta-shifted
    maximum reaches draw ``b``'s unshifted maximum. Because the shifted
    maximum of a draw never falls below its own unshifted one, this equals
    the leave-one-out plus-one estimator.
    """
    groups = list(groups)
    if not groups:
        raise ValueError("need at least one group")
    mc = mc or MonteCarloConfig()
    if mc.draws < 1000:
        raise ValueError("the null distribution needs at least 1000 draws")
    p = ctx.p
    for g in groups:
        g.check(p)
    delta = np.zeros(p) if delta is None else np.asarray(delta, dtype=float)
    skip = ctx.constant_mask | ~(cov.omega_diag > 0)
    if untestable is not None:
        skip = skip | np.asarray(untestable)
    members = [np.asarray([j for j in g.indices if not skip[j]], dtype=int) for g in groups]
    union = np.unique(np.concatenate([m for m in members if m.size] or [np.zeros(0, int)]))
    pos = {j: k for k, j in enumerate(union)}
    local = [np.asarray([pos[j] for j in m], dtype=int) for m in members]
    d_union = delta[union]

    def reduce(block):
        plain = np.full((block.shape[0], len(groups)), -np.inf)
        shifted = np.full_like(plain, -np.inf)
        for k, idx in enumerate(local):
            if idx.size:
                plain[:, k] = block[:, idx].max(axis=1)
                shifted[:, k] = (block[:, idx] + d_union[idx]).max(axis=1)
        return plain, shifted

    if union.size:
        parts = map_null_chunks(ctx, cov, mc, reduce, union)
        plain = np.vstack([a for a, _ in parts])
        shifted = np.vstack([b for _, b in parts])
    else:
        plain = shifted = np.full((mc.draws, len(groups)), -np.inf)

    B = mc.draws
    null_p = np.ones((B, len(groups)))
    for k, idx in enumerate(local):
        if not idx.size:
            continue
        ref = np.sort(shifted[:, k])
        below = np.searchsorted(ref, plain[:, k], side="left")
        null_p[:, k] = (B - below) / B
    return NullDistribution(np.sort(null_p.min(axis=1)), B, mc.seed, "group")


def adjust_group_pvalues(
    raw_groups,
    groups,
    ctx: DesignContext,
    cov: RidgeCovariance,
    mc: MonteCarloConfig | None = None,
    *,
    delta=None,
    zeta: float = 0.0,
    untestable=None,
) -> np.ndarray:
    """Familywise adjustment across a family of group hypotheses."""
    raw = np.asarray(raw_groups, dtype=float)
    groups = list(groups)
    if raw.shape != (len(groups),):
        raise ValueError("need one raw p-value per group")
    fz = simulate_group_fz(groups, ctx, cov, mc, delta=delta, untestable=untestable)
    return adjust_pvalues(raw, fz, zeta)


def bonferroni_holm(raw) -> np.ndarray:
    """Holm's step-down adjustment."""
    raw = np.asarray(raw, dtype=float)
    m = raw.size
    order = np.argsort(raw, kind="stable")
    scaled = (m - np.arange(m)) * raw[order]
    adj_sorted = np.minimum(np.maximum.accumulate(scaled), 1.0)
    out = np.empty(m)
    out[order] = adj_sorted
    return out
