import numpy as np
import pytest
from conftest import orthogonal_design
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import kstest

from hdinfer._montecarlo import MonteCarloConfig
from hdinfer.design import build_design, ridge_covariance
from hdinfer.inference import GroupHypothesis
from hdinfer.multiplicity import (
    NullDistribution,
    adjust_group_pvalues,
    adjust_pvalues,
    bonferroni_holm,
    simulate_fz,
    simulate_group_fz,
)
from hdinfer.simlab import ScenarioConfig, generate_design


def orthogonal_setup(n=40, p=10):
    ctx = build_design(orthogonal_design(n, p))
    return ctx, ridge_covariance(ctx, 1 / n)


def test_single_coefficient_uniform():
    ctx = build_design(np.random.default_rng(0).standard_normal((30, 1)))
    cov = ridge_covariance(ctx, 1 / 30)
    fz = simulate_fz(ctx, cov, MonteCarloConfig(100000, 1))
    assert kstest(fz.sorted_min_pvalues, "uniform").pvalue > 0.01


def test_independent_closed_form():
    ctx, cov = orthogonal_setup()
    B = 100000
    fz = simulate_fz(ctx, cov, MonteCarloConfig(B, 2))
    for c in (0.001, 0.01, 0.05):
        exact = 1 - (1 - c) ** 10
        assert abs(fz.cdf(c) - exact) <= 3 * np.sqrt(exact * (1 - exact) / B)


def test_equicorrelated_dominance():
    cfg = ScenarioConfig(model="M2", n=50, p=120)
    ctx = build_design(generate_design(cfg))
    cov = ridge_covariance(ctx, 1 / 50)
    B = 20000
    fz = simulate_fz(ctx, cov, MonteCarloConfig(B, 3))
    grid = np.linspace(0.001, 0.999, 200)
    band = 1.63 / np.sqrt(B)
    assert np.all(fz.cdf(grid) >= grid - band)


def test_null_distribution_invariants_and_determinism():
    ctx, cov = orthogonal_setup()
    a = simulate_fz(ctx, cov, MonteCarloConfig(3000, 4, threads=1))
    b = simulate_fz(ctx, cov, MonteCarloConfig(3000, 4, threads=3))
    assert np.array_equal(a.sorted_min_pvalues, b.sorted_min_pvalues)
    v = a.sorted_min_pvalues
    assert v.size == 3000 and np.all(np.diff(v) >= 0)
    assert v.min() >= 0 and v.max() <= 1
    assert a.kind == "individual" and a.draws == 3000


def test_minimum_draws_enforced():
    ctx, cov = orthogonal_setup()
    with pytest.raises(ValueError):
        simulate_fz(ctx, cov, MonteCarloConfig(999, 0))
    with pytest.raises(ValueError):
        simulate_group_fz([GroupHypothesis((0,))], ctx, cov, MonteCarloConfig(500, 0))


def test_adjust_examples():
    ctx, cov = orthogonal_setup()
    fz = simulate_fz(ctx, cov, MonteCarloConfig(20000, 5))
    assert adjust_pvalues([1.0], fz)[0] == 1.0
    raw = np.linspace(0, 1, 101)
    adj = adjust_pvalues(raw, fz)
    se = np.sqrt(raw * (1 - raw) / 20000)
    assert np.all(adj >= raw - 3 * se - 1e-12)
    with pytest.raises(ValueError):
        adjust_pvalues([0.5], fz, zeta=-0.1)
    with pytest.raises(ValueError):
        adjust_pvalues([1.5], fz)


def test_adjust_weak_inequality():
    fz = NullDistribution(np.array([0.1, 0.2, 0.2, 0.5]), 4, 0)
    assert np.allclose(adjust_pvalues([0.2, 0.19, 0.5, 0.0], fz), [0.75, 0.25, 1.0, 0.0])
    assert np.allclose(adjust_pvalues([0.15], fz, zeta=0.05), [0.75])


@given(raw=st.lists(st.floats(0, 1), min_size=2, max_size=30), zeta=st.floats(0, 0.1))
def test_adjust_monotone_and_bounded(raw, zeta):
    sample = np.sort(np.random.default_rng(0).random(1000) ** 3)
    fz = NullDistribution(sample, 1000, 0)
    raw = np.asarray(raw)
    adj = adjust_pvalues(raw, fz, zeta)
    assert np.all((adj >= 0) & (adj <= 1))
    order = np.argsort(raw)
    assert np.all(np.diff(adj[order]) >= 0)


def test_group_single_hypothesis_is_identity():
    ctx, cov = orthogonal_setup()
    B = 20000
    g = [GroupHypothesis((0, 1, 2))]
    raw = np.array([0.01, 0.05, 0.3])
    adj = [adjust_group_pvalues([r], g, ctx, cov, MonteCarloConfig(B, 6))[0] for r in raw]
    assert np.all(np.abs(np.array(adj) - raw) <= 3 * np.sqrt(raw * (1 - raw) / B) + 1 / B)


def test_group_duplicates_share_adjustment():
    ctx, cov = orthogonal_setup()
    g = GroupHypothesis((1, 2), "a")
    groups = [g, GroupHypothesis((1, 2), "b"), GroupHypothesis((5,), "c")]
    adj = adjust_group_pvalues([0.02, 0.02, 0.4], groups, ctx, cov, MonteCarloConfig(5000, 7))
    assert adj[0] == adj[1]


def test_group_disjoint_singletons_independent():
    ctx, cov = orthogonal_setup()
    B = 50000
    m = 6
    groups = [GroupHypothesis((j,)) for j in range(m)]
    fz = simulate_group_fz(groups, ctx, cov, MonteCarloConfig(B, 8))
    assert fz.kind == "group"
    for c in (0.005, 0.02, 0.05):
        exact = 1 - (1 - c) ** m
        assert abs(fz.cdf(c) - exact) <= 3 * np.sqrt(exact * (1 - exact) / B) + 2 / B


def test_group_null_with_shift_is_conservative():
    ctx, cov = orthogonal_setup()
    groups = [GroupHypothesis((0, 1)), GroupHypothesis((2, 3))]
    plain = simulate_group_fz(groups, ctx, cov, MonteCarloConfig(5000, 9))
    shifted = simulate_group_fz(groups, ctx, cov, MonteCarloConfig(5000, 9), delta=np.full(10, 0.5))
    assert np.all(shifted.sorted_min_pvalues >= plain.sorted_min_pvalues - 1e-12)


def test_group_adjust_checks():
    ctx, cov = orthogonal_setup()
    with pytest.raises(ValueError):
        adjust_group_pvalues([], [], ctx, cov, MonteCarloConfig(1000, 0))
    with pytest.raises(ValueError):
        adjust_group_pvalues([0.1, 0.2], [GroupHypothesis((0,))], ctx, cov, MonteCarloConfig(1000, 0))


def test_holm_examples():
    assert np.allclose(bonferroni_holm([0.3]), [0.3])
    assert np.allclose(bonferroni_holm([0.2, 0.2, 0.2]), [0.6, 0.6, 0.6])
    assert np.allclose(bonferroni_holm([0.4, 0.4, 0.4]), [1.0, 1.0, 1.0])
    assert np.allclose(bonferroni_holm([0.001, 0.02, 0.9]), [0.003, 0.04, 0.9])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40))
def test_holm_properties(raw):
    raw = np.asarray(raw)
    adj = bonferroni_holm(raw)
    assert np.all(adj >= raw - 1e-15) and np.all(adj <= 1)
    order = np.argsort(raw, kind="stable")
    assert np.all(np.diff(adj[order]) >= 0)


def test_westfall_young_agrees_with_holm_independent():
    p = 200
    ctx = build_design(orthogonal_design(p + 50, p))
    cov = ridge_covariance(ctx, 1 / (p + 50))
    B = 200000
    fz = simulate_fz(ctx, cov, MonteCarloConfig(B, 10))
    for c in (2e-4, 5e-4, 1e-3):
        wy = fz.cdf(c)
        holm = min(1.0, p * c)
        se = np.sqrt(wy * (1 - wy) / B)
        assert 0.9 - 3 * se / holm <= wy / holm <= 1.0 + 3 * se / holm
