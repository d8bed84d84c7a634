import numpy as np
import pytest
from conftest import orthogonal_design
from scipy.stats import kstest, ks_2samp

import hdinfer.simlab as simlab
from hdinfer.design import build_design, ridge_covariance
from hdinfer.inference import GroupHypothesis
from hdinfer.simlab import (
    ScenarioConfig,
    SimulationError,
    generate_design,
    projection_bias,
    projection_bias_histogram,
    run_scenario,
    snr,
)


def test_config_defaults_and_validation():
    assert ScenarioConfig(model="m2").rho == 0.8
    assert ScenarioConfig(model="M1").rho == 0.0
    bad = [
        dict(model="M3"),
        dict(model="M1", rho=0.5),
        dict(rho=1.0, model="M2"),
        dict(s0=10, p=5),
        dict(b=0.0),
        dict(reps=0),
        dict(alpha=1.0),
        dict(sigma=0.0),
        dict(p=10, groups=(GroupHypothesis((10,)),)),
    ]
    for kw in bad:
        with pytest.raises(ValueError):
            ScenarioConfig(**kw)
    assert ScenarioConfig(s0=0, b=0.0).beta0.sum() == 0


def test_m2_with_zero_rho_is_m1():
    a = generate_design(ScenarioConfig(model="M1", n=20, p=30, seed=4))
    b = generate_design(ScenarioConfig(model="M2", rho=0.0, n=20, p=30, seed=4))
    assert np.array_equal(a, b)


def test_equicorrelation_law_of_large_numbers():
    X = generate_design(ScenarioConfig(model="M2", n=5000, p=20, seed=1))
    C = np.corrcoef(X.T)
    off = C[~np.eye(20, dtype=bool)]
    assert abs(off.mean() - 0.8) <= 0.02


def test_shared_factor_matches_cholesky():
    rho, p, n = 0.8, 4, 4000
    X = generate_design(ScenarioConfig(model="M2", n=n, p=p, seed=2))
    S = np.full((p, p), rho) + (1 - rho) * np.eye(p)
    Y = np.random.default_rng(3).standard_normal((n, p)) @ np.linalg.cholesky(S).T
    assert kstest(X[:, 0], "norm").pvalue > 0.01
    assert ks_2samp(X[:, 1], Y[:, 1]).pvalue > 0.01
    # pairwise products share the same law
    assert ks_2samp(X[:, 0] * X[:, 1], Y[:, 0] * Y[:, 1]).pvalue > 0.01


def test_design_fixed_within_scenario():
    cfg = ScenarioConfig(n=10, p=15, seed=9)
    assert np.array_equal(generate_design(cfg), generate_design(cfg))
    assert not np.array_equal(generate_design(cfg), generate_design(cfg, seed=1))


def test_snr_definition():
    X = np.random.default_rng(0).standard_normal((50, 8))
    beta = np.arange(8.0)
    assert snr(X, beta, 2.0) == np.linalg.norm(X @ beta) / (np.sqrt(50) * 2.0)


@pytest.fixture(scope="module")
def small_report():
    cfg = ScenarioConfig(
        model="M2", n=40, p=80, s0=2, b=1.0, reps=12, seed=3, mc_draws=1000,
        groups=(GroupHypothesis(tuple(range(10)), "lead"), GroupHypothesis(tuple(range(70, 80)), "tail")),
    )
    return cfg, run_scenario(cfg)


def test_report_invariants(small_report):
    cfg, rep = small_report
    v = rep.v_distribution
    assert sum(v) == cfg.reps - rep.failed_reps
    assert rep.fwer == 1 - v[0] / sum(v)
    for x in (rep.avg_type1, rep.avg_power, rep.fwer, rep.fwer_power, rep.group_type1, rep.group_power):
        assert 0 <= x <= 1
    assert [g["null"] for g in rep.group_rejection] == [False, True]
    assert len(rep.replicates) == cfg.reps
    assert rep.config["groups"][1]["indices"][0] == 71


def test_scenario_thread_independent(small_report):
    cfg, rep = small_report
    from dataclasses import replace

    again = run_scenario(replace(cfg, threads=3))
    assert again.to_dict() == rep.to_dict()


def test_single_replicate():
    rep = run_scenario(ScenarioConfig(n=30, p=40, reps=1, mc_draws=1000))
    assert len(rep.replicates) == 1 and sum(rep.v_distribution) == 1


def test_global_null_error_control():
    cfg = ScenarioConfig(model="M1", n=100, p=200, s0=0, b=0.0, reps=60, seed=11, mc_draws=2000)
    rep = run_scenario(cfg)
    bound = 0.05 + 3 * np.sqrt(0.05 / cfg.reps)
    assert rep.avg_type1 <= bound
    assert rep.fwer <= bound
    assert rep.avg_power is None


def test_failing_replicates_abort(monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("injected")

    monkeypatch.setattr(simlab, "scaled_lasso_fit", boom)
    with pytest.raises(SimulationError, match="injected"):
        run_scenario(ScenarioConfig(n=20, p=30, reps=5, mc_draws=1000))


def test_projection_bias_zero_cases():
    rng = np.random.default_rng(0)
    ctx = build_design(rng.standard_normal((20, 40)))
    cov = ridge_covariance(ctx, 1 / 20)
    beta0 = rng.standard_normal(40)
    assert np.allclose(projection_bias(ctx, cov, beta0, beta0, 1.0), 0)
    octx = build_design(orthogonal_design(30, 10))
    ocov = ridge_covariance(octx, 1 / 30)
    vals = projection_bias(octx, ocov, rng.standard_normal(10), np.zeros(10), 1.0)
    assert np.allclose(vals, 0, atol=1e-10)


def test_projection_bias_histogram_scale():
    cfg = ScenarioConfig(model="M2", n=100, p=500, s0=3, b=1.0, reps=5, seed=1)
    hist = projection_bias_histogram(cfg, bins=40, range_=(-20, 20))
    rows = hist.rows()
    assert len(rows) == 40 and rows[0][0] == -20.0
    inside = sum(c for lo, hi, c in rows if lo >= -10 and hi <= 10)
    assert inside >= 0.9 * hist.values_total
