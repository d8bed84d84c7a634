"""Synthetic experiments with i.i.d. (M1) and equicorrelated (M2) Gaussian
designs: replicated testing runs and their aggregate error/power metrics."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._montecarlo import MonteCarloConfig, null_draws, resolve_threads
from .design import build_design, ridge_covariance
from .inference import (
    GroupHypothesis,
    corrected_fit,
    group_pvalue,
    group_statistic,
    single_pvalues,
)
from .lasso import scaled_lasso_fit
from .multiplicity import adjust_pvalues, simulate_fz

logger = logging.getLogger(__name__)

# spawn-key domains, so design, noise and Monte Carlo streams never overlap
_DESIGN, _NOISE, _NULL = 0, 1, 2


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    model: str = "M1"
    n: int = 100
    p: int = 500
    s0: int = 3
    b: float = 1.0
    rho: float | None = None
    sigma: float = 1.0
    reps: int = 100
    alpha: float = 0.05
    seed: int = 0
    mc_draws: int = 10000
    groups: tuple = ()
    xi: float = 0.05
    zeta: float = 0.0
    threads: int | None = None

    def __post_init__(self):
        model = self.model.upper()
        if model not in ("M1", "M2"):
            raise ValueError(f"model must be M1 or M2, got {self.model!r}")
        object.__setattr__(self, "model", model)
        if self.rho is None:
            object.__setattr__(self, "rho", 0.0 if model == "M1" else 0.8)
        if not 0 <= self.rho < 1:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if model == "M1" and self.rho != 0:
            raise ValueError("model M1 has rho = 0")
        if self.n < 2 or self.p < 1:
            raise ValueError("need n >= 2 and p >= 1")
        if not 0 <= self.s0 <= self.p:
            raise ValueError(f"s0 must lie in [0, p], got {self.s0}")
        if self.s0 > 0 and not self.b > 0:
            raise ValueError("b must be positive")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        groups = tuple(self.groups)
        for g in groups:
            g.check(self.p)
        object.__setattr__(self, "groups", groups)

    @property
    def beta0(self) -> np.ndarray:
        beta = np.zeros(self.p)
        beta[: self.s0] = self.b
        return beta

    def stream(self, *key) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=key))

    def null_seed(self) -> int:
        ss = np.random.SeedSequence(self.seed, spawn_key=(_NULL,))
        return int(ss.generate_state(1)[0])


def generate_design(cfg: ScenarioConfig, seed=None) -> np.ndarray:
    """Rows i.i.d. ``N_p(0, Sigma)`` with equicorrelation ``rho`` off the diagonal.

    Uses one shared factor per row: ``sqrt(rho) g_i + sqrt(1 - rho) h_ij``.
    """
    if seed is None:
        rng = cfg.stream(_DESIGN)
    else:
        rng = np.random.default_rng(seed)
    own = rng.standard_normal((cfg.n, cfg.p))
    if cfg.rho == 0:
        return own
    shared = rng.standard_normal((cfg.n, 1))
    return np.sqrt(cfg.rho) * shared + np.sqrt(1.0 - cfg.rho) * own


def snr(X: np.ndarray, beta0: np.ndarray, sigma: float) -> float:
    """``||X beta0|| / (sqrt(n) sigma)``."""
    return float(np.linalg.norm(X @ beta0) / (np.sqrt(X.shape[0]) * sigma))


@dataclass
class ReplicateRecord:
    rep: int
    sigma_hat: float = float("nan")
    rejected_raw: int = 0
    false_raw: int = 0
    true_raw: int = 0
    rejected_fwer: int = 0
    false_fwer: int = 0
    true_fwer: int = 0
    group_pvalues: list = field(default_factory=list)
    error: str | None = None


@dataclass
class SimulationReport:
    config: dict
    snr: float
    avg_type1: float
    avg_power: float
    fwer: float
    fwer_power: float
    v_distribution: list
    group_rejection: list
    group_type1: float | None
    group_power: float | None
    failed_reps: int
    replicates: list

    def to_dict(self) -> dict:
        return asdict(self)


class _Pipeline:
    """Everything that depends on the fixed design only, computed once."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.X = generate_design(cfg)
        self.ctx = build_design(self.X)
        self.cov = ridge_covariance(self.ctx, 1.0 / cfg.n)
        self.mc = MonteCarloConfig(cfg.mc_draws, cfg.null_seed(), cfg.threads)
        self.fz = simulate_fz(self.ctx, self.cov, self.mc)
        self.group_draws = []
        for k, g in enumerate(cfg.groups):
            cols = np.asarray([j for j in g.indices if self.ctx.testable[j]])
            mc_g = MonteCarloConfig(cfg.mc_draws, self.mc.seed + 1 + k, cfg.threads)
            self.group_draws.append(null_draws(self.ctx, self.cov, mc_g, cols))
        self.beta0 = cfg.beta0
        self.signal = self.X @ self.beta0

    def replicate(self, rep: int) -> ReplicateRecord:
        cfg = self.cfg
        rec = ReplicateRecord(rep)
        rng = cfg.stream(_NOISE, rep)
        y = self.signal + cfg.sigma * rng.standard_normal(cfg.n)
        try:
            init = scaled_lasso_fit(self.ctx, y)
            fit = corrected_fit(self.ctx, self.cov, init, y, xi=cfg.xi)
        except Exception as exc:  # noqa: BLE001 - recorded per replicate
            rec.error = f"{type(exc).__name__}: {exc}"
            return rec
        raw = single_pvalues(fit)
        adj = adjust_pvalues(raw, self.fz, cfg.zeta)
        active = self.beta0 != 0
        rej_raw = raw <= cfg.alpha
        rej_adj = adj <= cfg.alpha
        rec.sigma_hat = init.sigma_hat
        rec.rejected_raw = int(rej_raw.sum())
        rec.false_raw = int((rej_raw & ~active).sum())
        rec.true_raw = int((rej_raw & active).sum())
        rec.rejected_fwer = int(rej_adj.sum())
        rec.false_fwer = int((rej_adj & ~active).sum())
        rec.true_fwer = int((rej_adj & active).sum())
        for g, draws in zip(cfg.groups, self.group_draws):
            rec.group_pvalues.append(
                group_pvalue(fit, self.cov, self.ctx, g, draws=draws)
            )
        return rec


def run_scenario(cfg: ScenarioConfig) -> SimulationReport:
    """Replicate the full testing pipeline on one fixed design."""
    pipe = _Pipeline(cfg)
    threads = resolve_threads(cfg.threads)
    if threads == 1:
        records = [pipe.replicate(r) for r in range(cfg.reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(pipe.replicate, range(cfg.reps)))

    failed = [r for r in records if r.error is not None]
    if len(failed) > 0.01 * cfg.reps:
        raise SimulationError(
            f"{len(failed)} of {cfg.reps} replicates failed; first: {failed[0].error}"
        )
    ok = [r for r in records if r.error is None]
    m = len(ok)
    s0, p = cfg.s0, cfg.p
    null_count = p - s0

    def rate(total, per):
        return total / (m * per) if per > 0 else None

    avg_type1 = rate(sum(r.false_raw for r in ok), null_count)
    avg_power = rate(sum(r.true_raw for r in ok), s0)
    fwer_power = rate(sum(r.true_fwer for r in ok), s0)
    v = [r.false_fwer for r in ok]
    v_dist = np.bincount(v, minlength=1).tolist() if v else [0]
    fwer = 1.0 - v_dist[0] / m

    active = set(range(s0))
    group_rows = []
    for k, g in enumerate(cfg.groups):
        hits = sum(r.group_pvalues[k] <= cfg.alpha for r in ok)
        group_rows.append(
            {
                "label": g.label,
                "size": len(g.indices),
                "null": not (set(g.indices) & active),
                "rejection_rate": hits / m,
            }
        )
    nulls = [row["rejection_rate"] for row in group_rows if row["null"]]
    alts = [row["rejection_rate"] for row in group_rows if not row["null"]]

    config = asdict(cfg)
    config["groups"] = [
        {"label": g.label, "indices": [i + 1 for i in g.indices]} for g in cfg.groups
    ]
    config.pop("threads")
    return SimulationReport(
        config=config,
        snr=snr(pipe.X, pipe.beta0, cfg.sigma),
        avg_type1=avg_type1,
        avg_power=avg_power,
        fwer=fwer,
        fwer_power=fwer_power,
        v_distribution=v_dist,
        group_rejection=group_rows,
        group_type1=float(np.mean(nulls)) if nulls else None,
        group_power=float(np.mean(alts)) if alts else None,
        failed_reps=len(failed),
        replicates=[asdict(r) for r in records],
    )


def projection_bias(ctx, cov, beta_init, beta0, sigma) -> np.ndarray:
    """``a_j(sigma) * sum_{k != j} (P_X)_jk (beta_init_k - beta0_k)``."""
    err = np.asarray(beta_init, dtype=float) - np.asarray(beta0, dtype=float)
    off = ctx.project(err) - ctx.projection_diag * err
    a = np.where(ctx.testable, cov.a_factors(sigma, ctx.n), 0.0)
    return a * off


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    values_total: int

    def rows(self):
        return [
            (float(lo), float(hi), int(c))
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts)
        ]


def projection_bias_histogram(cfg: ScenarioConfig, bins: int = 50, range_=None) -> Histogram:
    """Binned projection bias over all coefficients and replicates.

    ``beta0`` is mapped to the standardized scale before comparing with
    the Scaled Lasso coefficients, and the true sigma is used.
    """
    X = generate_design(cfg)
    ctx = build_design(X)
    cov = ridge_covariance(ctx, 1.0 / cfg.n)
    beta0_std = cfg.beta0 * ctx.col_scales
    signal = X @ cfg.beta0
    values = []
    for rep in range(cfg.reps):
        y = signal + cfg.sigma * cfg.stream(_NOISE, rep).standard_normal(cfg.n)
        init = scaled_lasso_fit(ctx, y)
        values.append(projection_bias(ctx, cov, init.beta_init, beta0_std, cfg.sigma)[ctx.testable])
    vals = np.concatenate(values)
    counts, edges = np.histogram(vals, bins=bins, range=range_)
    return Histogram(edges, counts, vals.size)
