"""Sigma-free Gaussian null draws of the standardized Ridge noise.

A draw of ``a_j * Z_j`` for all j is ``Omega_jj^{-1/2} * (V diag(s/(s^2+lam)) W)_j``
with ``W ~ N_r(0, I)``; this costs O(p r) instead of a p x p Cholesky.

Draws are produced in fixed-size chunks, chunk ``c`` seeded from
``SeedSequence(seed, spawn_key=(c,))``. Any thread count therefore sees the
same numbers and reductions are assembled in chunk order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .design import DesignContext, RidgeCovariance

CHUNK = 1000


def resolve_threads(threads: int | None) -> int:
    """Explicit value, else ``HDINFER_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("HDINFER_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


@dataclass(frozen=True)
class MonteCarloConfig:
    draws: int = 10000
    seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        if self.draws < 1:
            raise ValueError("draws must be positive")

    def chunks(self):
        return [(c, min(CHUNK, self.draws - c * CHUNK)) for c in range(-(-self.draws // CHUNK))]


def null_block(
    ctx: DesignContext,
    cov: RidgeCovariance,
    seed: int,
    chunk: int,
    size: int,
    columns: np.ndarray,
) -> np.ndarray:
    """``|a_j Z_j|`` for ``size`` draws restricted to ``columns``."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))
    w = rng.standard_normal((size, ctx.r))
    load = ctx.v_mat[columns] * cov.shrink
    z = w @ load.T
    return np.abs(z) * cov.a_factors_unit[columns]


def map_null_chunks(ctx, cov, mc: MonteCarloConfig, reducer, columns=None) -> list:
    """Apply ``reducer`` to every chunk of null draws, results in chunk order."""
    if columns is None:
        columns = np.flatnonzero(ctx.testable & (cov.omega_diag > 0))
    columns = np.asarray(columns)

    def work(spec):
        c, size = spec
        return reducer(null_block(ctx, cov, mc.seed, c, size, columns))

    specs = mc.chunks()
    threads = resolve_threads(mc.threads)
    if threads == 1 or len(specs) == 1:
        return [work(s) for s in specs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, specs))


def null_draws(ctx, cov, mc: MonteCarloConfig, columns) -> np.ndarray:
    """Full ``draws x len(columns)`` matrix of ``|a_j Z_j|``."""
    return np.vstack(map_null_chunks(ctx, cov, mc, lambda block: block, columns))
