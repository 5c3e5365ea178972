"""Competitive adaptive reweighted sampling (CARS) wavelength selection.

Each CARS run (Li et al. 2009) repeats Monte-Carlo iterations: fit a PLS
model on a random calibration subset of the currently retained bands,
force out the weakest bands down to an exponentially decreasing keep
count, then resample the survivors with probability proportional to
|coefficient| ("survival of the fittest"). The retained set with the
lowest RMSECV over all iterations wins.

A single run is noisy, so the consensus operation repeats it with derived
seeds and keeps the bands selected in more than half the loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chemometrics import DataMatrix, _pls1_core, rmsecv_curve
from .errors import ValidationError
from .seeding import derive_seed


@dataclass(frozen=True)
class CarsConfig:
    """Knobs of one CARS execution.

    ``n_mc_runs`` Monte-Carlo iterations per run, each fitting on a
    ``calib_ratio`` share of the samples; the exponentially decreasing
    schedule starts at ``start_keep_ratio * p`` bands and ends at
    ``end_keep_count``. ``ars_sampling=False`` replaces the reweighted
    draw by deterministic top-|coefficient| truncation (ablation).
    """

    n_mc_runs: int = 50
    calib_ratio: float = 0.8
    k_max: int = 10
    folds: int = 5
    start_keep_ratio: float = 0.9
    end_keep_count: int = 2
    ars_sampling: bool = True

    def __post_init__(self):
        if not 0.0 < self.calib_ratio < 1.0:
            raise ValidationError("calib_ratio must be in (0, 1)")
        if self.n_mc_runs < 10:
            raise ValidationError("n_mc_runs must be >= 10")
        if self.end_keep_count < 2:
            raise ValidationError("end_keep_count must be >= 2")
        if not 0.0 < self.start_keep_ratio <= 1.0:
            raise ValidationError("start_keep_ratio must be in (0, 1]")
        if self.k_max < 1:
            raise ValidationError("k_max must be >= 1")
        if self.folds < 2:
            raise ValidationError("folds must be >= 2")


@dataclass(frozen=True)
class CarsRunResult:
    """Trace of one CARS execution."""

    retained_sets: tuple     # per-iteration retained band indices
    rmsecv: tuple            # per-iteration RMSECV of the retained set
    best_iteration: int      # argmin RMSECV (first on ties)
    selected: tuple          # retained set at the best iteration
    schedule: tuple          # EDF keep counts
    seed: int
    cv_seed: int             # fold assignment used for every iteration


@dataclass(frozen=True)
class CarsConsensus:
    """Per-band selection frequency over repeated runs and the >50% set."""

    frequencies: tuple
    consensus: tuple
    n_loops: int
    master_seed: int
    columns: tuple


def edf_schedule(p: int, n_mc_runs: int, cfg: CarsConfig) -> np.ndarray:
    """Exponentially decreasing keep counts for ``n_mc_runs`` iterations.

    keep_i = round(p * a * exp(-k*i)) with a, k solved from the endpoints
    keep_1 = p * start_keep_ratio and keep_N = end_keep_count; clamped
    below by end_keep_count and forced non-increasing.
    """
    if p < cfg.end_keep_count:
        raise ValidationError(
            f"{p} variables cannot support end_keep_count = {cfg.end_keep_count}"
        )
    if n_mc_runs < 2:
        raise ValidationError("schedule needs at least 2 iterations")
    start = p * cfg.start_keep_ratio
    if round(start) <= cfg.end_keep_count:
        return np.full(n_mc_runs, cfg.end_keep_count, dtype=int)
    k = math.log(start / cfg.end_keep_count) / (n_mc_runs - 1)
    a = (start / p) * math.exp(k)
    i = np.arange(1, n_mc_runs + 1)
    keep = np.rint(p * a * np.exp(-k * i)).astype(int)
    keep = np.clip(keep, cfg.end_keep_count, p)
    return np.minimum.accumulate(keep)


def cars_run(X: DataMatrix, y, cfg: CarsConfig = CarsConfig(), seed: int = 0) -> CarsRunResult:
    """One seeded CARS execution over all columns of ``X``."""
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.values.shape
    if y.size != n:
        raise ValidationError("y length must match row count")
    if p < cfg.end_keep_count:
        raise ValidationError(f"need at least {cfg.end_keep_count} columns")

    rng = np.random.default_rng(seed)
    cv_seed = int(rng.integers(2 ** 31))
    schedule = edf_schedule(p, cfg.n_mc_runs, cfg)
    n_calib = max(3, int(round(cfg.calib_ratio * n)))
    n_calib = min(n_calib, n - 1)

    retained = np.arange(p)
    retained_sets = []
    rmsecv_values = []

    for keep in schedule:
        calib = rng.permutation(n)[:n_calib]
        k = int(min(cfg.k_max, retained.size, n_calib - 1))
        core = _pls1_core(X.values[np.ix_(calib, retained)], y[calib], k, scale=True)
        if core.k_eff == 0:
            coef = np.zeros(retained.size)
        else:
            coef = np.abs(core.coefficient_path()[:, -1])

        # forced removal: EDF keep count of the strongest coefficients,
        # ties broken by (stable) column order
        keep = int(min(keep, retained.size))
        order = np.argsort(-coef, kind="stable")[:keep]
        survivors = retained[np.sort(order)]
        weights = coef[np.sort(order)]

        if cfg.ars_sampling:
            total = weights.sum()
            prob = weights / total if total > 0 else np.full(keep, 1.0 / keep)
            draws = rng.choice(keep, size=keep, replace=True, p=prob)
            new_retained = np.unique(survivors[draws])
        else:
            new_retained = survivors
        if new_retained.size < 2:
            # ARS collapsed the pool; clamp to the 2 strongest survivors
            top2 = np.argsort(-weights, kind="stable")[:2]
            new_retained = np.unique(survivors[top2])

        retained = new_retained
        curve = rmsecv_curve(
            X.values[:, retained], y,
            k_max=min(cfg.k_max, retained.size), folds=cfg.folds, seed=cv_seed,
        )
        retained_sets.append(tuple(int(i) for i in retained))
        rmsecv_values.append(float(curve.min()))

    best = int(np.argmin(rmsecv_values))
    return CarsRunResult(
        retained_sets=tuple(retained_sets),
        rmsecv=tuple(rmsecv_values),
        best_iteration=best,
        selected=retained_sets[best],
        schedule=tuple(int(v) for v in schedule),
        seed=seed,
        cv_seed=cv_seed,
    )


def cars_consensus(
    X: DataMatrix,
    y,
    cfg: CarsConfig = CarsConfig(),
    n_loops: int = 100,
    master_seed: int = 0,
) -> CarsConsensus:
    """Repeat :func:`cars_run` and keep bands selected in > 50% of loops.

    Loop seeds derive deterministically from ``(master_seed, loop
    index)``, so the frequencies do not depend on execution order.
    """
    if n_loops < 2:
        raise ValidationError("n_loops must be >= 2")
    counts = np.zeros(X.n_cols, dtype=int)
    for loop in range(n_loops):
        result = cars_run(X, y, cfg, seed=derive_seed(master_seed, "loop", loop))
        counts[list(result.selected)] += 1
    freq = counts / n_loops
    consensus = tuple(int(j) for j in np.flatnonzero(freq > 0.5))
    return CarsConsensus(
        frequencies=tuple(float(f) for f in freq),
        consensus=consensus,
        n_loops=n_loops,
        master_seed=master_seed,
        columns=X.columns,
    )
