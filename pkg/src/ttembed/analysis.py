"""Verification instruments: full-rank checks, initialization statistics,
and compression-vs-rank tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import numerical_rank
from .planning import FactorizationPlan, plan_embedding
from .ttmatrix import (
    CompressionStats,
    core_parameter_count,
    delta_identity_tt,
    glorot_tt,
    random_tt,
)

RANK_CHECK_DIM_CAP = 4096


@dataclass(frozen=True)
class RankReport:
    label: str
    row_factors: tuple
    col_factors: tuple
    ranks: tuple
    parameters: int
    rows: int
    cols: int
    numerical_rank: int
    tol_factor: float

    @property
    def max_possible_rank(self) -> int:
        return min(self.rows, self.cols)

    @property
    def full_rank(self) -> bool:
        return self.numerical_rank == self.max_possible_rank


@dataclass(frozen=True)
class InitReport:
    rank: int
    draws: int
    sample_count: int
    target_var: float
    mean: float
    variance: float
    excess_kurtosis: float


def _rank_report(label, m, tol_factor) -> RankReport:
    dense = m.materialize()
    return RankReport(
        label=label,
        row_factors=m.plan.row_factors,
        col_factors=m.plan.col_factors,
        ranks=m.bond_ranks,
        parameters=core_parameter_count(m.cores),
        rows=dense.shape[0],
        cols=dense.shape[1],
        numerical_rank=numerical_rank(dense, tol_factor),
        tol_factor=tol_factor,
    )


def check_full_rank(plan: FactorizationPlan, seeds, tol_factor: float = 1e-9):
    """Rank reports for the deterministic delta-core witness plus one
    random initialization per seed.  The witness must always be full
    rank; random draws are full rank except on a measure-zero set."""
    rows, cols = plan.padded_rows, plan.cols
    if max(rows, cols) > RANK_CHECK_DIM_CAP:
        raise MemoryError(f"rank check capped at {RANK_CHECK_DIM_CAP} per dim")
    reports = [_rank_report("delta-witness", delta_identity_tt(plan), tol_factor)]
    for seed in seeds:
        reports.append(
            _rank_report(f"seed={seed}", random_tt(plan, 1.0, seed), tol_factor)
        )
    return reports


def pooled_moments(values: np.ndarray):
    """(mean, variance, excess kurtosis) of a pooled sample."""
    mean = float(values.mean())
    centered = values - mean
    m2 = float(np.mean(centered**2))
    m4 = float(np.mean(centered**4))
    kurt = m4 / m2**2 - 3.0 if m2 > 0.0 else 0.0
    return mean, m2, kurt


def init_statistics(
    plan: FactorizationPlan,
    rank_ladder,
    draws: int,
    sigma: float = 1.0,
    seed: int = 0,
):
    """Materialized-entry statistics of the calibrated initializer, one
    InitReport per rank in the ladder, pooling entries across draws."""
    if draws < 1:
        raise ValueError("draws must be >= 1")
    reports = []
    for t, rank in enumerate(rank_ladder):
        p = FactorizationPlan(
            row_factors=plan.row_factors,
            col_factors=plan.col_factors,
            requested_rows=plan.requested_rows,
            ranks=(int(rank),) * (plan.n_cores - 1),
        )
        chunks = [
            glorot_tt(p, seed + t * draws + d, std=sigma).materialize().ravel()
            for d in range(draws)
        ]
        pooled = np.concatenate(chunks)
        mean, var, kurt = pooled_moments(pooled)
        reports.append(
            InitReport(
                rank=int(rank),
                draws=draws,
                sample_count=pooled.size,
                target_var=sigma**2,
                mean=mean,
                variance=var,
                excess_kurtosis=kurt,
            )
        )
    return reports


@dataclass(frozen=True)
class CompressionRow:
    rank: int
    tt_params: int
    dense_params: int
    ratio: float
    tied_ratio: float
    lowrank_d: int
    lowrank_max_rank: int


def compression_table(vocab: int, dim: int, n: int, rank_ladder):
    """For each rank: TT parameter count, compression ratios, and the
    equal-budget low-rank baseline (its inner dim D and matrix rank cap)."""
    rows = []
    for rank in rank_ladder:
        plan = plan_embedding(vocab, dim, n, int(rank))
        tt_params = sum(
            r_in * i * j * r_out
            for r_in, i, j, r_out in zip(
                (1,) + plan.ranks,
                plan.row_factors,
                plan.col_factors,
                plan.ranks + (1,),
            )
        )
        stats = CompressionStats.from_counts(tt_params, plan.padded_rows * plan.cols)
        d = tt_params // (plan.padded_rows + plan.cols)
        rows.append(
            CompressionRow(
                rank=int(rank),
                tt_params=tt_params,
                dense_params=stats.dense_params,
                ratio=stats.ratio,
                tied_ratio=stats.tied_ratio,
                lowrank_d=d,
                lowrank_max_rank=min(d, plan.padded_rows, plan.cols),
            )
        )
    return rows
