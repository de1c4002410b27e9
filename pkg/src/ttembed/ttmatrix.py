"""Tensor-train representation of a (padded_rows x cols) matrix.

A TTMatrix is a chain of 4-way cores G^(k) of shape
(R_{k-1}, I_k, J_k, R_k) with R_0 = R_N = 1.  Entry (i, j) of the
represented matrix is the chain product of the slices G^(k)[:, i_k, j_k, :]
where (i_1..i_N) and (j_1..j_N) are the mixed-radix digits of i and j
(first digit fastest).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from math import prod

import numpy as np

from .indexing import MixedRadix
from .linalg import ShapeError, numerical_rank, reshape, svd
from .planning import FactorizationPlan

DEFAULT_MATERIALIZE_CAP = 1 << 24
MATERIALIZE_CAP_ENV = "TTEMBED_MATERIALIZE_CAP"
TT_SVD_TRUNCATION_TOL = 1e-12


def materialize_cap() -> int:
    """Entry budget for materialize(); overridable via environment."""
    raw = os.environ.get(MATERIALIZE_CAP_ENV)
    return int(raw) if raw else DEFAULT_MATERIALIZE_CAP


def core_parameter_count(cores) -> int:
    return sum(c.size for c in cores)


@dataclass(frozen=True)
class CompressionStats:
    tt_params: int
    dense_params: int
    ratio: float
    tied_ratio: float

    @classmethod
    def from_counts(cls, tt_params: int, dense_params: int) -> "CompressionStats":
        ratio = Fraction(dense_params, tt_params)
        tied = Fraction(dense_params, 2 * tt_params)
        return cls(
            tt_params=tt_params,
            dense_params=dense_params,
            ratio=float(ratio),
            tied_ratio=float(tied),
        )


def _validate_chain(cores, plan: FactorizationPlan, ring: bool) -> None:
    if len(cores) != plan.n_cores:
        raise ShapeError(f"expected {plan.n_cores} cores, got {len(cores)}")
    for k, c in enumerate(cores):
        if c.ndim != 4:
            raise ShapeError(f"core {k} is not 4-way")
        if c.shape[1] != plan.row_factors[k] or c.shape[2] != plan.col_factors[k]:
            raise ShapeError(
                f"core {k} mode dims {c.shape[1:3]} disagree with plan "
                f"({plan.row_factors[k]}, {plan.col_factors[k]})"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError(f"core {k} contains non-finite entries")
    for k in range(len(cores) - 1):
        if cores[k].shape[3] != cores[k + 1].shape[0]:
            raise ShapeError(f"rank mismatch between cores {k} and {k + 1}")
    first, last = cores[0].shape[0], cores[-1].shape[3]
    if ring:
        if first != last:
            raise ShapeError(f"ring closure violated: R_0={first}, R_N={last}")
    elif first != 1 or last != 1:
        raise ShapeError(f"boundary ranks must be 1, got {first} and {last}")


@dataclass
class TTMatrix:
    cores: list
    plan: FactorizationPlan

    def __post_init__(self):
        self.cores = [np.asarray(c, dtype=np.float64) for c in self.cores]
        _validate_chain(self.cores, self.plan, ring=False)

    @property
    def bond_ranks(self) -> tuple:
        """Actual ranks of the chain (may be below plan.ranks after tt_svd)."""
        return tuple(c.shape[3] for c in self.cores[:-1])

    @property
    def shape(self) -> tuple:
        return (self.plan.padded_rows, self.plan.cols)

    def _digits(self, i: int, j: int):
        row_radix = MixedRadix(self.plan.row_factors)
        col_radix = MixedRadix(self.plan.col_factors)
        return row_radix.to_multi(i), col_radix.to_multi(j)

    def element(self, i: int, j: int) -> float:
        """Entry (i, j) as the scalar chain product of core slices."""
        ii, jj = self._digits(i, j)
        acc = self.cores[0][:, ii[0], jj[0], :]
        for k in range(1, len(self.cores)):
            acc = acc @ self.cores[k][:, ii[k], jj[k], :]
        return float(acc[0, 0])

    def row(self, i: int) -> np.ndarray:
        """Row i by sequential contraction; output entry j has j_1 fastest."""
        ii = MixedRadix(self.plan.row_factors).to_multi(i)
        acc = self.cores[0][0, ii[0], :, :]  # (J_1, R_1)
        for k in range(1, len(self.cores)):
            g = self.cores[k][:, ii[k], :, :]  # (R_{k-1}, J_k, R_k)
            p, r = acc.shape
            jk, rk = g.shape[1], g.shape[2]
            nxt = (acc @ g.reshape(r, jk * rk)).reshape(p, jk, rk)
            acc = nxt.transpose(1, 0, 2).reshape(jk * p, rk)
        return np.ascontiguousarray(acc[:, 0])

    def materialize(self, cap: int | None = None) -> np.ndarray:
        """Full dense (padded_rows x cols) matrix; guarded by an entry cap."""
        cap = materialize_cap() if cap is None else cap
        rows, cols = self.shape
        if rows * cols > cap:
            raise MemoryError(
                f"materialize of {rows}x{cols} exceeds cap of {cap} entries"
            )
        acc = self.cores[0][0]  # (I_1, J_1, R_1)
        for core in self.cores[1:]:
            acc = np.tensordot(acc, core, axes=([-1], [0]))
        acc = acc[..., 0]  # dims (I_1, J_1, ..., I_N, J_N)
        n = len(self.cores)
        perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
        return reshape(np.transpose(acc, perm), (rows, cols))

    def stats(self) -> CompressionStats:
        return CompressionStats.from_counts(
            core_parameter_count(self.cores), self.plan.padded_rows * self.plan.cols
        )


def random_tt(plan: FactorizationPlan, std: float, seed: int) -> TTMatrix:
    """Cores with i.i.d. Normal(0, std^2) entries from a seeded generator."""
    if not std > 0.0:
        raise ValueError("std must be positive")
    rng = np.random.default_rng(seed)
    ranks = (1,) + plan.ranks + (1,)
    cores = [
        rng.normal(0.0, std, size=(ranks[k], plan.row_factors[k], plan.col_factors[k], ranks[k + 1]))
        for k in range(plan.n_cores)
    ]
    return TTMatrix(cores=cores, plan=plan)


def glorot_tt(plan: FactorizationPlan, seed: int, std: float | None = None) -> TTMatrix:
    """Variance-calibrated init: materialized entries have variance std^2.

    Default std is the Glorot target sqrt(2 / (padded_rows + cols)).  The
    product of a chain of independent cores has entry variance
    (per-core variance)^N * prod(ranks), so each core gets the N-th root
    of std^2 / prod(ranks).
    """
    if std is None:
        std = float(np.sqrt(2.0 / (plan.padded_rows + plan.cols)))
    if not std > 0.0:
        raise ValueError("std must be positive")
    big_sigma_sq = float(prod(plan.ranks))
    core_std = (std**2 / big_sigma_sq) ** (1.0 / (2 * plan.n_cores))
    return random_tt(plan, core_std, seed)


def delta_identity_tt(plan: FactorizationPlan) -> TTMatrix:
    """Rank-1 chain of Kronecker-delta cores; materializes to the
    rectangular identity, which has maximal matrix rank."""
    cores = []
    for ik, jk in zip(plan.row_factors, plan.col_factors):
        c = np.zeros((1, ik, jk, 1))
        d = min(ik, jk)
        c[0, range(d), range(d), 0] = 1.0
        cores.append(c)
    return TTMatrix(cores=cores, plan=plan)


def tt_svd(dense: np.ndarray, plan: FactorizationPlan) -> TTMatrix:
    """Compress a dense (padded_rows x cols) matrix by sequential
    truncated SVDs; ranks are capped at plan.ranks and at the numerical
    rank of each unfolding (tiny singular values are always dropped)."""
    dense = np.asarray(dense, dtype=np.float64)
    n = plan.n_cores
    if dense.shape != (plan.padded_rows, plan.cols):
        raise ShapeError(
            f"matrix shape {dense.shape} disagrees with plan "
            f"({plan.padded_rows}, {plan.cols})"
        )
    t = reshape(dense, plan.row_factors + plan.col_factors)
    interleave = [ax for k in range(n) for ax in (k, n + k)]
    rest = np.transpose(t, interleave)
    cores = []
    r = 1
    for k in range(n - 1):
        ik, jk = plan.row_factors[k], plan.col_factors[k]
        mat = reshape(rest, (r * ik * jk, rest.size // (r * ik * jk)))
        res = svd(mat)
        smax = res.singular_values[0] if res.singular_values.size else 0.0
        thresh = TT_SVD_TRUNCATION_TOL * smax * max(mat.shape)
        nrank = int(np.count_nonzero(res.singular_values > thresh))
        if nrank == 0:  # zero unfolding: keep the chain alive with zero cores
            cores.append(np.zeros((r, ik, jk, 1)))
            rest = np.zeros((1, mat.shape[1]))
            r = 1
            continue
        rank = min(plan.ranks[k], nrank)
        cores.append(reshape(res.u[:, :rank], (r, ik, jk, rank)))
        rest = res.singular_values[:rank, None] * res.vt[:rank, :]
        r = rank
    cores.append(reshape(rest, (r, plan.row_factors[-1], plan.col_factors[-1], 1)))
    return TTMatrix(cores=cores, plan=plan)
