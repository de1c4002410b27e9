"""Dense tensor/matrix kernels used by every other module.

Index convention: column-major, i.e. the *first* index varies fastest.
All reshapes in this package go through :func:`reshape` (or pass
``order="F"`` to numpy directly) so that reinterpreting dimensions never
reorders the underlying flat data.  Serialization converts to row-major
at the file boundary (see :mod:`ttembed.fileformat`).

The SVD is a one-sided Jacobi implemented here rather than delegated to
LAPACK: matrices stay at desk scale (<= 4096 x 4096) and the rotation
sweep is easy to audit.  Column pairs are processed in round-robin
rounds so each round is a single vectorized rotation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ShapeError",
    "SvdResult",
    "reshape",
    "permute",
    "matmul",
    "svd",
    "numerical_rank",
]

DEFAULT_RANK_TOL = 1e-9


class ShapeError(ValueError):
    """Dimension bookkeeping violation (mismatched sizes, bad axes...)."""


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``m = u @ diag(s) @ vt`` with orthonormal u-columns/vt-rows."""

    u: np.ndarray
    singular_values: np.ndarray
    vt: np.ndarray


def reshape(t: np.ndarray, new_dims) -> np.ndarray:
    """Reinterpret dims of `t` without reordering its column-major data."""
    new_dims = tuple(int(d) for d in new_dims)
    if any(d <= 0 for d in new_dims):
        raise ShapeError(f"non-positive extent in {new_dims}")
    if int(np.prod(new_dims, dtype=np.int64)) != t.size:
        raise ShapeError(f"cannot reshape size {t.size} into {new_dims}")
    return np.reshape(t, new_dims, order="F")


def permute(t: np.ndarray, perm) -> np.ndarray:
    """Axis permutation: result[idx[perm]] == t[idx]."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(t.ndim)):
        raise ShapeError(f"{perm} is not a permutation of {t.ndim} axes")
    return np.transpose(t, perm)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("matmul expects 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dims differ: {a.shape} x {b.shape}")
    return a @ b


def _round_robin_rounds(n: int):
    """Pairings of the circle method: n-1 rounds of disjoint column pairs."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [
            (players[i], players[m - 1 - i])
            for i in range(m // 2)
            if players[i] >= 0 and players[m - 1 - i] >= 0
        ]
        rounds.append(
            (np.array([p for p, _ in pairs]), np.array([q for _, q in pairs]))
        )
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi_orthogonalize(a: np.ndarray, max_sweeps: int = 64, tol: float = 1e-15):
    """Rotate column pairs of `a` until mutually orthogonal.

    Returns (b, v) with b == a @ v and v orthogonal; the columns of b are
    (numerically) pairwise orthogonal.
    """
    n = a.shape[1]
    b = np.array(a, dtype=np.float64)
    v = np.eye(n)
    if n < 2:
        return b, v
    rounds = _round_robin_rounds(n)
    for _ in range(max_sweeps):
        worst = 0.0
        for ps, qs in rounds:
            bp, bq = b[:, ps], b[:, qs]
            alpha = np.einsum("ij,ij->j", bp, bp)
            beta = np.einsum("ij,ij->j", bq, bq)
            gamma = np.einsum("ij,ij->j", bp, bq)
            denom = np.sqrt(alpha * beta)
            live = denom > 0.0
            off = np.zeros_like(gamma)
            off[live] = np.abs(gamma[live]) / denom[live]
            worst = max(worst, off.max(initial=0.0))
            act = off > tol
            if not act.any():
                continue
            zeta = (beta[act] - alpha[act]) / (2.0 * gamma[act])
            # zeta == 0 needs the full 45-degree rotation, not a no-op
            sgn = np.where(zeta >= 0.0, 1.0, -1.0)
            t = sgn / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            pa, qa = ps[act], qs[act]
            bp, bq = b[:, pa], b[:, qa]
            b[:, pa] = c * bp - s * bq
            b[:, qa] = s * bp + c * bq
            vp, vq = v[:, pa], v[:, qa]
            v[:, pa] = c * vp - s * vq
            v[:, qa] = s * vp + c * vq
        if worst <= tol:
            break
    return b, v


def _fill_null_columns(u: np.ndarray, dead: np.ndarray) -> None:
    """Replace zero-norm columns of u with orthonormal complement vectors."""
    m = u.shape[0]
    live = [j for j in range(u.shape[1]) if not dead[j]]
    basis = [u[:, j] for j in live]
    e = 0
    for j in np.flatnonzero(dead):
        while True:
            if e >= m:
                raise RuntimeError("failed to complete orthonormal basis")
            cand = np.zeros(m)
            cand[e] = 1.0
            e += 1
            for w in basis:
                cand -= (w @ cand) * w
            nrm = np.linalg.norm(cand)
            if nrm > 0.5:  # canonical vector not (nearly) in the span
                cand /= nrm
                break
        u[:, j] = cand
        basis.append(cand)


def svd(m: np.ndarray) -> SvdResult:
    """Thin SVD by one-sided Jacobi.

    Deterministic sign convention: the largest-magnitude entry of every
    u-column is made positive.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError("svd expects a matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("svd input contains non-finite entries")
    flipped = m.shape[0] < m.shape[1]
    a = m.T if flipped else m
    b, v = _jacobi_orthogonalize(a)
    s = np.linalg.norm(b, axis=0)
    order = np.argsort(-s, kind="stable")
    s = s[order]
    b = b[:, order]
    v = v[:, order]
    dead = s == 0.0
    u = np.where(dead, 1.0, s)[None, :]
    u = b / u
    if dead.any():
        _fill_null_columns(u, dead)
    vt = v.T
    if flipped:
        u, vt = vt.T, u.T
    # sign convention on u columns
    piv = np.argmax(np.abs(u), axis=0)
    flip = u[piv, np.arange(u.shape[1])] < 0.0
    u[:, flip] *= -1.0
    vt[flip, :] *= -1.0
    return SvdResult(u=u, singular_values=s, vt=vt)


def numerical_rank(m: np.ndarray, tol_factor: float = DEFAULT_RANK_TOL) -> int:
    """Count singular values above tol_factor * sigma_max * max(rows, cols)."""
    if tol_factor <= 0.0:
        raise ValueError("tol_factor must be positive")
    s = svd(m).singular_values
    if s.size == 0 or s[0] == 0.0:
        return 0
    thresh = tol_factor * s[0] * max(m.shape)
    return int(np.count_nonzero(s > thresh))
