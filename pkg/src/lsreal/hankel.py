"""Finite Hankel blocks of a Markov family and numerical rank utilities.

The block ``H(L, M)`` collects the Markov parameters with row index
``(v, i)`` -- ``v`` a word of length at most ``L``, ``i`` a stacked output
component -- and column index ``(w, j)`` -- ``w`` a word of length at most
``M``, ``j`` a series index.  The entry depends on ``(v, w)`` only through
the concatenation ``wv``, which is what lets a realization be read off a
factorization of the block.

Assembly is vectorized through word-rank arithmetic: the rank of ``wv`` in
the length-lexicographic order is ``offset(|w|+|v|) + val(w)*D^|v| + val(v)``,
so the whole block is one fancy-indexing gather from the family table.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import InsufficientOrder, SvdFailure
from .lss import MarkovFamily, SeriesIndex
from .words import Alphabet, Word, enumerate_words, level_offsets, word_count

__all__ = [
    "RowIndexing",
    "ColIndexing",
    "HankelBlock",
    "RankTolerance",
    "enumerate_words",
    "build_block",
    "numerical_rank",
    "find_stable_N",
]

# Blocks whose smaller side exceeds this use the randomized range finder;
# below it plain LAPACK is faster and exact.
_DENSE_LIMIT = 1024
_SKETCH_START = 64
_SKETCH_SEED = 0x1A55


@dataclass(frozen=True)
class RankTolerance:
    """Threshold policy for counting singular values.

    With neither field set, the threshold is the standard
    ``sigma_max * max(rows, cols) * machine epsilon``.  ``absolute`` is an
    absolute floor on singular values; ``relative`` is a multiple of the
    largest singular value.  If both are set the larger threshold wins.
    """

    absolute: Optional[float] = None
    relative: Optional[float] = None

    def threshold(self, smax: float, shape: tuple[int, int]) -> float:
        if self.absolute is None and self.relative is None:
            return smax * max(shape) * np.finfo(float).eps
        th = 0.0
        if self.absolute is not None:
            th = max(th, self.absolute)
        if self.relative is not None:
            th = max(th, self.relative * smax)
        return th


def coerce_tol(tol: Union[RankTolerance, float, None]) -> RankTolerance:
    """``None`` -> default policy, plain float -> relative tolerance."""
    if tol is None:
        return RankTolerance()
    if isinstance(tol, RankTolerance):
        return tol
    return RankTolerance(relative=float(tol))


@dataclass(frozen=True)
class RowIndexing:
    """Row order of a Hankel block: words length-lexicographic, the stacked
    output component ``i`` (1-based, up to ``p*D``) ascending within a word."""

    L: int
    rows: tuple[tuple[Word, int], ...]


@dataclass(frozen=True)
class ColIndexing:
    """Column order: words length-lexicographic, series indices in canonical
    order within a word."""

    M: int
    cols: tuple[tuple[Word, SeriesIndex], ...]


@dataclass(frozen=True)
class HankelBlock:
    row_ix: RowIndexing
    col_ix: ColIndexing
    data: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def _concat_rank_grid(D: int, L: int, M: int) -> np.ndarray:
    """``grid[v, w] = rank(w . v)`` for all row words ``v`` (length <= L) and
    column words ``w`` (length <= M)."""
    offs = level_offsets(D, L + M)
    r_offs = level_offsets(D, L)
    c_offs = level_offsets(D, M)
    grid = np.empty((int(r_offs[-1]), int(c_offs[-1])), dtype=np.int64)
    for kv in range(L + 1):
        v_vals = np.arange(D**kv, dtype=np.int64)
        for kw in range(M + 1):
            w_vals = np.arange(D**kw, dtype=np.int64)
            grid[r_offs[kv] : r_offs[kv + 1], c_offs[kw] : c_offs[kw + 1]] = (
                offs[kv + kw] + w_vals[None, :] * D**kv + v_vals[:, None]
            )
    return grid


def assemble_table_block(values: np.ndarray, out_dim: int, D: int, L: int, M: int) -> np.ndarray:
    """Dense block from a series table ``values`` of shape ``(J, W, out_dim)``.

    Row ``(v, i)`` sits at position ``rank(v)*out_dim + i`` and column
    ``(w, j)`` at ``rank(w)*J + j``.
    """
    grid = _concat_rank_grid(D, L, M)
    gathered = values[:, grid, :]  # (J, n_v, n_w, out_dim)
    n_v, n_w = grid.shape
    J = values.shape[0]
    return np.ascontiguousarray(
        gathered.transpose(1, 3, 2, 0).reshape(n_v * out_dim, n_w * J)
    )


def build_block(mk: MarkovFamily, L: int, M: int) -> HankelBlock:
    """Finite Hankel block ``H(L, M)`` of the family.

    Raises :class:`InsufficientOrder` when the family does not carry
    parameters up to order ``L + M``.
    """
    if L < 0 or M < 0:
        raise ValueError("L and M must be non-negative")
    if L + M > mk.max_order:
        raise InsufficientOrder(
            f"block ({L},{M}) needs Markov parameters of order {L + M}, "
            f"family has max_order={mk.max_order}"
        )
    data = assemble_table_block(mk.values, mk.out_dim, mk.D, L, M)
    rows = tuple(
        (w, i)
        for w in enumerate_words(mk.alphabet, L)
        for i in range(1, mk.out_dim + 1)
    )
    cols = tuple(
        (w, j) for w in enumerate_words(mk.alphabet, M) for j in mk.indices
    )
    return HankelBlock(RowIndexing(L, rows), ColIndexing(M, cols), data)


def _dense_svd(M: np.ndarray, need_uv: bool):
    try:
        if need_uv:
            return np.linalg.svd(M, full_matrices=False)
        return None, np.linalg.svd(M, compute_uv=False), None
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc


def _randomized_svd(M: np.ndarray, k: int):
    """Top-``k`` singular triplets via a Gaussian range finder with two power
    iterations.  Deterministic (fixed seed)."""
    rng = np.random.default_rng(_SKETCH_SEED)
    m, n = M.shape
    kk = min(min(m, n), k + 8)
    try:
        Q, _ = np.linalg.qr(M @ rng.standard_normal((n, kk)))
        for _ in range(2):
            Q, _ = np.linalg.qr(M.T @ Q)
            Q, _ = np.linalg.qr(M @ Q)
        B = Q.T @ M
        Ub, s, Vt = np.linalg.svd(B, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    return Q @ Ub, s, Vt


def svd_with_rank(
    M: np.ndarray, tol: Union[RankTolerance, float, None], need_uv: bool = True
):
    """SVD plus numerical rank under the given tolerance policy.

    Small matrices use exact LAPACK.  Large ones use the randomized range
    finder, escalating the sketch width until the spectrum provably crosses
    the threshold inside the window; if the leading part cannot be certified
    (dense spectrum), falls back to the exact decomposition.

    Returns ``(U, s, Vt, rank, threshold)``; ``U``/``Vt`` are ``None`` when
    ``need_uv`` is false.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if M.size == 0:
        return (
            (np.zeros((M.shape[0], 0)) if need_uv else None),
            np.zeros(0),
            (np.zeros((0, M.shape[1])) if need_uv else None),
            0,
            0.0,
        )
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    pol = coerce_tol(tol)
    if min(M.shape) <= _DENSE_LIMIT:
        U, s, Vt = _dense_svd(M, need_uv)
        th = pol.threshold(float(s[0]) if s.size else 0.0, M.shape)
        return U, s, Vt, int(np.sum(s > th)), th
    k = _SKETCH_START
    while k < min(M.shape):
        U, s, Vt = _randomized_svd(M, k)
        th = pol.threshold(float(s[0]) if s.size else 0.0, M.shape)
        r = int(np.sum(s > th))
        # accept only if the tail is visibly below threshold inside the window
        if r <= s.size - 5:
            return (U if need_uv else None), s, (Vt if need_uv else None), r, th
        k *= 4
    U, s, Vt = _dense_svd(M, need_uv)
    th = pol.threshold(float(s[0]) if s.size else 0.0, M.shape)
    return U, s, Vt, int(np.sum(s > th)), th


def numerical_rank(M: np.ndarray, tol: Union[RankTolerance, float, None] = None) -> int:
    """Number of singular values above the tolerance threshold.

    Default threshold: ``sigma_max * max(rows, cols) * eps``; pass a float
    for a relative override or a :class:`RankTolerance` for full control.
    """
    _, _, _, r, _ = svd_with_rank(M, tol, need_uv=False)
    return r


def find_stable_N(mk: MarkovFamily, tol: Union[RankTolerance, float, None] = None) -> Optional[int]:
    """Smallest ``N`` with ``rank H(N,N) == rank H(N+1,N) == rank H(N,N+1)``.

    Scans upward while the family's order budget covers ``2N+1``; returns
    ``None`` when no such ``N`` is certifiable from the available data.
    """
    N = 0
    while 2 * N + 1 <= mk.max_order:
        r_nn = numerical_rank(build_block(mk, N, N).data, tol)
        r_up = numerical_rank(build_block(mk, N + 1, N).data, tol)
        r_right = numerical_rank(build_block(mk, N, N + 1).data, tol)
        if r_nn == r_up == r_right:
            return N
        N += 1
    return None
