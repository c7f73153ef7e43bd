"""Partial-realization algorithms and moment-matching reduction.

Two routes from a finite table of Markov parameters to a state-space model:

* :func:`realize_columns` works on the block ``H(N, N+1)``.  It identifies
  the state space with an orthonormal basis of the block's column space and
  reads the system matrices off column shifts (appending a mode to the
  column word).
* :func:`realize_factor` works on ``H(N+1, N)``.  It factors the block as
  ``O @ R`` through a rank-revealing SVD and solves for each mode matrix
  from the row shift of ``O`` (prepending a mode to the row word), in the
  style of the Kalman-Ho algorithm.

Both return, when the three-block rank condition holds at ``N``, a
semi-reachable and observable realization matching all Markov parameters of
order up to ``2N+1``; the two results are then isomorphic.
:func:`represent_factor` is the power-series form of the second route and is
what :func:`realize_factor` delegates to.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

from .errors import (
    InsufficientOrder,
    NoUniqueSolution,
    RankConditionFailed,
    ShiftInconsistent,
)
from .hankel import (
    RankTolerance,
    assemble_table_block,
    build_block,
    numerical_rank,
    svd_with_rank,
)
from .lss import Lss, MarkovFamily, Realization, SeriesIndex, markov_from_lss
from .series import Representation, TruncatedSeries, representation_to_lss
from .words import Alphabet, level_offsets, word_count

__all__ = [
    "RankConditionReport",
    "check_rank_condition",
    "realize_columns",
    "realize_factor",
    "represent_factor",
    "minimal_realize",
    "reduce",
]

Tol = Union[RankTolerance, float, None]

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class RankConditionReport:
    """Ranks of the three blocks tied to parameter ``N``.

    ``holds`` is the equality ``r_NN == r_N1N == r_NN1`` that licenses the
    realization algorithms at ``N``.  ``complete_hint`` additionally compares
    ``r_NN`` against the rank of the largest block the data supports; when
    true, the rank has stabilized across everything observable, the best
    finite-data evidence that the partial realization is complete.
    """

    N: int
    r_NN: int
    r_N1N: int
    r_NN1: int
    holds: bool
    complete_hint: bool


def _largest_block_shape(max_order: int) -> tuple[int, int]:
    L = (max_order + 1) // 2
    return L, max_order - L


def check_rank_condition(mk: MarkovFamily, N: int, tol: Tol = None) -> RankConditionReport:
    """Evaluate the three-block rank condition at ``N``."""
    if N < 0:
        raise ValueError("N must be non-negative")
    if 2 * N + 1 > mk.max_order:
        raise InsufficientOrder(
            f"rank condition at N={N} needs order {2 * N + 1}, "
            f"family has max_order={mk.max_order}"
        )
    r_nn = numerical_rank(build_block(mk, N, N).data, tol)
    r_up = numerical_rank(build_block(mk, N + 1, N).data, tol)
    r_right = numerical_rank(build_block(mk, N, N + 1).data, tol)
    holds = r_nn == r_up == r_right
    L_big, M_big = _largest_block_shape(mk.max_order)
    if (L_big, M_big) == (N + 1, N):
        r_big = r_up
    else:
        r_big = numerical_rank(build_block(mk, L_big, M_big).data, tol)
    return RankConditionReport(N, r_nn, r_up, r_right, holds, holds and r_nn == r_big)


def _relative_residual(achieved: np.ndarray, target: np.ndarray) -> float:
    scale = max(np.linalg.norm(target), np.linalg.norm(achieved), _TINY)
    return float(np.linalg.norm(achieved - target) / scale)


def realize_columns(
    mk: MarkovFamily,
    N: int,
    tol: Tol = None,
    residual_tol: float = 1e-8,
) -> Realization:
    """Realization from the column space of ``H(N, N+1)``.

    The state space is the coordinate image of the column space under an
    orthonormal basis (left singular vectors, sign-fixed so each basis
    vector's largest entry is positive).  Input matrices come from the
    empty-word columns, readouts from the empty-word rows, and each mode
    matrix solves the column-shift equations; if those are inconsistent
    beyond ``residual_tol`` the algorithm aborts.

    Requires the rank condition to hold at ``N``
    (:class:`RankConditionFailed` otherwise).
    """
    report = check_rank_condition(mk, N, tol)
    if not report.holds:
        raise RankConditionFailed(
            f"ranks ({report.r_NN}, {report.r_N1N}, {report.r_NN1}) differ at N={N}"
        )
    D, p, m, od = mk.D, mk.p, mk.m, mk.out_dim
    J = len(mk.indices)
    H = assemble_table_block(mk.values, od, D, N, N + 1)
    U, s, Vt, n, _ = svd_with_rank(H, tol)
    # deterministic basis: flip each left vector so its largest entry is positive
    for i in range(n):
        jmax = int(np.argmax(np.abs(U[:, i])))
        if U[jmax, i] < 0:
            U[:, i] = -U[:, i]
            Vt[i, :] = -Vt[i, :]
    # coordinates of every column in the orthonormal basis
    Y = s[:n, None] * Vt[:n]
    modes = mk.alphabet.modes
    # readout: C_q maps the coordinates of a column to its empty-word rows
    # for mode q; with Y = S V^T this solve is exact: pinv(Y) = V S^{-1}
    pinvY = Vt[:n].T / s[:n] if n > 0 else np.zeros((Y.shape[1], 0))
    C = {q: H[qi * p : (qi + 1) * p, :] @ pinvY for qi, q in enumerate(modes)}
    # shift equations: A_q sends the coordinates of column (w, j) to those of
    # (wq, j) for |w| <= N
    W_N = word_count(D, N)
    offs = level_offsets(D, N + 1)
    Y_sub = Y[:, : W_N * J]
    A = {}
    for qi, q in enumerate(modes):
        col_words = np.concatenate(
            [offs[k + 1] + np.arange(D**k) * D + qi for k in range(N + 1)]
        )
        cols = (col_words[:, None] * J + np.arange(J)).ravel()
        Y_shift = Y[:, cols]
        if n == 0:
            A[q] = np.zeros((0, 0))
            continue
        sol, *_ = np.linalg.lstsq(Y_sub.T, Y_shift.T, rcond=None)
        A_q = sol.T
        if _relative_residual(A_q @ Y_sub, Y_shift) > residual_tol:
            raise ShiftInconsistent(
                f"column-shift equations for mode {q!r} are inconsistent"
            )
        A[q] = A_q
    if n > 0 and numerical_rank(Y_sub, tol) < n:
        raise ShiftInconsistent("shift coefficient matrix is rank deficient")
    B = {
        q: Y[:, [qi * m + l for l in range(m)]].copy() for qi, q in enumerate(modes)
    }
    mu = {t: Y[:, D * m + ti].copy() for ti, t in enumerate(mk.tags)}
    return Realization(Lss(mk.alphabet, A, B, C), mu)


def _table_factor(
    values: np.ndarray,
    out_dim: int,
    alphabet: Alphabet,
    indices: tuple[SeriesIndex, ...],
    N: int,
    tol: Tol,
    residual_tol: float,
) -> Representation:
    """Shared core of the factorization algorithms: factor ``H(N+1, N)`` of a
    series table as ``O @ R`` and solve each letter matrix from the row shift
    of ``O``."""
    D = alphabet.size
    J = len(indices)
    H = assemble_table_block(values, out_dim, D, N + 1, N)
    U, s, Vt, r, _ = svd_with_rank(H, tol)
    sq = np.sqrt(s[:r])
    O = U[:, :r] * sq
    R = sq[:, None] * Vt[:r]
    Ct = O[:out_dim, :]
    B = {j: R[:, pos].copy() for pos, j in enumerate(indices)}
    if r == 0:
        A = {q: np.zeros((0, 0)) for q in alphabet.modes}
        return Representation(alphabet, 0, out_dim, indices, A, B, Ct)
    W_N = word_count(D, N)
    offs = level_offsets(D, N + 1)
    Gamma = O[: W_N * out_dim, :]
    if numerical_rank(Gamma, tol) < r:
        raise NoUniqueSolution("shift coefficient matrix is rank deficient")
    comp = np.arange(out_dim)
    A = {}
    for qi, q in enumerate(alphabet.modes):
        # row (v, i) of the shifted factor is row (qv, i) of O
        shifted_words = np.concatenate(
            [offs[k + 1] + qi * D**k + np.arange(D**k) for k in range(N + 1)]
        )
        rows = (shifted_words[:, None] * out_dim + comp).ravel()
        Gamma_q = O[rows, :]
        sol, *_ = np.linalg.lstsq(Gamma, Gamma_q, rcond=None)
        if _relative_residual(Gamma @ sol, Gamma_q) > residual_tol:
            raise NoUniqueSolution(
                f"row-shift equation for letter {q!r} has no solution"
            )
        A[q] = sol
    return Representation(alphabet, r, out_dim, indices, A, B, Ct)


def represent_factor(
    family: Mapping[SeriesIndex, TruncatedSeries],
    N: int,
    tol: Tol = None,
    residual_tol: float = 1e-8,
) -> Representation:
    """Partial representation of a series family by Hankel factorization.

    Needs every member's horizon to reach ``2N+1``.  The result reproduces
    the family on all words of length at most ``2N+1`` whenever the rank
    condition holds at ``N``; the shift solve reports
    :class:`NoUniqueSolution` otherwise.
    """
    if not family:
        raise ValueError("family must contain at least one series")
    indices = tuple(family.keys())
    members = [family[j] for j in indices]
    alphabet = members[0].alphabet
    out_dim = members[0].out_dim
    for T in members:
        if T.alphabet != alphabet or T.out_dim != out_dim:
            raise ValueError("family members disagree on alphabet or out_dim")
    horizon = min(T.horizon for T in members)
    if 2 * N + 1 > horizon:
        raise InsufficientOrder(
            f"N={N} needs horizon {2 * N + 1}, family has {horizon}"
        )
    W = word_count(alphabet.size, 2 * N + 1)
    values = np.stack([T.values[:W] for T in members])
    return _table_factor(values, out_dim, alphabet, indices, N, tol, residual_tol)


def realize_factor(
    mk: MarkovFamily,
    N: int,
    tol: Tol = None,
    residual_tol: float = 1e-8,
) -> Realization:
    """Kalman-Ho style realization from a factorization of ``H(N+1, N)``.

    Returns a realization of dimension ``rank H(N+1, N)``.  When the rank
    condition holds at ``N`` the result is a minimal ``2N+1``-partial
    realization, isomorphic to the one from :func:`realize_columns`.
    """
    if 2 * N + 1 > mk.max_order:
        raise InsufficientOrder(
            f"N={N} needs Markov parameters of order {2 * N + 1}, "
            f"family has max_order={mk.max_order}"
        )
    W = word_count(mk.D, 2 * N + 1)
    rep = _table_factor(
        mk.values[:, :W, :], mk.out_dim, mk.alphabet, mk.indices, N, tol, residual_tol
    )
    return representation_to_lss(rep)


def minimal_realize(
    mk: MarkovFamily,
    tol: Tol = None,
    residual_tol: float = 1e-8,
) -> tuple[Realization, RankConditionReport]:
    """Realize at the largest ``N`` the family's order budget supports.

    Verifies the rank condition there (:class:`RankConditionFailed` if it
    does not hold) and runs :func:`realize_factor`.  The report's
    ``complete_hint`` records whether the rank had stabilized across all
    blocks the data could form.
    """
    N = (mk.max_order - 1) // 2
    if N < 0:
        raise InsufficientOrder("need Markov parameters up to order at least 1")
    report = check_rank_condition(mk, N, tol)
    if not report.holds:
        raise RankConditionFailed(
            f"ranks ({report.r_NN}, {report.r_N1N}, {report.r_NN1}) differ at N={N}"
        )
    return realize_factor(mk, N, tol, residual_tol), report


def reduce(
    r: Realization,
    N: int,
    tol: Tol = None,
    residual_tol: float = 1e-8,
) -> Realization:
    """Moment-matching reduction: realize the system's own Markov parameters
    of order up to ``2N+1``.

    The result matches those parameters whenever the factorization algorithm
    succeeds; with ``N >= dim - 1`` it reproduces the full input-output
    behaviour at (generically) minimal state dimension.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    return realize_factor(markov_from_lss(r, 2 * N + 1), N, tol, residual_tol)
