"""Reachability, observability, minimality and isomorphism checks.

The linear-algebraic characterizations: the reachable span of a
representation is generated by ``A_v B_j`` over words of length at most
``dim - 1``, and the unobservable subspace is the joint kernel of ``C A_v``
over the same words.  A realization is minimal exactly when the reachable
span fills the state space and the kernel is trivial; minimal realizations
of the same family are unique up to a system isomorphism, which this module
looks for constructively.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.linalg import null_space

from .errors import DimensionMismatch, IncompatibleFamilies
from .hankel import RankTolerance, build_block, numerical_rank
from .lss import MarkovFamily, Realization, _generator_matrix
from .realize import _largest_block_shape
from .series import Representation, lss_to_representation
from .words import level_offsets

__all__ = [
    "SubspaceBasis",
    "MinimalityCertificate",
    "reach_space",
    "obs_space",
    "certify_minimal",
    "find_isomorphism",
    "markov_match_order",
    "lss_match_order",
]

Tol = Union[RankTolerance, float, None]

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a reachability span or observability kernel."""

    kind: str  # "reach" | "obs"
    basis: np.ndarray  # n x k, orthonormal columns
    depth_used: int

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class MinimalityCertificate:
    dim: int
    reach_dim: int
    obs_kernel_dim: int
    hankel_rank: Optional[int]
    is_minimal: bool


def _orth_extend(basis: np.ndarray, F: np.ndarray, scale: float, rtol: float):
    """Orthonormal directions of ``F`` outside ``span(basis)``.

    Directions with singular value below ``rtol * scale`` are treated as
    already contained; two projection passes keep the basis orthonormal to
    working precision.
    """
    if F.shape[1] == 0:
        return F[:, :0]
    G = F - basis @ (basis.T @ F)
    G = G - basis @ (basis.T @ G)
    U, s, _ = np.linalg.svd(G, full_matrices=False)
    return U[:, s > rtol * scale]


def _span_bfs(
    generators: np.ndarray,
    operators: list[np.ndarray],
    cap: int,
    rtol: float,
) -> np.ndarray:
    """Breadth-first orthonormal basis of ``span{A_v g}`` over ``|v| <= cap``.

    Stops early once a level adds no new direction; by invariance of the
    accumulated span, deeper words cannot add any either.
    """
    n = generators.shape[0]
    basis = np.zeros((n, 0))
    frontier = generators
    scale = max(float(np.linalg.norm(generators)), 1.0)
    for depth in range(cap + 1):
        new = _orth_extend(basis, frontier, scale, rtol)
        if new.shape[1] == 0:
            break
        basis = np.hstack([basis, new])
        if depth == cap:
            break
        frontier = np.hstack([A @ new for A in operators])
        scale = max(scale, float(np.linalg.norm(frontier)))
    return basis


def reach_space(
    rep: Representation, max_depth: Optional[int] = None, rtol: float = 1e-10
) -> SubspaceBasis:
    """Orthonormal basis of ``span{A_v B_j : |v| <= depth, j}``.

    The default depth ``dim - 1`` already yields the full reachability
    subspace; larger depths cannot enlarge it.
    """
    n = rep.dim
    cap = max(n - 1, 0) if max_depth is None else max_depth
    gens = (
        np.column_stack([rep.B[j] for j in rep.indices])
        if rep.indices
        else np.zeros((n, 0))
    )
    ops = [rep.A[q] for q in rep.alphabet.modes]
    return SubspaceBasis("reach", _span_bfs(gens, ops, cap, rtol), cap)


def obs_space(
    rep: Representation, max_depth: Optional[int] = None, rtol: float = 1e-10
) -> SubspaceBasis:
    """Orthonormal basis of the joint kernel of ``C A_v`` over ``|v| <= depth``.

    The representation is observable exactly when the returned basis is
    empty.
    """
    n = rep.dim
    cap = max(n - 1, 0) if max_depth is None else max_depth
    row_span = _span_bfs(rep.C.T, [rep.A[q].T for q in rep.alphabet.modes], cap, rtol)
    if row_span.shape[1] == 0:
        kernel = np.eye(n)
    else:
        kernel = null_space(row_span.T)
    return SubspaceBasis("obs", kernel, cap)


def certify_minimal(
    r: Realization, mk: Optional[MarkovFamily] = None, tol: Tol = None
) -> MinimalityCertificate:
    """Minimality certificate: semi-reachable and observable iff minimal.

    When a Markov family is supplied, the rank of the largest block its
    order budget supports is recorded alongside; for a minimal realization
    it coincides with the state dimension.
    """
    rep = lss_to_representation(r)
    reach = reach_space(rep)
    obs = obs_space(rep)
    hankel_rank = None
    if mk is not None:
        L, M = _largest_block_shape(mk.max_order)
        hankel_rank = numerical_rank(build_block(mk, L, M).data, tol)
    n = r.sys.n
    return MinimalityCertificate(
        dim=n,
        reach_dim=reach.dim,
        obs_kernel_dim=obs.dim,
        hankel_rank=hankel_rank,
        is_minimal=(reach.dim == n and obs.dim == 0),
    )


def _reach_generator_table(r: Realization, depth: int) -> np.ndarray:
    """Columns ``A_v g`` for all words ``|v| <= depth`` and all canonical
    generators ``g``, in word-major canonical order (for cross-system
    alignment)."""
    sys = r.sys
    X = _generator_matrix(r)
    A_stack = np.stack([sys.A[q] for q in sys.alphabet.modes])
    blocks = []
    states = X[None, :, :]
    for k in range(depth + 1):
        blocks.append(np.hstack(list(states)))
        if k < depth:
            states = np.einsum("qab,wbj->wqaj", A_stack, states).reshape(
                -1, sys.n, X.shape[1]
            )
    return np.hstack(blocks)


def _structurally_comparable(r1: Realization, r2: Realization) -> None:
    s1, s2 = r1.sys, r2.sys
    if s1.alphabet != s2.alphabet or s1.m != s2.m or s1.p != s2.p:
        raise DimensionMismatch("systems differ in alphabet or input/output dimensions")
    if r1.tags != r2.tags:
        raise DimensionMismatch(f"initial-state tags differ: {r1.tags} vs {r2.tags}")


def find_isomorphism(
    r1: Realization, r2: Realization, tol: float = 1e-8
) -> Optional[np.ndarray]:
    """System isomorphism ``S`` with ``A2 S = S A1``, ``B2 = S B1``,
    ``C2 S = C1`` and ``S mu1 = mu2``, or ``None``.

    Solved by aligning the reachability generators ``A_v B_j`` of both
    systems in the same canonical word order and fitting ``S`` by least
    squares; accepted only if ``S`` is invertible and the morphism equations
    hold with a combined relative residual at most ``tol`` (one residual over
    the stacked equations, so exactly-zero components do not produce
    spurious 0/0 rejections).  Returns ``None`` when the state dimensions
    differ or either system is not semi-reachable.
    """
    _structurally_comparable(r1, r2)
    s1, s2 = r1.sys, r2.sys
    n = s1.n
    if n != s2.n:
        return None
    if n == 0:
        return np.zeros((0, 0))
    depth = n - 1
    G1 = _reach_generator_table(r1, depth)
    G2 = _reach_generator_table(r2, depth)
    if np.linalg.matrix_rank(G1) < n or np.linalg.matrix_rank(G2) < n:
        return None
    sol, *_ = np.linalg.lstsq(G1.T, G2.T, rcond=None)
    S = sol.T
    sv = np.linalg.svd(S, compute_uv=False)
    if sv[-1] <= sv[0] * 1e-12:
        return None
    achieved, target = [], []
    for q in s1.alphabet.modes:
        achieved += [(s2.A[q] @ S).ravel(), s2.B[q].ravel(), (s2.C[q] @ S).ravel()]
        target += [(S @ s1.A[q]).ravel(), (S @ s1.B[q]).ravel(), s1.C[q].ravel()]
    for t in r1.tags:
        achieved.append(r2.mu[t])
        target.append(S @ r1.mu[t])
    a = np.concatenate(achieved)
    b = np.concatenate(target)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), _TINY)
    if np.linalg.norm(a - b) / scale > tol:
        return None
    return S


def _first_level_mismatch(a_vals, b_vals, tol: float) -> bool:
    diff = np.abs(a_vals - b_vals)
    scale = np.maximum(np.abs(a_vals), np.abs(b_vals))
    return bool(np.any(diff > np.maximum(tol * scale, 1e-12)))


def markov_match_order(
    a: MarkovFamily, b: MarkovFamily, tol: float = 1e-9
) -> Optional[int]:
    """First order at which the two families' parameters differ, or ``None``.

    Entries are compared relatively with an absolute floor of ``1e-12``;
    orders beyond the shorter family's budget are not checked.
    """
    if not a.compatible_with(b):
        raise IncompatibleFamilies("families differ in alphabet, dims or index set")
    K = min(a.max_order, b.max_order)
    offs = level_offsets(a.D, K)
    for k in range(K + 1):
        sl = slice(offs[k], offs[k + 1])
        if _first_level_mismatch(a.values[:, sl], b.values[:, sl], tol):
            return k
    return None


def lss_match_order(
    a: Realization, b: Realization, max_order: int, tol: float = 1e-9
) -> Optional[int]:
    """First mismatching Markov order of two realizations up to ``max_order``.

    Entrywise comparison with the same tolerance rule as
    :func:`markov_match_order`, computed level by level without
    materializing the families.  Words longer than ``n_a + n_b - 1`` need
    not be checked: every deeper product ``A_w g`` of the paired difference
    system is a linear combination of shallower ones, so agreement through
    that depth forces agreement at every order.
    """
    _structurally_comparable(a, b)
    bound = min(max_order, max(a.sys.n + b.sys.n - 1, 0))
    Ct_a, Ct_b = a.sys.stacked_C(), b.sys.stacked_C()
    Aa = np.stack([a.sys.A[q] for q in a.sys.alphabet.modes])
    Ab = np.stack([b.sys.A[q] for q in b.sys.alphabet.modes])
    Xa, Xb = _generator_matrix(a), _generator_matrix(b)
    states_a = Xa[None, :, :]
    states_b = Xb[None, :, :]
    for k in range(bound + 1):
        Ea = np.einsum("ob,wbj->wjo", Ct_a, states_a, optimize=True)
        Eb = np.einsum("ob,wbj->wjo", Ct_b, states_b, optimize=True)
        if _first_level_mismatch(Ea, Eb, tol):
            return k
        if k < bound:
            states_a = np.einsum("qab,wbj->wqaj", Aa, states_a, optimize=True).reshape(
                -1, a.sys.n, Xa.shape[1]
            )
            states_b = np.einsum("qab,wbj->wqaj", Ab, states_b, optimize=True).reshape(
                -1, b.sys.n, Xb.shape[1]
            )
    return None
