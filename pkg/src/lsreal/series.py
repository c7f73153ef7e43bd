"""Rational representations of families of formal power series.

A representation computes a family of vector-valued series over the mode
alphabet via ``S_j(w) = C A_w B_j`` with ``A_w`` the product of per-letter
matrices taken right to left (the rightmost factor belongs to the first
letter).  The two constructions below translate between linear switched
realizations and representations: the readout of the representation stacks
the per-mode ``C_q``, and its initial vectors collect the input-matrix
columns and the tagged initial states.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import BadIndexSet, BadOutDim, ShiftTooLong, UnknownIndex
from .lss import (
    InitialTag,
    InputChannel,
    Lss,
    MarkovFamily,
    Realization,
    SeriesIndex,
    canonical_indices,
)
from .words import Alphabet, Word, level_offsets, word_count, word_rank, word_value

__all__ = [
    "Representation",
    "TruncatedSeries",
    "series_eval",
    "shift",
    "family_from_markov",
    "lss_to_representation",
    "representation_to_lss",
]


@dataclass(frozen=True)
class TruncatedSeries:
    """A formal power series known on all words of length at most ``horizon``.

    ``values`` has shape ``(W, out_dim)`` with the word axis in
    length-lexicographic order.
    """

    alphabet: Alphabet
    out_dim: int
    horizon: int
    values: np.ndarray

    def __post_init__(self):
        W = word_count(self.alphabet.size, self.horizon)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (W, self.out_dim):
            raise ValueError(f"values has shape {vals.shape}, expected {(W, self.out_dim)}")
        object.__setattr__(self, "values", vals)

    def at(self, word) -> np.ndarray:
        w = self.alphabet.check_word(word)
        if len(w) > self.horizon:
            raise KeyError(f"word longer than horizon={self.horizon}")
        return self.values[word_rank(w, self.alphabet)]


@dataclass
class Representation:
    """Rational representation ``(R^dim, {A_sigma}, B, C)`` of a series family.

    ``A`` maps each letter to a ``dim x dim`` matrix, ``B`` maps each series
    index to a state vector and ``C`` is the ``out_dim x dim`` readout.  The
    state space is always a coordinate space.
    """

    alphabet: Alphabet
    dim: int
    out_dim: int
    indices: tuple[SeriesIndex, ...]
    A: dict[str, np.ndarray]
    B: dict[SeriesIndex, np.ndarray]
    C: np.ndarray

    def __post_init__(self):
        n = self.dim
        for q in self.alphabet.modes:
            if q not in self.A:
                raise ValueError(f"A matrix missing for letter {q!r}")
        self.A = {q: np.asarray(self.A[q], dtype=float).reshape(n, n) for q in self.A}
        for j in self.indices:
            if j not in self.B:
                raise ValueError(f"B vector missing for index {j!r}")
        self.B = {j: np.asarray(self.B[j], dtype=float).reshape(n) for j in self.B}
        self.C = np.asarray(self.C, dtype=float).reshape(self.out_dim, n)

    def word_matrix(self, word) -> np.ndarray:
        """Product ``A_w`` (rightmost factor = first letter)."""
        M = np.eye(self.dim)
        for q in self.alphabet.check_word(word):
            M = self.A[q] @ M
        return M


def series_eval(rep: Representation, j: SeriesIndex, w) -> np.ndarray:
    """Value ``C A_w B_j`` of the series indexed by ``j`` at word ``w``."""
    if j not in rep.B or j not in rep.indices:
        raise UnknownIndex(f"unknown series index {j!r}")
    x = rep.B[j]
    for q in rep.alphabet.check_word(w):
        x = rep.A[q] @ x
    return rep.C @ x


def shift(T: TruncatedSeries, w) -> TruncatedSeries:
    """Left shift: the result maps ``v`` to ``T(wv)``; horizon shrinks by ``|w|``."""
    word = T.alphabet.check_word(w)
    if len(word) > T.horizon:
        raise ShiftTooLong(f"cannot shift a horizon-{T.horizon} series by {len(word)} letters")
    D = T.alphabet.size
    new_h = T.horizon - len(word)
    offs = level_offsets(D, T.horizon)
    wval = word_value(word, T.alphabet)
    rows = np.concatenate(
        [offs[len(word) + k] + wval * D**k + np.arange(D**k) for k in range(new_h + 1)]
    )
    return TruncatedSeries(T.alphabet, T.out_dim, new_h, T.values[rows])


def family_from_markov(mk: MarkovFamily) -> dict[SeriesIndex, TruncatedSeries]:
    """The indexed family of truncated series carrying the Markov parameters.

    One series per canonical index; values are shared with the family table,
    horizon equals ``mk.max_order``.
    """
    return {
        j: TruncatedSeries(mk.alphabet, mk.out_dim, mk.max_order, mk.values[pos])
        for pos, j in enumerate(mk.indices)
    }


def lss_to_representation(r: Realization) -> Representation:
    """Representation associated with a realization.

    The readout stacks the per-mode ``C_q`` in alphabet order; the initial
    vector of channel ``(q, l)`` is the ``l``-th column of ``B_q`` and the
    initial vector of a tag is its initial state.
    """
    sys = r.sys
    indices = canonical_indices(sys.alphabet, sys.m, r.tags)
    B: dict[SeriesIndex, np.ndarray] = {}
    for j in indices:
        if isinstance(j, InputChannel):
            B[j] = sys.B[j.mode][:, j.channel - 1].copy()
        else:
            B[j] = r.mu[j.name].copy()
    A = {q: sys.A[q].copy() for q in sys.alphabet.modes}
    return Representation(
        sys.alphabet, sys.n, sys.p * sys.D, indices, A, B, sys.stacked_C()
    )


def representation_to_lss(rep: Representation) -> Realization:
    """Realization associated with a representation; inverse of
    :func:`lss_to_representation` on its image.

    Requires ``out_dim`` divisible by the alphabet size and an index set that
    contains channel ``(q, l)`` for every mode ``q`` and ``l = 1..m``.
    """
    D = rep.alphabet.size
    if rep.out_dim % D != 0:
        raise BadOutDim(f"out_dim {rep.out_dim} not divisible by {D} modes")
    p = rep.out_dim // D
    channels = [j for j in rep.indices if isinstance(j, InputChannel)]
    tags = [j for j in rep.indices if isinstance(j, InitialTag)]
    if not channels:
        raise BadIndexSet("index set has no input channels")
    m = max(j.channel for j in channels)
    have = {(j.mode, j.channel) for j in channels}
    want = {(q, l) for q in rep.alphabet.modes for l in range(1, m + 1)}
    if have != want:
        raise BadIndexSet(
            f"index set must contain every channel (mode, 1..{m}); "
            f"missing {sorted(want - have)}"
        )
    n = rep.dim
    A = {q: rep.A[q].copy() for q in rep.alphabet.modes}
    B = {
        q: np.column_stack([rep.B[InputChannel(q, l)] for l in range(1, m + 1)])
        for q in rep.alphabet.modes
    }
    C = {
        q: rep.C[i * p : (i + 1) * p, :].copy()
        for i, q in enumerate(rep.alphabet.modes)
    }
    mu = {j.name: rep.B[j].copy() for j in tags}
    return Realization(Lss(rep.alphabet, A, B, C), mu)
