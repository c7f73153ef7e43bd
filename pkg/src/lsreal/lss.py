"""Linear switched systems and their generalized Markov parameters.

A linear switched system carries one triple ``(A_q, B_q, C_q)`` per discrete
mode over a shared state space.  This module simulates such systems exactly
for piecewise-constant inputs, evaluates the input and initial-state kernel
functions, and produces the family of generalized Markov parameters both by
matrix products and (as an independent cross-check) by finite differences of
simulated outputs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.linalg import expm

from .errors import (
    DurationMismatch,
    EmptyWord,
    NonFiniteInput,
    OrderTooHigh,
    UnknownIndex,
    UnknownTag,
)
from .words import Alphabet, Word, level_offsets, word_count, word_rank

__all__ = [
    "Alphabet",
    "Word",
    "InputChannel",
    "InitialTag",
    "SeriesIndex",
    "Lss",
    "Realization",
    "SwitchingSequence",
    "PiecewiseConstantInput",
    "MarkovFamily",
    "canonical_indices",
    "mode_exp",
    "simulate",
    "kernel_G",
    "kernel_K",
    "markov_from_lss",
    "finite_diff_markov",
]


@dataclass(frozen=True)
class InputChannel:
    """Series index for the response to input channel ``channel`` (1-based)
    applied while the first active mode is ``mode``."""

    mode: str
    channel: int


@dataclass(frozen=True)
class InitialTag:
    """Series index for the zero-input response from a tagged initial state."""

    name: str


SeriesIndex = Union[InputChannel, InitialTag]


def canonical_indices(alphabet: Alphabet, m: int, tags: Sequence[str]) -> tuple[SeriesIndex, ...]:
    """Canonical series-index order: input channels in alphabet-then-channel
    order, then initial tags in name order."""
    channels = [InputChannel(q, l) for q in alphabet.modes for l in range(1, m + 1)]
    return tuple(channels) + tuple(InitialTag(t) for t in sorted(tags))


def _as_matrix(a, shape, what: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{what} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{what} has non-finite entries")
    return arr


@dataclass
class Lss:
    """Linear switched system: one ``(A_q, B_q, C_q)`` triple per mode.

    Parameters
    ----------
    alphabet : Alphabet
        Ordered discrete modes.
    A, B, C : mapping mode -> array
        ``A[q]`` is ``n x n``, ``B[q]`` is ``n x m``, ``C[q]`` is ``p x n``.
        All modes share the dimensions ``n, m, p``; ``n == 0`` is legal and
        denotes the empty-state system.
    """

    alphabet: Alphabet
    A: dict[str, np.ndarray]
    B: dict[str, np.ndarray]
    C: dict[str, np.ndarray]
    n: int = field(init=False)
    m: int = field(init=False)
    p: int = field(init=False)

    def __post_init__(self):
        modes = self.alphabet.modes
        for name, d in (("A", self.A), ("B", self.B), ("C", self.C)):
            missing = [q for q in modes if q not in d]
            if missing:
                raise ValueError(f"{name} matrices missing for modes {missing}")
        q0 = modes[0]
        A0 = np.asarray(self.A[q0], dtype=float)
        if A0.ndim != 2 or A0.shape[0] != A0.shape[1]:
            raise ValueError("A matrices must be square")
        n = A0.shape[0]
        B0 = np.asarray(self.B[q0], dtype=float)
        C0 = np.asarray(self.C[q0], dtype=float)
        if B0.ndim != 2 or B0.shape[0] != n:
            raise ValueError("B matrices must be n x m")
        if C0.ndim != 2 or C0.shape[1] != n:
            raise ValueError("C matrices must be p x n")
        m, p = B0.shape[1], C0.shape[0]
        if m < 1 or p < 1:
            raise ValueError("input and output dimensions must be positive")
        self.A = {q: _as_matrix(self.A[q], (n, n), f"A[{q}]") for q in modes}
        self.B = {q: _as_matrix(self.B[q], (n, m), f"B[{q}]") for q in modes}
        self.C = {q: _as_matrix(self.C[q], (p, n), f"C[{q}]") for q in modes}
        self.n, self.m, self.p = n, m, p

    @property
    def D(self) -> int:
        return self.alphabet.size

    def stacked_C(self) -> np.ndarray:
        """Readout matrices of all modes stacked vertically in alphabet order."""
        return np.vstack([self.C[q] for q in self.alphabet.modes])


@dataclass
class Realization:
    """A linear switched system together with a tagged set of initial states."""

    sys: Lss
    mu: dict[str, np.ndarray]

    def __post_init__(self):
        n = self.sys.n
        self.mu = {
            tag: _as_matrix(x, (n,), f"mu[{tag}]") for tag, x in self.mu.items()
        }

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(sorted(self.mu))

    def initial_state(self, tag: str) -> np.ndarray:
        if tag not in self.mu:
            raise UnknownTag(f"unknown initial-state tag {tag!r}")
        return self.mu[tag]

    def indices(self) -> tuple[SeriesIndex, ...]:
        return canonical_indices(self.sys.alphabet, self.sys.m, self.tags)


@dataclass(frozen=True)
class SwitchingSequence:
    """Nonempty sequence of ``(mode, dwell time)`` steps."""

    steps: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if len(self.steps) == 0:
            raise ValueError("switching sequence must be nonempty")
        for q, t in self.steps:
            if not (math.isfinite(t) and t >= 0.0):
                raise ValueError(f"dwell time {t!r} must be finite and >= 0")

    @property
    def total_duration(self) -> float:
        return float(sum(t for _, t in self.steps))


def as_switching(w) -> SwitchingSequence:
    if isinstance(w, SwitchingSequence):
        return w
    return SwitchingSequence(tuple((str(q), float(t)) for q, t in w))


@dataclass(frozen=True)
class PiecewiseConstantInput:
    """Piecewise-constant input signal.

    ``values[i]`` is held on ``[breakpoints[i], breakpoints[i+1])``; there is
    one more breakpoint than segment and breakpoints increase strictly.
    """

    breakpoints: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if not np.all(np.isfinite(bp)):
            raise NonFiniteInput("breakpoints must be finite")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must increase strictly")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != bp.size - 1:
            raise ValueError("need one value vector per segment")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteInput("input values must be finite")
        object.__setattr__(self, "breakpoints", tuple(bp))
        object.__setattr__(self, "values", tuple(map(tuple, vals)))

    @classmethod
    def constant(cls, value, duration: float, start: float = 0.0) -> "PiecewiseConstantInput":
        v = np.atleast_1d(np.asarray(value, dtype=float))
        return cls((start, start + duration), (tuple(v),))

    @classmethod
    def zero(cls, m: int, duration: float) -> "PiecewiseConstantInput":
        return cls.constant(np.zeros(m), duration)

    @property
    def dim(self) -> int:
        return len(self.values[0])

    def covers(self, t_end: float) -> bool:
        return self.breakpoints[0] <= 0.0 and self.breakpoints[-1] >= t_end - 1e-12

    def pieces(self, t0: float, t1: float):
        """Yield ``(dt, value)`` for the constant pieces covering ``[t0, t1)``."""
        if t1 <= t0:
            return
        bp = self.breakpoints
        cuts = [t0] + [b for b in bp if t0 < b < t1] + [t1]
        for a, b in zip(cuts[:-1], cuts[1:]):
            k = np.searchsorted(bp, a, side="right") - 1
            k = min(max(k, 0), len(self.values) - 1)
            yield b - a, np.asarray(self.values[k])


def mode_exp(sys: Lss, q: str, t: float) -> np.ndarray:
    """Matrix exponential ``exp(A_q * t)`` of the chosen mode."""
    if not math.isfinite(t):
        raise NonFiniteInput(f"time {t!r} is not finite")
    if q not in sys.alphabet:
        raise KeyError(f"unknown mode {q!r}")
    return expm(sys.A[q] * t)


def _step_exact(A: np.ndarray, B: np.ndarray, x: np.ndarray, u, tau: float) -> np.ndarray:
    """Advance ``x' = A x + B u`` by ``tau`` for constant ``u``.

    Uses the augmented exponential of ``[[A, B u], [0, 0]]``, whose top-right
    block equals the convolution integral, so the step is exact up to the
    accuracy of ``expm``.
    """
    n = A.shape[0]
    if tau == 0.0:
        return x
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = B @ u
    E = expm(M * tau)
    return E[:n, :n] @ x + E[:n, n]


def simulate(
    r: Realization,
    tag: str,
    u: PiecewiseConstantInput,
    w,
) -> tuple[np.ndarray, np.ndarray]:
    """Output and final state for input ``u`` under switching schedule ``w``.

    Parameters
    ----------
    r : Realization
    tag : str
        Initial-state tag; the trajectory starts at ``r.mu[tag]``.
    u : PiecewiseConstantInput
        Must cover the total duration of ``w``.
    w : SwitchingSequence or sequence of (mode, duration)

    Returns
    -------
    (y, x_final)
        ``y`` is the output read through the last step's mode, ``x_final``
        the state at the end of the schedule.
    """
    sw = as_switching(w)
    sys = r.sys
    x = r.initial_state(tag).copy()
    if u.dim != sys.m:
        raise DurationMismatch(f"input dimension {u.dim} != system m = {sys.m}")
    if not u.covers(sw.total_duration):
        raise DurationMismatch("input does not cover the switching schedule")
    t = 0.0
    for q, dur in sw.steps:
        if q not in sys.alphabet:
            raise KeyError(f"unknown mode {q!r}")
        for dt, val in u.pieces(t, t + dur):
            x = _step_exact(sys.A[q], sys.B[q], x, val, dt)
        t += dur
    q_last = sw.steps[-1][0]
    return sys.C[q_last] @ x, x


def _exp_chain(sys: Lss, word: Word, times: Sequence[float], x0: np.ndarray) -> np.ndarray:
    if len(word) == 0:
        raise EmptyWord("kernel functions need a nonempty mode word")
    if len(times) != len(word):
        raise DurationMismatch(
            f"{len(times)} times for a word of length {len(word)}"
        )
    X = x0
    for q, t in zip(word, times):
        X = mode_exp(sys, q, t) @ X
    return X


def kernel_G(sys: Lss, w, times: Sequence[float]) -> np.ndarray:
    """Input kernel ``C_{q_k} exp(A_{q_k} t_k) ... exp(A_{q_1} t_1) B_{q_1}``."""
    word = sys.alphabet.check_word(w)
    if len(word) == 0:
        raise EmptyWord("kernel functions need a nonempty mode word")
    X = _exp_chain(sys, word, times, sys.B[word[0]])
    return sys.C[word[-1]] @ X


def kernel_K(r: Realization, tag: str, w, times: Sequence[float]) -> np.ndarray:
    """Initial-state kernel; like :func:`kernel_G` with the first-mode input
    matrix replaced by the tagged initial state."""
    word = r.sys.alphabet.check_word(w)
    if len(word) == 0:
        raise EmptyWord("kernel functions need a nonempty mode word")
    X = _exp_chain(r.sys, word, times, r.initial_state(tag))
    return r.sys.C[word[-1]] @ X


@dataclass(frozen=True)
class MarkovFamily:
    """Complete table of generalized Markov parameters up to ``max_order``.

    For each series index and each mode word ``w`` with ``|w| <= max_order``
    the family stores the stacked vector whose block ``k`` (of size ``p``) is
    the Markov parameter read through output mode ``alphabet.modes[k]``.

    The table is stored as one dense array ``values`` of shape
    ``(J, W, p*D)`` with the word axis in length-lexicographic order; ``J``
    follows :func:`canonical_indices`.
    """

    alphabet: Alphabet
    p: int
    m: int
    max_order: int
    tags: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.max_order < 0:
            raise ValueError("max_order must be >= 0")
        if tuple(sorted(self.tags)) != tuple(self.tags):
            raise ValueError("tags must be sorted")
        J = self.alphabet.size * self.m + len(self.tags)
        W = word_count(self.alphabet.size, self.max_order)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (J, W, self.p * self.alphabet.size):
            raise ValueError(
                f"values has shape {vals.shape}, expected {(J, W, self.p * self.alphabet.size)}"
            )
        if not np.all(np.isfinite(vals)):
            raise NonFiniteInput("Markov parameters must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def D(self) -> int:
        return self.alphabet.size

    @property
    def out_dim(self) -> int:
        return self.p * self.D

    @property
    def indices(self) -> tuple[SeriesIndex, ...]:
        return canonical_indices(self.alphabet, self.m, self.tags)

    def index_position(self, index: SeriesIndex) -> int:
        if isinstance(index, InputChannel):
            if index.mode in self.alphabet and 1 <= index.channel <= self.m:
                return self.alphabet.index(index.mode) * self.m + (index.channel - 1)
        elif isinstance(index, InitialTag):
            if index.name in self.tags:
                return self.D * self.m + self.tags.index(index.name)
        raise UnknownIndex(f"unknown series index {index!r}")

    def entry(self, index: SeriesIndex, word) -> np.ndarray:
        """Stacked Markov parameter for ``(index, word)``; shape ``(p*D,)``."""
        w = self.alphabet.check_word(word)
        if len(w) > self.max_order:
            raise KeyError(f"word longer than max_order={self.max_order}")
        return self.values[self.index_position(index), word_rank(w, self.alphabet)]

    def block(self, index: SeriesIndex, word, out_mode: str) -> np.ndarray:
        """Markov parameter vector in ``R^p`` for one output mode."""
        k = self.alphabet.index(out_mode)
        return self.entry(index, word)[k * self.p : (k + 1) * self.p]

    @classmethod
    def zero(cls, alphabet: Alphabet, p: int, m: int, max_order: int, tags=()) -> "MarkovFamily":
        tags = tuple(sorted(tags))
        J = alphabet.size * m + len(tags)
        W = word_count(alphabet.size, max_order)
        return cls(alphabet, p, m, max_order, tags, np.zeros((J, W, p * alphabet.size)))

    def compatible_with(self, other: "MarkovFamily") -> bool:
        return (
            self.alphabet == other.alphabet
            and self.p == other.p
            and self.m == other.m
            and self.tags == other.tags
        )


def _generator_matrix(r: Realization) -> np.ndarray:
    """Columns ``B_q e_l`` (canonical channel order) then ``mu[f]`` (tag
    order); shape ``(n, J)``."""
    sys = r.sys
    cols = [sys.B[q][:, l] for q in sys.alphabet.modes for l in range(sys.m)]
    cols += [r.mu[t] for t in r.tags]
    return np.column_stack(cols) if cols else np.zeros((sys.n, 0))


def markov_from_lss(r: Realization, max_order: int) -> MarkovFamily:
    """Markov parameters of a realization by matrix products.

    Computes ``Ct @ A_w @ g`` for every word ``|w| <= max_order`` and every
    generator column ``g`` (input channels and tagged initial states), where
    ``Ct`` stacks the readout matrices of all modes.  Words are processed one
    length level at a time so the inner work is a pair of batched matrix
    products per level.
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    sys = r.sys
    D, n = sys.D, sys.n
    X = _generator_matrix(r)
    J = X.shape[1]
    Ct = sys.stacked_C()
    offs = level_offsets(D, max_order)
    W = int(offs[-1])
    values = np.empty((J, W, sys.p * D))
    A_stack = np.stack([sys.A[q] for q in sys.alphabet.modes])
    states = X[None, :, :]
    for k in range(max_order + 1):
        values[:, offs[k] : offs[k + 1], :] = np.einsum(
            "ob,wbj->jwo", Ct, states, optimize=True
        )
        if k < max_order:
            # next level in lex order: word w.q lands at slot val(w)*D + idx(q)
            states = np.einsum("qab,wbj->wqaj", A_stack, states, optimize=True)
            states = states.reshape(-1, n, J)
    return MarkovFamily(sys.alphabet, sys.p, sys.m, max_order, r.tags, values)


_STENCIL = np.array([-1.5, 2.0, -0.5])  # one-sided first derivative, O(h^2)


def _mixed_forward_diff(f, nvars: int, h: float) -> np.ndarray:
    """Mixed first partial derivative in every variable at the origin, using
    the one-sided three-point stencil per variable (times live on t >= 0)."""
    total = 0.0
    for grid in itertools.product(range(3), repeat=nvars):
        wgt = np.prod(_STENCIL[list(grid)]) if nvars else 1.0
        total = total + wgt * f(np.asarray(grid, dtype=float) * h)
    return total / h**nvars


def finite_diff_markov(
    r: Realization, idx: SeriesIndex, w, q: str, h: float = 1e-3
) -> np.ndarray:
    """Markov parameter from its derivative definition, by finite differences.

    Approximates the mixed first-order switching-time derivative of the
    simulated output at zero: for an initial tag the zero-input response
    through modes ``w + (q,)``; for an input channel the difference between
    the unit-input and zero-input responses through ``(q0,) + w + (q,)``.
    Restricted to ``|w| <= 2``, where the ``O(h^2)`` stencil stays well
    conditioned.
    """
    word = r.sys.alphabet.check_word(w)
    if len(word) > 2:
        raise OrderTooHigh(f"finite differences support |w| <= 2, got {len(word)}")
    if not (h > 0):
        raise ValueError("step h must be positive")
    if q not in r.sys.alphabet:
        raise KeyError(f"unknown mode {q!r}")
    sys = r.sys
    zero_state = Realization(sys, {"_origin": np.zeros(sys.n)})

    if isinstance(idx, InitialTag):
        r.initial_state(idx.name)  # raises UnknownTag early

        def f(ts):
            sched = list(zip(word, ts)) + [(q, 0.0)]
            total = float(np.sum(ts)) + 1.0
            y, _ = simulate(r, idx.name, PiecewiseConstantInput.zero(sys.m, total), sched)
            return y

        return _mixed_forward_diff(f, len(word), h)

    if isinstance(idx, InputChannel):
        if idx.mode not in sys.alphabet or not 1 <= idx.channel <= sys.m:
            raise UnknownIndex(f"unknown series index {idx!r}")
        ej = np.zeros(sys.m)
        ej[idx.channel - 1] = 1.0
        modes = (idx.mode,) + word

        def f(ts):
            sched = list(zip(modes, ts)) + [(q, 0.0)]
            total = float(np.sum(ts)) + 1.0
            y1, _ = simulate(
                zero_state, "_origin", PiecewiseConstantInput.constant(ej, total), sched
            )
            y0, _ = simulate(
                zero_state, "_origin", PiecewiseConstantInput.zero(sys.m, total), sched
            )
            return y1 - y0

        return _mixed_forward_diff(f, len(word) + 1, h)

    raise UnknownIndex(f"unknown series index {idx!r}")
