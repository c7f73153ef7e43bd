"""Shared fixtures: the hand-checkable demo system and random system draws.

The demo system has five states and two modes; mode "q1" is a nilpotent
shift chain and mode "q2" is diagonal, so every Markov parameter is a short
hand computation.  One state direction is unobservable, so the minimal
realization of its input-output behaviour has dimension 4 (the reference
`demo_minimal` below realizes the same behaviour directly).
"""
from __future__ import annotations

import numpy as np
import pytest

from lsreal import Alphabet, Lss, MarkovFamily, Realization, markov_from_lss


def _demo() -> Realization:
    ab = Alphabet(("q1", "q2"))
    A1 = np.zeros((5, 5))
    A1[1, 2] = A1[2, 3] = A1[3, 4] = 1.0  # shift chain e5 -> e4 -> e3 -> e2
    A2 = np.zeros((5, 5))
    A2[1, 1] = 2.0
    A2[4, 4] = 3.0
    B1 = np.zeros((5, 1))
    B1[4, 0] = 1.0
    B2 = np.zeros((5, 1))
    B2[1, 0] = 1.0
    C1 = np.zeros((1, 5))
    C1[0, 1] = 1.0
    C2 = np.zeros((1, 5))
    C2[0, 4] = 1.0
    sys = Lss(ab, {"q1": A1, "q2": A2}, {"q1": B1, "q2": B2}, {"q1": C1, "q2": C2})
    mu = {"f1": np.zeros(5), "f2": np.array([0.0, 0, 0, 0, 1])}
    return Realization(sys, mu)


def _demo_minimal() -> Realization:
    ab = Alphabet(("q1", "q2"))
    A1 = np.array(
        [[0.0, 0, 0, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 0, 1, 0]]
    )
    A2 = np.diag([3.0, 2.0, 0.0, 0.0])
    B1 = np.array([[1.0], [0], [0], [0]])
    B2 = np.array([[0.0], [1], [0], [0]])
    C1 = np.array([[0.0, 1, 0, 0]])
    C2 = np.array([[1.0, 0, 0, 0]])
    sys = Lss(ab, {"q1": A1, "q2": A2}, {"q1": B1, "q2": B2}, {"q1": C1, "q2": C2})
    return Realization(sys, {"f1": np.zeros(4), "f2": np.array([1.0, 0, 0, 0])})


@pytest.fixture(scope="session")
def demo() -> Realization:
    return _demo()


@pytest.fixture(scope="session")
def demo_minimal() -> Realization:
    return _demo_minimal()


@pytest.fixture(scope="session")
def demo_family(demo) -> MarkovFamily:
    return markov_from_lss(demo, 7)


def random_realization(
    rng: np.random.Generator,
    n: int | None = None,
    D: int | None = None,
    m: int | None = None,
    p: int | None = None,
    n_tags: int = 2,
    n_max: int = 5,
    D_max: int = 3,
    mp_max: int = 2,
) -> Realization:
    """Random system with entries uniform in [-1, 1]."""
    n = int(rng.integers(1, n_max + 1)) if n is None else n
    D = int(rng.integers(1, D_max + 1)) if D is None else D
    m = int(rng.integers(1, mp_max + 1)) if m is None else m
    p = int(rng.integers(1, mp_max + 1)) if p is None else p
    ab = Alphabet(tuple(f"s{i}" for i in range(D)))
    u = lambda *shape: rng.uniform(-1.0, 1.0, shape)
    sys = Lss(
        ab,
        {q: u(n, n) for q in ab.modes},
        {q: u(n, m) for q in ab.modes},
        {q: u(p, n) for q in ab.modes},
    )
    mu = {f"f{i}": u(n) for i in range(n_tags)}
    return Realization(sys, mu)


def naive_markov(r: Realization, index, word, out_mode: str) -> np.ndarray:
    """Plain-loop product oracle, independent of the batched family builder."""
    from lsreal import InitialTag, InputChannel

    sys = r.sys
    if isinstance(index, InputChannel):
        x = sys.B[index.mode][:, index.channel - 1]
    else:
        x = r.mu[index.name]
    for q in word:
        x = sys.A[q] @ x
    return sys.C[out_mode] @ x
