import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from lsreal import (
    InitialTag,
    InputChannel,
    PiecewiseConstantInput,
    Realization,
    finite_diff_markov,
    kernel_G,
    kernel_K,
    markov_from_lss,
    mode_exp,
    simulate,
)
from lsreal.errors import (
    DurationMismatch,
    EmptyWord,
    NonFiniteInput,
    OrderTooHigh,
    UnknownTag,
)

from conftest import naive_markov, random_realization


def ode_output(r, tag, u_value, steps, rtol=1e-12, atol=1e-14):
    """Independent trajectory oracle: adaptive ODE integration per dwell."""
    sys = r.sys
    x = r.mu[tag].copy()
    u = np.atleast_1d(np.asarray(u_value, dtype=float))
    for q, dur in steps:
        if dur > 0:
            A, B = sys.A[q], sys.B[q]
            sol = solve_ivp(
                lambda t, x: A @ x + B @ u,
                (0.0, dur),
                x,
                rtol=rtol,
                atol=atol,
                dense_output=False,
            )
            x = sol.y[:, -1]
    return sys.C[steps[-1][0]] @ x, x


# -- mode_exp ---------------------------------------------------------------


def test_exp_of_zero_matrix_is_identity(demo):
    sys = demo.sys
    z = Realization(
        type(sys)(
            sys.alphabet,
            {q: np.zeros((3, 3)) for q in sys.alphabet.modes},
            {q: np.zeros((3, 1)) for q in sys.alphabet.modes},
            {q: np.zeros((1, 3)) for q in sys.alphabet.modes},
        ),
        {},
    )
    assert np.allclose(mode_exp(z.sys, "q1", 7.0), np.eye(3), rtol=0, atol=1e-14)


def test_exp_diagonal_mode(demo):
    E = mode_exp(demo.sys, "q2", 1.0)
    expected = np.diag([1.0, math.e**2, 1.0, 1.0, math.e**3])
    assert np.allclose(E, expected, rtol=1e-12)


def test_exp_nilpotent_mode_on_basis_vector(demo):
    e5 = np.zeros(5)
    e5[4] = 1.0
    v = mode_exp(demo.sys, "q1", 1.0) @ e5
    assert np.allclose(v, [0.0, 1 / 6, 1 / 2, 1.0, 1.0], rtol=1e-12)


def test_exp_rejects_non_finite_time(demo):
    with pytest.raises(NonFiniteInput):
        mode_exp(demo.sys, "q1", float("inf"))


@pytest.mark.parametrize("seed", range(5))
def test_exp_semigroup(seed):
    rng = np.random.default_rng(seed)
    r = random_realization(rng)
    q = r.sys.alphabet.modes[0]
    a, b = rng.uniform(0, 2, 2)
    lhs = mode_exp(r.sys, q, a) @ mode_exp(r.sys, q, b)
    rhs = mode_exp(r.sys, q, a + b)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


# -- simulate -----------------------------------------------------------------


def test_simulate_diagonal_growth(demo):
    u = PiecewiseConstantInput.zero(1, 2.0)
    y, _ = simulate(demo, "f2", u, [("q2", 1.0)])
    assert y[0] == pytest.approx(20.085536923187668, rel=1e-9)


def test_simulate_zero_state_zero_input(demo):
    u = PiecewiseConstantInput.zero(1, 5.0)
    y, x = simulate(demo, "f1", u, [("q1", 1.0), ("q2", 2.0), ("q1", 0.5)])
    assert np.allclose(y, 0) and np.allclose(x, 0)


def test_simulate_constant_input_nilpotent_mode(demo):
    # y(1) = integral of (1-s)^3/6 over [0,1] = 1/24; cross-checked by the
    # ODE oracle below
    u = PiecewiseConstantInput.constant([1.0], 1.0)
    y, _ = simulate(demo, "f1", u, [("q1", 1.0)])
    assert y[0] == pytest.approx(1 / 24, rel=1e-9)
    y_ode, _ = ode_output(demo, "f1", [1.0], [("q1", 1.0)])
    assert y[0] == pytest.approx(y_ode[0], rel=1e-8)


@pytest.mark.parametrize("seed", range(4))
def test_simulate_matches_ode(seed):
    rng = np.random.default_rng(100 + seed)
    r = random_realization(rng, n_max=4)
    steps = [
        (r.sys.alphabet.modes[int(rng.integers(r.sys.D))], float(rng.uniform(0, 0.8)))
        for _ in range(3)
    ]
    uval = rng.uniform(-1, 1, r.sys.m)
    u = PiecewiseConstantInput.constant(uval, sum(t for _, t in steps) + 1.0)
    y, x = simulate(r, "f0", u, steps)
    y_ode, x_ode = ode_output(r, "f0", uval, steps)
    assert np.allclose(y, y_ode, rtol=1e-8, atol=1e-10)
    assert np.allclose(x, x_ode, rtol=1e-8, atol=1e-10)


def test_simulate_piecewise_input_segments(demo):
    # input switches value inside a single dwell; compare against two runs
    u = PiecewiseConstantInput((0.0, 0.5, 1.0), ((1.0,), (-2.0,)))
    y, x = simulate(demo, "f2", u, [("q1", 1.0)])
    y_ode1, x1 = ode_output(demo, "f2", [1.0], [("q1", 0.5)])
    r_mid = Realization(demo.sys, {"mid": x1})
    y_ode, _ = ode_output(r_mid, "mid", [-2.0], [("q1", 0.5)])
    assert y[0] == pytest.approx(y_ode[0], rel=1e-8)


def test_simulate_unknown_tag(demo):
    with pytest.raises(UnknownTag):
        simulate(demo, "nope", PiecewiseConstantInput.zero(1, 1.0), [("q1", 1.0)])


def test_simulate_input_too_short(demo):
    with pytest.raises(DurationMismatch):
        simulate(demo, "f2", PiecewiseConstantInput.zero(1, 1.0), [("q1", 2.0)])


def test_simulate_equals_kernel_K_for_zero_input(demo):
    for t in (0.0, 0.3, 1.7):
        y, _ = simulate(demo, "f2", PiecewiseConstantInput.zero(1, 2.0), [("q2", t)])
        assert np.array_equal(y, kernel_K(demo, "f2", ("q2",), (t,)))


# -- kernels ------------------------------------------------------------------


def test_kernel_G_nilpotent_value(demo):
    assert kernel_G(demo.sys, ("q1",), (1.0,))[0, 0] == pytest.approx(1 / 6, rel=1e-12)


def test_kernel_G_zero_time_is_CB(demo):
    for q in demo.sys.alphabet.modes:
        assert np.allclose(
            kernel_G(demo.sys, (q,), (0.0,)), demo.sys.C[q] @ demo.sys.B[q]
        )


def test_kernel_G_semigroup_on_repeated_mode(demo):
    a, b = 0.4, 0.9
    merged = kernel_G(demo.sys, ("q2",), (a + b,))
    split = kernel_G(demo.sys, ("q2", "q2"), (a, b))
    assert np.allclose(merged, split, rtol=1e-10)


def test_kernel_K_diagonal_value(demo):
    for s in (0.0, 0.5, 1.25):
        assert kernel_K(demo, "f2", ("q2",), (s,))[0] == pytest.approx(
            math.exp(3 * s), rel=1e-12
        )


def test_kernel_K_zero_initial_state(demo):
    assert np.allclose(kernel_K(demo, "f1", ("q1", "q2"), (0.3, 0.7)), 0)


def test_kernel_K_trailing_zero_time(demo):
    # exp(A_q1) e5 keeps a unit fifth coordinate, so reading through mode q2
    # after a zero-duration dwell gives exactly 1
    val = kernel_K(demo, "f2", ("q1", "q2"), (1.0, 0.0))
    assert val[0] == pytest.approx(1.0, rel=1e-12)


def test_kernel_empty_word_rejected(demo):
    with pytest.raises(EmptyWord):
        kernel_G(demo.sys, (), ())
    with pytest.raises(EmptyWord):
        kernel_K(demo, "f2", (), ())


def test_kernel_times_length_mismatch(demo):
    with pytest.raises(DurationMismatch):
        kernel_G(demo.sys, ("q1",), (1.0, 2.0))


@pytest.mark.parametrize("seed", range(10))
def test_kernel_merge_identity(seed):
    rng = np.random.default_rng(200 + seed)
    r = random_realization(rng, n_max=4)
    modes = r.sys.alphabet.modes
    w_pre = [modes[int(rng.integers(len(modes)))] for _ in range(int(rng.integers(0, 2)))]
    w_post = [modes[int(rng.integers(len(modes)))] for _ in range(int(rng.integers(0, 2)))]
    q = modes[int(rng.integers(len(modes)))]
    t, t_hat = rng.uniform(0, 1.0, 2)
    times_pre = list(rng.uniform(0, 1.0, len(w_pre)))
    times_post = list(rng.uniform(0, 1.0, len(w_post)))
    word_split = tuple(w_pre) + (q, q) + tuple(w_post)
    word_merged = tuple(w_pre) + (q,) + tuple(w_post)
    ts_split = times_pre + [t, t_hat] + times_post
    ts_merged = times_pre + [t + t_hat] + times_post
    g1 = kernel_G(r.sys, word_split, ts_split)
    g2 = kernel_G(r.sys, word_merged, ts_merged)
    assert np.allclose(g1, g2, rtol=1e-10, atol=1e-12)
    k1 = kernel_K(r, "f0", word_split, ts_split)
    k2 = kernel_K(r, "f0", word_merged, ts_merged)
    assert np.allclose(k1, k2, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_kernel_zero_time_insertion(seed):
    rng = np.random.default_rng(300 + seed)
    r = random_realization(rng, n_max=4)
    modes = r.sys.alphabet.modes
    pick = lambda: modes[int(rng.integers(len(modes)))]
    base = (pick(), pick(), pick())
    times = list(rng.uniform(0, 1.0, 3))
    pos = int(rng.integers(1, 3))  # keep the inserted mode interior
    q = pick()
    word_ins = base[:pos] + (q,) + base[pos:]
    ts_ins = times[:pos] + [0.0] + times[pos:]
    assert np.allclose(
        kernel_K(r, "f0", word_ins, ts_ins),
        kernel_K(r, "f0", base, times),
        rtol=1e-10,
        atol=1e-12,
    )
    assert np.allclose(
        kernel_G(r.sys, word_ins, ts_ins),
        kernel_G(r.sys, base, times),
        rtol=1e-10,
        atol=1e-12,
    )


# -- Markov parameters ---------------------------------------------------------


def test_markov_known_values(demo_family):
    mk = demo_family
    assert mk.block(InputChannel("q2", 1), (), "q1")[0] == 1.0
    assert mk.block(InputChannel("q2", 1), ("q2",), "q1")[0] == 2.0
    assert mk.block(InputChannel("q1", 1), ("q2",) * 3, "q2")[0] == 27.0
    assert mk.block(InitialTag("f1"), ("q1", "q2"), "q2")[0] == 0.0
    assert mk.block(InitialTag("f2"), ("q2", "q2"), "q2")[0] == 9.0


@pytest.mark.parametrize("seed", range(5))
def test_markov_matches_naive_products(seed):
    rng = np.random.default_rng(400 + seed)
    r = random_realization(rng, n_max=4)
    mk = markov_from_lss(r, 3)
    words = [(), *[(q,) for q in r.sys.alphabet.modes]]
    words += [(r.sys.alphabet.modes[0], q) for q in r.sys.alphabet.modes]
    for idx in mk.indices:
        for w in words:
            for q_out in r.sys.alphabet.modes:
                assert np.allclose(
                    mk.block(idx, w, q_out),
                    naive_markov(r, idx, w, q_out),
                    rtol=1e-13,
                    atol=1e-14,
                )


def test_markov_entry_stacking_order(demo_family):
    e = demo_family.entry(InputChannel("q1", 1), ("q2", "q2"))
    assert np.allclose(e, [0.0, 9.0])  # (output q1, output q2)


# -- finite differences ---------------------------------------------------------


def test_finite_diff_first_order_state(demo):
    val = finite_diff_markov(demo, InitialTag("f2"), ("q2",), "q2", h=1e-3)
    assert val[0] == pytest.approx(3.0, rel=1e-3)


def test_finite_diff_zero_order_input(demo):
    val = finite_diff_markov(demo, InputChannel("q2", 1), (), "q1", h=1e-3)
    assert val[0] == pytest.approx(1.0, rel=1e-3)


def test_finite_diff_zero_system():
    rng = np.random.default_rng(0)
    r = random_realization(rng, n=3, D=2, m=1, p=1)
    zero = Realization(
        type(r.sys)(
            r.sys.alphabet,
            r.sys.A,
            {q: np.zeros((3, 1)) for q in r.sys.alphabet.modes},
            r.sys.C,
        ),
        {"f0": np.zeros(3)},
    )
    v1 = finite_diff_markov(zero, InitialTag("f0"), ("s0",), "s1")
    v2 = finite_diff_markov(zero, InputChannel("s0", 1), ("s1",), "s0")
    assert np.allclose(v1, 0, atol=1e-9) and np.allclose(v2, 0, atol=1e-9)


def test_finite_diff_order_cap(demo):
    with pytest.raises(OrderTooHigh):
        finite_diff_markov(demo, InitialTag("f2"), ("q1", "q1", "q2"), "q2")


@pytest.mark.parametrize("seed", range(3))
def test_finite_diff_agrees_with_products(seed):
    rng = np.random.default_rng(500 + seed)
    r = random_realization(rng, n_max=3, D_max=2, mp_max=2)
    mk = markov_from_lss(r, 2)
    modes = r.sys.alphabet.modes
    words = [(), (modes[0],), (modes[-1], modes[0])]
    for idx in mk.indices:
        for w in words:
            for q in modes:
                fd = finite_diff_markov(r, idx, w, q, h=1e-3)
                ex = mk.block(idx, w, q)
                assert np.allclose(fd, ex, rtol=1e-3, atol=1e-6)
