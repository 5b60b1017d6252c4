from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import expm

from relaxcouple.coupling import derive
from relaxcouple.errors import InstabilityError, ValidationError
from relaxcouple.models import carleman, grad_moment
from relaxcouple.solver import (
    DGState,
    Grid,
    advance_upwind,
    dg_l2_squared,
    dg_rhs,
    dg_sampler,
    function_sampler,
    fv_sampler,
    l2_error,
    project_initial,
    run_dd,
    run_reference,
    run_single,
    single_domain_rhs,
    ssp_rk3_step,
    weighted_l2,
)
from relaxcouple.solver import dg
from relaxcouple.solver.fv import FVState, cell_averages
from relaxcouple.sysmodel import build_system

from conftest import carleman_init, grad_init


# grid ------------------------------------------------------------------------

def test_grid_interface_is_a_face():
    g = Grid.uniform(-0.4, 0.4, 0.1)
    assert g.n_left == 4 and g.n_right == 4
    assert g.edges_left()[-1] == 0.0 and g.edges_right()[0] == 0.0
    assert np.all(g.widths() > 0)
    with pytest.raises(ValidationError):
        Grid(0.1, 1.0, 2, 2)


# projection ------------------------------------------------------------------

def test_project_constant_and_linear(car):
    g = Grid(-1.0, 1.0, 3, 2)
    st = project_initial(lambda x: np.ones((x.size, 2)), g, 2, car)
    assert np.allclose(st.left[:, :, 0], 1.0) and np.allclose(st.left[:, :, 1:], 0.0, atol=1e-14)
    edges = np.array([0.5, 1.5])
    c = dg.project(lambda x: x[:, None], edges, 3, 1)
    # on [0.5, 1.5]: x = 1 + xi / 2
    assert np.allclose(c[0, 0], [1.0, 0.5, 0.0, 0.0], atol=1e-12)


def test_project_polynomials_exactly(rng):
    coef = rng.normal(size=4)
    edges = np.array([-1.0, -0.2, 0.7])
    c = dg.project(lambda x: np.polynomial.polynomial.polyval(x, coef)[:, None], edges, 3, 1)
    x = np.linspace(-0.99, 0.69, 17)
    assert np.allclose(dg.evaluate(c, edges, x)[:, 0], np.polynomial.polynomial.polyval(x, coef), atol=1e-12)


def test_carleman_initial_q_is_zero(car):
    st = project_initial(carleman_init, Grid.uniform(-0.4, 0.4, 0.05), 2, car)
    assert np.array_equal(st.left[:, 1, :], np.zeros_like(st.left[:, 1, :]))
    assert st.right.shape[1] == 1


def test_dg_state_invariants(car):
    with pytest.raises(ValidationError):
        DGState(2, np.zeros((2, 2, 2)), np.zeros((2, 1, 3)))
    with pytest.raises(InstabilityError):
        DGState(1, np.full((1, 2, 2), np.nan), np.zeros((1, 1, 2)))


# spatial operator ------------------------------------------------------------

def test_derivative_matrix_k2():
    # int P_j' P_l over [-1, 1]
    assert np.allclose(dg.derivative_matrix(2), [[0, 0, 0], [2, 0, 0], [0, 2, 0]], atol=1e-14)


def test_advection_hand_evaluation():
    edges = np.arange(5.0)
    c = dg.project(lambda x: x[:, None], edges, 1, 1)
    d = single_domain_rhs(np.array([[1.0]]), None, 1.0, 1)(c)
    assert np.allclose(d[:, 0, 0], -1.0, atol=1e-14)
    assert np.allclose(d[:, 0, 1], 0.0, atol=1e-14)


def test_flux_consistency(grad5):
    from relaxcouple.spectral import char_decomp

    ch = char_decomp(grad5)
    U = np.random.default_rng(3).normal(size=(1, 6))
    faces = dg.upwind_faces(np.vstack([U, U]), np.vstack([U, U]), ch.A_plus, ch.A_minus)
    assert np.allclose(faces[1], grad5.A @ U[0], atol=1e-13)


@pytest.mark.parametrize("make", [carleman, lambda: grad_moment(5)])
def test_equilibrium_constant_is_steady(make):
    s = make()
    d = derive(s)
    g = Grid.uniform(-1.0, 1.0, 0.25)
    u0 = np.linspace(0.3, 1.1, s.n_eq)
    st = project_initial(lambda x: np.tile(np.concatenate([u0, np.zeros(s.m)]), (x.size, 1)), g, 2, s)
    rate = dg_rhs(st, s, d.char, d.equil, d.matrices, g)
    # the outer cells see the zero exterior state; everything else must be at rest
    assert np.max(np.abs(rate.left[1:])) <= 1e-12
    assert np.max(np.abs(rate.right[:-1])) <= 1e-12


def test_dg_rhs_needs_coupling(car):
    g = Grid.uniform(-1.0, 1.0, 0.5)
    st = project_initial(carleman_init, g, 1, car)
    d = derive(car)
    with pytest.raises(ValidationError, match="coupling"):
        dg_rhs(st, car, d.char, d.equil, None, g)


# time stepping ---------------------------------------------------------------

def test_rk3_zero_rhs():
    u = np.array([1.0, -2.0])
    assert np.array_equal(ssp_rk3_step(u, 0.3, lambda v: 0 * v), u)


def test_rk3_stability_polynomial():
    assert ssp_rk3_step(1.0, 0.1, lambda v: -v) == pytest.approx(1 - 0.1 + 0.005 - 0.1**3 / 6, abs=1e-15)
    with pytest.raises(ValueError):
        ssp_rk3_step(1.0, 0.0, lambda v: v)


def test_rk3_local_error_against_matrix_exponential(rng):
    L = rng.normal(size=(3, 3))
    u = rng.normal(size=3)
    errs = []
    for h in (0.1, 0.05, 0.025):
        errs.append(np.linalg.norm(ssp_rk3_step(u, h, lambda v: L @ v) - expm(h * L) @ u))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.8)


def test_run_dd_zero_time_returns_projection(car):
    g = Grid.uniform(-0.4, 0.4, 0.1)
    st = run_dd(car, None, g, 2, 0.17, 0.0, carleman_init)
    ref = project_initial(carleman_init, g, 2, car)
    assert np.array_equal(st.left, ref.left) and st.time == 0.0


def test_run_dd_lands_on_t_end(car):
    g = Grid.uniform(-0.4, 0.4, 0.1)
    assert run_dd(car, derive(car).matrices, g, 2, 0.17, 0.123, carleman_init).time == 0.123
    with pytest.raises(ValidationError):
        run_dd(car, None, g, 2, -1.0, 0.1, carleman_init)


def test_carleman_dd_enforces_q_zero_at_interface(car):
    qs = []
    for dx in (0.02, 0.01, 0.005):
        g = Grid.uniform(-0.4, 0.4, dx)
        st = run_dd(car, None, g, 2, 0.17, 0.2, carleman_init)
        qs.append(abs(dg.traces(st.left)[1][-1, 1]))
    assert qs[2] < qs[0] and qs[2] < 1e-4


def test_run_dd_instability_reported(car):
    g = Grid.uniform(-0.4, 0.4, 0.05)
    with pytest.raises(InstabilityError, match="instability detected at t="):
        run_dd(car, None, g, 2, 5.0, 50.0, carleman_init)


def test_dg_order_manufactured_traveling_waves(grad5):
    A = grad5.A
    lam, R = np.linalg.eigh(A)
    amp = np.linspace(1.0, 0.5, 6)

    def exact(x, t):
        w = amp[None, :] * np.exp(-8.0 * (x[:, None] - lam[None, :] * t) ** 2)
        return w @ R.T

    errs = []
    for N in (40, 80, 160):
        edges = np.linspace(-6.0, 6.0, N + 1)
        c = run_single(A, None, edges, 2, 0.17, 0.5, lambda x: exact(x, 0.0))
        num = function_sampler(lambda x: dg.evaluate(c, edges, x), (-6.0, 6.0), 6)
        ex = function_sampler(lambda x: exact(x, 0.5), (-6.0, 6.0), 6)
        errs.append(np.linalg.norm(l2_error(num, ex, (-6.0, 6.0))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 2.7), orders


def test_interface_matches_one_domain_run():
    A = np.zeros((3, 3))
    A[:2, :2] = [[1.0, 0.5], [0.5, -1.0]]
    A[2, 2] = 0.7
    s = build_system(3, 1, A, [[-1.0]])
    g = Grid.uniform(-2.0, 2.0, 0.1)

    def init(x):
        return np.stack([np.exp(-4 * x**2), np.cos(x) * np.exp(-x**2), np.sin(x)], axis=1)

    st = run_dd(s, None, g, 2, 0.17, 0.6, init)
    # max|eig| of A and of A11 coincide, so both runs take identical steps
    one = run_single(A[:2, :2], None, g.edges(), 2, 0.17, 0.6, lambda x: init(x)[:, :2])
    assert np.max(np.abs(st.left[:, :2] - one[: g.n_left])) <= 1e-12
    assert np.max(np.abs(st.right - one[g.n_left:])) <= 1e-12


@pytest.mark.parametrize("solver", ["dg", "fv"])
def test_conservation_without_source(solver):
    A = grad_moment(3).A
    Q = np.zeros((4, 4))
    edges = np.linspace(-4.0, 4.0, 161)

    def init(x):
        return np.exp(-10 * x[:, None] ** 2) * np.array([1.0, -0.5, 0.3, 0.2])

    t_end = 0.5
    if solver == "dg":
        c0 = dg.project(init, edges, 2, 4)
        c1 = run_single(A, Q, edges, 2, 0.17, t_end, init)
        mass0, mass1 = (c0[:, :, 0] * 0.05).sum(0), (c1[:, :, 0] * 0.05).sum(0)
    else:
        U0 = cell_averages(init, edges)
        U1, _ = advance_upwind(A, Q, np.ones(160), edges, U0, 0.67 * 0.05 / 2.4, t_end)
        mass0, mass1 = (U0 * 0.05).sum(0), (U1 * 0.05).sum(0)
    assert np.max(np.abs(mass1 - mass0)) <= 1e-10 * t_end


# reference solver ------------------------------------------------------------

def test_fv_constant_state_preserved_away_from_boundary():
    A = carleman().A
    edges = np.linspace(-1.0, 1.0, 201)
    U0 = np.tile([0.7, -0.2], (200, 1))
    U1, t = advance_upwind(A, None, np.ones(200), edges, U0, 0.005, 0.1)
    assert t == 0.1
    # information travels at most one cell per step (20 steps)
    assert np.max(np.abs(U1[25:-25] - U0[25:-25])) <= 1e-15


def test_fv_stiff_decay_matches_exponential():
    s = build_system(2, 1, [[0.0, 1e-9], [1e-9, 0.0]], [[-2.0]], eps_right=0.5)
    edges = np.array([-1.0, 0.0, 1.0])
    U0 = np.array([[0.0, 1.0], [0.0, 1.0]])
    inv_eps = np.array([1.0, 2.0])
    U1, _ = advance_upwind(s.A, s.Q, inv_eps, edges, U0, 1e-4, 0.25)
    # forward Euler reproduces its own amplification factor exactly
    assert U1[0, 1] == pytest.approx((1 - 2e-4) ** 2500, rel=1e-8)
    assert U1[1, 1] == pytest.approx((1 - 4e-4) ** 2500, rel=1e-8)
    assert U1[0, 1] == pytest.approx(math.exp(-2.0 * 0.25), rel=5e-4)
    assert U1[1, 1] == pytest.approx(math.exp(-4.0 * 0.25), rel=5e-4)


def test_fv_stiff_time_step_guard(car):
    from relaxcouple.solver.fv import fv_time_step

    s = car.with_eps(1e-3)
    assert fv_time_step(s.A, s.Q, 1e-3, 1e-4, 0.67) == pytest.approx(0.67e-4)
    assert fv_time_step(s.A, s.Q, 1e-5, 1e-4, 0.67) == pytest.approx(0.5e-5)


def test_reference_run_is_stable(car):
    s = car.with_eps(1e-3)
    st = run_reference(s, Grid.uniform(-0.4, 0.4, 1e-3), 0.67, 0.2, carleman_init)
    assert isinstance(st, FVState) and st.time == 0.2
    assert np.all(np.isfinite(st.averages))


@pytest.mark.parametrize("make", [carleman, lambda: grad_moment(5)])
def test_fv_l2_non_increasing(make, rng):
    s = make().with_eps(0.01)
    g = Grid.uniform(-1.0, 1.0, 0.01)
    for _ in range(3):
        coef = rng.normal(size=(4, s.n))
        phase = rng.uniform(0, 2 * np.pi, size=4)

        def init(x):
            modes = np.sin(np.outer(x, np.arange(1, 5)) * 3 + phase)
            return modes @ coef

        norms = []
        run_reference(s, g, 0.67, 0.2, init, monitor=lambda t, st: norms.append(st.l2_norm()))
        n0 = FVState(cell_averages(init, g.edges()), g.edges()).l2_norm()
        seq = np.array([n0] + norms)
        assert np.all(np.diff(seq) <= 1e-12 * seq[0])


# norms -----------------------------------------------------------------------

def test_l2_error_examples():
    a = function_sampler(np.sin, (0.0, 2 * np.pi))
    zero = function_sampler(lambda x: np.zeros_like(x), (0.0, 2 * np.pi))
    assert l2_error(a, a, (0.0, 2 * np.pi))[0] == 0.0
    assert l2_error(a, zero, (0.0, 2 * np.pi))[0] == pytest.approx(math.sqrt(math.pi), abs=1e-6)
    with pytest.raises(ValidationError, match="outside domain"):
        l2_error(a, zero, (-1.0, 1.0))
    with pytest.raises(ValidationError):
        l2_error(a, zero, (0.0, 1.0), samples=100)


def test_samplers_and_padding(car):
    g = Grid.uniform(-0.4, 0.4, 0.1)
    st = project_initial(carleman_init, g, 2, car)
    vals = dg_sampler(st, g, car)(np.array([-0.3, 0.3]))
    assert vals.shape == (2, 2) and vals[1, 1] == 0.0
    assert vals[0, 0] == pytest.approx(np.sin(-0.3) + 1, abs=1e-4)
    fv = FVState(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([-1.0, 0.0, 1.0]))
    assert np.array_equal(fv_sampler(fv)(np.array([-0.5, 0.5])), [[1.0, 2.0], [3.0, 4.0]])


def test_weighted_norm_examples(grad5):
    g = Grid.uniform(-1.0, 1.0, 0.25)
    zero = project_initial(lambda x: np.zeros((x.size, 6)), g, 2, grad5)
    assert weighted_l2(zero, 0.05, grad5, g) == 0.0
    st = project_initial(grad_init(5), g, 2, grad5)
    assert weighted_l2(st, 1.0, grad5, g) == pytest.approx(dg_l2_squared(st, g), rel=1e-12)
    assert weighted_l2(st, 0.05, grad5, g) < dg_l2_squared(st, g)
    with pytest.raises(ValidationError):
        weighted_l2(st, 0.0, grad5, g)


@pytest.mark.parametrize("make", [carleman, lambda: grad_moment(5)])
def test_dg_weighted_norm_growth_bounded(make):
    s = make()
    g = Grid.uniform(-1.0, 1.0, 0.05)
    init = carleman_init if s.n == 2 else grad_init(5)
    w0 = weighted_l2(project_initial(init, g, 2, s), 0.05, s, g)
    seen = []
    run_dd(s, None, g, 2, 0.17, 0.5, init, monitor=lambda t, st: seen.append(weighted_l2(st, 0.05, s, g)))
    assert max(seen) <= 10 * w0
