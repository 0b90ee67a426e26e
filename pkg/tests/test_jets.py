import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from thinheat.jets import (
    THETA,
    T,
    ConstantFunction,
    GridSurfaceFunction,
    Jet,
    PeriodicSplineFunction,
    SymbolicSurfaceFunction,
    as_surface_function,
)

F_EXPR = sp.exp(-T) * (1 + 0.3 * sp.cos(THETA)) + 0.2 * sp.sin(2 * THETA) * T
G_EXPR = 2 + sp.cos(THETA + T)


def _sym(e, th, t, n_th=0, n_t=0):
    d = e
    if n_th:
        d = sp.diff(d, THETA, n_th)
    if n_t:
        d = sp.diff(d, T, n_t)
    return sp.lambdify((THETA, T), d, "numpy")(th, t) + 0 * th


@pytest.mark.parametrize("op", ["add", "sub", "mul", "div"])
def test_jet_arithmetic_matches_sympy(op):
    th = np.linspace(0, 2 * np.pi, 13)
    t = 0.37
    f, g = SymbolicSurfaceFunction(F_EXPR), SymbolicSurfaceFunction(G_EXPR)
    jf, jg = f.jet(th, t), g.jet(th, t)
    table = {"add": (jf + jg, F_EXPR + G_EXPR), "sub": (jf - jg, F_EXPR - G_EXPR),
             "mul": (jf * jg, F_EXPR * G_EXPR), "div": (jf / jg, F_EXPR / G_EXPR)}
    jet, expr = table[op]
    np.testing.assert_allclose(jet.v, _sym(expr, th, t), atol=1e-13)
    np.testing.assert_allclose(jet.th, _sym(expr, th, t, 1), atol=1e-12)
    np.testing.assert_allclose(jet.thth, _sym(expr, th, t, 2), atol=1e-12)
    np.testing.assert_allclose(jet.t, _sym(expr, th, t, 0, 1), atol=1e-12)


def test_jet_exp_and_sqrt():
    th = np.linspace(0, 2 * np.pi, 9)
    g = SymbolicSurfaceFunction(G_EXPR)
    for jet, expr in ((g.jet(th, 0.2).exp(), sp.exp(G_EXPR)), (g.jet(th, 0.2).sqrt(), sp.sqrt(G_EXPR))):
        np.testing.assert_allclose(jet.thth, _sym(expr, th, 0.2, 2), rtol=1e-12)
        np.testing.assert_allclose(jet.t, _sym(expr, th, 0.2, 0, 1), rtol=1e-12)


def test_symbolic_arithmetic_stays_symbolic():
    f = SymbolicSurfaceFunction(F_EXPR)
    out = (f + 1.0) * SymbolicSurfaceFunction(G_EXPR) - ConstantFunction(2.0)
    assert isinstance(out, SymbolicSurfaceFunction)
    # mixed partial survives because the result is symbolic
    val = out.partial(0.3, 0.4, 1, 1)
    ref = _sym((F_EXPR + 1) * G_EXPR - 2, 0.3, 0.4, 1, 1)
    assert val == pytest.approx(float(ref), rel=1e-12)


def test_composite_function_partials_and_limits():
    f = SymbolicSurfaceFunction(F_EXPR)
    comp = f * PeriodicSplineFunction(np.ones(32))
    assert comp(0.1, 0.2) == pytest.approx(float(_sym(F_EXPR, 0.1, 0.2)), rel=1e-12)
    with pytest.raises(NotImplementedError):
        comp.partial(0.1, 0.2, 1, 1)


def test_grid_function_reproduces_trigonometric_polynomial():
    n = 32
    times = np.linspace(0, 1, 41)
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    def exact(a, t):
        return np.cos(3 * a) * (1 + t**2) + np.sin(a) * t
    vals = np.array([exact(th, t) for t in times])
    fn = GridSurfaceFunction(times, vals)
    q = np.linspace(0, 2 * np.pi, 57)
    np.testing.assert_allclose(fn(q, 0.5), exact(q, 0.5), atol=1e-12)
    np.testing.assert_allclose(fn.partial(q, 0.5, 1, 0), -3 * np.sin(3 * q) * 1.25 + np.cos(q) * 0.5,
                               atol=1e-11)
    # cubic spline in time is exact for quadratics in t
    np.testing.assert_allclose(fn.partial(q, 0.5, 0, 1), np.cos(3 * q) * 1.0 + np.sin(q), atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 2 * np.pi))
def test_as_surface_function_constants(c, theta):
    fn = as_surface_function(c)
    assert fn(theta, 0.3) == pytest.approx(c)
    assert fn.partial(theta, 0.3, 1, 0) == 0.0
    assert fn.partial(theta, 0.3, 0, 1) == 0.0


def test_jet_const_lift():
    j = Jet.const(2.0, (3,))
    out = 1.0 - j * 3.0
    np.testing.assert_allclose(out.v, -5.0)
    np.testing.assert_allclose(out.th, 0.0)
