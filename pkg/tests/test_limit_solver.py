import numpy as np
import pytest

from thinheat.asymptotics import limit_source
from thinheat.errors import InvalidTimeStep
from thinheat.harness import fit_slope
from thinheat.jets import SymbolicSurfaceFunction
from thinheat.limit_solver import (
    LimitProblem,
    advance,
    c21_norm,
    solve,
    solve_lagrangian,
    solve_periodic_tridiagonal,
)
from thinheat.surface_geometry import SurfaceField, circle, ellipse, theta_grid
from thinheat.thin_domain import ProfilePair


def test_periodic_tridiagonal_matches_dense(rng):
    n = 12
    lo, up = rng.normal(size=n), rng.normal(size=n)
    di = 4 + rng.random(n)
    rhs = rng.normal(size=n)
    A = np.diag(di)
    for j in range(n):
        A[j, (j - 1) % n] += lo[j]
        A[j, (j + 1) % n] += up[j]
    np.testing.assert_allclose(solve_periodic_tridiagonal(lo, di, up, rhs), np.linalg.solve(A, rhs),
                               atol=1e-12)


def _grow_problem(n=128, eta0=1.0):
    fam = circle("1 + 0.5*t")
    return LimitProblem(fam, ProfilePair("0", "1"), 1.0, SurfaceField(0.0, np.full(n, eta0)))


def test_steady_state_on_stationary_curve():
    prob = LimitProblem(circle(), ProfilePair("0", "1"), 1.0, SurfaceField(0.0, np.full(32, 2.0)))
    sol = solve(prob, 1.0, 20)
    np.testing.assert_allclose(sol.values, 2.0, atol=1e-14)


def test_zero_data_stays_zero():
    prob = _grow_problem(32, 0.0)
    assert np.all(solve(prob, 1.0, 10).values == 0.0)


def test_growing_circle_exact_decay():
    sol = solve(_grow_problem(128), 1.0, 1000)
    exact = 1.0 / (1.0 + 0.5 * sol.times)
    assert np.abs(sol.values - exact[:, None]).max() < 1e-6
    assert sol.conservation_drift() < 1e-12


def test_c21_norm_closed_form():
    sol = solve(_grow_problem(64), 1.0, 200)
    # |eta| <= 1 and |d-circ eta| <= 1/2, both attained at t = 0
    assert c21_norm(sol) == pytest.approx(1.5, abs=1e-4)
    const = SymbolicSurfaceFunction("-3")
    assert c21_norm(const, circle(), times=[0, 0.5, 1]) == pytest.approx(3.0)
    fn = SymbolicSurfaceFunction("cos(theta)*exp(-t)")
    few = c21_norm(fn, ellipse(), times=[0.0, 0.5, 1.0])
    more = c21_norm(fn, ellipse(), times=np.linspace(0, 1, 11))
    assert more >= few


def test_manufactured_circle_order():
    fam = circle()
    pair = ProfilePair("0", "1")
    exact = SymbolicSurfaceFunction("exp(-t)*cos(theta)")
    f = limit_source(exact, fam, pair, 1.0)
    # f = d_t eta - Lap eta = 0 for this eigenfunction
    np.testing.assert_allclose(f(theta_grid(16), 0.3), 0.0, atol=1e-13)
    errs, hs = [], []
    for lev in range(3):
        n, m = 16 * 2**lev, 10 * 2**lev
        prob = LimitProblem(fam, pair, 1.0, SurfaceField.sample(exact, n, 0.0), f)
        sol = solve(prob, 1.0, m)
        errs.append(np.abs(sol.values[-1] - exact(sol.theta, 1.0)).max())
        hs.append(1.0 / 2**lev)
    slope, r2 = fit_slope(hs, errs)
    assert slope >= 1.9 and r2 >= 0.99


def test_ellipse_self_convergence_with_theta_profile():
    fam = ellipse()
    pair = ProfilePair("0", "1 + 0.2*cos(theta)")
    eta0 = SymbolicSurfaceFunction("1 + 0.3*cos(theta)")
    finals = []
    for lev in range(4):
        n, m = 16 * 2**lev, 10 * 2**lev
        sol = solve(LimitProblem(fam, pair, 1.0, SurfaceField.sample(eta0, n, 0.0)), 1.0, m)
        finals.append(sol.values[-1][:: 2**lev])
    d = [np.abs(finals[i] - finals[i + 1]).max() for i in range(3)]
    orders = np.log2(np.array(d[:-1]) / np.array(d[1:]))
    assert np.all(orders >= 1.9)


def test_conservation_with_theta_profile():
    fam = ellipse()
    prob = LimitProblem(fam, ProfilePair("0", "1 + 0.2*cos(theta)"), 1.0,
                        SurfaceField.sample(SymbolicSurfaceFunction("1 + 0.3*cos(theta)"), 64, 0.0))
    sol = solve(prob, 1.0, 100)
    assert sol.relative_mass_drift() < 1e-3


def test_advance_matches_solve_first_step():
    prob = _grow_problem(32)
    one = advance(prob.eta0, 0.1, prob, scheme="be")
    sol = solve(prob, 0.1, 1, scheme="be")
    np.testing.assert_allclose(one.values, sol.values[-1], atol=1e-15)
    with pytest.raises(InvalidTimeStep):
        solve(prob, 0.0, 5)


def test_lagrangian_cross_check():
    fam = ellipse()
    pair = ProfilePair("0", "1 + 0.2*cos(theta)")
    eta0 = SymbolicSurfaceFunction("1 + 0.3*cos(theta)")
    prob = LimitProblem(fam, pair, 1.0, SurfaceField.sample(eta0, 64, 0.0))
    euler = solve(prob, 0.5, 100)
    lag = solve_lagrangian(prob, 0.5, 100)
    ref = euler.as_function()(lag.theta, 0.5)
    # Richardson estimates of both discretizations
    coarse = solve(LimitProblem(fam, pair, 1.0, SurfaceField.sample(eta0, 32, 0.0)), 0.5, 50)
    e_est = np.abs(euler.values[-1][::2] - coarse.values[-1]).max() / 3
    lag2 = solve_lagrangian(LimitProblem(fam, pair, 1.0, SurfaceField.sample(eta0, 32, 0.0)), 0.5, 50)
    l_est = np.abs(lag.values[::2] - lag2.values).max() / 3
    assert np.abs(lag.values - ref).max() <= e_est + l_est + 1e-12


def test_csv_export():
    sol = solve(_grow_problem(16), 1.0, 2)
    lines = sol.to_csv(1).splitlines()
    assert lines[0] == "theta,value" and len(lines) == 17
