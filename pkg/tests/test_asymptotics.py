import numpy as np
import pytest

from thinheat.asymptotics import (
    ExpansionCoefficients,
    approx_solution,
    approx_solution_expansion,
    boundary_residual,
    boundary_samples,
    bulk_residual,
    interior_samples,
    limit_source,
    solvability_forms,
    solvability_residual,
    zeta_fields,
)
from thinheat.errors import SamplingError
from thinheat.jets import SymbolicSurfaceFunction
from thinheat.surface_geometry import circle, ellipse, theta_grid
from thinheat.thin_domain import ProfilePair, ThinDomainSpec, map_ref_to_phys

GROW_ETA = SymbolicSurfaceFunction("1/(1 + 0.5*t)")


def _spec(fam, pair, eps):
    fam.tubular((0, 1))
    return ThinDomainSpec(fam, pair, eps)


def test_zeta_closed_form_on_growing_circle():
    fam = circle("1 + 0.5*t")
    z = zeta_fields(GROW_ETA, ProfilePair("0", "1"), 1.0, fam)
    th = theta_grid(16)
    for t in (0.0, 0.4, 1.0):
        R = 1 + 0.5 * t
        np.testing.assert_allclose(z.zeta1(th, t), 0.25 / R, rtol=1e-12)
        np.testing.assert_allclose(z.zeta0(th, t), 0.0, atol=1e-14)


def test_assembled_form_matches_scaled_expansion():
    fam = ellipse()
    pair = ProfilePair("-0.3 + 0.1*sin(theta + t)", "0.7 + 0.2*cos(theta)")
    spec = _spec(fam, pair, 0.1)
    eta = SymbolicSurfaceFunction("exp(-t)*(1 + 0.3*cos(theta))")
    co = ExpansionCoefficients.build(eta, fam, pair, 1.0)
    smp = interior_samples(500, seed=3)
    x = smp.points(spec)
    a = approx_solution(co, x, smp.t, spec)
    b = approx_solution_expansion(co, x, smp.t, spec)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_eta2_boundary_derivatives():
    fam = ellipse()
    pair = ProfilePair("-0.3 + 0.1*sin(theta + t)", "0.7 + 0.2*cos(theta)")
    co = ExpansionCoefficients.build(SymbolicSurfaceFunction("1 + 0.3*cos(theta)"), fam, pair, 1.0)
    th, t = theta_grid(32), 0.6
    g0, g1 = pair.g0(th, t), pair.g1(th, t)
    z0, z1 = co.zeta.zeta0(th, t), co.zeta.zeta1(th, t)
    np.testing.assert_allclose(co.d_eta2(th, g0, t), (g1 - g0) * z0, atol=1e-13)
    np.testing.assert_allclose(co.d_eta2(th, g1, t), (g1 - g0) * z1, atol=1e-13)


def test_stationary_constant_is_exact():
    fam = circle()
    pair = ProfilePair("-0.5", "0.5")
    spec = _spec(fam, pair, 0.1)
    co = ExpansionCoefficients.build(2.0, fam, pair, 1.0)
    smp = interior_samples(200, seed=1)
    np.testing.assert_allclose(approx_solution(co, smp.points(spec), smp.t, spec), 2.0, atol=1e-14)
    assert bulk_residual(co, spec, None, smp, method="fermi").sup < 1e-12
    assert boundary_residual(co, spec, boundary_samples(16, 4), method="fermi").sup < 1e-12


def test_growing_circle_bulk_residual_is_small():
    fam = circle("1 + 0.5*t")
    pair = ProfilePair("0", "1")
    spec = _spec(fam, pair, 0.05)
    co = ExpansionCoefficients.build(GROW_ETA, fam, pair, 1.0)
    smp = interior_samples(300, seed=2)
    fd = bulk_residual(co, spec, None, smp, method="fd")
    fermi = bulk_residual(co, spec, None, smp, method="fermi")
    assert fermi.sup < 0.1
    assert abs(fd.sup - fermi.sup) <= 10 * fd.fd_error + 1e-6


def test_non_solution_has_order_one_residual():
    fam = circle()
    pair = ProfilePair("0", "1")
    spec = _spec(fam, pair, 0.05)
    co = ExpansionCoefficients.build(SymbolicSurfaceFunction("1 + 0.5*cos(theta)"), fam, pair, 1.0)
    # eta is stationary but not harmonic, so d_t - Lap leaves 0.5 cos(theta)
    assert bulk_residual(co, spec, None, interior_samples(300, seed=4), method="fermi").sup > 0.4


def test_solvability_forms_and_limit_source():
    fam = ellipse()
    pair = ProfilePair("0", "1 + 0.2*cos(theta)")
    eta = SymbolicSurfaceFunction("exp(-t)*(1 + 0.3*cos(theta) + 0.2*sin(2*theta))")
    f = limit_source(eta, fam, pair, 1.0)
    th = np.tile(theta_grid(64), 3)
    t = np.repeat([0.1, 0.5, 0.9], 64)
    a, b = solvability_forms(eta, fam, pair, 1.0, f, th, t)
    np.testing.assert_allclose(a, b, atol=1e-10)
    assert solvability_residual(eta, pair, 1.0, f, fam, times=[0.1, 0.5, 0.9]) < 1e-10
    assert solvability_residual(eta, pair, 1.0, None, fam, times=[0.5]) > 0.1
    with pytest.raises(ValueError):
        solvability_residual(eta, pair, 1.0, f)


def test_sampling_validation():
    with pytest.raises(SamplingError):
        interior_samples(0)
    with pytest.raises(SamplingError):
        interior_samples(10, t_range=(0.0, 1e-3))
    smp = interior_samples(64, seed=0)
    assert np.all((smp.s > 0) & (smp.s < 1)) and np.all((smp.t > 0) & (smp.t < 1))
    spec = _spec(circle(), ProfilePair("0", "1"), 0.1)
    d = np.linalg.norm(map_ref_to_phys(spec, smp.theta, smp.s, smp.t), axis=-1) - 1
    assert np.all((d > 0) & (d < 0.1))
