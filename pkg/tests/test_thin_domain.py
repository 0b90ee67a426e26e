import numpy as np
import pytest

from thinheat.errors import EpsilonTooLarge, InvalidCoefficients, InvalidProfile, OutsideDomain
from thinheat.surface_geometry import circle, closest_point, ellipse
from thinheat.thin_domain import (
    ProfilePair,
    ThinDomainSpec,
    boundary_normal,
    boundary_point,
    boundary_sample,
    boundary_velocity,
    jacobian,
    kinematic_boundary_velocity,
    map_phys_to_ref,
    map_ref_to_phys,
    normal_derivative_function,
    sigma_aux,
    tau_vector,
)

TH = np.linspace(0, 2 * np.pi, 64, endpoint=False)


@pytest.fixture(scope="module")
def theta_spec():
    fam = ellipse()
    fam.tubular((0, 1))
    return ThinDomainSpec(fam, ProfilePair("0", "1 + 0.2*cos(theta)"), 0.1)


def test_spec_validation(unit_circle):
    with pytest.raises(InvalidProfile):
        ThinDomainSpec(unit_circle, ProfilePair("1", "1"), 0.1)
    with pytest.raises(EpsilonTooLarge):
        ThinDomainSpec(unit_circle, ProfilePair("0", "1"), 0.95)
    with pytest.raises(InvalidCoefficients):
        ThinDomainSpec(unit_circle, ProfilePair("0", "1"), 0.1, k=0.0)
    spec = ThinDomainSpec(unit_circle, ProfilePair("-0.5", "0.5"), 0.1)
    assert spec.with_epsilon(0.05).epsilon == 0.05
    assert spec.gap == pytest.approx(1.0)


def test_normal_derivative_of_profile(moving_ellipse):
    g = ProfilePair("0", "1 + 0.2*cos(theta)*t").g1
    dg = normal_derivative_function(g, moving_ellipse)
    th, t = TH, 0.3
    ref = 0.2 * np.cos(th) - moving_ellipse.w_T(th, t) * (-0.2 * np.sin(th) * t) / moving_ellipse.ell(th, t)
    np.testing.assert_allclose(dg(th, t), ref, atol=1e-13)


# tau, normal, velocity -----------------------------------------------------------------

def test_tau_vector_constant_profile_vanishes(unit_circle):
    spec = ThinDomainSpec(unit_circle, ProfilePair("0", "1"), 0.1)
    np.testing.assert_allclose(tau_vector(spec, TH, 0.0, 1), 0.0)


def test_tau_vector_direct_solve(unit_circle):
    spec = ThinDomainSpec(unit_circle, ProfilePair("0", "1 + 0.2*cos(theta)"), 0.1)
    g = 1 + 0.2 * np.cos(TH)
    grad_g = (-0.2 * np.sin(TH))[:, None] * unit_circle.tangent(TH, 0.0)
    W = unit_circle.weingarten(TH, 0.0)
    A = np.eye(2) - 0.1 * g[:, None, None] * W
    direct = np.linalg.solve(A, grad_g[..., None])[..., 0]
    tau = tau_vector(spec, TH, 0.0, 1)
    np.testing.assert_allclose(tau, direct, atol=1e-12)
    assert np.abs(np.sum(tau * unit_circle.normal(TH, 0.0), -1)).max() < 1e-12


def test_tau_vector_converges_to_surface_gradient(unit_circle):
    pair = ProfilePair("0", "1 + 0.2*cos(theta)")
    grad_g = (-0.2 * np.sin(TH))[:, None] * unit_circle.tangent(TH, 0.0)
    c = []
    for eps in (0.1, 0.05, 0.025):
        spec = ThinDomainSpec(unit_circle, pair, eps)
        c.append(np.abs(tau_vector(spec, TH, 0.0, 1) - grad_g).max() / eps)
    assert max(c) / min(c) < 1.2


def test_boundary_normal_constant_profiles(unit_circle):
    spec = ThinDomainSpec(unit_circle, ProfilePair("-0.5", "1"), 0.1)
    nu = unit_circle.normal(TH, 0.0)
    np.testing.assert_allclose(boundary_normal(spec, TH, 0.0, 1), nu, atol=1e-15)
    np.testing.assert_allclose(boundary_normal(spec, TH, 0.0, 0), -nu, atol=1e-15)


def test_boundary_normal_orthogonal_to_boundary_tangent(theta_spec):
    h = 1e-3
    for i in (0, 1):
        for t in (0.0, 0.5, 1.0):
            tan = (-boundary_point(theta_spec, TH + 2 * h, t, i) + 8 * boundary_point(theta_spec, TH + h, t, i)
                   - 8 * boundary_point(theta_spec, TH - h, t, i) + boundary_point(theta_spec, TH - 2 * h, t, i)) / (12 * h)
            nu = boundary_normal(theta_spec, TH, t, i)
            np.testing.assert_allclose(np.linalg.norm(nu, axis=-1), 1.0, atol=1e-14)
            cos = np.abs(np.sum(nu * tan, -1)) / np.linalg.norm(tan, axis=-1)
            assert cos.max() < 1e-6


def test_boundary_normal_matches_level_set_gradient(theta_spec):
    for i in (0, 1):
        x = boundary_point(theta_spec, TH, 0.4, i)
        b = sigma_aux(theta_spec, x, 0.4)
        n = b.grad / np.linalg.norm(b.grad, axis=-1, keepdims=True)
        np.testing.assert_allclose(n, boundary_normal(theta_spec, TH, 0.4, i), atol=1e-6)


def test_boundary_velocity_rigid_growth(grow_circle):
    spec = ThinDomainSpec(grow_circle, ProfilePair("-0.5", "1"), 0.1)
    np.testing.assert_allclose(boundary_velocity(spec, TH, 0.3, 1), 0.5, atol=1e-14)
    np.testing.assert_allclose(boundary_velocity(spec, TH, 0.3, 0), -0.5, atol=1e-14)


def test_boundary_velocity_pure_thickness_change():
    fam = circle()
    fam.tubular((0, 1))
    spec = ThinDomainSpec(fam, ProfilePair("-0.2*t", "1 + t"), 0.1)
    np.testing.assert_allclose(boundary_velocity(spec, TH, 0.5, 1), 0.1 * 1.0, atol=1e-14)
    np.testing.assert_allclose(boundary_velocity(spec, TH, 0.5, 0), -0.1 * -0.2, atol=1e-14)


def test_boundary_velocity_vs_kinematic_oracle(theta_spec):
    spec = theta_spec.with_epsilon(0.05)
    th = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    for i in (0, 1):
        np.testing.assert_allclose(boundary_velocity(spec, th, 0.5, i),
                                   kinematic_boundary_velocity(spec, th, 0.5, i), atol=1e-5)


def test_boundary_velocity_first_order_structure(theta_spec):
    c = []
    for eps in (0.1, 0.05, 0.025):
        spec = theta_spec.with_epsilon(eps)
        V = spec.family.V(TH, 0.5)
        c.append(max(np.abs(boundary_velocity(spec, TH, 0.5, 1) - V).max(),
                     np.abs(boundary_velocity(spec, TH, 0.5, 0) + V).max()) / eps)
    assert max(c) / min(c) < 1.5


def test_boundary_sample_record(theta_spec):
    b = boundary_sample(theta_spec, TH, 0.2, 1)
    np.testing.assert_allclose(np.linalg.norm(b.normal, axis=-1), 1.0)
    np.testing.assert_allclose(b.x, boundary_point(theta_spec, TH, 0.2, 1))


# sigma --------------------------------------------------------------------------------

def test_sigma_vanishes_on_boundary(theta_spec):
    for i in (0, 1):
        x = boundary_point(theta_spec, TH, 0.3, i)
        assert np.abs(sigma_aux(theta_spec, x, 0.3).value).max() < 1e-12


def test_sigma_negative_inside(theta_spec, rng):
    th = rng.uniform(0, 2 * np.pi, 200)
    s = rng.uniform(0.01, 0.99, 200)
    x = map_ref_to_phys(theta_spec, th, s, 0.6)
    assert np.all(sigma_aux(theta_spec, x, 0.6).value < 0)


def test_sigma_normal_flux_circle(unit_circle):
    spec = ThinDomainSpec(unit_circle, ProfilePair("0", "1"), 0.05)
    for i in (0, 1):
        x = boundary_point(spec, TH, 0.0, i)
        flux = np.sum(boundary_normal(spec, TH, 0.0, i) * sigma_aux(spec, x, 0.0).grad, -1)
        np.testing.assert_allclose(flux, 0.05 * 1.0, rtol=1e-12)


def test_sigma_bundle_matches_finite_differences(theta_spec, rng):
    th = rng.uniform(0, 2 * np.pi, 50)
    s = rng.uniform(0.1, 0.9, 50)
    t = 0.4
    x = map_ref_to_phys(theta_spec, th, s, t)
    b = sigma_aux(theta_spec, x, t)

    def sig(xx, tt):
        return sigma_aux(theta_spec, xx, tt).value

    h, ht = 1e-3, 1e-4
    for k, e in enumerate(np.eye(2) * h):
        g = (-sig(x + 2 * e, t) + 8 * sig(x + e, t) - 8 * sig(x - e, t) + sig(x - 2 * e, t)) / (12 * h)
        np.testing.assert_allclose(b.grad[:, k], g, atol=1e-9)
    lap = sum((-sig(x + 2 * e, t) + 16 * sig(x + e, t) - 30 * sig(x, t) + 16 * sig(x - e, t)
               - sig(x - 2 * e, t)) / (12 * h**2) for e in np.eye(2) * h)
    np.testing.assert_allclose(b.lap, lap, atol=1e-6)
    dt = (sig(x, t + ht) - sig(x, t - ht)) / (2 * ht)
    np.testing.assert_allclose(b.dt, dt, atol=1e-7)


# reference map --------------------------------------------------------------------------

def test_reference_map_boundaries_and_round_trip(theta_spec, rng):
    for s, i in ((0.0, 0), (1.0, 1)):
        np.testing.assert_allclose(map_ref_to_phys(theta_spec, TH, s, 0.7),
                                   boundary_point(theta_spec, TH, 0.7, i), atol=1e-15)
        _, d = closest_point(theta_spec.family, map_ref_to_phys(theta_spec, TH, s, 0.7), 0.7)
        np.testing.assert_allclose(d, 0.1 * theta_spec.profiles.side(i)(TH, 0.7), atol=1e-12)
    th = rng.uniform(0, 2 * np.pi, 1000)
    s = rng.uniform(0, 1, 1000)
    t = rng.uniform(0, 1, 1000)
    th2, s2 = map_phys_to_ref(theta_spec, map_ref_to_phys(theta_spec, th, s, t), t)
    dth = np.angle(np.exp(1j * (th2 - th)))
    assert np.abs(dth).max() < 1e-10
    assert np.abs(s2 - s).max() < 1e-10


def test_map_phys_to_ref_rejects_outside(theta_spec):
    x = theta_spec.family.position(TH[:3], 0.0) + 0.3 * theta_spec.family.normal(TH[:3], 0.0)
    with pytest.raises(OutsideDomain):
        map_phys_to_ref(theta_spec, x, 0.0)


def test_jacobian_vs_finite_differences(theta_spec, rng):
    th = rng.uniform(0, 2 * np.pi, 100)
    s = rng.uniform(0, 1, 100)
    t = 0.3
    F, det = jacobian(theta_spec, th, s, t)
    h = 1e-4
    fd_th = (map_ref_to_phys(theta_spec, th + h, s, t) - map_ref_to_phys(theta_spec, th - h, s, t)) / (2 * h)
    fd_s = (map_ref_to_phys(theta_spec, th, s + h, t) - map_ref_to_phys(theta_spec, th, s - h, t)) / (2 * h)
    np.testing.assert_allclose(F[..., 0], fd_th, atol=1e-6)
    np.testing.assert_allclose(F[..., 1], fd_s, atol=1e-6)
    # (theta, s) -> x reverses orientation; jac is the volume element
    np.testing.assert_allclose(det, np.abs(np.linalg.det(np.stack([fd_th, fd_s], -1))), atol=1e-6)
    fam = theta_spec.family
    g = theta_spec.profiles.g()(th, t)
    r = 0.1 * s * g
    np.testing.assert_allclose(det, (1 - r * fam.kappa(th, t)) * fam.ell(th, t) * 0.1 * g, rtol=1e-13)
