"""Moving thin domain ``Omega_eps(t) = {y + r nu(y, t) : eps g0 < r < eps g1}``.

The reference cell is ``(theta, s) in [0, 2 pi) x [0, 1]`` with
``r = eps (g0 + s g)`` and ``g = g1 - g0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EpsilonTooLarge, InvalidCoefficients, InvalidProfile, OutsideDomain
from .jets import Jet, JetFunction, SurfaceFunction, as_surface_function
from .surface_geometry import CurveFamily, FermiField, closest_point, normal_flow


def normal_derivative_function(fn: SurfaceFunction, family: CurveFamily) -> SurfaceFunction:
    """``partial-circ fn = fn_t - w_T fn_theta / ell`` as a composite function."""
    ft, fth = fn.dt(), fn.dtheta()

    def jet(theta, t) -> Jet:
        return ft.jet(theta, t) - family.w_T.jet(theta, t) * fth.jet(theta, t) / family.ell.jet(theta, t)

    return JetFunction(jet)


@dataclass
class ProfilePair:
    """Inner and outer profiles ``g0 < g1``."""

    g0: SurfaceFunction
    g1: SurfaceFunction

    def __post_init__(self):
        self.g0 = as_surface_function(self.g0)
        self.g1 = as_surface_function(self.g1)

    def g(self) -> SurfaceFunction:
        return self.g1 - self.g0

    def side(self, i: int) -> SurfaceFunction:
        if i not in (0, 1):
            raise ValueError("side index must be 0 or 1")
        return self.g0 if i == 0 else self.g1

    def min_gap(self, t_range=(0.0, 1.0), n_theta: int = 256, n_t: int = 21) -> float:
        th = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
        gaps = [np.min(self.g1(th, t) - self.g0(th, t)) for t in np.linspace(*t_range, n_t)]
        return float(min(gaps))

    def max_abs(self, t_range=(0.0, 1.0), n_theta: int = 256, n_t: int = 21) -> float:
        th = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
        return float(max(
            max(np.abs(self.g0(th, t)).max(), np.abs(self.g1(th, t)).max())
            for t in np.linspace(*t_range, n_t)
        ))


@dataclass
class ThinDomainSpec:
    family: CurveFamily
    profiles: ProfilePair
    epsilon: float
    k: float = 1.0
    t_range: tuple[float, float] = (0.0, 1.0)
    gap: float = field(init=False, default=np.nan)

    def __post_init__(self):
        if not self.k > 0:
            raise InvalidCoefficients(f"diffusivity must be positive, got {self.k}")
        if not self.epsilon > 0:
            raise EpsilonTooLarge(f"epsilon must be positive, got {self.epsilon}")
        self.gap = self.profiles.min_gap(self.t_range)
        if self.gap <= 0:
            raise InvalidProfile(f"g1 - g0 must be positive, min gap {self.gap:.3g}")
        info = self.family.tubular_info
        if info is None or info.t_range[0] > self.t_range[0] or info.t_range[1] < self.t_range[1]:
            info = self.family.tubular(self.t_range)
        reach = self.epsilon * self.profiles.max_abs(self.t_range)
        if reach >= info.delta:
            raise EpsilonTooLarge(
                f"eps * max|g_i| = {reach:.3g} exceeds tubular radius {info.delta:.3g}"
            )

    def with_epsilon(self, eps: float) -> "ThinDomainSpec":
        return ThinDomainSpec(self.family, self.profiles, eps, self.k, self.t_range)


def _side_sign(i: int) -> float:
    return 1.0 if i == 1 else -1.0


def boundary_point(spec: ThinDomainSpec, theta, t, i: int) -> np.ndarray:
    fam = spec.family
    gi = spec.profiles.side(i)(theta, t)
    return fam.position(theta, t) + (spec.epsilon * gi)[..., None] * fam.normal(theta, t)


def tau_vector(spec: ThinDomainSpec, theta, t, i: int) -> np.ndarray:
    """``tau_eps^i = (I - eps g_i W)^{-1} grad_Gamma g_i`` on ``Gamma(t)``."""
    fam = spec.family
    gi = spec.profiles.side(i)
    ell = fam.ell(theta, t)
    kap = fam.kappa(theta, t)
    val = gi.partial(theta, t, 1, 0) / (ell * (1.0 - spec.epsilon * gi(theta, t) * kap))
    return val[..., None] * fam.tangent(theta, t)


def boundary_normal(spec: ThinDomainSpec, theta, t, i: int) -> np.ndarray:
    """Outward unit normal of the thin domain at the boundary point over ``theta``."""
    fam = spec.family
    tau = tau_vector(spec, theta, t, i)
    n = fam.normal(theta, t) - spec.epsilon * tau
    denom = np.sqrt(1.0 + spec.epsilon**2 * np.sum(tau * tau, axis=-1))
    return _side_sign(i) * n / denom[..., None]


def boundary_velocity(spec: ThinDomainSpec, theta, t, i: int) -> np.ndarray:
    """Outer normal velocity ``V_eps`` of the boundary piece ``i``."""
    fam = spec.family
    eps = spec.epsilon
    gi = spec.profiles.side(i)
    tau = tau_vector(spec, theta, t, i)
    grad_v = (fam.V.partial(theta, t, 1, 0) / fam.ell(theta, t))[..., None] * fam.tangent(theta, t)
    dg = normal_derivative_function(gi, fam)(theta, t)
    num = fam.V(theta, t) + eps * dg + eps**2 * gi(theta, t) * np.sum(tau * grad_v, axis=-1)
    denom = np.sqrt(1.0 + eps**2 * np.sum(tau * tau, axis=-1))
    return _side_sign(i) * num / denom


def kinematic_boundary_velocity(spec: ThinDomainSpec, theta, t, i: int, h: float = 1e-3) -> np.ndarray:
    """Independent oracle for ``V_eps``.

    The boundary point ``y(t) + eps g_i(y(t), t) nu(y(t), t)`` with ``y``
    moving by the normal flow is central-differenced in time and projected
    onto the analytic boundary normal.
    """
    fam = spec.family
    theta = np.asarray(theta, float)
    y0 = fam.position(theta, t)

    def point(tt):
        _, q = normal_flow(fam, y0, t, tt, n_sub=2)
        return boundary_point(spec, q, tt, i)

    vel = (-point(t + 2 * h) + 8 * point(t + h) - 8 * point(t - h) + point(t - 2 * h)) / (12 * h)
    return np.sum(vel * boundary_normal(spec, theta, t, i), axis=-1)


@dataclass
class BoundarySample:
    theta: np.ndarray
    t: float
    side: int
    x: np.ndarray
    normal: np.ndarray
    velocity: np.ndarray


def boundary_sample(spec: ThinDomainSpec, theta, t, i: int) -> BoundarySample:
    theta = np.asarray(theta, float)
    return BoundarySample(theta, float(t), i, boundary_point(spec, theta, t, i),
                          boundary_normal(spec, theta, t, i), boundary_velocity(spec, theta, t, i))


def sigma_field(spec: ThinDomainSpec) -> FermiField:
    """``sigma_eps = (d - eps g0-bar)(d - eps g1-bar)`` as a Fermi polynomial."""
    eps = spec.epsilon
    g0, g1 = spec.profiles.g0, spec.profiles.g1
    return FermiField(spec.family, [eps**2 * (g0 * g1), -eps * (g0 + g1), 1.0])


def sigma_aux(spec: ThinDomainSpec, x, t):
    return sigma_field(spec).bundle_at(x, t)


def map_ref_to_phys(spec: ThinDomainSpec, theta, s, t) -> np.ndarray:
    theta, s, t = np.broadcast_arrays(*(np.asarray(a, float) for a in (theta, s, t)))
    fam = spec.family
    g0 = spec.profiles.g0(theta, t)
    g = spec.profiles.g1(theta, t) - g0
    r = spec.epsilon * (g0 + s * g)
    return fam.position(theta, t) + r[..., None] * fam.normal(theta, t)


def map_phys_to_ref(spec: ThinDomainSpec, x, t, tol: float = 1e-10):
    """``(theta, s)`` of physical points; raises ``OutsideDomain`` if ``s`` leaves ``[0, 1]``."""
    th, d = closest_point(spec.family, x, t)
    tb = np.broadcast_to(np.asarray(t, float), th.shape)
    g0 = spec.profiles.g0(th, tb)
    g = spec.profiles.g1(th, tb) - g0
    s = (d / spec.epsilon - g0) / g
    if np.any(s < -tol) or np.any(s > 1 + tol):
        raise OutsideDomain(f"s range [{s.min():.3g}, {s.max():.3g}] leaves [0, 1]")
    return th, s


@dataclass
class ReferenceMetric:
    """ALE metric of the map ``(theta, s) -> Phi + r nu`` in the ``(tau, nu)`` frame."""

    r: np.ndarray
    r_th: np.ndarray
    r_s: np.ndarray
    r_t: np.ndarray
    J: np.ndarray
    jac: np.ndarray
    G_thth: np.ndarray
    G_ths: np.ndarray
    G_ss: np.ndarray
    w_tau: np.ndarray
    w_nu: np.ndarray
    U_th: np.ndarray
    U_s: np.ndarray
    face_len: np.ndarray


def reference_metric(spec: ThinDomainSpec, theta, s, t) -> ReferenceMetric:
    theta, s, t = np.broadcast_arrays(*(np.asarray(a, float) for a in (theta, s, t)))
    fam = spec.family
    eps = spec.epsilon
    p0, p1 = spec.profiles.g0, spec.profiles.g1
    g0, g1 = p0(theta, t), p1(theta, t)
    g0_th, g1_th = p0.partial(theta, t, 1, 0), p1.partial(theta, t, 1, 0)
    g0_t, g1_t = p0.partial(theta, t, 0, 1), p1.partial(theta, t, 0, 1)
    r = eps * (g0 + s * (g1 - g0))
    r_th = eps * (g0_th + s * (g1_th - g0_th))
    r_t = eps * (g0_t + s * (g1_t - g0_t))
    r_s = eps * (g1 - g0)
    ell = fam.ell(theta, t)
    kap = fam.kappa(theta, t)
    wT = fam.w_T(theta, t)
    V = fam.V(theta, t)
    V_th = fam.V.partial(theta, t, 1, 0)
    J = ell * (1.0 - r * kap)
    w_tau = wT - r * (wT * kap + V_th / ell)
    w_nu = V + r_t
    return ReferenceMetric(
        r=r, r_th=r_th, r_s=r_s, r_t=r_t, J=J, jac=J * r_s,
        G_thth=r_s / J, G_ths=-r_th / J, G_ss=(J**2 + r_th**2) / (J * r_s),
        w_tau=w_tau, w_nu=w_nu, U_th=r_s * w_tau, U_s=J * w_nu - r_th * w_tau,
        face_len=np.sqrt(J**2 + r_th**2),
    )


def jacobian(spec: ThinDomainSpec, theta, s, t):
    """Deformation gradient ``[X_theta, X_s]`` (columns, physical basis) and the volume element ``|det|``.

    The map reverses orientation (``tau`` counter-clockwise, ``nu`` outward), so
    ``det F = -jac``.
    """
    m = reference_metric(spec, theta, s, t)
    tau = spec.family.tangent(theta, t)
    nu = spec.family.normal(theta, t)
    x_th = m.J[..., None] * tau + m.r_th[..., None] * nu
    x_s = m.r_s[..., None] * nu
    F = np.stack([x_th, x_s], axis=-1)
    return F, m.jac
