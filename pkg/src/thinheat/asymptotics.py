"""Approximate solution of the thin-domain problem and its residuals.

For a function ``eta`` on the moving curve the approximate solution is

    rho_eta = eta - d V eta / k + eps d (g1 zeta0 - g0 zeta1) + d^2 (zeta1 - zeta0) / 2

evaluated through constant extensions, with

    zeta_i = (grad g_i . grad eta - (d-circ g_i) eta / k + g_i V^2 eta / k^2) / g.

In the scaled variable ``r = d / eps`` this is ``eta + eps eta1(r) + eps^2 eta2(r)``
with ``eta1 = -r V eta / k`` and ``eta2 = r (g1 zeta0 - g0 zeta1) + r^2 (zeta1 - zeta0) / 2``.
The opposite sign of the quadratic term is available as ``quadratic_sign=-1``
for comparison; it does not satisfy the boundary equations of ``eta2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import DerivativeNoise, SamplingError
from .jets import Jet, JetFunction, SurfaceFunction, as_surface_function
from .surface_geometry import CurveFamily, FermiField, closest_point, theta_grid
from .thin_domain import (
    ProfilePair,
    ThinDomainSpec,
    boundary_normal,
    boundary_point,
    boundary_velocity,
    map_ref_to_phys,
    normal_derivative_function,
    reference_metric,
)

FD_STEP_SPACE = 1e-3
FD_STEP_TIME = 1e-4


def _as_eta(eta) -> SurfaceFunction:
    if hasattr(eta, "as_function"):
        return eta.as_function()
    return as_surface_function(eta)


@dataclass
class ZetaFields:
    zeta0: SurfaceFunction
    zeta1: SurfaceFunction

    def sample(self, n_theta: int, times) -> tuple[np.ndarray, np.ndarray]:
        th = theta_grid(n_theta)
        z0 = np.array([self.zeta0(th, t) for t in times])
        z1 = np.array([self.zeta1(th, t) for t in times])
        return z0, z1


def zeta_fields(limit, profiles: ProfilePair, k: float, family: CurveFamily,
                drop_gradient_term: bool = False) -> ZetaFields:
    """``zeta_0, zeta_1`` for a limit solution or a surface function ``eta``.

    ``drop_gradient_term`` removes ``grad g_i . grad eta`` (ablation study).
    """
    eta = _as_eta(limit)
    eta_th = eta.dtheta()
    g = profiles.g()

    def make(gi: SurfaceFunction) -> SurfaceFunction:
        gi_th = gi.dtheta()
        dgi = normal_derivative_function(gi, family)

        def jet(theta, t) -> Jet:
            e = eta.jet(theta, t)
            V = family.V.jet(theta, t)
            ell = family.ell.jet(theta, t)
            gij = gi.jet(theta, t)
            val = (-1.0 / k) * dgi.jet(theta, t) * e + (1.0 / k**2) * gij * V * V * e
            if not drop_gradient_term:
                val = val + gi_th.jet(theta, t) * eta_th.jet(theta, t) / (ell * ell)
            return val / g.jet(theta, t)

        return JetFunction(jet)

    return ZetaFields(make(profiles.g0), make(profiles.g1))


@dataclass
class ExpansionCoefficients:
    """``eta``, ``eta1(r)``, ``eta2(r)`` and the ``d``-polynomial coefficients."""

    eta: SurfaceFunction
    family: CurveFamily
    profiles: ProfilePair
    k: float
    zeta: ZetaFields
    quadratic_sign: float = 1.0

    @staticmethod
    def build(limit, family: CurveFamily, profiles: ProfilePair, k: float,
              quadratic_sign: float = 1.0, drop_gradient_term: bool = False) -> "ExpansionCoefficients":
        eta = _as_eta(limit)
        z = zeta_fields(eta, profiles, k, family, drop_gradient_term)
        return ExpansionCoefficients(eta, family, profiles, k, z, float(quadratic_sign))

    # coefficient functions ----------------------------------------------------
    def c1(self) -> SurfaceFunction:
        """``-V eta / k``: coefficient of ``d`` from ``eta1``."""
        return self.family.V * self.eta * (-1.0 / self.k)

    def linear2(self) -> SurfaceFunction:
        """``g1 zeta0 - g0 zeta1``."""
        return self.profiles.g1 * self.zeta.zeta0 - self.profiles.g0 * self.zeta.zeta1

    def quad2(self) -> SurfaceFunction:
        """Coefficient of ``d^2``: ``(zeta1 - zeta0) / 2`` times the sign option."""
        return (self.zeta.zeta1 - self.zeta.zeta0) * (0.5 * self.quadratic_sign)

    def fermi(self, eps: float) -> FermiField:
        return FermiField(self.family, [self.eta, self.c1() + eps * self.linear2(), self.quad2()])

    # evaluators in the scaled variable ---------------------------------------
    def eta1(self, theta, r, t):
        return -r * self.family.V(theta, t) * self.eta(theta, t) / self.k

    def eta2(self, theta, r, t):
        z0, z1 = self.zeta.zeta0(theta, t), self.zeta.zeta1(theta, t)
        g0, g1 = self.profiles.g0(theta, t), self.profiles.g1(theta, t)
        return r * (g1 * z0 - g0 * z1) + 0.5 * r**2 * (z1 - z0)

    def d_eta2(self, theta, r, t):
        z0, z1 = self.zeta.zeta0(theta, t), self.zeta.zeta1(theta, t)
        g0, g1 = self.profiles.g0(theta, t), self.profiles.g1(theta, t)
        return (g1 * z0 - g0 * z1) + r * (z1 - z0)


def _projected(spec: ThinDomainSpec, x, t):
    th, d = closest_point(spec.family, x, t)
    tb = np.broadcast_to(np.asarray(t, float), th.shape)
    return th, d, tb


def approx_solution(coeffs: ExpansionCoefficients, x, t, spec: ThinDomainSpec) -> np.ndarray:
    """``rho_eta`` at physical points, assembled from constant extensions in ``d``."""
    th, d, tb = _projected(spec, x, t)
    eps, k = spec.epsilon, coeffs.k
    eta = coeffs.eta(th, tb)
    V = coeffs.family.V(th, tb)
    z0, z1 = coeffs.zeta.zeta0(th, tb), coeffs.zeta.zeta1(th, tb)
    g0, g1 = coeffs.profiles.g0(th, tb), coeffs.profiles.g1(th, tb)
    return (eta - d * V * eta / k + eps * d * (g1 * z0 - g0 * z1)
            + 0.5 * coeffs.quadratic_sign * d**2 * (z1 - z0))


def approx_solution_expansion(coeffs: ExpansionCoefficients, x, t, spec: ThinDomainSpec) -> np.ndarray:
    """``eta + eps eta1(r) + eps^2 eta2(r)`` at ``r = d / eps``."""
    th, d, tb = _projected(spec, x, t)
    eps = spec.epsilon
    r = d / eps
    return coeffs.eta(th, tb) + eps * coeffs.eta1(th, r, tb) + eps**2 * coeffs.eta2(th, r, tb)


# sample sets --------------------------------------------------------------------

@dataclass
class InteriorSamples:
    theta: np.ndarray
    s: np.ndarray
    t: np.ndarray

    def points(self, spec: ThinDomainSpec) -> np.ndarray:
        return map_ref_to_phys(spec, self.theta, self.s, self.t)


@dataclass
class BoundarySamples:
    theta: np.ndarray
    t: np.ndarray
    side: np.ndarray


def interior_samples(n: int = 10_000, t_range=(0.0, 1.0), seed: int = 0,
                     margin: float = 1e-3) -> InteriorSamples:
    """Scrambled Halton points in ``(theta, s, t)``; ``s`` and ``t`` stay inside the open ranges."""
    if n < 1:
        raise SamplingError("need at least one sample")
    u = qmc.Halton(d=3, scramble=True, seed=seed).random(n)
    lo, hi = t_range[0] + margin, t_range[1] - margin
    if hi <= lo:
        raise SamplingError("time range too short for the sampling margin")
    return InteriorSamples(2 * np.pi * u[:, 0], u[:, 1], lo + (hi - lo) * u[:, 2])


def boundary_samples(n_theta: int = 128, n_t: int = 40, t_range=(0.0, 1.0),
                     margin: float = 1e-3) -> BoundarySamples:
    """Uniform product grid on both boundary components."""
    th = theta_grid(n_theta)
    ts = np.linspace(t_range[0] + margin, t_range[1] - margin, n_t)
    T, TH, SIDE = np.meshgrid(ts, th, [0, 1], indexing="ij")
    return BoundarySamples(TH.ravel(), T.ravel(), SIDE.ravel())


# residuals ------------------------------------------------------------------------

@dataclass
class Residual:
    sup: float
    values: np.ndarray
    fd_error: float


def _fd_bulk(u, x, t, h, ht, k):
    e1 = np.array([h, 0.0])
    e2 = np.array([0.0, h])
    u0 = u(x, t)
    lap = 0.0
    for e in (e1, e2):
        lap = lap + (-u(x + 2 * e, t) + 16 * u(x + e, t) - 30 * u0 + 16 * u(x - e, t) - u(x - 2 * e, t))
    lap = lap / (12 * h**2)
    dt = (-u(x, t + 2 * ht) + 8 * u(x, t + ht) - 8 * u(x, t - ht) + u(x, t - 2 * ht)) / (12 * ht)
    return dt - k * lap


def _fd_grad(u, x, t, h):
    comps = []
    for e in (np.array([h, 0.0]), np.array([0.0, h])):
        comps.append((-u(x + 2 * e, t) + 8 * u(x + e, t) - 8 * u(x - e, t) + u(x - 2 * e, t)) / (12 * h))
    return np.stack(comps, axis=-1)


def bulk_residual(coeffs: ExpansionCoefficients, spec: ThinDomainSpec, f,
                  samples: InteriorSamples, method: str = "fd", h: float = FD_STEP_SPACE,
                  ht: float = FD_STEP_TIME, noise_check: bool = True) -> Residual:
    """``sup |d_t rho_eta - k Lap rho_eta - f-bar|`` over interior samples.

    ``method='fd'`` differentiates the assembled evaluator with fourth-order
    differences; a second pass at doubled steps gives a Richardson estimate
    of the differencing error, and ``DerivativeNoise`` is raised when it
    exceeds 10% of the residual.  ``method='fermi'`` uses the exact
    Fermi-coordinate calculus instead.
    """
    x = samples.points(spec)
    t = samples.t
    fn = as_surface_function(f) if f is not None else None
    th, _ = closest_point(spec.family, x, t)
    fbar = fn(th, t) if fn is not None else 0.0
    if method == "fermi":
        b = coeffs.fermi(spec.epsilon).bundle_at(x, t)
        res = b.dt - spec.k * b.lap - fbar
        return Residual(float(np.max(np.abs(res))), res, 0.0)
    if method != "fd":
        raise ValueError(f"unknown residual method {method!r}")
    u = lambda xx, tt: approx_solution(coeffs, xx, tt, spec)
    res = _fd_bulk(u, x, t, h, ht, spec.k) - fbar
    err = 0.0
    if noise_check:
        res2 = _fd_bulk(u, x, t, 2 * h, 2 * ht, spec.k) - fbar
        err = float(np.max(np.abs(res - res2))) / 15.0
        sup = float(np.max(np.abs(res)))
        if err > 0.1 * sup and err > 1e-9:
            raise DerivativeNoise(f"finite-difference error {err:.3g} vs residual {sup:.3g}")
    return Residual(float(np.max(np.abs(res))), res, err)


def boundary_residual(coeffs: ExpansionCoefficients, spec: ThinDomainSpec,
                      samples: BoundarySamples, method: str = "fd", h: float = FD_STEP_SPACE,
                      noise_check: bool = True) -> Residual:
    """``sup |d_nu rho_eta + V_eps rho_eta / k|`` over boundary samples."""
    vals = np.empty(samples.theta.size)
    err = 0.0
    u = lambda xx, tt: approx_solution(coeffs, xx, tt, spec)
    for i in (0, 1):
        sel = samples.side == i
        th, t = samples.theta[sel], samples.t[sel]
        x = boundary_point(spec, th, t, i)
        nu = boundary_normal(spec, th, t, i)
        V = boundary_velocity(spec, th, t, i)
        if method == "fermi":
            b = coeffs.fermi(spec.epsilon).bundle_at(x, t)
            vals[sel] = np.sum(nu * b.grad, axis=-1) + V * b.value / spec.k
            continue
        u0 = u(x, t)
        r1 = np.sum(nu * _fd_grad(u, x, t, h), axis=-1) + V * u0 / spec.k
        vals[sel] = r1
        if noise_check:
            r2 = np.sum(nu * _fd_grad(u, x, t, 2 * h), axis=-1) + V * u0 / spec.k
            err = max(err, float(np.max(np.abs(r1 - r2))) / 15.0)
    sup = float(np.max(np.abs(vals)))
    if method == "fd" and noise_check and err > 0.1 * sup and err > 1e-11:
        raise DerivativeNoise(f"finite-difference error {err:.3g} vs residual {sup:.3g}")
    return Residual(sup, vals, err)


# solvability condition ------------------------------------------------------------

def _solvability_parts(eta: SurfaceFunction, family: CurveFamily, profiles: ProfilePair,
                       k: float, f, theta, t):
    f = as_surface_function(f) if f is not None else None
    e = eta.jet(theta, t)
    e_th = eta.dtheta().jet(theta, t)
    g = profiles.g()
    gj = g.jet(theta, t)
    ell = family.ell.jet(theta, t)
    V = family.V(theta, t)
    H = family.kappa(theta, t)
    wT = family.w_T(theta, t)
    fv = f(theta, t) if f is not None else 0.0
    dcirc_eta = e.t - wT * e.th / ell.v
    dcirc_g = normal_derivative_function(g, family)(theta, t)
    lap = (e_th / ell).th / ell.v
    lhs = gj.v * (dcirc_eta / k + V**2 * e.v / k**2 - lap - V * H * e.v / k - fv / k)
    rhs = gj.th * e.th / ell.v**2 - dcirc_g * e.v / k + gj.v * V**2 * e.v / k**2
    ge = gj * e
    div_form = ((ge.t - wT * ge.th / ell.v) - gj.v * V * H * e.v
                - k * (gj * e_th / ell).th / ell.v - gj.v * fv) / k
    return lhs - rhs, div_form


def solvability_residual(limit, profiles: ProfilePair, k: float, f, family: CurveFamily | None = None,
                         times=None, n_theta: int | None = None, form: str = "expansion") -> float:
    """Sup of the zeroth-order compatibility defect over grid points and times.

    ``form='expansion'`` evaluates ``LHS - RHS`` of the condition obtained
    from the expansion; ``form='divergence'`` evaluates the limit operator
    ``(d-circ(g eta) - g V H eta - k div(g grad eta) - g f) / k``.  The two
    agree identically.
    """
    if hasattr(limit, "as_function"):
        eta = limit.as_function()
        family = family or limit.problem.family
        times = limit.times if times is None else times
        n_theta = n_theta or limit.n_theta
    else:
        eta = as_surface_function(limit)
        if family is None or times is None:
            raise ValueError("family and times are required")
        n_theta = n_theta or 256
    th = theta_grid(n_theta)
    TT, TH = np.meshgrid(np.asarray(times, float), th, indexing="ij")
    a, b = _solvability_parts(eta, family, profiles, k, f, TH, TT)
    out = a if form == "expansion" else b
    return float(np.max(np.abs(out)))


def solvability_forms(eta, family: CurveFamily, profiles: ProfilePair, k: float, f, theta, t):
    """Pointwise values of both forms (for the algebraic-identity check)."""
    return _solvability_parts(as_surface_function(eta), family, profiles, k, f, theta, t)


def limit_source(eta, family: CurveFamily, profiles: ProfilePair, k: float) -> SurfaceFunction:
    """Source ``f`` for which ``eta`` solves the limit equation exactly (value only)."""
    eta = as_surface_function(eta)
    g = profiles.g()

    def jet(theta, t) -> Jet:
        _, div_form = _solvability_parts(eta, family, profiles, k, None, theta, t)
        val = k * div_form / g(theta, t)
        z = np.zeros_like(val)
        return Jet(val, z, z, z)

    return JetFunction(jet)


# lambda transform -----------------------------------------------------------------

def lambda_field(spec: ThinDomainSpec) -> FermiField:
    """``lambda = -d V-bar / k`` as a Fermi polynomial."""
    return FermiField(spec.family, [0.0, spec.family.V * (-1.0 / spec.k)])


def lambda_values(spec: ThinDomainSpec, theta, s, t) -> np.ndarray:
    r = reference_metric(spec, theta, s, t).r
    return -r * spec.family.V(theta, t) / spec.k


def lambda_transform(field, direction: str, spec: ThinDomainSpec):
    """Multiply a bulk field by ``exp(-lambda)`` (forward) or ``exp(lambda)`` (inverse)."""
    from .bulk_solver import BulkField

    th, s = field.grid.mesh()
    lam = lambda_values(spec, th, s, field.t)
    if direction == "forward":
        fac = np.exp(-lam)
    elif direction == "inverse":
        fac = np.exp(lam)
    else:
        raise ValueError("direction must be 'forward' or 'inverse'")
    return BulkField(field.t, field.values * fac)


def lambda_transformed_problem(problem):
    """Problem for ``chi = exp(-lambda) rho`` with the transformed coefficients."""
    from .bulk_solver import BulkProblem

    spec = problem.spec
    k = spec.k
    lam = lambda_field(spec)

    def bundle(theta, s, t):
        r = reference_metric(spec, theta, s, t).r
        return lam.bundle(theta, r, np.full_like(theta, t))

    def frame(theta, t):
        return spec.family.tangent(theta, t), spec.family.normal(theta, t)

    def drift(theta, s, t):
        b = bundle(theta, s, t)
        tau, nu = frame(theta, t)
        bt = -2 * k * np.sum(b.grad * tau, axis=-1)
        bn = -2 * k * np.sum(b.grad * nu, axis=-1)
        return bt, bn

    def reaction(theta, s, t):
        b = bundle(theta, s, t)
        return b.dt - k * (b.lap + np.sum(b.grad**2, axis=-1))

    def excess(theta, t, i):
        x = boundary_point(spec, theta, t, i)
        b = lam.bundle_at(x, t)
        return np.sum(boundary_normal(spec, theta, t, i) * b.grad, axis=-1)

    def rho0(theta, s, t):
        base = problem.rho0(theta, s, t) if callable(problem.rho0) else problem.rho0
        return np.exp(-lambda_values(spec, theta, s, t)) * base

    f = None
    if problem.f is not None:
        f = lambda theta, s, t: np.exp(-lambda_values(spec, theta, s, t)) * problem.f(theta, s, t)
    psi = None
    if problem.psi is not None:
        psi = lambda theta, t, i: np.exp(-lambda_values(spec, theta, float(i), t)) * problem.psi(theta, t, i)
    return BulkProblem(spec, rho0, f, psi, drift=drift, reaction=reaction, robin_excess=excess,
                       t0=problem.t0)
