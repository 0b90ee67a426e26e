"""Calculus in Fermi coordinates ``x = Phi(theta, t) + r nu(theta, t)``.

A :class:`FermiField` is a polynomial in the normal coordinate ``r`` with
coefficients that are surface functions,
``u(theta, r, t) = sum_k r^k c_k(theta, t)``.  Constant extensions,
the auxiliary function of the thin domain and the approximate solution all
have this form, so one routine supplies their exact physical gradient,
Hessian, Laplacian and time derivative at fixed ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..jets import as_surface_function
from .curves import CurveFamily
from .fields import SurfaceField
from .projection import closest_point


@dataclass
class FermiBundle:
    """Value and derivatives at fixed physical points.

    ``grad`` has shape ``(..., 2)``, ``hess`` ``(..., 2, 2)``.
    """

    value: np.ndarray
    dt: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    lap: np.ndarray


class FermiField:
    def __init__(self, family: CurveFamily, coeffs: Sequence):
        self.family = family
        self.coeffs = [as_surface_function(c) for c in coeffs]

    def _r_sums(self, theta, r, t):
        z = np.zeros(np.broadcast(theta, r, t).shape)
        u = z.copy(); u_th = z.copy(); u_thth = z.copy(); u_t = z.copy()
        u_r = z.copy(); u_rr = z.copy(); u_thr = z.copy()
        for k, c in enumerate(self.coeffs):
            j = c.jet(theta, t)
            rk = r**k
            u = u + rk * j.v
            u_th = u_th + rk * j.th
            u_thth = u_thth + rk * j.thth
            u_t = u_t + rk * j.t
            if k >= 1:
                rk1 = k * r ** (k - 1)
                u_r = u_r + rk1 * j.v
                u_thr = u_thr + rk1 * j.th
            if k >= 2:
                u_rr = u_rr + k * (k - 1) * r ** (k - 2) * j.v
        return u, u_th, u_thth, u_t, u_r, u_rr, u_thr

    def value(self, theta, r, t) -> np.ndarray:
        theta, r, t = np.broadcast_arrays(*(np.asarray(a, float) for a in (theta, r, t)))
        out = np.zeros(theta.shape)
        for k, c in enumerate(self.coeffs):
            out = out + r**k * c(theta, t)
        return out

    def bundle(self, theta, r, t) -> FermiBundle:
        theta, r, t = np.broadcast_arrays(*(np.asarray(a, float) for a in (theta, r, t)))
        fam = self.family
        u, u_th, u_thth, u_t, u_r, u_rr, u_thr = self._r_sums(theta, r, t)
        ell = fam.ell(theta, t)
        ell_th = fam.ell.partial(theta, t, 1, 0)
        kap = fam.kappa(theta, t)
        kap_th = fam.kappa.partial(theta, t, 1, 0)
        V = fam.V(theta, t)
        V_th = fam.V.partial(theta, t, 1, 0)
        wT = fam.w_T(theta, t)
        tau = fam.tangent(theta, t)
        nu = fam.normal(theta, t)

        J = ell * (1.0 - r * kap)
        J_th = ell_th * (1.0 - r * kap) - r * ell * kap_th
        a = u_th / J
        a_th = u_thth / J - u_th * J_th / J**2
        b = u_r
        b_th = u_thr
        b_r = u_rr
        c_tt = (a_th - b * kap * ell) / J
        c_tn = (a * ell * kap + b_th) / J
        c_nn = b_r
        grad = a[..., None] * tau + b[..., None] * nu
        tt = tau[..., :, None] * tau[..., None, :]
        tn = tau[..., :, None] * nu[..., None, :]
        nn = nu[..., :, None] * nu[..., None, :]
        hess = c_tt[..., None, None] * tt + c_tn[..., None, None] * (tn + np.swapaxes(tn, -1, -2)) \
            + c_nn[..., None, None] * nn
        lap = c_tt + c_nn
        theta_dot = -wT / ell + r * V_th / (ell * J)
        dt = u_t + theta_dot * u_th - V * u_r
        return FermiBundle(u, dt, grad, hess, lap)

    # physical evaluation -------------------------------------------------------
    def at(self, x, t, **kw):
        th, d = closest_point(self.family, x, t, **kw)
        tb = np.broadcast_to(np.asarray(t, float), th.shape)
        return self.value(th, d, tb)

    def bundle_at(self, x, t, **kw) -> FermiBundle:
        th, d = closest_point(self.family, x, t, **kw)
        tb = np.broadcast_to(np.asarray(t, float), th.shape)
        return self.bundle(th, d, tb)


def constant_extension(field, x, t, family: CurveFamily, method: str = "cubic",
                       **kw) -> FermiBundle:
    """``eta-bar(x, t) = eta(pi(x, t), t)`` and its derivatives at fixed ``x``.

    ``field`` is a :class:`SurfaceField` (interpolated periodic-cubically by
    default, held fixed in the curve parameter for the time derivative) or a
    :class:`SurfaceFunction`, in which case the time derivative includes
    ``eta``'s own time dependence.
    """
    if isinstance(field, SurfaceField):
        fn = field.as_function(method)
    else:
        fn = as_surface_function(field)
    return FermiField(family, [fn]).bundle_at(x, t, **kw)
