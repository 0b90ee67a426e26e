"""Moving closed plane curves ``Gamma(t) = Phi(., t)([0, 2 pi))``.

Sign conventions: ``nu`` is the outward unit normal, ``W = -grad_Gamma nu``
and ``H = -div_Gamma nu = tr W = kappa``.  With these conventions a circle
of radius ``R`` has ``kappa = -1/R``.  The parametrization must be
counter-clockwise, so that ``nu = (tau_y, -tau_x)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from ..errors import GeometryError
from ..jets import THETA, T, Jet, SymbolicSurfaceFunction


@dataclass(frozen=True)
class TubularInfo:
    """Uniform tubular radius ``delta`` and lower bound ``c0`` of ``1 - d kappa``."""

    delta: float
    c0: float
    max_abs_kappa: float
    bottleneck: float
    t_range: tuple[float, float]


class CurveFamily:
    """Closed curve family given by sympy expressions ``x(theta, t), y(theta, t)``."""

    def __init__(self, x_expr, y_expr, name: str = "curve", params: dict | None = None):
        loc = {"theta": THETA, "t": T}
        x = sp.sympify(x_expr, locals=loc)
        y = sp.sympify(y_expr, locals=loc)
        self.name = name
        self.params = dict(params or {})
        self.x_expr, self.y_expr = x, y
        xth, yth = sp.diff(x, THETA), sp.diff(y, THETA)
        xthth, ythth = sp.diff(xth, THETA), sp.diff(yth, THETA)
        xt, yt = sp.diff(x, T), sp.diff(y, T)
        ell = sp.sqrt(xth**2 + yth**2)
        self.x = SymbolicSurfaceFunction(x)
        self.y = SymbolicSurfaceFunction(y)
        self.ell = SymbolicSurfaceFunction(ell)
        self.tau_x = SymbolicSurfaceFunction(xth / ell)
        self.tau_y = SymbolicSurfaceFunction(yth / ell)
        self.nu_x = SymbolicSurfaceFunction(yth / ell)
        self.nu_y = SymbolicSurfaceFunction(-xth / ell)
        # kappa is minus the counter-clockwise signed curvature
        self.kappa = SymbolicSurfaceFunction(-(xth * ythth - yth * xthth) / ell**3)
        self.V = SymbolicSurfaceFunction((xt * yth - yt * xth) / ell)
        self.w_T = SymbolicSurfaceFunction((xt * xth + yt * yth) / ell)
        self._tubular: TubularInfo | None = None

    # pointwise geometry -----------------------------------------------------
    def position(self, theta, t) -> np.ndarray:
        return np.stack([self.x(theta, t), self.y(theta, t)], axis=-1)

    def d_position(self, theta, t, n_theta=1, n_t=0) -> np.ndarray:
        return np.stack(
            [self.x.partial(theta, t, n_theta, n_t), self.y.partial(theta, t, n_theta, n_t)],
            axis=-1,
        )

    def tangent(self, theta, t) -> np.ndarray:
        return np.stack([self.tau_x(theta, t), self.tau_y(theta, t)], axis=-1)

    def normal(self, theta, t) -> np.ndarray:
        return np.stack([self.nu_x(theta, t), self.nu_y(theta, t)], axis=-1)

    def curvature(self, theta, t) -> np.ndarray:
        return self.kappa(theta, t)

    def mean_curvature(self, theta, t) -> np.ndarray:
        return self.kappa(theta, t)

    def weingarten(self, theta, t) -> np.ndarray:
        """``W = kappa tau (x) tau`` as ``(..., 2, 2)`` arrays."""
        tau = self.tangent(theta, t)
        return self.kappa(theta, t)[..., None, None] * tau[..., :, None] * tau[..., None, :]

    def normal_velocity(self, theta, t) -> np.ndarray:
        return self.V(theta, t)

    def speed(self, theta, t) -> np.ndarray:
        return self.ell(theta, t)

    def jets(self, theta, t) -> dict[str, Jet]:
        """Jets of ``ell, kappa, V, w_T`` at the given parameters."""
        return {
            "ell": self.ell.jet(theta, t),
            "kappa": self.kappa.jet(theta, t),
            "V": self.V.jet(theta, t),
            "w_T": self.w_T.jet(theta, t),
        }

    def length(self, t, n: int = 1024) -> float:
        th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return float(np.mean(self.ell(th, t)) * 2.0 * np.pi)

    def enclosed_area(self, t, n: int = 1024) -> float:
        th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        p = self.position(th, t)
        dp = self.d_position(th, t)
        return float(0.5 * np.mean(p[:, 0] * dp[:, 1] - p[:, 1] * dp[:, 0]) * 2.0 * np.pi)

    # tubular neighbourhood ----------------------------------------------------
    def tubular(self, t_range: tuple[float, float] = (0.0, 1.0), n_theta: int = 1024,
                n_t: int = 9, safety: float = 0.9) -> TubularInfo:
        """Estimate a uniform tubular radius over ``t_range``.

        The radius is ``safety * min(1 / max|kappa|, bottleneck / 2)`` where
        the bottleneck is the smallest distance between curve points that are
        far apart along the curve.
        """
        th = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
        kmax = 0.0
        half_neck = np.inf
        for t in np.linspace(t_range[0], t_range[1], n_t):
            ell = self.ell(th, t)
            if np.any(ell <= 0) or not np.all(np.isfinite(ell)):
                raise GeometryError(f"degenerate parametrization at t={t}")
            if self.enclosed_area(t) <= 0:
                raise GeometryError("parametrization must be counter-clockwise")
            kap = np.abs(self.kappa(th, t))
            kmax = max(kmax, float(kap.max()))
            p = self.position(th, t)
            s = np.concatenate([[0.0], np.cumsum(ell[:-1])]) * (2 * np.pi / n_theta)
            total = float(np.sum(ell) * 2 * np.pi / n_theta)
            arc = np.abs(s[:, None] - s[None, :])
            arc = np.minimum(arc, total - arc)
            dist = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
            far = arc > np.pi / max(float(kap.max()), 1e-12)
            if np.any(far):
                half_neck = min(half_neck, 0.5 * float(dist[far].min()))
        bound = min(1.0 / kmax if kmax > 0 else np.inf, half_neck)
        if not np.isfinite(bound):
            raise GeometryError("could not bound the tubular radius")
        delta = safety * bound
        c0 = 1.0 - delta * kmax
        info = TubularInfo(delta, c0, kmax, 2 * half_neck, (float(t_range[0]), float(t_range[1])))
        self._tubular = info
        return info

    @property
    def tubular_info(self) -> TubularInfo | None:
        return self._tubular

    def __repr__(self):
        return f"CurveFamily({self.name!r}, {self.params})"


def circle(radius="1", center=("0", "0"), name: str = "circle") -> CurveFamily:
    """Circle with radius ``R(t)`` and centre ``c(t)`` (expressions in ``t``)."""
    r = sp.sympify(radius, locals={"t": T})
    cx = sp.sympify(center[0], locals={"t": T})
    cy = sp.sympify(center[1], locals={"t": T})
    return CurveFamily(cx + r * sp.cos(THETA), cy + r * sp.sin(THETA), name=name,
                       params={"radius": str(r), "center": (str(cx), str(cy))})


def growing_circle(r0: float = 1.0, rate: float = 0.5) -> CurveFamily:
    return circle(f"{r0} + {rate}*t", name="growing_circle")


def ellipse(a="1.2 + 0.3*t", b="0.9 + 0.2*t", name: str = "ellipse") -> CurveFamily:
    """Centred ellipse with semi-axes ``a(t)`` and ``b(t)``."""
    a_e = sp.sympify(a, locals={"t": T})
    b_e = sp.sympify(b, locals={"t": T})
    return CurveFamily(a_e * sp.cos(THETA), b_e * sp.sin(THETA), name=name,
                       params={"a": str(a_e), "b": str(b_e)})


def star_curve(radius="1 + 0.1*cos(3*theta)", name: str = "star") -> CurveFamily:
    """Polar curve ``R(theta, t) (cos theta, sin theta)``."""
    r = sp.sympify(radius, locals={"theta": THETA, "t": T})
    return CurveFamily(r * sp.cos(THETA), r * sp.sin(THETA), name=name,
                       params={"radius": str(r)})


def perturbed_circle(r0: float = 1.0, amplitude: float = 0.1, mode: int = 3,
                     omega: float = 1.0) -> CurveFamily:
    """Circle with a rotating, pulsating Fourier perturbation."""
    expr = f"{r0}*(1 + {amplitude}*cos({mode}*theta - {omega}*t))"
    return star_curve(expr, name="perturbed_circle")
