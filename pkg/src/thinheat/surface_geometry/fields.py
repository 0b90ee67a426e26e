"""Grid fields on the curve and their tangential calculus."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GridMismatch
from ..jets import GridSurfaceFunction, PeriodicSplineFunction, SurfaceFunction
from .curves import CurveFamily
from .projection import closest_point, normal_flow

TWO_PI = 2.0 * np.pi


@dataclass
class SurfacePoint:
    """Curve parameter(s) ``theta`` at time ``t``."""

    theta: np.ndarray
    t: float

    @staticmethod
    def from_physical(family: CurveFamily, x, t: float) -> "SurfacePoint":
        th, _ = closest_point(family, x, t)
        return SurfacePoint(th, float(t))

    def position(self, family: CurveFamily) -> np.ndarray:
        return family.position(self.theta, self.t)


def theta_grid(n: int) -> np.ndarray:
    return np.linspace(0.0, TWO_PI, n, endpoint=False)


def periodic_derivative(values: np.ndarray, order: int = 1, method: str = "spectral") -> np.ndarray:
    """``d^order/dtheta^order`` of periodic samples on the uniform grid."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    if method == "spectral":
        k = np.fft.rfftfreq(n, 1.0 / n)
        fac = (1j * k) ** order
        if n % 2 == 0 and order % 2 == 1:
            fac[-1] = 0.0
        return np.fft.irfft(np.fft.rfft(values, axis=-1) * fac, n=n, axis=-1)
    if method == "fd4":
        h = TWO_PI / n
        out = values
        for _ in range(order):
            r = lambda s: np.roll(out, -s, axis=-1)
            out = (-r(2) + 8 * r(1) - 8 * r(-1) + r(-2)) / (12 * h)
        return out
    raise ValueError(f"unknown derivative method {method!r}")


@dataclass
class SurfaceField:
    """Values on the uniform ``theta`` grid at one time."""

    t: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.t = float(self.t)
        n = self.values.size
        if self.values.ndim != 1 or n < 16 or n % 2:
            raise GridMismatch(f"SurfaceField needs an even n_theta >= 16, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("SurfaceField values must be finite")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def theta(self) -> np.ndarray:
        return theta_grid(self.n)

    @staticmethod
    def sample(fn: SurfaceFunction, n: int, t: float) -> "SurfaceField":
        return SurfaceField(t, fn(theta_grid(n), t))

    def derivative(self, order: int = 1, method: str = "spectral") -> np.ndarray:
        return periodic_derivative(self.values, order, method)

    def as_function(self, method: str = "spectral") -> SurfaceFunction:
        """Time-frozen interpolant (spectral or periodic cubic)."""
        if method == "spectral":
            return GridSurfaceFunction([self.t], self.values[None, :])
        if method == "cubic":
            return PeriodicSplineFunction(self.values)
        raise ValueError(f"unknown interpolation {method!r}")

    def interpolate(self, theta, method: str = "spectral") -> np.ndarray:
        return self.as_function(method)(theta, self.t)


def _check_time(field: SurfaceField, p: SurfacePoint):
    if not np.isclose(field.t, p.t, rtol=0.0, atol=1e-12):
        raise GridMismatch(f"field at t={field.t} queried at t={p.t}")


def _interp(arr: np.ndarray, theta, method: str) -> np.ndarray:
    fn = GridSurfaceFunction([0.0], arr[None, :]) if method == "spectral" else PeriodicSplineFunction(arr)
    return fn(theta, 0.0)


def surface_gradient(field: SurfaceField, p: SurfacePoint, family: CurveFamily,
                     method: str = "spectral") -> np.ndarray:
    """``grad_Gamma eta = (eta_theta / ell) tau`` at ``p``, shape ``(..., 2)``."""
    _check_time(field, p)
    d1 = _interp(field.derivative(1, method), p.theta, method)
    ell = family.ell(p.theta, p.t)
    return (d1 / ell)[..., None] * family.tangent(p.theta, p.t)


def surface_laplacian(field: SurfaceField, p: SurfacePoint, family: CurveFamily,
                      method: str = "spectral") -> np.ndarray:
    """``Delta_Gamma eta = ell^{-1} d_theta(ell^{-1} eta_theta)`` at ``p``."""
    _check_time(field, p)
    th = field.theta
    ell = family.ell(th, field.t)
    flux = field.derivative(1, method) / ell
    lap = periodic_derivative(flux, 1, method) / ell
    return _interp(lap, p.theta, method)


def surface_divergence(vec_tangential: SurfaceField, family: CurveFamily,
                       method: str = "spectral") -> np.ndarray:
    """``div_Gamma (a tau) = ell^{-1} a_theta`` for a tangential field ``a tau``."""
    ell = family.ell(vec_tangential.theta, vec_tangential.t)
    return vec_tangential.derivative(1, method) / ell


def normal_time_derivative(fields, p: SurfacePoint, family: CurveFamily,
                           dt: float | None = None, n_sub: int = 1,
                           method: str = "spectral") -> np.ndarray:
    """Time derivative of ``eta`` following the normal velocity ``V nu``.

    ``fields`` is either three :class:`SurfaceField` slices at
    ``t - h, t, t + h`` or a :class:`SurfaceFunction` together with ``dt``.
    The curve point at ``p`` is transported by the normal flow to
    ``t +- h`` and the field values there are central-differenced.
    """
    if isinstance(fields, SurfaceFunction):
        if dt is None:
            raise ValueError("dt is required with a SurfaceFunction")
        h = float(dt)

        def value(theta, tt):
            return fields(theta, tt)
    else:
        prev, cur, nxt = fields  # type: Sequence[SurfaceField]
        _check_time(cur, p)
        h = 0.5 * (nxt.t - prev.t)
        if h <= 0 or not np.isclose(cur.t - prev.t, nxt.t - cur.t, rtol=1e-9):
            raise GridMismatch("slices must be equispaced in time")
        table = {prev.t: prev, nxt.t: nxt}

        def value(theta, tt):
            return table[tt].interpolate(theta, method)
    y0 = family.position(p.theta, p.t)
    _, th_p = normal_flow(family, y0, p.t, p.t + h, n_sub)
    _, th_m = normal_flow(family, y0, p.t, p.t - h, n_sub)
    if isinstance(fields, SurfaceFunction):
        return (value(th_p, p.t + h) - value(th_m, p.t - h)) / (2 * h)
    return (value(th_p, nxt.t) - value(th_m, prev.t)) / (2 * h)


def normal_time_derivative_exact(fn: SurfaceFunction, family: CurveFamily, theta, t):
    """``d_t eta - w_T eta_theta / ell``: the tangentially corrected derivative."""
    return fn.partial(theta, t, 0, 1) - family.w_T(theta, t) * fn.partial(theta, t, 1, 0) / family.ell(theta, t)
