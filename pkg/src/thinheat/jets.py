"""Functions on the moving curve in the parameter variables ``(theta, t)``.

Every quantity living on the curve is a :class:`SurfaceFunction`.  Besides
point values it exposes partial derivatives in ``theta`` and ``t`` and a
:class:`Jet` bundle ``(v, v_theta, v_thetatheta, v_t)`` which is closed under
the usual arithmetic.  Composite expressions (normal time derivatives,
coefficients of the approximate solution, ...) are therefore evaluated
exactly from the jets of their ingredients.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp
from scipy.interpolate import CubicSpline

THETA, T = sp.symbols("theta t", real=True)

_CHUNK = 4096


def _as_arrays(theta, t):
    theta = np.asarray(theta, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.broadcast_arrays(theta, t)


@dataclass
class Jet:
    """Value and first/second ``theta`` derivatives plus first ``t`` derivative."""

    v: np.ndarray
    th: np.ndarray
    thth: np.ndarray
    t: np.ndarray

    @staticmethod
    def const(c, shape=()) -> "Jet":
        z = np.zeros(shape)
        return Jet(np.full(shape, float(c)), z, z, z)

    @staticmethod
    def _lift(other, like: "Jet") -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.const(other, np.shape(like.v))

    def __add__(self, o):
        o = Jet._lift(o, self)
        return Jet(self.v + o.v, self.th + o.th, self.thth + o.thth, self.t + o.t)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.th, -self.thth, -self.t)

    def __sub__(self, o):
        return self + (-Jet._lift(o, self))

    def __rsub__(self, o):
        return Jet._lift(o, self) - self

    def __mul__(self, o):
        if not isinstance(o, Jet):
            c = np.asarray(o, dtype=float)
            return Jet(self.v * c, self.th * c, self.thth * c, self.t * c)
        return Jet(
            self.v * o.v,
            self.th * o.v + self.v * o.th,
            self.thth * o.v + 2.0 * self.th * o.th + self.v * o.thth,
            self.t * o.v + self.v * o.t,
        )

    __rmul__ = __mul__

    def __truediv__(self, o):
        if not isinstance(o, Jet):
            return self * (1.0 / np.asarray(o, dtype=float))
        q = self.v / o.v
        q_th = (self.th - q * o.th) / o.v
        q_thth = (self.thth - 2.0 * q_th * o.th - q * o.thth) / o.v
        q_t = (self.t - q * o.t) / o.v
        return Jet(q, q_th, q_thth, q_t)

    def __rtruediv__(self, o):
        return Jet._lift(o, self) / self

    def exp(self) -> "Jet":
        e = np.exp(self.v)
        return Jet(e, e * self.th, e * (self.thth + self.th**2), e * self.t)

    def sqrt(self) -> "Jet":
        s = np.sqrt(self.v)
        ds = 0.5 / s
        return Jet(s, ds * self.th, ds * self.thth - 0.25 * self.th**2 / (s * self.v), ds * self.t)


class SurfaceFunction:
    """Scalar function of ``(theta, t)``, ``2 pi``-periodic in ``theta``.

    Subclasses implement :meth:`partial`.  ``max_order`` reports which
    ``(n_theta, n_t)`` pairs are available.
    """

    def partial(self, theta, t, n_theta: int = 0, n_t: int = 0) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, theta, t) -> np.ndarray:
        return self.partial(theta, t, 0, 0)

    def jet(self, theta, t) -> Jet:
        return Jet(
            self.partial(theta, t, 0, 0),
            self.partial(theta, t, 1, 0),
            self.partial(theta, t, 2, 0),
            self.partial(theta, t, 0, 1),
        )

    def dtheta(self) -> "SurfaceFunction":
        return PartialView(self, 1, 0)

    def dt(self) -> "SurfaceFunction":
        return PartialView(self, 0, 1)

    # arithmetic builds jet composites
    def _binary(self, other, op):
        a = self
        if isinstance(other, SurfaceFunction):
            return JetFunction(lambda th, t: op(a.jet(th, t), other.jet(th, t)))
        return JetFunction(lambda th, t: op(a.jet(th, t), other))

    def __add__(self, o):
        return self._binary(o, lambda x, y: x + y)

    __radd__ = __add__

    def __sub__(self, o):
        return self._binary(o, lambda x, y: x - y)

    def __rsub__(self, o):
        return self._binary(o, lambda x, y: y - x)

    def __mul__(self, o):
        return self._binary(o, lambda x, y: x * y)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return self._binary(o, lambda x, y: x / y)

    def __neg__(self):
        return self * -1.0


class PartialView(SurfaceFunction):
    """Partial derivative of another function, itself a surface function."""

    def __init__(self, base: SurfaceFunction, n_theta: int, n_t: int):
        self.base, self.n_theta, self.n_t = base, n_theta, n_t

    def partial(self, theta, t, n_theta=0, n_t=0):
        return self.base.partial(theta, t, n_theta + self.n_theta, n_t + self.n_t)


class ConstantFunction(SurfaceFunction):
    def __init__(self, c: float):
        self.c = float(c)

    def partial(self, theta, t, n_theta=0, n_t=0):
        theta, t = _as_arrays(theta, t)
        if n_theta == 0 and n_t == 0:
            return np.full(theta.shape, self.c)
        return np.zeros(theta.shape)


class SymbolicSurfaceFunction(SurfaceFunction):
    """Closed-form function given as a sympy expression in ``theta`` and ``t``."""

    def __init__(self, expr):
        if isinstance(expr, str):
            expr = sp.sympify(expr, locals={"theta": THETA, "t": T})
        self.expr = sp.sympify(expr)
        extra = self.expr.free_symbols - {THETA, T}
        if extra:
            raise ValueError(f"unexpected symbols {sorted(map(str, extra))}")
        self._cache: dict[tuple[int, int], Callable] = {}

    def derivative_expr(self, n_theta: int, n_t: int):
        e = self.expr
        if n_theta:
            e = sp.diff(e, THETA, n_theta)
        if n_t:
            e = sp.diff(e, T, n_t)
        return e

    def _fn(self, n_theta, n_t):
        key = (n_theta, n_t)
        if key not in self._cache:
            e = self.derivative_expr(n_theta, n_t)
            self._cache[key] = sp.lambdify((THETA, T), e, modules="numpy", cse=True)
        return self._cache[key]

    def partial(self, theta, t, n_theta=0, n_t=0):
        theta, t = _as_arrays(theta, t)
        out = self._fn(n_theta, n_t)(theta, t)
        return np.broadcast_to(np.asarray(out, dtype=float), theta.shape).copy()

    def _binary(self, other, op):
        if isinstance(other, (int, float)):
            return SymbolicSurfaceFunction(op(self.expr, sp.Float(other)))
        if isinstance(other, ConstantFunction):
            return SymbolicSurfaceFunction(op(self.expr, sp.Float(other.c)))
        if isinstance(other, SymbolicSurfaceFunction):
            return SymbolicSurfaceFunction(op(self.expr, other.expr))
        return super()._binary(other, op)

    def __repr__(self):
        return f"SymbolicSurfaceFunction({self.expr})"


class JetFunction(SurfaceFunction):
    """Composite function defined by a jet-valued callable."""

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], Jet]):
        self.fn = fn

    def jet(self, theta, t):
        theta, t = _as_arrays(theta, t)
        return self.fn(theta, t)

    def partial(self, theta, t, n_theta=0, n_t=0):
        theta, t = _as_arrays(theta, t)
        j = self.fn(theta, t)
        table = {(0, 0): j.v, (1, 0): j.th, (2, 0): j.thth, (0, 1): j.t}
        if (n_theta, n_t) not in table:
            raise NotImplementedError(
                f"composite function has no ({n_theta}, {n_t}) partial"
            )
        return np.broadcast_to(table[(n_theta, n_t)], theta.shape).copy()


def _mode_numbers(n: int) -> np.ndarray:
    return np.arange(n // 2 + 1, dtype=float)


def _mode_weights(n: int) -> np.ndarray:
    w = np.full(n // 2 + 1, 2.0 / n)
    w[0] = 1.0 / n
    if n % 2 == 0:
        # Nyquist mode is dropped for off-grid evaluation
        w[-1] = 0.0
    return w


class GridSurfaceFunction(SurfaceFunction):
    """Function sampled on a uniform ``theta`` grid at a sequence of times.

    Trigonometric interpolation in ``theta``, cubic spline in ``t``.  A
    single time slice gives a function frozen in the parameter variables.
    """

    def __init__(self, times, values):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[0] != times.size:
            raise ValueError("values must have one row per time")
        self.times = times
        self.n = values.shape[1]
        self.values = values
        self.k = _mode_numbers(self.n)
        self.w = _mode_weights(self.n)
        coef = np.fft.rfft(values, axis=1) * self.w
        self._coef = coef
        self._spline = CubicSpline(times, coef, axis=0) if times.size > 1 else None

    def _coef_at(self, t, n_t):
        if self._spline is None:
            if n_t:
                return np.zeros((t.size, self.k.size), dtype=complex)
            return np.broadcast_to(self._coef[0], (t.size, self.k.size))
        return self._spline(t, nu=n_t) if n_t else self._spline(t)

    def partial(self, theta, t, n_theta=0, n_t=0):
        theta, t = _as_arrays(theta, t)
        shape = theta.shape
        th = theta.ravel()
        tt = t.ravel()
        out = np.empty(th.size)
        fac = (1j * self.k) ** n_theta
        ut, inv = np.unique(tt, return_inverse=True)
        if ut.size <= 64:
            c_all = self._coef_at(ut, n_t) * fac
            for q in range(ut.size):
                idx = np.nonzero(inv == q)[0]
                for s in range(0, idx.size, _CHUNK):
                    ii = idx[s:s + _CHUNK]
                    e = np.exp(1j * np.outer(th[ii], self.k))
                    out[ii] = (e @ c_all[q]).real
        else:
            for s in range(0, th.size, _CHUNK):
                sl = slice(s, s + _CHUNK)
                c = self._coef_at(tt[sl], n_t) * fac
                e = np.exp(1j * np.outer(th[sl], self.k))
                out[sl] = np.einsum("pk,pk->p", e, c).real
        return out.reshape(shape)


class PeriodicSplineFunction(SurfaceFunction):
    """Time-frozen periodic cubic spline through grid values."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        n = values.size
        nodes = np.linspace(0.0, 2.0 * np.pi, n + 1)
        self.spline = CubicSpline(nodes, np.append(values, values[0]), bc_type="periodic")

    def partial(self, theta, t, n_theta=0, n_t=0):
        theta, t = _as_arrays(theta, t)
        if n_t:
            return np.zeros(theta.shape)
        if n_theta > 3:
            return np.zeros(theta.shape)
        return self.spline(np.mod(theta, 2.0 * np.pi), nu=n_theta)


def as_surface_function(obj) -> SurfaceFunction:
    """Coerce numbers, strings and sympy expressions to a surface function."""
    if isinstance(obj, SurfaceFunction):
        return obj
    if isinstance(obj, (int, float)):
        return SymbolicSurfaceFunction(sp.Float(obj))
    return SymbolicSurfaceFunction(obj)
