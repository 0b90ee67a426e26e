"""Closest-point projection, signed distance, resolvent and normal flow."""
from __future__ import annotations

import numpy as np

from ..errors import NoConvergence, OutOfTubularNeighborhood, SingularMatrix
from .curves import CurveFamily

TWO_PI = 2.0 * np.pi
_N_SCAN = 256
_CHUNK = 2048


def _coarse_scan(family: CurveFamily, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Global minimiser of ``|x - Phi(theta_j, t)|`` over a uniform scan."""
    grid = np.linspace(0.0, TWO_PI, _N_SCAN, endpoint=False)
    out = np.empty(x.shape[0])
    ut = np.unique(t)
    if ut.size == 1:
        p = family.position(grid, ut[0])
        for s in range(0, x.shape[0], _CHUNK):
            d2 = np.sum((x[s:s + _CHUNK, None, :] - p[None]) ** 2, axis=-1)
            out[s:s + _CHUNK] = grid[np.argmin(d2, axis=1)]
        return out
    for s in range(0, x.shape[0], _CHUNK):
        tt = t[s:s + _CHUNK, None]
        p = family.position(grid[None, :], tt)
        d2 = np.sum((x[s:s + _CHUNK, None, :] - p) ** 2, axis=-1)
        out[s:s + _CHUNK] = grid[np.argmin(d2, axis=1)]
    return out


def closest_point(family: CurveFamily, x, t, theta_guess=None, check: bool = True,
                  tol: float = 1e-12, max_iter: int = 50):
    """Parameter ``theta`` of the closest curve point and the signed distance.

    Parameters
    ----------
    family : CurveFamily
    x : array_like, shape (..., 2)
    t : float or array_like broadcastable to ``x[..., 0]``
    theta_guess : optional initial parameters (skips the coarse scan)
    check : raise ``OutOfTubularNeighborhood`` when ``|d| >= delta``
        (only if the family carries a tubular estimate)

    Returns
    -------
    theta : ndarray in ``[0, 2 pi)``
    d : ndarray, signed distance (positive outside)
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1]
    xf = x.reshape(-1, 2)
    tf = np.broadcast_to(np.asarray(t, dtype=float), shape).ravel()
    if theta_guess is None:
        th = _coarse_scan(family, xf, tf)
    else:
        th = np.broadcast_to(np.asarray(theta_guess, dtype=float), shape).ravel().copy()
    h_max = TWO_PI / _N_SCAN
    active = np.ones(th.size, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        ta, tt, xa = th[active], tf[active], xf[active]
        diff = family.position(ta, tt) - xa
        d1 = family.d_position(ta, tt, 1)
        d2 = family.d_position(ta, tt, 2)
        F = np.sum(diff * d1, axis=-1)
        dF = np.sum(d1 * d1, axis=-1) + np.sum(diff * d2, axis=-1)
        step = np.where(dF > 0, F / np.where(dF > 0, dF, 1.0), np.sign(F) * h_max)
        step = np.clip(step, -h_max, h_max)
        th[active] = ta - step
        done = np.abs(step) < tol
        idx = np.nonzero(active)[0]
        active[idx[done]] = False
    if active.any():
        raise NoConvergence(f"closest point failed for {int(active.sum())} points")
    th = np.mod(th, TWO_PI)
    nu = family.normal(th, tf)
    d = np.sum((xf - family.position(th, tf)) * nu, axis=-1)
    info = family.tubular_info
    if check and info is not None and np.any(np.abs(d) >= info.delta):
        raise OutOfTubularNeighborhood(
            f"max |d| = {np.abs(d).max():.3g} exceeds delta = {info.delta:.3g}"
        )
    return th.reshape(shape), d.reshape(shape)


def signed_distance(family: CurveFamily, x, t, **kw) -> np.ndarray:
    return closest_point(family, x, t, **kw)[1]


def projection(family: CurveFamily, x, t, **kw) -> np.ndarray:
    """``pi(x, t) = x - d(x, t) nu(pi(x, t), t)``."""
    th, _ = closest_point(family, x, t, **kw)
    return family.position(th, np.broadcast_to(np.asarray(t, float), th.shape))


def resolvent(family: CurveFamily, x, t, **kw) -> np.ndarray:
    """``R = (I - d W)^{-1}`` at physical points, shape ``(..., 2, 2)``."""
    th, d = closest_point(family, x, t, **kw)
    tb = np.broadcast_to(np.asarray(t, float), th.shape)
    kap = family.kappa(th, tb)
    den = 1.0 - d * kap
    if np.any(den <= 0.0):
        raise SingularMatrix("1 - d kappa <= 0: resolvent not positive definite")
    tau = family.tangent(th, tb)
    nu = family.normal(th, tb)
    return nu[..., :, None] * nu[..., None, :] + (
        tau[..., :, None] * tau[..., None, :] / den[..., None, None]
    )


def normal_flow(family: CurveFamily, y0, t0, t1, n_sub: int = 1):
    """Move curve points with velocity ``V nu`` from ``t0`` to ``t1`` (RK4).

    Returns the final points and their curve parameters.
    """
    y = np.array(y0, dtype=float)
    th, _ = closest_point(family, y, t0, check=False)
    # times may be per point
    t = np.asarray(t0, float)
    h = (np.asarray(t1, float) - t) / n_sub
    hv = h[..., None] if h.ndim else h

    def vel(p, tt, guess):
        q, _ = closest_point(family, p, tt, theta_guess=guess, check=False)
        return (family.V(q, tt)[..., None] * family.normal(q, tt)), q

    for _ in range(n_sub):
        k1, _ = vel(y, t, th)
        k2, _ = vel(y + 0.5 * hv * k1, t + 0.5 * h, th)
        k3, _ = vel(y + 0.5 * hv * k2, t + 0.5 * h, th)
        k4, _ = vel(y + hv * k3, t + h, th)
        y = y + hv / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t + h
        th, _ = closest_point(family, y, t, theta_guess=th, check=False)
    return y, th
