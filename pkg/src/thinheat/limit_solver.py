"""Limit equation ``d-circ(g eta) - g V H eta - k div_Gamma(g grad_Gamma eta) = g f``.

In the fixed curve parameter the equation is the conservation law

    d_t(ell g eta) = d_theta(w_T g eta + k g eta_theta / ell) + ell g f,

using ``d_t ell = d_theta w_T - V H ell``.  It is discretized by finite
volumes centred at the grid nodes (central advective fluxes), which makes
the discrete mass ``sum_j ell_j g_j eta_j dtheta`` exactly balanced, and
integrated by Crank-Nicolson after two backward-Euler half steps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import Divergence, InvalidTimeStep, SolverError
from .jets import GridSurfaceFunction, SurfaceFunction, as_surface_function
from .surface_geometry import CurveFamily, SurfaceField, theta_grid
from .thin_domain import ProfilePair

TWO_PI = 2.0 * np.pi


def solve_periodic_tridiagonal(lower, diag, upper, rhs):
    """Solve ``lower_j x_{j-1} + diag_j x_j + upper_j x_{j+1} = rhs_j`` (indices mod n).

    Sherman-Morrison correction of the corner entries on top of a banded solve.
    """
    lower, diag, upper = (np.asarray(a, dtype=float) for a in (lower, diag, upper))
    rhs = np.asarray(rhs, dtype=float)
    n = diag.size
    gamma = -diag[0] if diag[0] != 0 else -1.0
    b = diag.copy()
    b[0] -= gamma
    b[-1] -= lower[0] * upper[-1] / gamma
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = b
    ab[2, :-1] = lower[1:]
    u = np.zeros(n)
    u[0], u[-1] = gamma, upper[-1]
    v0, vn = 1.0, lower[0] / gamma
    sol = solve_banded((1, 1), ab, np.column_stack([rhs, u]))
    y, q = sol[:, 0], sol[:, 1]
    denom = 1.0 + v0 * q[0] + vn * q[-1]
    if denom == 0 or not np.isfinite(denom):
        raise SolverError("singular periodic tridiagonal system")
    return y - (v0 * y[0] + vn * y[-1]) / denom * q


@dataclass
class LimitProblem:
    family: CurveFamily
    profiles: ProfilePair
    k: float
    eta0: SurfaceField
    f: SurfaceFunction | None = None

    def __post_init__(self):
        if not self.k > 0:
            raise SolverError("diffusivity must be positive")
        if self.f is not None:
            self.f = as_surface_function(self.f)
        self.g = self.profiles.g()

    @property
    def n_theta(self) -> int:
        return self.eta0.n


@dataclass
class _Operator:
    """Tridiagonal operator ``L`` with mass ``m = ell g`` at one time."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    mass: np.ndarray
    source: np.ndarray

    def apply(self, x):
        return self.lower * np.roll(x, 1) + self.diag * x + self.upper * np.roll(x, -1)


def _operator(problem: LimitProblem, t: float) -> _Operator:
    n = problem.n_theta
    h = TWO_PI / n
    th = theta_grid(n)
    thf = th + 0.5 * h
    fam, g = problem.family, problem.g
    a = fam.w_T(thf, t) * g(thf, t)
    dcoef = problem.k * g(thf, t) / (fam.ell(thf, t) * h)
    # flux through face j+1/2: a/2 (e_j + e_{j+1}) + D (e_{j+1} - e_j)
    up = (0.5 * a + dcoef) / h
    a_m, d_m = np.roll(a, 1), np.roll(dcoef, 1)
    lower = (-0.5 * a_m + d_m) / h
    diag = (0.5 * a - dcoef - 0.5 * a_m - d_m) / h
    mass = fam.ell(th, t) * g(th, t)
    src = mass * problem.f(th, t) if problem.f is not None else np.zeros(n)
    return _Operator(lower, diag, up, mass, src)


def _step(problem: LimitProblem, eta, t, dt, scheme, op_old=None):
    if not dt > 0:
        raise InvalidTimeStep(f"time step must be positive, got {dt}")
    op_new = _operator(problem, t + dt)
    if scheme == "be":
        rhs = (op_old or _operator(problem, t)).mass * eta + dt * op_new.source
        lo, di, up = -dt * op_new.lower, op_new.mass - dt * op_new.diag, -dt * op_new.upper
        src_int = dt * np.sum(op_new.source)
    elif scheme == "cn":
        op_old = op_old or _operator(problem, t)
        rhs = op_old.mass * eta + 0.5 * dt * (op_old.apply(eta) + op_old.source + op_new.source)
        lo, di, up = (-0.5 * dt * op_new.lower, op_new.mass - 0.5 * dt * op_new.diag,
                      -0.5 * dt * op_new.upper)
        src_int = 0.5 * dt * np.sum(op_old.source + op_new.source)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    new = solve_periodic_tridiagonal(lo, di, up, rhs)
    if not np.all(np.isfinite(new)):
        raise Divergence(f"non-finite limit solution at t={t + dt}")
    return new, op_new, src_int * TWO_PI / problem.n_theta


def advance(state: SurfaceField, dt: float, problem: LimitProblem, scheme: str = "cn") -> SurfaceField:
    """One time step from ``state.t`` to ``state.t + dt``."""
    new, _, _ = _step(problem, state.values, state.t, dt, scheme)
    return SurfaceField(state.t + dt, new)


@dataclass
class LimitSolution:
    problem: LimitProblem
    times: np.ndarray
    values: np.ndarray
    mass: np.ndarray
    source_integral: np.ndarray
    _fn: GridSurfaceFunction | None = field(default=None, repr=False)

    @property
    def n_theta(self) -> int:
        return self.values.shape[1]

    @property
    def theta(self) -> np.ndarray:
        return theta_grid(self.n_theta)

    def slice(self, k: int) -> SurfaceField:
        return SurfaceField(self.times[k], self.values[k])

    def as_function(self) -> GridSurfaceFunction:
        if self._fn is None:
            self._fn = GridSurfaceFunction(self.times, self.values)
        return self._fn

    def conservation_drift(self) -> float:
        """``max_t |M(t) - M(0) - int_0^t S| / |M(0)|`` of the discrete mass balance."""
        bal = self.mass - self.mass[0] - self.source_integral
        scale = abs(self.mass[0]) if self.mass[0] != 0 else 1.0
        return float(np.max(np.abs(bal)) / scale)

    def relative_mass_drift(self) -> float:
        scale = abs(self.mass[0]) if self.mass[0] != 0 else 1.0
        return float(np.max(np.abs(self.mass - self.mass[0])) / scale)

    def to_csv(self, k: int) -> str:
        rows = ["theta,value"] + [f"{a!r},{b!r}" for a, b in zip(self.theta, self.values[k])]
        return "\n".join(rows) + "\n"


def solve(problem: LimitProblem, t_end: float, n_steps: int, scheme: str = "cn",
          startup: bool = True) -> LimitSolution:
    """Integrate from ``problem.eta0.t`` to ``t_end`` in ``n_steps`` equal steps.

    With ``scheme='cn'`` and ``startup`` the first step is replaced by two
    backward-Euler half steps.
    """
    if n_steps < 1:
        raise InvalidTimeStep("n_steps must be at least 1")
    t0 = problem.eta0.t
    dt = (t_end - t0) / n_steps
    if not dt > 0:
        raise InvalidTimeStep("t_end must exceed the initial time")
    eta = problem.eta0.values.copy()
    h = TWO_PI / problem.n_theta
    op = _operator(problem, t0)
    times = [t0]
    vals = [eta.copy()]
    mass = [h * np.sum(op.mass * eta)]
    src = [0.0]
    t = t0
    for n in range(n_steps):
        if scheme == "cn" and startup and n == 0:
            eta, op, s1 = _step(problem, eta, t, 0.5 * dt, "be", op)
            eta, op, s2 = _step(problem, eta, t + 0.5 * dt, 0.5 * dt, "be", op)
            s = s1 + s2
        else:
            eta, op, s = _step(problem, eta, t, dt, scheme, op)
        t = t0 + (n + 1) * dt
        times.append(t)
        vals.append(eta.copy())
        mass.append(h * np.sum(op.mass * eta))
        src.append(src[-1] + s)
    return LimitSolution(problem, np.array(times), np.array(vals), np.array(mass), np.array(src))


def surface_derivative_norms(fn: SurfaceFunction, family: CurveFamily, theta, t):
    """``|eta|, |d-circ eta|, |grad_Gamma eta|, |grad_Gamma^2 eta|`` at ``(theta, t)``."""
    ell = family.ell(theta, t)
    eta = fn(theta, t)
    e_th = fn.partial(theta, t, 1, 0)
    e_thth = fn.partial(theta, t, 2, 0)
    e_t = fn.partial(theta, t, 0, 1)
    dcirc = e_t - family.w_T(theta, t) * e_th / ell
    a = e_th / ell
    a_s = (e_thth / ell - e_th * family.ell.partial(theta, t, 1, 0) / ell**2) / ell
    hess = np.sqrt(a_s**2 + (a * family.kappa(theta, t)) ** 2)
    return np.abs(eta), np.abs(dcirc), np.abs(a), hess


def c21_norm(solution, family: CurveFamily | None = None, times=None, n_theta: int | None = None) -> float:
    """Sum of the sup norms of ``eta``, ``d-circ eta``, ``grad_Gamma eta`` and its Hessian.

    ``solution`` is a :class:`LimitSolution` (sampled at its grid and time
    slices) or a :class:`SurfaceFunction` with explicit ``family``/``times``.
    """
    if isinstance(solution, LimitSolution):
        fn = solution.as_function()
        family = solution.problem.family
        times = solution.times if times is None else times
        n_theta = n_theta or solution.n_theta
    else:
        fn = solution
        if family is None or times is None:
            raise ValueError("family and times are required for a SurfaceFunction")
        n_theta = n_theta or 256
    if len(times) < 3:
        raise ValueError("c21_norm needs at least three time slices")
    th = theta_grid(n_theta)
    sups = np.zeros(4)
    for t in times:
        parts = surface_derivative_norms(fn, family, th, np.full_like(th, t))
        sups = np.maximum(sups, [p.max() for p in parts])
    return float(np.sum(sups))


# Lagrangian cross-check -----------------------------------------------------------

def _label_velocity(family: CurveFamily, theta, q, t):
    """``d theta/dt = -w_T/ell`` and its variational equation ``dq/dt = -(w_T/ell)_theta q``."""
    ell = family.ell(theta, t)
    w = family.w_T(theta, t)
    w_th = family.w_T.partial(theta, t, 1, 0)
    ell_th = family.ell.partial(theta, t, 1, 0)
    return -w / ell, -(w_th * ell - w * ell_th) / ell**2 * q


def _rk4_labels(family, theta, q, t, dt, n_sub):
    h = dt / n_sub
    for _ in range(n_sub):
        a1, b1 = _label_velocity(family, theta, q, t)
        a2, b2 = _label_velocity(family, theta + 0.5 * h * a1, q + 0.5 * h * b1, t + 0.5 * h)
        a3, b3 = _label_velocity(family, theta + 0.5 * h * a2, q + 0.5 * h * b2, t + 0.5 * h)
        a4, b4 = _label_velocity(family, theta + h * a3, q + h * b3, t + h)
        theta = theta + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        q = q + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        t = t + h
    return theta, q


@dataclass
class LagrangianSolution:
    labels: np.ndarray
    theta: np.ndarray  # parameters of the label nodes at t_end
    values: np.ndarray  # eta at the label nodes at t_end
    t_end: float


def solve_lagrangian(problem: LimitProblem, t_end: float, n_steps: int, n_sub: int = 4) -> LagrangianSolution:
    """Normal-flow discretization: nodes follow ``V nu`` so ``d-circ`` is a plain ``d_t``.

    Labels ``alpha`` coincide with ``theta`` at the initial time.  Node and
    face parameters and their label derivatives are integrated by RK4.
    """
    fam, g = problem.family, problem.g
    n = problem.n_theta
    h = TWO_PI / n
    alpha = theta_grid(n)
    both = np.concatenate([alpha, alpha + 0.5 * h])
    q = np.ones(2 * n)
    t0 = problem.eta0.t
    dt = (t_end - t0) / n_steps
    eta = problem.eta0.values.copy()

    def op(theta, qq, t):
        tn, tf = theta[:n], theta[n:]
        ell_a_face = fam.ell(tf, t) * qq[n:]
        dcoef = problem.k * g(tf, t) / (ell_a_face * h)
        d_m = np.roll(dcoef, 1)
        mass = fam.ell(tn, t) * qq[:n] * g(tn, t)
        src = mass * problem.f(tn, t) if problem.f is not None else np.zeros(n)
        return _Operator(d_m / h, -(dcoef + d_m) / h, dcoef / h, mass, src)

    t = t0
    cur = op(both, q, t)
    for step in range(n_steps):
        both, q = _rk4_labels(fam, both, q, t, dt, n_sub)
        new = op(both, q, t + dt)
        rhs = cur.mass * eta + 0.5 * dt * (cur.apply(eta) + cur.source + new.source)
        eta = solve_periodic_tridiagonal(-0.5 * dt * new.lower, new.mass - 0.5 * dt * new.diag,
                                         -0.5 * dt * new.upper, rhs)
        cur = new
        t = t0 + (step + 1) * dt
    return LagrangianSolution(alpha, np.mod(both[:n], TWO_PI), eta, t)
