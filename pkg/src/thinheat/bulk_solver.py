"""Heat equation in the moving thin domain with the velocity-Robin condition.

    d_t rho - k Lap rho = f          in Omega_eps(t)
    d_nu rho + V_eps rho / k = psi   on the boundary

The problem is pulled back to the reference cell ``(theta, s)`` through the
moving map ``X = Phi + r nu``, ``r = eps (g0 + s g)`` (an ALE formulation).
With ``jac = J r_s`` the pulled-back equation is the conservation law

    d_t(jac rho) = d_theta Q^theta + d_s Q^s + jac f,
    Q = k G grad_xi rho + rho U,

where ``G`` is the inverse metric times ``jac`` and ``U`` the grid-velocity
flux.  Because the boundary moves with the grid, the flux ``Q^s`` through
``s = 0, 1`` equals ``face_len * (k d_nu rho + V_eps rho)``, so the Robin
condition becomes the boundary flux ``face_len * k * psi``.  Nodes are
vertex centred in ``s`` (half cells on the boundary) and periodic in
``theta``; face metrics are exact.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu, spsolve

from .errors import Divergence, InvalidTimeStep, SolverError, StabilityWarning, TimeGridMismatch
from .jets import SurfaceFunction
from .thin_domain import ThinDomainSpec, boundary_normal, boundary_velocity, map_ref_to_phys, reference_metric

TWO_PI = 2.0 * np.pi

BulkFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
SideFn = Callable[[np.ndarray, float, int], np.ndarray]


@dataclass(frozen=True)
class BulkGrid:
    n_theta: int
    n_s: int

    def __post_init__(self):
        if self.n_theta < 8 or self.n_s < 2:
            raise SolverError("bulk grid needs n_theta >= 8 and n_s >= 2")

    @property
    def theta(self) -> np.ndarray:
        return np.linspace(0.0, TWO_PI, self.n_theta, endpoint=False)

    @property
    def s(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_s + 1)

    @property
    def h_theta(self) -> float:
        return TWO_PI / self.n_theta

    @property
    def h_s(self) -> float:
        return 1.0 / self.n_s

    def mesh(self):
        return np.meshgrid(self.theta, self.s, indexing="ij")

    def cell_weights(self) -> np.ndarray:
        w = np.full(self.n_s + 1, self.h_s)
        w[0] = w[-1] = 0.5 * self.h_s
        return np.outer(np.full(self.n_theta, self.h_theta), w)

    @property
    def size(self) -> int:
        return self.n_theta * (self.n_s + 1)


@dataclass
class BulkField:
    """Values on the reference grid, shape ``(n_theta, n_s + 1)``."""

    t: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise SolverError("BulkField values must be two dimensional")
        if not np.all(np.isfinite(self.values)):
            raise Divergence("BulkField values must be finite")

    @property
    def grid(self) -> BulkGrid:
        return BulkGrid(self.values.shape[0], self.values.shape[1] - 1)

    def physical_points(self, spec: ThinDomainSpec) -> np.ndarray:
        th, s = self.grid.mesh()
        return map_ref_to_phys(spec, th, s, self.t)

    def to_csv(self, spec: ThinDomainSpec) -> str:
        th, s = self.grid.mesh()
        x = self.physical_points(spec)
        lines = ["theta,s,x1,x2,value"]
        for a, b, c, d, e in zip(th.ravel(), s.ravel(), x[..., 0].ravel(), x[..., 1].ravel(),
                                 self.values.ravel()):
            lines.append(f"{a!r},{b!r},{c!r},{d!r},{e!r}")
        return "\n".join(lines) + "\n"


def surface_source(fn: SurfaceFunction) -> BulkFn:
    """Constant extension of a surface function as a bulk source."""
    return lambda theta, s, t: fn(theta, np.full_like(theta, t))


@dataclass
class BulkProblem:
    """Data of the (possibly transformed) bulk problem.

    ``psi(theta, t, i)`` is the Robin datum on side ``i``.  The optional
    ``drift`` (tangential and normal components ``b . tau``, ``b . nu``),
    ``reaction`` and ``robin_excess`` (``beta - V_eps / k``) describe the
    equation ``d_t chi - k Lap chi + b . grad chi + c chi = f`` with
    ``d_nu chi + beta chi = psi``; they are used by the lambda transform.
    """

    spec: ThinDomainSpec
    rho0: np.ndarray | BulkFn
    f: BulkFn | None = None
    psi: SideFn | None = None
    drift: Callable | None = None
    reaction: BulkFn | None = None
    robin_excess: SideFn | None = None
    t0: float = 0.0

    def initial(self, grid: BulkGrid) -> np.ndarray:
        if callable(self.rho0):
            th, s = grid.mesh()
            return np.asarray(self.rho0(th, s, self.t0), dtype=float)
        arr = np.asarray(self.rho0, dtype=float)
        if arr.shape != (grid.n_theta, grid.n_s + 1):
            raise SolverError(f"initial data shape {arr.shape} does not match the grid")
        return arr


def _ds_stencil(m: int, n_s: int, h: float):
    """Second-order ``d/ds`` at node ``m`` as (offsets, weights)."""
    if m == 0:
        return (0, 1, 2), (-1.5 / h, 2.0 / h, -0.5 / h)
    if m == n_s:
        return (0, -1, -2), (1.5 / h, -2.0 / h, 0.5 / h)
    return (-1, 1), (-0.5 / h, 0.5 / h)


class _Assembler:
    """Builds the semi-discrete system ``d/dt(D rho) = L rho + b``."""

    def __init__(self, problem: BulkProblem, grid: BulkGrid):
        self.p = problem
        self.g = grid
        nt, ns = grid.n_theta, grid.n_s
        self.idx = np.arange(grid.size).reshape(nt, ns + 1)
        self.weights = grid.cell_weights()

    def __call__(self, t: float):
        p, g, idx = self.p, self.g, self.idx
        spec = p.spec
        k = spec.k
        nt, ns = g.n_theta, g.n_s
        ht, hs = g.h_theta, g.h_s
        th, s = g.theta, g.s
        rows, cols, vals = [], [], []

        def add(r, c, v):
            r, c, v = np.broadcast_arrays(r, c, v)
            rows.append(r.ravel()); cols.append(c.ravel()); vals.append(v.ravel())

        jp = np.roll(np.arange(nt), -1)
        jm = np.roll(np.arange(nt), 1)

        # theta faces (j + 1/2, m)
        tf, sf = np.meshgrid(th + 0.5 * ht, s, indexing="ij")
        mf = reference_metric(spec, tf, sf, t)
        ws = np.full(ns + 1, hs)
        ws[0] = ws[-1] = 0.5 * hs
        left = idx
        right = idx[jp]
        c_right = k * mf.G_thth / ht + 0.5 * mf.U_th
        c_left = -k * mf.G_thth / ht + 0.5 * mf.U_th
        for cell_idx, sign in ((left, 1.0), (right, -1.0)):
            add(cell_idx, right, sign * ws * c_right)
            add(cell_idx, left, sign * ws * c_left)
        for m in range(ns + 1):
            offs, wts = _ds_stencil(m, ns, hs)
            cross = 0.5 * k * mf.G_ths[:, m]
            for o, w in zip(offs, wts):
                for nodes in (left[:, m + o], right[:, m + o]):
                    add(left[:, m], nodes, ws[m] * cross * w)
                    add(right[:, m], nodes, -ws[m] * cross * w)

        # s faces (j, m + 1/2)
        tg, sg = np.meshgrid(th, s[:-1] + 0.5 * hs, indexing="ij")
        ms = reference_metric(spec, tg, sg, t)
        lo = idx[:, :-1]
        hi = idx[:, 1:]
        c_hi = k * ms.G_ss / hs + 0.5 * ms.U_s
        c_lo = -k * ms.G_ss / hs + 0.5 * ms.U_s
        cr = k * ms.G_ths / (4.0 * ht)
        for cell_idx, sign in ((lo, 1.0), (hi, -1.0)):
            add(cell_idx, hi, sign * ht * c_hi)
            add(cell_idx, lo, sign * ht * c_lo)
            for nodes, w in ((idx[jp, :-1], 1.0), (idx[jm, :-1], -1.0),
                             (idx[jp, 1:], 1.0), (idx[jm, 1:], -1.0)):
                add(cell_idx, nodes, sign * ht * cr * w)

        # nodal quantities
        tn, sn = g.mesh()
        mn = reference_metric(spec, tn, sn, t)
        dmass = (self.weights * mn.jac).ravel()
        rhs = np.zeros(g.size)
        if p.f is not None:
            rhs += (self.weights * mn.jac * p.f(tn, sn, t)).ravel()
        if p.drift is not None or p.reaction is not None:
            self._lower_order(add, tn, sn, t, mn)

        # boundary fluxes
        for i, m in ((0, 0), (1, ns)):
            mb = reference_metric(spec, th, float(i), t)
            if p.psi is not None:
                rhs[idx[:, m]] += ht * mb.face_len * k * p.psi(th, t, i)
            if p.robin_excess is not None:
                add(idx[:, m], idx[:, m], -ht * mb.face_len * k * p.robin_excess(th, t, i))

        L = sps.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(g.size, g.size),
        )
        L.sum_duplicates()
        return L, dmass, rhs

    def _lower_order(self, add, tn, sn, t, mn):
        p, g, idx = self.p, self.g, self.idx
        nt, ns = g.n_theta, g.n_s
        ht, hs = g.h_theta, g.h_s
        w = self.weights * mn.jac
        b_tau = b_nu = None
        if p.drift is not None:
            b_tau, b_nu = p.drift(tn, sn, t)
        jp = np.roll(np.arange(nt), -1)
        jm = np.roll(np.arange(nt), 1)
        if p.reaction is not None:
            add(idx, idx, -w * p.reaction(tn, sn, t))
        if b_tau is None:
            return
        # b . grad chi with grad chi = (chi_th / J - r_th chi_s / (J r_s)) tau + chi_s / r_s nu
        c_th = -w * b_tau / mn.J
        c_s = -w * (b_nu / mn.r_s - b_tau * mn.r_th / (mn.J * mn.r_s))
        add(idx, idx[jp], c_th / (2 * ht))
        add(idx, idx[jm], -c_th / (2 * ht))
        for m in range(ns + 1):
            offs, wts = _ds_stencil(m, ns, hs)
            for o, wt in zip(offs, wts):
                add(idx[:, m], idx[:, m + o], c_s[:, m] * wt)


@dataclass
class BulkSolution:
    problem: BulkProblem
    grid: BulkGrid
    times: np.ndarray
    values: np.ndarray  # (n_t, n_theta, n_s + 1)
    mass: np.ndarray  # discrete sum jac * rho * weights
    sup: float = field(init=False)

    def __post_init__(self):
        self.sup = float(np.max(np.abs(self.values)))

    def slice(self, k: int) -> BulkField:
        return BulkField(self.times[k], self.values[k])

    def relative_mass_drift(self) -> float:
        scale = abs(self.mass[0]) if self.mass[0] != 0 else 1.0
        return float(np.max(np.abs(self.mass - self.mass[0])) / scale)


class _Stepper:
    def __init__(self, problem: BulkProblem, grid: BulkGrid, solver: str = "splu",
                 stability_guard: float = 1e7):
        self.asm = _Assembler(problem, grid)
        self.solver = solver
        self.guard = stability_guard
        self.problem = problem
        self.grid = grid

    def _solve(self, A, rhs):
        if self.solver == "splu":
            out = splu(A.tocsc()).solve(rhs)
        elif self.solver == "spsolve":
            out = spsolve(A.tocsc(), rhs)
        else:
            raise SolverError(f"unknown linear solver {self.solver!r}")
        if not np.all(np.isfinite(out)):
            raise Divergence("non-finite bulk solution")
        return out

    def check(self, dt):
        spec = self.problem.spec
        th = self.grid.theta
        gmin = float(np.min(spec.profiles.g()(th, self.problem.t0)))
        number = spec.k * dt / (spec.epsilon * gmin * self.grid.h_s) ** 2
        if number > self.guard:
            warnings.warn(f"s-direction diffusion number {number:.3g} exceeds {self.guard:.3g}",
                          StabilityWarning, stacklevel=3)

    def be(self, rho, old, t_new, dt):
        L, D, b = self.asm(t_new)
        A = sps.diags(D) - dt * L
        rhs = old[1] * rho + dt * b
        return self._solve(A, rhs), (L, D, b)

    def cn(self, rho, old, t_new, dt):
        L0, D0, b0 = old
        L, D, b = self.asm(t_new)
        A = sps.diags(D) - 0.5 * dt * L
        rhs = D0 * rho + 0.5 * dt * (L0 @ rho + b0 + b)
        return self._solve(A, rhs), (L, D, b)

    def bdf2(self, rho, rho_prev, D_prev, old, t_new, dt):
        L, D, b = self.asm(t_new)
        A = sps.diags(1.5 * D) - dt * L
        rhs = 2.0 * old[1] * rho - 0.5 * D_prev * rho_prev + dt * b
        return self._solve(A, rhs), (L, D, b)


def solve(problem: BulkProblem, grid: BulkGrid, t_end: float, n_steps: int,
          scheme: str = "cn", solver: str = "splu") -> BulkSolution:
    """Integrate the bulk problem; ``scheme`` is ``'cn'`` (backward-Euler start) or ``'bdf2'``."""
    if n_steps < 1:
        raise InvalidTimeStep("n_steps must be at least 1")
    t0 = problem.t0
    dt = (t_end - t0) / n_steps
    if not dt > 0:
        raise InvalidTimeStep("t_end must exceed the initial time")
    st = _Stepper(problem, grid, solver)
    st.check(dt)
    rho = problem.initial(grid).ravel().copy()
    cur = st.asm(t0)
    times = [t0]
    vals = [rho.copy()]
    mass = [float(np.sum(cur[1] * rho))]
    prev = None
    for n in range(n_steps):
        t_new = t0 + (n + 1) * dt
        if n == 0:
            if scheme == "cn":
                half = t0 + 0.5 * dt
                rho1, mid = st.be(rho, cur, half, 0.5 * dt)
                new, nxt = st.be(rho1, mid, t_new, 0.5 * dt)
            else:
                new, nxt = st.be(rho, cur, t_new, dt)
        elif scheme == "cn":
            new, nxt = st.cn(rho, cur, t_new, dt)
        elif scheme == "bdf2":
            new, nxt = st.bdf2(rho, prev[0], prev[1], cur, t_new, dt)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        prev = (rho, cur[1])
        rho, cur = new, nxt
        times.append(t_new)
        vals.append(rho.copy())
        mass.append(float(np.sum(cur[1] * rho)))
    shape = (grid.n_theta, grid.n_s + 1)
    return BulkSolution(problem, grid, np.array(times),
                        np.array(vals).reshape((-1,) + shape), np.array(mass))


def advance(state: BulkField, dt: float, problem: BulkProblem, scheme: str = "be") -> BulkField:
    """One step from ``state.t``; ``scheme`` is ``'be'`` or ``'cn'``."""
    if not dt > 0:
        raise InvalidTimeStep("time step must be positive")
    grid = state.grid
    st = _Stepper(problem, grid)
    cur = st.asm(state.t)
    rho = state.values.ravel()
    step = st.be if scheme == "be" else st.cn
    new, _ = step(rho, cur, state.t + dt, dt)
    return BulkField(state.t + dt, new.reshape(state.values.shape))


def mass_quadrature(spec: ThinDomainSpec, field_: BulkField) -> float:
    """``int rho dx`` by trapezoid in ``theta`` and Simpson in ``s`` (independent of the scheme)."""
    from scipy.integrate import simpson

    grid = field_.grid
    th, s = grid.mesh()
    jac = reference_metric(spec, th, s, field_.t).jac
    inner = simpson(jac * field_.values, x=grid.s, axis=1)
    return float(np.sum(inner) * grid.h_theta)


def sup_error_vs_surface(solution: BulkSolution, limit, method: str = "cubic") -> float:
    """``max |rho(x, t) - eta(pi(x, t), t)|`` over grid nodes and common slices.

    ``limit`` is a ``LimitSolution`` on the same time grid.  Grid nodes sit
    on the normal line through ``theta_j``, so ``pi`` is exact and ``eta`` is
    interpolated (periodic cubic) only when the ``theta`` grids differ.
    """
    if solution.times.shape != limit.times.shape or not np.allclose(solution.times, limit.times,
                                                                   rtol=0, atol=1e-12):
        raise TimeGridMismatch("bulk and limit time grids differ")
    th = solution.grid.theta
    err = 0.0
    for k in range(solution.times.size):
        eta = limit.slice(k)
        if eta.n == th.size:
            ev = eta.values
        else:
            ev = eta.interpolate(th, method)
        err = max(err, float(np.max(np.abs(solution.values[k] - ev[:, None]))))
    return err


def sup_error_vs_function(solution: BulkSolution, fn: Callable) -> float:
    """``max |rho - u|`` against ``u(theta, s, t)`` over all nodes and slices."""
    th, s = solution.grid.mesh()
    return float(max(np.max(np.abs(solution.values[k] - fn(th, s, t)))
                     for k, t in enumerate(solution.times)))


def boundary_data_from_exact(spec: ThinDomainSpec, bundle_fn) -> SideFn:
    """Robin datum ``d_nu u + V_eps u / k`` of an exact solution.

    ``bundle_fn(x, t)`` returns ``(value, grad)`` at physical points.
    """
    from .thin_domain import boundary_point

    def psi(theta, t, i):
        x = boundary_point(spec, theta, t, i)
        u, grad = bundle_fn(x, t)
        nu = boundary_normal(spec, theta, t, i)
        return np.sum(nu * grad, axis=-1) + boundary_velocity(spec, theta, t, i) * u / spec.k

    return psi
