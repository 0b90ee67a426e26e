"""Heat in a thinning film converges to the limit equation on the curve.

Solves the bulk problem on a growing circle for a few thicknesses and
compares it with the limit solution.  Run with
``python demos/02_thin_film_limit.py``.
"""
import numpy as np

from thinheat.bulk_solver import BulkGrid, BulkProblem, solve as bulk_solve, sup_error_vs_surface
from thinheat.harness import fit_slope
from thinheat.limit_solver import LimitProblem, solve as limit_solve
from thinheat.surface_geometry import SurfaceField, growing_circle, theta_grid
from thinheat.thin_domain import ProfilePair, ThinDomainSpec

fam = growing_circle(1.0, 0.5)
fam.tubular((0.0, 1.0))
pair = ProfilePair("0", "1 + 0.5*t")
n_theta, n_s, n_steps = 64, 16, 100

# Limit equation: d-circ(g eta) - g V H eta - div(g grad eta) = 0.
eta0 = 1 + 0.5 * np.cos(theta_grid(n_theta))
lim = limit_solve(LimitProblem(fam, pair, 1.0, SurfaceField(0.0, eta0)), 1.0, n_steps)
print(f"limit mass drift: {lim.relative_mass_drift():.2e}")

# Bulk problem with the same initial datum extended constantly along normals.
errs = []
eps_list = [0.2, 0.1, 0.05, 0.025]
for eps in eps_list:
    spec = ThinDomainSpec(fam, pair, eps)
    prob = BulkProblem(spec, lambda th, s, t: 1 + 0.5 * np.cos(th))
    sol = bulk_solve(prob, BulkGrid(n_theta, n_s), 1.0, n_steps)
    errs.append(sup_error_vs_surface(sol, lim))
    print(f"eps = {eps:<6} sup|rho - eta-bar| = {errs[-1]:.4e}  bulk mass drift = "
          f"{sol.relative_mass_drift():.1e}")

slope, r2 = fit_slope(eps_list, errs)
print(f"fitted order in eps: {slope:.3f} (r2 = {r2:.4f})")
