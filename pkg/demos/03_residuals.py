"""Residuals of the asymptotic approximate solution.

The approximate solution leaves a bulk residual of order eps and a boundary
residual of order eps^2.  Dropping the profile-gradient term in zeta_i
breaks the boundary order when g1 depends on theta.  Run with
``python demos/03_residuals.py``.
"""
from thinheat.asymptotics import (
    ExpansionCoefficients,
    boundary_residual,
    boundary_samples,
    bulk_residual,
    interior_samples,
    limit_source,
)
from thinheat.harness import fit_slope
from thinheat.jets import SymbolicSurfaceFunction
from thinheat.surface_geometry import ellipse
from thinheat.thin_domain import ProfilePair, ThinDomainSpec

fam = ellipse()
fam.tubular((0.0, 1.0))
pair = ProfilePair("0", "1 + 0.2*cos(theta)")
# a manufactured limit solution and the source that makes it exact
eta = SymbolicSurfaceFunction("exp(-t)*(1 + 0.3*cos(theta) + 0.2*sin(2*theta))")
f = limit_source(eta, fam, pair, 1.0)

full = ExpansionCoefficients.build(eta, fam, pair, 1.0)
ablated = ExpansionCoefficients.build(eta, fam, pair, 1.0, drop_gradient_term=True)
inner = interior_samples(2000, seed=0)
bnd = boundary_samples(64, 20)

eps_list = [0.1, 0.05, 0.025]
rows = []
for eps in eps_list:
    spec = ThinDomainSpec(fam, pair, eps)
    rows.append((bulk_residual(full, spec, f, inner).sup,
                 boundary_residual(full, spec, bnd).sup,
                 boundary_residual(ablated, spec, bnd).sup))
    print(f"eps = {eps:<6} bulk {rows[-1][0]:.3e}  boundary {rows[-1][1]:.3e}  "
          f"boundary (ablated) {rows[-1][2]:.3e}")

for j, label in enumerate(("bulk", "boundary", "boundary without gradient term")):
    slope, _ = fit_slope(eps_list, [r[j] for r in rows])
    print(f"{label:>32}: slope {slope:.3f}")
