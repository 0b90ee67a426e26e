"""Moving curves, Fermi coordinates and the thin domain around them.

Run with ``python demos/01_geometry.py``.
"""
import numpy as np

from thinheat.surface_geometry import closest_point, ellipse
from thinheat.thin_domain import (
    ProfilePair,
    ThinDomainSpec,
    boundary_normal,
    boundary_velocity,
    map_ref_to_phys,
    sigma_aux,
)

# An ellipse whose semi-axes grow in time.  ``tubular`` estimates a radius
# inside which the closest-point projection is single valued.
fam = ellipse("1.2 + 0.3*t", "0.9 + 0.2*t")
info = fam.tubular((0.0, 1.0))
print(f"tubular radius delta = {info.delta:.4f}, max|kappa| = {info.max_abs_kappa:.4f}")

# Points off the curve split as x = pi(x) + d nu(pi(x)).
rng = np.random.default_rng(0)
th0 = rng.uniform(0, 2 * np.pi, 5)
x = fam.position(th0, 0.5) + 0.2 * fam.normal(th0, 0.5)
th, d = closest_point(fam, x, 0.5)
print("signed distances:", np.round(d, 12))

# The thin domain sits between eps*g0 and eps*g1 along the normal.
spec = ThinDomainSpec(fam, ProfilePair("0", "1 + 0.2*cos(theta)"), 0.05)
grid = np.linspace(0, 2 * np.pi, 8, endpoint=False)
outer = map_ref_to_phys(spec, grid, 1.0, 0.5)
print("outer boundary points at t=0.5:\n", np.round(outer, 4))

# Outer normals tilt away from nu where g1 varies; V_eps is close to V on
# the outer component and to -V on the inner one.
for i in (0, 1):
    nu = boundary_normal(spec, grid, 0.5, i)
    V = boundary_velocity(spec, grid, 0.5, i)
    tilt = np.abs(np.sum(nu * fam.normal(grid, 0.5), -1))
    print(f"side {i}: min |nu_eps . nu| = {tilt.min():.5f}, V_eps range [{V.min():.4f}, {V.max():.4f}]")

# sigma vanishes on both components and its normal flux is about eps*g there.
b = sigma_aux(spec, outer, 0.5)
flux = np.sum(boundary_normal(spec, grid, 0.5, 1) * b.grad, -1)
print(f"sigma on outer boundary: {np.abs(b.value).max():.2e}; flux/eps*g: "
      f"{np.round(flux / (0.05 * spec.profiles.g()(grid, 0.5)), 4)}")
