"""Geometry of a moving closed plane curve and its tubular neighbourhood."""
from .curves import (
    CurveFamily,
    TubularInfo,
    circle,
    ellipse,
    growing_circle,
    perturbed_circle,
    star_curve,
)
from .fermi import FermiBundle, FermiField, constant_extension
from .fields import (
    SurfaceField,
    SurfacePoint,
    normal_time_derivative,
    normal_time_derivative_exact,
    periodic_derivative,
    surface_divergence,
    surface_gradient,
    surface_laplacian,
    theta_grid,
)
from .projection import closest_point, normal_flow, projection, resolvent, signed_distance


def normal_and_curvature(family: CurveFamily, p: SurfacePoint):
    """``(nu, kappa, H, W)`` at a surface point."""
    nu = family.normal(p.theta, p.t)
    kap = family.kappa(p.theta, p.t)
    return nu, kap, kap, family.weingarten(p.theta, p.t)


def normal_velocity(family: CurveFamily, p: SurfacePoint):
    return family.V(p.theta, p.t)


__all__ = [
    "CurveFamily", "TubularInfo", "circle", "ellipse", "growing_circle", "perturbed_circle",
    "star_curve", "FermiBundle", "FermiField", "constant_extension", "SurfaceField",
    "SurfacePoint", "normal_time_derivative", "normal_time_derivative_exact",
    "periodic_derivative", "surface_divergence", "surface_gradient", "surface_laplacian",
    "theta_grid", "closest_point", "normal_flow", "projection", "resolvent",
    "signed_distance", "normal_and_curvature", "normal_velocity",
]
