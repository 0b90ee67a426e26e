"""Experiment configuration files (TOML) and their validation."""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import sympy as sp
from sympy.parsing.sympy_parser import parse_expr

from .errors import ConfigError, ThinHeatError
from .jets import THETA, T, SymbolicSurfaceFunction

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

KINDS = ("mms_bulk", "mms_limit", "convergence", "residual_orders", "uniform_ratio", "sharpness")
FAMILIES = ("circle", "ellipse", "star", "perturbed_circle", "parametric")

X1, X2 = sp.symbols("x1 x2", real=True)
_FUNCS = {name: getattr(sp, name) for name in (
    "sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan2", "pi", "Abs")}

DEFAULTS: dict[str, Any] = {
    "experiment": {"seed": 0, "t_end": 1.0, "name": ""},
    "physics": {"k_d": 1.0, "f": "0"},
    "grid": {"n_theta": 64, "n_s": 16, "n_steps": 100, "scheme": "cn", "linear_solver": "splu"},
    "sweep": {"epsilons": [0.2, 0.1, 0.05, 0.025]},
    "residual": {"n_interior": 10000, "n_boundary_theta": 128, "n_boundary_t": 40,
                 "method": "fd", "quadratic_sign": 1.0},
    "mms": {"refinements": 3, "epsilon": 0.2},
    "uniform": {"families": ["initial", "boundary", "source"]},
    "acceptance": {},
}

ACCEPTANCE_DEFAULTS = {
    "convergence": {"slope_min": 0.8, "slope_max": 2.2, "r2_min": 0.98, "discretization_ratio": 0.1},
    "residual_orders": {"f_slope_min": 0.8, "f_slope_max": 1.5, "psi_slope_min": 1.7,
                        "psi_slope_max": 2.5, "ablation_psi_slope_max": 1.4},
    "uniform_ratio": {"max_ratio_spread": 2.0},
    "sharpness": {"band": 1.5, "linearity_tol": 1e-8},
    "mms_bulk": {"order_min": 1.9, "r2_min": 0.99},
    "mms_limit": {"order_min": 1.9, "r2_min": 0.99},
}


def parse_expression(text, symbols=("theta", "t")):
    """Parse an expression string over the allowed symbols."""
    table = {"theta": THETA, "t": T, "x1": X1, "x2": X2}
    local = dict(_FUNCS)
    local.update({name: table[name] for name in symbols})
    if isinstance(text, (int, float)):
        return sp.Float(text)
    if not isinstance(text, str):
        raise ConfigError(f"expression must be a string or number, got {type(text).__name__}")
    try:
        expr = parse_expr(text, local_dict=local, global_dict={"Integer": sp.Integer,
                                                               "Float": sp.Float,
                                                               "Rational": sp.Rational,
                                                               "Symbol": sp.Symbol})
    except Exception as exc:  # noqa: BLE001 - report any parse failure uniformly
        raise ConfigError(f"cannot parse expression {text!r}: {exc}") from exc
    allowed = {table[name] for name in symbols}
    extra = expr.free_symbols - allowed
    if extra:
        raise ConfigError(f"expression {text!r} uses unknown symbols {sorted(map(str, extra))}")
    return expr


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


@dataclass
class ExperimentConfig:
    """Parsed configuration; ``data`` keeps the full merged dictionary."""

    data: dict
    source: str = "<dict>"

    # accessors ---------------------------------------------------------------
    @property
    def kind(self) -> str:
        return self.data["experiment"]["kind"]

    @property
    def name(self) -> str:
        return self.data["experiment"].get("name") or self.kind

    @property
    def t_end(self) -> float:
        return float(self.data["experiment"]["t_end"])

    @property
    def seed(self) -> int:
        return int(self.data["experiment"]["seed"])

    @property
    def k(self) -> float:
        return float(self.data["physics"]["k_d"])

    @property
    def epsilons(self) -> list[float]:
        return [float(e) for e in self.data["sweep"]["epsilons"]]

    @property
    def grid(self) -> dict:
        return self.data["grid"]

    def acceptance(self) -> dict:
        return _merge(ACCEPTANCE_DEFAULTS.get(self.kind, {}), self.data.get("acceptance", {}))

    def digest(self) -> str:
        blob = json.dumps(self.data, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    # builders ----------------------------------------------------------------
    def family(self):
        from .surface_geometry import CurveFamily, circle, ellipse, perturbed_circle, star_curve

        c = self.data["curve"]
        kind = c.get("family")
        if kind == "circle":
            r = parse_expression(c.get("radius", "1"), ("t",))
            cx = parse_expression(c.get("center_x", "0"), ("t",))
            cy = parse_expression(c.get("center_y", "0"), ("t",))
            return circle(r, (cx, cy))
        if kind == "ellipse":
            return ellipse(parse_expression(c["a"], ("t",)), parse_expression(c["b"], ("t",)))
        if kind == "star":
            return star_curve(parse_expression(c["radius"]))
        if kind == "perturbed_circle":
            return perturbed_circle(float(c.get("r0", 1.0)), float(c.get("amplitude", 0.1)),
                                    int(c.get("mode", 3)), float(c.get("omega", 1.0)))
        if kind == "parametric":
            return CurveFamily(parse_expression(c["x"]), parse_expression(c["y"]), name="parametric")
        raise ConfigError(f"curve.family: unknown family {kind!r} (expected one of {FAMILIES})")

    def profiles(self):
        from .thin_domain import ProfilePair

        p = self.data["profiles"]
        return ProfilePair(SymbolicSurfaceFunction(parse_expression(p["g0"])),
                           SymbolicSurfaceFunction(parse_expression(p["g1"])))

    def surface_fn(self, section: str, key: str):
        val = self.data.get(section, {}).get(key)
        if val is None:
            return None
        return SymbolicSurfaceFunction(parse_expression(val))

    def bulk_exact(self):
        """Manufactured bulk solution in ``x1, x2, t``."""
        val = self.data.get("mms", {}).get("exact")
        if val is None:
            return None
        return parse_expression(val, ("x1", "x2", "t"))


REQUIRED = {
    "experiment": ("kind",),
    "curve": ("family",),
    "profiles": ("g0", "g1"),
}


def from_dict(raw: dict, source: str = "<dict>") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    for section, keys in REQUIRED.items():
        if section not in raw or not isinstance(raw[section], dict):
            raise ConfigError(f"missing section [{section}]")
        for key in keys:
            if key not in raw[section]:
                raise ConfigError(f"missing key {section}.{key}")
    data = _merge(DEFAULTS, raw)
    cfg = ExperimentConfig(data, source)
    if cfg.kind not in KINDS:
        raise ConfigError(f"experiment.kind: unknown kind {cfg.kind!r} (expected one of {KINDS})")
    return cfg


def load(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} does not exist")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    return from_dict(raw, str(path))


def validate(cfg: ExperimentConfig) -> list[str]:
    """Diagnostics for a configuration (empty when valid); never solves anything."""
    diags: list[str] = []
    d = cfg.data

    def bad(key, msg):
        diags.append(f"{key}: {msg}")

    try:
        t_end = cfg.t_end
        if not t_end > 0:
            bad("experiment.t_end", "must be positive")
    except (TypeError, ValueError):
        bad("experiment.t_end", "must be a number")
        t_end = 1.0
    try:
        if not cfg.k > 0:
            bad("physics.k_d", "diffusivity must be positive")
    except (TypeError, ValueError):
        bad("physics.k_d", "must be a number")
    g = d["grid"]
    for key in ("n_theta", "n_s", "n_steps"):
        if not isinstance(g.get(key), int) or g[key] < 1:
            bad(f"grid.{key}", "must be a positive integer")
    if not diags:
        if g["n_theta"] < 32 or g["n_theta"] % 4:
            bad("grid.n_theta", "must be a multiple of 4 and at least 32 (halved for error estimates)")
        if g["n_s"] < 4 or g["n_s"] % 2:
            bad("grid.n_s", "must be even and at least 4")
        if g["n_steps"] % 2:
            bad("grid.n_steps", "must be even")
    if g.get("scheme") not in ("cn", "bdf2"):
        bad("grid.scheme", "must be 'cn' or 'bdf2'")
    if g.get("linear_solver") not in ("splu", "spsolve"):
        bad("grid.linear_solver", "must be 'splu' or 'spsolve'")

    eps_list: list[float] = []
    if cfg.kind in ("convergence", "residual_orders", "uniform_ratio", "sharpness"):
        try:
            eps_list = cfg.epsilons
        except (TypeError, ValueError):
            bad("sweep.epsilons", "must be a list of numbers")
        if eps_list:
            if len(eps_list) < 3:
                bad("sweep.epsilons", "at least three values are needed for slope fits")
            if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
                bad("sweep.epsilons", "must be strictly decreasing")
            if any(e <= 0 for e in eps_list):
                bad("sweep.epsilons", "must be positive")
    elif cfg.kind == "mms_bulk":
        eps_list = [float(d["mms"]["epsilon"])]
        if d["mms"].get("exact") is None:
            bad("mms.exact", "manufactured solution required")
    elif cfg.kind == "mms_limit":
        if d["mms"].get("exact") is None:
            bad("mms.exact", "manufactured solution required")
    if int(d["mms"].get("refinements", 3)) < 3 and cfg.kind.startswith("mms"):
        bad("mms.refinements", "at least three grids are needed")

    for section, key in (("physics", "eta0"), ("physics", "f"), ("physics", "eta_exact")):
        val = d.get(section, {}).get(key)
        if val is not None:
            try:
                parse_expression(val)
            except ConfigError as exc:
                bad(f"{section}.{key}", str(exc))
    if cfg.kind in ("convergence", "uniform_ratio") and d["physics"].get("eta0") is None:
        bad("physics.eta0", "initial surface datum required")
    if cfg.kind == "residual_orders" and d["physics"].get("eta_exact") is None \
            and d["physics"].get("eta0") is None:
        bad("physics.eta_exact", "a limit solution (eta_exact or eta0) is required")

    try:
        fam = cfg.family()
    except (ConfigError, KeyError) as exc:
        bad("curve", str(exc))
        return diags
    except (ThinHeatError, TypeError, ValueError) as exc:
        bad("curve", f"invalid curve: {exc}")
        return diags
    try:
        info = fam.tubular((0.0, t_end))
    except ThinHeatError as exc:
        bad("curve", f"geometry check failed: {exc}")
        return diags
    try:
        prof = cfg.profiles()
    except (ConfigError, ValueError) as exc:
        bad("profiles", str(exc))
        return diags
    gap = prof.min_gap((0.0, t_end))
    if gap <= 0:
        bad("profiles", f"profile positivity violated: min(g1 - g0) = {gap:.4g}")
    if eps_list:
        reach = max(eps_list) * prof.max_abs((0.0, t_end))
        if reach >= info.delta:
            bad("sweep.epsilons" if cfg.kind != "mms_bulk" else "mms.epsilon",
                f"epsilon exceeds admissible eps0: eps*max|g_i| = {reach:.4g} "
                f">= tubular radius {info.delta:.4g}")
    return diags
