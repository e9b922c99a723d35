"""Run configuration: a YAML mapping validated in full before any solve.

Example::

    domain: {kind: star-like, radius: "1 + 0.1*cos(2*s)", M: 256}
    field: {constant: 1}
    h: [0.3, 0.2, 0.15]
    k_max: 3

All violations are collected and reported together.
"""

from __future__ import annotations

import difflib
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from ..geometry import DomainSpec, GeometryError, build_conformal_map
from ..potential import MagneticField, boundary_normal_derivative
from .expressions import ExpressionError, FieldExpression, parse_field_expression

TOP_KEYS = {
    "domain", "field", "h", "k_max", "N_r", "N_theta", "grading", "potential_N_r", "potential_N_theta",
    "n_max", "hardy_N", "tolerances", "output", "cache", "solver", "seed", "alpha", "oracle", "figures",
}
DOMAIN_KEYS = {"kind", "R", "radius", "M"}
FIELD_KEYS = {"constant", "radial", "expression"}
TOLERANCE_KEYS = {"bracket", "slope", "oracle", "flux", "residual", "shift", "concentration"}
DOMAIN_KINDS = {"unit-disk", "disk", "star-like"}

DEFAULT_TOLERANCES = {
    "bracket": 0.25,
    "slope": 0.05,
    "oracle": 1e-6,
    "flux": 1e-6,
    "residual": 1e-8,
    "shift": 1e-13,
    "concentration": 0.95,
}
LAYER_NODES = 12


class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists every problem found."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.violations))


@dataclass(frozen=True, eq=False)
class RunConfig:
    domain: DomainSpec
    field_kind: str
    field_source: str
    field_expr: FieldExpression
    h: tuple
    k_max: int
    N_r: int = 96
    N_theta: int = 17
    grading: float = 0.5
    potential_N_r: int = 128
    potential_N_theta: int = 64
    n_max: int = 8
    hardy_N: int = 40
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str = "pauli_out"
    cache: bool = True
    solver: str = "dense"
    seed: int = 0
    alpha: float = 0.4
    oracle: bool = True
    figures: bool = True
    B0: float = float("nan")
    min_dn: float = float("nan")

    def magnetic_field(self) -> MagneticField:
        fx = self.field_expr
        if self.field_kind == "constant":
            return MagneticField.constant(float(fx(x1=0.0)))
        if self.field_kind == "radial":
            return MagneticField.radial(fx.radial, self.field_source)
        return MagneticField.planar(fx.planar, self.field_source)

    def describe(self) -> dict:
        return {
            "domain": {"kind": self.domain.kind, "R": self.domain.R, "radius": self.domain.radius_expr,
                       "M": self.domain.M},
            "field": {self.field_kind: self.field_source},
            "h": list(self.h),
            "k_max": self.k_max,
            "N_r": self.N_r,
            "N_theta": self.N_theta,
            "grading": self.grading,
            "potential_N_r": self.potential_N_r,
            "potential_N_theta": self.potential_N_theta,
            "n_max": self.n_max,
            "hardy_N": self.hardy_N,
            "tolerances": dict(self.tolerances),
            "solver": self.solver,
            "seed": self.seed,
            "alpha": self.alpha,
            "oracle": self.oracle,
        }

    def key(self, *parts: str) -> str:
        """Content hash of the selected configuration parts."""
        d = self.describe()
        payload = {p: d[p] for p in parts}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:20]


def _unknown(key: str, allowed, where: str) -> str:
    near = difflib.get_close_matches(key, sorted(allowed), n=1)
    hint = f" (did you mean {near[0]!r}?)" if near else ""
    return f"unknown key {key!r} in {where}{hint}"


def _pos_int(raw, name, errs, odd=False, even=False):
    v = raw.get(name)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
        errs.append(f"{name} must be a positive integer, got {v!r}")
        return None
    if odd and v % 2 == 0:
        errs.append(f"{name} must be odd, got {v}")
    if even and v % 2:
        errs.append(f"{name} must be even, got {v}")
    return v


def _number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def load_config_file(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError([f"configuration file {str(p)!r} does not exist"])
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"malformed configuration: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["configuration must be a mapping of keys to values"])
    return raw


def parse_config(source, certify: bool = True) -> RunConfig:
    """Validate a config (path or mapping) and return it with defaults filled."""
    raw = load_config_file(source) if not isinstance(source, dict) else dict(source)
    errs: List[str] = []

    for k in raw:
        if k not in TOP_KEYS:
            errs.append(_unknown(k, TOP_KEYS, "configuration"))

    # domain
    dom = raw.get("domain")
    spec = None
    if not isinstance(dom, dict):
        errs.append("domain must be a mapping with at least 'kind'")
    else:
        for k in dom:
            if k not in DOMAIN_KEYS:
                errs.append(_unknown(k, DOMAIN_KEYS, "domain"))
        kind = dom.get("kind")
        M = dom.get("M", 256)
        if isinstance(M, bool) or not isinstance(M, int) or M <= 0 or M % 2:
            errs.append(f"domain.M must be a positive even integer, got {M!r}")
            M = None
        if kind not in DOMAIN_KINDS:
            errs.append(f"domain.kind must be one of {sorted(DOMAIN_KINDS)}, got {kind!r}")
        elif M is not None:
            try:
                if kind == "unit-disk":
                    spec = DomainSpec(kind="unit-disk", M=M)
                elif kind == "disk":
                    R = dom.get("R")
                    if not _number(R) or R <= 0:
                        errs.append(f"domain.R must be a positive number, got {R!r}")
                    else:
                        spec = DomainSpec(kind="disk", R=float(R), M=M)
                else:
                    src = dom.get("radius")
                    fx = parse_field_expression(src if src is not None else "", "radius")
                    spec = DomainSpec(kind="star-like", radius=lambda s, fx=fx: fx(s=s), radius_expr=fx.source, M=M)
            except ExpressionError as exc:
                errs.append(f"domain.radius: {exc}")
            except (GeometryError, ValueError) as exc:
                errs.append(f"domain: {exc}")

    # field
    fld = raw.get("field")
    fkind = fsrc = fexpr = None
    if not isinstance(fld, dict) or len(fld) != 1:
        errs.append("field must be a mapping with exactly one of 'constant', 'radial', 'expression'")
    else:
        ((fkind, fval),) = fld.items()
        if fkind not in FIELD_KEYS:
            errs.append(_unknown(fkind, FIELD_KEYS, "field"))
        else:
            try:
                if fkind == "constant":
                    if not _number(fval):
                        raise ExpressionError(f"constant field must be a number, got {fval!r}")
                    fexpr = parse_field_expression(repr(float(fval)), "constant")
                    fsrc = repr(float(fval))
                else:
                    fsrc = str(fval) if fval is not None else ""
                    fexpr = parse_field_expression(fsrc, fkind)
                if spec is not None and fkind == "radial" and not spec.is_disk:
                    errs.append("a radial field needs a disk domain")
            except ExpressionError as exc:
                errs.append(f"field.{fkind}: {exc}")

    # h schedule
    hs = raw.get("h")
    h = None
    if not isinstance(hs, list) or not hs:
        errs.append("h must be a nonempty list of positive numbers")
    elif not all(_number(x) and x > 0 for x in hs):
        errs.append("h values must be positive numbers")
    elif any(b >= a for a, b in zip(hs, hs[1:])):
        errs.append("h must be strictly decreasing")
    else:
        h = tuple(float(x) for x in hs)

    k_max = raw.get("k_max")
    if isinstance(k_max, bool) or not isinstance(k_max, int) or k_max < 1:
        errs.append(f"k_max must be an integer >= 1, got {k_max!r}")
        k_max = None

    opts: Dict[str, Any] = {}
    for name, kw in (("N_r", {}), ("N_theta", {"odd": True}), ("potential_N_r", {}),
                     ("potential_N_theta", {}), ("n_max", {}), ("hardy_N", {})):
        v = _pos_int(raw, name, errs, **kw)
        if v is not None:
            opts[name] = v
    if "N_theta" in raw and isinstance(raw["N_theta"], int) and raw["N_theta"] < 3:
        errs.append("N_theta must be at least 3")
    if "grading" in raw:
        g = raw["grading"]
        if not _number(g) or not 0 <= g < 1:
            errs.append(f"grading must lie in [0, 1), got {g!r}")
        else:
            opts["grading"] = float(g)
    if "alpha" in raw:
        a = raw["alpha"]
        if not _number(a) or not 0 < a < 1:
            errs.append(f"alpha must lie in (0, 1), got {a!r}")
        else:
            opts["alpha"] = float(a)
    if "solver" in raw:
        if raw["solver"] not in ("dense", "iterative"):
            errs.append(f"solver must be 'dense' or 'iterative', got {raw['solver']!r}")
        else:
            opts["solver"] = raw["solver"]
    for flag in ("cache", "oracle", "figures"):
        if flag in raw:
            if not isinstance(raw[flag], bool):
                errs.append(f"{flag} must be true or false")
            else:
                opts[flag] = raw[flag]
    if "seed" in raw:
        if isinstance(raw["seed"], bool) or not isinstance(raw["seed"], int):
            errs.append("seed must be an integer")
        else:
            opts["seed"] = raw["seed"]
    if "output" in raw:
        if not isinstance(raw["output"], str) or not raw["output"]:
            errs.append("output must be a nonempty path")
        else:
            opts["output"] = raw["output"]
    tol = dict(DEFAULT_TOLERANCES)
    if "tolerances" in raw:
        t = raw["tolerances"]
        if not isinstance(t, dict):
            errs.append("tolerances must be a mapping")
        else:
            for k, v in t.items():
                if k not in TOLERANCE_KEYS:
                    errs.append(_unknown(k, TOLERANCE_KEYS, "tolerances"))
                elif not _number(v) or v <= 0:
                    errs.append(f"tolerances.{k} must be a positive number")
                else:
                    tol[k] = float(v)
    if k_max is not None and "n_max" in opts and opts["n_max"] < k_max - 1:
        errs.append(f"n_max={opts['n_max']} is below k_max-1={k_max - 1}")
    if k_max is not None and "hardy_N" in opts and opts["hardy_N"] < k_max + 10:
        errs.append(f"hardy_N={opts['hardy_N']} is below k_max+10={k_max + 10}")

    if errs:
        raise ConfigError(errs)

    cfg = RunConfig(spec, fkind, fsrc, fexpr, h, k_max, tolerances=tol, **opts)
    if certify:
        cfg = certify_config(cfg)
    return cfg


def certify_config(cfg: RunConfig) -> RunConfig:
    """Positivity certificate of the field and the boundary-layer resolution check."""
    errs = []
    try:
        cmap = build_conformal_map(cfg.domain)
    except GeometryError as exc:
        raise ConfigError([f"domain: {exc}"]) from None
    B = cfg.magnetic_field()
    rho = np.linspace(0.0, 1.0, 129)
    ang = 2 * np.pi * np.arange(256) / 256
    x = cmap(np.multiply.outer(rho, np.exp(1j * ang)))
    with np.errstate(all="ignore"):
        vals = B(x.real, x.imag)
    if not np.all(np.isfinite(vals)):
        raise ConfigError(["field is not finite on the closed domain"])
    B0 = float(vals.min())
    if not B0 > 0:
        raise ConfigError([f"field must be positive on the closed domain (grid minimum {B0:.4g})"])
    dn = boundary_normal_derivative(cfg.domain, B, cmap)
    min_dn = float(dn.min())
    from ..operators import PolarGrid  # local import keeps config importable without assembling operators

    grid = PolarGrid.graded(cfg.N_r, cfg.N_theta, cfg.grading)
    width = min(cfg.h) / min_dn
    count = grid.layer_nodes(width)
    if count < LAYER_NODES:
        need = int(np.ceil(cfg.N_r * LAYER_NODES / max(count, 1)))
        errs.append(
            f"boundary layer of width {width:.3g} at h={min(cfg.h)} holds {count} radial nodes "
            f"(need {LAYER_NODES}); raise N_r to about {need}"
        )
    if errs:
        raise ConfigError(errs)
    object.__setattr__(cfg, "B0", B0)
    object.__setattr__(cfg, "min_dn", min_dn)
    object.__setattr__(cfg, "field_expr", cfg.field_expr.with_certificate(B0))
    return cfg


def dump_config(cfg: RunConfig) -> str:
    d = cfg.describe()
    dom = {k: v for k, v in d["domain"].items() if v is not None}
    if dom["kind"] == "unit-disk":
        dom.pop("R", None)
    d["domain"] = dom
    kind, val = next(iter(d["field"].items()))
    d["field"] = {kind: float(val) if kind == "constant" else val}
    d["h"] = list(d["h"])
    d["output"] = cfg.output
    d["cache"] = cfg.cache
    d["figures"] = cfg.figures
    return yaml.safe_dump(d, sort_keys=False)
