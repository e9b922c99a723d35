"""End-to-end run: potential, bases, constants, h-sweep, checks and reports.

Artifacts written to the output directory:

* ``predictions.csv``: constants per k;
* ``sweep.csv``: one row per (h, k);
* ``summary.json``: machine-readable pass/fail per check plus stage timings;
* ``run.log``; PNG figures under ``figures/`` when enabled;
* ``FAILED``: present only when a stage raised, naming that stage.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import shutil
import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .. import asymptotics as asy
from ..geometry import GeometryError, build_conformal_map
from ..operators import PolarGrid, SolverError, assemble_pauli_minus, assemble_weighted_dbar, radial_mode_solver, \
    solve_lowest
from ..potential import PotentialError, load_potential, save_potential, solve_flux_potential
from ..spaces import BargmannBasis, HardyModel, SpaceError, bargmann_gram_schmidt, hardy_distance, theta0
from .config import RunConfig

log = logging.getLogger("pauli_lab.pipeline")

CACHE_ENV = "PAULI_LAB_CACHE"
NUMERICAL_ERRORS = (PotentialError, SolverError, SpaceError, GeometryError, asy.AsymptoticsError,
                    np.linalg.LinAlgError, FloatingPointError)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3


def cache_dir(override: Optional[str] = None) -> Path:
    base = override or os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "pauli_lab"
    return Path(base)


def clean_cache(override: Optional[str] = None) -> int:
    d = cache_dir(override)
    n = 0
    if d.exists():
        n = sum(1 for p in d.rglob("*") if p.is_file())
        shutil.rmtree(d)
    return n


def fmt(x) -> str:
    """Shortest round-trip text for floats; plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path: Path, header: List[str], rows: List[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


@dataclass
class Check:
    name: str
    passed: bool
    value: object = None
    detail: str = ""

    def as_dict(self) -> dict:
        v = self.value
        if isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, (np.floating, np.integer)):
            v = v.item()
        return {"name": self.name, "pass": bool(self.passed), "value": v, "detail": self.detail}


@dataclass
class Outcome:
    exit_code: int
    output: Path
    summary: dict = field(default_factory=dict)
    failed_stage: Optional[str] = None


class _Stages:
    def __init__(self):
        self.timings: Dict[str, float] = {}
        self.cache_hits: Dict[str, bool] = {}
        self.current: Optional[str] = None

    @contextmanager
    def stage(self, name: str):
        self.current = name
        t0 = time.perf_counter()
        log.info("stage %s: start", name)
        yield
        self.timings[name] = time.perf_counter() - t0
        log.info("stage %s: done in %.3f s", name, self.timings[name])


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default))


def _hash(*parts) -> str:
    return hashlib.sha256(json.dumps(parts, sort_keys=True, default=str).encode()).hexdigest()[:24]


def _profile(cfg: RunConfig):
    if cfg.field_kind == "constant":
        v = float(cfg.field_expr(x1=0.0))
        return lambda r: np.full(np.shape(r), v)
    if cfg.field_kind == "radial":
        return cfg.field_expr.radial
    return None


def _potential_stage(cfg: RunConfig, stages: _Stages, cdir: Optional[Path]):
    field_ = cfg.magnetic_field()
    key = _hash("potential", cfg.domain.key(), cfg.field_kind, cfg.field_source,
                cfg.potential_N_r, cfg.potential_N_theta)
    path = cdir / f"potential-{key}.npz" if cdir else None
    if path is not None and path.exists():
        pot = load_potential(path, cfg.domain, field_)
        stages.cache_hits["potential"] = True
        return pot, key
    cmap = build_conformal_map(cfg.domain)
    pot = solve_flux_potential(cfg.domain, field_, cfg.potential_N_r, cfg.potential_N_theta, cmap=cmap)
    stages.cache_hits["potential"] = False
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_potential(pot, path)
    return pot, key


def _spaces_stage(cfg: RunConfig, pot, pot_key: str, stages: _Stages, cdir: Optional[Path]):
    key = _hash("spaces", pot_key, cfg.n_max, cfg.hardy_N, cfg.k_max)
    path = cdir / f"spaces-{key}.json" if cdir else None
    if path is not None and path.exists():
        d = json.loads(path.read_text())
        stages.cache_hits["spaces"] = True
        return BargmannBasis.from_dict(d["bargmann"]), HardyModel.from_dict(d["hardy"])
    bb = bargmann_gram_schmidt(pot.hessian, max(cfg.n_max, cfg.k_max - 1))
    hm = HardyModel.build(pot, N=cfg.hardy_N)
    for k in range(1, cfg.k_max + 1):
        hardy_distance(k, hm)
    stages.cache_hits["spaces"] = False
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"bargmann": bb.to_dict(), "hardy": hm.to_dict()}))
    return bb, hm


def _setup_logging(out: Path) -> logging.Handler:
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("pauli_lab")
    root.addHandler(handler)
    root.setLevel(logging.INFO)
    return handler


def run_pipeline(cfg: RunConfig, mode: str = "run", output: Optional[str] = None,
                 cache: Optional[bool] = None, cache_override: Optional[str] = None) -> Outcome:
    """Run the configured study; ``mode`` is ``run``, ``verify`` or ``constants``."""
    if mode not in ("run", "verify", "constants"):
        raise ValueError(f"unknown mode {mode!r}")
    out = Path(output or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    failed = out / "FAILED"
    if failed.exists():
        failed.unlink()
    use_cache = cfg.cache if cache is None else cache
    cdir = cache_dir(cache_override) if use_cache else None
    handler = _setup_logging(out)
    stages = _Stages()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            logging.captureWarnings(True)
            return _run(cfg, mode, out, cdir, stages)
    except NUMERICAL_ERRORS as exc:
        stage = stages.current or "setup"
        log.error("stage %s failed: %s", stage, exc)
        failed.write_text(f"stage: {stage}\nerror: {type(exc).__name__}: {exc}\n")
        return Outcome(EXIT_NUMERICAL, out, {"failed_stage": stage, "error": str(exc)}, stage)
    finally:
        logging.captureWarnings(False)
        logging.getLogger("pauli_lab").removeHandler(handler)
        handler.close()


def _run(cfg: RunConfig, mode: str, out: Path, cdir: Optional[Path], stages: _Stages) -> Outcome:
    log.info("configuration: %s", json.dumps(cfg.describe(), sort_keys=True))
    checks: List[Check] = []

    with stages.stage("potential"):
        pot, pot_key = _potential_stage(cfg, stages, cdir)
    d = pot.diagnostics
    hess_eigs = np.linalg.eigvalsh(pot.hessian)
    checks.append(Check(
        "potential_invariants",
        bool(d["flux_gap"] < cfg.tolerances["flux"] and np.min(pot.dn_phi) > 0 and d["interior_max"] < 0
             and hess_eigs.min() > 0),
        {"flux_gap": d["flux_gap"], "min_dn_phi": float(np.min(pot.dn_phi)), "interior_max": d["interior_max"],
         "hessian_eigs": hess_eigs.tolist()},
        "flux consistency, Hopf positivity, maximum principle, positive-definite Hessian",
    ))

    with stages.stage("spaces"):
        bb, hm = _spaces_stage(cfg, pot, pot_key, stages, cdir)
        th0, E = theta0(hm)
        preds = asy.build_predictions(pot, bb, hm, cfg.k_max)
    checks.append(Check("theta0_range", bool(0 < th0 <= 1), th0, "0 < theta_0 <= 1"))
    if pot.radial:
        gaps = [max(abs(p.C_sup - p.C_rad), abs(p.C_inf - p.C_rad)) / p.C_rad for p in preds]
        checks.append(Check("radial_constants", bool(max(gaps) < 1e-8), max(gaps),
                            "C_sup = C_inf = C_rad within 1e-8 relative"))

    if mode in ("run", "constants"):
        rows = [[p.k, p.C_sup, p.C_inf, p.C_rad, th0, E, hm.distances[p.k] ** 2, bb.norms2[p.k - 1]]
                for p in preds]
        write_csv(out / "predictions.csv",
                  ["k", "C_sup", "C_inf", "C_rad", "theta0", "E", "dist_H2", "N_B2"], rows)
    if mode == "constants":
        summary = _summary(cfg, pot, checks, stages, th0)
        _dump_json(out / "summary.json", summary)
        return Outcome(EXIT_OK, out, summary)

    grid = PolarGrid.graded(cfg.N_r, cfg.N_theta, cfg.grading)
    K = cfg.k_max
    results, pauli, trials, oracle, conc, shifts = [], [], [], [], [], []
    profile = _profile(cfg) if pot.radial else None
    with stages.stage("spectra"):
        for h in cfg.h:
            form = assemble_weighted_dbar(pot, h, grid)
            res = solve_lowest(form, K, cfg.solver, seed=cfg.seed)
            results.append(res)
            pauli.append(solve_lowest(assemble_pauli_minus(pot, h, grid), K, cfg.solver, seed=cfg.seed))
            trials.append([asy.trial_space_upper_bound(k, h, pot, bb, hm, grid, form).value
                           for k in range(1, K + 1)])
            conc.append(asy.concentration_report(res.vectors[:, 0], form, h, cfg.alpha))
            if profile is not None and cfg.oracle:
                oracle.append(radial_mode_solver(profile, cfg.domain.R, h, K, grid=grid, potential=pot))
            if pot.field.kind == "constant":
                shifts.append(asy.laplacian_shift_check(pot, h, K, grid, cfg.solver))

    hs = np.array(cfg.h)
    lam = np.array([r.lambdas for r in results])
    norm = asy.normalized_values(results, pot.phi_min)
    tol = cfg.tolerances
    B0 = cfg.B0 if math.isfinite(cfg.B0) else float(pot.diagnostics.get("B0", np.nan))

    sweep_rows = []
    for i, h in enumerate(cfg.h):
        for k in range(1, K + 1):
            p = preds[k - 1]
            lo, hi = p.C_inf * (1 - tol["bracket"]), p.C_sup * (1 + tol["bracket"])
            r = results[i]
            sweep_rows.append([
                h, k, r.log10_lambda()[k - 1], norm[i, k - 1], r.residuals[k - 1],
                math.log10(p.C_inf) + (1 - k) * math.log10(h) + 2 * pot.phi_min / h / math.log(10),
                math.log10(p.C_sup) + (1 - k) * math.log10(h) + 2 * pot.phi_min / h / math.log(10),
                bool(lo <= norm[i, k - 1] <= hi),
                math.log10(trials[i][k - 1]),
                pauli[i].log10_lambda()[k - 1],
                oracle[i].log10_lambda()[k - 1] if oracle else None,
                bool(lam[i, k - 1] < 2 * B0 * h),
                int(r.modes[k - 1]),
                grid.describe(),
            ])
    header = ["h", "k", "log10_lambda", "lambda_normalized", "residual", "log10_lo", "log10_hi", "in_bracket",
              "log10_trial_bound", "log10_lambda_pauli", "log10_lambda_oracle", "below_2B0h", "mode", "grid"]
    if mode == "run":
        write_csv(out / "sweep.csv", header, sweep_rows)

    with stages.stage("checks"):
        checks += _sweep_checks(cfg, pot, preds, hs, lam, norm, results, trials, oracle, conc, shifts)

    summary = _summary(cfg, pot, checks, stages, th0)
    summary["concentration"] = conc
    _dump_json(out / "summary.json", summary)
    if mode == "run" and cfg.figures:
        with stages.stage("figures"):
            from .plots import render_figures

            render_figures(out / "figures", hs, norm, preds, lam, pot.phi_min, tol["bracket"])
    code = EXIT_OK if all(c.passed for c in checks) else EXIT_ACCEPTANCE
    for c in checks:
        log.info("check %-24s %s", c.name, "PASS" if c.passed else "FAIL")
    return Outcome(code, out, summary)


def _sweep_checks(cfg, pot, preds, hs, lam, norm, results, trials, oracle, conc, shifts) -> List[Check]:
    tol = cfg.tolerances
    K = cfg.k_max
    checks = []
    res = np.array([r.residuals for r in results])
    checks.append(Check("eigen_residuals", bool(res.max() < tol["residual"]), float(res.max()),
                        "generalized residual per pair"))
    checks.append(Check("positivity", bool(lam.min() >= -1e-12), float(lam.min()), "lambda_k >= -1e-12"))
    simple = all(np.all(np.diff(r.lambdas) > 1e-10 * np.abs(r.lambdas[1:])) for r in results)
    checks.append(Check("simplicity", bool(simple), None, "lowest eigenvalues strictly increasing"))
    tr = np.array(trials)
    ordering = bool(np.all(tr >= lam * (1 - 1e-10)))
    checks.append(Check("variational_ordering", ordering, float(np.min(tr / lam)),
                        "trial-space bound >= computed lambda_k for every h and k"))
    if len(hs) >= 2:
        lim = asy.slope_limit(hs, np.log(lam[:, 0]), 1, npts=min(3, len(hs)))
        target = 2 * pot.phi_min
        rel = abs(lim - target) / abs(target)
        checks.append(Check("slope_law", bool(rel <= tol["slope"]), {"limit": lim, "target": target, "rel": rel},
                            "h log lambda_1 extrapolated to h -> 0 against 2 phi_min"))
    if len(hs) >= 3:
        detail = []
        ok = True
        for k in range(1, K + 1):
            p = preds[k - 1]
            lo, hi = p.C_inf * (1 - tol["bracket"]), p.C_sup * (1 + tol["bracket"])
            ext = asy.extrapolate_normalized(hs, norm[:, k - 1])
            mono = asy.moves_toward(norm[:, k - 1], lo, hi)
            inside = lo <= ext <= hi
            ok = ok and inside and mono
            detail.append({"k": k, "extrapolated": ext, "lo": lo, "hi": hi, "inside": inside, "monotone": mono})
        checks.append(Check("bracket", bool(ok), detail, "extrapolated normalized lambda_k within the bracket"))
    if oracle:
        o = np.array([r.lambdas for r in oracle])
        rel = float(np.max(np.abs(lam / o - 1)))
        checks.append(Check("oracle_equivalence", bool(rel < tol["oracle"]), rel,
                            "2D polar solver against the separated radial solver"))
    if shifts:
        err = max(s["shift_error"] for s in shifts)
        checks.append(Check("laplacian_shift", bool(err < tol["shift"]), err, "mu_k - lambda_k - hB"))
    inc = bool(np.all(np.diff(conc) > 0))
    final = conc[-1]
    checks.append(Check("concentration", bool(inc and final > tol["concentration"]),
                        {"fractions": conc, "increasing": inc, "final": final},
                        f"mass fraction in D(x_min, h^{cfg.alpha}) increasing and above {tol['concentration']}"))
    return checks


def _summary(cfg, pot, checks, stages, th0) -> dict:
    return {
        "config": cfg.describe(),
        "phi_min": pot.phi_min,
        "x_min": pot.x_min.tolist(),
        "hessian": pot.hessian.tolist(),
        "flux": pot.flux,
        "theta0": th0,
        "checks": [c.as_dict() for c in checks],
        "all_pass": all(c.passed for c in checks),
        "timings": stages.timings,
        "cache_hits": stages.cache_hits,
    }
