"""Scenario runner: batch entry point tying the toolkit together.

Usage:
    conemin run <config.json> [--out DIR]
    conemin validate <config.json>

A config is a JSON object with a "kind" (competitor, minimize,
audit-geodesics, monotonicity), a cone given as exactly one of
{"pyramid": {"a", "b"}} or {"halfspaces": [[nx, ny, nz], ...]}, a seed
(default 0), verdict tolerances, and kind-specific parameters.  `run`
writes report.json, CSV tables, and any meshes to the output directory and
exits 0 when every verdict passes, 2 on a verdict failure, 1 on execution
or config errors.  `validate` only prints the normalized config.

CSV floats are printed with %.17g and "\n" endings, and the minimizer
reduces in a fixed order, so repeated runs produce byte-identical tables
regardless of CONEMIN_THREADS.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .competitor import (
    CompetitorSpec,
    ConnectionProfile,
    area_deficit,
    export_competitor_mesh,
    feasible_params,
    find_epsilon_star,
    weighted_energy,
)
from .descent import MinimizeConfig, make_initial_plane, minimize
from .diagnostics import monotonicity_ratio
from .geometry import PolyhedralCone, pyramid_to_cone, unit
from .mesh import save_obj
from .spherical import two_arc_audit

KINDS = ("competitor", "minimize", "audit-geodesics", "monotonicity")

COMMON_KEYS = {"kind", "cone", "seed", "out", "tolerances"}
KIND_KEYS = {
    "competitor": {"profile", "sweep_grid", "mesh_resolution"},
    "minimize": {"R", "resolution", "max_iters", "grad_tol", "initial_step",
                 "armijo_c", "jitter"},
    "audit-geodesics": {"count"},
    "monotonicity": {"R", "resolution", "radii"},
}
DEFAULT_TOLERANCES = {
    "competitor": {"deficit_witness": 1e-9},
    "minimize": {"area_decrease": 0.0, "vertex_monotone": 1e-6,
                 "p_monotone": 1e-3},
    "audit-geodesics": {"excess_witness": 1e-9},
    "monotonicity": {"p_monotone": 1e-3},
}


class ConfigError(ValueError):
    pass


def _require_number(cfg, key, default=None, positive=False, integer=False,
                    nonnegative=False):
    val = cfg.get(key, default)
    if val is None:
        raise ConfigError(f"missing required field '{key}'")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"field '{key}' must be a number")
    if integer and int(val) != val:
        raise ConfigError(f"field '{key}' must be an integer")
    if positive and not val > 0:
        raise ConfigError(f"field '{key}' must be > 0")
    if nonnegative and val < 0:
        raise ConfigError(f"field '{key}' must be >= 0")
    return int(val) if integer else float(val)


def _normalize_cone(raw, kind):
    if raw is None:
        if kind == "audit-geodesics":
            return None
        raise ConfigError("exactly one cone spec")
    if not isinstance(raw, dict):
        raise ConfigError("field 'cone' must be an object")
    has_p = "pyramid" in raw
    has_h = "halfspaces" in raw
    if has_p == has_h:
        raise ConfigError("exactly one cone spec")
    extra = set(raw) - {"pyramid", "halfspaces"}
    if extra:
        raise ConfigError(f"unknown field '{sorted(extra)[0]}' in cone spec")
    if has_p:
        pyr = raw["pyramid"]
        if not isinstance(pyr, dict) or set(pyr) - {"a", "b"}:
            raise ConfigError("pyramid spec must be an object with fields a, b")
        a = pyr.get("a")
        b = pyr.get("b")
        if not isinstance(a, (int, float)) or isinstance(a, bool) or not a > 0:
            raise ConfigError("a must be > 0")
        if not isinstance(b, (int, float)) or isinstance(b, bool) or not b > 0:
            raise ConfigError("b must be > 0")
        return {"pyramid": {"a": float(a), "b": float(b)}}
    hs = raw["halfspaces"]
    if (not isinstance(hs, list) or not hs
            or any(not isinstance(v, list) or len(v) != 3
                   or any(isinstance(x, bool) or not isinstance(x, (int, float))
                          for x in v) for v in hs)):
        raise ConfigError("halfspaces must be a nonempty list of 3-vectors")
    return {"halfspaces": [[float(x) for x in v] for v in hs]}


def normalize_config(raw) -> dict:
    """Fill defaults and validate; raises ConfigError naming the bad field."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    kind = raw.get("kind")
    if kind is None:
        raise ConfigError("missing required field 'kind'")
    if kind not in KINDS:
        raise ConfigError(f"unknown kind '{kind}'")
    allowed = COMMON_KEYS | KIND_KEYS[kind]
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown field '{key}' for kind '{kind}'")

    cfg = {"kind": kind}
    cfg["cone"] = _normalize_cone(raw.get("cone"), kind)
    cfg["seed"] = _require_number(raw, "seed", default=0, integer=True,
                                  nonnegative=True)
    out = raw.get("out", f"runs/{kind}")
    if not isinstance(out, str) or not out:
        raise ConfigError("field 'out' must be a nonempty string")
    cfg["out"] = out

    tol = dict(DEFAULT_TOLERANCES[kind])
    raw_tol = raw.get("tolerances", {})
    if not isinstance(raw_tol, dict):
        raise ConfigError("field 'tolerances' must be an object")
    for key, val in raw_tol.items():
        if key not in tol:
            raise ConfigError(f"unknown field '{key}' in tolerances")
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"tolerance '{key}' must be a number")
        tol[key] = float(val)
    cfg["tolerances"] = tol

    if kind == "competitor":
        if "pyramid" not in (cfg["cone"] or {}):
            raise ConfigError("competitor scenario requires a pyramid cone")
        cfg["sweep_grid"] = _require_number(raw, "sweep_grid", default=64,
                                            integer=True, positive=True)
        cfg["mesh_resolution"] = _require_number(raw, "mesh_resolution",
                                                 default=64, integer=True,
                                                 positive=True)
        prof = raw.get("profile")
        if prof is not None:
            if not isinstance(prof, dict) or set(prof) - {"h", "alpha"}:
                raise ConfigError("profile must be an object with fields h, alpha")
            cfg["profile"] = {
                "h": _require_number(prof, "h", positive=True),
                "alpha": _require_number(prof, "alpha", positive=True),
            }
        else:
            cfg["profile"] = None
    elif kind == "minimize":
        cfg["R"] = _require_number(raw, "R", default=1.0, positive=True)
        cfg["resolution"] = _require_number(raw, "resolution", default=64,
                                            integer=True, positive=True)
        cfg["max_iters"] = _require_number(raw, "max_iters", default=2000,
                                           integer=True, nonnegative=True)
        cfg["grad_tol"] = _require_number(raw, "grad_tol", default=1e-6,
                                          positive=True)
        cfg["initial_step"] = _require_number(raw, "initial_step", default=0.25,
                                              positive=True)
        cfg["armijo_c"] = _require_number(raw, "armijo_c", default=0.3,
                                          positive=True)
        if not cfg["armijo_c"] < 1:
            raise ConfigError("field 'armijo_c' must be < 1")
        cfg["jitter"] = _require_number(raw, "jitter", default=0.0,
                                        nonnegative=True)
    elif kind == "audit-geodesics":
        cfg["count"] = _require_number(raw, "count", default=500,
                                       integer=True, positive=True)
    else:
        cfg["R"] = _require_number(raw, "R", default=1.0, positive=True)
        cfg["resolution"] = _require_number(raw, "resolution", default=64,
                                            integer=True, positive=True)
        radii = raw.get("radii")
        if radii is None:
            radii = [float(f) * cfg["R"] for f in np.linspace(0.15, 0.95, 10)]
        if (not isinstance(radii, list) or not radii
                or any(isinstance(r, bool) or not isinstance(r, (int, float))
                       for r in radii)):
            raise ConfigError("field 'radii' must be a nonempty list of numbers")
        cfg["radii"] = [float(r) for r in radii]
    return cfg


def build_cone(cfg) -> PolyhedralCone:
    spec = cfg["cone"]
    if spec is None:
        raise ConfigError("exactly one cone spec")
    if "pyramid" in spec:
        return pyramid_to_cone(spec["pyramid"]["a"], spec["pyramid"]["b"])
    try:
        return PolyhedralCone(spec["halfspaces"])
    except ValueError as exc:
        raise ConfigError(f"bad halfspaces: {exc}") from exc


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(x) for x in row) + "\n")


def _verdict(value, tolerance, passed, detail=""):
    return {"pass": bool(passed), "value": value, "tolerance": tolerance,
            "detail": detail}


def _run_competitor(cfg, outdir: Path):
    a = cfg["cone"]["pyramid"]["a"]
    b = cfg["cone"]["pyramid"]["b"]
    tol = cfg["tolerances"]
    if cfg["profile"] is not None:
        profile = ConnectionProfile(h=cfg["profile"]["h"],
                                    alpha=cfg["profile"]["alpha"])
    else:
        profile = feasible_params(a)
    energy = weighted_energy(profile)

    cap = 0.5 / a
    grid = cfg["sweep_grid"]
    rows = []
    for i in range(1, grid + 1):
        eps = cap * i / grid
        rep = area_deficit(CompetitorSpec(a=a, b=b, profile=profile,
                                          epsilon=eps))
        rows.append((eps, rep.deficit, rep.ruled_area))
    _write_csv(outdir / "sweep.csv", ("epsilon", "deficit", "ruled_area"), rows)

    try:
        eps_star = find_epsilon_star(a, b, profile, grid)
    except ValueError:
        eps_star = None

    results = {
        "profile": {"h": profile.h, "alpha": profile.alpha},
        "weighted_energy": energy,
        "epsilon_star": eps_star,
    }
    if eps_star is not None:
        rep = area_deficit(CompetitorSpec(a=a, b=b, profile=profile,
                                          epsilon=eps_star))
        results["report_at_epsilon_star"] = {
            "A0": rep.A0, "A_eps": rep.A_eps, "T_h_area": rep.T_h_area,
            "ruled_area": rep.ruled_area, "deficit": rep.deficit,
            "second_derivative": rep.second_derivative,
            "support_radius": rep.support_radius,
        }
        mesh = export_competitor_mesh(
            CompetitorSpec(a=a, b=b, profile=profile, epsilon=eps_star),
            cfg["mesh_resolution"])
        save_obj(mesh, outdir / "competitor.obj")
        from .mesh import surface_area
        results["mesh_area"] = surface_area(mesh)
        results["analytic_area"] = rep.A_eps + rep.ruled_area

    min_deficit = min(r[1] for r in rows)
    verdicts = {
        "energy_feasible": _verdict(energy - a * a, 0.0, energy < a * a,
                                    "weighted_energy - a^2 < 0"),
        "deficit_witness": _verdict(
            min_deficit, tol["deficit_witness"],
            min_deficit < -tol["deficit_witness"],
            "some sweep epsilon has deficit < -tolerance"),
    }
    return results, verdicts


def _monotone_floor(values):
    """Smallest forward increment; +inf for sequences of length < 2."""
    if len(values) < 2:
        return math.inf
    return min(b - a for a, b in zip(values, values[1:]))


def _run_minimize(cfg, outdir: Path):
    cone = build_cone(cfg)
    tol = cfg["tolerances"]
    mesh0 = make_initial_plane(cone, cfg["R"], cfg["resolution"])
    mcfg = MinimizeConfig(max_iters=cfg["max_iters"], grad_tol=cfg["grad_tol"],
                          initial_step=cfg["initial_step"],
                          armijo_c=cfg["armijo_c"], clamp_radius=cfg["R"],
                          seed=cfg["seed"])
    from .mesh import surface_area
    initial_area = surface_area(mesh0)
    mesh, diag = minimize(mesh0, cone, mcfg, jitter=cfg["jitter"])

    it_rows = [(i + 1, area, vd) for i, (area, vd) in
               enumerate(zip(diag.area_history, diag.vertex_distance_history))]
    _write_csv(outdir / "iterations.csv",
               ("iteration", "area", "vertex_distance"), it_rows)
    _write_csv(outdir / "ratios.csv", ("r", "p_r"), diag.p_ratios)
    save_obj(mesh, outdir / "final_mesh.obj")

    final_area = diag.area_history[-1] if diag.area_history else initial_area
    results = {
        "initial_area": initial_area,
        "final_area": final_area,
        "iterations": diag.accepted_steps,
        "status": diag.status,
        "final_vertex_distance": (diag.vertex_distance_history[-1]
                                  if diag.vertex_distance_history else None),
        "pinned_vertices": sorted(set(diag.pinned_vertices)),
        "conical_deviation": [list(row) for row in diag.conical_deviation],
        "density_ratio_bounds": (list(diag.density_ratio_bounds)
                                 if diag.density_ratio_bounds else None),
    }
    if diag.boundary_angle_stats is not None:
        s = diag.boundary_angle_stats
        results["boundary_angles_deg"] = {
            "count": s.count, "min": s.min_deg, "mean": s.mean_deg,
            "max": s.max_deg,
        }

    burn = len(diag.vertex_distance_history) // 10
    vfloor = _monotone_floor(diag.vertex_distance_history[burn:])
    pfloor = _monotone_floor([p for _, p in diag.p_ratios])
    verdicts = {
        "area_decreased": _verdict(
            initial_area - final_area, tol["area_decrease"],
            final_area < initial_area - tol["area_decrease"],
            "final area below initial area"),
        "vertex_distance_monotone": _verdict(
            None if vfloor is math.inf else vfloor, tol["vertex_monotone"],
            vfloor >= -tol["vertex_monotone"],
            "vertex distance nondecreasing after 10% burn-in"),
        "p_nondecreasing": _verdict(
            None if pfloor is math.inf else pfloor, tol["p_monotone"],
            pfloor >= -tol["p_monotone"],
            "p(r) nondecreasing across sampled radii"),
    }
    return results, verdicts


def _random_audit_inputs(rng):
    frame = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    if np.linalg.det(frame) < 0:
        frame[:, 2] = -frame[:, 2]
    e1, e2, e3 = frame[:, 0], frame[:, 1], frame[:, 2]
    theta = rng.uniform(0.3, math.pi - 0.3)
    p1 = e1
    q1 = math.cos(theta) * e1 + math.sin(theta) * e2
    pole = e3
    nu_p = e2
    nu_q = unit(np.cross(pole, q1))
    phi_p = rng.uniform(0.15, 1.35)
    phi_q = rng.uniform(0.15, 1.35)
    x_p = math.cos(phi_p) * pole + math.sin(phi_p) * p1
    x_q = math.cos(phi_q) * pole + math.sin(phi_q) * q1
    n2 = unit(np.cross(x_p, x_q))
    return p1, q1, nu_p, nu_q, n2


def _run_audit(cfg, outdir: Path):
    tol = cfg["tolerances"]
    rng = np.random.default_rng(cfg["seed"])
    rows = []
    min_excess = math.inf
    failures = 0
    for _ in range(cfg["count"]):
        rep = two_arc_audit(*_random_audit_inputs(rng))
        rows.append((rep.alpha1, rep.beta1, rep.alpha2t, rep.beta2t,
                     rep.angle_sum, rep.excess, rep.infeasibility_witness))
        min_excess = min(min_excess, rep.excess)
        if not rep.infeasibility_witness:
            failures += 1
    _write_csv(outdir / "audits.csv",
               ("alpha1", "beta1", "alpha2t", "beta2t", "angle_sum",
                "excess", "infeasibility_witness"), rows)
    results = {"count": cfg["count"], "min_excess": min_excess,
               "witness_failures": failures}
    verdicts = {
        "all_witnesses": _verdict(
            min_excess, tol["excess_witness"],
            failures == 0 and min_excess > tol["excess_witness"],
            "every configuration certifies angle sum > 2*pi"),
    }
    return results, verdicts


def _run_monotonicity(cfg, outdir: Path):
    cone = build_cone(cfg)
    tol = cfg["tolerances"]
    mesh = make_initial_plane(cone, cfg["R"], cfg["resolution"])
    table = monotonicity_ratio(mesh, cfg["radii"])
    _write_csv(outdir / "ratios.csv", ("r", "p_r"), table)
    ps = [p for _, p in table]
    pfloor = _monotone_floor(ps)
    results = {"p_table": [list(row) for row in table],
               "p_min": min(ps), "p_max": max(ps)}
    verdicts = {
        "p_nondecreasing": _verdict(
            None if pfloor is math.inf else pfloor, tol["p_monotone"],
            pfloor >= -tol["p_monotone"],
            "p(r) nondecreasing across sampled radii"),
    }
    return results, verdicts


_RUNNERS = {
    "competitor": _run_competitor,
    "minimize": _run_minimize,
    "audit-geodesics": _run_audit,
    "monotonicity": _run_monotonicity,
}


def run(config_path, out_override=None) -> int:
    try:
        raw = json.loads(Path(config_path).read_text())
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = normalize_config(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if out_override:
        cfg["out"] = str(out_override)
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)

    start = time.monotonic()
    try:
        results, verdicts = _RUNNERS[cfg["kind"]](cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"execution error: {exc}", file=sys.stderr)
        return 1
    elapsed = time.monotonic() - start

    from conemin import __version__
    report = {
        "tool": "conemin",
        "version": __version__,
        "config": cfg,
        "wall_clock_seconds": elapsed,
        "results": results,
        "verdicts": verdicts,
        "pass": all(v["pass"] for v in verdicts.values()),
    }
    (outdir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name, v in sorted(verdicts.items()):
        print(f"{'PASS' if v['pass'] else 'FAIL'} {name}: value={v['value']} "
              f"tolerance={v['tolerance']}")
    return 0 if report["pass"] else 2


def validate(config_path) -> int:
    try:
        raw = json.loads(Path(config_path).read_text())
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = normalize_config(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(cfg, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="conemin",
        description="cone-constrained surface toolkit scenario runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None,
                       help="override the output directory")
    p_val = sub.add_parser("validate", help="check a config and echo it")
    p_val.add_argument("config")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, out_override=args.out)
    return validate(args.config)


if __name__ == "__main__":
    raise SystemExit(main())
