"""Scenario-driven command line front end.

Three subcommands, one scenario file per invocation:

    delayline solve  scenario.json   run the recursion, write trajectory + reports
    delayline verify scenario.json   run the statistical assumption checkers
    delayline oracle scenario.json   run the integral-equation oracle regression

Exit codes: 0 success, 1 check violations, 2 config parse error,
3 hypothesis-gate refusal, 4 non-convergence.

The scenario file is JSON (the exact schema is in the README).  Unknown
keys anywhere in the file are errors, so typos fail closed instead of
silently using defaults.  Every run writes a manifest.json with the
config hash, library versions and seeds next to the outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys

import numpy as np
import scipy

from . import __version__
from . import qualitative
from .grids import GridFunction, GridSpec, write_csv
from .operators import (HypothesisError, check_control_inequality,
                        check_dissipativity, history_lipschitz_check,
                        is_admitted, make_operator, require_admitted)
from .recursion import (SolverConfig, check_start_independence, run_recursion)
from .shapes import FORCINGS, make_start
from .volterra import VolterraProblem, picard_solve, resolvent_solve

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_PARSE = 2
EXIT_GATE = 3
EXIT_NO_CONVERGENCE = 4

OUT_ENV = "DELAYLINE_OUT"


class ScenarioError(ValueError):
    """Malformed scenario config."""


# Allowed keys per config section.  None means free-form (parameter maps
# whose keys the catalog constructors validate themselves).
_SCHEMA = {
    "name": str,
    "operator": {"id": str, "params": None},
    "start": {"kind": str, "value": None, "name": str, "t": None, "x": None},
    "left_extension": {"kind": str, "period": None},
    "grid": {"t_min": None, "t_max": None, "dt": None, "dim": None},
    "solver": {"lambda_schedule": None, "n_max": None, "tol_outer": None,
               "tol_picard": None, "burn_in": None, "seed": None,
               "warm_start": None},
    "checks": None,
    "verify": {"n_samples": None, "seed": None},
    "oracle": {"alpha": None, "beta": None, "forcing": str, "n_random": None,
               "tol": None, "seed": None},
    "start_independence": {"value": None},
    "output_dir": str,
}

_CHECK_KEYS = {
    "periodicity": {"T"},
    "antiperiodicity": {"T"},
    "almost_periods": {"epsilon", "s_max", "ds"},
    "lipschitz": {"horizon"},
    "continuity": set(),
    "integral_solution": {"n_samples", "seed", "horizon"},
}


def _check_keys(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ScenarioError(f"{where}: expected a mapping")
    for k, v in mapping.items():
        if k not in allowed:
            raise ScenarioError(f"{where}: unknown key {k!r}")
        sub = allowed[k]
        if isinstance(sub, dict):
            _check_keys(v, sub, f"{where}.{k}")
        elif sub is str and not isinstance(v, str):
            raise ScenarioError(f"{where}.{k}: expected a string")


def load_scenario(path):
    """Parse and validate a scenario file; raises ScenarioError on any
    unknown key or structural problem."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: invalid JSON: {e}") from e
    _check_keys(raw, _SCHEMA, "scenario")
    for i, chk in enumerate(raw.get("checks", [])):
        if not isinstance(chk, dict) or "kind" not in chk:
            raise ScenarioError(f"checks[{i}]: need a mapping with 'kind'")
        kind = chk["kind"]
        if kind not in _CHECK_KEYS:
            raise ScenarioError(f"checks[{i}]: unknown check kind {kind!r}")
        extra = set(chk) - _CHECK_KEYS[kind] - {"kind"}
        if extra:
            raise ScenarioError(f"checks[{i}]: unknown keys {sorted(extra)}")
    # round-trip stability: the config must serialize back to itself
    if json.loads(json.dumps(raw)) != raw:
        raise ScenarioError("config does not round-trip")
    return raw


def _config_hash(scn):
    blob = json.dumps(scn, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_manifest(outdir, scn, seed, threads):
    man = {
        "scenario_name": scn.get("name", "unnamed"),
        "config_sha256": _config_hash(scn),
        "seed": seed,
        "threads": threads,
        "versions": {
            "delayline": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_json(outdir, name, payload):
    with open(os.path.join(outdir, name), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    if hasattr(x, "as_dict"):
        return x.as_dict()
    if hasattr(x, "__dict__"):
        return {k: v for k, v in x.__dict__.items()}
    raise TypeError(f"not serializable: {type(x)}")


def _resolve_outdir(scn, args):
    out = scn.get("output_dir", "out")
    if args.out:
        out = args.out
    if os.environ.get(OUT_ENV):
        out = os.environ[OUT_ENV]
    os.makedirs(out, exist_ok=True)
    return out


def _build_grid(scn):
    g = scn.get("grid")
    if g is None:
        raise ScenarioError("scenario: missing 'grid'")
    try:
        return GridSpec(float(g["t_min"]), float(g["t_max"]), float(g["dt"]),
                        int(g.get("dim", 1)))
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioError(f"grid: {e}") from e


def _build_operator(scn):
    spec = scn.get("operator")
    if not spec or "id" not in spec:
        raise ScenarioError("scenario: missing operator.id")
    try:
        return make_operator(spec["id"], spec.get("params", {}))
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioError(f"operator: {e}") from e


def _build_start(scn, grid):
    spec = scn.get("start", {"kind": "zero"})
    try:
        vals = make_start(spec, grid.times)
    except (KeyError, ValueError) as e:
        raise ScenarioError(f"start: {e}") from e
    ext_spec = scn.get("left_extension", {"kind": "constant"})
    kind = ext_spec.get("kind", "constant")
    if kind == "constant":
        ext = ("constant", None)
    elif kind == "periodic":
        if "period" not in ext_spec:
            raise ScenarioError("left_extension: periodic needs 'period'")
        ext = ("periodic", float(ext_spec["period"]))
    else:
        raise ScenarioError(f"left_extension: unknown kind {kind!r}")
    return GridFunction(grid, vals, ext)


def _build_solver_config(scn, grid, seed_override):
    s = dict(scn.get("solver", {}))
    if seed_override is not None:
        s["seed"] = seed_override
    try:
        return SolverConfig(grid,
                            lambda_schedule=tuple(s.get("lambda_schedule",
                                                        SolverConfig.lambda_schedule)),
                            n_max=int(s.get("n_max", 25)),
                            tol_outer=float(s.get("tol_outer", 1e-6)),
                            tol_picard=float(s.get("tol_picard", 1e-10)),
                            burn_in=float(s.get("burn_in", 10.0)),
                            seed=int(s.get("seed", 0)),
                            warm_start=bool(s.get("warm_start", True)))
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"solver: {e}") from e


def _run_checks(scn, u, op, cfg):
    rep = qualitative.QualitativeReport()
    mask = u.grid.times >= u.grid.t_min + cfg.burn_in
    rep.bound = float(np.max(np.linalg.norm(u.values[mask], axis=1)))
    rep.continuity_modulus = qualitative.continuity_modulus(u, cfg.burn_in)
    for chk in scn.get("checks", []):
        kind = chk["kind"]
        if kind == "periodicity":
            rep.periodic_residuals[str(chk["T"])] = \
                qualitative.periodicity_residual(u, float(chk["T"]), cfg.burn_in)
        elif kind == "antiperiodicity":
            rep.antiperiodic_residuals[str(chk["T"])] = \
                qualitative.antiperiodicity_residual(u, float(chk["T"]), cfg.burn_in)
        elif kind == "almost_periods":
            scan = qualitative.almost_period_scan(
                u, float(chk["epsilon"]), float(chk["s_max"]), float(chk["ds"]),
                cfg.burn_in)
            rep.almost_periods = scan["hits"]
            rep.almost_period_largest_gap = scan["largest_gap"]
        elif kind == "lipschitz":
            rep.lipschitz = qualitative.lipschitz_estimate(
                u, cfg.burn_in, float(chk.get("horizon", 1.0)))["estimate"]
        elif kind == "integral_solution":
            res = qualitative.integral_solution_residual(
                u, op, n_samples=int(chk.get("n_samples", 200)),
                seed=int(chk.get("seed", cfg.seed)), burn_in=cfg.burn_in,
                horizon=float(chk.get("horizon", 5.0)))
            rep.integral_solution_max_violation = res["max_violation"]
        # "continuity" is always computed above
    return rep


def cmd_solve(path, args):
    try:
        scn = load_scenario(path)
        grid = _build_grid(scn)
        op = _build_operator(scn)
        psi = _build_start(scn, grid)
        cfg = _build_solver_config(scn, grid, args.seed)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    try:
        require_admitted(op)
    except HypothesisError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_GATE
    outdir = _resolve_outdir(scn, args)
    try:
        u, report = run_recursion(op, psi, cfg)
    except RuntimeError as e:
        print(f"no convergence: {e}", file=sys.stderr)
        _write_json(outdir, "failure.json",
                    {"reason": "non-convergence", "detail": str(e)})
        return EXIT_NO_CONVERGENCE
    write_csv(os.path.join(outdir, "trajectory.csv"), u)
    _write_json(outdir, "convergence.json", report.as_dict())
    qrep = _run_checks(scn, u, op, cfg)
    _write_json(outdir, "qualitative.json", qrep.as_dict())
    if "start_independence" in scn:
        val = float(scn["start_independence"].get("value", 10.0))
        phi = GridFunction(grid, np.full_like(grid.times, val), psi.left_extension)
        gap, gaps, chk = check_start_independence(op, psi, phi, cfg)
        _write_json(outdir, "start_independence.json",
                    {"final_gap": gap, "gaps": gaps, **chk})
    _write_manifest(outdir, scn, cfg.seed, args.threads)
    print(f"converged in {len(report.outer_diffs)} outer stages; "
          f"outputs in {outdir}")
    return EXIT_OK


def cmd_verify(path, args):
    try:
        scn = load_scenario(path)
        op = _build_operator(scn)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    v = scn.get("verify", {})
    n = int(v.get("n_samples", 10000))
    seed = args.seed if args.seed is not None else int(v.get("seed", 0))
    outdir = _resolve_outdir(scn, args)
    results = {
        "admitted": is_admitted(op),
        "vacuous": n == 0,
        "dissipativity": check_dissipativity(op, n_samples=n, seed=seed),
        "control_inequality": check_control_inequality(op, n_samples=n, seed=seed),
        "history_bound": history_lipschitz_check(op, n_samples=n, seed=seed),
    }
    ok = all(results[k]["passed"] for k in
             ("dissipativity", "control_inequality", "history_bound"))
    results["passed"] = ok
    _write_json(outdir, "assumptions.json", results)
    _write_manifest(outdir, scn, seed, args.threads)
    if n == 0:
        print("vacuous pass: zero samples requested")
        return EXIT_OK
    for key in ("dissipativity", "control_inequality", "history_bound"):
        r = results[key]
        status = "pass" if r["passed"] else f"FAIL ({r['n_violations']} violations)"
        print(f"{key}: {status}")
    return EXIT_OK if ok else EXIT_VIOLATIONS


def _piecewise_linear(rng, grid, spacing=10.0, amp=0.5):
    knots_t = np.arange(grid.t_min - spacing, grid.t_max + 2 * spacing, spacing)
    knots_x = rng.uniform(-amp, amp, size=len(knots_t))
    return np.interp(grid.times, knots_t, knots_x)


def cmd_oracle(path, args):
    try:
        scn = load_scenario(path)
        grid = _build_grid(scn)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    o = scn.get("oracle", {})
    alpha, beta = float(o.get("alpha", 1.0)), float(o.get("beta", 2.0))
    if not 0.0 < alpha < beta:
        print(f"error: need 0 < alpha < beta, got {alpha}, {beta}",
              file=sys.stderr)
        return EXIT_PARSE
    tol = float(o.get("tol", 1e-8))
    seed = args.seed if args.seed is not None else int(o.get("seed", 0))
    n_random = int(o.get("n_random", 0))
    outdir = _resolve_outdir(scn, args)
    rows = []
    worst = 0.0

    def compare(f_vals, label):
        nonlocal worst
        f = GridFunction(grid, f_vals, ("constant", None))
        p = VolterraProblem(f, alpha, beta)
        ur = resolvent_solve(p)
        up = picard_solve(p)
        diff = float(np.max(np.abs(ur.values - up.values)))
        pos_viol = int(np.sum(ur.values < 0)) if np.all(f_vals >= 0) else None
        worst = max(worst, diff)
        rows.append({"case": label, "sup_diff": diff,
                     "positivity_violations": pos_viol})
        return ur

    forcing = o.get("forcing")
    if forcing is not None:
        if forcing == "one":
            f_vals = np.ones_like(grid.times)
        else:
            f_vals = np.asarray(FORCINGS[forcing](grid.times), dtype=float)
        ur = compare(f_vals, forcing)
        mid = ur.values[len(ur.values) // 2, 0]
        print(f"forcing {forcing!r}: sup |resolvent - picard| = "
              f"{rows[-1]['sup_diff']:.3e}; u(mid) = {mid:.12g}")
    rng = np.random.default_rng(seed)
    for i in range(n_random):
        compare(_piecewise_linear(rng, grid), f"random[{i}]")
    _write_json(outdir, "oracle.json",
                {"alpha": alpha, "beta": beta, "tol": tol, "cases": rows,
                 "worst_sup_diff": worst, "passed": worst <= tol})
    _write_manifest(outdir, scn, seed, args.threads)
    print(f"{len(rows)} case(s), worst sup diff {worst:.3e} "
          f"({'pass' if worst <= tol else 'FAIL'} at tol {tol:g})")
    return EXIT_OK if worst <= tol else EXIT_VIOLATIONS


def build_parser():
    p = argparse.ArgumentParser(
        prog="delayline",
        description="whole-line delay inclusion solver and verifiers")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("solve", cmd_solve), ("verify", cmd_verify),
                     ("oracle", cmd_oracle)):
        sp = sub.add_parser(name)
        sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--out", help="output directory override")
        sp.add_argument("--seed", type=int, help="seed override")
        sp.add_argument("--threads", type=int, default=1)
        sp.set_defaults(fn=fn)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.fn(args.scenario, args)


if __name__ == "__main__":
    sys.exit(main())
