"""Command line front end.

    sddpde run CONFIG.ini [--out DIR] [--seed N] [--threads N]
    sddpde preset NAME [--out DIR] [--seed N] [--threads N]
    sddpde list-presets

Exit status: 0 when every check of the run passes, 2 when a check fails or
the model is rejected at run time, 1 for configuration errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError, ExperimentConfig
from .delay import DelayConfigurationError
from .initial import make_initial

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2


def _check(name, module, passed, value=None, tol=None, message=""):
    return {"name": name, "module": module, "passed": bool(passed),
            "value": None if value is None else float(value),
            "tol": None if tol is None else float(tol), "message": message}


def _trajectory_check(tr):
    invariant = {"rejected": "window contraction < 1", "diverged": "Picard convergence",
                 "delay": "threshold reachable within the horizon"}.get(tr.status, "")
    return _check("trajectory " + (invariant or "complete"), "solver", tr.ok, message=tr.message)


def _initial(cfg: ExperimentConfig, model):
    params = dict(cfg.initial_params)
    if cfg.initial_name == "random":
        return make_initial("random", model.n_modes, model.h, rng=cfg.seed, **params)
    return make_initial(cfg.initial_name, model.n_modes, model.h, **params)


def _write_traj(tr, out: Path, stem: str = "trajectory"):
    tr.write_csv(out / f"{stem}.csv")
    tr.write_window_log(out / f"{stem}_windows.jsonl")


def run_solve(cfg, model, phi, out: Path) -> list[dict]:
    from .manifold import project_to_manifold
    from .solver import integral_identity_residual, method_of_steps_oracle, solve, uniqueness_probe
    from .spectral import l2_norm

    checks = []
    if cfg.flag("project"):
        phi, _ = project_to_manifold(phi, model)
    t_final = cfg.get("t_final", float)
    tr = solve(phi, model, t_final, tol=cfg.get("tol", float), m_t=cfg.get("m_t", int))
    _write_traj(tr, out)
    checks.append(_trajectory_check(tr))
    if not tr.ok:
        return checks
    if cfg.flag("oracle"):
        dt = cfg.get("oracle_dt", float)
        orc = method_of_steps_oracle(phi, model, t_final, dt, cfg.run["oracle_scheme"])
        grid = np.linspace(0.0, t_final, 2001)
        gap = float(np.max(l2_norm(tr.curve(grid) - orc.curve(grid))))
        tol = cfg.get("oracle_tol", float)
        checks.append(_check("Picard vs method-of-steps sup gap", "solver", gap <= tol, gap, tol))
    if cfg.flag("probe"):
        rep = uniqueness_probe(phi, model, t_final, tol=cfg.get("probe_tol", float))
        (out / "probe.json").write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
        checks.append(_check("four-way uniqueness divergence", "solver", rep.passed,
                             rep.divergence, rep.tolerance))
    if cfg.flag("identity_check"):
        res = integral_identity_residual(tr, model)
        tol = cfg.get("identity_tol", float)
        checks.append(_check("mild-solution integral identity", "solver", res <= tol, res, tol))
    return checks


def run_manifold(cfg, model, phi, out: Path) -> list[dict]:
    from .manifold import manifold_residual, project_to_manifold
    from .solver import classical_residual, solve

    before = manifold_residual(phi, model)
    proj, after = project_to_manifold(phi, model)
    report = {"before": before.to_dict(), "after": after.to_dict()}
    checks = [_check("projection lands on the manifold", "manifold", after.member,
                     after.residual_norm, 1e-8)]
    tr = solve(proj, model, cfg.get("t_final", float), tol=cfg.get("tol", float))
    _write_traj(tr, out)
    checks.append(_trajectory_check(tr))
    if tr.ok:
        res = classical_residual(tr, model)
        tol = cfg.get("identity_tol", float)
        report["classical_residual"] = res
        checks.append(_check("classical residual along the trajectory", "manifold", res <= tol, res, tol))
    (out / "manifold.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    return checks


def run_variational(cfg, model, phi, out: Path) -> list[dict]:
    from .manifold import estimate_b, project_tangent, project_to_manifold, random_unit_directions
    from .variational import semiflow_derivative_check

    b = estimate_b(phi, model)
    base, _ = project_to_manifold(phi, model, b=b, tol=1e-15, member_tol=1e-15)
    raw = random_unit_directions(base, 2, cfg.seed)[1]
    chi = project_tangent(base, raw, model, b=b)
    t_eval = cfg.get("t_eval", float)
    steps = cfg.floats("h_steps")
    tol = cfg.get("fd_max_error", float)
    rep = semiflow_derivative_check(base, chi, model, t_eval, steps, b=b, max_error=tol)
    report = {"minus_A": rep.to_dict()}
    checks = [_check("finite differences converge to the linearized flow", "variational",
                     rep.passed, rep.errors[-1] if rep.errors else float("inf"), tol, rep.message)]
    if cfg.flag("compare_sign"):
        wrong = semiflow_derivative_check(base, chi, model, t_eval, steps, sign="+A", b=b, max_error=tol)
        report["plus_A"] = wrong.to_dict()
        checks.append(_check("'+A' sign is rejected by the derivative check", "variational",
                             not wrong.passed,
                             wrong.errors[-1] if wrong.errors else float("inf"), tol))
    (out / "variational.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    return checks


def run_certify(cfg, model, phi, out: Path, threads: int = 1) -> list[dict]:
    from .certify import run_all

    numbers = [int(x) for x in str(cfg.run["criteria"]).split(",") if x.strip()]
    results = run_all(cfg.seed, threads, numbers)
    for r in results:
        print(r.line())
    (out / "certify.json").write_text(json.dumps([r.to_dict() for r in results], indent=2,
                                                 sort_keys=True, default=str))
    return [_check(f"criterion {r.number}: {r.name}", "certify", r.passed, message=r.summary)
            for r in results]


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: int = 1, label: str = "") -> int:
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {"label": label, "kind": cfg.kind, "seed": cfg.seed, "checks": [], "failures": []}
    try:
        model = cfg.build_model()
        phi = _initial(cfg, model)
        handler = {"solve": run_solve, "manifold": run_manifold,
                   "variational": run_variational}.get(cfg.kind)
        if cfg.kind == "certify":
            checks = run_certify(cfg, model, phi, out, threads)
        else:
            checks = handler(cfg, model, phi, out)
    except DelayConfigurationError as exc:
        checks = [_check("threshold reachable: r <= 1/C3 <= h", "delay", False, message=str(exc))]
    except ConfigError:
        raise
    except (RuntimeError, ArithmeticError) as exc:
        checks = [_check(type(exc).__name__, exc.__class__.__module__.rsplit(".", 1)[-1], False,
                         message=str(exc))]
    report["checks"] = checks
    report["failures"] = [c for c in checks if not c["passed"]]
    report["status"] = "PASS" if not report["failures"] else "FAIL"
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    for c in checks:
        val = "" if c["value"] is None else f" value={c['value']:.3e}"
        tol = "" if c["tol"] is None else f" tol={c['tol']:.1e}"
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['module']}: {c['name']}{val}{tol}")
        if not c["passed"] and c["message"]:
            print(f"    {c['message']}")
    print(f"{report['status']}: {len(checks) - len(report['failures'])}/{len(checks)} checks; "
          f"artifacts in {out}")
    return EXIT_OK if not report["failures"] else EXIT_CHECK


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 42)")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker processes for suites (default 1)")
    p = argparse.ArgumentParser(prog="sddpde", parents=[common],
                                description="Delay-PDE simulator and verification lab")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run an experiment from an INI config")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (overrides run.out)")
    pr = sub.add_parser("preset", parents=[common], help="run a built-in experiment")
    pr.add_argument("name")
    pr.add_argument("--out", default=None)
    sub.add_parser("list-presets", parents=[common], help="list built-in experiments")
    return p


def list_presets() -> str:
    width = max(len(n) for n in cfgmod.PRESETS)
    return "\n".join(f"{name:<{width}}  {desc}" for name, (desc, _) in cfgmod.PRESETS.items())


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    seed = getattr(args, "seed", None)
    threads = getattr(args, "threads", 1)
    if args.command == "list-presets":
        print(list_presets())
        return EXIT_OK
    try:
        if args.command == "run":
            cfg = cfgmod.load(args.config, seed)
            label = args.config
        else:
            cfg = cfgmod.preset(args.name, seed)
            label = args.name
            if args.out is None:
                args.out = str(Path("out") / args.name)
        return run_experiment(cfg, args.out, threads, label)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
