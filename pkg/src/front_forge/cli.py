"""Command-line entry point.

Every command writes its artifacts plus a resolved config and a manifest of
content hashes; identical configs and seeds give byte-identical reports.
Exit codes: 0 success, 1 failed checks in a verify run, 2 configuration
errors (with the offending key path), 3 numerical failures (with a
diagnostic snapshot where one exists).
"""

from __future__ import annotations

import datetime
import hashlib
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import harness as H
from .bounds import admissible_params
from .config import ConfigError, build_objects, config_hash, load_config
from .geometry import GeometryError
from .gridio import write_field
from .pde import BlowUpError, SolverError
from .probes import probe_many
from .profile import ProfileError, solve_profile
from .reaction import ReactionError, eval_f, make_cubic
from .surface import SurfaceError, evaluate as surf_evaluate, phi_surface, solve_height


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _emit(out_dir: Path, cfg: dict, files: list[Path]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = out_dir / "resolved-config.json"
    resolved.write_text(json.dumps(cfg, sort_keys=True, indent=1) + "\n")
    listing = [{"path": p.name, "sha256": _sha256(p), "bytes": p.stat().st_size}
               for p in sorted(files + [resolved], key=lambda p: p.name)]
    manifest = {
        "files": listing,
        "config_sha256": config_hash(cfg),
        # excluded from all hashing; provenance only
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")


def _fail_config(exc: ConfigError):
    click.echo(f"config error at {exc}", err=True)
    sys.exit(2)


def _fail_numeric(exc: Exception, out_dir: Path | None = None):
    snap_note = ""
    if isinstance(exc, BlowUpError) and exc.field_snapshot is not None and out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        snap = out_dir / "diagnostic-blowup.ffg"
        write_field(snap, exc.field_snapshot)
        snap_note = f" (diagnostic snapshot: {snap})"
    click.echo(f"numerical failure: {exc}{snap_note}", err=True)
    sys.exit(3)


_NUMERIC_ERRORS = (BlowUpError, SolverError, SurfaceError, ProfileError,
                   ReactionError, GeometryError)


@click.group()
def main():
    """Build and verify polytope-shaped bistable reaction-diffusion fronts."""


@main.command("profile")
@click.option("--theta", type=float, default=0.25, show_default=True)
@click.option("--Xi", "xi_half", type=float, default=40.0, show_default=True)
@click.option("--dxi", type=float, default=0.01, show_default=True)
@click.option("--tol-c", type=float, default=1e-10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def cmd_profile(theta, xi_half, dxi, tol_c, out):
    """Solve the 1-d wave profile and write the binary table.

    Format: one JSON header line {c_f, Xi, dxi, lambda_plus, lambda_minus},
    then little-endian float64 triples (g, g', g'') row-major.
    """
    try:
        spec = make_cubic(theta)
        prof = solve_profile(spec, Xi=xi_half, dxi=dxi, tol_c=tol_c)
    except ConfigError as exc:
        _fail_config(exc)
    except _NUMERIC_ERRORS as exc:
        _fail_numeric(exc)
    header = {"c_f": prof.c_f, "Xi": prof.Xi, "dxi": prof.dxi,
              "lambda_plus": prof.lambda_plus, "lambda_minus": prof.lambda_minus}
    payload = np.column_stack([prof.g_vals, prof.gp_vals, prof.gpp_vals]).astype("<f8")
    with open(out, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(payload.tobytes())
    click.echo(f"wrote {out}: c_f = {prof.c_f:.9f}")


def _load(config, seed, threads):
    cfg = load_config(config)
    if seed is not None:
        cfg["seed"] = seed
    if threads is not None:
        cfg["threads"] = threads
    return cfg


@main.command("surface-check")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--report", type=click.Path(dir_okay=False), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=None)
def cmd_surface_check(config, samples, report, seed, threads):
    """Root-residual and derivative checks plus the frozen ratio constant."""
    try:
        cfg = _load(config, seed, threads)
        spec, prof, arr, grid, solver = build_objects(cfg)
        problem = H.Problem(spec, prof, arr)
        rng = np.random.default_rng(cfg["seed"])
        surf = phi_surface(arr, newton_tol=cfg["surface"]["newton_tol"],
                           max_iter=cfg["surface"]["max_iter"])
        t = rng.uniform(-5.0 / arr.c_f, 5.0 / arr.c_f, size=samples)
        x = rng.uniform(-8.0, 8.0, size=(samples, arr.N - 1))
        y, w = solve_height(surf, t, x, return_weights=True)
        resid = float(np.max(np.abs(w.sum(axis=0) - 1.0)))
        ev = surf_evaluate(surf, t, x)
        eigs = np.linalg.eigvalsh(ev.hess)
        h_step = 1e-5
        fd_dt = (solve_height(surf, t + h_step, x) - solve_height(surf, t - h_step, x)) / (2 * h_step)
        dt_err = float(np.max(np.abs(fd_dt - ev.dt)))
        cal = H.calibrate_surface_constants(problem, seed=cfg["seed"], n_samples=samples)
        checks = [
            H.CheckResult("surface-root-residual", resid <= 1e-12, {"max": resid}, 1e-12, samples),
            H.CheckResult("surface-dt-matches-fd", dt_err <= 1e-6, {"max_err": dt_err}, 1e-6, samples),
            H.CheckResult("surface-hessian-psd", bool(eigs.min() >= -1e-10),
                          {"min_eig": float(eigs.min())}, -1e-10, samples),
        ]
        rep = H.VerificationReport(
            instance={"arrangement_n": arr.n, "N": arr.N, "c_f": prof.c_f},
            checks=checks,
            constants=cal,
            provenance={"config_sha256": config_hash(cfg), "seed": cfg["seed"]},
        )
        Path(report).write_text(rep.to_json() + "\n")
    except ConfigError as exc:
        _fail_config(exc)
    except _NUMERIC_ERRORS as exc:
        _fail_numeric(exc)
    click.echo(f"wrote {report}: C_emp = {cal['C_emp']:.6f}")
    if not rep.all_passed():
        sys.exit(1)


@main.command("simulate")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--t0", type=float, required=True)
@click.option("--t1", type=float, required=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=None)
def cmd_simulate(config, t0, t1, out, seed, threads):
    """March from the lower barrier at t0 to t1, writing snapshots."""
    out_dir = Path(out)
    try:
        cfg = _load(config, seed, threads)
        spec, prof, arr, grid, solver = build_objects(cfg)
        problem = H.Problem(spec, prof, arr)
        ev = H._lower_boundary_eval(problem)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []

        def sink(field):
            p = out_dir / f"snap-{field.time:+013.6f}.ffg"
            write_field(p, field)
            written.append(p)

        from .pde import solve_cauchy

        final = solve_cauchy(ev, t0, t1, grid, solver, ev, spec, sink=sink)
        if not written or written[-1].stem != f"snap-{final.time:+013.6f}":
            sink(final)
        _emit(out_dir, cfg, written)
    except ConfigError as exc:
        _fail_config(exc)
    except _NUMERIC_ERRORS as exc:
        _fail_numeric(exc, out_dir)
    click.echo(f"wrote {len(written)} snapshots to {out}")


def run_verify_suites(cfg: dict) -> H.VerificationReport:
    """Assemble and run the configured verification suites."""
    spec, prof, arr, grid, solver = build_objects(cfg)
    problem = H.Problem(spec, prof, arr)
    e = cfg["experiment"]
    seed = cfg["seed"]
    threads = cfg.get("threads", 1)

    c_emp = cfg["bounds"]["c_emp"]
    cal = None
    if c_emp is None:
        cal = H.calibrate_surface_constants(problem, seed=seed, n_samples=e["samples"])
        c_emp = cal["C_emp"]
    params = admissible_params(spec, prof, arr, C_emp=c_emp,
                               eps_fraction=cfg["bounds"]["eps_fraction"],
                               delta=cfg["bounds"]["delta"],
                               alpha_shrink=cfg["bounds"]["alpha_shrink"])
    checks = []
    suites = e["suites"]
    needs_build = {"asym", "mono", "vfront", "pyramid", "construct"} & set(suites)
    result = None
    if needs_build:
        result = H.construct_entire(problem, params, grid, solver, e["start_times"],
                                    snapshot_times=e["snapshot_times"], threads=threads)
        checks += H.construction_checks(result)
    if "super" in suites:
        checks += H.verify_supersolution(problem, params, seed=seed, n_samples=e["samples"],
                                         tol=e["residual_tol"])
    if "asym" in suites:
        checks += H.verify_asymptotics(result, problem, params, bucket_width=e["bucket_width"])
    if "mono" in suites:
        checks += H.verify_monotonicity(result, problem, rho=e["rho_band"])
    if "vfront" in suites:
        checks += H.regression_vfront(result, problem, np.deg2rad(e["vfront_alpha_deg"]))
    if "pyramid" in suites:
        checks += H.regression_pyramid(result, problem)
    if "stability" in suites:
        pert = e["perturbation"]
        stab = H.stability_experiment(problem, params, grid, solver,
                                      build_start=min(e["start_times"]),
                                      T_end=e["stability_T"], bump_amp=pert["amp"],
                                      bump_width=pert["width"], bump_center=pert["center"],
                                      n_checkpoints=e["n_checkpoints"], base=pert["base"])
        checks += H.stability_checks(stab)
    if "tau" in suites:
        checks += H.tau_continuity_probe(problem, params, grid, solver,
                                         start_time=min(e["start_times"]),
                                         dtaus=tuple(e["dtaus"]), index=e["tau_index"],
                                         threads=threads)
    constants = {"C_emp": c_emp, "epsilon0": params.epsilon0, "epsilon": params.epsilon,
                 "alpha": params.alpha, "omega": params.omega, "mu": params.mu,
                 "delta": params.delta}
    if cal is not None:
        constants["calibration"] = cal
    return H.VerificationReport(
        instance={"arrangement_n": arr.n, "N": arr.N, "c_f": prof.c_f,
                  "theta": spec.theta, "suites": list(suites)},
        checks=checks,
        constants=constants,
        provenance={"config_sha256": config_hash(cfg), "seed": seed},
    )


@main.command("verify")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--suite", "suites", multiple=True,
              type=click.Choice(["super", "asym", "mono", "stability", "vfront",
                                 "pyramid", "tau", "construct"]))
@click.option("--report", type=click.Path(dir_okay=False), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def cmd_verify(config, suites, report, seed, threads, out):
    """Run verification suites and write a JSON report."""
    try:
        cfg = _load(config, seed, threads)
        if suites:
            cfg["experiment"]["suites"] = list(suites)
        rep = run_verify_suites(cfg)
        report_path = Path(report)
        report_path.write_text(rep.to_json() + "\n")
        if out is not None:
            _emit(Path(out), cfg, [report_path])
    except ConfigError as exc:
        _fail_config(exc)
    except _NUMERIC_ERRORS as exc:
        _fail_numeric(exc, Path(out) if out else None)
    n_pass = sum(c.passed for c in rep.checks)
    click.echo(f"wrote {report}: {n_pass}/{len(rep.checks)} checks passed")
    if not rep.all_passed():
        sys.exit(1)


@main.command("report-diff")
@click.argument("report_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("report_b", type=click.Path(exists=True, dir_okay=False))
def cmd_report_diff(report_a, report_b):
    """Compare two reports; exit nonzero on any pass/fail flip."""
    a = json.loads(Path(report_a).read_text())
    b = json.loads(Path(report_b).read_text())
    status_a = {c["name"]: c["passed"] for c in a["checks"]}
    status_b = {c["name"]: c["passed"] for c in b["checks"]}
    flips = []
    for name in sorted(set(status_a) | set(status_b)):
        if name not in status_a or name not in status_b:
            flips.append(f"{name}: present in only one report")
        elif status_a[name] != status_b[name]:
            flips.append(f"{name}: {status_a[name]} -> {status_b[name]}")
    for line in flips:
        click.echo(line)
    if flips:
        sys.exit(1)
    click.echo("reports agree")


if __name__ == "__main__":
    main()
