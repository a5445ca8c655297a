"""Run configuration: schema validation with exact error paths.

Unknown keys are rejected and every default is materialized, so the resolved
config emitted next to each artifact fully determines the run.
"""

from __future__ import annotations

import copy
import json
import hashlib
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_DEFAULTS = {
    "seed": 0,
    "out": "runs/out",
    "threads": 1,
    "reaction": {"kind": "cubic", "theta": 0.25, "path": None},
    "profile": {"Xi": 40.0, "dxi": 0.01, "tol_c": 1e-10},
    "arrangement": {"N": 2, "fronts": None, "raw_e": None, "e0": None, "tau": None},
    "surface": {"newton_tol": 1e-13, "max_iter": 60},
    "bounds": {"eps_fraction": 0.5, "alpha_shrink": 0.5, "delta": None, "c_emp": None},
    "grid": {
        "dims": [128, 128],
        "dx": 0.4,
        "origin": [-25.4, -20.0],
        "scheme": "explicit_euler",
        "boundary": "dirichlet_from_evaluator",
        "cfl_fraction": 0.45,
        "dt": None,
        "frame_speed": 0.0,
        "snapshot_every": 0,
    },
    "experiment": {
        "suites": ["super"],
        "start_times": [-2.0, -4.0],
        "snapshot_times": [-0.5, 0.0],
        "samples": 400,
        "residual_tol": 1e-5,
        "stability_T": 20.0,
        "n_checkpoints": 10,
        "perturbation": {"amp": 0.2, "width": 3.0, "center": None, "base": "lower"},
        "dtaus": [0.1, 0.05],
        "tau_index": 0,
        "vfront_alpha_deg": 45.0,
        "rho_band": 5.0,
        "bucket_width": 2.5,
    },
}

_SUITES = ("super", "asym", "mono", "stability", "vfront", "pyramid", "tau", "construct")


def _merge(defaults, given, path):
    if not isinstance(given, dict):
        raise ConfigError(path or "<root>", "expected an object")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if key not in defaults:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")
        if isinstance(defaults[key], dict) and defaults[key] and not key == "perturbation" \
                and isinstance(value, dict):
            out[key] = _merge(defaults[key], value, f"{path}.{key}" if path else key)
        elif key == "perturbation" and isinstance(value, dict):
            out[key] = _merge(defaults[key], value, f"{path}.{key}" if path else key)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _require(cond, path, message):
    if not cond:
        raise ConfigError(path, message)


def validate_config(raw: dict) -> dict:
    """Merge with defaults, reject unknown keys, check value ranges."""
    cfg = _merge(_DEFAULTS, raw, "")

    r = cfg["reaction"]
    _require(r["kind"] in ("cubic", "tabulated"), "reaction.kind", "must be 'cubic' or 'tabulated'")
    if r["kind"] == "cubic":
        _require(isinstance(r["theta"], (int, float)) and 0.0 < r["theta"] < 0.5,
                 "reaction.theta", "must lie in (0, 1/2)")
    else:
        _require(r["path"], "reaction.path", "tabulated reaction needs a CSV path")

    p = cfg["profile"]
    _require(p["Xi"] > 0, "profile.Xi", "must be positive")
    _require(0 < p["dxi"] < p["Xi"], "profile.dxi", "must lie in (0, Xi)")
    _require(p["tol_c"] > 0, "profile.tol_c", "must be positive")

    a = cfg["arrangement"]
    _require(isinstance(a["N"], int) and a["N"] >= 2, "arrangement.N", "need integer N >= 2")
    if a["fronts"] is None and a["raw_e"] is None:
        raise ConfigError("arrangement.fronts", "need either fronts or raw_e + e0")
    if a["fronts"] is not None:
        _require(isinstance(a["fronts"], list) and a["fronts"],
                 "arrangement.fronts", "need a nonempty list")
        for i, fr in enumerate(a["fronts"]):
            base = f"arrangement.fronts[{i}]"
            _require(isinstance(fr, dict), base, "expected an object")
            for key in fr:
                _require(key in ("nu", "theta_deg", "tau"), f"{base}.{key}", "unknown key")
            _require("nu" in fr and len(fr["nu"]) == a["N"] - 1, f"{base}.nu",
                     f"need a unit vector of length {a['N'] - 1}")
            _require("theta_deg" in fr and 0.0 < fr["theta_deg"] <= 90.0,
                     f"{base}.theta_deg", "must lie in (0, 90]")
            _require("tau" in fr, f"{base}.tau", "missing")
    else:
        _require(a["e0"] is not None and len(a["e0"]) == a["N"],
                 "arrangement.e0", f"need a unit vector of length {a['N']}")
        _require(a["tau"] is not None and len(a["tau"]) == len(a["raw_e"]),
                 "arrangement.tau", "need one offset per direction")

    s = cfg["surface"]
    _require(s["newton_tol"] > 0, "surface.newton_tol", "must be positive")
    _require(isinstance(s["max_iter"], int) and s["max_iter"] > 0,
             "surface.max_iter", "must be a positive integer")

    b = cfg["bounds"]
    _require(0.0 < b["eps_fraction"] < 1.0, "bounds.eps_fraction", "must lie in (0, 1)")
    _require(0.0 < b["alpha_shrink"] <= 1.0, "bounds.alpha_shrink", "must lie in (0, 1]")

    g = cfg["grid"]
    _require(len(g["dims"]) in (2, 3), "grid.dims", "need 2 or 3 axes")
    _require(len(g["origin"]) == len(g["dims"]), "grid.origin", "must match dims")
    _require(g["dx"] > 0, "grid.dx", "must be positive")
    _require(g["scheme"] in ("explicit_euler", "imex_cn"), "grid.scheme", "unknown scheme")
    _require(g["boundary"] in ("dirichlet_from_evaluator", "homogeneous_neumann"),
             "grid.boundary", "unknown boundary mode")
    _require(len(g["dims"]) == cfg["arrangement"]["N"], "grid.dims",
             "grid dimension must match the arrangement dimension")

    e = cfg["experiment"]
    for s_name in e["suites"]:
        _require(s_name in _SUITES, "experiment.suites", f"unknown suite '{s_name}'")
    _require(all(t < 0 for t in e["start_times"]), "experiment.start_times",
             "start times must be negative")
    _require(e["perturbation"]["base"] in ("lower", "reference"),
             "experiment.perturbation.base", "must be 'lower' or 'reference'")
    return cfg


def load_config(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    return validate_config(raw)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode("utf-8")).hexdigest()


def build_objects(cfg: dict):
    """Materialize (spec, profile, arrangement, grid, solver config) from a config."""
    from .geometry import FrontArrangement, from_raw_directions
    from .pde import GridSpec, SolverConfig
    from .profile import solve_profile
    from .reaction import load_tabulated_csv, make_cubic

    r = cfg["reaction"]
    spec = make_cubic(r["theta"]) if r["kind"] == "cubic" else load_tabulated_csv(r["path"])
    p = cfg["profile"]
    prof = solve_profile(spec, Xi=p["Xi"], dxi=p["dxi"], tol_c=p["tol_c"])

    a = cfg["arrangement"]
    if a["fronts"] is not None:
        nu = np.array([fr["nu"] for fr in a["fronts"]], dtype=float)
        theta = np.array([np.deg2rad(fr["theta_deg"]) for fr in a["fronts"]])
        tau = np.array([fr["tau"] for fr in a["fronts"]], dtype=float)
        arr = FrontArrangement(N=a["N"], nu=nu, theta=theta, tau=tau, c_f=prof.c_f)
    else:
        arr = from_raw_directions(a["raw_e"], a["e0"], a["tau"], prof.c_f)

    g = cfg["grid"]
    grid = GridSpec(dims=tuple(g["dims"]), spacing=tuple([g["dx"]] * len(g["dims"])),
                    origin=tuple(g["origin"]))
    solver = SolverConfig(dt=g["dt"], cfl_fraction=g["cfl_fraction"], scheme=g["scheme"],
                          boundary=g["boundary"], snapshot_every=g["snapshot_every"],
                          frame_speed=g["frame_speed"], reaction_lipschitz=spec.L)
    return spec, prof, arr, grid, solver
