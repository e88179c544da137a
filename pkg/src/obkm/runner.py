"""Orchestration behind the command-line interface.

Each ``cmd_*`` function returns a process exit code and writes its artefacts
into an output directory.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from . import ic as ic_mod
from .checkpoint import CheckpointError, read_checkpoint, write_checkpoint
from .config import ConfigError, RunConfig, load_config
from .evolution import Status, StepInfo, integrate
from .grid import SYM_WEIGHTS, Grid, SymTensorField, rfft3
from .inequalities import reports_to_json, run_battery
from .monitor import (
    CSV_COLUMNS,
    DiagnosticsMonitor,
    DiagnosticsRecord,
    ExistenceBoundParams,
    calibrate_apriori_constant,
    calibrate_energy_constants,
    existence_time_bound,
    read_diagnostics_csv,
)
from .norms import spectral_norm
from .stokes import (
    CompactStress,
    PVQuadratureSpec,
    StokesParams,
    SupportError,
    gradvel_freespace,
    kernel_sphere_average_all,
    padded_spectral_reference,
    solve_stokes_spectral,
    velocity_freespace,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2
EXIT_STEP_FAILED = 3

_STATUS_EXIT = {
    Status.COMPLETED: EXIT_OK,
    Status.BLOWUP_SUSPECTED: EXIT_BLOWUP,
    Status.STEP_FAILED: EXIT_STEP_FAILED,
}

DIAGNOSTICS_FILE = "diagnostics.csv"
SUMMARY_FILE = "summary.json"
FINAL_CHECKPOINT = "final.ckpt"


def _json_number(x: float):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


# --------------------------------------------------------------------------
# simulate


def _truncate_csv(path: Path, t: float) -> DiagnosticsRecord:
    """Keep rows up to the one at time ``t``; return that row's record."""
    records = read_diagnostics_csv(path)
    keep = [r for r in records if r.t <= t * (1 + 1e-12) + 1e-300]
    if not keep or not math.isclose(keep[-1].t, t, rel_tol=1e-12, abs_tol=1e-15):
        raise CheckpointError(f"{path} has no diagnostics row at checkpoint time t={t!r}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in keep:
            w.writerow(r.as_row())
    return keep[-1]


def simulate(
    config: RunConfig,
    output_dir: str | Path | None = None,
    resume: str | Path | None = None,
    calibration_samples: int = 4,
) -> tuple[int, dict]:
    """Run one simulation and write diagnostics, checkpoints and a summary.

    Returns
    -------
    exit_code, summary
    """
    out = Path(output_dir if output_dir is not None else config.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    grid, params, m = config.grid, config.physical, config.sobolev_m
    csv_path = out / DIAGNOSTICS_FILE

    if resume is not None:
        ck = read_checkpoint(resume, kelvin_voigt=params.kelvin_voigt)
        if ck.sigma.grid != grid:
            raise ConfigError("grid", "checkpoint grid differs from configuration")
        sigma0, t0 = ck.sigma, ck.t
        if not config.stepper.t_end > t0:
            raise ConfigError("stepper.t_end", f"must exceed the checkpoint time {t0}")
        resume_rec = _truncate_csv(csv_path, t0)
    else:
        sigma0, t0, resume_rec = ic_mod.from_config(grid, config.ic, m), 0.0, None

    monitor = DiagnosticsMonitor(
        grid, m, config.thresholds, csv_path, config.output.diagnostics_every,
        config.stepper.adaptive, resume_from=resume_rec,
    )
    every = config.output.checkpoint_every

    def callback(info: StepInfo) -> bool:
        stop = monitor(info)
        if info.step > 0 and info.step % every == 0:
            monitor.flush()
            write_checkpoint(SymTensorField(grid, info.sigma), info.t, params, out / "latest.ckpt")
        return stop

    outcome = integrate(sigma0, params, config.stepper, callback, t0=t0)
    monitor.flush()
    write_checkpoint(outcome.state, outcome.t, params, out / FINAL_CHECKPOINT)

    records = monitor.records
    # ||sigma_0||_m of this run's start (the checkpoint state on resume)
    y0 = spectral_norm(rfft3(sigma0.values), grid, SYM_WEIGHTS, m)
    c1, c2 = calibrate_energy_constants(grid, m, samples=calibration_samples, seed=config.ic.seed)
    bound = math.inf
    if y0 > 0:
        bound = existence_time_bound(y0, params, ExistenceBoundParams(c1, c2, params))
    C = calibrate_apriori_constant(records) if records else 0.0
    last = records[-1] if records else None
    summary = {
        "status": str(outcome.status),
        "t_reached": outcome.t,
        "steps": outcome.steps,
        "final": {k: _json_number(getattr(last, k)) for k in CSV_COLUMNS} if last else None,
        "norm_sigma0_m": y0,
        "existence_time_bound": _json_number(bound),
        "calibrated_constants": {"c1": c1, "c2": c2, "C_apriori": C},
        "max_asymmetry": outcome.max_asymmetry,
        "blowup_reason": monitor.report.reason if monitor.report else None,
        "config": config.to_dict(),
    }
    _write_json(out / SUMMARY_FILE, summary)
    return _STATUS_EXIT[outcome.status], summary


def cmd_simulate(config_path: str | Path, output_dir=None, resume=None) -> int:
    try:
        config = load_config(config_path)
        code, summary = simulate(config, output_dir, resume)
    except (ConfigError, CheckpointError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    log.info("status=%s t=%.6g", summary["status"], summary["t_reached"])
    return code


# --------------------------------------------------------------------------
# validate


def cmd_validate(
    seed: int = 42,
    resolutions: Sequence[int] = (16, 32),
    output_dir: str | Path = ".",
    samples: int = 100,
) -> int:
    """Run the inequality battery; exit 0 iff every report passes."""
    resolutions = sorted(int(n) for n in resolutions)
    for n in resolutions:
        try:
            Grid(n)
        except ValueError as exc:
            log.error("resolution %s: %s", n, exc)
            return EXIT_ERROR
    reports = run_battery(seed, resolutions, samples)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "inequality_reports.json").write_text(reports_to_json(reports))
    for r in reports:
        log.info("%-20s max_ratio=%.4g stability=%s %s", r.name, r.max_ratio,
                 r.ratio_stability, "PASS" if r.passed else "FAIL")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_ERROR


# --------------------------------------------------------------------------
# kernel-check

PROBE_OFFSETS = np.array(
    [
        [0.0, 0.0, 0.0],
        [0.2, 0.0, 0.0],
        [0.0, 0.25, 0.0],
        [0.0, 0.0, -0.3],
        [0.15, -0.15, 0.1],
    ]
)
KERNEL_TOLERANCE = 0.01


def kernel_check(
    n: int = 32,
    radius: float = 0.5,
    length: float = 2 * np.pi,
    spec: PVQuadratureSpec = PVQuadratureSpec(),
    sphere_samples: int = 1 << 20,
    nu_s: float = 1.0,
) -> dict:
    """Compare free-space and spectral velocity fields of a Gaussian bump.

    The reference is the spectral solve with periodic images removed
    (:func:`~obkm.stokes.padded_spectral_reference`); the plain periodic
    solve is reported alongside for information.  Velocity errors are
    normalised by the largest reference ``|u|`` over the probes, since ``u``
    passes through zero at the bump centre by symmetry.

    Raises
    ------
    SupportError
        If the bump is not compactly supported in the box.
    """
    grid = Grid(n, length)
    centre = np.full(3, length / 2)
    sigma = ic_mod.gaussian_bump(grid, 1.0, radius, centre)
    compact = CompactStress(sigma, center=centre)
    params = StokesParams(nu_s)
    probes = centre + PROBE_OFFSETS
    u_ref, g_ref = padded_spectral_reference(sigma, probes, params, center=centre)
    _, g_per = solve_stokes_spectral(sigma, params)
    idx = np.rint(probes / grid.spacing).astype(int) % n
    u_scale = float(np.linalg.norm(u_ref, axis=1).max())
    rows = []
    for p, x in enumerate(probes):
        g_fs = gradvel_freespace(compact, x, params, spec)
        u_fs = velocity_freespace(compact, x, params, spec)
        g_err = float(np.linalg.norm(g_fs - g_ref[p]) / np.linalg.norm(g_ref[p]))
        u_err = float(np.linalg.norm(u_fs - u_ref[p]) / u_scale)
        on_grid = np.allclose(x / grid.spacing, np.rint(x / grid.spacing))
        per_err = None
        if on_grid:
            gp = g_per.values[:, idx[p, 0], idx[p, 1], idx[p, 2]].reshape(3, 3)
            per_err = float(np.linalg.norm(g_fs - gp) / np.linalg.norm(gp))
        rows.append({
            "probe": x.tolist(),
            "gradu_rel_error": g_err,
            "u_rel_error": u_err,
            "gradu_rel_error_vs_periodic": per_err,
            "pass": g_err < KERNEL_TOLERANCE and u_err < KERNEL_TOLERANCE,
        })
    sph = kernel_sphere_average_all(sphere_samples)
    comps = []
    for i in range(3):
        for j in range(3):
            for k in range(3):
                for l in range(k, 3):
                    mean, se = float(sph.mean[i, j, k, l]), float(sph.stderr[i, j, k, l])
                    comps.append({"component": [i + 1, j + 1, k + 1, l + 1], "mean": mean,
                                  "stderr": se, "pass": abs(mean) <= 3 * se})
    return {
        "n": n,
        "radius": radius,
        "length": length,
        "quadrature": {"inner_radius": spec.inner_radius, "outer_radius": spec.outer_radius,
                       "points_per_axis": spec.points_per_axis},
        "probes": rows,
        "sphere_averages": comps,
        "pass": all(r["pass"] for r in rows) and all(c["pass"] for c in comps),
    }


def cmd_kernel_check(
    n: int = 32,
    output_dir: str | Path = ".",
    radius: float = 0.5,
    spec: PVQuadratureSpec = PVQuadratureSpec(),
    sphere_samples: int = 1 << 20,
) -> int:
    try:
        result = kernel_check(n, radius, spec=spec, sphere_samples=sphere_samples)
    except (SupportError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "kernel_check.json", result)
    with open(out / "kernel_check.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "x3", "gradu_rel_error", "u_rel_error"])
        for r in result["probes"]:
            w.writerow([*map(repr, r["probe"]), repr(r["gradu_rel_error"]), repr(r["u_rel_error"])])
    for r in result["probes"]:
        log.info("probe %s gradu err %.3e u err %.3e", r["probe"], r["gradu_rel_error"], r["u_rel_error"])
    return EXIT_OK if result["pass"] else EXIT_ERROR
