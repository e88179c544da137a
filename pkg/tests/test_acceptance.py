"""Acceptance suite.

Each test carries a ``criterion`` marker; the session summary prints one
PASS/FAIL line per criterion.  Tolerances are the stated ones.  Run alone
with ``pytest tests/test_acceptance.py -v`` (a few minutes).
"""

import math

import numpy as np
import pytest

from obkm import runner
from obkm.checkpoint import read_checkpoint, write_checkpoint
from obkm.config import parse_config
from obkm.evolution import PhysicalParams, Status, TimeStepperConfig, integrate, sym_inner
from obkm.grid import Grid, SymTensorField, forward_transform, inverse_transform, spectral_derivative
from obkm.ic import random_band
from obkm.inequalities import RandomFieldSpec, cauchy_convergence_rate, random_field, run_battery
from obkm.monitor import DiagnosticsMonitor, calibrate_apriori_constant, energy_budget
from obkm.norms import hm_norm
from obkm.stokes import StokesParams, solve_stokes_spectral

from conftest import random_sym, sin_x1, sym_from

MOLLIFIER_REPORTS = ("mollifier_J1", "mollifier_J2", "mollifier_J3")


def l2(a, grid):
    return math.sqrt(sym_inner(a, a, grid))


# --------------------------------------------------------------------------
# shared runs


@pytest.fixture(scope="module")
def battery():
    return {r.name: r for r in run_battery(seed=42, resolutions=(16, 32), samples=100)}


@pytest.fixture(scope="module")
def small_data_run():
    g = Grid(16)
    s0 = random_band(g, seed=0, band_limit=4, target_norm=0.01)
    mon = DiagnosticsMonitor(g, 3)
    p = PhysicalParams(nu_s=1.0, nu_p=0.01, lam=1.0)
    out = integrate(s0, p, TimeStepperConfig(dt=0.01, t_end=5.0), mon)
    return out, mon.records


@pytest.fixture(scope="module")
def apriori_runs():
    """Calibration and held-out runs for the exponential bound."""
    g = Grid(16)
    p = PhysicalParams(lam=math.inf)
    ts = TimeStepperConfig(dt=0.01, adaptive=True, t_end=1.0)

    def run(seed, norm):
        mon = DiagnosticsMonitor(g, 3)
        out = integrate(random_band(g, seed=seed, band_limit=4, target_norm=norm), p, ts, mon)
        return out, mon.records

    calibration = [run(seed, norm) for norm in (50.0, 200.0, 500.0) for seed in range(4)]
    held_out = [run(seed, norm) for norm in (100.0, 300.0) for seed in (10, 11)]
    return calibration, held_out


# --------------------------------------------------------------------------


@pytest.mark.criterion(1, "Stokes single-mode oracle")
def test_stokes_oracle():
    g = Grid(16)
    u, gradu = solve_stokes_spectral(sym_from(g, s12=sin_x1(g)), StokesParams(1.0))
    cos = np.cos(g.mesh()[0]) * np.ones(g.shape)
    exact_u = np.stack([np.zeros(g.shape), cos, np.zeros(g.shape)])
    exact_g = np.zeros((9, *g.shape))
    exact_g[1] = -sin_x1(g)
    assert np.linalg.norm(u.values - exact_u) / np.linalg.norm(exact_u) < 1e-12
    assert np.linalg.norm(gradu.values - exact_g) / np.linalg.norm(exact_g) < 1e-12


@pytest.mark.criterion(2, "divergence-free velocity")
def test_divergence_free():
    worst = 0.0
    for n in (16, 32):
        g = Grid(n)
        for seed in range(50):
            u, _ = solve_stokes_spectral(random_sym(g, seed))
            F = forward_transform(u)
            div = sum(
                inverse_transform(spectral_derivative(F, tuple(int(a == k) for a in range(3)))).values[k]
                for k in range(3)
            )
            worst = max(worst, math.sqrt(np.sum(div**2) * g.cell_volume) / hm_norm(u, 1))
    assert worst < 1e-12


@pytest.mark.slow
@pytest.mark.criterion(3, "free-space vs spectral velocity gradient")
def test_kernel_agreement():
    result = runner.kernel_check(32)
    assert len(result["probes"]) == 5
    assert all(p["gradu_rel_error"] < 0.01 and p["u_rel_error"] < 0.01 for p in result["probes"])
    assert all(abs(c["mean"]) <= 3 * c["stderr"] for c in result["sphere_averages"])
    assert result["pass"]


@pytest.mark.criterion(4, "relaxation oracle and RK4 order")
def test_relaxation_order():
    g = Grid(16)
    v = np.zeros((6, *g.shape))
    v[0], v[1], v[3] = 1.0, -0.5, 0.25
    s0 = SymTensorField(g, v)
    p = PhysicalParams(lam=1.0)
    errs = []
    for dt in (0.2, 0.1, 0.05):
        out = integrate(s0, p, TimeStepperConfig(dt=dt, t_end=1.0))
        errs.append(np.abs(out.state.values - v * math.exp(-1.0)).max())
    assert errs[-1] < 1e-6
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(13 <= r <= 19 for r in ratios), ratios


@pytest.mark.criterion(5, "symmetry preservation")
def test_symmetry():
    g = Grid(32)
    out = integrate(random_sym(g, 9, band_limit=8), PhysicalParams(), TimeStepperConfig(dt=0.01, t_end=1.0))
    assert out.steps == 100 and out.status is Status.COMPLETED
    assert out.max_asymmetry < 1e-13


@pytest.mark.criterion(6, "time reversibility")
def test_reversibility():
    g = Grid(16)
    s0 = random_band(g, seed=1, band_limit=4, target_norm=1.0)
    p = PhysicalParams()
    dt, T = 0.05, 0.5
    fwd = integrate(s0, p, TimeStepperConfig(dt=dt, t_end=T))
    ref = integrate(s0, p, TimeStepperConfig(dt=dt / 8, t_end=T))
    back = integrate(fwd.state, p, TimeStepperConfig(dt=dt, t_end=T), reverse=True)
    forward_err = l2(fwd.state.values - ref.state.values, g) / l2(ref.state.values, g)
    back_err = l2(back.state.values - s0.values, g) / l2(s0.values, g)
    assert forward_err > 0
    assert back_err < 10 * forward_err


@pytest.mark.criterion(7, "small-data decay")
def test_small_data_decay(small_data_run):
    out, records = small_data_run
    assert out.status is Status.COMPLETED
    hm = [r.hm for r in records if 0.5 <= r.t <= 5.0 + 1e-12]
    assert len(hm) > 400
    assert all(b < a for a, b in zip(hm, hm[1:]))


@pytest.mark.slow
@pytest.mark.criterion(8, "mollified Cauchy rate")
def test_cauchy_rate():
    g = Grid(64, math.pi)
    s0 = random_field(g, RandomFieldSpec(seed=7, band_limit=4, amplitude=0.5, rank="sym_tensor"))
    rate = cauchy_convergence_rate(s0, PhysicalParams(), T=0.5, eps_list=(0.4, 0.2, 0.1), dt=0.05)
    assert not rate.exact
    assert rate.slope >= 0.9


@pytest.mark.slow
@pytest.mark.criterion(9, "mollifier constants")
def test_mollifier_properties(battery):
    for name in MOLLIFIER_REPORTS:
        r = battery[name]
        assert math.isfinite(r.max_ratio) and r.ratio_stability < 2 and r.passed, r


@pytest.mark.slow
@pytest.mark.criterion(10, "inequality battery")
def test_inequality_battery(battery):
    others = [r for name, r in battery.items() if name not in MOLLIFIER_REPORTS]
    assert len(others) == 8
    for r in others:
        assert math.isfinite(r.max_ratio) and r.ratio_stability < 2 and r.passed, r


@pytest.mark.slow
@pytest.mark.criterion(11, "exponential bound on healthy runs")
def test_apriori_bound(apriori_runs, small_data_run):
    calibration, held_out = apriori_runs
    assert all(out.status is Status.COMPLETED for out, _ in calibration)
    C = max(calibrate_apriori_constant(records) for _, records in calibration)
    assert 0 < C < math.inf
    healthy = [rec for out, rec in [*calibration, *held_out, small_data_run] if out.status is Status.COMPLETED]
    assert len(healthy) == len(calibration) + len(held_out) + 1
    for records in healthy:
        h0 = records[0].hm
        for r in records:
            assert r.hm <= math.exp(C * r.combined_integral) * h0 * (1 + 1e-12), (r.t, r.hm, C)


@pytest.mark.criterion(12, "energy budget")
def test_energy_budget():
    g = Grid(16)
    s0 = random_band(g, seed=3, band_limit=4, target_norm=1.0)
    p = PhysicalParams()
    a = energy_budget(s0, 0.0, p, (0, 0, 0), dt=1e-3)
    b = energy_budget(s0, 0.0, p, (0, 0, 0), dt=5e-4)
    assert a.residual < 1e-3 * a.scale
    assert a.residual / b.residual == pytest.approx(4.0, rel=0.1)


@pytest.mark.criterion(13, "checkpoint round trip and resume")
def test_checkpoint_resume(tmp_path):
    g = Grid(32)
    s = random_sym(g, 13)
    p = PhysicalParams(nu_s=0.8, nu_p=0.4, lam=3.0)
    write_checkpoint(s, 0.375, p, tmp_path / "rt.ckpt")
    ck = read_checkpoint(tmp_path / "rt.ckpt")
    assert ck.sigma.values.tobytes() == s.values.tobytes() and ck.t == 0.375 and ck.params == p

    base = {
        "grid": {"n": 16},
        "stepper": {"dt": 0.01, "t_end": 0.3},
        "ic": {"kind": "random_band", "seed": 4, "band_limit": 4, "amplitude": 1.0},
        "output": {"checkpoint_every": 15},
    }
    code, _ = runner.simulate(parse_config(base), tmp_path / "full")
    assert code == 0
    short = {**base, "stepper": {"dt": 0.01, "t_end": 0.2}}
    runner.simulate(parse_config(short), tmp_path / "part")
    code, _ = runner.simulate(parse_config(base), tmp_path / "part", resume=tmp_path / "part" / "latest.ckpt")
    assert code == 0
    a = read_checkpoint(tmp_path / "full" / runner.FINAL_CHECKPOINT)
    b = read_checkpoint(tmp_path / "part" / runner.FINAL_CHECKPOINT)
    assert a.t == pytest.approx(b.t, abs=1e-12)
    assert np.abs(a.sigma.values - b.sigma.values).max() <= 1e-12 * np.abs(a.sigma.values).max()
