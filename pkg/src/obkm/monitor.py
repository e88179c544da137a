"""Blow-up diagnostics: norms, time integrals, a priori bounds and classification."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .evolution import (
    PhysicalParams,
    Status,
    StepInfo,
    _rk4_arrays,
    evaluate_rhs,
    rhs_terms,
    sym_inner,
)
from .grid import (
    SYM_WEIGHTS,
    Grid,
    SymTensorField,
    TensorField,
    VectorField,
    derivative_multiplier,
    irfft3,
    rfft3,
)
from .inequalities import RandomFieldSpec, random_field
from .norms import (
    DEFAULT_SOBOLEV_M,
    lp_array_norm,
    pointwise_magnitude,
    spectral_inner,
    spectral_norm,
)

__all__ = [
    "CSV_COLUMNS",
    "DiagnosticsRecord",
    "ExistenceBoundParams",
    "BlowupThresholds",
    "BlowupReport",
    "EnergyBudget",
    "LogBound",
    "compute_diagnostics",
    "existence_time_bound",
    "apriori_bound_rhs",
    "apriori_bound_series",
    "l4_bound_series",
    "doubly_exponential_series",
    "calibrate_apriori_constant",
    "calibrate_energy_constants",
    "loglinf_gradvel_bound",
    "split_radii_minimized",
    "energy_budget",
    "detect_blowup",
    "DiagnosticsMonitor",
    "read_diagnostics_csv",
]

CSV_COLUMNS = (
    "t",
    "linf_sigma",
    "linf_gradu",
    "h0",
    "hm",
    "l4_grad_sigma",
    "bkm_integral",
    "combined_integral",
    "dt_used",
    "energy_residual",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time sample of the monitored norms and running integrals."""

    t: float
    linf_sigma: float
    linf_gradu: float
    h0: float
    hm: float
    l4_grad_sigma: float
    bkm_integral: float
    combined_integral: float
    dt_used: float = 0.0
    energy_residual: float = 0.0

    def as_row(self) -> list[str]:
        # repr round-trips floats exactly, which resume relies on
        return [repr(float(getattr(self, c))) for c in CSV_COLUMNS]

    @classmethod
    def from_row(cls, row: dict[str, str] | Sequence[str]) -> "DiagnosticsRecord":
        if isinstance(row, dict):
            return cls(**{c: float(row[c]) for c in CSV_COLUMNS})
        return cls(*(float(v) for v in row))


def _advance(prev: DiagnosticsRecord | None, t, linf_s, linf_g) -> tuple[float, float]:
    if prev is None:
        return 0.0, 0.0
    dt = t - prev.t
    bkm = prev.bkm_integral + 0.5 * dt * (prev.linf_sigma + linf_s)
    comb = prev.combined_integral + 0.5 * dt * (
        2.0 + prev.linf_sigma + prev.linf_gradu + linf_s + linf_g
    )
    return bkm, comb


def _grad_l4(sig_hat: np.ndarray, grid: Grid) -> float:
    k = grid.k_deriv
    acc = np.zeros(grid.shape)
    for a in range(3):
        d = irfft3(1j * k[a] * sig_hat, grid.n)
        acc += np.einsum("c,c...->...", SYM_WEIGHTS, d * d)
    return lp_array_norm(np.sqrt(acc)[None], grid.cell_volume, 4)


def record_from_arrays(
    grid: Grid,
    sig: np.ndarray,
    sig_hat: np.ndarray,
    gradu: np.ndarray,
    m: int,
    t: float,
    previous: DiagnosticsRecord | None = None,
    dt_used: float = 0.0,
    energy_residual: float = 0.0,
) -> DiagnosticsRecord:
    linf_s = float(pointwise_magnitude(sig, SYM_WEIGHTS).max())
    linf_g = float(pointwise_magnitude(gradu).max())
    bkm, comb = _advance(previous, t, linf_s, linf_g)
    return DiagnosticsRecord(
        t=float(t),
        linf_sigma=linf_s,
        linf_gradu=linf_g,
        h0=spectral_norm(sig_hat, grid, SYM_WEIGHTS, 0),
        hm=spectral_norm(sig_hat, grid, SYM_WEIGHTS, m),
        l4_grad_sigma=_grad_l4(sig_hat, grid),
        bkm_integral=bkm,
        combined_integral=comb,
        dt_used=float(dt_used),
        energy_residual=float(energy_residual),
    )


def compute_diagnostics(
    sigma: SymTensorField,
    u: VectorField,
    gradu: TensorField,
    m: int = DEFAULT_SOBOLEV_M,
    t: float = 0.0,
    previous: DiagnosticsRecord | None = None,
    *,
    dt_used: float = 0.0,
    energy_residual: float = 0.0,
) -> DiagnosticsRecord:
    """Norms of the current state plus trapezoid-advanced time integrals.

    ``u`` is accepted for interface symmetry; only ``sigma`` and ``gradu``
    enter the record.  Integrals start at zero when ``previous`` is None.
    """
    grid = sigma.grid
    if u.grid != grid or gradu.grid != grid:
        raise ValueError("fields must share a grid")
    return record_from_arrays(
        grid, sigma.values, rfft3(sigma.values), gradu.values, m, t, previous, dt_used, energy_residual
    )


# --------------------------------------------------------------------------
# existence time


@dataclass(frozen=True)
class ExistenceBoundParams:
    """Energy-inequality constants and the derived rates.

    ``c3 = c1 (nu_p/lambda)/nu_s - 1/lambda`` and ``c4 = c2/nu_s`` are
    recomputed from ``(c1, c2, params)`` on access.  In Kelvin-Voigt mode the
    retained modulus replaces ``nu_p/lambda``.
    """

    c1: float
    c2: float
    params: PhysicalParams

    def __post_init__(self) -> None:
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("c1 and c2 must be nonnegative")

    @property
    def c3(self) -> float:
        p = self.params
        return self.c1 * p.forcing_coefficient / p.nu_s - p.relaxation_rate

    @property
    def c4(self) -> float:
        return self.c2 / self.params.nu_s


def existence_time_bound(
    norm_sigma0_m: float,
    params: PhysicalParams,
    c: ExistenceBoundParams,
    *,
    sharp: bool = False,
) -> float:
    """Guaranteed existence time from ``y' <= c3 y + c4 y^2``.

    The default returns ``(1/|c3|) log(1 + |c3|/(c4 y0))``, with its limit
    ``1/(c4 y0)`` when ``c3 = 0``.  When ``c3 < 0`` and ``y0 < |c3|/c4`` the
    comparison solution never blows up and the result is ``inf``.
    ``sharp=True`` returns the exact blow-up time of the comparison equation
    instead, which for ``c3 < 0`` is larger than the default form.

    Raises
    ------
    ValueError
        If ``norm_sigma0_m <= 0``.
    """
    y0 = float(norm_sigma0_m)
    if not y0 > 0:
        raise ValueError("norm of the initial data must be positive")
    if c.params != params:
        c = ExistenceBoundParams(c.c1, c.c2, params)
    c3, c4 = c.c3, c.c4
    if c4 == 0:
        return math.inf
    if c3 < 0 and y0 <= -c3 / c4:
        return math.inf
    if c3 == 0:
        return 1.0 / (c4 * y0)
    if sharp and c3 < 0:
        return math.log1p(c3 / (c4 * y0)) / c3
    a = abs(c3)
    return math.log1p(a / (c4 * y0)) / a


# --------------------------------------------------------------------------
# a priori bounds


def _column(records: Sequence[DiagnosticsRecord], name: str) -> np.ndarray:
    return np.array([getattr(r, name) for r in records], dtype=float)


def apriori_bound_series(
    records: Sequence[DiagnosticsRecord], norm_sigma0_m: float, C: float
) -> np.ndarray:
    """``exp(C M(t)) ||sigma0||_m`` at every record, ``M`` the combined integral."""
    return np.exp(C * _column(records, "combined_integral")) * norm_sigma0_m


def apriori_bound_rhs(records: Sequence[DiagnosticsRecord], norm_sigma0_m: float, C: float) -> float:
    """Right-hand side of the a priori ``H^m`` estimate at the last record."""
    if not records:
        return float(norm_sigma0_m)
    return float(apriori_bound_series(records[-1:], norm_sigma0_m, C)[0])


def l4_bound_series(records: Sequence[DiagnosticsRecord], l4_0: float, C: float) -> np.ndarray:
    """Same exponential form applied to ``||grad sigma||_4``."""
    return np.exp(C * _column(records, "combined_integral")) * l4_0


def doubly_exponential_series(
    records: Sequence[DiagnosticsRecord], norm_sigma0_m: float, C: float
) -> np.ndarray:
    """``exp(C exp(C N(t))) ||sigma0||_m`` with ``N`` the BKM integral."""
    return np.exp(C * np.exp(C * _column(records, "bkm_integral"))) * norm_sigma0_m


def calibrate_apriori_constant(
    records: Sequence[DiagnosticsRecord], column: str = "hm", reference: float | None = None
) -> float:
    """Smallest ``C >= 0`` making the exponential bound hold on ``records``.

    ``C = max_t log(q(t)/q(0)) / M(t)`` over samples with ``M(t) > 0``.
    """
    q = _column(records, column)
    q0 = q[0] if reference is None else reference
    M = _column(records, "combined_integral")
    best = 0.0
    if q0 <= 0:
        return best
    for qi, Mi in zip(q, M):
        if Mi > 0 and qi > 0:
            best = max(best, math.log(qi / q0) / Mi)
    return best


def calibrate_energy_constants(
    grid: Grid, m: int = DEFAULT_SOBOLEV_M, samples: int = 8, seed: int = 0
) -> tuple[float, float]:
    """Empirical ``(c1, c2)`` of the ``H^m`` energy inequality.

    Over random band-limited stresses, with ``nu_s = 1``:
    ``c1 = max |<sigma, grad u + grad u^T>_m| / ||sigma||_m^2`` and
    ``c2 = max |I1 + I2| / ||sigma||_m^3``.  The estimates being calibrated
    bound absolute values, and both ratios are scale invariant.
    """
    unit = PhysicalParams(nu_s=1.0, nu_p=1.0, lam=1.0)
    c1 = c2 = 0.0
    for i in range(samples):
        spec = RandomFieldSpec(seed=seed + i, band_limit=grid.n // 3, amplitude=1.0, rank="sym_tensor")
        sig = random_field(grid, spec).values
        terms = rhs_terms(sig, grid, unit)
        sh = rfft3(sig)
        norm = spectral_norm(sh, grid, SYM_WEIGHTS, m)
        forcing = spectral_inner(sh, rfft3(terms["forcing"]), grid, SYM_WEIGHTS, m)
        cubic = spectral_inner(sh, rfft3(terms["stretching"] - terms["advection"]), grid, SYM_WEIGHTS, m)
        c1 = max(c1, abs(forcing) / norm**2)
        c2 = max(c2, abs(cubic) / norm**3)
    return c1, c2


# --------------------------------------------------------------------------
# log-L-infinity estimate of grad u


class LogBound(NamedTuple):
    bound: float
    R_opt: float
    eps_opt: float


def _log_plus(x: float) -> float:
    return max(math.log(x), 0.0)


def loglinf_gradvel_bound(h0: float, linf_sigma: float, l4_grad_sigma: float, C: float = 1.0) -> LogBound:
    """``C |sigma|_inf (1 + log+ |sigma|_0 + log+ |grad sigma|_4)`` with split radii.

    The radii are the published closed forms
    ``R = (1.5 h0/linf)^(2/3)`` and ``eps = (4 linf/l4)^(1/4)``.  The first
    minimises the three-term split bound in ``R``; the stationary point in
    ``eps`` is ``(4 linf/l4)^4`` instead, which :func:`split_radii_minimized`
    recovers numerically.
    """
    for name, v in (("h0", h0), ("linf_sigma", linf_sigma), ("l4_grad_sigma", l4_grad_sigma)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    bound = C * linf_sigma * (1.0 + _log_plus(h0) + _log_plus(l4_grad_sigma))
    R = (1.5 * h0 / linf_sigma) ** (2.0 / 3.0)
    eps = (4.0 * linf_sigma / l4_grad_sigma) ** 0.25
    return LogBound(bound, R, eps)


def split_bound(R: float, eps: float, h0: float, linf_sigma: float, l4_grad_sigma: float) -> float:
    """Unit-constant split estimate ``h0 R^-3/2 + l4 eps^1/4 + linf log(R/eps)``."""
    return h0 * R**-1.5 + l4_grad_sigma * eps**0.25 + linf_sigma * math.log(R / eps)


def split_radii_minimized(h0: float, linf_sigma: float, l4_grad_sigma: float) -> tuple[float, float]:
    """Numerically minimised ``(R, eps)`` of :func:`split_bound` (for comparison)."""
    R0 = (1.5 * h0 / linf_sigma) ** (2.0 / 3.0)
    e0 = (4.0 * linf_sigma / l4_grad_sigma) ** 4

    def obj(z):
        return split_bound(math.exp(z[0]), math.exp(z[1]), h0, linf_sigma, l4_grad_sigma)

    res = optimize.minimize(obj, x0=[math.log(R0) + 0.3, math.log(e0) - 0.3], method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    return float(math.exp(res.x[0])), float(math.exp(res.x[1]))


# --------------------------------------------------------------------------
# energy budget


class EnergyBudget(NamedTuple):
    I1: float
    I2: float
    I3: float
    residual: float
    scale: float


def _alpha_inner(a: np.ndarray, b: np.ndarray, grid: Grid, alpha) -> float:
    mult = np.abs(derivative_multiplier(grid, alpha)) ** 2 * grid.parseval_weights
    prod = (rfft3(a) * np.conj(rfft3(b))).real
    return float(grid.volume * np.einsum("c,cxyz,xyz->", SYM_WEIGHTS, prod, mult))


def energy_budget(
    sigma: SymTensorField,
    epsilon: float,
    params: PhysicalParams,
    alpha: Sequence[int] = (0, 0, 0),
    dt: float = 1e-3,
) -> EnergyBudget:
    """Terms of the ``D^alpha`` energy identity and its finite-difference residual.

    ``I1 = -<D^a s, D^a A_eps(s)>`` (advection), ``I2`` the stretching term and
    ``I3`` the forcing term.  The residual is
    ``|dE/dt + (1/lambda)||D^a s||^2 - (I1 + I2 + I3)|`` with
    ``E = ||D^a s||^2/2`` differentiated by a centred difference over RK4
    steps of size ``+-dt``; it is ``O(dt^2)``.
    """
    grid = sigma.grid
    sig = sigma.values
    terms = rhs_terms(sig, grid, params, epsilon)
    I1 = -_alpha_inner(sig, terms["advection"], grid, alpha)
    I2 = _alpha_inner(sig, terms["stretching"], grid, alpha)
    I3 = _alpha_inner(sig, terms["forcing"], grid, alpha)
    relax = _alpha_inner(sig, terms["relaxation"], grid, alpha)

    def f(a):
        return evaluate_rhs(a, grid, params, epsilon)[0]

    plus = _rk4_arrays(sig, dt, f)
    minus = _rk4_arrays(sig, -dt, f)
    dE = 0.5 * (_alpha_inner(plus, plus, grid, alpha) - _alpha_inner(minus, minus, grid, alpha)) / (2 * dt)
    residual = abs(dE + relax - (I1 + I2 + I3))
    scale = abs(I1) + abs(I2) + abs(I3) + abs(relax)
    return EnergyBudget(I1, I2, I3, residual, scale)


# --------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class BlowupThresholds:
    linf_cap: float = 1e6
    dt_floor: float = 1e-8
    integral_cap: float = 1e4


class BlowupReport(NamedTuple):
    status: Status
    reason: str
    growth_rate: float


def detect_blowup(
    records: Sequence[DiagnosticsRecord],
    thresholds: BlowupThresholds = BlowupThresholds(),
    *,
    window: int = 5,
    adaptive: bool = True,
) -> BlowupReport:
    """Classify the latest record as healthy or suspected blow-up.

    The growth rate is the mean slope of ``bkm_integral`` over the trailing
    ``window`` records.  ``dt_floor`` only applies to adaptive runs.
    """
    if not records:
        raise ValueError("records must be nonempty")
    tail = records[-window:]
    span = tail[-1].t - tail[0].t
    growth = (tail[-1].bkm_integral - tail[0].bkm_integral) / span if span > 0 else 0.0
    last = records[-1]
    if not last.linf_sigma <= thresholds.linf_cap:
        return BlowupReport(Status.BLOWUP_SUSPECTED, "linf_sigma above cap", growth)
    if not last.bkm_integral <= thresholds.integral_cap:
        return BlowupReport(Status.BLOWUP_SUSPECTED, "bkm_integral above cap", growth)
    if adaptive and 0 < last.dt_used <= thresholds.dt_floor:
        return BlowupReport(Status.BLOWUP_SUSPECTED, "adaptive dt at floor", growth)
    return BlowupReport(Status.HEALTHY, "", growth)


class DiagnosticsMonitor:
    """Integration callback producing one record per step.

    Records are kept in memory; every ``every``-th one (and any requested via
    :meth:`flush`) is appended to ``csv_path``.  The energy residual compares
    the change of ``||sigma||_0^2/2`` over a step with the trapezoid average
    of ``<sigma, F(sigma)>`` at its ends.

    Parameters
    ----------
    resume_from : DiagnosticsRecord, optional
        Record at the restart time.  The first callback then only primes the
        monitor and writes nothing.
    """

    def __init__(
        self,
        grid: Grid,
        m: int = DEFAULT_SOBOLEV_M,
        thresholds: BlowupThresholds = BlowupThresholds(),
        csv_path: str | Path | None = None,
        every: int = 1,
        adaptive: bool = False,
        resume_from: DiagnosticsRecord | None = None,
    ) -> None:
        self.grid = grid
        self.m = m
        self.thresholds = thresholds
        self.every = max(1, int(every))
        self.adaptive = adaptive
        self.records: list[DiagnosticsRecord] = []
        self.report: BlowupReport | None = None
        self._resume = resume_from
        self._energy = None
        self._last_written: float | None = None
        self.csv_path = Path(csv_path) if csv_path is not None else None
        if self.csv_path is not None and resume_from is None:
            with open(self.csv_path, "w", newline="") as fh:
                csv.writer(fh).writerow(CSV_COLUMNS)

    def __call__(self, info: StepInfo) -> bool:
        grid = self.grid
        energy = 0.5 * sym_inner(info.sigma, info.sigma, grid)
        rate = sym_inner(info.sigma, info.F, grid)
        if info.step == 0 and self._resume is not None:
            rec = self._resume
            self.records.append(rec)
            self._last_written = rec.t
            self._energy = (energy, rate)
            return False
        resid = 0.0
        if self._energy is not None and info.dt_used > 0:
            e0, r0 = self._energy
            resid = abs((energy - e0) / info.dt_used - 0.5 * (r0 + rate))
        self._energy = (energy, rate)
        prev = self.records[-1] if self.records else None
        rec = record_from_arrays(
            grid, info.sigma, info.aux.sigma_hat, info.aux.gradu, self.m, info.t, prev,
            info.dt_used, resid,
        )
        self.records.append(rec)
        if info.step % self.every == 0:
            self._write(rec)
        self.report = detect_blowup(self.records, self.thresholds, adaptive=self.adaptive)
        if self.report.status is Status.BLOWUP_SUSPECTED:
            self.flush()
            return True
        return False

    def _write(self, rec: DiagnosticsRecord) -> None:
        if self.csv_path is None or self._last_written == rec.t:
            return
        with open(self.csv_path, "a", newline="") as fh:
            csv.writer(fh).writerow(rec.as_row())
        self._last_written = rec.t

    def flush(self) -> None:
        """Write the latest record if it has not been written yet."""
        if self.records:
            self._write(self.records[-1])


def read_diagnostics_csv(path: str | Path) -> list[DiagnosticsRecord]:
    """Parse a diagnostics CSV written by :class:`DiagnosticsMonitor`."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [DiagnosticsRecord.from_row(row) for row in reader]
