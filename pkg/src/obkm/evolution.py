"""Closed stress evolution ``d sigma/dt = F(sigma)`` and its time integration.

``F(s) = -(u.grad)s + (grad u)^T s + s (grad u) - s/lambda + (nu_p/lambda)(grad u + grad u^T)``
with ``u`` the creeping-flow velocity driven by ``div s``.  Quadratic terms are
formed pseudo-spectrally with 2/3-rule dealiasing.  The mollified variant
wraps only the advection term as ``J_eps[u.grad(J_eps s)]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .grid import (
    SYM_WEIGHTS,
    Grid,
    SymTensorField,
    expand_symmetric,
    irfft3,
    pack_symmetric,
    rfft3,
)
from .norms import mollifier_multiplier
from .stokes import StokesParams, stokes_hat

__all__ = [
    "PhysicalParams",
    "TimeStepperConfig",
    "Status",
    "StepFailure",
    "StepInfo",
    "IntegrationOutcome",
    "rhs_F",
    "rhs_F_mollified",
    "make_rhs",
    "step_rk4",
    "integrate",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Material parameters.

    Attributes
    ----------
    nu_s : float
        Solvent viscosity, positive.
    nu_p : float
        Polymer viscosity, nonnegative.  In Kelvin-Voigt mode it is read as
        the retained modulus ``nu_p/lambda``.
    lam : float
        Relaxation time, positive or ``inf``.  With ``inf`` both the
        relaxation and the forcing term vanish unless ``kelvin_voigt``.
    kelvin_voigt : bool
        Requires ``lam = inf``; keeps the forcing term with coefficient
        ``nu_p``.
    """

    nu_s: float = 1.0
    nu_p: float = 1.0
    lam: float = 1.0
    kelvin_voigt: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.nu_s) and self.nu_s > 0):
            raise ValueError(f"nu_s must be positive, got {self.nu_s}")
        if not (math.isfinite(self.nu_p) and self.nu_p >= 0):
            raise ValueError(f"nu_p must be nonnegative, got {self.nu_p}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive or inf, got {self.lam}")
        if self.kelvin_voigt and math.isfinite(self.lam):
            raise ValueError("kelvin_voigt mode requires lambda = inf")

    @property
    def relaxation_rate(self) -> float:
        """``1/lambda`` (zero when ``lambda`` is infinite)."""
        return 0.0 if math.isinf(self.lam) else 1.0 / self.lam

    @property
    def forcing_coefficient(self) -> float:
        """Coefficient of ``grad u + grad u^T`` in ``F``."""
        if self.kelvin_voigt:
            return self.nu_p
        return self.nu_p * self.relaxation_rate

    @property
    def stokes(self) -> StokesParams:
        return StokesParams(self.nu_s)


@dataclass(frozen=True)
class TimeStepperConfig:
    """Explicit RK4 settings.

    ``dt`` is the fixed step, or the upper clamp in adaptive mode where
    ``dt_n = cfl_safety * min(h/|u|_inf, 1/|grad u|_inf)`` is clipped to
    ``[dt_min, dt]``.  ``mollify_epsilon = 0`` selects the unmollified ``F``.
    """

    dt: float = 1e-2
    dt_min: float = 1e-8
    cfl_safety: float = 0.5
    adaptive: bool = False
    t_end: float = 1.0
    mollify_epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not self.dt > 0 or not self.dt_min > 0:
            raise ValueError("dt and dt_min must be positive")
        if self.dt < self.dt_min:
            raise ValueError("dt must be >= dt_min")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.mollify_epsilon < 0:
            raise ValueError("mollify_epsilon must be >= 0")


class Status(str, enum.Enum):
    COMPLETED = "completed"
    BLOWUP_SUSPECTED = "blowup_suspected"
    STEP_FAILED = "step_failed"
    HEALTHY = "healthy"

    def __str__(self) -> str:
        return self.value


class StepFailure(ArithmeticError):
    """A Runge-Kutta stage produced a non-finite value."""


class RhsAux:
    """By-products of one right-hand-side evaluation, materialised lazily."""

    def __init__(self, grid: Grid, sigma_hat: np.ndarray, u_hat: np.ndarray, g_hat: np.ndarray):
        self.grid = grid
        self.sigma_hat = sigma_hat
        self.u_hat = u_hat
        self.g_hat = g_hat

    @cached_property
    def u(self) -> np.ndarray:
        return irfft3(self.u_hat, self.grid.n)

    @cached_property
    def gradu(self) -> np.ndarray:
        """Full gradient, shape ``(9, n, n, n)`` with index ``3*i + j``."""
        return irfft3(self.g_hat.reshape(9, *self.grid.spectral_shape), self.grid.n)

    @cached_property
    def linf_u(self) -> float:
        return float(np.sqrt(np.einsum("c...,c...->...", self.u, self.u)).max())

    @cached_property
    def linf_gradu(self) -> float:
        return float(np.sqrt(np.einsum("c...,c...->...", self.gradu, self.gradu)).max())


def evaluate_rhs(
    sig: np.ndarray, grid: Grid, params: PhysicalParams, epsilon: float = 0.0
) -> tuple[np.ndarray, float, RhsAux]:
    """Packed ``F(sig)``, the pre-symmetrisation asymmetry and by-products."""
    n = grid.n
    mask = grid.dealias_mask
    k = grid.k_deriv
    sh = rfft3(sig)
    u_hat, g_hat = stokes_hat(sh, grid, params.nu_s)
    shm = sh * mask
    ud = irfft3(u_hat * mask, n)
    gd = irfft3(g_hat * mask, n)
    sd = expand_symmetric(irfft3(shm, n))

    if epsilon > 0:
        J = mollifier_multiplier(grid, float(epsilon))
        base = shm * J
    else:
        J = None
        base = shm
    adv = np.zeros_like(sig)
    for a in range(3):
        adv += ud[a] * irfft3(1j * k[a] * base, n)

    # (grad u)^T s and s (grad u), formed separately so their sum is only
    # symmetric up to rounding; the mismatch is reported, then removed
    stretch = np.einsum("ki...,kj...->ij...", gd, sd) + np.einsum("ik...,kj...->ij...", sd, gd)
    asym = float(np.abs(stretch - np.swapaxes(stretch, 0, 1)).max())

    if J is None:
        nl_hat = rfft3(pack_symmetric(stretch) - adv) * mask
    else:
        nl_hat = (rfft3(pack_symmetric(stretch)) - rfft3(adv) * J) * mask
    F = irfft3(nl_hat, n)

    rate = params.relaxation_rate
    coef = params.forcing_coefficient
    if rate:
        F -= rate * sig
    if coef:
        F += coef * irfft3(pack_symmetric(g_hat + np.swapaxes(g_hat, 0, 1)), n)
    return F, asym, RhsAux(grid, sh, u_hat, g_hat)


def _check_sym(sigma: SymTensorField) -> None:
    if not isinstance(sigma, SymTensorField):
        raise TypeError("sigma must be a SymTensorField")


def rhs_F(sigma: SymTensorField, params: PhysicalParams) -> SymTensorField:
    """Unmollified right-hand side ``F(sigma)``."""
    _check_sym(sigma)
    F, _, _ = evaluate_rhs(sigma.values, sigma.grid, params)
    return SymTensorField(sigma.grid, F)


def rhs_F_mollified(sigma: SymTensorField, params: PhysicalParams, epsilon: float) -> SymTensorField:
    """``F_eps``: advection replaced by ``J_eps[u.grad(J_eps sigma)]``.

    ``epsilon = 0`` is exactly :func:`rhs_F`; otherwise ``epsilon`` must
    exceed twice the grid spacing.
    """
    _check_sym(sigma)
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    F, _, _ = evaluate_rhs(sigma.values, sigma.grid, params, epsilon)
    return SymTensorField(sigma.grid, F)


def make_rhs(params: PhysicalParams, epsilon: float = 0.0) -> Callable[[SymTensorField], SymTensorField]:
    """Select ``F`` (``epsilon = 0``) or ``F_eps`` as a callable for :func:`step_rk4`."""
    if epsilon:
        return lambda s: rhs_F_mollified(s, params, epsilon)
    return lambda s: rhs_F(s, params)


def _rk4_arrays(sig, dt, f, k1=None):
    def finite(a):
        if not np.all(np.isfinite(a)):
            raise StepFailure("non-finite value in Runge-Kutta stage")
        return a

    k1 = finite(f(sig) if k1 is None else k1)
    k2 = finite(f(sig + 0.5 * dt * k1))
    k3 = finite(f(sig + 0.5 * dt * k2))
    k4 = finite(f(sig + dt * k3))
    return finite(sig + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def step_rk4(
    sigma: SymTensorField, dt: float, rhs: Callable[[SymTensorField], SymTensorField]
) -> SymTensorField:
    """One classical RK4 step of size ``dt >= 0``.

    Raises
    ------
    StepFailure
        If any stage overflows or produces NaN.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return SymTensorField(sigma.grid, sigma.values.copy())
    grid = sigma.grid

    def f(a):
        with np.errstate(all="ignore"):
            try:
                return rhs(SymTensorField(grid, a)).values
            except ValueError as exc:  # non-finite stage input
                raise StepFailure(str(exc)) from exc

    with np.errstate(all="ignore"):
        out = _rk4_arrays(sigma.values, dt, f)
    return SymTensorField(grid, out)


@dataclass
class StepInfo:
    """What the monitor sees after each accepted step (and once at the start)."""

    step: int
    t: float
    dt_used: float
    sigma: np.ndarray
    F: np.ndarray
    aux: RhsAux


@dataclass
class IntegrationOutcome:
    state: SymTensorField
    status: Status
    t: float
    steps: int
    max_asymmetry: float


Monitor = Callable[[StepInfo], Optional[bool]]


def integrate(
    sigma0: SymTensorField,
    params: PhysicalParams,
    ts: TimeStepperConfig,
    monitor: Monitor | None = None,
    *,
    t0: float = 0.0,
    reverse: bool = False,
) -> IntegrationOutcome:
    """Advance ``sigma0`` from ``t0`` to ``ts.t_end``.

    Parameters
    ----------
    monitor : callable, optional
        Called with a :class:`StepInfo` at ``t0`` and after every step.  A
        truthy return value stops the run as ``blowup_suspected``.
    reverse : bool
        Integrate ``d sigma/ds = -F(sigma)`` instead, i.e. run the dynamics
        backwards for ``ts.t_end - t0`` time units.

    Returns
    -------
    IntegrationOutcome
        Final (last finite) state, status and the time reached.  Numerical
        divergence is reported through ``status``, never raised.
    """
    _check_sym(sigma0)
    grid = sigma0.grid
    sign = -1.0 if reverse else 1.0
    eps = ts.mollify_epsilon
    max_asym = 0.0

    def f_aux(a):
        nonlocal max_asym
        F, asym, aux = evaluate_rhs(a, grid, params, eps)
        max_asym = max(max_asym, asym)
        return (F if sign > 0 else -F), aux

    def f(a):
        return f_aux(a)[0]

    sig = sigma0.values.copy()
    t = float(t0)
    steps = 0
    status = Status.COMPLETED
    with np.errstate(all="ignore"):
        F, aux = f_aux(sig)
    if monitor is not None and monitor(StepInfo(0, t, 0.0, sig, F, aux)):
        return IntegrationOutcome(SymTensorField(grid, sig), Status.BLOWUP_SUSPECTED, t, 0, max_asym)

    while ts.t_end - t > 1e-9 * ts.dt:
        if ts.adaptive:
            lim = min(
                grid.spacing / aux.linf_u if aux.linf_u > 0 else math.inf,
                1.0 / aux.linf_gradu if aux.linf_gradu > 0 else math.inf,
            )
            dt = min(max(ts.cfl_safety * lim, ts.dt_min), ts.dt)
        else:
            dt = ts.dt
        dt = min(dt, ts.t_end - t)
        try:
            with np.errstate(all="ignore"):
                new = _rk4_arrays(sig, dt, f, k1=F)
                F, aux = f_aux(new)
            if not np.all(np.isfinite(F)):
                raise StepFailure("non-finite right-hand side")
        except StepFailure:
            status = Status.STEP_FAILED
            break
        sig = new
        t += dt
        steps += 1
        if monitor is not None and monitor(StepInfo(steps, t, dt, sig, F, aux)):
            status = Status.BLOWUP_SUSPECTED
            break
    return IntegrationOutcome(SymTensorField(grid, sig), status, t, steps, max_asym)


def sym_inner(a: np.ndarray, b: np.ndarray, grid: Grid) -> float:
    """Grid-quadrature ``L2`` inner product of packed symmetric tensors."""
    return float(np.einsum("c,cxyz,cxyz->", SYM_WEIGHTS, a, b) * grid.cell_volume)


def rhs_terms(
    sig: np.ndarray, grid: Grid, params: PhysicalParams, epsilon: float = 0.0
) -> dict[str, np.ndarray]:
    """The four pieces of ``F`` as packed arrays.

    ``F = -advection + stretching - relaxation + forcing``, each formed exactly
    as in :func:`evaluate_rhs` (same dealiasing, same mollification).
    """
    n = grid.n
    mask = grid.dealias_mask
    k = grid.k_deriv
    sh = rfft3(sig)
    u_hat, g_hat = stokes_hat(sh, grid, params.nu_s)
    shm = sh * mask
    ud = irfft3(u_hat * mask, n)
    gd = irfft3(g_hat * mask, n)
    sd = expand_symmetric(irfft3(shm, n))
    J = mollifier_multiplier(grid, float(epsilon)) if epsilon > 0 else 1.0
    base = shm * J
    adv = np.zeros_like(sig)
    for a in range(3):
        adv += ud[a] * irfft3(1j * k[a] * base, n)
    stretch = np.einsum("ki...,kj...->ij...", gd, sd) + np.einsum("ik...,kj...->ij...", sd, gd)
    return {
        "advection": irfft3(rfft3(adv) * J * mask, n),
        "stretching": irfft3(rfft3(pack_symmetric(stretch)) * mask, n),
        "relaxation": params.relaxation_rate * sig,
        "forcing": params.forcing_coefficient
        * irfft3(pack_symmetric(g_hat + np.swapaxes(g_hat, 0, 1)), n),
    }
