"""Initial stress fields."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .grid import SYM_WEIGHTS, Grid, SymTensorField, pack_symmetric, rfft3
from .inequalities import RandomFieldSpec, random_field
from .norms import DEFAULT_SOBOLEV_M, spectral_norm

#: fixed symmetric direction tensor of the Gaussian bump
BUMP_DIRECTION = np.array(
    [
        [1.0, 0.3, -0.2],
        [0.3, -0.5, 0.4],
        [-0.2, 0.4, 0.7],
    ]
)


def single_mode(grid: Grid, amplitude: float = 1.0, wavevector: Sequence[int] = (1, 0, 0)) -> SymTensorField:
    """``sigma_12 = sigma_21 = A sin(k . x)``, zero elsewhere."""
    k = np.asarray(wavevector, dtype=float) * (2 * np.pi / grid.length)
    x, y, z = grid.mesh()
    values = np.zeros((6, *grid.shape))
    values[3] = amplitude * np.sin(k[0] * x + k[1] * y + k[2] * z)
    return SymTensorField(grid, values)


def gaussian_bump(
    grid: Grid,
    amplitude: float = 1.0,
    radius: float = 0.5,
    center: Sequence[float] | None = None,
) -> SymTensorField:
    """``A exp(-|x - c|^2 / r^2) D`` with the fixed direction tensor ``D``.

    Distances use the minimum periodic image, so the bump wraps cleanly.
    The default centre is the box centre.
    """
    L = grid.length
    c = np.full(3, L / 2) if center is None else np.asarray(center, dtype=float)
    r2 = np.zeros(grid.shape)
    for axis, coord in enumerate(grid.mesh()):
        d = coord - c[axis]
        d = d - L * np.round(d / L)
        r2 = r2 + d * d
    profile = amplitude * np.exp(-r2 / radius**2)
    full = BUMP_DIRECTION[:, :, None, None, None] * profile
    return SymTensorField(grid, pack_symmetric(full))


def random_band(
    grid: Grid,
    seed: int = 0,
    band_limit: int | None = None,
    target_norm: float = 1.0,
    m: int = DEFAULT_SOBOLEV_M,
) -> SymTensorField:
    """Seeded band-limited symmetric stress with ``||sigma||_m = target_norm``."""
    spec = RandomFieldSpec(seed=seed, band_limit=band_limit, rank="sym_tensor")
    values = random_field(grid, spec).values
    norm = spectral_norm(rfft3(values), grid, SYM_WEIGHTS, m)
    if norm > 0:
        values = values * (target_norm / norm)
    return SymTensorField(grid, values)


def from_config(grid: Grid, ic, m: int = DEFAULT_SOBOLEV_M) -> SymTensorField:
    """Build the field described by an :class:`~obkm.config.ICConfig`."""
    if ic.kind == "single_mode":
        return single_mode(grid, ic.amplitude, ic.wavevector)
    if ic.kind == "gaussian_bump":
        return gaussian_bump(grid, ic.amplitude, ic.radius, ic.center)
    if ic.kind == "random_band":
        target = ic.amplitude if ic.target_norm is None else ic.target_norm
        return random_band(grid, ic.seed, ic.band_limit, target, m)
    raise ValueError(f"unknown initial condition kind {ic.kind!r}")
