"""Sobolev, Lebesgue and supremum norms, and the mollifier ``J_eps``.

All norms integrate over the periodic box.  Tensor-valued fields use the
pointwise Frobenius magnitude, so the off-diagonal entries of a packed
symmetric tensor count twice.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import (
    Field,
    Grid,
    multi_indices,
    rfft3,
    irfft3,
)

__all__ = [
    "DEFAULT_SOBOLEV_M",
    "hm_norm",
    "hm_inner",
    "lp_norm",
    "linf_norm",
    "MollifierSpec",
    "make_mollifier",
    "mollify",
    "mollifier_multiplier",
    "bump",
]

DEFAULT_SOBOLEV_M = 3


def _check_m(m: int) -> int:
    if isinstance(m, bool) or int(m) != m or m < 0:
        raise ValueError(f"Sobolev index must be a nonnegative integer, got {m}")
    return int(m)


@lru_cache(maxsize=64)
def sobolev_weight(grid: Grid, m: int) -> np.ndarray:
    """Spectral weight ``sum_{|a|<=m} prod_i k_i^(2 a_i)`` in rfft layout."""
    kx2, ky2, kz2 = (k**2 for k in grid.k_deriv)
    w = np.zeros(grid.spectral_shape)
    for order in range(m + 1):
        for a in multi_indices(order):
            w = w + kx2 ** a[0] * ky2 ** a[1] * kz2 ** a[2]
    w.setflags(write=False)
    return w


def spectral_inner(
    a_hat: np.ndarray, b_hat: np.ndarray, grid: Grid, weights: np.ndarray, m: int = 0
) -> float:
    """``sum_c w_c <D^a a_c, D^a b_c>`` summed over ``|a| <= m``, via Parseval."""
    w = sobolev_weight(grid, m) * grid.parseval_weights
    prod = (a_hat * np.conj(b_hat)).real
    per_comp = np.einsum("cxyz,xyz->c", prod, w)
    return float(grid.volume * np.dot(weights, per_comp))


def spectral_norm(a_hat: np.ndarray, grid: Grid, weights: np.ndarray, m: int = 0) -> float:
    """Sobolev norm from packed coefficients (see :func:`hm_norm`)."""
    w = sobolev_weight(grid, m) * grid.parseval_weights
    per_comp = np.einsum("cxyz,xyz->c", a_hat.real**2 + a_hat.imag**2, w)
    return float(np.sqrt(max(grid.volume * np.dot(weights, per_comp), 0.0)))


def hm_norm(f: Field, m: int = DEFAULT_SOBOLEV_M) -> float:
    """Sobolev norm ``(sum_{|a|<=m} ||D^a f||_0^2)^(1/2)``.

    Parameters
    ----------
    f : Field
        Any field; tensor components are weighted by their multiplicity.
    m : int
        Highest derivative order.  ``m = 0`` gives the L2 norm.

    Returns
    -------
    float
        The norm, evaluated exactly on the trigonometric interpolant.
    """
    m = _check_m(m)
    return spectral_norm(rfft3(f.values), f.grid, f.component_weights, m)


def hm_inner(f: Field, g: Field, m: int = 0) -> float:
    """Sobolev inner product matching :func:`hm_norm`."""
    m = _check_m(m)
    if f.grid != g.grid or f.values.shape != g.values.shape:
        raise ValueError("fields must share grid and rank")
    return spectral_inner(rfft3(f.values), rfft3(g.values), f.grid, f.component_weights, m)


def pointwise_magnitude(values: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Frobenius magnitude over the leading component axis."""
    scale = float(np.abs(values).max(initial=0.0))
    if scale == 0.0 or not np.isfinite(scale):
        scale = 1.0
    v = values / scale
    if weights is None:
        return scale * np.sqrt(np.einsum("c...,c...->...", v, v))
    return scale * np.sqrt(np.einsum("c,c...->...", weights, v * v))


def lp_array_norm(values: np.ndarray, cell_volume: float, p: float, weights=None) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mag = pointwise_magnitude(values, weights)
    peak = float(mag.max(initial=0.0))
    if peak == 0.0:
        return 0.0
    # scale out the peak so large p does not overflow
    return peak * float(np.sum((mag / peak) ** p) * cell_volume) ** (1.0 / p)


def lp_norm(f: Field, p: float) -> float:
    """Grid-quadrature ``L^p`` norm, ``(sum |f|^p h^3)^(1/p)`` for ``p >= 1``."""
    return lp_array_norm(f.values, f.grid.cell_volume, p, f.component_weights)


def linf_norm(f: Field) -> float:
    """Largest pointwise magnitude over the grid samples.

    Under-resolved fields under-report their true supremum.
    """
    return float(pointwise_magnitude(f.values, f.component_weights).max(initial=0.0))


# --------------------------------------------------------------------------
# mollifier


def bump(r: np.ndarray) -> np.ndarray:
    """Unnormalised radial bump ``exp(-1/(1-r^2))`` on ``r < 1``, zero elsewhere."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class MollifierSpec:
    """Mollification radius and the grid normalisation of its bump.

    Attributes
    ----------
    epsilon : float
        Support radius of ``phi_eps``.
    bump_normalization : float
        Constant ``c`` with ``h^3 sum_x c eps^-3 phi(x/eps) = 1`` on the grid
        the spec was built for.
    """

    epsilon: float
    bump_normalization: float = float("nan")

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def _check_resolvable(grid: Grid, epsilon: float) -> None:
    if epsilon <= 2.0 * grid.spacing:
        raise ValueError(
            f"epsilon={epsilon} is not resolved: need epsilon > 2*spacing = {2 * grid.spacing}"
        )
    if epsilon >= grid.length / 2:
        raise ValueError(f"epsilon={epsilon} must be below half the box length {grid.length / 2}")


def _sampled_bump(grid: Grid, epsilon: float) -> np.ndarray:
    d = np.minimum(grid.coordinates, grid.length - grid.coordinates)
    r2 = d[:, None, None] ** 2 + d[None, :, None] ** 2 + d[None, None, :] ** 2
    return bump(np.sqrt(r2) / epsilon) / epsilon**3


def make_mollifier(grid: Grid, epsilon: float) -> MollifierSpec:
    """Mollifier spec for ``grid``; rejects ``epsilon <= 2*spacing``."""
    _check_resolvable(grid, epsilon)
    mass = float(_sampled_bump(grid, epsilon).sum()) * grid.cell_volume
    return MollifierSpec(float(epsilon), 1.0 / mass)


@lru_cache(maxsize=32)
def mollifier_multiplier(grid: Grid, epsilon: float) -> np.ndarray:
    """Real spectral multiplier of ``J_eps`` (rfft layout), unit at ``k = 0``."""
    _check_resolvable(grid, epsilon)
    phi = _sampled_bump(grid, epsilon)
    phi /= phi.sum()
    # phi is even under x -> -x on the grid, so its transform is real
    mult = np.ascontiguousarray(rfft3(phi).real * grid.n**3)
    mult.setflags(write=False)
    return mult


def mollify(f: Field, spec: MollifierSpec | float) -> Field:
    """Periodic convolution ``J_eps f`` with the normalised grid bump."""
    eps = spec.epsilon if isinstance(spec, MollifierSpec) else float(spec)
    mult = mollifier_multiplier(f.grid, eps)
    return type(f)(f.grid, irfft3(rfft3(f.values) * mult, f.grid.n))
