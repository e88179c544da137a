"""Creeping-flow velocity from the polymer stress.

Two routes are provided.  :func:`solve_stokes_spectral` is the periodic
Fourier solve used by the time stepper.  The free-space singular-kernel
representation (:func:`velocity_freespace`, :func:`gradvel_freespace`) is an
independent check on compactly supported data.

Convention: ``gradu[i, j] = d u_j / d x_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import ndimage
from scipy.stats import qmc

from .grid import (
    Grid,
    SymTensorField,
    TensorField,
    VectorField,
    expand_symmetric,
    irfft3,
    resample,
    rfft3,
)
from .norms import pointwise_magnitude

__all__ = [
    "StokesParams",
    "PVQuadratureSpec",
    "solve_stokes_spectral",
    "eval_kernel_M1",
    "eval_kernel_M2",
    "kernel_sphere_average",
    "kernel_sphere_average_all",
    "SphereAverage",
    "CompactStress",
    "SupportError",
    "gradvel_freespace",
    "velocity_freespace",
    "freespace_tail_bound",
    "padded_spectral_reference",
]


@dataclass(frozen=True)
class StokesParams:
    """Solvent viscosity ``nu_s > 0``."""

    nu_s: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.nu_s) and self.nu_s > 0):
            raise ValueError(f"nu_s must be positive, got {self.nu_s}")


# --------------------------------------------------------------------------
# spectral path


def stokes_hat(sigma_hat: np.ndarray, grid: Grid, nu_s: float) -> tuple[np.ndarray, np.ndarray]:
    """Velocity and velocity-gradient coefficients from packed stress coefficients.

    Returns ``u_hat`` with shape ``(3, ...)`` and ``gradu_hat`` with shape
    ``(3, 3, ...)`` where ``gradu_hat[i, j] = i k_i u_hat[j]``.
    """
    k = grid.k_deriv
    k2 = grid.k_squared
    full = expand_symmetric(sigma_hat)
    force = [1j * (k[0] * full[0, j] + k[1] * full[1, j] + k[2] * full[2, j]) for j in range(3)]
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    kf = (k[0] * force[0] + k[1] * force[1] + k[2] * force[2]) * inv
    u_hat = np.empty((3, *grid.spectral_shape), dtype=complex)
    for j in range(3):
        u_hat[j] = (force[j] - k[j] * kf) * inv / nu_s
    grad_hat = np.empty((3, 3, *grid.spectral_shape), dtype=complex)
    for i in range(3):
        grad_hat[i] = 1j * k[i] * u_hat
    return u_hat, grad_hat


def solve_stokes_spectral(
    sigma: SymTensorField, params: StokesParams | float = StokesParams()
) -> tuple[VectorField, TensorField]:
    """Solve ``0 = -grad p + nu_s lap u + div sigma``, ``div u = 0`` on the torus.

    The mean of ``u`` is fixed to zero.

    Parameters
    ----------
    sigma : SymTensorField
        Polymer stress.
    params : StokesParams or float
        Solvent viscosity.

    Returns
    -------
    u : VectorField
    gradu : TensorField
        ``gradu[i, j] = d u_j / d x_i``.
    """
    nu = params.nu_s if isinstance(params, StokesParams) else StokesParams(float(params)).nu_s
    grid = sigma.grid
    u_hat, g_hat = stokes_hat(rfft3(sigma.values), grid, nu)
    u = irfft3(u_hat, grid.n)
    g = irfft3(g_hat.reshape(9, *grid.spectral_shape), grid.n)
    return VectorField(grid, u), TensorField(grid, g)


# --------------------------------------------------------------------------
# kernels


def _as_points(y) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != 3:
        raise ValueError("points must have a trailing axis of length 3")
    r = np.linalg.norm(y, axis=-1)
    if np.any(r == 0):
        raise ValueError("kernel is singular at y = 0")
    return y, r


def eval_kernel_M1(y) -> np.ndarray:
    """``M1_jkl(y) = -y_j d_kl/|y|^3 + 3 y_j y_k y_l/|y|^5``.

    Accepts a single point or an array of points with a trailing axis of 3;
    the tensor indices come last.  Homogeneous of degree -2.
    """
    y, r = _as_points(y)
    eye = np.eye(3)
    r = r[..., None, None, None]
    yj = y[..., :, None, None]
    yk = y[..., None, :, None]
    yl = y[..., None, None, :]
    return -yj * eye / r**3 + 3.0 * yj * yk * yl / r**5


def eval_kernel_M2(y, symmetrize: bool = False) -> np.ndarray:
    """Degree -3 kernel of the velocity-gradient representation.

    ``M2_ijkl = d_ij d_kl/r^3 - 3(y_i y_j d_kl + 2 y_j y_l d_ki + d_ij y_k y_l)/r^5
    + 15 y_i y_j y_k y_l/r^7``.

    Parameters
    ----------
    y : array_like
        Point(s), trailing axis of length 3.
    symmetrize : bool
        Average over ``(k, l)``.  The kernel only ever contracts against a
        symmetric stress, and it is this symmetric part whose mean over the
        unit sphere vanishes.
    """
    y, r = _as_points(y)
    d = np.eye(3)
    r = r[..., None, None, None, None]
    yi = y[..., :, None, None, None]
    yj = y[..., None, :, None, None]
    yk = y[..., None, None, :, None]
    yl = y[..., None, None, None, :]
    d_ij = d[:, :, None, None]
    d_kl = d[None, None, :, :]
    d_ki = d.T[:, None, :, None]
    out = (
        d_ij * d_kl / r**3
        - 3.0 * (yi * yj * d_kl + 2.0 * yj * yl * d_ki + d_ij * yk * yl) / r**5
        + 15.0 * yi * yj * yk * yl / r**7
    )
    if symmetrize:
        out = 0.5 * (out + np.swapaxes(out, -1, -2))
    return out


def _m2_contract(yhat: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``M2(yhat):sigma`` on unit directions.

    ``yhat`` has shape ``(N, 3)``; ``s`` is a full stress ``(3, 3, N)``.
    Returns ``(3, 3, N)``.
    """
    y = yhat.T
    tr = s[0, 0] + s[1, 1] + s[2, 2]
    sy = np.einsum("klN,lN->kN", s, y)
    ysy = np.einsum("kN,kN->N", y, sy)
    eye = np.eye(3)[:, :, None]
    yy = y[:, None, :] * y[None, :, :]
    return eye * (tr - 3.0 * ysy) - 3.0 * yy * tr - 6.0 * sy[:, None, :] * y[None, :, :] + 15.0 * yy * ysy


def _m1_contract(yhat: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``M1(yhat):sigma`` on unit directions, shape ``(3, N)``."""
    y = yhat.T
    tr = s[0, 0] + s[1, 1] + s[2, 2]
    ysy = np.einsum("kN,klN,lN->N", y, s, y)
    return y * (3.0 * ysy - tr)


class SphereAverage(NamedTuple):
    mean: float
    stderr: float
    max_abs: float


def kernel_sphere_average(
    component: Sequence[int],
    n_samples: int = 1 << 20,
    *,
    seed: int = 0,
    method: str = "qmc",
    symmetrize: bool = True,
) -> SphereAverage:
    """Sample mean of one ``M2`` component over the unit sphere.

    Parameters
    ----------
    component : 4 ints
        Zero-based ``(i, j, k, l)``.
    n_samples : int
        At least ``10**4``.  Rounded up to a power of two for ``"qmc"``.
    method : {"qmc", "mc", "antipodal"}
        Scrambled Sobol points, plain pseudo-random points, or pseudo-random
        antipodal pairs.
    symmetrize : bool
        Use the ``(k, l)``-symmetrised kernel.

    Returns
    -------
    SphereAverage
        Mean, the naive standard error ``std/sqrt(N)`` and the largest
        sampled magnitude.
    """
    i, j, k, l = (int(c) for c in component)
    res = kernel_sphere_average_all(n_samples, seed=seed, method=method, symmetrize=symmetrize)
    return SphereAverage(
        float(res.mean[i, j, k, l]), float(res.stderr[i, j, k, l]), float(res.max_abs[i, j, k, l])
    )


def _sphere_points(n_samples: int, seed: int, method: str) -> np.ndarray:
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 1e4")
    rng = np.random.default_rng(seed)
    if method == "qmc":
        m = int(np.ceil(np.log2(n_samples)))
        uv = qmc.Sobol(d=2, scramble=True, seed=rng).random_base2(m)
    elif method in ("mc", "antipodal"):
        count = n_samples // 2 if method == "antipodal" else n_samples
        uv = rng.random((count, 2))
    else:
        raise ValueError(f"unknown method {method!r}")
    # uniform on the sphere: z uniform in [-1, 1], azimuth uniform
    z = 2.0 * uv[:, 0] - 1.0
    phi = 2.0 * np.pi * uv[:, 1]
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
    if method == "antipodal":
        pts = np.concatenate([pts, -pts])
    return pts


def kernel_sphere_average_all(
    n_samples: int = 1 << 20, *, seed: int = 0, method: str = "qmc", symmetrize: bool = True
) -> SphereAverage:
    """:func:`kernel_sphere_average` for all 81 components at once.

    Fields of the result are ``(3, 3, 3, 3)`` arrays.
    """
    pts = _sphere_points(n_samples, seed, method)
    total = np.zeros((3, 3, 3, 3))
    total_sq = np.zeros((3, 3, 3, 3))
    peak = np.zeros((3, 3, 3, 3))
    for start in range(0, len(pts), 1 << 16):
        block = eval_kernel_M2(pts[start : start + (1 << 16)], symmetrize=symmetrize)
        total += block.sum(axis=0)
        total_sq += (block * block).sum(axis=0)
        peak = np.maximum(peak, np.abs(block).max(axis=0))
    N = len(pts)
    mean = total / N
    var = np.maximum(total_sq / N - mean * mean, 0.0)
    return SphereAverage(mean, np.sqrt(var / N), peak)


# --------------------------------------------------------------------------
# free-space path


@dataclass(frozen=True)
class PVQuadratureSpec:
    """Radii and resolution of the principal-value quadrature.

    Attributes
    ----------
    inner_radius : float
        ``eps_cut``; inside it the local stress is subtracted.
    outer_radius : float
        ``R_max``; the integral is truncated beyond it.
    points_per_axis : int
        Gauss nodes per radial segment and in ``cos(theta)``; the azimuth uses
        twice as many trapezoid nodes.
    """

    inner_radius: float = 0.25
    outer_radius: float = np.pi
    points_per_axis: int = 32

    def __post_init__(self) -> None:
        if not 0 < self.inner_radius < self.outer_radius:
            raise ValueError("need 0 < inner_radius < outer_radius")
        if self.points_per_axis < 4:
            raise ValueError("points_per_axis must be at least 4")


class SupportError(ValueError):
    """Raised when the stress is not compactly supported inside the box."""


@lru_cache(maxsize=8)
def _sphere_rule(p: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(p)
    phi = 2.0 * np.pi * np.arange(2 * p) / (2 * p)
    ct = np.repeat(x, 2 * p)
    st = np.sqrt(1.0 - ct**2)
    ph = np.tile(phi, p)
    dirs = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1)
    weights = np.repeat(w, 2 * p) * (np.pi / p)
    return dirs, weights


def _radial_rule(a: float, b: float, p: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(p)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


class CompactStress:
    """Continuous, compactly supported extension of a gridded stress.

    The gridded field is interpolated (spectral upsampling followed by cubic
    splines) inside the periodic cell centred on ``center`` and taken to be
    zero outside it.

    Parameters
    ----------
    sigma : SymTensorField
    center : 3 floats, optional
        Support centre; defaults to the grid point of peak magnitude.
    support_tol : float
        Largest allowed magnitude, relative to the peak, at periodic distance
        ``>= length/4`` from the centre.
    oversample : int
        Spectral upsampling factor before spline interpolation.
    """

    def __init__(
        self,
        sigma: SymTensorField,
        center: Sequence[float] | None = None,
        support_tol: float = 1e-4,
        oversample: int = 4,
    ) -> None:
        grid = sigma.grid
        self.grid = grid
        mag = pointwise_magnitude(sigma.values, sigma.component_weights)
        peak = float(mag.max())
        if center is None:
            idx = np.unravel_index(int(np.argmax(mag)), mag.shape)
            center = [i * grid.spacing for i in idx]
        self.center = np.asarray(center, dtype=float)
        self.peak = peak
        if peak > 0:
            d2 = 0.0
            for ax, x in enumerate(grid.mesh()):
                d = np.abs(x - self.center[ax]) % grid.length
                d2 = d2 + np.minimum(d, grid.length - d) ** 2
            far = mag[np.broadcast_to(np.sqrt(d2) >= grid.length / 4, mag.shape)]
            outside = float(far.max(initial=0.0))
            if outside > support_tol * peak:
                raise SupportError(
                    f"stress is not compactly supported: {outside:.3e} of peak {peak:.3e} "
                    f"beyond distance length/4 (tolerance {support_tol:g})"
                )
        self.zero = peak == 0
        if not self.zero:
            nf = grid.n * int(oversample)
            fine = resample(sigma.values, nf)
            self._coef = np.stack(
                [ndimage.spline_filter(c, order=3, mode="grid-wrap") for c in fine]
            )
            self._h = grid.length / nf

    def full_at(self, points: np.ndarray) -> np.ndarray:
        """Full stress ``(3, 3, N)`` at absolute points ``(N, 3)``."""
        points = np.asarray(points, dtype=float)
        n_pts = points.shape[0]
        if self.zero:
            return np.zeros((3, 3, n_pts))
        L = self.grid.length
        inside = np.all(np.abs(points - self.center) < L / 2, axis=1)
        coords = (np.mod(points, L) / self._h).T
        packed = np.zeros((6, n_pts))
        if inside.any():
            sub = coords[:, inside]
            for c in range(6):
                packed[c, inside] = ndimage.map_coordinates(
                    self._coef[c], sub, order=3, mode="grid-wrap", prefilter=False
                )
        return expand_symmetric(packed)


def _as_compact(sigma, **kwargs) -> CompactStress:
    return sigma if isinstance(sigma, CompactStress) else CompactStress(sigma, **kwargs)


def _nu(params) -> float:
    return params.nu_s if isinstance(params, StokesParams) else StokesParams(float(params)).nu_s


def gradvel_freespace(
    sigma: SymTensorField | CompactStress,
    x: Sequence[float],
    params: StokesParams | float = StokesParams(),
    spec: PVQuadratureSpec = PVQuadratureSpec(),
) -> np.ndarray:
    """Velocity gradient from the free-space principal-value representation.

    ``grad u(x) = -(sigma(x) - I tr sigma(x)/3)/(5 nu_s)
    + PV int M2(y):sigma(x-y) dy / (8 pi nu_s)``.

    The PV integral is split at ``spec.inner_radius``: the inner ball
    integrates ``M2(y):(sigma(x-y) - sigma(x))``, which is legitimate because
    the kernel has zero spherical mean, and the annulus out to
    ``spec.outer_radius`` integrates ``M2(y):sigma(x-y)``.  Both use a
    Gauss product rule in spherical coordinates.

    Raises
    ------
    SupportError
        If the stress is not compactly supported (see :class:`CompactStress`).
    """
    field = _as_compact(sigma)
    nu = _nu(params)
    x = np.asarray(x, dtype=float)
    if field.zero:
        return np.zeros((3, 3))
    s0 = field.full_at(x[None, :])[:, :, 0]
    dirs, wang = _sphere_rule(spec.points_per_axis)
    total = np.zeros((3, 3))
    p = spec.points_per_axis
    for a, b, subtract in (
        (0.0, spec.inner_radius, True),
        (spec.inner_radius, spec.outer_radius, False),
    ):
        rr, wr = _radial_rule(a, b, p)
        for r, w in zip(rr, wr):
            s = field.full_at(x[None, :] - r * dirs)
            if subtract:
                s = s - s0[:, :, None]
            # r^2 dr from the volume element against the r^-3 kernel
            total += (w / r) * (_m2_contract(dirs, s) @ wang)
    local = -(s0 - np.eye(3) * np.trace(s0) / 3.0) / (5.0 * nu)
    return local + total / (8.0 * np.pi * nu)


def velocity_freespace(
    sigma: SymTensorField | CompactStress,
    x: Sequence[float],
    params: StokesParams | float = StokesParams(),
    spec: PVQuadratureSpec = PVQuadratureSpec(),
) -> np.ndarray:
    """Velocity from the free-space kernel representation.

    The convolution that reproduces the Stokes solution is
    ``u(x) = -(1/(8 pi nu_s)) int M1(y):sigma(x-y) dy`` with ``M1`` as
    returned by :func:`eval_kernel_M1`; the sign was fixed by direct
    comparison with the spectral solve (and by differentiating the Stokeslet).
    The integrand is only ``|y|^-2`` singular, so no subtraction is needed.
    """
    field = _as_compact(sigma)
    nu = _nu(params)
    x = np.asarray(x, dtype=float)
    if field.zero:
        return np.zeros(3)
    dirs, wang = _sphere_rule(spec.points_per_axis)
    total = np.zeros(3)
    p = spec.points_per_axis
    for a, b in ((0.0, spec.inner_radius), (spec.inner_radius, spec.outer_radius)):
        rr, wr = _radial_rule(a, b, p)
        for r, w in zip(rr, wr):
            s = field.full_at(x[None, :] - r * dirs)
            total += w * (_m1_contract(dirs, s) @ wang)
    return -total / (8.0 * np.pi * nu)


@lru_cache(maxsize=1)
def _m2_sphere_energy() -> float:
    """``int_{S^2} |M2(yhat)|^2 dOmega`` with ``M2`` viewed as a 9x9 matrix."""
    dirs, w = _sphere_rule(48)
    m2 = eval_kernel_M2(dirs, symmetrize=True)
    return float(np.einsum("nijkl,nijkl,n->", m2, m2, w))


def freespace_tail_bound(outer_radius: float, sigma_l2: float, params=StokesParams()) -> float:
    """Cauchy-Schwarz bound on the kernel integral over ``|y| > outer_radius``.

    ``|int_{|y|>R} M2:sigma| <= sqrt(A / (3 R^3)) ||sigma||_0`` with ``A`` the
    spherical integral of ``|M2|^2``, divided by ``8 pi nu_s``.
    """
    return float(
        np.sqrt(_m2_sphere_energy() / (3.0 * outer_radius**3)) * sigma_l2 / (8.0 * np.pi * _nu(params))
    )


def _evaluate_rfft(coef: np.ndarray, grid: Grid, points: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant of rfft coefficients ``(C, ...)`` at ``(N, 3)`` points."""
    k = [kk.ravel() * (2.0 * np.pi / grid.length) for kk in grid._k_int_rfft]
    w = np.broadcast_to(grid.parseval_weights, grid.spectral_shape)
    flat = coef.reshape(coef.shape[0], -1) * w.ravel()
    out = np.empty((coef.shape[0], len(points)))
    kx, ky, kz = np.meshgrid(k[0], k[1], k[2], indexing="ij")
    kx, ky, kz = kx.ravel(), ky.ravel(), kz.ravel()
    for p, x in enumerate(points):
        phase = np.exp(1j * (kx * x[0] + ky * x[1] + kz * x[2]))
        out[:, p] = (flat @ phase).real
    return out


def padded_spectral_reference(
    sigma: SymTensorField,
    points: Sequence[Sequence[float]],
    params: StokesParams | float = StokesParams(),
    center: Sequence[float] | None = None,
    pad: int = 2,
) -> tuple[np.ndarray, np.ndarray]:
    """Spectral velocity and gradient of the stress with its periodic images removed.

    The periodic cell centred on the support is embedded in a zero-filled box
    ``pad`` times larger (same spacing) and solved spectrally there.  This is
    the reference the free-space quadrature should reproduce.

    Returns
    -------
    u : ndarray, shape (N, 3)
    gradu : ndarray, shape (N, 3, 3)
    """
    grid = sigma.grid
    n = grid.n
    if center is None:
        mag = pointwise_magnitude(sigma.values, sigma.component_weights)
        jc = np.array(np.unravel_index(int(np.argmax(mag)), mag.shape))
    else:
        jc = np.rint(np.asarray(center) / grid.spacing).astype(int)
    big = Grid(pad * n, pad * grid.length)
    # window of n points centred on jc, placed in the middle of the big box
    rolled = np.roll(sigma.values, shift=tuple(n // 2 - jc), axis=(1, 2, 3))
    values = np.zeros((6, *big.shape))
    off = (pad * n - n) // 2
    values[:, off : off + n, off : off + n, off : off + n] = rolled
    origin = (jc - n // 2 - off) * grid.spacing
    u_hat, g_hat = stokes_hat(rfft3(values), big, _nu(params))
    local = np.asarray(points, dtype=float) - origin
    u = _evaluate_rfft(u_hat, big, local).T
    g = _evaluate_rfft(g_hat.reshape(9, *big.spectral_shape), big, local).T.reshape(-1, 3, 3)
    return u, g
