"""Periodic grid, field containers and exact spectral operators.

Physical samples are stored component-major: a field with ``c`` components
on an ``n``-point grid has ``values.shape == (c, n, n, n)`` and axis ``1``
is ``x1``.  Spectral coefficients use the real-to-complex layout of
``scipy.fft.rfftn`` over the last three axes, normalised so that the
coefficient of ``exp(i k.x)`` is returned directly (a constant ``c`` maps to
a single ``k = 0`` coefficient equal to ``c``).
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar, Sequence

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "make_grid",
    "Field",
    "ScalarField",
    "VectorField",
    "TensorField",
    "SymTensorField",
    "SpectralField",
    "SYM_PAIRS",
    "SYM_WEIGHTS",
    "forward_transform",
    "inverse_transform",
    "spectral_derivative",
    "divergence_sym_tensor",
    "multi_indices",
]

#: Storage order of the six independent components of a symmetric tensor.
SYM_PAIRS: tuple[tuple[int, int], ...] = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
#: Multiplicity of each stored component in the full 3x3 tensor.
SYM_WEIGHTS = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])

_SYM_INDEX = np.empty((3, 3), dtype=int)
for _c, (_i, _j) in enumerate(SYM_PAIRS):
    _SYM_INDEX[_i, _j] = _SYM_INDEX[_j, _i] = _c


def fft_workers() -> int:
    """Thread count for transforms, read from ``OBKM_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("OBKM_THREADS", "1")))
    except ValueError:
        return 1


def rfft3(a: np.ndarray) -> np.ndarray:
    """Forward transform over the trailing three axes."""
    return sfft.rfftn(a, axes=(-3, -2, -1), norm="forward", workers=fft_workers())


def irfft3(a: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`rfft3` for an ``n``-point grid."""
    return sfft.irfftn(a, s=(n, n, n), axes=(-3, -2, -1), norm="forward", workers=fft_workers())


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, length)^3``.

    Attributes
    ----------
    n : int
        Points per axis, a power of two no smaller than 8.
    length : float
        Box edge.
    """

    n: int
    length: float = 2.0 * np.pi

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise TypeError(f"n must be an integer, got {type(self.n).__name__}")
        if self.n < 8 or not _is_power_of_two(int(self.n)):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"length must be positive and finite, got {self.length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    @property
    def volume(self) -> float:
        return self.length**3

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @cached_property
    def integer_wavenumbers(self) -> np.ndarray:
        """Integer lattice per axis in FFT order, ``{0..n/2, -n/2+1..-1}``."""
        n = self.n
        k = np.fft.fftfreq(n, d=1.0 / n)
        k[n // 2] = n // 2
        return k

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Physical wavenumbers per axis (FFT order), scaled by ``2*pi/length``."""
        return self.integer_wavenumbers * (2.0 * np.pi / self.length)

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Sample positions along one axis."""
        return np.arange(self.n) * self.spacing

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays ``(x1, x2, x3)``."""
        x = self.coordinates
        return x[:, None, None], x[None, :, None], x[None, None, :]

    @cached_property
    def _k_int_rfft(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        k = self.integer_wavenumbers
        kz = np.arange(n // 2 + 1, dtype=float)
        return k[:, None, None], k[None, :, None], kz[None, None, :]

    @cached_property
    def k_deriv(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Wavenumbers used in derivative multipliers (rfft layout).

        The Nyquist entry is zeroed: a real field cannot carry an odd
        derivative of its Nyquist mode, and zeroing it for every order keeps
        ``D^a D^b = D^(a+b)`` exact.
        """
        scale = 2.0 * np.pi / self.length
        half = self.n // 2
        out = []
        for k in self._k_int_rfft:
            k = np.where(np.abs(k) == half, 0.0, k) * scale
            out.append(k)
        return tuple(out)

    @cached_property
    def k_squared(self) -> np.ndarray:
        kx, ky, kz = self.k_deriv
        return kx**2 + ky**2 + kz**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean 2/3-rule mask: keep ``|k_i| < n/3`` on every axis."""
        cut = self.n / 3.0
        kx, ky, kz = self._k_int_rfft
        return (np.abs(kx) < cut) & (np.abs(ky) < cut) & (np.abs(kz) < cut)

    def band_mask(self, band_limit: float) -> np.ndarray:
        """Modes with integer ``|k| <= band_limit`` (spherical cut)."""
        kx, ky, kz = self._k_int_rfft
        return kx**2 + ky**2 + kz**2 <= band_limit**2 + 1e-9

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Multiplicity of each stored rfft coefficient in the full spectrum."""
        n = self.n
        w = np.full(n // 2 + 1, 2.0)
        w[0] = 1.0
        w[n // 2] = 1.0
        return w[None, None, :]


def make_grid(n: int, length: float = 2.0 * np.pi) -> Grid:
    """Build a :class:`Grid`; rejects non power-of-two ``n`` and ``length <= 0``."""
    return Grid(n, length)


def multi_indices(order: int) -> list[tuple[int, int, int]]:
    """All 3-component multi-indices with ``|alpha| == order``."""
    return [a for a in itertools.product(range(order + 1), repeat=3) if sum(a) == order]


# --------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a field on ``grid``; see subclasses for the rank."""

    grid: Grid
    values: np.ndarray

    NCOMP: ClassVar[int] = 0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        expected = (self.NCOMP, *self.grid.shape)
        if values.shape != expected:
            raise ValueError(
                f"{type(self).__name__} expects values of shape {expected}, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{type(self).__name__} samples must be finite")
        object.__setattr__(self, "values", values)

    @property
    def component_weights(self) -> np.ndarray:
        """Multiplicity of each stored component in pointwise magnitudes."""
        return np.ones(self.NCOMP)

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(grid, np.zeros((cls.NCOMP, *grid.shape)))

    def _new(self, values: np.ndarray):
        return type(self)(self.grid, values)

    def __add__(self, other: "Field"):
        self._check_compatible(other)
        return self._new(self.values + other.values)

    def __sub__(self, other: "Field"):
        self._check_compatible(other)
        return self._new(self.values - other.values)

    def __mul__(self, a: float):
        return self._new(self.values * float(a))

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.values)

    def _check_compatible(self, other: "Field") -> None:
        if type(other) is not type(self) or other.grid != self.grid:
            raise ValueError("fields must share type and grid")


class ScalarField(Field):
    NCOMP = 1


class VectorField(Field):
    NCOMP = 3


class TensorField(Field):
    """General 3x3 tensor; component ``(i, j)`` lives at index ``3*i + j``."""

    NCOMP = 9

    def as_matrix(self) -> np.ndarray:
        return self.values.reshape(3, 3, *self.grid.shape)


class SymTensorField(Field):
    """Symmetric 3x3 tensor stored as components 11, 22, 33, 12, 13, 23."""

    NCOMP = 6

    @property
    def component_weights(self) -> np.ndarray:
        return SYM_WEIGHTS

    def full(self) -> np.ndarray:
        """Expanded ``(3, 3, n, n, n)`` array; symmetric by construction."""
        return self.values[_SYM_INDEX]

    @classmethod
    def from_full(cls, grid: Grid, full: np.ndarray) -> "SymTensorField":
        """Pack the symmetric part of a full tensor array."""
        return cls(grid, pack_symmetric(full))


def pack_symmetric(full: np.ndarray) -> np.ndarray:
    """Symmetrise a ``(3, 3, ...)`` array and keep the six stored components."""
    out = np.empty((6, *full.shape[2:]), dtype=full.dtype)
    for c, (i, j) in enumerate(SYM_PAIRS):
        out[c] = full[i, i] if i == j else 0.5 * (full[i, j] + full[j, i])
    return out


def expand_symmetric(packed: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pack_symmetric` (a view-free fancy index)."""
    return packed[_SYM_INDEX]


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real field in rfft layout.

    Hermitian symmetry is implicit in the half-spectrum storage.
    """

    grid: Grid
    coefficients: np.ndarray
    kind: type = ScalarField

    def __post_init__(self) -> None:
        expected = (self.kind.NCOMP, *self.grid.spectral_shape)
        if self.coefficients.shape != expected:
            raise ValueError(f"coefficients must have shape {expected}, got {self.coefficients.shape}")

    def coefficient(self, k: Sequence[int], component: int = 0) -> complex:
        """Coefficient of ``exp(i k.x)`` for an integer wavevector ``k``."""
        n = self.grid.n
        kx, ky, kz = (int(v) for v in k)
        if kz < 0:
            return complex(np.conj(self.coefficients[component, (-kx) % n, (-ky) % n, -kz]))
        return complex(self.coefficients[component, kx % n, ky % n, kz])


def forward_transform(f: Field) -> SpectralField:
    """Spectral coefficients of ``f``."""
    return SpectralField(f.grid, rfft3(f.values), type(f))


def inverse_transform(F: SpectralField) -> Field:
    """Physical samples from spectral coefficients."""
    return F.kind(F.grid, irfft3(F.coefficients, F.grid.n))


def derivative_multiplier(grid: Grid, alpha: Sequence[int]) -> np.ndarray:
    """``(i k1)^a1 (i k2)^a2 (i k3)^a3`` in rfft layout."""
    if len(alpha) != 3 or any(int(a) < 0 for a in alpha):
        raise ValueError(f"multi-index must have three nonnegative entries, got {alpha}")
    out = np.ones(grid.spectral_shape, dtype=complex)
    for k, a in zip(grid.k_deriv, alpha):
        if a:
            out = out * (1j * k) ** int(a)
    return out


def spectral_derivative(F: SpectralField, alpha: Sequence[int]) -> SpectralField:
    """Apply ``D^alpha`` coefficientwise."""
    return SpectralField(F.grid, F.coefficients * derivative_multiplier(F.grid, alpha), F.kind)


def divergence_hat(sigma_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """``(div sigma)_j = d_k sigma_kj`` on packed symmetric coefficients."""
    full = expand_symmetric(sigma_hat)
    kx, ky, kz = grid.k_deriv
    return 1j * (kx * full[0] + ky * full[1] + kz * full[2])


def divergence_sym_tensor(sigma: SymTensorField) -> VectorField:
    """Spectral divergence of a symmetric tensor field."""
    grid = sigma.grid
    return VectorField(grid, irfft3(divergence_hat(rfft3(sigma.values), grid), grid.n))


def _band_slices(n: int, n_new: int) -> tuple[list, slice]:
    """Index pieces of an ``n``-grid spectrum inside an ``n_new``-grid spectrum."""
    h = min(n, n_new) // 2
    full_axis = [(slice(0, h), slice(0, h)), (slice(n - h + 1, n), slice(n_new - h + 1, n_new))]
    return full_axis, slice(0, h)


def resample_hat(coef: np.ndarray, n: int, n_new: int) -> np.ndarray:
    """Embed or truncate rfft coefficients between grid sizes.

    Nyquist planes are dropped, which is exact for fields with no content at
    ``|k_i| = n/2`` (for instance anything band-limited below ``n/3``).
    """
    out = np.zeros((*coef.shape[:-3], n_new, n_new, n_new // 2 + 1), dtype=complex)
    pieces, zs = _band_slices(n, n_new)
    for sx_src, sx_dst in pieces:
        for sy_src, sy_dst in pieces:
            out[..., sx_dst, sy_dst, zs] = coef[..., sx_src, sy_src, zs]
    return out


def resample(values: np.ndarray, n_new: int) -> np.ndarray:
    """Trigonometric interpolation of ``(..., n, n, n)`` samples onto ``n_new`` points."""
    n = values.shape[-1]
    if n_new == n:
        return values.copy()
    return irfft3(resample_hat(rfft3(values), n, n_new), n_new)
