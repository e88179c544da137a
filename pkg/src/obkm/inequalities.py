"""Randomised measurement of the functional inequalities behind the analysis.

Each ``check_*`` function draws band-limited random fields at one or more
resolutions, evaluates ``LHS/RHS`` per sample and reports the largest ratio.
A finite maximum that does not grow by a factor of two or more under
resolution doubling is taken as consistent with an absolute constant.  The
reports say "consistent with"; they prove nothing.

Products of fields are formed on a grid twice as fine, where they are exact
for inputs band-limited below ``n/3``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .evolution import PhysicalParams, _rk4_arrays, evaluate_rhs, sym_inner
from .grid import (
    SYM_WEIGHTS,
    Field,
    Grid,
    ScalarField,
    SymTensorField,
    VectorField,
    derivative_multiplier,
    expand_symmetric,
    irfft3,
    resample,
    rfft3,
)
from .norms import (
    mollifier_multiplier,
    pointwise_magnitude,
    sobolev_weight,
    spectral_norm,
)
from .stokes import stokes_hat

__all__ = [
    "RandomFieldSpec",
    "InequalityReport",
    "random_field",
    "check_banach_algebra",
    "check_calc_inequalities",
    "check_gn_triple",
    "check_gn_young",
    "check_cz_bound",
    "check_cz_lq",
    "check_mollifier_properties",
    "check_sobolev_embedding",
    "cauchy_convergence_rate",
    "CauchyRate",
    "run_battery",
]

_RANKS = {"scalar": ScalarField, "vector": VectorField, "sym_tensor": SymTensorField}
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RandomFieldSpec:
    """Recipe for a reproducible band-limited random field.

    Attributes
    ----------
    seed : int
    band_limit : int or None
        Largest integer ``|k|`` kept.  ``None`` means ``n // 3`` on whatever
        grid the field is drawn on.
    amplitude : float
        Root-mean-square pointwise magnitude.
    rank : {"scalar", "vector", "sym_tensor"}
    """

    seed: int = 0
    band_limit: int | None = None
    amplitude: float = 1.0
    rank: str = "scalar"

    def __post_init__(self) -> None:
        if self.rank not in _RANKS:
            raise ValueError(f"rank must be one of {sorted(_RANKS)}, got {self.rank!r}")
        if self.band_limit is not None and self.band_limit < 0:
            raise ValueError("band_limit must be nonnegative")

    def band_for(self, grid: Grid) -> int:
        band = grid.n // 3 if self.band_limit is None else int(self.band_limit)
        if 3 * band > grid.n:
            raise ValueError(f"band_limit {band} exceeds n/3 for n={grid.n}")
        return band


def random_field(grid: Grid, spec: RandomFieldSpec, stream: Sequence[int] = ()) -> Field:
    """Draw a field: white noise, spherically band-limited, rescaled to ``amplitude``.

    ``stream`` selects an independent draw for the same spec.
    """
    cls = _RANKS[spec.rank]
    rng = np.random.default_rng([int(spec.seed), *(int(s) for s in stream)])
    noise = rng.standard_normal((cls.NCOMP, *grid.shape))
    values = irfft3(rfft3(noise) * grid.band_mask(spec.band_for(grid)), grid.n)
    weights = SYM_WEIGHTS if cls is SymTensorField else np.ones(cls.NCOMP)
    rms = math.sqrt(float(np.einsum("c,cxyz->", weights, values * values)) / grid.n**3)
    if rms > 0:
        values *= spec.amplitude / rms
    return cls(grid, values)


@dataclass
class InequalityReport:
    """Measured constant of one inequality.

    ``ratio_stability`` is the largest ``max_ratio(2n)/max_ratio(n)`` over
    consecutive resolutions (and, for mollifier checks, over successive
    ``eps``); ``None`` when only one configuration was measured.
    """

    name: str
    samples: int
    max_ratio: float
    ratio_stability: float | None
    passed: bool
    per_resolution: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def clean(x):
            return None if x is None or not math.isfinite(x) else float(x)

        return {
            "name": self.name,
            "samples": int(self.samples),
            "max_ratio": clean(self.max_ratio),
            "ratio_stability": clean(self.ratio_stability),
            "pass": bool(self.passed),
        }


def _ratio(lhs: float, rhs: float) -> float:
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    return lhs / rhs


def _growth(a: float, b: float) -> float:
    """Factor by which a measured constant grew from ``a`` to ``b``."""
    if a == 0:
        return 1.0 if b == 0 else math.inf
    return b / a


def _finish(name, samples, per_key: dict, order: Iterable[Sequence], extra_ok: bool = True):
    vals = [v for v in per_key.values() if not math.isnan(v)]
    max_ratio = max(vals) if vals else math.nan
    growths = [_growth(per_key[a], per_key[b]) for a, b in order]
    stability = max(growths) if growths else None
    ok = math.isfinite(max_ratio) and extra_ok and (stability is None or stability < 2.0)
    return InequalityReport(name, samples, max_ratio, stability, bool(ok), dict(per_key))


def _pairs(seq):
    seq = list(seq)
    return list(zip(seq[:-1], seq[1:]))


def _ensemble(name, ratio_fn, spec, samples, resolutions, length):
    """Max of ``ratio_fn(grid, spec, i)`` per resolution, then the report."""
    per = {}
    for n in resolutions:
        grid = Grid(n, length)
        ratios = [ratio_fn(grid, spec, i) for i in range(samples)]
        ratios = [r for r in ratios if not math.isnan(r)]
        per[n] = max(ratios) if ratios else math.nan
    return _finish(name, samples, per, _pairs(resolutions))


# --------------------------------------------------------------------------
# array helpers on scalar samples (shape (n, n, n))


def _fine(a: np.ndarray) -> np.ndarray:
    return resample(a, 2 * a.shape[-1])


def _hm(a: np.ndarray, grid: Grid, m: int) -> float:
    return spectral_norm(rfft3(a)[None], grid, np.ones(1), m)


def _deriv(a: np.ndarray, grid: Grid, alpha) -> np.ndarray:
    if not any(alpha):
        return a
    return irfft3(rfft3(a) * derivative_multiplier(grid, alpha), grid.n)


def _fine_grid(grid: Grid) -> Grid:
    return Grid(2 * grid.n, grid.length)


def _abs_alpha(alpha) -> int:
    return int(sum(alpha))


# --------------------------------------------------------------------------
# ratio functions (exposed for oracle tests)


def banach_ratio(f: np.ndarray, g: np.ndarray, grid: Grid, m: int) -> float:
    """``||fg||_m / (||f||_m ||g||_m)``; ``nan`` when a factor vanishes."""
    nf, ng = _hm(f, grid, m), _hm(g, grid, m)
    if nf == 0 or ng == 0:
        return math.nan
    return _hm(_fine(f) * _fine(g), _fine_grid(grid), m) / (nf * ng)


def product_ratio(f: np.ndarray, g: np.ndarray, grid: Grid, m: int) -> float:
    """``||fg||_m / (|f|_inf ||g||_m + ||f||_m |g|_inf)``."""
    ff, gf = _fine(f), _fine(g)
    rhs = np.abs(ff).max() * _hm(g, grid, m) + _hm(f, grid, m) * np.abs(gf).max()
    return _ratio(_hm(ff * gf, _fine_grid(grid), m), rhs) if rhs else math.nan


def commutator_sides(f: np.ndarray, g: np.ndarray, grid: Grid, m: int, alpha) -> tuple[float, float]:
    """``||D^a(fg) - f D^a g||_0`` and ``|grad f|_inf ||g||_{m-1} + ||f||_m |g|_inf``."""
    fg = _fine_grid(grid)
    ff, gf = _fine(f), _fine(g)
    comm = _deriv(ff * gf, fg, alpha) - ff * _deriv(gf, fg, alpha)
    lhs = _hm(comm, fg, 0)
    grad = np.stack([_deriv(ff, fg, a) for a in ((1, 0, 0), (0, 1, 0), (0, 0, 1))])
    rhs = float(pointwise_magnitude(grad).max()) * _hm(g, grid, max(m - 1, 0)) + _hm(
        f, grid, m
    ) * float(np.abs(gf).max())
    return lhs, rhs


def _check_alpha_beta(alpha, beta) -> None:
    if any(b > a for a, b in zip(alpha, beta)) or tuple(beta) == tuple(alpha) or not any(beta):
        raise ValueError(f"need 0 < beta < alpha componentwise, got alpha={alpha}, beta={beta}")


def gn_triple_sides(h, f, g, grid: Grid, alpha, beta) -> tuple[float, float]:
    """Both sides of the triple-product Gagliardo-Nirenberg inequality."""
    _check_alpha_beta(alpha, beta)
    a = _abs_alpha(alpha)
    gamma = tuple(x - y for x, y in zip(alpha, beta))
    tf, tg = _abs_alpha(beta) / a, _abs_alpha(gamma) / a
    fg = _fine_grid(grid)
    lhs = float(
        np.sum(np.abs(_deriv(_fine(h), fg, alpha)) * np.abs(_deriv(_fine(f), fg, beta))
               * np.abs(_deriv(_fine(g), fg, gamma)))
        * fg.cell_volume
    )
    rhs = (
        _hm(h, grid, a)
        * _hm(f, grid, a) ** tf
        * _hm(g, grid, a) ** tg
        * float(np.abs(_fine(f)).max()) ** (1 - tf)
        * float(np.abs(_fine(g)).max()) ** (1 - tg)
    )
    return lhs, rhs


def gn_young_sides(sigma: np.ndarray, grid: Grid, alpha, beta, nu_s: float = 1.0):
    """``|<D^a s, (D^b s)(D^(a-b) grad u)>|`` and ``||s||_|a|^2 (|s|_inf + |grad u|_inf)``."""
    _check_alpha_beta(alpha, beta)
    a = _abs_alpha(alpha)
    gamma = tuple(x - y for x, y in zip(alpha, beta))
    sh = rfft3(sigma)
    _, g_hat = stokes_hat(sh, grid, nu_s)
    fg = _fine_grid(grid)
    s_full = expand_symmetric(_fine(sigma))
    g_full = _fine(irfft3(g_hat, grid.n))
    da = np.stack([[_deriv(s_full[i, j], fg, alpha) for j in range(3)] for i in range(3)])
    db = np.stack([[_deriv(s_full[i, j], fg, beta) for j in range(3)] for i in range(3)])
    dg = np.stack([[_deriv(g_full[i, j], fg, gamma) for j in range(3)] for i in range(3)])
    lhs = abs(float(np.einsum("ijxyz,ikxyz,kjxyz->", da, db, dg)) * fg.cell_volume)
    rhs = spectral_norm(sh, grid, SYM_WEIGHTS, a) ** 2 * (
        float(pointwise_magnitude(_fine(sigma), SYM_WEIGHTS).max())
        + float(pointwise_magnitude(g_full.reshape(9, *fg.shape)).max())
    )
    return lhs, rhs


def cz_ratio(sigma: np.ndarray, grid: Grid, m: int, nu_s: float = 1.0) -> float:
    """``nu_s ||grad u||_m / ||sigma||_m`` for the spectral Stokes solve."""
    sh = rfft3(sigma)
    ns = spectral_norm(sh, grid, SYM_WEIGHTS, m)
    if ns == 0:
        return math.nan
    _, g_hat = stokes_hat(sh, grid, nu_s)
    ng = spectral_norm(g_hat.reshape(9, *grid.spectral_shape), grid, np.ones(9), m)
    return nu_s * ng / ns


def cz_lq_ratios(sigma: np.ndarray, grid: Grid, qs: Sequence[float], nu_s: float = 1.0) -> np.ndarray:
    """``||nu_s grad u||_q / ||sigma||_q`` for each ``q`` (fine-grid quadrature)."""
    _, g_hat = stokes_hat(rfft3(sigma), grid, nu_s)
    g = _fine(irfft3(g_hat.reshape(9, *grid.spectral_shape), grid.n)) * nu_s
    s = _fine(sigma)
    gm = pointwise_magnitude(g)
    sm = pointwise_magnitude(s, SYM_WEIGHTS)
    out = []
    for q in qs:
        # common scaling keeps large powers in range; it cancels in the ratio
        scale = max(gm.max(), sm.max())
        out.append((np.sum((gm / scale) ** q) / np.sum((sm / scale) ** q)) ** (1.0 / q))
    return np.array(out)


def embedding_ratio(f: np.ndarray, grid: Grid, m: int) -> float:
    """``|f|_inf / ||f||_m``."""
    nm = _hm(f, grid, m)
    return math.nan if nm == 0 else float(np.abs(_fine(f)).max()) / nm


def mollifier_ratios(f: np.ndarray, grid: Grid, eps: float, m: int) -> tuple[float, float, float]:
    """Scaled constants ``C1, C2, C3`` of the three mollifier estimates.

    ``C1 = ||J f - f||_{m-1} / (eps ||f||_m)``,
    ``C2 = eps ||J f||_{m+1} / ||f||_m`` and
    ``C3 = eps^(5/2) |J D^(1,0,0) f|_inf / ||f||_0``.
    """
    J = mollifier_multiplier(grid, float(eps))
    fh = rfft3(f)[None]
    one = np.ones(1)
    nm = spectral_norm(fh, grid, one, m)
    n0 = spectral_norm(fh, grid, one, 0)
    if nm == 0:
        return math.nan, math.nan, math.nan
    c1 = spectral_norm(fh * (J - 1.0), grid, one, max(m - 1, 0)) / (eps * nm)
    c2 = eps * spectral_norm(fh * J, grid, one, m + 1) / nm
    jd = irfft3(fh[0] * J * derivative_multiplier(grid, (1, 0, 0)), grid.n)
    c3 = eps**2.5 * float(np.abs(_fine(jd)).max()) / n0
    return c1, c2, c3


# --------------------------------------------------------------------------
# checks


def _scalar(grid, spec, *stream):
    return random_field(grid, replace(spec, rank="scalar"), stream).values[0]


def _sym(grid, spec, *stream):
    return random_field(grid, replace(spec, rank="sym_tensor"), stream).values


DEFAULT_RESOLUTIONS = (16, 32)


def check_banach_algebra(
    spec: RandomFieldSpec, m: int = 2, samples: int = 100,
    resolutions: Sequence[int] = DEFAULT_RESOLUTIONS, length: float = TWO_PI,
) -> InequalityReport:
    """Algebra property ``||fg||_m <= C ||f||_m ||g||_m`` for ``m >= 2``."""
    if m < 2:
        raise ValueError("m must be at least 2")

    def ratio(grid, s, i):
        return banach_ratio(_scalar(grid, s, i, 0), _scalar(grid, s, i, 1), grid, m)

    return _ensemble("banach_algebra", ratio, spec, samples, resolutions, length)


def check_calc_inequalities(
    spec: RandomFieldSpec, m: int = 2, alpha: Sequence[int] = (1, 1, 0), samples: int = 100,
    resolutions: Sequence[int] = DEFAULT_RESOLUTIONS, length: float = TWO_PI,
) -> tuple[InequalityReport, InequalityReport]:
    """Product estimate and commutator estimate, as two reports."""
    if _abs_alpha(alpha) > m:
        raise ValueError("need |alpha| <= m")

    def prod(grid, s, i):
        return product_ratio(_scalar(grid, s, i, 0), _scalar(grid, s, i, 1), grid, m)

    def comm(grid, s, i):
        lhs, rhs = commutator_sides(_scalar(grid, s, i, 0), _scalar(grid, s, i, 1), grid, m, alpha)
        return math.nan if rhs == 0 else _ratio(lhs, rhs)

    return (
        _ensemble("calc_product", prod, spec, samples, resolutions, length),
        _ensemble("calc_commutator", comm, spec, samples, resolutions, length),
    )


def check_gn_triple(
    spec: RandomFieldSpec, alpha: Sequence[int] = (2, 1, 0), beta: Sequence[int] = (1, 0, 0),
    samples: int = 100, resolutions: Sequence[int] = DEFAULT_RESOLUTIONS, length: float = TWO_PI,
) -> InequalityReport:
    """Triple-product inequality on scalar ``h, f, g``."""
    _check_alpha_beta(alpha, beta)

    def ratio(grid, s, i):
        lhs, rhs = gn_triple_sides(
            _scalar(grid, s, i, 0), _scalar(grid, s, i, 1), _scalar(grid, s, i, 2), grid, alpha, beta
        )
        return math.nan if rhs == 0 else _ratio(lhs, rhs)

    return _ensemble("gn_triple", ratio, spec, samples, resolutions, length)


def check_gn_young(
    spec: RandomFieldSpec, alpha: Sequence[int] = (2, 1, 0), beta: Sequence[int] = (1, 0, 0),
    samples: int = 100, resolutions: Sequence[int] = DEFAULT_RESOLUTIONS, length: float = TWO_PI,
    nu_s: float = 1.0,
) -> InequalityReport:
    """The triple product with ``f = h = sigma`` and ``g = grad u``, after Young."""
    _check_alpha_beta(alpha, beta)

    def ratio(grid, s, i):
        lhs, rhs = gn_young_sides(_sym(grid, s, i), grid, alpha, beta, nu_s)
        return math.nan if rhs == 0 else _ratio(lhs, rhs)

    return _ensemble("gn_young", ratio, spec, samples, resolutions, length)


def check_cz_bound(
    spec: RandomFieldSpec, m: int = 2, nu_s: float = 1.0, samples: int = 100,
    resolutions: Sequence[int] = DEFAULT_RESOLUTIONS, length: float = TWO_PI,
) -> InequalityReport:
    """``nu_s ||grad u||_m <= C ||sigma||_m`` through the spectral Stokes solve."""

    def ratio(grid, s, i):
        return cz_ratio(_sym(grid, s, i), grid, m, nu_s)

    return _ensemble("cz_sobolev", ratio, spec, samples, resolutions, length)


def check_cz_lq(
    spec: RandomFieldSpec, nu_s: float = 1.0, samples: int = 100,
    qs: Sequence[float] = (2, 4, 8, 16),
    resolutions: Sequence[int] = DEFAULT_RESOLUTIONS, length: float = TWO_PI,
) -> InequalityReport:
    """``||grad u||_q <= C q ||sigma||_q`` over ``qs``.

    ``max_ratio`` is the largest ``r(q)/q`` with ``r(q)`` the ensemble maximum of
    ``nu_s ||grad u||_q / ||sigma||_q``.  The check also requires
    ``r(q)/r(q_min) <= q/q_min`` (growth no faster than linear).
    """
    qs = list(qs)
    per = {}
    linear = True
    for n in resolutions:
        grid = Grid(n, length)
        r = np.max([cz_lq_ratios(_sym(grid, spec, i), grid, qs, nu_s) for i in range(samples)], axis=0)
        per[n] = float(np.max(r / np.asarray(qs)))
        linear &= bool(np.all(r / r[0] <= np.asarray(qs) / qs[0] + 1e-12))
    return _finish("cz_lq", samples, per, _pairs(resolutions), linear)


def check_sobolev_embedding(
    spec: RandomFieldSpec, m: int = 2, samples: int = 100,
    resolutions: Sequence[int] = DEFAULT_RESOLUTIONS, length: float = TWO_PI,
) -> InequalityReport:
    """``|f|_inf <= C ||f||_m`` for ``m >= 2``."""
    if m < 2:
        raise ValueError("m must be at least 2")

    def ratio(grid, s, i):
        return embedding_ratio(_scalar(grid, s, i), grid, m)

    return _ensemble("sobolev_embedding", ratio, spec, samples, resolutions, length)


def check_mollifier_properties(
    spec: RandomFieldSpec, m: int = 2, eps_list: Sequence[float] = (0.4, 0.2, 0.1),
    samples: int = 20, resolutions: Sequence[int] = (32, 64), length: float = 1.0,
) -> tuple[InequalityReport, InequalityReport, InequalityReport]:
    """Scaled constants of the three mollifier estimates.

    Each constant is measured for every ``(n, eps)``.  Its stability is the
    largest growth factor when ``eps`` is halved at fixed ``n`` or ``n`` is
    doubled at fixed ``eps``.  Only growth counts: the first constant
    legitimately shrinks with ``eps`` on smooth data.

    The ensemble is multiscale: sample ``i`` is band-limited to
    ``1 + i mod B`` with ``B`` the coarsest admissible band (capped by
    ``spec.band_limit``).  Each estimate is sharp near a fixed value of
    ``eps |k|``; a single band would probe only ``eps |k| >> 1`` for large
    ``eps`` and under-report the constant there.
    """
    eps_list = sorted(eps_list, reverse=True)
    for n in resolutions:
        for e in eps_list:
            Grid(n, length)  # validates n
            if e <= 2.0 * length / n:
                raise ValueError(f"epsilon={e} is not resolved at n={n} (need > {2 * length / n})")
    top = min(resolutions) // 3
    if spec.band_limit is not None:
        top = min(top, spec.band_limit)
    bands = [1 + i % max(top, 1) for i in range(samples)]
    tables = [dict(), dict(), dict()]
    for n in resolutions:
        grid = Grid(n, length)
        fields_ = [_scalar(grid, replace(spec, band_limit=b), i) for i, b in enumerate(bands)]
        for e in eps_list:
            rs = np.array([mollifier_ratios(f, grid, e, m) for f in fields_])
            for k in range(3):
                col = rs[:, k]
                col = col[~np.isnan(col)]
                tables[k][(n, e)] = float(col.max()) if col.size else math.nan
    order = [((n, a), (n, b)) for n in resolutions for a, b in _pairs(eps_list)]
    order += [((a, e), (b, e)) for e in eps_list for a, b in _pairs(resolutions)]
    names = ("mollifier_J1", "mollifier_J2", "mollifier_J3")
    return tuple(_finish(nm, samples, tab, order) for nm, tab in zip(names, tables))


# --------------------------------------------------------------------------
# Cauchy rate of the mollified dynamics


class CauchyRate(NamedTuple):
    slope: float
    epsilons: tuple
    distances: tuple
    exact: bool


def cauchy_convergence_rate(
    sigma0: SymTensorField,
    params: PhysicalParams,
    T: float,
    eps_list: Sequence[float] = (0.4, 0.2, 0.1),
    dt: float | None = None,
) -> CauchyRate:
    """Observed order of ``sup_t ||sigma_eps - sigma_eps_min||_0`` in ``eps``.

    All runs share a fixed RK4 step and advance in lockstep, so only one
    state per run is held in memory.  The slope is a least-squares fit of
    ``log d`` against ``log eps`` over the non-smallest ``eps``.

    Raises
    ------
    ArithmeticError
        If any run produces a non-finite value.
    """
    eps = sorted((float(e) for e in eps_list), reverse=True)
    if len(eps) < 3:
        raise ValueError("need at least three epsilon values")
    ratios = [eps[i] / eps[i + 1] for i in range(len(eps) - 1)]
    if max(ratios) - min(ratios) > 1e-9 * max(ratios):
        raise ValueError("epsilon values must form a geometric progression")
    grid = sigma0.grid
    dt = min(0.05, T / 10) if dt is None else float(dt)
    nsteps = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / nsteps
    states = [sigma0.values.copy() for _ in eps]
    sup = np.zeros(len(eps) - 1)
    for _ in range(nsteps):
        for i, e in enumerate(eps):
            states[i] = _rk4_arrays(states[i], h, lambda a, e=e: evaluate_rhs(a, grid, params, e)[0])
        ref = states[-1]
        for i in range(len(eps) - 1):
            d = states[i] - ref
            sup[i] = max(sup[i], math.sqrt(max(sym_inner(d, d, grid), 0.0)))
    dists = tuple(float(x) for x in sup)
    if np.all(sup == 0):
        return CauchyRate(math.inf, tuple(eps), dists, True)
    if np.any(sup == 0):
        return CauchyRate(math.nan, tuple(eps), dists, False)
    slope = float(np.polyfit(np.log(eps[:-1]), np.log(sup), 1)[0])
    return CauchyRate(slope, tuple(eps), dists, False)


# --------------------------------------------------------------------------
# full battery


def run_battery(
    seed: int = 42,
    resolutions: Sequence[int] = DEFAULT_RESOLUTIONS,
    samples: int = 100,
    include_mollifier: bool = True,
) -> list[InequalityReport]:
    """Every check with default parameters, in a fixed order."""
    resolutions = sorted(int(n) for n in resolutions)
    spec = RandomFieldSpec(seed=seed)
    reports = [check_banach_algebra(spec, 2, samples, resolutions)]
    reports.extend(check_calc_inequalities(spec, 2, (1, 1, 0), samples, resolutions))
    reports.append(check_gn_triple(spec, (2, 1, 0), (1, 0, 0), samples, resolutions))
    reports.append(check_gn_young(spec, (2, 1, 0), (1, 0, 0), samples, resolutions))
    reports.append(check_cz_bound(spec, 2, 1.0, samples, resolutions))
    reports.append(check_cz_lq(spec, 1.0, samples, (2, 4, 8, 16), resolutions))
    reports.append(check_sobolev_embedding(spec, 2, samples, resolutions))
    if include_mollifier:
        reports.extend(_battery_mollifier(spec, resolutions, max(4, samples // 5)))
    return reports


def _battery_mollifier(spec, resolutions, samples):
    # unit box so that eps in {0.4, 0.2, 0.1} fits between 2h and L/2; eps
    # values unresolved at the coarsest grid are dropped
    length = 1.0
    coarse = min(resolutions)
    eps = [e for e in (0.4, 0.2, 0.1) if e > 2.0 * length / coarse]
    return check_mollifier_properties(spec, 2, eps, samples, resolutions, length)


def reports_to_json(reports: Sequence[InequalityReport]) -> str:
    """Deterministic JSON text for a list of reports."""
    return json.dumps([r.to_json() for r in reports], indent=2, sort_keys=False) + "\n"
