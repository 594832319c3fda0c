# Copyright (C) 2025 John Schember <john@nachtimwald.com>
# SPDX-License-Identifier: GPL-3.0-or-later

# Discrete geometry of a graph Sigma = {r = s(x, y)} over the torus.
#
# The height field lives on a uniform periodic nx by ny grid, x index first.
# Every geometric quantity is a pointwise closed form in s and its stencil
# derivatives; the only nonlocal operations are the stencils themselves and
# the trapezoid sums.

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import signal

from ..constants import DEFAULT_MARGIN, DEFAULT_ORDER, H_PATH_TOL, MIN_GRID, NORMAL_TOL, Q_PATH_TOL, STENCIL_ORDERS
from ..errors import DomainError, MarginError, PropertyViolation
from ..melvin_space import R, X, Y, SpaceParams, eval_profile, hessian_r, metric, ricci_normal, scalar_curvature, volume_below
from .stencils import d1, d2

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    px: float
    py: float
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.nx < MIN_GRID or self.ny < MIN_GRID:
            raise DomainError(f'Grid must be at least {MIN_GRID}x{MIN_GRID}, got {self.nx}x{self.ny}')
        if not (self.px > 0 and self.py > 0):
            raise DomainError(f'Grid periods must be positive, got ({self.px!r}, {self.py!r})')
        if self.order not in STENCIL_ORDERS:
            raise DomainError(f'Stencil order must be one of {STENCIL_ORDERS}, got {self.order!r}')

    @classmethod
    def for_space(cls, params: SpaceParams, nx: int, ny: int, order: int = DEFAULT_ORDER) -> 'GridSpec':
        return cls(nx=nx, ny=ny, px=params.px, py=params.py, order=order)

    @property
    def hx(self) -> float:
        return self.px / self.nx

    @property
    def hy(self) -> float:
        return self.py / self.ny

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.nx) * self.hx
        y = np.arange(self.ny) * self.hy
        return np.meshgrid(x, y, indexing='ij')

    def integrate(self, f: np.ndarray) -> float:
        # Trapezoid rule; on a periodic grid every node has full weight
        return float(np.sum(f) * self.hx * self.hy)


def check_margin(params: SpaceParams, s: np.ndarray, margin: float) -> None:
    floor = params.r_s + margin
    if not np.all(np.isfinite(s)):
        index = tuple(int(i) for i in np.argwhere(~np.isfinite(s))[0])
        raise MarginError(index, float(s[index]), floor)
    if np.any(s <= floor):
        index = tuple(int(i) for i in np.unravel_index(np.argmin(s), s.shape))
        raise MarginError(index, float(s[index]), floor)


@dataclass(frozen=True, eq=False)
class GraphSurface:
    params: SpaceParams
    grid: GridSpec
    s: np.ndarray
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.shape != (self.grid.nx, self.grid.ny):
            raise DomainError(f'Height field shape {s.shape} does not match grid {self.grid.nx}x{self.grid.ny}')
        if not np.isclose(self.grid.px, self.params.px) or not np.isclose(self.grid.py, self.params.py):
            raise DomainError('Grid periods do not match the space periods')
        check_margin(self.params, s, self.margin)
        s.setflags(write=False)
        object.__setattr__(self, 's', s)

    def with_heights(self, s: np.ndarray) -> 'GraphSurface':
        return GraphSurface(self.params, self.grid, s, self.margin)


class Derivatives(NamedTuple):
    s_x: np.ndarray
    s_y: np.ndarray
    s_xx: np.ndarray
    s_xy: np.ndarray
    s_yy: np.ndarray

def differentiate(surface: GraphSurface) -> Derivatives:
    g = surface.grid
    s = surface.s
    s_x = d1(s, g.hx, 0, g.order)
    s_y = d1(s, g.hy, 1, g.order)
    return Derivatives(
        s_x=s_x,
        s_y=s_y,
        s_xx=d2(s, g.hx, 0, g.order),
        s_xy=d1(s_x, g.hy, 1, g.order),
        s_yy=d2(s, g.hy, 1, g.order),
    )


@dataclass(frozen=True, eq=False)
class GeometryField:
    deriv: Derivatives
    F: np.ndarray
    dF: np.ndarray
    g_xx: np.ndarray
    g_xy: np.ndarray
    g_yy: np.ndarray
    detg: np.ndarray
    ginv_xx: np.ndarray
    ginv_xy: np.ndarray
    ginv_yy: np.ndarray
    N: np.ndarray
    z2: np.ndarray
    slope2: np.ndarray
    h_slope: np.ndarray
    nu: np.ndarray
    h_xx: np.ndarray
    h_xy: np.ndarray
    h_yy: np.ndarray
    H: np.ndarray
    A2: np.ndarray
    area_density: np.ndarray
    grad_r2: np.ndarray
    grad_y2: np.ndarray
    lap_r: np.ndarray
    K: np.ndarray

def _brioschi(E, Fm, G, grid: GridSpec) -> np.ndarray:
    hx, hy, o = grid.hx, grid.hy, grid.order
    E_x, E_y = d1(E, hx, 0, o), d1(E, hy, 1, o)
    F_x, F_y = d1(Fm, hx, 0, o), d1(Fm, hy, 1, o)
    G_x, G_y = d1(G, hx, 0, o), d1(G, hy, 1, o)
    E_yy = d2(E, hy, 1, o)
    G_xx = d2(G, hx, 0, o)
    F_xy = d1(F_x, hy, 1, o)

    zero = np.zeros_like(E)
    m1 = np.stack([
        np.stack([-0.5 * E_yy + F_xy - 0.5 * G_xx, 0.5 * E_x, F_x - 0.5 * E_y], axis=-1),
        np.stack([F_y - 0.5 * G_x, E, Fm], axis=-1),
        np.stack([0.5 * G_y, Fm, G], axis=-1),
    ], axis=-2)
    m2 = np.stack([
        np.stack([zero, 0.5 * E_y, 0.5 * G_x], axis=-1),
        np.stack([0.5 * E_y, E, Fm], axis=-1),
        np.stack([0.5 * G_x, Fm, G], axis=-1),
    ], axis=-2)
    return (np.linalg.det(m1) - np.linalg.det(m2)) / (E * G - Fm**2)**2

def geometry(surface: GraphSurface) -> GeometryField:
    check_margin(surface.params, surface.s, surface.margin)
    d = differentiate(surface)
    r = surface.s
    F, dF, _ = eval_profile(surface.params, r)
    sx, sy = d.s_x, d.s_y
    sx2, sy2 = sx**2, sy**2
    r2F = r**2 * F
    r4F2 = r**4 * F**2
    dr2F = 2.0 * r * F + r**2 * dF  # (r^2 F)'

    slope2 = sx2 / (r**2 * r2F) + sy2 / r4F2  # z^2 - 1
    z2 = 1.0 + slope2
    N = np.sqrt(z2 / r2F)

    g_xx = r**2 + sx2 / r2F
    g_xy = sx * sy / r2F
    g_yy = r2F + sy2 / r2F
    detg = r**6 * F**2 * N**2
    ginv_xx = (r2F + sy2 / r2F) / detg
    ginv_xy = -sx * sy / r2F / detg
    ginv_yy = (r**2 + sx2 / r2F) / detg

    nu = np.array([1.0 / N, -sx / (r**4 * F) / N, -sy / r4F2 / N])

    h_xx = (-d.s_xx / r2F + (3.0 / (r**3 * F) + 0.5 * dF / (r**2 * F**2)) * sx2 + r) / N
    h_yy = (-d.s_yy / r2F + 1.5 * dr2F / r4F2 * sy2 + 0.5 * dr2F) / N
    h_xy = (-d.s_xy / r2F + (1.0 / (r**3 * F) + dr2F / r4F2) * sx * sy) / N

    h_slope = ((-1.0 - sy2 / r4F2) * d.s_xx
               + (-1.0 / F - sx2 / r4F2) * d.s_yy
               + 2.0 * sx * sy * d.s_xy / r4F2
               + (4.0 / r + dF / F) * sx2
               + (4.0 / (r * F) + 1.5 * dF / F**2) * sy2)
    # 2 r^3 F + r^4 F'/2 = 2 r^3 - 1/2 for every b
    H = (h_slope + 2.0 * r**3 - 0.5) / (r**6 * F**2 * N**3)

    # Second code path, kept as a standing check on the long closed forms
    H_trace = ginv_xx * h_xx + 2.0 * ginv_xy * h_xy + ginv_yy * h_yy
    mismatch = float(np.max(np.abs(H - H_trace) / np.maximum(1.0, np.abs(H))))
    if mismatch > H_PATH_TOL:
        raise PropertyViolation('mean curvature closed form equals trace of h', mismatch, H_PATH_TOL)

    a_xx = ginv_xx * h_xx + ginv_xy * h_xy
    a_xy = ginv_xx * h_xy + ginv_xy * h_yy
    a_yx = ginv_xy * h_xx + ginv_yy * h_xy
    a_yy = ginv_xy * h_xy + ginv_yy * h_yy
    A2 = a_xx**2 + 2.0 * a_xy * a_yx + a_yy**2

    grad_r2 = r2F * (1.0 - 1.0 / z2)
    grad_y2 = 1.0 / r2F - sy2 / (r**6 * F**3 * z2)
    lap_r = (-r * np.sqrt(F) * H / np.sqrt(z2) + 2.0 * r * F + 0.5 * r**2 * dF
             + 0.5 * r**2 * dF * (1.0 - 1.0 / z2)
             - 0.5 * dF * sy2 / (r**2 * F**2 * z2))

    return GeometryField(
        deriv=d, F=F, dF=dF,
        g_xx=g_xx, g_xy=g_xy, g_yy=g_yy, detg=detg,
        ginv_xx=ginv_xx, ginv_xy=ginv_xy, ginv_yy=ginv_yy,
        N=N, z2=z2, slope2=slope2, h_slope=h_slope, nu=nu,
        h_xx=h_xx, h_xy=h_xy, h_yy=h_yy, H=H, A2=A2,
        area_density=r**3 * F * N,
        grad_r2=grad_r2, grad_y2=grad_y2, lap_r=lap_r,
        K=_brioschi(g_xx, g_xy, g_yy, surface.grid),
    )

def laplacian_intrinsic(surface: GraphSurface, f: np.ndarray, geom: GeometryField | None = None) -> np.ndarray:
    if geom is None:
        geom = geometry(surface)
    g = surface.grid
    f_x = d1(f, g.hx, 0, g.order)
    f_y = d1(f, g.hy, 1, g.order)
    sqrt_g = np.sqrt(geom.detg)
    flux_x = sqrt_g * (geom.ginv_xx * f_x + geom.ginv_xy * f_y)
    flux_y = sqrt_g * (geom.ginv_xy * f_x + geom.ginv_yy * f_y)
    return (d1(flux_x, g.hx, 0, g.order) + d1(flux_y, g.hy, 1, g.order)) / sqrt_g


class QValue(NamedTuple):
    q: float
    gap: float

def gap_integrand(surface: GraphSurface, geom: GeometryField) -> np.ndarray:
    """H s^4 F N - 2 s^3 + 1/2.

    With r^2 F N^2 = z^2 the first term is the mean curvature numerator over
    z^2, and its 2 s^3 - 1/2 part cancels in closed form. What remains is
    built from slope terms only, so a coordinate torus integrates to zero
    exactly and round-off does not grow with s.
    """
    s = surface.s
    return (geom.h_slope - (2.0 * s**3 - 0.5) * geom.slope2) / geom.z2

def q_functional(surface: GraphSurface, geom: GeometryField | None = None) -> QValue:
    if geom is None:
        geom = geometry(surface)
    grid = surface.grid
    params = surface.params

    gap = grid.integrate(gap_integrand(surface, geom))
    q = gap + params.q_floor

    # Q = int H r dA - 6 int_Omega r dV, from the area and volume forms directly
    curvature_term = geom.H * surface.s * geom.area_density
    q_direct = grid.integrate(curvature_term) - 6.0 * grid.integrate(volume_below(params, surface.s))
    # Both terms of q_direct are of size 2 s^3 times the area and cancel
    scale = max(1.0, abs(q), grid.integrate(np.abs(curvature_term)))
    mismatch = abs(q - q_direct) / scale
    if mismatch > Q_PATH_TOL:
        raise PropertyViolation('Q from gap equals Q from volume integral', mismatch, Q_PATH_TOL)

    logger.debug('Q=%r gap=%r on %dx%d grid', q, gap, grid.nx, grid.ny)
    return QValue(q=q, gap=gap)

def refine(surface: GraphSurface, factor: int = 2) -> GraphSurface:
    """Resample the height field on a grid `factor` times finer by Fourier
    interpolation; exact for band-limited heights."""
    g = surface.grid
    nx, ny = g.nx * factor, g.ny * factor
    s = signal.resample(surface.s, nx, axis=0)
    s = signal.resample(s, ny, axis=1)
    grid = GridSpec(nx=nx, ny=ny, px=g.px, py=g.py, order=g.order)
    return GraphSurface(surface.params, grid, s, surface.margin)

def quadrature_self_estimate(surface: GraphSurface) -> float:
    coarse = q_functional(surface).gap
    fine = q_functional(refine(surface, 2)).gap
    return abs(fine - coarse)

def gauss_bonnet(surface: GraphSurface, geom: GeometryField | None = None) -> float:
    if geom is None:
        geom = geometry(surface)
    return surface.grid.integrate(geom.K * geom.area_density)

def gauss_equation_residual(surface: GraphSurface, geom: GeometryField | None = None) -> np.ndarray:
    if geom is None:
        geom = geometry(surface)
    params = surface.params
    lhs = 2.0 * geom.K - geom.H**2 + geom.A2
    rhs = scalar_curvature(params, surface.s) - 2.0 * ricci_normal(params, surface.s, geom.nu)
    return lhs - rhs

def lap_r_split_residual(surface: GraphSurface, geom: GeometryField | None = None) -> np.ndarray:
    # Delta r = Lapbar r - Hessbar r(nu, nu) - H gbar(gradbar r, nu), with
    # gbar(gradbar r, nu) = nu^r
    if geom is None:
        geom = geometry(surface)
    hess = hessian_r(surface.params, surface.s)
    nu = geom.nu
    hess_nn = sum(hess.table[a, a] * nu[a]**2 for a in (R, X, Y))
    split = hess.laplacian - hess_nn - geom.H * nu[R]
    return laplacian_intrinsic(surface, surface.s, geom) - split

def normal(surface: GraphSurface, geom: GeometryField | None = None) -> np.ndarray:
    """Outward unit normal (nu^r, nu^x, nu^y), pointing towards larger r."""
    if geom is None:
        geom = geometry(surface)
    g = metric(surface.params, surface.s)
    norm2 = np.sum(g * geom.nu**2, axis=0)
    err = float(np.max(np.abs(norm2 - 1.0)))
    if err > NORMAL_TOL:
        raise PropertyViolation('unit normal has gbar(nu, nu) = 1', err, NORMAL_TOL)
    return geom.nu
