# Copyright (C) 2025 John Schember <john@nachtimwald.com>
# SPDX-License-Identifier: GPL-3.0-or-later

# Independent oracles for the identities the other modules rely on.
#
# Access table of suite name to suite function.
# E.g: suite_table['ambient'](params, config) -> SuiteResult
#
# Suites register themselves with the register_suite decorator and are run
# in registration order by run_suites.

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constants import DEFAULT_MARGIN, DEFAULT_ORDER, FD_STEP, MONO_TOL
from .errors import DomainError, MarginError, PropertyViolation
from .flow import flow_step, z2_evolution_rhs
from .melvin_space import (R, SpaceParams, christoffels, eval_profile, metric, ricci, ricci_normal, riemann,
                           hessian_r, scalar_curvature, static_tensor)
from .surface.core import (GraphSurface, GridSpec, check_margin, gauss_bonnet, gauss_equation_residual, geometry,
                           lap_r_split_residual, laplacian_intrinsic)
from .surface.stencils import d1, d2

logger = logging.getLogger(__name__)

suite_table = {}

# Each suite signature: func(params, config) -> SuiteResult
def register_suite(name: str):
    def decorator(func):
        suite_table[name] = func
        return func
    return decorator


Speed = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

def flow_speed(r, x, y):
    return 1.0 / r

def oscillating_speed(params: SpaceParams, amplitude: float = 0.1) -> Speed:
    """A generic smooth speed, periodic in x and y."""
    kx = 2.0 * math.pi / params.px
    ky = 2.0 * math.pi / params.py
    def speed(r, x, y):
        return 1.0 / r + amplitude * np.sin(kx * x) * np.cos(ky * y)
    return speed


# Lagrangian patch
#
# A periodic parameter grid (u, v) over the torus carries chart positions
# (r, x, y) = (r, u + dx, v + dy). Points move with velocity rho nu and
# carry no tangential motion, matching the setting of the evolution identities.

@dataclass(frozen=True, eq=False)
class LagrangianPatch:
    params: SpaceParams
    grid: GridSpec
    r: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    speed: Speed = flow_speed
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        shape = (self.grid.nx, self.grid.ny)
        for name in ('r', 'dx', 'dy'):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise DomainError(f'Patch field {name} has shape {arr.shape}, expected {shape}')
            object.__setattr__(self, name, arr)
        try:
            check_margin(self.params, self.r, self.margin)
        except MarginError as e:
            raise DomainError(f'Patch left the chart at parameter point {e.index}: r={e.value!r}') from e

    @classmethod
    def from_surface(cls, surface: GraphSurface, speed: Speed = flow_speed) -> 'LagrangianPatch':
        zero = np.zeros_like(surface.s)
        return cls(surface.params, surface.grid, surface.s.copy(), zero, zero.copy(), speed, surface.margin)

    def position(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u, v = self.grid.coords()
        return self.r, u + self.dx, v + self.dy

    def rho(self) -> np.ndarray:
        return np.broadcast_to(self.speed(*self.position()), self.r.shape).astype(float)

    def moved(self, r, dx, dy) -> 'LagrangianPatch':
        return LagrangianPatch(self.params, self.grid, r, dx, dy, self.speed, self.margin)


@dataclass(frozen=True, eq=False)
class PatchFrame:
    tangent: np.ndarray   # [i, a]: d phi^a / d u^i
    second: np.ndarray    # [i, j, a]: covariant second derivative of phi
    gbar: np.ndarray      # ambient metric diagonal at the patch points
    nu: np.ndarray        # [a]
    g: np.ndarray         # [i, j] induced metric
    ginv: np.ndarray
    sqrt_det: np.ndarray
    h: np.ndarray         # [i, j]
    H: np.ndarray
    A2: np.ndarray
    rho: np.ndarray
    drho: np.ndarray      # [i]
    hess_rho: np.ndarray  # [i, j]
    lap_rho: np.ndarray

def _unit_normal(params: SpaceParams, r: np.ndarray, t0: np.ndarray, t1: np.ndarray):
    gbar = metric(params, r)
    # Cross product gives the covector annihilating both tangents
    n = np.cross(t0, t1, axis=0)
    nu = n / gbar
    nu = nu / np.sqrt(np.sum(gbar * nu**2, axis=0))
    return gbar, nu

def _tangents(patch: LagrangianPatch) -> np.ndarray:
    g = patch.grid
    o = g.order
    du = [d1(f, g.hx, 0, o) for f in (patch.r, patch.dx, patch.dy)]
    dv = [d1(f, g.hy, 1, o) for f in (patch.r, patch.dx, patch.dy)]
    du[1] = du[1] + 1.0
    dv[2] = dv[2] + 1.0
    return np.array([du, dv])

def patch_frame(patch: LagrangianPatch) -> PatchFrame:
    grid = patch.grid
    o = grid.order
    steps = (grid.hx, grid.hy)
    T = _tangents(patch)
    gbar, nu = _unit_normal(patch.params, patch.r, T[0], T[1])
    gamma = christoffels(patch.params, patch.r)

    second = np.empty((2, 2, 3) + patch.r.shape)
    for a, f in enumerate((patch.r, patch.dx, patch.dy)):
        second[0, 0, a] = d2(f, grid.hx, 0, o)
        second[1, 1, a] = d2(f, grid.hy, 1, o)
        second[0, 1, a] = second[1, 0, a] = d1(d1(f, grid.hx, 0, o), grid.hy, 1, o)
    second += np.einsum('abc...,ib...,jc...->ija...', gamma, T, T)

    g = np.einsum('a...,ia...,ja...->ij...', gbar, T, T)
    det = g[0, 0] * g[1, 1] - g[0, 1]**2
    ginv = np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]]) / det
    h = -np.einsum('a...,ija...,a...->ij...', gbar, second, nu)
    H = np.einsum('ij...,ij...->...', ginv, h)
    mixed = np.einsum('ik...,kj...->ij...', ginv, h)
    A2 = np.einsum('ij...,ji...->...', mixed, mixed)

    rho = patch.rho()
    drho = np.array([d1(rho, steps[i], i, o) for i in range(2)])
    rho2 = np.empty((2, 2) + rho.shape)
    rho2[0, 0] = d2(rho, grid.hx, 0, o)
    rho2[1, 1] = d2(rho, grid.hy, 1, o)
    rho2[0, 1] = rho2[1, 0] = d1(drho[0], grid.hy, 1, o)

    # Induced Christoffel symbols, lowered: [k, i, j] = 1/2 (g_ki,j + g_kj,i - g_ij,k)
    dg = np.array([d1(g, steps[k], k + 2, o) for k in range(2)])  # [k, i, j]: d_k g_ij
    low = 0.5 * (np.einsum('jki...->kij...', dg) + np.einsum('ikj...->kij...', dg) - dg)
    induced = np.einsum('lk...,kij...->lij...', ginv, low)
    hess = rho2 - np.einsum('kij...,k...->ij...', induced, drho)
    lap = np.einsum('ij...,ij...->...', ginv, hess)

    return PatchFrame(tangent=T, second=second, gbar=gbar, nu=nu, g=g, ginv=ginv, sqrt_det=np.sqrt(det),
                      h=h, H=H, A2=A2, rho=rho, drho=drho, hess_rho=hess, lap_rho=lap)

def _velocity(patch: LagrangianPatch) -> np.ndarray:
    T = _tangents(patch)
    _, nu = _unit_normal(patch.params, patch.r, T[0], T[1])
    return patch.rho() * nu

def _advance(patch: LagrangianPatch, dt: float) -> LagrangianPatch:
    state = np.array([patch.r, patch.dx, patch.dy])
    stage = lambda y: patch.moved(*y)
    k1 = _velocity(patch)
    k2 = _velocity(stage(state + 0.5 * dt * k1))
    k3 = _velocity(stage(state + 0.5 * dt * k2))
    k4 = _velocity(stage(state + dt * k3))
    return stage(state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


@dataclass(frozen=True, eq=False)
class PatchTrajectory:
    dt: float
    patches: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.patches)) * self.dt

def evolve_patch(patch: LagrangianPatch, dt: float, steps: int) -> PatchTrajectory:
    if not dt > 0 or steps < 1:
        raise DomainError(f'Patch evolution needs dt > 0 and at least one step, got dt={dt!r}, steps={steps!r}')
    patches = [patch]
    for _ in range(steps):
        patch = _advance(patch, dt)
        patches.append(patch)
    return PatchTrajectory(dt=dt, patches=patches)


def check_evolution_identities(traj: PatchTrajectory) -> dict[str, float]:
    """Max residual of each evolution identity at the middle sample, using
    centered time differences of the left hand sides."""
    if len(traj.patches) < 3:
        raise DomainError(f'Evolution identities need at least 3 time samples, got {len(traj.patches)}')
    m = len(traj.patches) // 2
    before, mid, after = (patch_frame(traj.patches[k]) for k in (m - 1, m, m + 1))
    patch = traj.patches[m]
    two_dt = 2.0 * traj.dt
    rho = mid.rho
    ddt = lambda attr: (getattr(after, attr) - getattr(before, attr)) / two_dt

    metric_res = ddt('g') - 2.0 * rho * mid.h
    area_res = ddt('sqrt_det') - rho * mid.H * mid.sqrt_det

    gamma = christoffels(patch.params, patch.r)
    vel = rho * mid.nu
    dnu = ddt('nu') + np.einsum('abc...,b...,c...->a...', gamma, vel, mid.nu)
    normal_res = np.einsum('a...,ia...,a...->i...', mid.gbar, mid.tangent, dnu) + mid.drho

    rm = riemann(patch.params, patch.r)
    curv = np.einsum('abcd...,ia...,b...,c...,jd...->ij...', rm, mid.tangent, mid.nu, mid.nu, mid.tangent)
    hh = np.einsum('ik...,kl...,lj...->ij...', mid.h, mid.ginv, mid.h)
    h_res = ddt('h') - (-mid.hess_rho + rho * curv + rho * hh)

    ric = ricci_normal(patch.params, patch.r, mid.nu)
    H_res = ddt('H') - (-mid.lap_rho - rho * ric - rho * mid.A2)

    report = {
        'metric': float(np.max(np.abs(metric_res))),
        'area': float(np.max(np.abs(area_res))),
        'normal': float(np.max(np.abs(normal_res))),
        'second_fundamental_form': float(np.max(np.abs(h_res))),
        'mean_curvature': float(np.max(np.abs(H_res))),
    }
    logger.debug('Evolution identity residuals: %s', report)
    return report

def evolution_orders(make_patch: Callable[[int], LagrangianPatch], n: int, dt: float) -> dict[str, float]:
    """Empirical convergence order of each identity residual when the
    parameter spacing and time step are halved together."""
    coarse = check_evolution_identities(evolve_patch(make_patch(n), dt, 2))
    fine = check_evolution_identities(evolve_patch(make_patch(2 * n), 0.5 * dt, 2))
    return {k: math.log2(coarse[k] / fine[k]) for k in coarse}


def monotonicity_integrand(surface: GraphSurface, tol: float | None = MONO_TOL) -> tuple[float, float]:
    """lhs = int r^-1 (-2 Lap r - r R) dA and rhs = -int 2 |grad r|^2 / r^2 dA.

    When tol is given, lhs = rhs and lhs <= 0 are asserted relative to
    max(1, |rhs|)."""
    geom = geometry(surface)
    r = surface.s
    lap = laplacian_intrinsic(surface, r, geom)
    R_int = 2.0 * geom.K
    grid = surface.grid
    lhs = grid.integrate((-2.0 * lap - r * R_int) / r * geom.area_density)
    rhs = -grid.integrate(2.0 * geom.grad_r2 / r**2 * geom.area_density)
    if tol is not None:
        scale = max(1.0, abs(rhs))
        if abs(lhs - rhs) > tol * scale:
            raise PropertyViolation('monotonicity integrand equals -2 int |grad r|^2 / r^2', abs(lhs - rhs) / scale, tol)
        if lhs > tol * scale:
            raise PropertyViolation('monotonicity integrand is nonpositive', lhs / scale, tol)
    return lhs, rhs

def static_consequence(surface: GraphSurface) -> np.ndarray:
    """2b/r^3 - (H nu^r + Lap r + r Ric(nu, nu)); nonnegative by the static
    inequality."""
    geom = geometry(surface)
    params = surface.params
    r = surface.s
    ric = ricci_normal(params, r, geom.nu)
    return 2.0 * params.b / r**3 - (geom.H * geom.nu[R] + geom.lap_r + r * ric)

def z_evolution_residual(surface: GraphSurface, dt: float) -> float:
    mid = flow_step(surface, dt)
    end = flow_step(mid, dt)
    dz2 = (geometry(end).z2 - geometry(surface).z2) / (2.0 * dt)
    return float(np.max(np.abs(dz2 - z2_evolution_rhs(mid))))


def _rel_error(approx: np.ndarray, exact: np.ndarray) -> float:
    return float(np.max(np.abs(approx - exact)) / max(np.max(np.abs(exact)), 1e-300))

def _fd_christoffels(params: SpaceParams, r: float, h: float) -> np.ndarray:
    g = metric(params, r)
    dg = (metric(params, r + h) - metric(params, r - h)) / (2.0 * h)
    gamma = np.zeros((3, 3, 3))
    # Only d_r of the diagonal metric survives
    for a in range(3):
        for b in range(3):
            for c in range(3):
                val = 0.0
                if b == R and a == c:
                    val += dg[a]
                if c == R and a == b:
                    val += dg[a]
                if a == R and b == c:
                    val -= dg[b]
                gamma[a, b, c] = 0.5 * val / g[a]
    return gamma

def _fd_riemann(params: SpaceParams, r: float, h: float) -> np.ndarray:
    gamma = _fd_christoffels(params, r, h)
    dgamma = np.zeros((3, 3, 3, 3))  # [k, a, b, c]: d_k Gamma^a_bc
    dgamma[R] = (_fd_christoffels(params, r + h, h) - _fd_christoffels(params, r - h, h)) / (2.0 * h)
    # R^a_bcd = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb
    up = (np.einsum('cadb->abcd', dgamma) - np.einsum('dacb->abcd', dgamma)
          + np.einsum('ace,edb->abcd', gamma, gamma) - np.einsum('ade,ecb->abcd', gamma, gamma))
    return np.einsum('a,abcd->abcd', metric(params, r), up)

def ambient_fd_suite(params: SpaceParams, radii, h: float = FD_STEP) -> dict[str, float]:
    """Max relative error of each closed form against finite differences of
    the metric, over the sample radii."""
    errors = {'christoffel': 0.0, 'riemann': 0.0, 'ricci': 0.0, 'scalar': 0.0, 'hessian': 0.0}
    for r in radii:
        r = float(r)
        if not r > params.r_s + DEFAULT_MARGIN:
            raise DomainError(f'Sample radius {r!r} must exceed r_s + margin')
        g = metric(params, r)
        gamma = _fd_christoffels(params, r, h)
        rm = _fd_riemann(params, r, h)
        # Ric_bd = R^a_bad
        ric = np.einsum('abad->bd', rm / g[:, None, None, None])
        scalar = float(np.sum(np.diag(ric) / g))

        errors['christoffel'] = max(errors['christoffel'], _rel_error(gamma, christoffels(params, r)))
        errors['riemann'] = max(errors['riemann'], _rel_error(rm, riemann(params, r)))
        errors['ricci'] = max(errors['ricci'], _rel_error(ric, np.diag(ricci(params, r).diag)))
        errors['scalar'] = max(errors['scalar'], _rel_error(np.array(scalar), scalar_curvature(params, r)))
        errors['hessian'] = max(errors['hessian'], _rel_error(-gamma[R], hessian_r(params, r).table))
    logger.info('Ambient finite difference errors: %s', errors)
    return errors


# Suites

@dataclass(frozen=True)
class SuiteConfig:
    r0: float | None = None  # base radius, r_s + 1 when unset
    amplitude: float = 0.1
    n: int = 32
    order: int = DEFAULT_ORDER
    dt: float = 1e-3
    fd_step: float = FD_STEP
    min_order: float = 1.8

    def base_radius(self, params: SpaceParams) -> float:
        return self.r0 if self.r0 is not None else params.r_s + 1.0


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    # 'max': value must not exceed threshold; 'min': value must reach it
    kind: str = 'max'

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        if self.kind == 'max':
            return self.value <= self.threshold
        return self.value >= self.threshold

@dataclass(frozen=True)
class SuiteResult:
    name: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            'passed': self.passed,
            'checks': {c.name: {'value': c.value, 'threshold': c.threshold, 'kind': c.kind, 'passed': c.passed}
                       for c in self.checks},
        }


def bump_surface(params: SpaceParams, n: int, r0: float, amplitude: float, order: int = DEFAULT_ORDER) -> GraphSurface:
    grid = GridSpec.for_space(params, n, n, order)
    x, y = grid.coords()
    s = r0 + amplitude * np.cos(2.0 * math.pi * x / params.px) * np.cos(2.0 * math.pi * y / params.py)
    return GraphSurface(params, grid, s)

def _ratio_order(coarse: float, fine: float) -> float:
    if fine == 0.0:
        return math.inf
    return math.log2(coarse / fine)

@register_suite('ambient')
def ambient_suite(params: SpaceParams, config: SuiteConfig) -> SuiteResult:
    radii = [params.r_s * f for f in (1.5, 2.0, 4.0)] if params.b > 0 else [1.5, 2.0, 4.0]
    errors = ambient_fd_suite(params, radii, config.fd_step)
    checks = [Check(f'fd_{name}', err, 1e-6) for name, err in errors.items()]

    static_err = 0.0
    for r in radii:
        eig = static_tensor(params, r)
        static_err = max(static_err, abs(float(np.min(eig)) + 2.0 * params.b / r**3))
    checks.append(Check('static_min_eigenvalue', static_err, 1e-12))

    F, dF, ddF = eval_profile(params, np.array(radii))
    ident = np.max(np.abs(2.0 * dF + 0.5 * np.array(radii) * ddF + 2.0 * params.b * np.array(radii)**-5))
    checks.append(Check('static_profile_identity', float(ident), 1e-13))
    return SuiteResult('ambient', checks)

@register_suite('surface')
def surface_suite(params: SpaceParams, config: SuiteConfig) -> SuiteResult:
    r0 = config.base_radius(params)
    coarse = bump_surface(params, config.n, r0, config.amplitude, config.order)
    fine = bump_surface(params, 2 * config.n, r0, config.amplitude, config.order)

    gauss = [float(np.max(np.abs(gauss_equation_residual(s)))) for s in (coarse, fine)]
    split = [float(np.max(np.abs(lap_r_split_residual(s)))) for s in (coarse, fine)]
    geom = geometry(fine)
    total_k = fine.grid.integrate(np.abs(geom.K) * geom.area_density)
    return SuiteResult('surface', [
        Check('gauss_equation_ratio', gauss[0] / max(gauss[1], 1e-300), 8.0, 'min'),
        Check('lap_r_split_ratio', split[0] / max(split[1], 1e-300), 8.0, 'min'),
        Check('gauss_bonnet_relative', abs(gauss_bonnet(fine, geom)) / total_k, 1e-3),
    ])

@register_suite('appendixB')
def evolution_suite(params: SpaceParams, config: SuiteConfig) -> SuiteResult:
    r0 = config.base_radius(params)
    checks = []
    for label, speed in (('flow', flow_speed), ('generic', oscillating_speed(params))):
        make = lambda n: LagrangianPatch.from_surface(bump_surface(params, n, r0, config.amplitude, config.order), speed)
        orders = evolution_orders(make, config.n // 2, config.dt)
        checks.extend(Check(f'{label}_{name}_order', order, config.min_order, 'min') for name, order in orders.items())
    return SuiteResult('appendixB', checks)

@register_suite('monotone')
def monotone_suite(params: SpaceParams, config: SuiteConfig) -> SuiteResult:
    r0 = config.base_radius(params)
    surface = bump_surface(params, 2 * config.n, r0, config.amplitude, config.order)
    lhs, rhs = monotonicity_integrand(surface, tol=None)
    scale = max(1.0, abs(rhs))

    coarse = bump_surface(params, config.n, r0, config.amplitude, config.order)
    z_orders = _ratio_order(z_evolution_residual(coarse, config.dt), z_evolution_residual(surface, 0.5 * config.dt))
    return SuiteResult('monotone', [
        Check('integrand_identity', abs(lhs - rhs) / scale, 1e-5),
        Check('integrand_sign', lhs / scale, 1e-12),
        Check('static_consequence_min', float(np.min(static_consequence(surface))), -1e-10, 'min'),
        Check('z_evolution_order', z_orders, config.min_order, 'min'),
    ])

def run_suites(names, params: SpaceParams, config: SuiteConfig | None = None) -> list[SuiteResult]:
    if config is None:
        config = SuiteConfig()
    names = list(names)
    if 'all' in names:
        names = list(suite_table)
    results = []
    for name in names:
        try:
            suite = suite_table[name]
        except KeyError:
            raise DomainError(f'Unknown verify suite {name!r}, expected one of {sorted(suite_table)} or "all"') from None
        result = suite(params, config)
        logger.info('Suite %s: %s', name, 'passed' if result.passed else 'FAILED')
        for check in result.checks:
            if not check.passed:
                logger.warning('Suite %s check %s: %r against %s %r', name, check.name, check.value, check.kind, check.threshold)
        results.append(result)
    return results
