# Copyright (C) 2025 John Schember <john@nachtimwald.com>
# SPDX-License-Identifier: GPL-3.0-or-later

# Special cases of the Q inequality: graphs depending on one coordinate only,
# and small perturbations r0 + eps phi of a coordinate torus.

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .constants import (DEFAULT_MARGIN, DEFAULT_ORDER, IBP_SIGN_TOL, MIN_GRID, STENCIL_ORDERS,
                        SWEEP_D2Q_RTOL, SWEEP_DQ_TOL, SWEEP_EPS_FACTOR)
from .errors import DomainError, PropertyViolation
from .melvin_space import SpaceParams, eval_profile
from .surface.core import GraphSurface, GridSpec, check_margin, q_functional
from .surface.stencils import d1, d2

logger = logging.getLogger(__name__)


class Symmetry(enum.Enum):
    Y_SYMMETRIC = 'y'  # s = s(x), period P_x
    X_SYMMETRIC = 'x'  # s = s(y), period P_y


@dataclass(frozen=True, eq=False)
class AxisProfile:
    params: SpaceParams
    symmetry: Symmetry
    s: np.ndarray
    margin: float = DEFAULT_MARGIN
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1 or len(s) < MIN_GRID:
            raise DomainError(f'Profile must be a 1D array of at least {MIN_GRID} values, got shape {s.shape}')
        if self.order not in STENCIL_ORDERS:
            raise DomainError(f'Stencil order must be one of {STENCIL_ORDERS}, got {self.order!r}')
        check_margin(self.params, s, self.margin)
        s.setflags(write=False)
        object.__setattr__(self, 's', s)

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def period(self) -> float:
        return self.params.px if self.symmetry is Symmetry.Y_SYMMETRIC else self.params.py

    @property
    def other_period(self) -> float:
        return self.params.py if self.symmetry is Symmetry.Y_SYMMETRIC else self.params.px

    @property
    def h(self) -> float:
        return self.period / self.n

    def coords(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    def lift(self, n_other: int) -> GraphSurface:
        """The same graph as a 2D height field."""
        if self.symmetry is Symmetry.Y_SYMMETRIC:
            s = np.repeat(self.s[:, None], n_other, axis=1)
            nx, ny = self.n, n_other
        else:
            s = np.repeat(self.s[None, :], n_other, axis=0)
            nx, ny = n_other, self.n
        grid = GridSpec.for_space(self.params, nx, ny, self.order)
        return GraphSurface(self.params, grid, s, self.margin)

    def _integrate(self, f: np.ndarray) -> float:
        return float(np.sum(f) * self.h * self.other_period)


def _derivs(profile: AxisProfile):
    s = profile.s
    return d1(s, profile.h, 0, profile.order), d2(s, profile.h, 0, profile.order)

def gap_integrand_axis(profile: AxisProfile) -> np.ndarray:
    r = profile.s
    ds, dds = _derivs(profile)
    F, dF, _ = eval_profile(profile.params, r)
    if profile.symmetry is Symmetry.Y_SYMMETRIC:
        slope2 = ds**2 / (r**4 * F)
        num = -dds + (4.0 * F + r * dF) / (r * F) * ds**2
    else:
        slope2 = ds**2 / (r**4 * F**2)
        num = -dds / F + (8.0 * F + 3.0 * r * dF) / (2.0 * r * F**2) * ds**2
    # H r^4 F N - 2 r^3 + 1/2 with the torus part cancelled, as in the 2D integrand
    return (num - (2.0 * r**3 - 0.5) * slope2) / (1.0 + slope2)

def q_gap_axis_direct(profile: AxisProfile) -> float:
    return profile._integrate(gap_integrand_axis(profile))

def _dlambda(profile: AxisProfile, ds: np.ndarray, F: np.ndarray) -> np.ndarray:
    r = profile.s
    if profile.symmetry is Symmetry.Y_SYMMETRIC:
        return ds / (r**2 * np.sqrt(F))
    return ds / (r**2 * F)

def q_gap_axis_ibp(profile: AxisProfile) -> float:
    r = profile.s
    ds, _ = _derivs(profile)
    F, dF, _ = eval_profile(profile.params, r)
    lam = _dlambda(profile, ds, F)
    if profile.symmetry is Symmetry.Y_SYMMETRIC:
        sqF = np.sqrt(F)
        # d/ds (s^2 F^(1/2))
        weight = r**2 * sqF * (2.0 * r * sqF + r**2 * dF / (2.0 * sqF))
    else:
        weight = 2.0 * r**3 * F
    integrand = weight * lam * np.arctan(lam)

    worst = float(np.min(integrand))
    if worst < -IBP_SIGN_TOL:
        raise PropertyViolation('integrated by parts gap integrand is nonnegative', worst, IBP_SIGN_TOL)
    return profile._integrate(integrand)

def integrand_identity_residual(profile: AxisProfile) -> float:
    """Max pointwise gap between the direct integrand and its exact
    derivative form -r^2 w lambda'' / (1 + lambda'^2)."""
    r = profile.s
    ds, _ = _derivs(profile)
    F, _, _ = eval_profile(profile.params, r)
    lam = _dlambda(profile, ds, F)
    ddlam = d1(lam, profile.h, 0, profile.order)
    w = np.sqrt(F) if profile.symmetry is Symmetry.Y_SYMMETRIC else 1.0
    rhs = -r**2 * w * ddlam / (1.0 + lam**2)
    return float(np.max(np.abs(gap_integrand_axis(profile) - rhs)))


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    params: SpaceParams
    grid: GridSpec
    r0: float
    phi: np.ndarray
    eps_list: tuple[float, ...] = ()
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.shape != (self.grid.nx, self.grid.ny):
            raise DomainError(f'Perturbation shape {phi.shape} does not match grid {self.grid.nx}x{self.grid.ny}')
        floor = self.params.r_s + self.margin
        if not self.r0 > floor:
            raise DomainError(f'Base radius r0={self.r0!r} must exceed r_s + margin = {floor!r}')
        object.__setattr__(self, 'phi', phi)

        eps = self.eps_list
        if not eps:
            eps0 = SWEEP_EPS_FACTOR * (self.r0 - self.params.r_s)
            eps = (-eps0, -0.5 * eps0, 0.0, 0.5 * eps0, eps0)
        eps = tuple(sorted(float(e) for e in eps))
        if len(eps) < 5:
            raise DomainError(f'Perturbation sweep needs at least 5 values of eps, got {len(eps)}')
        if 0.0 not in eps or eps != tuple(-e for e in reversed(eps)):
            raise DomainError(f'Perturbation sweep values must be symmetric about 0 and include 0, got {eps!r}')
        lo, hi = float(np.min(phi)), float(np.max(phi))
        for e in (eps[0], eps[-1]):
            if self.r0 + min(e * lo, e * hi) <= floor:
                raise DomainError(f'Perturbation eps={e!r} pushes the surface below r_s + margin')
        object.__setattr__(self, 'eps_list', eps)

    def surface(self, eps: float) -> GraphSurface:
        return GraphSurface(self.params, self.grid, self.r0 + eps * self.phi, self.margin)


def second_variation_form(spec: PerturbationSpec) -> float:
    g = spec.grid
    r0 = spec.r0
    F0, dF0, _ = eval_profile(spec.params, r0)
    phi_x = d1(spec.phi, g.hx, 0, g.order)
    phi_y = d1(spec.phi, g.hy, 1, g.order)
    cx = (4.0 * F0 + r0 * dF0) / (2.0 * r0 * F0)
    cy = 2.0 / (r0 * F0)
    return 2.0 * g.integrate(cx * phi_x**2 + cy * phi_y**2)


@dataclass(frozen=True)
class SweepReport:
    q0: float
    dq: float
    d2q_fd: float
    d2q_form: float
    gaps: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {'Q0': self.q0, 'dQ': self.dq, 'd2Q_fd': self.d2q_fd, 'd2Q_form': self.d2q_form}

def _richardson(d_coarse: float, d_fine: float, e_coarse: float, e_fine: float) -> float:
    # Both central differences carry an e^2 leading error
    return (e_coarse**2 * d_fine - e_fine**2 * d_coarse) / (e_coarse**2 - e_fine**2)

def perturbation_sweep(spec: PerturbationSpec, check: bool = True) -> SweepReport:
    gaps = {}
    q0 = None
    for eps in spec.eps_list:
        q = q_functional(spec.surface(eps))
        gaps[eps] = q.gap
        if eps == 0.0:
            q0 = q.q
        logger.debug('eps=%r gap=%r', eps, q.gap)

    positive = [e for e in spec.eps_list if e > 0]
    e0, e1 = positive[-1], positive[-2]
    g0 = gaps[0.0]
    first = lambda e: (gaps[e] - gaps[-e]) / (2.0 * e)
    second = lambda e: (gaps[e] - 2.0 * g0 + gaps[-e]) / e**2
    dq = _richardson(first(e0), first(e1), e0, e1)
    d2q = _richardson(second(e0), second(e1), e0, e1)
    form = second_variation_form(spec)
    report = SweepReport(q0=q0, dq=dq, d2q_fd=d2q, d2q_form=form, gaps=gaps)
    logger.info('dQ/deps=%r d2Q/deps2=%r closed form=%r', dq, d2q, form)

    if check:
        scale = abs(q0)
        if abs(dq) > SWEEP_DQ_TOL * scale:
            raise PropertyViolation('first variation vanishes at a coordinate torus', abs(dq) / scale,
                                    SWEEP_DQ_TOL, payload=report)
        if form > SWEEP_DQ_TOL * scale:
            rel = abs(d2q - form) / form
            if rel > SWEEP_D2Q_RTOL:
                raise PropertyViolation('second variation matches closed form', rel, SWEEP_D2Q_RTOL, payload=report)
        elif abs(d2q) > SWEEP_DQ_TOL * scale:
            raise PropertyViolation('second variation vanishes for constant perturbations', abs(d2q) / scale,
                                    SWEEP_DQ_TOL, payload=report)
    return report
