# Copyright (C) 2025 John Schember <john@nachtimwald.com>
# SPDX-License-Identifier: GPL-3.0-or-later

# Closed form geometry of the AdS-Melvin space
#
#   g = r^-2 F^-1 dr^2 + r^2 dx^2 + r^2 F dy^2,   F(r) = 1 - r^-3 - b r^-4
#
# Coordinates are always ordered (r, x, y). Every function accepts a float or a
# numpy array for r and broadcasts; tensor valued results put the tensor
# indices first, e.g. christoffels()[a, b, c] is Gamma^a_bc.

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .constants import ROOT_TOL
from .errors import DomainError

logger = logging.getLogger(__name__)

R, X, Y = 0, 1, 2


def _profile(b: float, r):
    r = np.asarray(r, dtype=float)
    F = 1.0 - r**-3 - b * r**-4
    dF = 3.0 * r**-4 + 4.0 * b * r**-5
    ddF = -12.0 * r**-5 - 20.0 * b * r**-6
    return F, dF, ddF

def solve_r_s(b: float) -> float:
    if b < 0:
        raise DomainError(f'Charge parameter must satisfy b >= 0, got b={b!r}')
    if b == 0:
        return 1.0

    # F(r) = 0 for r > 0 is r^4 - r - b = 0, which is smooth and increasing on [1, inf)
    poly = lambda r: r**4 - r - b
    dpoly = lambda r: 4.0 * r**3 - 1.0
    r_s = optimize.brentq(poly, 1.0, 2.0 + b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    r_s -= poly(r_s) / dpoly(r_s)

    F = float(_profile(b, r_s)[0])
    if abs(F) > ROOT_TOL:
        raise DomainError(f'Soliton radius did not converge for b={b!r}: F(r_s)={F!r}')
    logger.debug('r_s(b=%r) = %r', b, r_s)
    return r_s

def period_y(b: float) -> float:
    r_s = solve_r_s(b)
    _, dF, _ = _profile(b, r_s)
    return 4.0 * math.pi / (r_s**2 * float(dF))

def period_y_simplified(b: float) -> float:
    # Uses r_s^4 = r_s + b
    r_s = solve_r_s(b)
    return 4.0 * math.pi * r_s**3 / (3.0 * r_s + 4.0 * b)


@dataclass(frozen=True)
class SpaceParams:
    b: float
    px: float = 1.0
    r_s: float = field(init=False)
    py: float = field(init=False)

    def __post_init__(self):
        if self.b < 0:
            raise DomainError(f'Charge parameter must satisfy b >= 0, got b={self.b!r}')
        if not self.px > 0:
            raise DomainError(f'x-period must be positive, got Px={self.px!r}')
        object.__setattr__(self, 'r_s', solve_r_s(self.b))
        object.__setattr__(self, 'py', period_y(self.b))

    @property
    def area(self) -> float:
        return self.px * self.py

    @property
    def q_floor(self) -> float:
        """Lower bound P_x P_y (2 r_s^3 - 1/2) of Q, attained by coordinate tori."""
        return self.area * (2.0 * self.r_s**3 - 0.5)


def _check_positive(r) -> None:
    if np.any(np.asarray(r) <= 0):
        raise DomainError(f'Profile requires r > 0, got min r={np.min(r)!r}')

def _check_chart(params: SpaceParams, r) -> None:
    if np.any(np.asarray(r) <= params.r_s):
        raise DomainError(f'Metric degenerates for r <= r_s={params.r_s!r}, got min r={np.min(r)!r}')

def eval_profile(params: SpaceParams, r):
    _check_positive(r)
    return _profile(params.b, r)

def metric(params: SpaceParams, r) -> np.ndarray:
    _check_chart(params, r)
    r = np.asarray(r, dtype=float)
    F = _profile(params.b, r)[0]
    return np.array([1.0 / (r**2 * F), r**2, r**2 * F])

def christoffels(params: SpaceParams, r) -> np.ndarray:
    _check_chart(params, r)
    r = np.asarray(r, dtype=float)
    F, dF, _ = _profile(params.b, r)

    gamma = np.zeros((3, 3, 3) + r.shape)
    gamma[R, R, R] = -1.0 / r - 0.5 * dF / F
    gamma[R, X, X] = -r**3 * F
    gamma[R, Y, Y] = -r**3 * F**2 - 0.5 * r**4 * F * dF
    gamma[X, R, X] = gamma[X, X, R] = 1.0 / r
    gamma[Y, R, Y] = gamma[Y, Y, R] = 1.0 / r + 0.5 * dF / F
    return gamma

def sectional_curvatures(params: SpaceParams, r) -> np.ndarray:
    """Sectional curvatures of the (r,x), (r,y) and (x,y) coordinate planes."""
    _check_chart(params, r)
    F, dF, ddF = _profile(params.b, r)
    r = np.asarray(r, dtype=float)
    k_rx = -F - 0.5 * r * dF
    k_ry = -F - 2.0 * r * dF - 0.5 * r**2 * ddF
    k_xy = -F - 0.5 * r * dF
    return np.array([k_rx, k_ry, k_xy])

def riemann(params: SpaceParams, r) -> np.ndarray:
    # Lowered, with R_abab = K_ab g_aa g_bb. The curvature operator is diagonal
    # on the coordinate bivectors, so only the pairs {a,b} = {c,d} survive.
    g = metric(params, r)
    k = sectional_curvatures(params, r)
    r = np.asarray(r, dtype=float)

    rm = np.zeros((3, 3, 3, 3) + r.shape)
    for (a, b), kab in zip(((R, X), (R, Y), (X, Y)), k):
        val = kab * g[a] * g[b]
        rm[a, b, a, b] = rm[b, a, b, a] = val
        rm[a, b, b, a] = rm[b, a, a, b] = -val
    return rm


@dataclass(frozen=True)
class Ricci:
    diag: np.ndarray         # R_rr, R_xx, R_yy
    eigenvalues: np.ndarray  # relative to g, same order

def ricci(params: SpaceParams, r) -> Ricci:
    g = metric(params, r)
    F, dF, ddF = _profile(params.b, r)
    r = np.asarray(r, dtype=float)

    r_rr = -2.0 * r**-2 - 2.5 * dF / (r * F) - 0.5 * ddF / F
    r_xx = -2.0 * r**2 * F - r**3 * dF
    r_yy = -2.0 * r**2 * F**2 - 2.5 * r**3 * F * dF - 0.5 * r**4 * F * ddF
    diag = np.array([r_rr, r_xx, r_yy])
    return Ricci(diag=diag, eigenvalues=diag / g)

def ricci_normal(params: SpaceParams, r, nu) -> np.ndarray:
    """Ric(nu, nu) for a contravariant field nu[a] living at radius r."""
    diag = ricci(params, r).diag
    nu = np.asarray(nu)
    return np.sum(diag * nu**2, axis=0)

def scalar_curvature(params: SpaceParams, r, extend: bool = False):
    # extend allows evaluating the closed form inside the soliton radius
    if extend:
        _check_positive(r)
    else:
        _check_chart(params, r)
    r = np.asarray(r, dtype=float)
    return -6.0 + 2.0 * params.b / r**4


@dataclass(frozen=True)
class HessianR:
    table: np.ndarray      # nabla_a nabla_b r in coordinates
    laplacian: np.ndarray  # trace against g

def hessian_r(params: SpaceParams, r) -> HessianR:
    # r is a coordinate, so its Hessian is -Gamma^r_ab
    table = -christoffels(params, r)[R]
    g = metric(params, r)
    lap = table[R, R] / g[R] + table[X, X] / g[X] + table[Y, Y] / g[Y]
    return HessianR(table=table, laplacian=lap)

def static_tensor(params: SpaceParams, r) -> np.ndarray:
    """Eigenvalues, relative to g and in (r, x, y) order, of
    Hess(r) - (Lap r) g - r Ric."""
    hess = hessian_r(params, r)
    g = metric(params, r)
    eig = ricci(params, r).eigenvalues
    r = np.asarray(r, dtype=float)
    hdiag = np.array([hess.table[a, a] / g[a] for a in (R, X, Y)])
    return hdiag - hess.laplacian - r * eig

def volume_below(params: SpaceParams, s):
    """Inner integral of r dV from r_s up to s, per unit dx dy."""
    s = np.asarray(s, dtype=float)
    return (s**3 - params.r_s**3) / 3.0


@dataclass(frozen=True)
class AmbientTensors:
    r: float
    metric: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: Ricci
    scalar: float
    hessian: HessianR
    static: np.ndarray

def ambient_tensors(params: SpaceParams, r: float) -> AmbientTensors:
    return AmbientTensors(
        r=r,
        metric=metric(params, r),
        christoffel=christoffels(params, r),
        riemann=riemann(params, r),
        ricci=ricci(params, r),
        scalar=scalar_curvature(params, r),
        hessian=hessian_r(params, r),
        static=static_tensor(params, r),
    )
