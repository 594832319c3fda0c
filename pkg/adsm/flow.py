# Copyright (C) 2025 John Schember <john@nachtimwald.com>
# SPDX-License-Identifier: GPL-3.0-or-later

# Weighted normal flow d(phi)/dt = r^-1 nu, written for graphs as the scalar
# equation ds/dt = s F N = F^(1/2) z on the height field.

import logging
from dataclasses import dataclass, field

import numpy as np

from .constants import FLOW_DT_MIN, FLOW_MAX_STEPS, FLOW_SAFETY, FLOW_SAMPLE_EVERY, MONO_TOL, SPEED_FORM_TOL
from .errors import DomainError, FlowBreakdown, MarginError, PropertyViolation
from .melvin_space import eval_profile
from .surface.core import GraphSurface, check_margin, geometry, q_functional
from .surface.stencils import d1

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowConfig:
    t_end: float
    dt_init: float = 1e-2
    safety: float = FLOW_SAFETY
    sample_every: int = FLOW_SAMPLE_EVERY
    max_steps: int = FLOW_MAX_STEPS
    dt_min: float = FLOW_DT_MIN
    mono_tol: float = MONO_TOL
    # Raise on a monotonicity violation instead of only logging it
    strict: bool = True

    def __post_init__(self):
        if not self.t_end > 0:
            raise DomainError(f'Flow end time must be positive, got {self.t_end!r}')
        if not self.dt_init > 0:
            raise DomainError(f'Initial time step must be positive, got {self.dt_init!r}')
        if not 0 < self.safety <= 1:
            raise DomainError(f'Safety factor must lie in (0, 1], got {self.safety!r}')
        if self.sample_every < 1:
            raise DomainError(f'Sample interval must be a positive step count, got {self.sample_every!r}')
        if self.max_steps < 1:
            raise DomainError(f'Step limit must be positive, got {self.max_steps!r}')


def _speed_terms(surface: GraphSurface):
    g = surface.grid
    s = surface.s
    s_x = d1(s, g.hx, 0, g.order)
    s_y = d1(s, g.hy, 1, g.order)
    F, dF, _ = eval_profile(surface.params, s)
    z2 = 1.0 + s_x**2 / (s**4 * F) + s_y**2 / (s**4 * F**2)
    return s_x, s_y, F, dF, z2

def flow_rhs(surface: GraphSurface) -> np.ndarray:
    check_margin(surface.params, surface.s, surface.margin)
    s = surface.s
    _, _, F, _, z2 = _speed_terms(surface)
    N = np.sqrt(z2 / (s**2 * F))
    rhs = s * F * N

    alt = np.sqrt(F) * np.sqrt(z2)
    err = float(np.max(np.abs(rhs - alt) / np.maximum(1.0, np.abs(rhs))))
    if err > SPEED_FORM_TOL:
        raise PropertyViolation('speed s F N equals F^(1/2) z', err, SPEED_FORM_TOL)
    return rhs

def z2_evolution_rhs(surface: GraphSurface) -> np.ndarray:
    """Closed form time derivative of z^2 along the flow."""
    g = surface.grid
    s = surface.s
    s_x, s_y, F, dF, z2 = _speed_terms(surface)
    z = np.sqrt(z2)
    z_x = d1(z, g.hx, 0, g.order)
    z_y = d1(z, g.hy, 1, g.order)
    sqF = np.sqrt(F)
    return (-4.0 / s * z * sqF * (z2 - 1.0)
            - z * dF * s_y**2 / (s**4 * F**2 * sqF)
            + 2.0 * s_x * z_x / (s**4 * sqF)
            + 2.0 * s_y * z_y / (s**4 * F * sqF))

def flow_step(surface: GraphSurface, dt: float) -> GraphSurface:
    if not dt > 0:
        raise DomainError(f'Time step must be positive, got {dt!r}')
    s = surface.s
    k1 = flow_rhs(surface)
    k2 = flow_rhs(surface.with_heights(s + 0.5 * dt * k1))
    k3 = flow_rhs(surface.with_heights(s + 0.5 * dt * k2))
    k4 = flow_rhs(surface.with_heights(s + dt * k3))
    return surface.with_heights(s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


@dataclass(frozen=True, eq=False)
class FlowDiagnostics:
    t: np.ndarray
    q: np.ndarray
    gap: np.ndarray
    dqdt: np.ndarray
    z2max_minus_1: np.ndarray
    hminus2_pos_max: np.ndarray
    c0_drift: np.ndarray
    smin_minus_rs: np.ndarray
    smax_minus_t: np.ndarray
    t_minus_smin: np.ndarray
    lap_r_l1: np.ndarray
    zmax_slack: np.ndarray
    c0: float
    steps: int
    rejected: int
    surface: GraphSurface | None = field(default=None, repr=False)

    csv_columns = ('t', 'Q', 'gap', 'dQdt', 'z2max_minus_1', 'Hminus2_pos_max', 'c0_drift', 'smin_minus_rs')

    def csv_table(self) -> np.ndarray:
        return np.column_stack([self.t, self.q, self.gap, self.dqdt, self.z2max_minus_1,
                                self.hminus2_pos_max, self.c0_drift, self.smin_minus_rs])

    def as_dict(self) -> dict:
        return {
            't': self.t.tolist(),
            'Q': self.q.tolist(),
            'gap': self.gap.tolist(),
            'dQdt': self.dqdt.tolist(),
            'z2max_minus_1': self.z2max_minus_1.tolist(),
            'Hminus2_pos_max': self.hminus2_pos_max.tolist(),
            'c0_drift': self.c0_drift.tolist(),
            'smin_minus_rs': self.smin_minus_rs.tolist(),
            'smax_minus_t': self.smax_minus_t.tolist(),
            't_minus_smin': self.t_minus_smin.tolist(),
            'lap_r_l1': self.lap_r_l1.tolist(),
            'zmax_slack': self.zmax_slack.tolist(),
            'c0': self.c0,
            'steps': self.steps,
            'rejected': self.rejected,
        }


class _Recorder():

    def __init__(self):
        self.rows = []
        self.c0 = None
        self.steps = 0
        self.rejected = 0

    def sample(self, surface: GraphSurface, t: float) -> dict:
        geom = geometry(surface)
        q = q_functional(surface, geom)
        s = surface.s
        if self.c0 is None:
            self.c0 = float(np.mean(s)) - t

        z2m1 = geom.z2 - 1.0
        k = np.unravel_index(np.argmax(z2m1), z2m1.shape)
        z2max = float(geom.z2[k])
        damping = 4.0 / s[k] * np.sqrt(z2max) * np.sqrt(geom.F[k]) * (z2max - 1.0)

        row = {
            't': t,
            'q': q.q,
            'gap': q.gap,
            'z2max_minus_1': float(z2m1[k]),
            'zmax_damping': float(damping),
            'hminus2_pos_max': float(np.max(np.maximum(geom.H - 2.0, 0.0))),
            'c0_drift': float(np.max(np.abs(s - t - self.c0))),
            'smin_minus_rs': float(np.min(s)) - surface.params.r_s,
            'smax_minus_t': float(np.max(s)) - t,
            't_minus_smin': t - float(np.min(s)),
            'lap_r_l1': surface.grid.integrate(np.abs(geom.lap_r) * geom.area_density),
        }
        self.rows.append(row)
        return row

    def build(self, surface: GraphSurface | None = None) -> FlowDiagnostics:
        col = lambda key: np.array([row[key] for row in self.rows])
        t = col('t')
        q = col('q')
        z2m1 = col('z2max_minus_1')
        if len(t) > 1:
            dqdt = np.gradient(q, t)
            slack = np.gradient(z2m1, t) + col('zmax_damping')
        else:
            dqdt = np.zeros_like(t)
            slack = np.zeros_like(t)
        return FlowDiagnostics(
            t=t, q=q, gap=col('gap'), dqdt=dqdt,
            z2max_minus_1=z2m1,
            hminus2_pos_max=col('hminus2_pos_max'),
            c0_drift=col('c0_drift'),
            smin_minus_rs=col('smin_minus_rs'),
            smax_minus_t=col('smax_minus_t'),
            t_minus_smin=col('t_minus_smin'),
            lap_r_l1=col('lap_r_l1'),
            zmax_slack=slack,
            c0=self.c0 if self.c0 is not None else float('nan'),
            steps=self.steps,
            rejected=self.rejected,
            surface=surface,
        )


def _stable_dt(surface: GraphSurface, config: FlowConfig, t: float) -> float:
    speed = float(np.max(np.abs(flow_rhs(surface))))
    g = surface.grid
    dt = config.dt_init
    if speed > 0:
        dt = min(dt, config.safety * min(g.hx, g.hy) / speed)
    return min(dt, config.t_end - t)

def flow_run(surface: GraphSurface, config: FlowConfig) -> FlowDiagnostics:
    rec = _Recorder()
    t = 0.0
    prev = rec.sample(surface, t)
    logger.info('Flow start: Q=%r gap=%r', prev['q'], prev['gap'])

    since_sample = 0
    while t < config.t_end:
        if rec.steps >= config.max_steps:
            raise FlowBreakdown(t, 0.0, None, rec.build(surface), reason=f'step limit {config.max_steps} reached')

        dt = _stable_dt(surface, config, t)
        while True:
            # Non-finite heights fail the margin check too
            try:
                nxt = flow_step(surface, dt)
                break
            except MarginError as e:
                rec.rejected += 1
                dt *= 0.5
                logger.debug('Step rejected at t=%r near %s, retrying with dt=%r', t, e.index, dt)
                if dt < config.dt_min:
                    raise FlowBreakdown(t, dt, e.index, rec.build(surface)) from e

        surface = nxt
        # Land exactly on t_end
        t = config.t_end if config.t_end - (t + dt) < 1e-12 * config.t_end else t + dt
        rec.steps += 1
        since_sample += 1

        if since_sample >= config.sample_every or t >= config.t_end:
            since_sample = 0
            row = rec.sample(surface, t)
            bound = prev['q'] + config.mono_tol * abs(prev['q'])
            if row['q'] > bound:
                excess = (row['q'] - prev['q']) / abs(prev['q'])
                if config.strict:
                    raise PropertyViolation('Q nonincreasing along the flow', excess, config.mono_tol,
                                            payload=rec.build(surface))
                logger.warning('Q increased at t=%r by %r relative', t, excess)
            logger.info('t=%.6g Q=%.17g gap=%.6g z2max-1=%.6g', t, row['q'], row['gap'], row['z2max_minus_1'])
            prev = row

    return rec.build(surface)


@dataclass(frozen=True)
class DecayFit:
    z2_exponent: float
    z2_residual: float
    h_exponent: float
    h_residual: float

def _fit(logt: np.ndarray, values: np.ndarray, what: str) -> tuple[float, float]:
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise DomainError(f'Series {what} must be positive on the fit window')
    coef, res, *_ = np.polyfit(logt, np.log(values), 1, full=True)
    return float(coef[0]), float(res[0]) if len(res) else 0.0

def fit_decay(diag: FlowDiagnostics, window: tuple[float, float]) -> DecayFit:
    """Fit max(z^2 - 1) ~ (1+t)^p and max(H-2)_+ ~ (1+t)^q (1 + log(1+t))."""
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise DomainError(f'Fit window must satisfy t_lo < t_hi, got {window!r}')
    mask = (diag.t >= t_lo) & (diag.t <= t_hi)
    if np.count_nonzero(mask) < 3:
        raise DomainError(f'Fit window {window!r} holds fewer than 3 samples')

    t = diag.t[mask]
    logt = np.log1p(t)
    z_exp, z_res = _fit(logt, diag.z2max_minus_1[mask], 'max(z^2 - 1)')
    h_exp, h_res = _fit(logt, diag.hminus2_pos_max[mask] / (1.0 + logt), 'max(H - 2)_+')
    return DecayFit(z2_exponent=z_exp, z2_residual=z_res, h_exponent=h_exp, h_residual=h_res)
