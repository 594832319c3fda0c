# Copyright (C) 2025 John Schember <john@nachtimwald.com>
# SPDX-License-Identifier: GPL-3.0-or-later

class AdsmError(Exception):
    pass

class DomainError(AdsmError, ValueError):
    pass

class MarginError(DomainError):

    def __init__(self, index: tuple[int, ...], value: float, floor: float):
        self.index = index
        self.value = value
        self.floor = floor
        super().__init__(f'Height {value!r} at grid point {index} is not above r_s + margin = {floor!r}')

class FlowBreakdown(AdsmError):

    def __init__(self, t: float, dt: float, index: tuple[int, ...] | None, diagnostics=None,
                 reason: str = 'step rejected below dt_min'):
        self.t = t
        self.dt = dt
        self.index = index
        self.diagnostics = diagnostics
        where = f' near grid point {index}' if index is not None else ''
        super().__init__(f'Flow breakdown at t={t!r}: {reason} (dt={dt!r}){where}')

class PropertyViolation(AdsmError):

    def __init__(self, prop: str, observed: float, tol: float, payload=None):
        self.prop = prop
        self.observed = observed
        self.tol = tol
        self.payload = payload
        super().__init__(f'Property "{prop}" violated: observed {observed!r}, tolerance {tol!r}')
