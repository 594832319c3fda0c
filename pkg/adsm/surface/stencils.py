# Copyright (C) 2025 John Schember <john@nachtimwald.com>
# SPDX-License-Identifier: GPL-3.0-or-later

# Periodic central difference stencils.
#
# Access table of order to tuple.
# The tuple is (first derivative weights, second derivative weights), both
# centered, with offsets running -m..m. E.g: stencil_table[2][1] = [1, -2, 1]
#
# Indices wrap, so the grid is a torus and no boundary closure is needed.

import numpy as np

from ..constants import DEFAULT_ORDER
from ..errors import DomainError

stencil_table = {
    2: (np.array([-1/2, 0, 1/2]),
        np.array([1, -2, 1])),
    4: (np.array([1/12, -2/3, 0, 2/3, -1/12]),
        np.array([-1/12, 4/3, -5/2, 4/3, -1/12])),
    6: (np.array([-1/60, 3/20, -3/4, 0, 3/4, -3/20, 1/60]),
        np.array([1/90, -3/20, 3/2, -49/18, 3/2, -3/20, 1/90])),
}

def _weights(order: int, which: int) -> np.ndarray:
    try:
        return stencil_table[order][which]
    except KeyError:
        raise DomainError(f'Unsupported stencil order {order!r}, expected one of {sorted(stencil_table)}') from None

def _apply(f: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    m = len(weights) // 2
    out = np.zeros_like(f, dtype=float)
    # Fixed summation order keeps results bit reproducible. Weights sum to
    # zero, so differencing against the centre value is exact on constants.
    for k, w in zip(range(-m, m + 1), weights):
        if k != 0 and w != 0:
            out += w * (np.roll(f, -k, axis=axis) - f)
    return out

def d1(f: np.ndarray, h: float, axis: int = 0, order: int = DEFAULT_ORDER) -> np.ndarray:
    return _apply(f, _weights(order, 0), axis) / h

def d2(f: np.ndarray, h: float, axis: int = 0, order: int = DEFAULT_ORDER) -> np.ndarray:
    return _apply(f, _weights(order, 1), axis) / h**2
