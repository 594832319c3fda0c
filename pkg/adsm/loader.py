# Copyright (C) 2025 John Schember <john@nachtimwald.com>
# SPDX-License-Identifier: GPL-3.0-or-later

# Surface and profile files, built in generators and report writers.
#
# Surface JSON: {"b", "Px", "nx", "ny", "s"} with s row major, x index slowest,
# s[i*ny + j] = s(x_i, y_j). Profile JSON: {"b", "Px", "n", "s"}.

import io
import json
import logging
import math

import numpy as np

from .constants import DEFAULT_MARGIN, DEFAULT_ORDER
from .errors import DomainError
from .melvin_space import SpaceParams
from .surface.core import GeometryField, GraphSurface, GridSpec
from .variational import AxisProfile, Symmetry

logger = logging.getLogger(__name__)

GEOMETRY_COLUMNS = ('i', 'j', 'x', 'y', 's', 'H', 'z2', 'K', 'area_density')


def _read_json(path: str) -> dict:
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DomainError(f'{path}: not valid JSON: {e}') from e
    if not isinstance(data, dict):
        raise DomainError(f'{path}: expected a JSON object')
    return data

def _require(data: dict, path: str, *keys: str) -> None:
    missing = [k for k in keys if k not in data]
    if missing:
        raise DomainError(f'{path}: missing keys {missing}')

def _number(data: dict, path: str, key: str, kind=float):
    try:
        return kind(data[key])
    except (TypeError, ValueError):
        raise DomainError(f'{path}: {key} must be a number, got {data[key]!r}') from None

def _heights(data: dict, path: str, count: int) -> np.ndarray:
    try:
        s = np.asarray(data['s'], dtype=float)
    except (TypeError, ValueError):
        raise DomainError(f'{path}: s must be a flat list of numbers') from None
    if s.shape != (count,):
        raise DomainError(f'{path}: expected {count} values in s, got shape {s.shape}')
    return s

def _params(data: dict, path: str) -> SpaceParams:
    return SpaceParams(b=_number(data, path, 'b'), px=_number(data, path, 'Px'))

def load_surface(path: str, order: int = DEFAULT_ORDER, margin: float = DEFAULT_MARGIN) -> GraphSurface:
    data = _read_json(path)
    _require(data, path, 'b', 'Px', 'nx', 'ny', 's')
    params = _params(data, path)
    nx, ny = _number(data, path, 'nx', int), _number(data, path, 'ny', int)
    s = _heights(data, path, nx * ny)
    grid = GridSpec.for_space(params, nx, ny, order)
    logger.debug('Loaded %dx%d surface from %s', nx, ny, path)
    return GraphSurface(params, grid, s.reshape(nx, ny), margin)

def surface_to_json(surface: GraphSurface) -> str:
    data = {
        'b': surface.params.b,
        'Px': surface.params.px,
        'nx': surface.grid.nx,
        'ny': surface.grid.ny,
        's': surface.s.reshape(-1).tolist(),
    }
    return json.dumps(data, sort_keys=True)

def load_profile(path: str, symmetry: Symmetry, order: int = DEFAULT_ORDER,
                 margin: float = DEFAULT_MARGIN) -> AxisProfile:
    data = _read_json(path)
    _require(data, path, 'b', 'Px', 'n', 's')
    params = _params(data, path)
    s = _heights(data, path, _number(data, path, 'n', int))
    return AxisProfile(params, symmetry, s, margin, order)

def profile_to_json(profile: AxisProfile) -> str:
    data = {'b': profile.params.b, 'Px': profile.params.px, 'n': profile.n, 's': profile.s.tolist()}
    return json.dumps(data, sort_keys=True)

def load_field(path: str, nx: int, ny: int) -> np.ndarray:
    """A perturbation direction stored in the surface format; only nx, ny and s are read."""
    data = _read_json(path)
    _require(data, path, 'nx', 'ny', 's')
    shape = (_number(data, path, 'nx', int), _number(data, path, 'ny', int))
    if shape != (nx, ny):
        raise DomainError(f'{path}: field is {shape[0]}x{shape[1]}, grid is {nx}x{ny}')
    return _heights(data, path, nx * ny).reshape(nx, ny)


# Generators

def _split(spec: str) -> tuple[str, list[float]]:
    kind, _, rest = spec.partition(':')
    try:
        args = [float(v) for v in rest.split(',')] if rest else []
    except ValueError:
        raise DomainError(f'Bad generator arguments in {spec!r}') from None
    return kind, args

def _arity(spec: str, args: list, lo: int, hi: int) -> None:
    if not lo <= len(args) <= hi:
        raise DomainError(f'Generator {spec!r} takes {lo} to {hi} arguments, got {len(args)}')

def _random_modes(rng: np.random.Generator, bandlimit: int, phases: list[np.ndarray]) -> np.ndarray:
    # Sum of a cos + b sin over integer modes with |k|_inf <= bandlimit, k != 0
    dims = len(phases)
    out = np.zeros(phases[0].shape)
    ranges = [range(-bandlimit, bandlimit + 1)] * dims
    for k in np.array(np.meshgrid(*ranges, indexing='ij')).reshape(dims, -1).T:
        if not np.any(k):
            continue
        theta = sum(int(ki) * p for ki, p in zip(k, phases))
        a, b = rng.standard_normal(2)
        out += a * np.cos(theta) + b * np.sin(theta)
    return out

def _normalize(field: np.ndarray, amp: float) -> np.ndarray:
    peak = float(np.max(np.abs(field)))
    if peak == 0.0:
        return field
    return field * (amp / peak)

def generate_surface(spec: str, params: SpaceParams, nx: int, ny: int, order: int = DEFAULT_ORDER,
                     margin: float = DEFAULT_MARGIN, seed: int = 0) -> GraphSurface:
    """const:r0 | cos:r0,ax,kx,ay,ky | random:r0,amp,bandlimit[,seed]"""
    grid = GridSpec.for_space(params, nx, ny, order)
    x, y = grid.coords()
    px = 2.0 * math.pi * x / params.px
    py = 2.0 * math.pi * y / params.py
    kind, args = _split(spec)

    match kind:
        case 'const':
            _arity(spec, args, 1, 1)
            s = np.full((nx, ny), args[0])
        case 'cos':
            _arity(spec, args, 5, 5)
            r0, ax, kx, ay, ky = args
            s = r0 + ax * np.cos(kx * px) + ay * np.cos(ky * py)
        case 'random':
            _arity(spec, args, 3, 4)
            r0, amp, bandlimit = args[:3]
            rng = np.random.default_rng(int(args[3]) if len(args) > 3 else seed)
            s = r0 + _normalize(_random_modes(rng, int(bandlimit), [px, py]), amp)
        case _:
            raise DomainError(f'Unknown surface generator {kind!r}, expected const, cos or random')
    return GraphSurface(params, grid, s, margin)

def generate_profile(spec: str, params: SpaceParams, symmetry: Symmetry, n: int, order: int = DEFAULT_ORDER,
                     margin: float = DEFAULT_MARGIN, seed: int = 0) -> AxisProfile:
    """const:r0 | cos:r0,a,k | random:r0,amp,bandlimit[,seed]"""
    period = params.px if symmetry is Symmetry.Y_SYMMETRIC else params.py
    phase = 2.0 * math.pi * np.arange(n) / n
    kind, args = _split(spec)

    match kind:
        case 'const':
            _arity(spec, args, 1, 1)
            s = np.full(n, args[0])
        case 'cos':
            _arity(spec, args, 3, 3)
            r0, a, k = args
            s = r0 + a * np.cos(k * phase)
        case 'random':
            _arity(spec, args, 3, 4)
            r0, amp, bandlimit = args[:3]
            rng = np.random.default_rng(int(args[3]) if len(args) > 3 else seed)
            s = r0 + _normalize(_random_modes(rng, int(bandlimit), [phase]), amp)
        case _:
            raise DomainError(f'Unknown profile generator {kind!r}, expected const, cos or random')
    logger.debug('Generated %s profile over period %r', spec, period)
    return AxisProfile(params, symmetry, s, margin, order)

def generate_field(spec: str, params: SpaceParams, nx: int, ny: int, seed: int = 0) -> np.ndarray:
    """cos:kx,ky is the plane wave cos(2 pi (kx x/Px + ky y/Py));
    random:bandlimit[,seed] a unit amplitude band limited field."""
    grid = GridSpec.for_space(params, nx, ny)
    x, y = grid.coords()
    px = 2.0 * math.pi * x / params.px
    py = 2.0 * math.pi * y / params.py
    kind, args = _split(spec)

    match kind:
        case 'cos':
            _arity(spec, args, 2, 2)
            return np.cos(args[0] * px + args[1] * py)
        case 'random':
            _arity(spec, args, 1, 2)
            rng = np.random.default_rng(int(args[1]) if len(args) > 1 else seed)
            return _normalize(_random_modes(rng, int(args[0]), [px, py]), 1.0)
        case _:
            raise DomainError(f'Unknown perturbation {kind!r}, expected cos or random')


# Writers

def csv_text(columns, rows: np.ndarray) -> str:
    buf = io.StringIO()
    np.savetxt(buf, rows, fmt='%.17g', delimiter=',', header=','.join(columns), comments='')
    return buf.getvalue()

def geometry_csv(surface: GraphSurface, geom: GeometryField) -> str:
    nx, ny = surface.grid.nx, surface.grid.ny
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing='ij')
    x, y = surface.grid.coords()
    cols = [i, j, x, y, surface.s, geom.H, geom.z2, geom.K, geom.area_density]
    rows = np.column_stack([c.reshape(-1) for c in cols])
    buf = io.StringIO()
    buf.write(','.join(GEOMETRY_COLUMNS) + '\n')
    for row in rows:
        buf.write(f'{int(row[0])},{int(row[1])},' + ','.join(f'{v:.17g}' for v in row[2:]) + '\n')
    return buf.getvalue()

def json_text(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + '\n'
