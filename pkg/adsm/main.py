# Copyright (C) 2025 John Schember <john@nachtimwald.com>
# SPDX-License-Identifier: GPL-3.0-or-later

import argparse
import logging
import sys

import numpy as np

from adsm import loader
from adsm.constants import (DEFAULT_MARGIN, DEFAULT_ORDER, EQUALITY_TOL, EXIT_BREAKDOWN, EXIT_OK, EXIT_PROPERTY,
                            EXIT_VALIDATION, STENCIL_ORDERS)
from adsm.errors import DomainError, FlowBreakdown, PropertyViolation
from adsm.flow import FlowConfig, fit_decay, flow_run
from adsm.melvin_space import SpaceParams, eval_profile, ricci, scalar_curvature, sectional_curvatures, static_tensor
from adsm.surface.core import GridSpec, geometry, q_functional, quadrature_self_estimate
from adsm.variational import (PerturbationSpec, Symmetry, integrand_identity_residual, perturbation_sweep,
                              q_gap_axis_direct, q_gap_axis_ibp)
from adsm.verify import SuiteConfig, run_suites, suite_table

logger = logging.getLogger('adsm')

SPACE_COLUMNS = ('r', 'F', 'K_rx', 'K_ry', 'K_xy', 'scalar', 'ric_r', 'ric_x', 'ric_y', 'static_min')

def _common() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--b', type=float, default=1.0, help='Charge parameter b >= 0')
    parser.add_argument('--px', type=float, default=1.0, help='Period of the x circle')
    parser.add_argument('--nx', type=int, default=32, help='Grid points along x (profile length for symmetric)')
    parser.add_argument('--ny', type=int, default=32, help='Grid points along y')
    parser.add_argument('--order', type=int, default=DEFAULT_ORDER, choices=STENCIL_ORDERS, help='Stencil order')
    parser.add_argument('--margin', type=float, default=DEFAULT_MARGIN, help='Required height above r_s')
    parser.add_argument('--seed', type=int, default=0, help='Seed for random generators')
    parser.add_argument('--out', help='Write the result here instead of stdout')
    parser.add_argument('--format', choices=('csv', 'json'), help='Output format')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v for info, -vv for debug logging')
    return parser

def parse_args(argv=None):
    common = _common()
    parser = argparse.ArgumentParser(prog='adsm', description='Q functional and weighted normal flow on AdS-Melvin space')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('space', parents=[common], help='Soliton radius, y period and curvatures')
    p.add_argument('--radii', type=float, nargs='+', help='Sample radii, defaults to 1.5, 2 and 4 times r_s')

    for name, text in (('q', 'Evaluate Q and the inequality gap'), ('flow', 'Run the weighted normal flow')):
        p = sub.add_parser(name, parents=[common], help=text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument('--input', help='Surface JSON file')
        src.add_argument('--gen', help='Built in surface: const:r0, cos:r0,ax,kx,ay,ky or random:r0,amp,bandlimit[,seed]')
        if name == 'q':
            p.add_argument('--geometry-out', help='Also write the per point geometry CSV here')
        else:
            p.add_argument('--t-end', type=float, default=30.0, help='Final flow time')
            p.add_argument('--dt', type=float, default=1e-2, help='Initial and maximum time step')
            p.add_argument('--sample-every', type=int, default=10, help='Steps between diagnostic samples')
            p.add_argument('--no-strict', action='store_true', help='Log monotonicity violations instead of failing')
            p.add_argument('--fit', type=float, nargs=2, metavar=('T_LO', 'T_HI'), help='Fit decay exponents on this window')

    p = sub.add_parser('perturb', parents=[common], help='First and second variation about a coordinate torus')
    p.add_argument('--r0', type=float, required=True, help='Radius of the coordinate torus')
    p.add_argument('--phi', default='cos:1,0', help='Perturbation: JSON file, cos:kx,ky or random:bandlimit[,seed]')
    p.add_argument('--eps0', type=float, help='Largest eps of the sweep')

    p = sub.add_parser('symmetric', parents=[common], help='Gap of a graph depending on one coordinate')
    p.add_argument('--axis', choices=('x', 'y'), required=True,
                   help='y: s depends on x only, x: s depends on y only')
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument('--profile', help='Profile JSON file')
    src.add_argument('--gen', help='Built in profile: const:r0, cos:r0,a,k or random:r0,amp,bandlimit[,seed]')

    p = sub.add_parser('verify', parents=[common], help='Run the oracle suites')
    p.add_argument('--suite', default='all', choices=list(suite_table) + ['all'], help='Suite to run')

    return parser.parse_args(argv)

def setup_logging(verbose: int) -> None:
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')

def emit(args, text: str) -> None:
    if args.out:
        with open(args.out, 'w') as f:
            f.write(text)
    else:
        sys.stdout.write(text)

def load_or_generate(args):
    if args.input:
        return loader.load_surface(args.input, args.order, args.margin)
    params = SpaceParams(b=args.b, px=args.px)
    return loader.generate_surface(args.gen, params, args.nx, args.ny, args.order, args.margin, args.seed)


def cmd_space(args):
    params = SpaceParams(b=args.b, px=args.px)
    radii = args.radii or [params.r_s * f for f in (1.5, 2.0, 4.0)]
    rows = []
    for r in radii:
        F = float(eval_profile(params, r)[0])
        k = sectional_curvatures(params, r)
        eig = ricci(params, r).eigenvalues
        rows.append([r, F, *k, float(scalar_curvature(params, r)), *eig, float(np.min(static_tensor(params, r)))])

    if args.format == 'csv':
        text = f'# r_s={params.r_s!r} P_y={params.py!r}\n' + loader.csv_text(SPACE_COLUMNS, np.array(rows))
    else:
        text = loader.json_text({
            'b': params.b,
            'r_s': params.r_s,
            'P_y': params.py,
            'samples': [dict(zip(SPACE_COLUMNS, map(float, row))) for row in rows],
        })
    emit(args, text)
    return EXIT_OK

def cmd_q(args):
    surface = load_or_generate(args)
    geom = geometry(surface)
    q = q_functional(surface, geom)
    params = surface.params
    eps_quad = quadrature_self_estimate(surface)

    if abs(q.gap) <= EQUALITY_TOL * params.area:
        verdict = 'equality (coordinate torus)'
    elif q.gap >= -eps_quad:
        if q.gap < 0:
            logger.warning('Negative gap %r within the quadrature estimate %r', q.gap, eps_quad)
        verdict = 'satisfied'
    else:
        raise PropertyViolation('Q >= P_x P_y (2 r_s^3 - 1/2)', q.gap, -eps_quad)

    report = {'Q': q.q, 'gap': q.gap, 'floor': params.q_floor, 'eps_quad': eps_quad, 'verdict': verdict}
    if args.format == 'csv':
        text = 'Q,gap,floor,eps_quad,verdict\n' + f'{q.q:.17g},{q.gap:.17g},{params.q_floor:.17g},{eps_quad:.17g},{verdict}\n'
    else:
        text = loader.json_text(report)
    if args.geometry_out:
        with open(args.geometry_out, 'w') as f:
            f.write(loader.geometry_csv(surface, geom))
    emit(args, text)
    return EXIT_OK

def cmd_flow(args):
    surface = load_or_generate(args)
    config = FlowConfig(t_end=args.t_end, dt_init=args.dt, sample_every=args.sample_every, strict=not args.no_strict)
    diag = flow_run(surface, config)
    fit = fit_decay(diag, tuple(args.fit)) if args.fit else None

    if args.format == 'json':
        data = diag.as_dict()
        if fit is not None:
            data['fit'] = {'z2_exponent': fit.z2_exponent, 'z2_residual': fit.z2_residual,
                           'h_exponent': fit.h_exponent, 'h_residual': fit.h_residual}
        text = loader.json_text(data)
    else:
        if fit is not None:
            logger.info('Decay fit: %s', fit)
        text = loader.csv_text(diag.csv_columns, diag.csv_table())
    emit(args, text)
    return EXIT_OK

def cmd_perturb(args):
    params = SpaceParams(b=args.b, px=args.px)
    grid = GridSpec.for_space(params, args.nx, args.ny, args.order)
    if args.phi.endswith('.json'):
        phi = loader.load_field(args.phi, args.nx, args.ny)
    else:
        phi = loader.generate_field(args.phi, params, args.nx, args.ny, args.seed)
    eps = ()
    if args.eps0 is not None:
        e = abs(args.eps0)
        eps = (-e, -0.5 * e, 0.0, 0.5 * e, e)
    spec = PerturbationSpec(params, grid, args.r0, phi, eps, args.margin)
    report = perturbation_sweep(spec)
    emit(args, loader.json_text(report.as_dict()))
    return EXIT_OK

def cmd_symmetric(args):
    symmetry = Symmetry(args.axis)
    if args.profile:
        profile = loader.load_profile(args.profile, symmetry, args.order, args.margin)
    else:
        params = SpaceParams(b=args.b, px=args.px)
        profile = loader.generate_profile(args.gen, params, symmetry, args.nx, args.order, args.margin, args.seed)
    report = {
        'gap_direct': q_gap_axis_direct(profile),
        'gap_ibp': q_gap_axis_ibp(profile),
        'residual_max': integrand_identity_residual(profile),
    }
    emit(args, loader.json_text(report))
    return EXIT_OK

def cmd_verify(args):
    params = SpaceParams(b=args.b, px=args.px)
    config = SuiteConfig(n=args.nx, order=args.order)
    results = run_suites([args.suite], params, config)
    emit(args, loader.json_text({r.name: r.as_dict() for r in results}))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f'Error: verify suites failed: {", ".join(failed)}', file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK

commands = {
    'space': cmd_space,
    'q': cmd_q,
    'flow': cmd_flow,
    'perturb': cmd_perturb,
    'symmetric': cmd_symmetric,
    'verify': cmd_verify,
}

def main(argv=None) -> int:
    args = parse_args(argv)
    setup_logging(args.verbose)

    try:
        return commands[args.command](args)
    except FlowBreakdown as e:
        print(f'Error: {e}', file=sys.stderr)
        return EXIT_BREAKDOWN
    except PropertyViolation as e:
        print(f'Error: {e}', file=sys.stderr)
        return EXIT_PROPERTY
    except (DomainError, OSError) as e:
        print(f'Error: {e}', file=sys.stderr)
        return EXIT_VALIDATION

if __name__ == '__main__':
    sys.exit(main())
