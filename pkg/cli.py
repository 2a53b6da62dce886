r"""
Command line entry point:

    python cli.py solve configs/replication_y0.61.json
    python cli.py sweep configs/replication_y0.6*.json --both-families --out sweep.csv
    python cli.py bounds UNEMPLOY.csv JTSJOL.csv

Results go to stdout (or --out), logging to stderr. Exit codes: 0 success,
2 bad input (config schema, unreadable or malformed files), 3 an economy
without a valid equilibrium.
"""
import argparse
import json
import logging
import os
import sys
import textwrap
from typing import *

import yaml
from pydantic import BaseModel, ValidationError, root_validator, validator

import calibration
import elasticity
import empirics
import equilibrium
import experiment
import matching
import utils

logger = logging.getLogger('dmp.cli')
logger.setLevel(logging.INFO)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
DAYS_PER_YEAR = 365

class ConfigError(ValueError):
    """Raise for configs that are valid documents but unusable for a command."""

def reject_unknown_keys(cls, values):
    unknown = sorted(set(values) - set(cls.__fields__))
    if unknown:
        raise ValueError(f"unknown keys {unknown}; accepted keys: {sorted(cls.__fields__)}")
    return values

class TechnologyConfig(BaseModel):
    r"""The technology block of an economy config."""
    family: str
    alpha: Optional[float] = None
    gamma: Optional[float] = None
    efficiency: Optional[float] = None

    _known_keys = root_validator(pre=True, allow_reuse=True)(reject_unknown_keys)

    @validator('family')
    def known_family(cls, value):
        if value not in matching.FAMILIES:
            raise ValueError(f"unknown matching family {value!r}, expected one of {list(matching.FAMILIES)}")
        return value

    @root_validator(skip_on_failure=True)
    def shape_for_family(cls, values):
        shape_name = matching.FAMILIES[values['family']][1]
        if values.get(shape_name) is None:
            raise ValueError(f"{values['family']} technology needs {shape_name}")
        #validates the shape and efficiency ranges
        matching.make_technology(values['family'], values[shape_name], values.get('efficiency') or 1.0)
        return values

    @property
    def shape(self) -> float:
        return getattr(self, matching.FAMILIES[self.family][1])

    def shape_for(self, family: str) -> Optional[float]:
        return getattr(self, matching.FAMILIES[family][1])

class EconomyConfig(BaseModel):
    r"""One economy: parameters, discounting, technology and an optional target."""
    y: float
    z: float
    c: float
    phi: float
    s: float
    r: Optional[float] = None
    beta: Optional[float] = None
    annual_interest_rate: Optional[float] = None
    technology: Optional[TechnologyConfig] = None
    target_u: Optional[float] = None

    _known_keys = root_validator(pre=True, allow_reuse=True)(reject_unknown_keys)

    @validator('annual_interest_rate')
    def positive_annual_rate(cls, value):
        if value is not None and not value > 0:
            raise ValueError(f"annual_interest_rate must be positive, got {value}")
        return value

    @validator('target_u')
    def unemployment_rate(cls, value):
        if value is not None and not 0 < value < 1:
            raise ValueError(f"target_u must lie in (0, 1), got {value}")
        return value

    @root_validator(skip_on_failure=True)
    def one_discount_rate(cls, values):
        given = [key for key in ('r', 'beta', 'annual_interest_rate') if values.get(key) is not None]
        if len(given) != 1:
            raise ValueError(f"give exactly one of r, beta, annual_interest_rate (got {given or 'none'})")
        equilibrium.EconomyParams(**_param_fields(values))
        return values

    def economy_params(self) -> equilibrium.EconomyParams:
        return equilibrium.EconomyParams(**_param_fields(self.dict()))

def _param_fields(values) -> dict:
    fields = {key: values[key] for key in ('y', 'z', 'c', 'phi', 's')}
    if values.get('r') is not None:
        fields['r'] = values['r']
    elif values.get('beta') is not None:
        fields['beta'] = values['beta']
    else:
        fields['beta'] = (1.0 / (1.0 + values['annual_interest_rate'])) ** (1.0 / DAYS_PER_YEAR)
    return fields

class Economy(NamedTuple):
    label: str
    path: str
    config: EconomyConfig

def load_economies(configs: List[str], overrides: Optional[List[str]]=None) -> List[Economy]:
    r"""One economy per config file, each with the override files merged on top."""
    economies = []
    for path in configs:
        config = utils.parse_configs([path] + list(overrides or []), EconomyConfig)
        label = os.path.splitext(os.path.basename(path))[0]
        economies.append(Economy(label, path, config))
    return economies

def economy_technologies(economy: Economy, both_families: bool) -> List[Tuple[str, str, float]]:
    r"""
    (label, family, shape) of each technology to run for an economy: the
    configured one, or both families with the configured or default shapes.
    """
    tech = economy.config.technology
    if not both_families:
        if tech is None:
            raise ConfigError(f"{economy.path}: no technology block (or use --both-families)")
        return [(economy.label, tech.family, tech.shape)]
    defaults = {'cobb_douglas': matching.DEFAULT_ALPHA, 'nonlinear': matching.DEFAULT_GAMMA}
    out = []
    for family, default in defaults.items():
        shape = tech.shape_for(family) if tech is not None else None
        out.append((f"{economy.label}_{family}", family, default if shape is None else shape))
    return out

def resolve_technology(
        economy: Economy,
        family: str,
        shape: float,
        tol: float,
        use_efficiency: bool=True,
    ) -> matching.MatchingTechnology:
    r"""The configured efficiency when there is one, else calibrate to target_u."""
    config = economy.config
    tech = config.technology
    if use_efficiency and tech is not None and tech.family == family and tech.efficiency is not None:
        return matching.make_technology(family, shape, tech.efficiency)
    if config.target_u is None:
        raise ConfigError(f"{economy.path}: needs technology.efficiency or target_u")
    target = calibration.CalibrationTarget(
        target_u=config.target_u, params=config.economy_params(), family=family, shape=shape)
    return calibration.calibrate(target, tol).technology

def _text(name: str, value) -> str:
    if isinstance(value, bool):
        return f"{name}={value}"
    if isinstance(value, float):
        return f"{name}={value:.7f}"
    return f"{name}={value}"

def _print_block(lines: List[str], out, first: bool):
    if not first:
        out.write('\n')
    out.write('\n'.join(lines) + '\n')

def cmd_solve(args, out):
    rows, first = [], True
    for economy in load_economies(args.configs, args.override):
        p = economy.config.economy_params()
        for label, family, shape in economy_technologies(economy, args.both_families):
            tech = resolve_technology(economy, family, shape, args.tol, use_efficiency=not args.both_families)
            if args.format == 'csv':
                rows.append(experiment.solve_row(label, p, tech, args.tol))
                continue
            eq, report = elasticity.equilibrium_elasticities(p, tech, args.tol)
            if args.format == 'json':
                utils.write_json_line({
                    'economy': label, 'family': family, 'shape': shape,
                    'efficiency': tech.efficiency,
                    'equilibrium': eq.dict(), 'elasticity': report.dict(),
                }, out)
            else:
                lines = [f"economy={label}", f"technology={tech.label()}", f"efficiency={tech.efficiency:.10g}"]
                lines += [_text(name, value) for name, value in (
                    ('theta*', eq.theta), ('u*', eq.u), ('w*', eq.w), ('q*', eq.q), ('f*', eq.f),
                    ('upsilon', report.upsilon), ('eta_theta_y', report.eta_theta_y),
                    ('eta_w_y', report.eta_w_y),
                )]
                _print_block(lines, out, first)
            first = False
    if rows:
        experiment.emit_csv(rows, out)

def cmd_calibrate(args, out):
    first = True
    for economy in load_economies(args.configs, args.override):
        for label, family, shape in economy_technologies(economy, args.both_families):
            if economy.config.target_u is None:
                raise ConfigError(f"{economy.path}: calibrate needs target_u")
            target = calibration.CalibrationTarget(
                target_u=economy.config.target_u, params=economy.config.economy_params(),
                family=family, shape=shape)
            result = calibration.calibrate(target, args.tol)
            if args.format == 'json':
                utils.write_json_line({
                    'economy': label, 'family': family, 'shape': shape,
                    'efficiency': result.technology.efficiency,
                    'theta': result.theta, 'q': result.fill, 'f': result.find,
                    'u': result.equilibrium.u,
                }, out)
            else:
                lines = [f"economy={label}", f"technology={result.technology.label()}",
                         f"efficiency={result.technology.efficiency:.17g}"]
                lines += [_text(name, value) for name, value in (
                    ('theta*', result.theta), ('q*', result.fill), ('f*', result.find),
                    ('u*', result.equilibrium.u),
                )]
                _print_block(lines, out, first)
            first = False
            if args.out_dir:
                write_calibrated_config(economy, label, family, shape, result.technology, args.out_dir)

def write_calibrated_config(economy, label, family, shape, tech, out_dir) -> str:
    r"""Write the economy config back with technology.efficiency filled in."""
    os.makedirs(out_dir, exist_ok=True)
    data = economy.config.dict(exclude_none=True)
    shape_name = matching.FAMILIES[family][1]
    data['technology'] = utils.update_dict_recursively(
        data.get('technology', {}),
        {'family': family, shape_name: shape, 'efficiency': tech.efficiency},
    )
    path = os.path.join(out_dir, label + '.json')
    with open(path, 'w', encoding='utf-8') as outfile:
        json.dump(data, outfile, indent=2, sort_keys=True)
        outfile.write('\n')
    logger.info(f"Wrote calibrated config {path}")
    return path

def cmd_elasticity(args, out):
    specs = []
    for economy in load_economies(args.configs, args.override):
        p = economy.config.economy_params()
        equilibrium.require_existence(p)
        for label, family, shape in economy_technologies(economy, args.both_families):
            tech = resolve_technology(economy, family, shape, args.tol, use_efficiency=not args.both_families)
            specs.append(experiment.SweepSpec(
                economy=label, params=p, family=family, shape=shape,
                efficiency=tech.efficiency, grid=[p.y]))
    rows = experiment.run_sweeps(specs, tol=args.tol)
    panel = experiment.elasticity_panel(specs, rows)
    if args.format == 'csv':
        experiment.emit_csv(panel, out)
        return

    for i, (spec, row) in enumerate(zip(specs, panel)):
        tech = matching.make_technology(spec.family, spec.shape, spec.efficiency)
        report = elasticity.tightness_elasticity(spec.params, tech, row.theta, args.tol)
        fd_eta, fd_dw = elasticity.finite_difference_elasticities(spec.params, tech, tol=args.tol)
        if args.format == 'json':
            utils.write_json_line({
                'economy': spec.economy, 'family': spec.family, 'shape': spec.shape,
                'efficiency': tech.efficiency, 'theta': row.theta,
                'elasticity': report.dict(),
                'finite_difference': {'eta_theta_y': fd_eta, 'dw_dy': fd_dw},
            }, out)
            continue
        lines = [f"economy={spec.economy}", f"technology={tech.label()}", _text('theta*', row.theta)]
        lines += [_text(name, value) for name, value in report.dict().items()]
        lines += [_text('fd_eta_theta_y', fd_eta), _text('fd_dw_dy', fd_dw)]
        _print_block(lines, out, i == 0)

def cmd_sweep(args, out):
    specs = []
    for economy in load_economies(args.configs, args.override):
        p = economy.config.economy_params()
        equilibrium.require_existence(p)
        try:
            grid = experiment.perturbation_grid(
                p.y, y_min=args.y_min, y_max=args.y_max, points=args.points, half_width=args.half_width)
        except matching.DomainError as e:
            #a bad range is an input error, not an infeasible economy
            raise ConfigError(f"{economy.path}: {e}") from e
        for label, family, shape in economy_technologies(economy, args.both_families):
            tech = resolve_technology(economy, family, shape, args.tol, use_efficiency=not args.both_families)
            specs.append(experiment.SweepSpec(
                economy=label, params=p, family=family, shape=shape,
                efficiency=tech.efficiency, grid=grid))
    rows = experiment.run_sweeps(specs, n_jobs=args.n_jobs, progress=args.progress, tol=args.tol)
    #nothing is written unless every row solved
    experiment.emit_csv(rows, args.out or out)

def _load_pair(args):
    unemp = empirics.load_series(args.unemployment)
    vac = empirics.load_series(args.vacancies)
    return unemp, vac

def cmd_bounds(args, out):
    unemp, vac = _load_pair(args)
    ts = empirics.tightness_series(unemp, vac, start=args.start)
    ts = empirics.bound_series(ts, alpha=args.alpha, gamma=args.gamma)
    empirics.write_bounds_csv(ts, args.out or out)

def cmd_beveridge(args, out):
    unemp, vac = _load_pair(args)
    curve = empirics.beveridge_points(unemp, vac, start=args.start)
    if curve.correlation is None:
        logger.info(f"{len(curve.points)} points, correlation undefined")
    else:
        logger.info(f"{len(curve.points)} points, correlation {curve.correlation:.4f}")
    empirics.write_beveridge_csv(curve, args.out or out)

def cmd_convert_rate(args, out):
    out.write('%.17g\n' % experiment.monthly_rate(args.daily, args.days))

COMMANDS = {
    'solve': cmd_solve,
    'calibrate': cmd_calibrate,
    'elasticity': cmd_elasticity,
    'sweep': cmd_sweep,
    'bounds': cmd_bounds,
    'beveridge': cmd_beveridge,
    'convert-rate': cmd_convert_rate,
}

def positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value

def parse_args(argv=None):
    epilog = textwrap.dedent(f"""
    Example economy config (json):
    ------------------------------
    {{
      "y": 0.61, "z": 0.6, "c": 0.1, "phi": 0.5, "s": 0.001,
      "beta": 0.9998594803001535,
      "technology": {{"family": "cobb_douglas", "alpha": 0.5}},
      "target_u": 0.05
    }}

    Give exactly one of r, beta, annual_interest_rate. Without
    technology.efficiency the efficiency is calibrated to target_u.
    """)

    parser = argparse.ArgumentParser(
        formatter_class=utils.ArgParseHelpFormatter,
        description="Solve, calibrate and analyze steady states of the DMP matching model.",
        epilog=epilog
    )
    parser.add_argument('--log-dir', default=None,
        help="also write a debug log to this directory")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('--quiet', action='store_true', default=False,
        help="only log warnings and errors, no progress bars")
    verbosity.add_argument('--debug', action='store_true', default=False,
        help="log solver details")
    subparsers = parser.add_subparsers(dest='command', required=True)

    def economy_command(name, help_text):
        sub = subparsers.add_parser(name, help=help_text, formatter_class=utils.ArgParseHelpFormatter, epilog=epilog)
        sub.add_argument('configs', nargs='+',
            help="economy config file(s), one economy each")
        sub.add_argument('--override', nargs='*', default=[],
            help="config file(s) merged over every economy config (later override earlier)")
        sub.add_argument('--both-families', action='store_true', default=False,
            help="run the Cobb-Douglas and the nonlinear technology, each calibrated to target_u")
        sub.add_argument('--tol', type=float, default=equilibrium.DEFAULT_TOL,
            help="tolerance on the tightness residual")
        return sub

    solve = economy_command('solve', "solve the steady state of each economy")
    solve.add_argument('--format', choices=['text', 'csv', 'json'], default='text')

    calibrate = economy_command('calibrate', "calibrate matching efficiency to target_u")
    calibrate.add_argument('--format', choices=['text', 'json'], default='text')
    calibrate.add_argument('--out-dir', default=None,
        help="write each config back here with technology.efficiency filled in")

    elasticity_cmd = economy_command('elasticity', "decompose the elasticity of tightness at equilibrium")
    elasticity_cmd.add_argument('--format', choices=['text', 'csv', 'json'], default='text')

    sweep = economy_command('sweep', "perturb productivity around each economy's y")
    sweep.add_argument('--y-min', type=float, default=None,
        help="lowest productivity (default: y - half width)")
    sweep.add_argument('--y-max', type=float, default=None,
        help="highest productivity (default: y + half width)")
    sweep.add_argument('--points', type=positive_int, default=experiment.DEFAULT_POINTS)
    sweep.add_argument('--half-width', type=float, default=experiment.DEFAULT_HALF_WIDTH)
    sweep.add_argument('--n-jobs', type=positive_int, default=1,
        help="processes for the grid points")
    sweep.add_argument('--out', default=None, help="csv path (default: stdout)")

    for name, help_text in (('bounds', "tightness and the bounds on Upsilon from observed series"),
                       ('beveridge', "Beveridge curve points from observed series")):
        sub = subparsers.add_parser(name, help=help_text, formatter_class=utils.ArgParseHelpFormatter)
        sub.add_argument('unemployment', help="FRED csv of unemployed persons (thousands)")
        sub.add_argument('vacancies', help="FRED csv of job openings (thousands)")
        sub.add_argument('--start', default=empirics.DATE_FLOOR, help="first month to use")
        sub.add_argument('--out', default=None, help="csv path (default: stdout)")
        if name == 'bounds':
            sub.add_argument('--alpha', type=float, default=matching.DEFAULT_ALPHA)
            sub.add_argument('--gamma', type=float, default=matching.DEFAULT_GAMMA)

    convert = subparsers.add_parser('convert-rate', help="daily to monthly probability",
        formatter_class=utils.ArgParseHelpFormatter)
    convert.add_argument('--daily', type=float, required=True, help="daily probability")
    convert.add_argument('--days', type=positive_int, default=experiment.DAYS_PER_MONTH)

    args = parser.parse_args(argv)
    args.progress = not args.quiet and sys.stderr.isatty()
    return args

def set_verbosity(args):
    level = logging.INFO
    if args.debug:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    utils.setup_logger('dmp', folder=args.log_dir, level=level)
    #module loggers sit at INFO; --debug has to open them up too
    for name in list(logging.root.manager.loggerDict):
        if name.startswith('dmp.'):
            logging.getLogger(name).setLevel(logging.DEBUG if args.debug else logging.INFO)

def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INPUT
    set_verbosity(args)
    out = sys.stdout

    try:
        COMMANDS[args.command](args, out)
    except (equilibrium.EquilibriumError, matching.DomainError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_INFEASIBLE
    except (ValidationError, ConfigError, empirics.SeriesFormatError, empirics.JoinError,
            yaml.YAMLError, OSError, ValueError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_INPUT
    return EXIT_OK

if __name__ == '__main__':
    sys.exit(main())
