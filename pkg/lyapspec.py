#!/usr/bin/env python3
"""
lyapspec: pressure, Lyapunov spectrum, Gibbs measures and w-measure sampling for Markov interval maps
"""

import argparse
import logging
import os
import sys

import numpy as np

from config import RunConfig, TOLERANCES, load_map_config, load_schedule_config
from entropy import DEFAULT_DEPTHS, EPSILON_LADDER, zero_exponent_report
from errors import DegenerateModelError, LyapSpecError
from maps import map_from_config
from measures import (conformal_level, equilibrium_for_exponent, gibbs_measure, gibbs_rows,
                      mass_rows)
from pressure import (OracleSource, PressureSource, d_zero, default_d_grid, degeneracy_test,
                      pressure_curve, subsystem)
from spectrum import spectrum_curve
from utils import setup_logging, to_csv, write_json, write_manifest
from wmeasure import acceptance_fraction, sample_many, schedule_from_config

logger = logging.getLogger(__name__)

def _tolerance(text):
  name, _, value = text.partition('=')
  if name not in TOLERANCES or not value:
    raise argparse.ArgumentTypeError(f"expected NAME=VALUE with NAME in {sorted(TOLERANCES)}, got {text!r}")
  return name, float(value)


def parse_args(argv=None):
  parser = argparse.ArgumentParser(description='Lyapunov spectra of Markov interval maps with parabolic points')

  common = argparse.ArgumentParser(add_help=False)
  common.add_argument('--map-config', required=True,
                      help='JSON map description, or a built-in preset name (gc24, doubling, fib22, mp1, mp05, ...)')
  common.add_argument('--depth', type=int, default=None,
                      help='cylinder depth (default: 14 for nonlinear maps, 20 for linear ones)')
  common.add_argument('--out', default=None, help='output CSV filename')
  common.add_argument('--tolerance', type=_tolerance, action='append', default=[],
                      help='tolerance override NAME=VALUE (repeatable)')
  common.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                      default='INFO', help='Logging level (default: INFO)')

  sub = parser.add_subparsers(dest='command', required=True)

  p = sub.add_parser('pressure', parents=[common], help='pressure curve P(d) with brackets')
  p.add_argument('--d-min', type=float, default=-4.0)
  p.add_argument('--d-max', type=float, default=4.0)
  p.add_argument('--d-steps', type=int, default=81, help='number of d values (default: 81)')

  p = sub.add_parser('spectrum', parents=[common], help='Lyapunov spectrum F(α)')
  p.add_argument('--alpha-steps', type=int, default=41)

  p = sub.add_parser('measure', parents=[common], help='cylinder masses of a Gibbs or conformal measure')
  group = p.add_mutually_exclusive_group(required=True)
  group.add_argument('--q', type=float, help='Gibbs state of -q·log|f\'|')
  group.add_argument('--alpha', type=float, help='Gibbs state with Lyapunov exponent α')
  group.add_argument('--d', type=float, help='conformal measure ν_d')
  p.add_argument('--subsystem', type=int, default=None, help='host Λ_m of a parabolic map')
  p.add_argument('--symbols', type=int, nargs='+', default=None, help='host symbol subset of a linear map')
  p.add_argument('--word-depth', type=int, default=6, help='length of the listed words (default: 6)')

  p = sub.add_parser('wsample', parents=[common], help='sample w-measure traces')
  p.add_argument('--schedule-config', required=True, help='JSON schedule')
  p.add_argument('--seed', type=int, required=True)
  p.add_argument('--seeds', type=int, default=1, help='number of consecutive seeds (default: 1)')

  p = sub.add_parser('entropy', parents=[common], help='cover counts of the zero-exponent set')
  p.add_argument('--epsilon', type=float, action='append', default=None, help='repeatable')
  p.add_argument('--depth-min', type=int, default=DEFAULT_DEPTHS[0])
  p.add_argument('--depth-max', type=int, default=DEFAULT_DEPTHS[-1])

  p = sub.add_parser('figure-data', parents=[common], help='paired pressure/spectrum curves for plotting')
  p.add_argument('--prefix', default='figure')

  p = sub.add_parser('selftest', help='invariant suite and acceptance checks')
  p.add_argument('--quick', action='store_true', help='skip the Monte Carlo and deep-ladder checks')
  p.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], default='WARNING')

  return parser.parse_args(argv)


def _stem(path, default):
  return os.path.splitext(path or default)[0]


def _run_config(args, cfg, params, seed=None):
  return RunConfig(subcommand=args.command, map_spec=cfg, params=params, seed=seed,
                   depth=args.depth, out=args.out, tolerances=dict(args.tolerance))


def _apply_tolerances(run):
  TOLERANCES.update(run.tolerances)


def run_pressure(args, model, cfg):
  run = _run_config(args, cfg, {'d_min': args.d_min, 'd_max': args.d_max, 'd_steps': args.d_steps})
  _apply_tolerances(run)
  source = PressureSource(model, depth=args.depth, progress=True)
  curve = pressure_curve(source, default_d_grid(args.d_min, args.d_max, args.d_steps))
  rows = curve.rows()
  if model.is_linear:
    oracle = OracleSource(model)
    for row in rows:
      row['P_oracle'] = oracle.value(row['d'])
  out = args.out or f"{model.name}_pressure.csv"
  to_csv(rows, out)
  write_manifest(run, [out], {'P': float(curve.err.max())}, f"{_stem(out, '')}_manifest.json")
  if not curve.is_monotone():
    logger.warning("⚠️  pressure brackets are not monotone in d")
  return 0


def run_spectrum(args, model, cfg):
  run = _run_config(args, cfg, {'alpha_steps': args.alpha_steps})
  _apply_tolerances(run)
  source = PressureSource(model, depth=args.depth, progress=True)
  curve = spectrum_curve(source, alpha_steps=args.alpha_steps)
  out = args.out or f"{model.name}_spectrum.csv"
  side = f"{_stem(out, '')}_side.json"
  to_csv(curve.rows(), out)
  write_json(curve.side_file(), side)
  errs = [source.err(d) / a for a, d, ok in zip(curve.alpha, curve.minimizer, np.isfinite(curve.F)) if a > 0 and ok]
  write_manifest(run, [out, side], {'F': max(errs, default=0.0), 'd0': curve.d0.width / 2},
                 f"{_stem(out, '')}_manifest.json")
  logger.info(f"✅ case: {curve.case}")
  return 0


def run_measure(args, model, cfg):
  params = {'q': args.q, 'alpha': args.alpha, 'd': args.d, 'subsystem': args.subsystem,
            'symbols': args.symbols, 'word_depth': args.word_depth}
  run = _run_config(args, cfg, params)
  _apply_tolerances(run)
  host = subsystem(model, args.subsystem) if args.subsystem else model
  if args.d is not None:
    source = PressureSource(host, depth=args.depth)
    est = source.estimate(args.d)
    shift = host.shift if args.subsystem else None
    rows = mass_rows(conformal_level(model, args.d, args.word_depth, est.value, shift=shift))
    bars = {'P': est.err}
  else:
    if args.alpha is not None:
      q, mu = equilibrium_for_exponent(host, args.alpha, symbols=args.symbols)
      logger.info(f"α = {args.alpha:g} reached at q = {q:.9f}")
    else:
      mu = gibbs_measure(host, args.q, symbols=args.symbols)
    logger.info(f"{mu!r}: h = {mu.entropy:.9f}, χ = {mu.exponent:.9f}, h/χ = {mu.dimension:.9f}, "
                f"D = {mu.gibbs_constant:.6g}")
    rows = gibbs_rows(mu, args.word_depth)
    bars = {'chi': TOLERANCES['exponent']}
  out = args.out or f"{model.name}_measure.csv"
  to_csv(rows, out, columns=['word', 'mass_center', 'mass_lo', 'mass_hi'])
  write_manifest(run, [out], bars, f"{_stem(out, '')}_manifest.json")
  return 0


def run_wsample(args, model, cfg):
  schedule_cfg = load_schedule_config(args.schedule_config)
  run = _run_config(args, cfg, {'schedule': schedule_cfg, 'seeds': args.seeds}, seed=args.seed)
  _apply_tolerances(run)
  schedule = schedule_from_config(model, schedule_cfg)
  seeds = list(range(args.seed, args.seed + args.seeds))
  traces = sample_many(schedule, seeds)
  rows = [{**row, 'seed': t.seed} for t in traces for row in t.rows()]
  out = args.out or f"{model.name}_{schedule.name}_wsample.csv"
  summary_path = f"{_stem(out, '')}_summary.json"
  to_csv(rows, out, columns=['seed', 'm', 'L_m', 'H_m', 'stage_index'])
  fraction, reports = acceptance_fraction(traces, schedule)
  write_json({'schedule': schedule.describe(), 'acceptance_fraction': fraction,
              'traces': {t.seed: r.summary() for t, r in zip(traces, reports)}}, summary_path)
  write_manifest(run, [out, summary_path], {'chi': TOLERANCES['exponent']}, f"{_stem(out, '')}_manifest.json")
  logger.info(f"✅ {len(traces)} traces, {fraction:.0%} within 10% at every stage i >= 3")
  return 0


def run_entropy(args, model, cfg):
  epsilons = args.epsilon or list(EPSILON_LADDER)
  depths = range(args.depth_min, args.depth_max + 1)
  run = _run_config(args, cfg, {'epsilon': epsilons, 'depth_min': args.depth_min, 'depth_max': args.depth_max})
  _apply_tolerances(run)
  report = zero_exponent_report(model, epsilons, depths, source=PressureSource(model, depth=args.depth))
  out = args.out or f"{model.name}_entropy.csv"
  summary_path = f"{_stem(out, '')}_summary.json"
  to_csv(report.rows(), out, columns=['epsilon', 'n', 'count', 'bound'])
  write_json(report.summary(), summary_path)
  write_manifest(run, [out, summary_path], {'d0': (report.d0_hi - report.d0_lo) / 2},
                 f"{_stem(out, '')}_manifest.json")
  return 0


def figure_data(model, prefix, depth=None):
  """Write <prefix>_pressure.csv, <prefix>_spectrum.csv and <prefix>_annotations.json."""
  source = PressureSource(model, depth=depth, progress=True)
  if degeneracy_test(source):
    raise DegenerateModelError(f"{model.name}: log|f'| is cohomologous to a constant; no figure to draw")
  d0 = d_zero(source)
  pressure = pressure_curve(source, default_d_grid(d0=d0.estimate))
  spectrum = spectrum_curve(source)
  paths = [f"{prefix}_pressure.csv", f"{prefix}_spectrum.csv", f"{prefix}_annotations.json"]
  to_csv(pressure.rows(), paths[0])
  to_csv(spectrum.rows(), paths[1])
  write_json(spectrum.side_file(), paths[2])
  return paths, pressure, spectrum


def run_figure_data(args, model, cfg):
  run = _run_config(args, cfg, {'prefix': args.prefix})
  _apply_tolerances(run)
  paths, pressure, spectrum = figure_data(model, args.prefix, args.depth)
  write_manifest(run, paths, {'P': float(pressure.err.max()), 'd0': spectrum.d0.width / 2},
                 f"{args.prefix}_manifest.json")
  return 0


COMMANDS = {
  'pressure': run_pressure,
  'spectrum': run_spectrum,
  'measure': run_measure,
  'wsample': run_wsample,
  'entropy': run_entropy,
  'figure-data': run_figure_data,
}


def main(argv=None):
  args = parse_args(argv)
  setup_logging(getattr(logging, args.log_level))

  if args.command == 'selftest':
    from selftest import run_selftest
    return run_selftest(quick=args.quick)

  logger.info("=" * 60)
  logger.info(f"📋 Command: {args.command}")
  logger.info(f"🗺️  Map: {args.map_config}")
  logger.info("=" * 60)
  saved = dict(TOLERANCES)
  try:
    cfg = load_map_config(args.map_config)
    model = map_from_config(cfg)
    status = COMMANDS[args.command](args, model, cfg)
  except LyapSpecError as exc:
    logger.error(f"❌ {type(exc).__name__}: {exc}")
    return exc.exit_code
  finally:
    TOLERANCES.update(saved)
  logger.info(f"✅ {args.command} completed")
  return status


if __name__ == "__main__":
  sys.exit(main())
