#!/usr/bin/env python3
"""
DOGD Bench - Main Entry Point

  run        run an experiment preset or config file, write records/summary/series/plot
  bounds     print the regret bounds and step-sizes for a loss family
  summarize  recompute the summary table from a records CSV
  plot       draw the average-regret plot from a records CSV
"""

import argparse
import sys
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np
from dotenv import load_dotenv
from script_reporter import ScriptReporter

# Load environment variables
load_dotenv()

# Add current directory to path
sys.path.append(str(Path(__file__).resolve().parent))

from analysis import (BoundInputs, LedgerError, ThresholdViolation, alpha_bandit, bound_bandit,
                      bound_lipschitz, bound_lipschitz_exact, bound_weakly_smooth, lipschitz_optimal_bound,
                      with_threshold)
from bench import RunFailure, run_experiment
from config import PRESETS, ConfigError, apply_overrides, environment_defaults, from_preset, load_config
from dogd import step_size_lipschitz_optimal, step_size_weakly_smooth
from geometry import ProjectionError, project
from losses import DomainViolation, quasar_gap
from oracles import InfeasibleQueryError
from report import emit_csv, emit_parquet, emit_plot, emit_summary, read_csv, summarize_csv, write_table
from streams import make_stream

EXIT_CONFIG = 2
EXIT_RUN = 3
EXIT_IO = 4

BOUND_PARAMS = {
    'radius': float, 'dim': int, 'horizon': int, 'delay': int, 'eta': float, 'variation': float,
    'delta_sum': float, 'lambda_sum': float, 'h_scale': float, 'h_exponent': float,
    'samples': int, 'seed': int,
}
BOUND_DEFAULTS = {
    'radial': dict(radius=100.0, dim=100),
    'glm': dict(radius=1.0, dim=100, samples=1000),
    'quadfrac': dict(radius=10.0, dim=50),
}
# Random feasible points for the quasar-convexity sanity check
QUASAR_SAMPLES = 200


def parse_delays(text):
    try:
        return tuple(int(d) for d in text.split(',') if d.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_params(items):
    params = {}
    for item in items or []:
        key, sep, raw = item.partition('=')
        if not sep or key not in BOUND_PARAMS:
            raise ConfigError(f"bad bound parameter {item!r} (keys: {', '.join(BOUND_PARAMS)})")
        try:
            params[key] = BOUND_PARAMS[key](raw)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return params


def command_run(sr, args):
    sr.stage("LOADING_CONFIG")
    defaults = environment_defaults()
    if args.config:
        config = load_config(args.config, defaults)
    else:
        config = from_preset(args.experiment, **defaults)
    config = apply_overrides(config, seed=args.seed, reps=args.reps, horizon=args.horizon, delays=args.delays,
                             out_dir=args.out_dir, stride=args.stride, workers=args.workers)

    sr.stage("RUNNING")
    result = run_experiment(config)

    sr.stage("WRITING")
    out = Path(config.out_dir) / config.experiment
    emit_csv(result.records, out / 'records.csv')
    emit_summary(result.summary, out / 'summary.csv')
    if result.series is not None:
        emit_parquet(result.series, out / 'series.parquet')
    emit_plot(result.records, out / 'regret.svg')
    write_table(result.summary)
    return {
        "status": "completed",
        "experiment": config.experiment,
        "runs": len(result.jobs),
        "records": len(result.records),
        "out_dir": str(out),
    }


def _print_bound(name, compute):
    try:
        value = compute()
        if isinstance(value, tuple):
            value = value[0]
        print(f'{name}\t{value:.17g}')
    except ThresholdViolation as e:
        print(f'{name}\t-\t({e})')


def command_bounds(sr, args):
    sr.stage("CERTIFYING")
    params = {**BOUND_DEFAULTS[args.family], 'horizon': 20000, 'delay': 1, 'seed': 0, **parse_params(args.params)}
    options = {'samples': params['samples']} if 'samples' in params else {}
    stream = make_stream(args.family, params['dim'], params['radius'], params['horizon'], params['seed'], **options)
    constants = stream.certify()
    R, T, d = params['radius'], params['horizon'], params['delay']
    V = params.get('variation', 0.0)

    if args.family == 'radial':
        eta = params.get('eta') or step_size_lipschitz_optimal(R, constants.lipschitz, T, d, V)
    else:
        eta = params.get('eta') or step_size_weakly_smooth(constants.quasar, constants.weak_smoothness, d)
    inputs = BoundInputs(radius=R, kappa=constants.quasar, delay=d, horizon=T, eta=eta, path_variation=V,
                         lipschitz=constants.lipschitz, weak_smoothness=constants.weak_smoothness,
                         smoothness=constants.smoothness, delta_sum=params.get('delta_sum', 0.0),
                         lambda_sum=params.get('lambda_sum', 0.0), dim=params['dim'])

    print(f'kappa\t{constants.quasar:.17g}')
    print(f'eta\t{eta:.17g}')
    if constants.lipschitz is not None:
        print(f'lipschitz\t{constants.lipschitz:.17g}')
        _print_bound('bound_lipschitz', lambda: bound_lipschitz(inputs))
        _print_bound('bound_lipschitz_exact', lambda: bound_lipschitz_exact(inputs))
        _print_bound('bound_lipschitz_optimal',
                     lambda: lipschitz_optimal_bound(R, constants.lipschitz, T, d, V, constants.quasar))
    if constants.weak_smoothness is not None:
        print(f'gamma\t{constants.weak_smoothness:.17g}')
        for coefficient in (4, 2):
            thresholded = with_threshold(inputs, coefficient)
            print(f'alpha_c{coefficient}\t{thresholded.alpha:.17g}')
            _print_bound(f'bound_weakly_smooth_c{coefficient}', lambda: bound_weakly_smooth(thresholded))
    if constants.smoothness is not None and 'h_exponent' in params:
        scale, exponent = params.get('h_scale', 1.0), params['h_exponent']
        h = tuple(scale * t ** -exponent for t in range(1, T + 1))
        alpha = alpha_bandit(constants.quasar, constants.smoothness, d)
        print(f'alpha_bandit\t{alpha:.17g}')
        _print_bound('bound_bandit', lambda: bound_bandit(replace(inputs, alpha=alpha, h=h)))

    sr.stage("CHECKING_QUASAR")
    first = next(iter(stream.rounds()))
    rng = np.random.default_rng(params['seed'])
    points = rng.standard_normal((QUASAR_SAMPLES, params['dim']))
    points *= (R * rng.random(QUASAR_SAMPLES) / np.linalg.norm(points, axis=1))[:, None]
    gaps = [quasar_gap(first.loss, project(stream.ball, x), first.minimizer, constants.quasar) for x in points]
    worst = min(gaps)
    print(f'quasar_gap_min\t{worst:.17g}')
    if worst < -1e-9 * max(1.0, abs(first.min_value or 0.0)):
        print(f'[WARN] quasar-convexity inequality violated at a sampled point (gap {worst:.3g})', file=sys.stderr)
    return {"status": "completed", "family": args.family, "eta": eta, "quasar_gap_min": worst}


def command_summarize(sr, args):
    sr.stage("SUMMARIZING")
    stats = summarize_csv(args.csv, args.threshold, args.error_metric)
    write_table(stats)
    if args.out:
        emit_summary(stats, args.out)
    return {"status": "completed", "groups": len(stats)}


def command_plot(sr, args):
    sr.stage("PLOTTING")
    labels = emit_plot(read_csv(args.csv), args.out)
    return {"status": "completed", "curves": len(labels), "out": str(args.out)}


def build_parser():
    parser = argparse.ArgumentParser(description='Delayed online gradient descent experiment bench')
    sub = parser.add_subparsers(dest='command', required=True)

    run_p = sub.add_parser('run', help='Run an experiment preset or config file')
    run_p.add_argument('config', nargs='?', help='key=value config file')
    run_p.add_argument('-e', '--experiment', choices=sorted(PRESETS), default='radial',
                       help='Preset to run when no config file is given')
    run_p.add_argument('--seed', type=int, help='Base seed')
    run_p.add_argument('--reps', type=int, help='Repetitions per delay level')
    run_p.add_argument('--horizon', type=int, help='Number of rounds T')
    run_p.add_argument('--delays', type=parse_delays, help='Comma-separated delay levels')
    run_p.add_argument('--out-dir', help='Output directory')
    run_p.add_argument('--stride', type=int, help='Record stride (0 = automatic)')
    run_p.add_argument('--workers', type=int, help='Parallel runs')

    bounds_p = sub.add_parser('bounds', help='Print regret bounds for a loss family')
    bounds_p.add_argument('--family', choices=sorted(BOUND_DEFAULTS), required=True)
    bounds_p.add_argument('--params', nargs='*', metavar='KEY=VALUE', help=', '.join(BOUND_PARAMS))

    sum_p = sub.add_parser('summarize', help='Summary table from a records CSV')
    sum_p.add_argument('csv')
    sum_p.add_argument('-t', '--threshold', type=float, default=0.1, help='Error threshold')
    sum_p.add_argument('-m', '--error-metric', choices=('gap', 'avg'), default='gap')
    sum_p.add_argument('-o', '--out', help='Write the summary CSV here')

    plot_p = sub.add_parser('plot', help='Average-regret plot from a records CSV')
    plot_p.add_argument('csv')
    plot_p.add_argument('-o', '--out', required=True, help='SVG output path')
    return parser


COMMANDS = {
    'run': command_run,
    'bounds': command_bounds,
    'summarize': command_summarize,
    'plot': command_plot,
}


def main(argv=None):
    """Main entry point with reporting"""
    args = build_parser().parse_args(argv)
    sr = ScriptReporter("DOGD Bench")

    try:
        result = COMMANDS[args.command](sr, args)
        sr.success(result)
    except ConfigError as e:
        print(f'[ERROR] {e}', file=sys.stderr)
        sr.fail(traceback.format_exc())
        sys.exit(EXIT_CONFIG)
    except (RunFailure, DomainViolation, ProjectionError, InfeasibleQueryError, LedgerError, ValueError) as e:
        print(f'[ERROR] {e}', file=sys.stderr)
        sr.fail(traceback.format_exc())
        sys.exit(EXIT_RUN)
    except OSError as e:
        print(f'[ERROR] {e}', file=sys.stderr)
        sr.fail(traceback.format_exc())
        sys.exit(EXIT_IO)


if __name__ == "__main__":
    main()
