#!/usr/bin/env python3
"""
Result files: records CSV, summary CSV, per-round Parquet series and SVG plots.
"""

import sys
from dataclasses import asdict
from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd

from bench import RECORD_COLUMNS, SummaryStats, threshold_iteration

matplotlib.use('Agg')
import matplotlib.pyplot as plt

SUMMARY_COLUMNS = ('experiment', 'delay', 'iter_threshold', 'std_final', 'time_mean_s')
NOT_REACHED = '-'
FLOAT_FORMAT = '%.17g'
# Fixed SVG id salt so regenerated plots are byte-identical
SVG_HASHSALT = 'dogd'


def _prepare(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create directory {path.parent}: {e}") from e
    return path


def _records_frame(records):
    if isinstance(records, pd.DataFrame):
        return records.loc[:, list(RECORD_COLUMNS)]
    return pd.DataFrame([asdict(r) for r in records], columns=list(RECORD_COLUMNS))


def emit_csv(records, path):
    """Header plus one row per record, floats in round-trip precision"""
    path = _prepare(path)
    frame = _records_frame(records)
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    print(f'[INFO] Saved {len(frame)} records to {path}', file=sys.stderr)
    return path


def read_csv(path):
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except OSError as e:
        raise OSError(f"cannot read {path}: {e}") from e
    if tuple(frame.columns) != RECORD_COLUMNS:
        raise ValueError(f"{path}: unexpected header {list(frame.columns)}")
    return frame


def _fmt(value):
    if value is None:
        return ''
    return FLOAT_FORMAT % value


def emit_summary(stats, path):
    path = _prepare(path)
    rows = [{
        'experiment': s.experiment,
        'delay': s.delay,
        'iter_threshold': NOT_REACHED if s.iter_threshold is None else _fmt(s.iter_threshold),
        'std_final': _fmt(s.std_final),
        'time_mean_s': _fmt(s.time_mean_s),
    } for s in stats]
    frame = pd.DataFrame(rows, columns=list(SUMMARY_COLUMNS))
    try:
        frame.to_csv(path, index=False)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    print(f'[INFO] Saved summary of {len(frame)} groups to {path}', file=sys.stderr)
    return path


def emit_parquet(frame, path):
    """Full-resolution per-round series (zstd-compressed)"""
    path = _prepare(path)
    try:
        frame.to_parquet(path, compression='zstd', index=False, engine='pyarrow')
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    print(f'[INFO] Saved {len(frame)} rounds to {path}', file=sys.stderr)
    return path


def emit_plot(records, path, column='regret_avg'):
    """Mean curve and +-1 std band per (experiment, delay); returns the legend labels"""
    path = _prepare(path)
    frame = _records_frame(records)
    multiple = frame['experiment'].nunique() > 1
    plt.rcParams['svg.hashsalt'] = SVG_HASHSALT
    fig, ax = plt.subplots(figsize=(8, 5))
    labels = []
    for (experiment, delay), group in frame.groupby(['experiment', 'delay'], sort=False):
        by_round = group.groupby('t')[column]
        mean = by_round.mean()
        std = by_round.std(ddof=0).fillna(0.0)
        label = f'{experiment} d={delay}' if multiple else f'd={delay}'
        line, = ax.plot(mean.index, mean.to_numpy(), label=label)
        ax.fill_between(mean.index, (mean - std).to_numpy(), (mean + std).to_numpy(),
                        alpha=0.2, color=line.get_color())
        labels.append(label)
    ax.set_xlabel('Iteration')
    ax.set_ylabel('Average regret' if column == 'regret_avg' else column)
    if labels:
        ax.legend()
    ax.grid(True, linestyle='--', alpha=0.5)
    fig.tight_layout()
    try:
        fig.savefig(path, format='svg', metadata={'Date': None})
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    finally:
        plt.close(fig)
    print(f'[INFO] Saved plot with {len(labels)} curves to {path}', file=sys.stderr)
    return labels


def summarize_csv(path, threshold, error_metric='gap'):
    """SummaryStats recomputed from a records CSV (crossings at the recorded stride)"""
    frame = read_csv(path)
    column = 'gap_smoothed' if error_metric == 'gap' else 'regret_avg'
    stats = []
    for (experiment, delay), group in frame.groupby(['experiment', 'delay'], sort=False):
        finals, averages, crossings = [], [], []
        for _, run in group.groupby('rep', sort=True):
            run = run.sort_values('t')
            finals.append(run['regret_cum'].iloc[-1])
            averages.append(run['regret_avg'].iloc[-1])
            hit = threshold_iteration(run[column].to_numpy(), threshold)
            crossings.append(None if hit is None else int(run['t'].iloc[hit - 1]))
        stats.append(SummaryStats(
            experiment=experiment, delay=int(delay), reps=len(finals),
            final_regret_mean=float(np.mean(finals)),
            std_final=float(np.std(averages)),
            iter_threshold=None if None in crossings else float(np.mean(crossings)),
            time_mean_s=None,
            bound_mean=float('nan'),
        ))
    return stats


def write_table(stats, stream=None):
    """Algorithm / Iter / std / Time table"""
    stream = stream or sys.stdout
    rows = [('Algorithm', 'Iter', 'std', 'Time [s]')]
    for s in stats:
        rows.append((
            f'{s.experiment} d={s.delay}',
            NOT_REACHED if s.iter_threshold is None else f'{s.iter_threshold:.0f}',
            f'{s.std_final:.1e}',
            NOT_REACHED if s.time_mean_s is None else f'{s.time_mean_s:.1f}',
        ))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for r in rows:
        print('  '.join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip(), file=stream)
