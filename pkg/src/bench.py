#!/usr/bin/env python3
"""
Experiment harness.

Expands a config into jobs (variant x delay level x repetition), runs each
job as an independent DOGD run in a worker process, and aggregates the
results into subsampled records, per-round series and summary statistics.
"""

import asyncio
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import pandas as pd

from analysis import (BoundInputs, ThresholdViolation, alpha_bandit, average_regret_series, bound_bandit,
                      bound_lipschitz, bound_weakly_smooth, dynamic_regret, smoothed_gap_series, with_threshold)
from config import variants
from delay import uniform_delay_schedule
from dogd import ConstantEta, LipschitzOptimal, WeaklySmoothSafe, run
from streams import make_stream


class RunFailure(RuntimeError):
    """A run aborted; the message carries the (variant, delay, repetition) context"""


@dataclass(frozen=True)
class Job:
    variant: object
    delay: int
    rep: int


@dataclass(frozen=True)
class RunRecord:
    """One subsampled round of one run (the CSV row schema)"""
    experiment: str
    rep: int
    delay: int
    t: int
    regret_cum: float
    regret_avg: float
    gap_smoothed: float
    eta: float
    seed: int


@dataclass(frozen=True)
class SummaryStats:
    experiment: str
    delay: int
    reps: int
    final_regret_mean: float
    # population std (ddof=0) of R_T / T across repetitions
    std_final: float
    # None when some repetition never crossed the threshold
    iter_threshold: Optional[float]
    time_mean_s: Optional[float]
    bound_mean: float


@dataclass(eq=False)
class JobResult:
    label: str
    delay: int
    rep: int
    seed: int
    eta: float
    records: pd.DataFrame
    series: Optional[pd.DataFrame]
    final_regret: float
    final_average: float
    iter_threshold: Optional[int]
    time_s: Optional[float]
    bound: float
    path_variation: float
    queries: int
    # rounds whose comparator x*_t came from a non-converged solve
    solver_failures: int = 0


@dataclass(eq=False)
class ExperimentResult:
    records: pd.DataFrame
    summary: list
    series: Optional[pd.DataFrame]
    jobs: list


RECORD_COLUMNS = tuple(RunRecord.__dataclass_fields__)


def threshold_iteration(series, eps):
    """First (1-indexed) t with series[t] < eps, or None when never reached"""
    if eps <= 0:
        raise ValueError(f"threshold must be positive, got {eps}")
    hits = np.flatnonzero(np.asarray(series, dtype=float) < eps)
    return int(hits[0]) + 1 if hits.size else None


def record_rounds(horizon, stride):
    """t = 1, 1 + stride, 1 + 2 stride, ... and always T"""
    rounds = np.arange(1, horizon + 1, stride)
    if rounds[-1] != horizon:
        rounds = np.append(rounds, horizon)
    return rounds


def build_stream(config, variant, seed):
    if config.family == 'radial':
        options = dict(amplitude_max=config.amplitude_max, frequency_max=config.frequency_max)
    elif config.family == 'glm':
        options = dict(samples=config.samples, drift_exponent=variant.drift_exponent,
                       drift_scale=config.drift_scale)
    else:
        options = dict(factor=config.qf_factor, solver_tol=config.solver_tol,
                       solver_max_iter=config.solver_max_iter)
    return make_stream(config.family, config.dim, config.radius, config.horizon, seed, **options)


def build_policy(config, constants, delay):
    if config.step_policy == 'lipschitz-optimal':
        return LipschitzOptimal(config.radius, constants.lipschitz, config.horizon, delay)
    if config.step_policy == 'weakly-smooth':
        return WeaklySmoothSafe(constants.quasar, constants.weak_smoothness, delay, config.step_factor)
    return ConstantEta(config.eta)


def evaluate_bound(config, oracle, constants, delay, eta, ledger):
    """Regret bound matching the run's hypotheses; NaN when they are not met"""
    base = BoundInputs(radius=config.radius, kappa=constants.quasar, delay=delay, horizon=config.horizon,
                       eta=eta, path_variation=ledger.path_variation)
    try:
        if oracle.is_bandit:
            if constants.smoothness is None:
                return math.nan
            inputs = replace(base, smoothness=constants.smoothness,
                             alpha=alpha_bandit(constants.quasar, constants.smoothness, delay),
                             dim=config.dim, h=tuple(oracle.h(t) for t in range(1, config.horizon + 1)))
            return bound_bandit(inputs)[0]
        sums = ledger.error_sums
        if sums is None:
            return math.nan
        delta_sum, lambda_sum = sums
        if constants.lipschitz is not None:
            return bound_lipschitz(replace(base, lipschitz=constants.lipschitz,
                                           delta_sum=delta_sum, lambda_sum=lambda_sum))
        if constants.weak_smoothness is None:
            return math.nan
        # exact gradients admit the smaller delay coefficient in the threshold
        coefficient = 2 if oracle.kind == 'exact' else 4
        inputs = replace(base, weak_smoothness=constants.weak_smoothness, delta_sum=delta_sum, lambda_sum=lambda_sum)
        return bound_weakly_smooth(with_threshold(inputs, coefficient))[0]
    except ThresholdViolation:
        return math.nan


def run_job(config, job):
    """One repetition of one variant at one delay level"""
    started = time.perf_counter()
    seed = config.seed + job.rep
    stream = build_stream(config, job.variant, seed)
    constants = stream.certify()
    policy = build_policy(config, constants, job.delay)
    schedule = uniform_delay_schedule(job.delay, config.horizon, seed)
    result = run(stream.rounds(), job.variant.oracle, schedule, policy, stream.ball,
                 stream.initial_point(), seed=seed, store_trajectory=False,
                 smoothness=constants.smoothness)
    elapsed = time.perf_counter() - started

    ledger = result.ledger
    cumulative = ledger.cumulative_regret()
    average = average_regret_series(cumulative)
    smoothed = smoothed_gap_series(ledger.gaps())
    error = smoothed if config.error_metric == 'gap' else average

    rows = record_rounds(config.horizon, config.record_stride) - 1
    records = pd.DataFrame({
        'experiment': job.variant.label,
        'rep': job.rep,
        'delay': job.delay,
        't': rows + 1,
        'regret_cum': cumulative[rows],
        'regret_avg': average[rows],
        'gap_smoothed': smoothed[rows],
        'eta': result.eta,
        'seed': seed,
    }, columns=list(RECORD_COLUMNS))

    series = None
    if config.series:
        series = ledger.to_frame()
        series.insert(0, 'rep', job.rep)
        series.insert(0, 'delay', job.delay)
        series.insert(0, 'experiment', job.variant.label)
        series['regret_avg'] = average
        series['gap_smoothed'] = smoothed

    return JobResult(
        label=job.variant.label, delay=job.delay, rep=job.rep, seed=seed, eta=result.eta,
        records=records, series=series,
        final_regret=dynamic_regret(ledger), final_average=float(average[-1]),
        iter_threshold=threshold_iteration(error, config.threshold),
        time_s=elapsed if config.timing else None,
        bound=evaluate_bound(config, job.variant.oracle, constants, job.delay, result.eta, ledger),
        path_variation=ledger.path_variation, queries=ledger.total_queries,
        solver_failures=getattr(stream, 'solver_failures', 0),
    )


def expand_jobs(config):
    """Jobs in (variant, delay, repetition) order"""
    return [Job(variant, delay, rep)
            for variant in variants(config) for delay in config.delays for rep in range(config.reps)]


async def run_jobs(config, jobs):
    """Queue-driven worker pool; results keep the job order"""
    total = len(jobs)
    results = [None] * total
    failures = []
    queue = asyncio.Queue()
    for item in enumerate(jobs):
        queue.put_nowait(item)
    lock = asyncio.Lock()
    processed = 0
    loop = asyncio.get_running_loop()
    workers = min(config.workers, total)
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else ThreadPoolExecutor(max_workers=1)

    async def worker():
        nonlocal processed
        while True:
            index, job = await queue.get()
            try:
                results[index] = await loop.run_in_executor(executor, run_job, config, job)
            except Exception as e:
                print(f'[ERROR] {job.variant.label} delay={job.delay} rep={job.rep}: {e}', file=sys.stderr)
                async with lock:
                    failures.append((index, e))
            finally:
                async with lock:
                    processed += 1
                    print(f'[PROGRESS] {processed}/{total} runs processed ({processed / total * 100:.1f}%)',
                          file=sys.stderr)
                queue.task_done()

    with executor:
        tasks = [asyncio.create_task(worker()) for _ in range(workers)]
        await queue.join()
        for task in tasks:
            task.cancel()

    if failures:
        index, error = min(failures, key=lambda f: f[0])
        job = jobs[index]
        raise RunFailure(f"{job.variant.label} rep={job.rep} delay={job.delay}: "
                         f"{type(error).__name__}: {error}") from error
    return results


def summarize(results):
    """SummaryStats per (variant, delay) in first-seen order"""
    groups = {}
    for r in results:
        groups.setdefault((r.label, r.delay), []).append(r)
    stats = []
    for (label, delay), runs in groups.items():
        crossings = [r.iter_threshold for r in runs]
        times = [r.time_s for r in runs]
        stats.append(SummaryStats(
            experiment=label, delay=delay, reps=len(runs),
            final_regret_mean=float(np.mean([r.final_regret for r in runs])),
            std_final=float(np.std([r.final_average for r in runs])),
            iter_threshold=None if None in crossings else float(np.mean(crossings)),
            time_mean_s=None if None in times else float(np.mean(times)),
            bound_mean=float(np.mean([r.bound for r in runs])),
        ))
    return stats


def run_experiment(config):
    """Run every job of the config; returns records, summary and optional series"""
    jobs = expand_jobs(config)
    print(f'[INFO] {config.experiment}: {len(jobs)} runs (T={config.horizon}, p={config.dim}, '
          f'delays={list(config.delays)}, reps={config.reps}, workers={config.workers})', file=sys.stderr)
    results = asyncio.run(run_jobs(config, jobs))

    for r in results:
        if math.isfinite(r.bound) and r.final_regret > r.bound:
            print(f'[WARN] {r.label} delay={r.delay} rep={r.rep}: regret {r.final_regret:.6g} '
                  f'exceeds bound {r.bound:.6g}', file=sys.stderr)
        if r.solver_failures:
            print(f'[WARN] {r.label} delay={r.delay} rep={r.rep}: comparator solve did not converge in '
                  f'{r.solver_failures}/{config.horizon} rounds', file=sys.stderr)

    records = pd.concat([r.records for r in results], ignore_index=True)
    series = None
    if config.series:
        series = pd.concat([r.series for r in results], ignore_index=True)
    return ExperimentResult(records, summarize(results), series, results)
