#!/usr/bin/env python3
"""
Delay schedules and arrival bookkeeping.
The gradient queried in round k arrives at the end of round k + d_k - 1;
F_t collects the origin rounds whose feedback arrives in round t.
"""

import argparse
import sys
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np


def arrival_round(k, d):
    """Round in which feedback from round k with delay d is received"""
    if k < 1 or d < 1:
        raise ValueError(f"round and delay must be >= 1, got k={k}, d={d}")
    return k + d - 1


@dataclass(frozen=True, eq=False)
class DelaySchedule:
    """Per-round delays d_1..d_T (d_t >= 1)"""
    delays: tuple
    arrivals: dict = field(init=False, repr=False)

    def __post_init__(self):
        delays = tuple(int(d) for d in self.delays)
        if not delays:
            raise ValueError("a delay schedule needs at least one round")
        if min(delays) < 1:
            raise ValueError(f"delays must be >= 1, got min {min(delays)}")
        arrivals = defaultdict(list)
        for k, d in enumerate(delays, start=1):
            arrivals[arrival_round(k, d)].append(k)
        object.__setattr__(self, 'delays', delays)
        object.__setattr__(self, 'arrivals', {t: tuple(ks) for t, ks in arrivals.items()})

    @property
    def horizon(self):
        return len(self.delays)

    @property
    def d_max(self):
        return max(self.delays)

    @property
    def last_round(self):
        """T + d_max - 1, the last round that can receive feedback"""
        return self.horizon + self.d_max - 1

    def delay(self, k):
        return self.delays[k - 1]


def arrivals_at(schedule, t):
    """F_t as an ascending tuple of origin rounds"""
    if not 1 <= t <= schedule.last_round:
        raise ValueError(f"round {t} outside [1, {schedule.last_round}]")
    return schedule.arrivals.get(t, ())


def first_arrival(schedule):
    """s = min { t : F_t non-empty }"""
    return min(schedule.arrivals)


def constant_delay_schedule(d, horizon):
    return DelaySchedule((int(d),) * int(horizon))


def uniform_delay_schedule(d, horizon, seed):
    """i.i.d. delays uniform on {1, ..., d}, reproducible from (seed, d)"""
    if d < 1:
        raise ValueError(f"delay level must be >= 1, got {d}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    rng = np.random.default_rng([int(seed), int(d)])
    return DelaySchedule(tuple(rng.integers(1, d, endpoint=True, size=horizon).tolist()))


class FeedbackBuffer:
    """In-flight feedback keyed by arrival round; each item is delivered exactly once"""

    def __init__(self):
        self._pending = defaultdict(list)
        self.current_round = 1
        self.delivered = 0

    def push(self, feedback):
        if feedback.arrival_round < self.current_round:
            raise ValueError(
                f"feedback from round {feedback.origin_round} arrives at {feedback.arrival_round}, "
                f"already past (current round {self.current_round})")
        self._pending[feedback.arrival_round].append(feedback)

    def pop_arrivals(self, t):
        """Deliver everything arriving in round t, in ascending origin-round order"""
        if t < self.current_round:
            raise ValueError(f"round {t} already drained (current round {self.current_round})")
        self.current_round = t
        items = sorted(self._pending.pop(t, ()), key=lambda f: f.origin_round)
        self.delivered += len(items)
        return items

    @property
    def in_flight(self):
        return sum(len(items) for items in self._pending.values())


def delay_histogram(schedule):
    """Counts of each delay value"""
    return dict(sorted(Counter(schedule.delays).items()))


def main():
    """Print the delay histogram and first arrival of a uniform schedule"""
    parser = argparse.ArgumentParser(description='Inspect a uniform delay schedule')
    parser.add_argument('-d', '--delay', type=int, default=5, help='Maximum delay d')
    parser.add_argument('-T', '--horizon', type=int, default=1000, help='Number of rounds')
    parser.add_argument('-s', '--seed', type=int, default=0, help='Base seed')
    args = parser.parse_args()

    schedule = uniform_delay_schedule(args.delay, args.horizon, args.seed)
    print(f'[INFO] T={schedule.horizon} d_max={schedule.d_max} s={first_arrival(schedule)} '
          f'last_round={schedule.last_round}', file=sys.stderr)
    for d, count in delay_histogram(schedule).items():
        print(f'{d}\t{count}')


if __name__ == '__main__':
    main()
