"""Discretised matrix checking engine.

Time advances in steps of a rational delta.  Each live location carries a
multi-dimensional matrix of exact bin probabilities, one dimension per clock
set there; ticking shifts every configuration down one bin, configurations
whose single minimal clock hits bin one fire an edge, and configurations with
two or more clocks in bin one are charged to an explicit error budget.  The
accumulated pass/fail/error masses decide the formula or report undecided.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from .adversary import Adversary
from .automaton import (
    DeadClock,
    StochasticAutomaton,
    interval_probability,
    require_valid,
)
from .logic import (
    Until,
    UnsupportedTimeBound,
    eval_state_formula,
    interval_passes,
    interval_refutes,
)

__all__ = [
    "DeltaTooLarge",
    "DeltaNotDividingBound",
    "DeadClock",
    "ClockMatrix",
    "Snapshot",
    "GlobalTotals",
    "NewTimeResult",
    "IterationStats",
    "MatrixReport",
    "clock_config_probs",
    "init_matrix",
    "new_time_matrix",
    "new_state_matrix",
    "run_matrix_check",
    "complexity_bound",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class DeltaTooLarge(Exception):
    """delta must be strictly below every clock's lower support bound."""


class DeltaNotDividingBound(Exception):
    """The time bound must be an integer multiple of delta."""



@dataclass(frozen=True)
class ClockMatrix:
    """Bin probabilities for one location at one time point.

    Entries are keyed by 1-based index vectors (one index per clock in the
    location's setting order); index k covers the half-open range
    (delta*(k-1), delta*k].  Zero entries are not stored.
    """

    location: str
    time_index: int
    dims: tuple  # bin count per clock dimension
    entries: dict  # index vector -> Fraction

    def mass(self) -> Fraction:
        return sum(self.entries.values(), _ZERO)

    def get(self, index: tuple) -> Fraction:
        return self.entries.get(tuple(index), _ZERO)


@dataclass
class GlobalTotals:
    total_pass: Fraction = _ZERO
    total_fail: Fraction = _ZERO
    error: Fraction = _ZERO


@dataclass(frozen=True)
class Snapshot:
    time_index: int
    matrices: dict  # location -> ClockMatrix (live locations only)
    live: frozenset
    prob: dict  # location -> entry probability over the last interval
    remain: dict  # location -> bool


@dataclass(frozen=True)
class NewTimeResult:
    matrix: ClockMatrix
    new_states: frozenset
    remain: bool
    prob: dict  # target location -> entering probability increment
    error_increment: Fraction


@dataclass(frozen=True)
class IterationStats:
    time_index: int
    live_mass: Fraction
    total_pass: Fraction
    total_fail: Fraction
    error: Fraction


@dataclass(frozen=True)
class MatrixReport:
    verdict: str  # 'pass' | 'fail' | 'undecided'
    total_pass: Fraction
    total_fail: Fraction
    error: Fraction
    iterations: int
    delta: Fraction
    stats: tuple  # IterationStats per iteration, before the timeout adjustment
    snapshots: tuple = ()


def _bin_count(dist, delta: Fraction) -> int:
    n = dist.support_hi / delta
    return int(n) if n.denominator == 1 else int(n) + 1


def clock_config_probs(sa: StochasticAutomaton, delta: Fraction) -> dict:
    """Per-clock probabilities of landing in each delta bin, computed once.

    Requires delta at or below every clock's lower support bound, so at most
    one transition can happen per tick (a clock equal to its lower bound has
    probability zero, so the first bin is always empty).
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise DeltaTooLarge("delta must be positive")
    table: dict = {}
    for clock, dist in sa.clocks.items():
        if delta > dist.support_lo:
            raise DeltaTooLarge(
                f"delta {delta} exceeds clock {clock!r}'s lower bound {dist.support_lo}"
            )
        count = _bin_count(dist, delta)
        bins = tuple(
            interval_probability(dist, delta * (k - 1), delta * k) for k in range(1, count + 1)
        )
        table[clock] = bins
    return table


def _dims(sa, loc: str, bins: dict) -> tuple:
    return tuple(len(bins[clock]) for clock in sa.setting.get(loc, ()))


def init_matrix(sa: StochasticAutomaton, bins: dict) -> ClockMatrix:
    """Initial matrix: the product of the clocks' bin probabilities."""
    loc = sa.initial
    clocks = sa.setting.get(loc, ())
    entries = {(): _ONE}
    for clock in clocks:
        expanded = {}
        for index, value in entries.items():
            for k, p in enumerate(bins[clock], start=1):
                if p:
                    expanded[index + (k,)] = value * p
        entries = expanded
    return ClockMatrix(loc, 0, _dims(sa, loc, bins), entries)


def new_time_matrix(sa: StochasticAutomaton, prev: ClockMatrix, adv: Adversary) -> NewTimeResult:
    """Advance one tick: shift configurations down a bin, fire the single
    expiring clock of edge configurations, and charge ambiguous
    configurations (two or more expiring clocks) to the error budget."""
    clocks = sa.setting.get(prev.location, ())
    shifted: dict = {}
    new_states: set = set()
    prob: dict = {}
    error_inc = _ZERO
    remain = False
    for index, value in prev.entries.items():
        if not value:
            continue
        ones = [pos for pos, k in enumerate(index) if k == 1]
        if not ones:
            target = tuple(k - 1 for k in index)
            shifted[target] = shifted.get(target, _ZERO) + value
            remain = True
        elif len(ones) == 1:
            clock = clocks[ones[0]]
            candidates = sa.edges_triggered(prev.location, clock)
            if not candidates:
                raise DeadClock(f"clock {clock} set at {prev.location} triggers no edge")
            edge = adv.resolve((), prev.location, clock, candidates)
            new_states.add(edge.target)
            prob[edge.target] = prob.get(edge.target, _ZERO) + value
        else:
            error_inc += value
    matrix = ClockMatrix(prev.location, prev.time_index + 1, prev.dims, shifted)
    return NewTimeResult(matrix, frozenset(new_states), remain, prob, error_inc)


def new_state_matrix(
    sa: StochasticAutomaton, matrix: ClockMatrix, entry_prob: Fraction, bins: dict
) -> ClockMatrix:
    """Add `entry_prob` times a fresh clock-setting distribution; additive."""
    entry_prob = Fraction(entry_prob)
    if entry_prob == 0:
        return matrix
    clocks = sa.setting.get(matrix.location, ())
    fresh = {(): entry_prob}
    for clock in clocks:
        expanded = {}
        for index, value in fresh.items():
            for k, p in enumerate(bins[clock], start=1):
                if p:
                    expanded[index + (k,)] = value * p
        fresh = expanded
    entries = dict(matrix.entries)
    for index, value in fresh.items():
        entries[index] = entries.get(index, _ZERO) + value
    return ClockMatrix(matrix.location, matrix.time_index, matrix.dims, entries)


def _decide(totals: GlobalTotals, cmp: str, bound: Fraction) -> str | None:
    lo = totals.total_pass
    hi = _ONE - totals.total_fail
    if interval_passes(lo, hi, cmp, bound):
        return "pass"
    if interval_refutes(lo, hi, cmp, bound):
        return "fail"
    return None


def run_matrix_check(
    sa: StochasticAutomaton,
    adv: Adversary,
    f: Until,
    delta: Fraction,
    stop_early: bool = True,
    record_snapshots: bool = False,
) -> MatrixReport:
    """Iterate snapshots at time points n*delta until the formula is decided,
    the error budget forbids a decision, or the time bound is reached (then
    the remaining undecided mass fails and the final comparison decides)."""
    if f.time_cmp not in ("<", "<="):
        raise UnsupportedTimeBound("matrix engine supports < and <= bounds only")
    require_valid(sa)
    if not getattr(adv, "memoryless", False):
        raise ValueError("the matrix engine requires a memoryless adversary")
    delta = Fraction(delta)
    bins = clock_config_probs(sa, delta)
    steps = Fraction(f.time_bound) / delta
    if steps.denominator != 1:
        raise DeltaNotDividingBound(
            f"time bound {f.time_bound} is not an integer multiple of delta {delta}"
        )
    n_steps = int(steps)
    cmp, bound = f.prob_cmp, f.prob_bound
    totals = GlobalTotals()
    stats: list = []
    snapshots: list = []

    sat1 = {loc: eval_state_formula(f.left, loc, sa) for loc in sa.locations}
    sat2 = {loc: eval_state_formula(f.right, loc, sa) for loc in sa.locations}

    live: set = set()
    matrices: dict = {}
    init = sa.initial
    if f.time_cmp == "<" and f.time_bound == 0:
        totals.total_fail = _ONE  # nothing can happen strictly before time zero
    elif sat2[init]:
        totals.total_pass = _ONE
    elif sat1[init]:
        matrices[init] = init_matrix(sa, bins)
        live.add(init)
    else:
        totals.total_fail = _ONE

    iterations = 0
    verdict: str | None = None
    timed_out = False
    while live and iterations < n_steps:
        iterations += 1
        ct = iterations
        prob: dict = {}
        remain_map: dict = {}
        next_matrices: dict = {}
        next_live: set = set()
        for loc in sorted(live):
            result = new_time_matrix(sa, matrices[loc], adv)
            totals.error += result.error_increment
            for target, p in result.prob.items():
                prob[target] = prob.get(target, _ZERO) + p
            next_matrices[loc] = result.matrix
            remain_map[loc] = result.remain
            next_live |= result.new_states
            if result.remain:
                next_live.add(loc)
        for loc in sorted(next_live):
            entering = prob.get(loc, _ZERO)
            if sat2[loc]:
                totals.total_pass += entering
                next_live.discard(loc)
            elif sat1[loc] and not sa.is_terminating(loc):
                current = next_matrices.get(loc) or ClockMatrix(loc, ct, _dims(sa, loc, bins), {})
                next_matrices[loc] = new_state_matrix(sa, current, entering, bins)
            else:
                totals.total_fail += entering
                next_live.discard(loc)
        live = next_live
        matrices = {loc: next_matrices[loc] for loc in live}
        live_mass = sum((m.mass() for m in matrices.values()), _ZERO)
        stats.append(
            IterationStats(ct, live_mass, totals.total_pass, totals.total_fail, totals.error)
        )
        if record_snapshots:
            snapshots.append(
                Snapshot(ct, dict(matrices), frozenset(live), dict(prob), dict(remain_map))
            )
        if stop_early:
            verdict = _decide(totals, cmp, bound)
            if verdict is not None:
                break
            if totals.error >= _ONE - bound and totals.error >= bound:
                verdict = "undecided"  # the error budget forbids both outcomes
                break
        if ct == n_steps:
            timed_out = True
            break
    else:
        timed_out = True

    if verdict is None:
        if timed_out:
            # States still undecided when time runs out can no longer pass.
            totals.total_fail = _ONE - totals.total_pass - totals.error
        verdict = _decide(totals, cmp, bound) or "undecided"

    return MatrixReport(
        verdict=verdict,
        total_pass=totals.total_pass,
        total_fail=totals.total_fail,
        error=totals.error,
        iterations=iterations,
        delta=delta,
        stats=tuple(stats),
        snapshots=tuple(snapshots),
    )


def complexity_bound(sa: StochasticAutomaton, f: Until, delta: Fraction) -> tuple:
    """Worst-case work and storage in abstract units for a run at `delta`.

    Work is (t/delta) * min(t/delta, n2/delta)**n1 * |locations| where n1 is
    the largest per-location clock count and n2 the largest clock upper
    bound; storage is 2 * (n2/delta)**n1 * |locations|.
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    n1 = max((len(clocks) for clocks in sa.setting.values()), default=0)
    n2 = max((dist.support_hi for dist in sa.clocks.values()), default=_ZERO)
    t = Fraction(f.time_bound)
    locs = len(sa.locations)
    time_units = (t / delta) * min(t / delta, n2 / delta) ** n1 * locs
    space_units = 2 * (n2 / delta) ** n1 * locs
    return time_units, space_units
