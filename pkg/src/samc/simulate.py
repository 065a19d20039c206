"""Monte Carlo path sampler and until-probability estimator.

Paths are sampled by inverse-CDF clock setting from a counter-based random
stream keyed by (seed, path index), so estimates are reproducible and
independent of scheduling.  Estimation for memoryless adversaries runs
through the compiled kernels in :mod:`samc._mc`; arbitrary (history-taking)
adversaries fall back to a per-path Python walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from . import _mc
from .adversary import Adversary
from .automaton import DeadClock, StochasticAutomaton, require_valid
from .logic import Until, UnsupportedTimeBound, eval_state_formula

__all__ = [
    "PathStep",
    "Estimate",
    "DeadClock",
    "sample_path",
    "estimate_until",
]

_MAX_STEPS = 10_000
_SEED_MASK = 0x7FFFFFFFFFFFFFFF  # keep seeds in int64 range for the kernels



@dataclass(frozen=True)
class PathStep:
    """One visit: the location, when it was entered, and the action fired on
    leaving it (None marks the end of the recorded path)."""

    location: str
    entry_time: float
    action: str | None


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float
    samples: int
    seed: int


@dataclass
class _Tables:
    locations: tuple
    loc_index: dict
    clocks: tuple
    clock_index: dict
    offsets: np.ndarray
    loc_clocks: np.ndarray
    piece_off: np.ndarray
    piece_hi: np.ndarray
    coefs: np.ndarray
    sup_lo: np.ndarray
    sup_hi: np.ndarray


def _compile_tables(sa: StochasticAutomaton) -> _Tables:
    locations = tuple(sorted(sa.locations))
    loc_index = {loc: i for i, loc in enumerate(locations)}
    clocks = tuple(sorted(sa.clocks))
    clock_index = {c: i for i, c in enumerate(clocks)}

    offsets = np.zeros(len(locations) + 1, np.int64)
    flat: list = []
    for i, loc in enumerate(locations):
        for clock in sa.setting.get(loc, ()):
            flat.append(clock_index[clock])
        offsets[i + 1] = len(flat)
    loc_clocks = np.asarray(flat, np.int64) if flat else np.zeros(0, np.int64)

    piece_off = np.zeros(len(clocks) + 1, np.int64)
    rows: list = []
    his: list = []
    for i, clock in enumerate(clocks):
        for piece in sa.clocks[clock].pieces:
            rows.append([float(c) for c in piece.coeffs])
            his.append(float(piece.hi))
        piece_off[i + 1] = len(rows)
    order = max((len(r) for r in rows), default=1)
    coefs = np.zeros((len(rows), order))
    for r, row in enumerate(rows):
        coefs[r, : len(row)] = row
    piece_hi = np.asarray(his) if his else np.zeros(0)
    sup_lo = np.asarray([float(sa.clocks[c].support_lo) for c in clocks])
    sup_hi = np.asarray([float(sa.clocks[c].support_hi) for c in clocks])
    return _Tables(
        locations,
        loc_index,
        clocks,
        clock_index,
        offsets,
        loc_clocks,
        piece_off,
        piece_hi,
        coefs,
        sup_lo,
        sup_hi,
    )


def _fire_table(sa: StochasticAutomaton, adv: Adversary, tables: _Tables) -> np.ndarray:
    fire = np.full((len(tables.locations), max(len(tables.clocks), 1)), -1, np.int64)
    for loc in tables.locations:
        for clock in sa.setting.get(loc, ()):
            candidates = sa.edges_triggered(loc, clock)
            if not candidates:
                continue  # detected at fire time, path by path
            edge = adv.resolve((), loc, clock, candidates)
            fire[tables.loc_index[loc], tables.clock_index[clock]] = tables.loc_index[
                edge.target
            ]
    return fire


def _inverse_cdf(tables: _Tables, clock: int, u: float) -> float:
    lo = tables.sup_lo[clock]
    hi = tables.sup_hi[clock]
    order = tables.coefs.shape[1]
    for _ in range(_mc._BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        row = tables.piece_off[clock + 1] - 1
        for p in range(tables.piece_off[clock], tables.piece_off[clock + 1]):
            if mid <= tables.piece_hi[p]:
                row = p
                break
        value = 0.0
        for q in range(order - 1, -1, -1):
            value = value * mid + tables.coefs[row, q]
        if value < u:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def sample_path(
    sa: StochasticAutomaton,
    adv: Adversary,
    horizon: float,
    seed: int,
    path_index: int = 0,
) -> tuple:
    """Sample one run: set the location's clocks, advance to the minimum,
    fire its edge (adversary resolving any choice), and repeat until the
    horizon would be exceeded or a terminating location is reached.

    The same seed and path index always reproduce the same path.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    require_valid(sa)
    tables = _compile_tables(sa)
    key = _mc.path_key(seed & _SEED_MASK, path_index)
    loc = sa.initial
    elapsed = 0.0
    entry = 0.0
    ctr = 0
    history = [loc]
    steps: list = []
    for _ in range(_MAX_STEPS):
        clocks = sa.setting.get(loc, ())
        if not clocks:
            steps.append(PathStep(loc, entry, None))
            return tuple(steps)
        best_d = math.inf
        best_clock = None
        for clock in clocks:
            u = _mc.unit_uniform(key, ctr)
            ctr += 1
            d = _inverse_cdf(tables, tables.clock_index[clock], u)
            if d < best_d:
                best_d = d
                best_clock = clock
        if elapsed + best_d > horizon:
            steps.append(PathStep(loc, entry, None))
            return tuple(steps)
        candidates = sa.edges_triggered(loc, best_clock)
        if not candidates:
            raise DeadClock(f"clock {best_clock} set at {loc} triggers no edge")
        edge = adv.resolve(tuple(history), loc, best_clock, candidates)
        steps.append(PathStep(loc, entry, edge.action))
        elapsed += best_d
        entry = elapsed
        loc = edge.target
        history.append(loc)
    raise RuntimeError(f"path exceeded {_MAX_STEPS} transitions")


def _walk_until(
    sa: StochasticAutomaton,
    adv: Adversary,
    tables: _Tables,
    sat1: dict,
    sat2: dict,
    c_bound: float,
    strict_time: bool,
    seed: int,
    path_index: int,
) -> bool:
    """Reference per-path walk of the bounded until; mirrors the kernels."""
    key = _mc.path_key(seed & _SEED_MASK, path_index)
    loc = sa.initial
    t = 0.0
    ctr = 0
    history = [loc]
    steps = 0
    while True:
        time_ok = t < c_bound if strict_time else t <= c_bound
        if sat2[loc] and time_ok:
            return True
        if not sat1[loc]:
            return False
        clocks = sa.setting.get(loc, ())
        if not clocks:
            return False
        best_d = math.inf
        best_clock = None
        for clock in clocks:
            u = _mc.unit_uniform(key, ctr)
            ctr += 1
            d = _inverse_cdf(tables, tables.clock_index[clock], u)
            if d < best_d:
                best_d = d
                best_clock = clock
        t = t + best_d
        beyond = t >= c_bound if strict_time else t > c_bound
        if beyond:
            return False
        candidates = sa.edges_triggered(loc, best_clock)
        if not candidates:
            raise DeadClock(f"clock {best_clock} set at {loc} triggers no edge")
        edge = adv.resolve(tuple(history), loc, best_clock, candidates)
        loc = edge.target
        history.append(loc)
        steps += 1
        if steps > _MAX_STEPS:
            raise RuntimeError(f"path exceeded {_MAX_STEPS} transitions")


def estimate_until(
    sa: StochasticAutomaton,
    adv: Adversary,
    f: Until,
    samples: int,
    seed: int,
    confidence: float = 0.99,
) -> Estimate:
    """Fraction of sampled paths satisfying the bounded until, with a
    normal-approximation confidence interval.  The probability comparator of
    the formula is not applied; this reports the probability itself."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if f.time_cmp not in ("<", "<="):
        raise UnsupportedTimeBound("simulation supports < and <= time bounds only")
    require_valid(sa)
    tables = _compile_tables(sa)
    sat1 = {loc: eval_state_formula(f.left, loc, sa) for loc in tables.locations}
    sat2 = {loc: eval_state_formula(f.right, loc, sa) for loc in tables.locations}
    c_bound = float(f.time_bound)
    strict = f.time_cmp == "<"

    if getattr(adv, "memoryless", False):
        fire = _fire_table(sa, adv, tables)
        sat1_arr = np.asarray([sat1[loc] for loc in tables.locations], np.bool_)
        sat2_arr = np.asarray([sat2[loc] for loc in tables.locations], np.bool_)
        sat, err = _mc.run_until_kernel(
            samples,
            seed & _SEED_MASK,
            tables.loc_index[sa.initial],
            tables.offsets,
            tables.loc_clocks,
            fire,
            sat1_arr,
            sat2_arr,
            c_bound,
            strict,
            tables.piece_off,
            tables.piece_hi,
            tables.coefs,
            tables.sup_lo,
            tables.sup_hi,
            _MAX_STEPS,
        )
        if err.any():
            index = int(np.nonzero(err)[0][0])
            _walk_until(sa, adv, tables, sat1, sat2, c_bound, strict, seed, index)
            raise RuntimeError(f"path {index} exceeded {_MAX_STEPS} transitions")
        hits = int(sat.sum())
    else:
        hits = sum(
            _walk_until(sa, adv, tables, sat1, sat2, c_bound, strict, seed, i)
            for i in range(samples)
        )

    mean = hits / samples
    z = NormalDist().inv_cdf((1 + confidence) / 2)
    half_width = z * math.sqrt(mean * (1 - mean) / samples)
    return Estimate(mean=mean, half_width=half_width, samples=samples, seed=seed)
