"""Region-tree checking engine.

Unfolds a stochastic automaton into a tree of clock-ordering classes under an
adversary, labels each branch pass/fail/undecided against a bounded-until
formula, computes exact branch probabilities by polytope integration, and
accumulates the decided mass until the formula's truth is settled or a depth
cap is reached.

Symbolic clock values are named ``<clock><depth>``; the distinguished symbol
``a`` tracks the remaining time budget and is never an integration variable
(its value is determined by the fired clocks along the path).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import permutations

from . import polyint
from .adversary import Adversary
from .automaton import DeadClock, StochasticAutomaton, density, require_valid
from .logic import (
    Formula,
    Until,
    UnsupportedTimeBound,
    eval_state_formula,
    interval_passes,
    interval_refutes,
)
from .polyint import AffineExpr, Constraint, ConstraintSystem

__all__ = [
    "RegionNode",
    "RegionTotals",
    "RegionReport",
    "initial_node",
    "expand",
    "label_node",
    "path_probability",
    "run_region_check",
    "frontier_undecided_mass",
]

GLOBAL_CLOCK = "a"

# Generous default for the per-path integration cell budget; single region
# integrals are small but deep paths multiply candidate bounds.
_MAX_CELLS = 4096



@dataclass(frozen=True)
class RegionNode:
    """One branch of the region tree after adversary resolution."""

    location: str
    ordering: tuple  # symbolic values ascending; GLOBAL_CLOCK stands for a
    constraints: ConstraintSystem
    label: str | None  # 'p' | 'f' | 'u' | None
    depth: int
    a_expr: AffineExpr  # remaining time as an affine form over path variables
    path_vars: tuple  # ((variable, clock), ...) in setting order along the path
    history: tuple  # visited locations
    timed_out: bool = False


@dataclass(frozen=True)
class RegionTotals:
    sigma_p: Fraction
    sigma_f: Fraction
    undecided_mass: Fraction


@dataclass(frozen=True)
class LevelStats:
    depth: int
    sigma_p: Fraction
    sigma_f: Fraction
    frontier: int


@dataclass(frozen=True)
class RegionReport:
    verdict: str  # 'true' | 'false' | 'undecided'
    sigma_p: Fraction
    sigma_f: Fraction
    interval: tuple  # [sigma_p, 1 - sigma_f] brackets the true probability
    depth: int
    totals: RegionTotals
    levels: tuple


def initial_node(sa: StochasticAutomaton, c: Fraction) -> RegionNode:
    """Root node: remaining time c at the initial location, no clocks set."""
    c = Fraction(c)
    if c < 0:
        raise ValueError("time bound must be non-negative")
    return RegionNode(
        location=sa.initial,
        ordering=(GLOBAL_CLOCK,),
        constraints=ConstraintSystem(),
        label=None,
        depth=0,
        a_expr=AffineExpr.of(c),
        path_vars=(),
        history=(sa.initial,),
        timed_out=(c <= 0),
    )


def label_node(node: RegionNode, phi1: Formula, phi2: Formula, sa) -> str:
    """p when the goal holds with time remaining, f when the branch is dead,
    u otherwise.  A terminating location that misses the goal can never
    recover within a finite bound, so it fails immediately."""
    if not node.timed_out and eval_state_formula(phi2, node.location, sa):
        return "p"
    if node.timed_out or not eval_state_formula(phi1, node.location, sa):
        return "f"
    if sa.is_terminating(node.location):
        return "f"
    return "u"


def _value_expr(name: str, a_expr: AffineExpr) -> AffineExpr:
    if name == GLOBAL_CLOCK:
        return a_expr
    return AffineExpr.variable(name)


def expand(node: RegionNode, sa: StochasticAutomaton, adv: Adversary) -> list:
    """Children of an undecided node: one per feasible total ordering of the
    freshly set clock values and the remaining time budget.

    The minimal value of each ordering fires (the adversary resolving any
    choice); orderings that place the time budget first are timeout branches.
    Orderings infeasible against the accumulated constraints are pruned.
    """
    clocks = sa.setting.get(node.location, ())
    if not clocks:
        return []
    fresh = tuple((f"{clock}{node.depth}", clock) for clock in clocks)

    system = node.constraints
    for var, clock in fresh:
        dist = sa.clocks[clock]
        system = system.with_support(var, dist.support_lo, dist.support_hi)

    names = [var for var, _ in fresh] + [GLOBAL_CLOCK]
    clock_of = dict(fresh)
    children = []
    for perm in permutations(names):
        chain = []
        for lower, upper in zip(perm, perm[1:]):
            lhs = _value_expr(lower, node.a_expr)
            rhs = _value_expr(upper, node.a_expr)
            chain.append(Constraint(rhs - lhs, strict=True))
        branch_system = system.with_constraints(*chain)
        if not polyint.feasible(branch_system.all_inequalities()):
            continue
        minimal = perm[0]
        if minimal == GLOBAL_CLOCK:
            child = RegionNode(
                location=node.location,
                ordering=perm,
                constraints=branch_system,
                label=None,
                depth=node.depth + 1,
                a_expr=node.a_expr,
                path_vars=node.path_vars + fresh,
                history=node.history,
                timed_out=True,
            )
        else:
            clock = clock_of[minimal]
            candidates = sa.edges_triggered(node.location, clock)
            if not candidates:
                raise DeadClock(
                    f"clock {clock} set at {node.location} triggers no edge"
                )
            edge = adv.resolve(node.history, node.location, clock, candidates)
            child = RegionNode(
                location=edge.target,
                ordering=perm,
                constraints=branch_system,
                label=None,
                depth=node.depth + 1,
                a_expr=node.a_expr - AffineExpr.variable(minimal),
                path_vars=node.path_vars + fresh,
                history=node.history + (edge.target,),
                timed_out=False,
            )
        children.append(child)
    return children


def path_probability(node: RegionNode, sa: StochasticAutomaton, max_cells: int = _MAX_CELLS) -> Fraction:
    """Exact probability of the node's branch: the mass of its constraint
    region under the product of the densities of every clock set on the path."""
    densities = {var: density(sa.clocks[clock], var) for var, clock in node.path_vars}
    return polyint.polytope_probability(densities, node.constraints, max_cells=max_cells)


def frontier_undecided_mass(nodes, sa, max_cells: int = _MAX_CELLS) -> Fraction:
    return sum((path_probability(n, sa, max_cells) for n in nodes), Fraction(0))


def _verdict(sigma_p: Fraction, sigma_f: Fraction, cmp: str, bound: Fraction) -> str | None:
    lo = sigma_p
    hi = Fraction(1) - sigma_f
    if interval_passes(lo, hi, cmp, bound):
        return "true"
    if interval_refutes(lo, hi, cmp, bound):
        return "false"
    return None


def run_region_check(
    sa: StochasticAutomaton,
    adv: Adversary,
    f: Until,
    max_depth: int = 12,
    track_undecided: bool = False,
    max_cells: int = _MAX_CELLS,
) -> RegionReport:
    """Breadth-first unfolding with level-consistent stop tests.

    After each fully expanded level the accumulated pass mass is tested
    against the probability bound and the fail mass against its complement;
    at the depth cap the verdict is undecided and the bracketing interval
    [sigma_p, 1 - sigma_f] is reported.
    """
    if f.time_cmp not in ("<", "<="):
        raise UnsupportedTimeBound(f"region engine supports < and <= bounds only")
    require_valid(sa)

    phi1, phi2 = f.left, f.right
    sigma_p = Fraction(0)
    sigma_f = Fraction(0)

    root = initial_node(sa, f.time_bound)
    root = replace(root, label=label_node(root, phi1, phi2, sa))
    frontier = []
    if root.label == "p":
        sigma_p = Fraction(1)
    elif root.label == "f":
        sigma_f = Fraction(1)
    else:
        frontier.append(root)

    levels = [LevelStats(0, sigma_p, sigma_f, len(frontier))]
    depth = 0
    verdict = _verdict(sigma_p, sigma_f, f.prob_cmp, f.prob_bound)

    while verdict is None and frontier and depth < max_depth:
        depth += 1
        next_frontier = []
        for node in frontier:
            for child in expand(node, sa, adv):
                child = replace(child, label=label_node(child, phi1, phi2, sa))
                if child.label == "p":
                    sigma_p += path_probability(child, sa, max_cells)
                elif child.label == "f":
                    sigma_f += path_probability(child, sa, max_cells)
                else:
                    next_frontier.append(child)
        frontier = next_frontier
        levels.append(LevelStats(depth, sigma_p, sigma_f, len(frontier)))
        verdict = _verdict(sigma_p, sigma_f, f.prob_cmp, f.prob_bound)

    if track_undecided:
        undecided = frontier_undecided_mass(frontier, sa, max_cells)
    else:
        undecided = Fraction(1) - sigma_p - sigma_f
    totals = RegionTotals(sigma_p, sigma_f, undecided)
    return RegionReport(
        verdict=verdict or "undecided",
        sigma_p=sigma_p,
        sigma_f=sigma_f,
        interval=(sigma_p, Fraction(1) - sigma_f),
        depth=depth,
        totals=totals,
        levels=tuple(levels),
    )
