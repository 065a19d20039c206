"""Stochastic automata with piecewise-polynomial clock distributions.

Provides the model types, a line-oriented text format, structural validation,
and the exact CDF operations (point evaluation, interval probabilities,
inverse-CDF sampling) used by every checking engine.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import polyint
from .rational import parse_rational

__all__ = [
    "CdfPiece",
    "Distribution",
    "Edge",
    "StochasticAutomaton",
    "Violation",
    "ValidationReport",
    "InvalidModel",
    "ModelParseError",
    "validate_automaton",
    "cdf_at",
    "interval_probability",
    "sample_clock",
    "density",
    "parse_model",
    "parse_polynomial",
]

ClockId = str
LocationId = str
ActionId = str

# Number of density sample points per piece used by the monotonicity check
# for pieces of degree >= 2 (degree <= 1 is decided exactly at the endpoints).
_MONOTONE_SAMPLES = 1024


class ModelParseError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class InvalidModel(Exception):
    """Raised by engines when a model fails validation."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        codes = ", ".join(v.code for v in report.violations)
        super().__init__(f"model failed validation: {codes}")


class DeadClock(Exception):
    """A clock expired at a location where no edge is triggered by it."""


def _poly_eval(coeffs: Sequence[Fraction], t: Fraction) -> Fraction:
    value = Fraction(0)
    for c in reversed(coeffs):
        value = value * t + c
    return value


def _poly_derivative(coeffs: Sequence[Fraction]) -> tuple:
    return tuple(Fraction(k) * c for k, c in enumerate(coeffs))[1:] or (Fraction(0),)


@dataclass(frozen=True)
class CdfPiece:
    lo: Fraction
    hi: Fraction
    coeffs: tuple  # ascending coefficients of the CDF polynomial in t


@dataclass(frozen=True)
class Distribution:
    """A piecewise-polynomial CDF with rational coefficients on [lo, hi]."""

    pieces: tuple

    @property
    def support_lo(self) -> Fraction:
        return self.pieces[0].lo

    @property
    def support_hi(self) -> Fraction:
        return self.pieces[-1].hi


@dataclass(frozen=True)
class Edge:
    source: LocationId
    action: ActionId
    trigger_clock: ClockId
    target: LocationId


@dataclass(frozen=True)
class StochasticAutomaton:
    locations: frozenset
    initial: LocationId
    clocks: dict  # ClockId -> Distribution
    actions: frozenset
    edges: tuple
    setting: dict  # LocationId -> tuple[ClockId, ...] (ordered)
    labeling: dict  # LocationId -> frozenset[str]

    def edges_from(self, loc: LocationId) -> tuple:
        return tuple(e for e in self.edges if e.source == loc)

    def edges_triggered(self, loc: LocationId, clock: ClockId) -> tuple:
        return tuple(e for e in self.edges if e.source == loc and e.trigger_clock == clock)

    def is_terminating(self, loc: LocationId) -> bool:
        return not self.setting.get(loc)

    def atoms(self) -> frozenset:
        known: set = set()
        for props in self.labeling.values():
            known |= set(props)
        return frozenset(known)


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def cdf_at(dist: Distribution, t) -> Fraction:
    """Exact CDF value; 0 at or below the support, 1 at or above it."""
    t = Fraction(t)
    if t <= dist.support_lo:
        return Fraction(0)
    if t >= dist.support_hi:
        return Fraction(1)
    for piece in dist.pieces:
        if t <= piece.hi:
            return _poly_eval(piece.coeffs, t)
    return Fraction(1)


def interval_probability(dist: Distribution, a, b) -> Fraction:
    """Probability that the clock value falls in (a, b]."""
    a = Fraction(a)
    b = Fraction(b)
    if a > b:
        raise ValueError(f"empty interval bounds: {a} > {b}")
    return cdf_at(dist, b) - cdf_at(dist, a)


def _cdf_float(dist: Distribution, t: float) -> float:
    lo = float(dist.support_lo)
    hi = float(dist.support_hi)
    if t <= lo:
        return 0.0
    if t >= hi:
        return 1.0
    for piece in dist.pieces:
        if t <= float(piece.hi):
            value = 0.0
            for c in reversed(piece.coeffs):
                value = value * t + float(c)
            return value
    return 1.0


def sample_clock(dist: Distribution, u: float) -> float:
    """Inverse-CDF sample by monotone bisection (absolute tolerance 1e-12)."""
    if not 0 <= u < 1:
        raise ValueError(f"u must lie in [0, 1): {u}")
    lo = float(dist.support_lo)
    hi = float(dist.support_hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _cdf_float(dist, mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def density(dist: Distribution, var: str) -> polyint.VarDensity:
    """The distribution's density (piecewise CDF derivative) in `var`."""
    pieces = []
    for piece in dist.pieces:
        deriv = _poly_derivative(piece.coeffs)
        pieces.append(
            polyint.DensityPiece(piece.lo, piece.hi, polyint.MultiPoly.univariate(var, deriv))
        )
    return polyint.VarDensity(var, tuple(pieces))


def validate_distribution(dist: Distribution, subject: str) -> list:
    violations = []

    def bad(code: str, message: str):
        violations.append(Violation(code, subject, message))

    if not dist.pieces:
        bad("CdfEmpty", "distribution has no pieces")
        return violations
    if dist.support_lo < 0:
        bad("CdfNegativeSupport", f"support starts at {dist.support_lo} < 0")
    if dist.support_lo >= dist.support_hi:
        bad("CdfEmptySupport", "support_lo must be strictly below support_hi")
        return violations
    for piece in dist.pieces:
        if piece.lo >= piece.hi:
            bad("CdfEmptySupport", f"piece [{piece.lo},{piece.hi}] is empty")
            return violations
    for left, right in zip(dist.pieces, dist.pieces[1:]):
        if left.hi != right.lo:
            bad("CdfDiscontinuous", f"gap between pieces at {left.hi} and {right.lo}")
        elif _poly_eval(left.coeffs, left.hi) != _poly_eval(right.coeffs, right.lo):
            bad("CdfDiscontinuous", f"pieces disagree at t={left.hi}")
    start = _poly_eval(dist.pieces[0].coeffs, dist.support_lo)
    if start != 0:
        bad("CdfNotNormalized", f"CDF is {start} at support_lo, expected 0")
    end = _poly_eval(dist.pieces[-1].coeffs, dist.support_hi)
    if end != 1:
        bad("CdfNotNormalized", f"CDF is {end} at support_hi, expected 1")

    # Monotonicity: density must be non-negative.  Exact at the endpoints for
    # degree <= 1 pieces; sampled heuristically for higher degrees.
    for piece in dist.pieces:
        deriv = _poly_derivative(piece.coeffs)
        if len(deriv) <= 2:
            points = [piece.lo, piece.hi]
        else:
            width = piece.hi - piece.lo
            points = [
                piece.lo + width * Fraction(k, _MONOTONE_SAMPLES - 1)
                for k in range(_MONOTONE_SAMPLES)
            ]
        if any(_poly_eval(deriv, t) < 0 for t in points):
            bad("CdfDecreasing", f"density negative on piece [{piece.lo},{piece.hi}]")
            break
    return violations


def validate_automaton(sa: StochasticAutomaton) -> ValidationReport:
    """Check every structural invariant; violations are data, not failures."""
    violations: list = []

    def bad(code: str, subject: str, message: str):
        violations.append(Violation(code, subject, message))

    if sa.initial not in sa.locations:
        bad("UnknownInitial", sa.initial, "initial location is not declared")
    for loc, clocks in sa.setting.items():
        if loc not in sa.locations:
            bad("UnknownLocation", loc, "setting entry for undeclared location")
        for clock in clocks:
            if clock not in sa.clocks:
                bad("MissingDistribution", clock, f"clock set at {loc} has no distribution")
    seen_actions: set = set()
    for edge in sa.edges:
        subject = f"{edge.source}-{edge.action}->{edge.target}"
        if edge.source not in sa.locations or edge.target not in sa.locations:
            bad("UnknownLocation", subject, "edge endpoint is not declared")
            continue
        if edge.action not in sa.actions:
            bad("UnknownAction", subject, "edge action is not declared")
        if (edge.source, edge.action) in seen_actions:
            bad("DuplicateAction", subject, "two edges from one location share an action")
        seen_actions.add((edge.source, edge.action))
        if edge.trigger_clock not in sa.setting.get(edge.source, ()):
            bad(
                "ClockScopeViolation",
                subject,
                f"trigger clock {edge.trigger_clock} is not set at {edge.source}",
            )
    for loc in sorted(sa.locations):
        if not sa.setting.get(loc) and sa.edges_from(loc):
            bad("TerminatingWithEdges", loc, "location sets no clocks but has edges")
    for clock, dist in sa.clocks.items():
        violations.extend(validate_distribution(dist, clock))
    return ValidationReport(tuple(violations))


def require_valid(sa: StochasticAutomaton) -> None:
    report = validate_automaton(sa)
    if not report.ok:
        raise InvalidModel(report)


# --- text format -----------------------------------------------------------
#
#   clock <id> cdf { [<lo>,<hi>]: <poly in t>; ... }
#   location <id> [init] set {<clock list>} props {<prop list>}
#   edge <src> -<action>{<clock>}-> <dst>

_TERM = re.compile(
    r"\s*(?:(\+|-)|(\d+(?:\.\d+)?(?:/\d+)?)|(t)|(\*)|(\^))"
)


def parse_polynomial(text: str) -> tuple:
    """Parse `c*t^k` terms joined by +/- into ascending coefficients."""
    coeffs: dict[int, Fraction] = {}
    pos = 0
    sign = Fraction(1)
    coef: Fraction | None = None
    power: int | None = None
    pending = False

    def flush():
        nonlocal sign, coef, power, pending
        if not pending:
            if coef is not None or power is not None:
                raise ValueError("dangling term")
            return
        c = coef if coef is not None else Fraction(1)
        k = power if power is not None else 0
        coeffs[k] = coeffs.get(k, Fraction(0)) + sign * c
        sign, coef, power, pending = Fraction(1), None, None, False

    text = text.strip()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m:
            raise ValueError(f"bad polynomial near {text[pos:]!r}")
        pos = m.end()
        if m.group(1):
            flush()
            if m.group(1) == "-":
                sign = -sign
        elif m.group(2):
            if coef is not None:
                raise ValueError("two coefficients in one term")
            coef = parse_rational(m.group(2))
            pending = True
        elif m.group(3):
            if power is not None:
                raise ValueError("two variables in one term")
            power = 1
            pending = True
        elif m.group(5):  # '^'
            m2 = re.compile(r"\s*(\d+)").match(text, pos)
            if power != 1 or m2 is None:
                raise ValueError("misplaced exponent")
            power = int(m2.group(1))
            pos = m2.end()
        # '*' separates factors; nothing to do
    flush()
    if not coeffs:
        raise ValueError("empty polynomial")
    top = max(coeffs)
    return tuple(coeffs.get(k, Fraction(0)) for k in range(top + 1))


_CLOCK_RE = re.compile(r"^clock\s+(\w+)\s+cdf\s*\{(.*)\}$")
_PIECE_RE = re.compile(r"^\[\s*([^,\]]+)\s*,\s*([^,\]]+)\s*\]\s*:\s*(.+)$")
_LOCATION_RE = re.compile(
    r"^location\s+(\w+)(\s+init)?\s+set\s*\{([^}]*)\}\s+props\s*\{([^}]*)\}$"
)
_EDGE_RE = re.compile(r"^edge\s+(\w+)\s*-(\w+)\{(\w+)\}->\s*(\w+)$")


def parse_model(text: str) -> StochasticAutomaton:
    """Parse the automaton text format (UTF-8, line oriented, # comments)."""
    clocks: dict[str, Distribution] = {}
    locations: list[str] = []
    initial: str | None = None
    setting: dict[str, tuple] = {}
    labeling: dict[str, frozenset] = {}
    edges: list[Edge] = []

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _CLOCK_RE.match(line)
        if m:
            name, body = m.groups()
            if name in clocks:
                raise ModelParseError(f"clock {name!r} declared twice", ln)
            pieces = []
            for chunk in body.split(";"):
                chunk = chunk.strip()
                if not chunk:
                    continue
                pm = _PIECE_RE.match(chunk)
                if not pm:
                    raise ModelParseError(f"bad cdf piece {chunk!r}", ln)
                lo, hi, poly = pm.groups()
                try:
                    coeffs = parse_polynomial(poly)
                except ValueError as exc:
                    raise ModelParseError(str(exc), ln) from exc
                pieces.append(CdfPiece(parse_rational(lo), parse_rational(hi), coeffs))
            if not pieces:
                raise ModelParseError(f"clock {name!r} has no cdf pieces", ln)
            clocks[name] = Distribution(tuple(pieces))
            continue
        m = _LOCATION_RE.match(line)
        if m:
            name, init_flag, clock_list, prop_list = m.groups()
            if name in setting:
                raise ModelParseError(f"location {name!r} declared twice", ln)
            locations.append(name)
            if init_flag:
                if initial is not None:
                    raise ModelParseError("two init locations", ln)
                initial = name
            setting[name] = tuple(c.strip() for c in clock_list.split(",") if c.strip())
            labeling[name] = frozenset(p.strip() for p in prop_list.split(",") if p.strip())
            continue
        m = _EDGE_RE.match(line)
        if m:
            src, action, clock, dst = m.groups()
            edges.append(Edge(src, action, clock, dst))
            continue
        raise ModelParseError(f"cannot parse {raw.strip()!r}", ln)

    if initial is None:
        raise ModelParseError("no location is marked init")
    return StochasticAutomaton(
        locations=frozenset(locations),
        initial=initial,
        clocks=clocks,
        actions=frozenset(e.action for e in edges),
        edges=tuple(edges),
        setting=setting,
        labeling=labeling,
    )


def load_model(path: str) -> StochasticAutomaton:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())
