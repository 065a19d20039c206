"""Probabilistic real-time logic: AST, parser, desugaring, and evaluation.

The logic has propositional state formulae and a single path operator, a
time-bounded until compared against a probability threshold.  Path operators
appear only at the top level; the checker replaces each until leaf by the
verdict of a checking engine and then evaluates the ground formula.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from .automaton import StochasticAutomaton, require_valid
from .rational import parse_rational

__all__ = [
    "Formula",
    "TrueFormula",
    "FalseFormula",
    "Atom",
    "Not",
    "And",
    "Or",
    "Implies",
    "Until",
    "Diamond",
    "Box",
    "Forall",
    "Exists",
    "ParseError",
    "NestedUntil",
    "UnknownProposition",
    "UnsupportedTimeBound",
    "EngineOptions",
    "LeafResult",
    "CheckResult",
    "parse_formula",
    "desugar",
    "pretty",
    "eval_state_formula",
    "check",
    "compare_probability",
    "interval_passes",
    "interval_refutes",
]


class ParseError(Exception):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"at offset {position}: {message}")


class NestedUntil(Exception):
    """An until occurs inside an until or inside a state formula slot."""


class UnknownProposition(Exception):
    pass


class UnsupportedTimeBound(Exception):
    """Time comparators > and >= parse but no engine implements them."""


class Formula:
    """Base class for all formula nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class TrueFormula(Formula):
    pass


@dataclass(frozen=True)
class FalseFormula(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    """[left U{time_cmp time_bound} right] prob_cmp prob_bound"""

    left: Formula
    right: Formula
    time_cmp: str
    time_bound: Fraction
    prob_cmp: str
    prob_bound: Fraction


@dataclass(frozen=True)
class Diamond(Formula):
    time_cmp: str
    time_bound: Fraction
    operand: Formula
    prob_cmp: str
    prob_bound: Fraction


@dataclass(frozen=True)
class Box(Formula):
    time_cmp: str
    time_bound: Fraction
    operand: Formula
    prob_cmp: str
    prob_bound: Fraction


@dataclass(frozen=True)
class Forall(Formula):
    left: Formula
    right: Formula
    time_cmp: str
    time_bound: Fraction


@dataclass(frozen=True)
class Exists(Formula):
    left: Formula
    right: Formula
    time_cmp: str
    time_bound: Fraction


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}


def desugar(formula: Formula) -> Formula:
    """Rewrite derived operators into the core grammar; idempotent."""
    if isinstance(formula, (TrueFormula, Atom)):
        return formula
    if isinstance(formula, FalseFormula):
        return Not(TrueFormula())
    if isinstance(formula, Not):
        return Not(desugar(formula.operand))
    if isinstance(formula, And):
        return And(desugar(formula.left), desugar(formula.right))
    if isinstance(formula, Or):
        return Not(And(Not(desugar(formula.left)), Not(desugar(formula.right))))
    if isinstance(formula, Implies):
        return desugar(Or(Not(formula.left), formula.right))
    if isinstance(formula, Until):
        return replace(formula, left=desugar(formula.left), right=desugar(formula.right))
    if isinstance(formula, Diamond):
        return Until(
            TrueFormula(),
            desugar(formula.operand),
            formula.time_cmp,
            formula.time_bound,
            formula.prob_cmp,
            formula.prob_bound,
        )
    if isinstance(formula, Box):
        # The probability of "always phi" is one minus that of "eventually
        # not phi", so the comparison flips against the complement bound.
        return Until(
            TrueFormula(),
            Not(desugar(formula.operand)),
            formula.time_cmp,
            formula.time_bound,
            _FLIP[formula.prob_cmp],
            Fraction(1) - formula.prob_bound,
        )
    if isinstance(formula, Forall):
        return Until(
            desugar(formula.left),
            desugar(formula.right),
            formula.time_cmp,
            formula.time_bound,
            ">=",
            Fraction(1),
        )
    if isinstance(formula, Exists):
        return Until(
            desugar(formula.left),
            desugar(formula.right),
            formula.time_cmp,
            formula.time_bound,
            ">",
            Fraction(0),
        )
    raise TypeError(f"not a formula: {formula!r}")


def pretty(formula: Formula) -> str:
    """Render a formula in the concrete syntax accepted by parse_formula."""
    if isinstance(formula, TrueFormula):
        return "tt"
    if isinstance(formula, FalseFormula):
        return "ff"
    if isinstance(formula, Atom):
        return formula.name
    if isinstance(formula, Not):
        return f"!{_wrap(formula.operand)}"
    if isinstance(formula, And):
        return f"({pretty(formula.left)} & {pretty(formula.right)})"
    if isinstance(formula, Or):
        return f"({pretty(formula.left)} | {pretty(formula.right)})"
    if isinstance(formula, Implies):
        return f"({pretty(formula.left)} => {pretty(formula.right)})"
    if isinstance(formula, Until):
        return (
            f"[ {pretty(formula.left)} U{{{formula.time_cmp}{formula.time_bound}}} "
            f"{pretty(formula.right)} ] {formula.prob_cmp} {formula.prob_bound}"
        )
    if isinstance(formula, Diamond):
        return (
            f"<>{{{formula.time_cmp}{formula.time_bound}}} {_wrap(formula.operand)} "
            f"{formula.prob_cmp} {formula.prob_bound}"
        )
    if isinstance(formula, Box):
        return (
            f"[]{{{formula.time_cmp}{formula.time_bound}}} {_wrap(formula.operand)} "
            f"{formula.prob_cmp} {formula.prob_bound}"
        )
    if isinstance(formula, Forall):
        return f"A[ {pretty(formula.left)} U{{{formula.time_cmp}{formula.time_bound}}} {pretty(formula.right)} ]"
    if isinstance(formula, Exists):
        return f"E[ {pretty(formula.left)} U{{{formula.time_cmp}{formula.time_bound}}} {pretty(formula.right)} ]"
    raise TypeError(f"not a formula: {formula!r}")


def _wrap(formula: Formula) -> str:
    text = pretty(formula)
    if isinstance(formula, (Atom, TrueFormula, FalseFormula, Not)):
        return text
    return f"({text})"


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<box>\[\])
      | (?P<diamond><>)
      | (?P<le><=) | (?P<ge>>=) | (?P<implies>=>)
      | (?P<num>\d+(?:\.\d+)?(?:/\d+)?)
      | (?P<ident>[A-Za-z_]\w*)
      | (?P<sym>[!&|()\[\]{}<>])
    """,
    re.X,
)


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        pos = m.end()
        kind = m.lastgroup
        if kind == "ws":
            continue
        value = m.group()
        if kind in ("le", "ge"):
            kind = "cmp"
        elif kind == "sym" and value in "<>":
            kind = "cmp"
        tokens.append((kind, value, m.start()))
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.idx = 0

    def peek(self):
        return self.tokens[self.idx]

    def advance(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def expect(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            raise ParseError(f"expected {want!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return self.advance()

    def parse(self) -> Formula:
        formula = self.parse_implies()
        tok = self.peek()
        if tok[0] != "eof":
            raise ParseError(f"trailing input {tok[1]!r}", tok[2])
        return formula

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.peek()[0] == "implies":
            self.advance()
            return Implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        left = self.parse_and()
        while self.peek()[:2] == ("sym", "|"):
            self.advance()
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Formula:
        left = self.parse_unary()
        while self.peek()[:2] == ("sym", "&"):
            self.advance()
            left = And(left, self.parse_unary())
        return left

    def parse_unary(self) -> Formula:
        tok = self.peek()
        if tok[:2] == ("sym", "!"):
            self.advance()
            return Not(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Formula:
        tok = self.peek()
        kind, value, pos = tok
        if kind == "ident":
            if value in ("A", "E") and self.tokens[self.idx + 1][:2] == ("sym", "["):
                return self.parse_quantified(value)
            self.advance()
            if value == "tt":
                return TrueFormula()
            if value == "ff":
                return FalseFormula()
            if value == "U":
                raise ParseError("'U' outside an until bracket", pos)
            return Atom(value)
        if kind == "sym" and value == "(":
            self.advance()
            inner = self.parse_implies()
            self.expect("sym", ")")
            return inner
        if kind == "sym" and value == "[":
            return self.parse_until()
        if kind == "diamond":
            return self.parse_temporal(Diamond)
        if kind == "box":
            return self.parse_temporal(Box)
        raise ParseError(f"unexpected token {value or 'end of input'!r}", pos)

    def parse_time_spec(self):
        self.expect("sym", "{")
        cmp_tok = self.expect("cmp")
        bound_tok = self.expect("num")
        self.expect("sym", "}")
        return cmp_tok[1], parse_rational(bound_tok[1])

    def parse_prob_spec(self):
        cmp_tok = self.expect("cmp")
        bound_tok = self.expect("num")
        bound = parse_rational(bound_tok[1])
        if not 0 <= bound <= 1:
            raise ParseError(f"probability bound {bound} outside [0, 1]", bound_tok[2])
        return cmp_tok[1], bound

    def parse_until(self) -> Formula:
        self.expect("sym", "[")
        left = self.parse_implies()
        self.expect("ident", "U")
        time_cmp, time_bound = self.parse_time_spec()
        right = self.parse_implies()
        self.expect("sym", "]")
        prob_cmp, prob_bound = self.parse_prob_spec()
        return Until(left, right, time_cmp, time_bound, prob_cmp, prob_bound)

    def parse_temporal(self, node) -> Formula:
        self.advance()  # <> or []
        time_cmp, time_bound = self.parse_time_spec()
        operand = self.parse_unary()
        prob_cmp, prob_bound = self.parse_prob_spec()
        return node(time_cmp, time_bound, operand, prob_cmp, prob_bound)

    def parse_quantified(self, which: str) -> Formula:
        self.advance()  # A or E
        self.expect("sym", "[")
        left = self.parse_implies()
        self.expect("ident", "U")
        time_cmp, time_bound = self.parse_time_spec()
        right = self.parse_implies()
        self.expect("sym", "]")
        node = Forall if which == "A" else Exists
        return node(left, right, time_cmp, time_bound)


def _contains_until(formula: Formula) -> bool:
    if isinstance(formula, Until):
        return True
    if isinstance(formula, Not):
        return _contains_until(formula.operand)
    if isinstance(formula, And):
        return _contains_until(formula.left) or _contains_until(formula.right)
    return False


def validate_top_level(formula: Formula) -> None:
    """Reject until operators nested inside untils (core formulae only)."""
    if isinstance(formula, Until):
        if _contains_until(formula.left) or _contains_until(formula.right):
            raise NestedUntil("until operators cannot be nested")
        if formula.time_bound < 0:
            raise ValueError("time bound must be non-negative")
        return
    if isinstance(formula, Not):
        validate_top_level(formula.operand)
    elif isinstance(formula, And):
        validate_top_level(formula.left)
        validate_top_level(formula.right)


def parse_formula(text: str) -> Formula:
    """Parse and desugar a formula; untils may appear only as leaves."""
    formula = desugar(_Parser(text).parse())
    validate_top_level(formula)
    return formula


def until_leaves(formula: Formula) -> list:
    if isinstance(formula, Until):
        return [formula]
    if isinstance(formula, Not):
        return until_leaves(formula.operand)
    if isinstance(formula, And):
        return until_leaves(formula.left) + until_leaves(formula.right)
    return []


def eval_state_formula(
    phi: Formula, loc: str, sa: StochasticAutomaton, strict: bool = False
) -> bool:
    """Propositional evaluation over the location's label set."""
    if isinstance(phi, TrueFormula):
        return True
    if isinstance(phi, FalseFormula):
        return False
    if isinstance(phi, Atom):
        if phi.name in sa.labeling.get(loc, frozenset()):
            return True
        if phi.name not in sa.atoms():
            if strict:
                raise UnknownProposition(f"proposition {phi.name!r} labels no location")
            warnings.warn(
                f"proposition {phi.name!r} labels no location; treating as false",
                stacklevel=2,
            )
        return False
    if isinstance(phi, Not):
        return not eval_state_formula(phi.operand, loc, sa, strict)
    if isinstance(phi, And):
        return eval_state_formula(phi.left, loc, sa, strict) and eval_state_formula(
            phi.right, loc, sa, strict
        )
    if isinstance(phi, (Or, Implies)):
        return eval_state_formula(desugar(phi), loc, sa, strict)
    raise ValueError(f"path operator inside a state formula: {phi!r}")


def compare_probability(value: Fraction, cmp: str, bound: Fraction) -> bool:
    if cmp == "<":
        return value < bound
    if cmp == "<=":
        return value <= bound
    if cmp == ">":
        return value > bound
    if cmp == ">=":
        return value >= bound
    raise ValueError(f"unknown comparator {cmp!r}")


def interval_passes(lo, hi, cmp: str, bound) -> bool:
    """True when every probability in [lo, hi] satisfies `cmp bound`."""
    if cmp == ">":
        return lo > bound
    if cmp == ">=":
        return lo >= bound
    if cmp == "<":
        return hi < bound
    if cmp == "<=":
        return hi <= bound
    raise ValueError(f"unknown comparator {cmp!r}")


def interval_refutes(lo, hi, cmp: str, bound) -> bool:
    """True when no probability in [lo, hi] satisfies `cmp bound`."""
    if cmp == ">":
        return hi <= bound
    if cmp == ">=":
        return hi < bound
    if cmp == "<":
        return lo >= bound
    if cmp == "<=":
        return lo > bound
    raise ValueError(f"unknown comparator {cmp!r}")


@dataclass
class EngineOptions:
    """Engine choice and tuning knobs for dispatching until leaves."""

    engine: str = "matrix"
    delta: Fraction | None = None
    max_depth: int = 12
    samples: int = 100_000
    seed: int = 0
    confidence: float = 0.99
    strict_atoms: bool = False
    jobs: int = 1


@dataclass(frozen=True)
class LeafResult:
    formula: Until
    verdict: str  # 'true' | 'false' | 'undecided'
    report: object


@dataclass(frozen=True)
class CheckResult:
    verdict: str  # 'true' | 'false' | 'undecided'
    leaves: tuple


def _dispatch_until(sa, adv, leaf: Until, options: EngineOptions) -> LeafResult:
    if leaf.time_cmp in (">", ">="):
        raise UnsupportedTimeBound(
            f"time bound {leaf.time_cmp}{leaf.time_bound} is not supported"
        )
    if options.engine == "matrix":
        from .matrix_checker import run_matrix_check

        if options.delta is None:
            raise ValueError("matrix engine requires a delta")
        report = run_matrix_check(sa, adv, leaf, options.delta)
        verdict = {"pass": "true", "fail": "false"}.get(report.verdict, "undecided")
        return LeafResult(leaf, verdict, report)
    if options.engine == "region":
        from .region_checker import run_region_check

        report = run_region_check(sa, adv, leaf, max_depth=options.max_depth)
        return LeafResult(leaf, report.verdict, report)
    if options.engine == "montecarlo":
        from .simulate import estimate_until

        est = estimate_until(sa, adv, leaf, options.samples, options.seed, options.confidence)
        lo = max(0.0, est.mean - est.half_width)
        hi = min(1.0, est.mean + est.half_width)
        if interval_passes(lo, hi, leaf.prob_cmp, float(leaf.prob_bound)):
            verdict = "true"
        elif interval_refutes(lo, hi, leaf.prob_cmp, float(leaf.prob_bound)):
            verdict = "false"
        else:
            verdict = "undecided"
        return LeafResult(leaf, verdict, est)
    raise ValueError(f"unknown engine {options.engine!r}")


def _three_valued(formula: Formula, leaf_verdicts: dict, sa, options) -> bool | None:
    if isinstance(formula, TrueFormula):
        return True
    if isinstance(formula, Atom):
        return eval_state_formula(formula, sa.initial, sa, options.strict_atoms)
    if isinstance(formula, Until):
        verdict = leaf_verdicts[formula]
        return {"true": True, "false": False}.get(verdict)
    if isinstance(formula, Not):
        value = _three_valued(formula.operand, leaf_verdicts, sa, options)
        return None if value is None else not value
    if isinstance(formula, And):
        left = _three_valued(formula.left, leaf_verdicts, sa, options)
        right = _three_valued(formula.right, leaf_verdicts, sa, options)
        if left is False or right is False:
            return False
        if left is None or right is None:
            return None
        return True
    raise ValueError(f"unexpected node in core formula: {formula!r}")


def check(sa, adv, formula: Formula, options: EngineOptions | None = None) -> CheckResult:
    """Four steps: check each until leaf, substitute its verdict, evaluate
    remaining atoms at the initial location, then evaluate the ground term."""
    options = options or EngineOptions()
    require_valid(sa)
    formula = desugar(formula)
    validate_top_level(formula)

    leaf_results: dict = {}
    for leaf in until_leaves(formula):
        if leaf not in leaf_results:
            leaf_results[leaf] = _dispatch_until(sa, adv, leaf, options)

    verdicts = {leaf: res.verdict for leaf, res in leaf_results.items()}
    value = _three_valued(formula, verdicts, sa, options)
    verdict = "undecided" if value is None else ("true" if value else "false")
    return CheckResult(verdict, tuple(leaf_results.values()))
