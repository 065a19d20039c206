"""Exact multivariate polynomial arithmetic over rationals, plus iterated
integration of product densities over regions cut out by affine constraints.

The central entry point is :func:`polytope_probability`, which computes the
exact probability mass of a linearly constrained region under a product of
independent piecewise-polynomial densities.  Integration proceeds variable by
variable; whenever the active lower (or upper) bound of the variable being
eliminated depends on the ordering of several candidate bounds, the outer
domain is split on the pairwise comparisons and the pieces are summed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .rational import parse_rational

__all__ = [
    "MultiPoly",
    "AffineExpr",
    "Constraint",
    "ConstraintSystem",
    "DensityPiece",
    "VarDensity",
    "PolyIntError",
    "VarInBound",
    "UnboundedRegion",
    "DepthExceeded",
    "DensityNotNormalized",
    "constraint",
    "poly_integrate",
    "polytope_probability",
    "feasible",
    "parse_integration_problem",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)

# A monomial is a sorted tuple of (variable, positive exponent) pairs; the
# empty tuple is the constant monomial.
Monomial = tuple


class PolyIntError(Exception):
    """Base class for integration errors."""


class VarInBound(PolyIntError):
    """An integration bound mentions the integration variable itself."""


class UnboundedRegion(PolyIntError):
    """A constrained variable has no density/support to bound it."""


class DepthExceeded(PolyIntError):
    """Case splitting produced more cells than the configured limit."""


class DensityNotNormalized(PolyIntError):
    """A density does not integrate to one over its support."""


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    exps: dict[str, int] = dict(a)
    for var, e in b:
        exps[var] = exps.get(var, 0) + e
    return tuple(sorted(exps.items()))


class MultiPoly:
    """A multivariate polynomial with Fraction coefficients.

    Stored as a mapping from monomials to non-zero coefficients.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        cleaned: dict[Monomial, Fraction] = {}
        if terms:
            for mono, coef in terms.items():
                coef = Fraction(coef)
                if coef:
                    cleaned[tuple(mono)] = coef
        self.terms = cleaned

    @classmethod
    def const(cls, value) -> "MultiPoly":
        value = Fraction(value)
        return cls({(): value} if value else {})

    @classmethod
    def variable(cls, name: str) -> "MultiPoly":
        return cls({((name, 1),): _ONE})

    @classmethod
    def univariate(cls, name: str, coeffs: Sequence[Fraction]) -> "MultiPoly":
        """Build sum(coeffs[k] * name**k) from ascending coefficients."""
        terms: dict[Monomial, Fraction] = {}
        for k, c in enumerate(coeffs):
            c = Fraction(c)
            if not c:
                continue
            mono: Monomial = () if k == 0 else ((name, k),)
            terms[mono] = terms.get(mono, _ZERO) + c
        return cls(terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other) -> "MultiPoly":
        other = _as_poly(other)
        terms = dict(self.terms)
        for mono, coef in other.terms.items():
            terms[mono] = terms.get(mono, _ZERO) + coef
        return MultiPoly(terms)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> "MultiPoly":
        return _as_poly(other) + (-self)

    def __mul__(self, other) -> "MultiPoly":
        other = _as_poly(other)
        terms: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = _mono_mul(m1, m2)
                terms[mono] = terms.get(mono, _ZERO) + c1 * c2
        return MultiPoly(terms)

    __rmul__ = __mul__

    def variables(self) -> frozenset:
        return frozenset(var for mono in self.terms for var, _ in mono)

    def mentions(self, var: str) -> bool:
        return any(v == var for mono in self.terms for v, _ in mono)

    def antiderivative(self, var: str) -> "MultiPoly":
        terms: dict[Monomial, Fraction] = {}
        for mono, coef in self.terms.items():
            exps = dict(mono)
            k = exps.get(var, 0)
            exps[var] = k + 1
            terms[tuple(sorted(exps.items()))] = coef / (k + 1)
        return MultiPoly(terms)

    def substitute(self, var: str, value: "AffineExpr") -> "MultiPoly":
        """Replace `var` by an affine expression, expanding powers."""
        replacement = value.to_poly()
        powers: list[MultiPoly] = [MultiPoly.const(1)]
        result = MultiPoly()
        for mono, coef in self.terms.items():
            k = 0
            rest = []
            for v, e in mono:
                if v == var:
                    k = e
                else:
                    rest.append((v, e))
            while len(powers) <= k:
                powers.append(powers[-1] * replacement)
            result = result + MultiPoly({tuple(rest): coef}) * powers[k]
        return result

    def eval_constant(self) -> Fraction:
        if not self.terms:
            return _ZERO
        if set(self.terms) != {()}:
            raise ValueError(f"polynomial is not constant: {self!r}")
        return self.terms[()]

    def evaluate(self, assignment: Mapping[str, Fraction]) -> Fraction:
        total = _ZERO
        for mono, coef in self.terms.items():
            value = coef
            for var, e in mono:
                value *= Fraction(assignment[var]) ** e
            total += value
        return total

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono, coef in sorted(self.terms.items()):
            factors = [str(coef)]
            factors += [f"{v}^{e}" if e > 1 else v for v, e in mono]
            parts.append("*".join(factors))
        return " + ".join(parts)


def _as_poly(value) -> MultiPoly:
    if isinstance(value, MultiPoly):
        return value
    if isinstance(value, AffineExpr):
        return value.to_poly()
    return MultiPoly.const(value)


@dataclass(frozen=True)
class AffineExpr:
    """const + sum(coeff * var); canonical (no zero coefficients)."""

    const: Fraction = _ZERO
    coeffs: tuple = ()

    def __post_init__(self):
        if type(self.const) is not Fraction:
            object.__setattr__(self, "const", Fraction(self.const))
        cleaned = tuple(
            sorted((v, c if type(c) is Fraction else Fraction(c)) for v, c in dict(self.coeffs).items() if c)
        )
        object.__setattr__(self, "coeffs", cleaned)

    @staticmethod
    def of(value) -> "AffineExpr":
        return AffineExpr(Fraction(value), ())

    @staticmethod
    def variable(name: str) -> "AffineExpr":
        return AffineExpr(_ZERO, ((name, _ONE),))

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def coefficient(self, var: str) -> Fraction:
        for v, c in self.coeffs:
            if v == var:
                return c
        return _ZERO

    def drop(self, var: str) -> "AffineExpr":
        return AffineExpr(self.const, tuple((v, c) for v, c in self.coeffs if v != var))

    def variables(self) -> frozenset:
        return frozenset(v for v, _ in self.coeffs)

    def __add__(self, other) -> "AffineExpr":
        other = _as_affine(other)
        merged = dict(self.coeffs)
        for v, c in other.coeffs:
            merged[v] = merged.get(v, _ZERO) + c
        return AffineExpr(self.const + other.const, tuple(merged.items()))

    __radd__ = __add__

    def __neg__(self) -> "AffineExpr":
        return AffineExpr(-self.const, tuple((v, -c) for v, c in self.coeffs))

    def __sub__(self, other) -> "AffineExpr":
        return self + (-_as_affine(other))

    def __rsub__(self, other) -> "AffineExpr":
        return _as_affine(other) + (-self)

    def __mul__(self, scalar) -> "AffineExpr":
        scalar = Fraction(scalar)
        return AffineExpr(self.const * scalar, tuple((v, c * scalar) for v, c in self.coeffs))

    __rmul__ = __mul__

    def to_poly(self) -> MultiPoly:
        poly = MultiPoly.const(self.const)
        for v, c in self.coeffs:
            poly = poly + MultiPoly({((v, 1),): c})
        return poly

    def __repr__(self) -> str:
        parts = [str(self.const)] if self.const or not self.coeffs else []
        parts += [f"{c}*{v}" for v, c in self.coeffs]
        return " + ".join(parts)


def _as_affine(value) -> AffineExpr:
    if isinstance(value, AffineExpr):
        return value
    return AffineExpr.of(value)


@dataclass(frozen=True)
class Constraint:
    """An inequality ``expr > 0`` (strict) or ``expr >= 0``."""

    expr: AffineExpr
    strict: bool = False

    def variables(self) -> frozenset:
        return self.expr.variables()

    def constant_truth(self) -> bool:
        """Truth value for a variable-free constraint."""
        if not self.expr.is_constant:
            raise ValueError("constraint still mentions variables")
        return self.expr.const > 0 if self.strict else self.expr.const >= 0

    def __repr__(self) -> str:
        op = ">" if self.strict else ">="
        return f"{self.expr!r} {op} 0"


def constraint(lhs, op: str, rhs) -> Constraint:
    """Build a constraint ``lhs op rhs`` with op in {<, <=, >, >=}."""
    lhs = _as_affine(lhs)
    rhs = _as_affine(rhs)
    if op == "<":
        return Constraint(rhs - lhs, strict=True)
    if op == "<=":
        return Constraint(rhs - lhs, strict=False)
    if op == ">":
        return Constraint(lhs - rhs, strict=True)
    if op == ">=":
        return Constraint(lhs - rhs, strict=False)
    raise ValueError(f"unknown comparator {op!r}")


@dataclass(frozen=True)
class ConstraintSystem:
    """A conjunction of affine inequalities plus per-variable support bounds."""

    constraints: tuple = ()
    supports: tuple = ()  # ((var, (lo, hi)), ...)

    @property
    def support_map(self) -> dict:
        return dict(self.supports)

    def with_constraints(self, *cons: Constraint) -> "ConstraintSystem":
        return ConstraintSystem(self.constraints + tuple(cons), self.supports)

    def with_support(self, var: str, lo, hi) -> "ConstraintSystem":
        entry = (var, (Fraction(lo), Fraction(hi)))
        return ConstraintSystem(self.constraints, self.supports + (entry,))

    def all_inequalities(self) -> list:
        """The constraints together with support bounds as inequalities."""
        cons = list(self.constraints)
        for var, (lo, hi) in self.supports:
            v = AffineExpr.variable(var)
            cons.append(Constraint(v - AffineExpr.of(lo), strict=False))
            cons.append(Constraint(AffineExpr.of(hi) - v, strict=False))
        return cons

    def variables(self) -> frozenset:
        vars_: set = set()
        for c in self.constraints:
            vars_ |= c.variables()
        return frozenset(vars_)


@dataclass(frozen=True)
class DensityPiece:
    lo: Fraction
    hi: Fraction
    poly: MultiPoly


@dataclass(frozen=True)
class VarDensity:
    """A piecewise-polynomial density for one variable on a bounded support."""

    var: str
    pieces: tuple

    @property
    def support(self) -> tuple:
        return (self.pieces[0].lo, self.pieces[-1].hi)

    def total_mass(self) -> Fraction:
        total = _ZERO
        for piece in self.pieces:
            anti = piece.poly.antiderivative(self.var)
            hi = anti.substitute(self.var, AffineExpr.of(piece.hi)).eval_constant()
            lo = anti.substitute(self.var, AffineExpr.of(piece.lo)).eval_constant()
            total += hi - lo
        return total


def as_var_density(var: str, spec) -> VarDensity:
    """Coerce a (poly, (lo, hi)) pair or a VarDensity to a VarDensity."""
    if isinstance(spec, VarDensity):
        return spec
    poly, (lo, hi) = spec
    piece = DensityPiece(Fraction(lo), Fraction(hi), _as_poly(poly))
    return VarDensity(var, (piece,))


def poly_integrate(p: MultiPoly, var: str, lower, upper) -> MultiPoly:
    """Integrate p with respect to var from lower to upper (affine bounds)."""
    lower = _as_affine(lower)
    upper = _as_affine(upper)
    if var in lower.variables() or var in upper.variables():
        raise VarInBound(f"integration bound mentions {var!r}")
    anti = _as_poly(p).antiderivative(var)
    return anti.substitute(var, upper) - anti.substitute(var, lower)


def _dedupe(bounds: list) -> list:
    seen = []
    for b in bounds:
        if b not in seen:
            seen.append(b)
    return seen


def _expr_range(expr: AffineExpr, boxes: Mapping[str, tuple]) -> tuple:
    """Exact min/max of an affine expression over the support box."""
    lo = hi = expr.const
    for var, coef in expr.coeffs:
        blo, bhi = boxes[var]
        if coef > 0:
            lo += coef * blo
            hi += coef * bhi
        else:
            lo += coef * bhi
            hi += coef * blo
    return lo, hi


def _simplify_constraints(cons: list, boxes: Mapping[str, tuple]):
    """Drop constraints that hold almost everywhere on the support box and
    report None when one is violated (up to a measure-zero boundary).

    Non-constant affine expressions vanish only on hyperplanes, which carry
    no mass under continuous product densities, so <= 0 everywhere means the
    constrained region contributes nothing.
    """
    out = []
    for c in cons:
        if c.expr.is_constant:
            if not c.constant_truth():
                return None
            continue
        lo, hi = _expr_range(c.expr, boxes)
        if hi <= 0:
            return None
        if lo >= 0:
            continue
        if c not in out:
            out.append(c)
    return out


def polytope_probability(
    densities: Mapping[str, object],
    constraints,
    elimination_order: Sequence[str] | None = None,
    max_cells: int = 64,
) -> Fraction:
    """Exact mass of a constrained region under a product density.

    densities maps each variable to a VarDensity (or a ``(poly, (lo, hi))``
    pair); every density must integrate to one over its support.  The default
    elimination order is the reverse of the declaration order, so the last
    declared variable is integrated innermost.
    """
    dens = {var: as_var_density(var, spec) for var, spec in densities.items()}
    for var, d in dens.items():
        if d.total_mass() != 1:
            raise DensityNotNormalized(f"density for {var!r} has mass {d.total_mass()}")

    if isinstance(constraints, ConstraintSystem):
        cons = constraints.all_inequalities()
    else:
        cons = list(constraints)

    constrained = set()
    for c in cons:
        constrained |= c.variables()
    missing = constrained - set(dens)
    if missing:
        raise UnboundedRegion(f"no density bounds variables {sorted(missing)}")

    if elimination_order is None:
        order = list(reversed(list(dens)))
    else:
        order = list(elimination_order)
        if set(order) != set(dens):
            raise ValueError("elimination_order must cover exactly the density variables")

    boxes = {var: d.support for var, d in dens.items()}
    cells = [0]

    def eliminate(idx: int, integrand: MultiPoly, cons: list) -> Fraction:
        if not integrand:
            return _ZERO
        if idx == len(order):
            # _simplify_constraints already resolved every constant constraint
            return integrand.eval_constant()

        var = order[idx]
        relevant = [c for c in cons if var in c.variables()]
        rest = [c for c in cons if var not in c.variables()]
        if not relevant and not integrand.mentions(var):
            # unconstrained factor integrates to one
            return eliminate(idx + 1, integrand, rest)

        lowers: list[AffineExpr] = []
        uppers: list[AffineExpr] = []
        for c in relevant:
            a = c.expr.coefficient(var)
            remainder = c.expr.drop(var)
            bound = remainder * (-Fraction(1) / a)
            if a > 0:
                lowers.append(bound)  # var >= -r/a
            else:
                uppers.append(bound)  # var <= -r/a

        total = _ZERO
        for piece in dens[var].pieces:
            cand_lo = _dedupe([AffineExpr.of(piece.lo)] + lowers)
            cand_hi = _dedupe([AffineExpr.of(piece.hi)] + uppers)
            for lo in cand_lo:
                lo_side = [Constraint(lo - other) for other in cand_lo if other != lo]
                if _simplify_constraints(lo_side, boxes) is None:
                    continue
                for hi in cand_hi:
                    branch = _simplify_constraints(
                        rest
                        + lo_side
                        + [Constraint(other - hi) for other in cand_hi if other != hi]
                        + [Constraint(hi - lo)],
                        boxes,
                    )
                    if branch is None:
                        continue
                    cells[0] += 1
                    if cells[0] > max_cells:
                        raise DepthExceeded(
                            f"case splitting exceeded {max_cells} integration cells"
                        )
                    inner = poly_integrate(integrand * piece.poly, var, lo, hi)
                    total += eliminate(idx + 1, inner, branch)
        return total

    simplified = _simplify_constraints(cons, boxes)
    if simplified is None:
        return _ZERO
    return eliminate(0, MultiPoly.const(1), simplified)


def feasible(constraints: Iterable[Constraint]) -> bool:
    """Exact Fourier-Motzkin feasibility of a conjunction over the reals."""
    rows: list[tuple[dict, Fraction, bool]] = []
    for c in constraints:
        rows.append((dict(c.expr.coeffs), c.expr.const, c.strict))

    def canon(row):
        coeffs, const, strict = row
        coeffs = {v: c for v, c in coeffs.items() if c}
        if coeffs:
            scale = abs(next(iter(sorted(coeffs.items())))[1])
            coeffs = {v: c / scale for v, c in coeffs.items()}
            const = const / scale
        return (tuple(sorted(coeffs.items())), const, strict)

    variables = sorted({v for coeffs, _, _ in rows for v in coeffs if coeffs[v]})
    for var in variables:
        lowers, uppers, others = [], [], []
        for coeffs, const, strict in rows:
            a = coeffs.get(var, _ZERO)
            if not a:
                others.append((coeffs, const, strict))
                continue
            rest = {v: c for v, c in coeffs.items() if v != var}
            # a*var + rest + const >= 0  ->  var >= / <= -(rest + const)/a
            bound = ({v: -c / a for v, c in rest.items()}, -const / a, strict)
            if a > 0:
                lowers.append(bound)
            else:
                uppers.append(bound)
        new_rows = others
        for lo_c, lo_k, lo_s in lowers:
            for up_c, up_k, up_s in uppers:
                coeffs = dict(up_c)
                for v, c in lo_c.items():
                    coeffs[v] = coeffs.get(v, _ZERO) - c
                new_rows.append((coeffs, up_k - lo_k, lo_s or up_s))
        seen = set()
        rows = []
        for row in new_rows:
            key = canon(row)
            if key not in seen:
                seen.add(key)
                rows.append((dict(key[0]), key[1], key[2]))

    for coeffs, const, strict in rows:
        if any(coeffs.values()):
            continue
        if strict and not const > 0:
            return False
        if not strict and not const >= 0:
            return False
    return True


_VAR_LINE = re.compile(
    r"^var\s+(\w+)\s+density\s+(.+?)\s+on\s+\[\s*([^,\]]+)\s*,\s*([^,\]]+)\s*\]$"
)
_CONSTRAINT_LINE = re.compile(r"^constraint\s+(.+?)(<=|>=|<|>)(.+)$")
_ORDER_LINE = re.compile(r"^order\s+(.+)$")


def _parse_affine(text: str, variables: set) -> AffineExpr:
    expr = AffineExpr.of(0)
    pos = 0
    sign = _ONE
    text = text.strip()
    token = re.compile(r"\s*(?:(\+|-)|((?:\d+(?:\.\d+)?(?:/\d+)?)(?:\s*\*\s*(\w+))?|(\w+)))")
    expect_term = True
    while pos < len(text):
        m = token.match(text, pos)
        if not m:
            raise ValueError(f"bad affine expression near {text[pos:]!r}")
        pos = m.end()
        if m.group(1):
            if m.group(1) == "-":
                sign = -sign
            if not expect_term:
                expect_term = True
            continue
        if m.group(4):
            name = m.group(4)
            if name not in variables:
                raise ValueError(f"unknown variable {name!r}")
            expr = expr + AffineExpr.variable(name) * sign
        else:
            coef = parse_rational(m.group(2).split("*")[0])
            if m.group(3):
                name = m.group(3)
                if name not in variables:
                    raise ValueError(f"unknown variable {name!r}")
                expr = expr + AffineExpr.variable(name) * (sign * coef)
            else:
                expr = expr + AffineExpr.of(sign * coef)
        sign = _ONE
        expect_term = False
    return expr


def parse_integration_problem(text: str):
    """Parse the `integrate` subcommand's input format.

    Lines: ``var <name> density <poly in t> on [<lo>,<hi>]``,
    ``constraint <affine> <cmp> <affine>`` and an optional
    ``order <v1>, <v2>, ...``.  Returns (densities, constraints, order).
    """
    from .automaton import parse_polynomial  # deferred; automaton imports polyint

    densities: dict[str, VarDensity] = {}
    cons: list[Constraint] = []
    order: list[str] | None = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _VAR_LINE.match(line)
        if m:
            name, poly_text, lo, hi = m.groups()
            coeffs = parse_polynomial(poly_text)
            poly = MultiPoly.univariate(name, coeffs)
            densities[name] = as_var_density(
                name, (poly, (parse_rational(lo), parse_rational(hi)))
            )
            continue
        m = _CONSTRAINT_LINE.match(line)
        if m:
            lhs, op, rhs = m.groups()
            names = set(densities)
            cons.append(constraint(_parse_affine(lhs, names), op, _parse_affine(rhs, names)))
            continue
        m = _ORDER_LINE.match(line)
        if m:
            order = [v.strip() for v in m.group(1).split(",") if v.strip()]
            continue
        raise ValueError(f"line {ln}: cannot parse {raw.strip()!r}")
    return densities, cons, order
