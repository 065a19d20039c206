import random
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest

from samc.automaton import density
from samc.polyint import (
    AffineExpr,
    ConstraintSystem,
    DensityNotNormalized,
    DepthExceeded,
    MultiPoly,
    UnboundedRegion,
    VarInBound,
    constraint,
    feasible,
    parse_integration_problem,
    poly_integrate,
    polytope_probability,
)

from _models import random_linear_cdf

var = AffineExpr.variable
num = AffineExpr.of

PX = MultiPoly.univariate("x0", [2, -2])
PY = MultiPoly.univariate("y0", [0, 2])
PZ = MultiPoly.univariate("z1", [1])
BOX = (0, 1)


def two_clock():
    return {"x0": (PX, BOX), "y0": (PY, BOX)}


def three_clock():
    return {"x0": (PX, BOX), "y0": (PY, BOX), "z1": (PZ, BOX)}


def test_poly_integrate_power_rule():
    result = poly_integrate(MultiPoly.univariate("y", [0, 2]), "y", num(0), var("x"))
    assert result == MultiPoly.univariate("x", [0, 0, 1])


def test_poly_integrate_upper_constant():
    result = poly_integrate(MultiPoly.univariate("y", [0, 2]), "y", var("x"), num(1))
    assert result == MultiPoly.univariate("x", [1, 0, -1])


def test_poly_integrate_closed_form():
    integrand = MultiPoly.univariate("x", [2, -2]) * MultiPoly.univariate("x", [0, 0, 1])
    value = poly_integrate(integrand, "x", num(0), num(1)).eval_constant()
    assert value == Fraction(1, 6)


def test_poly_integrate_rejects_var_in_bound():
    with pytest.raises(VarInBound):
        poly_integrate(MultiPoly.variable("x"), "x", num(0), var("x"))


def test_first_race_probability():
    mass = polytope_probability(two_clock(), [constraint(var("y0"), "<", var("x0"))])
    assert mass == Fraction(1, 6)


def test_complement_race_probability():
    mass = polytope_probability(two_clock(), [constraint(var("x0"), "<", var("y0"))])
    assert mass == Fraction(5, 6)


def test_three_variable_region():
    cons = [
        constraint(var("x0"), "<", var("y0")),
        constraint(var("x0") + var("z1"), "<", num(1)),
    ]
    assert polytope_probability(three_clock(), cons) == Fraction(3, 5)


def test_three_variable_complement_region():
    cons = [
        constraint(var("x0"), "<", var("y0")),
        constraint(var("x0") + var("z1"), ">=", num(1)),
    ]
    assert polytope_probability(three_clock(), cons) == Fraction(7, 30)


def test_empty_constraint_system_is_one():
    assert polytope_probability(three_clock(), []) == 1


def test_complementary_regions_partition_mass():
    lt = polytope_probability(two_clock(), [constraint(var("y0"), "<", var("x0"))])
    gt = polytope_probability(two_clock(), [constraint(var("x0"), "<", var("y0"))])
    assert lt + gt == 1


def test_elimination_order_invariance():
    cons = [
        constraint(var("x0"), "<", var("y0")),
        constraint(var("x0") + var("z1"), "<", num(1)),
    ]
    for order in permutations(["x0", "y0", "z1"]):
        assert polytope_probability(three_clock(), cons, elimination_order=list(order)) == Fraction(3, 5)


def test_order_invariance_on_random_linear_densities():
    rng = random.Random(11)
    for _ in range(10):
        dists = {name: random_linear_cdf(rng) for name in ("u", "v")}
        densities = {name: density(d, name) for name, d in dists.items()}
        cons = [constraint(var("u"), "<", var("v"))]
        forward = polytope_probability(densities, cons, elimination_order=["u", "v"])
        backward = polytope_probability(densities, cons, elimination_order=["v", "u"])
        assert forward == backward
        complement = polytope_probability(densities, [constraint(var("v"), "<", var("u"))])
        assert forward + complement == 1


def test_constraint_system_supports_act_as_bounds():
    system = ConstraintSystem().with_support("x0", Fraction(1, 2), 1)
    assert polytope_probability(two_clock(), system) == Fraction(1, 4)  # 1 - F_x(1/2)


def test_piecewise_density_splits():
    # CDF rises to 1/4 by 1/2, then to 1 by 1: P(w < 1/2) must be exactly 1/4.
    from samc.automaton import CdfPiece, Distribution

    dist = Distribution(
        (
            CdfPiece(Fraction(0), Fraction(1, 2), (Fraction(0), Fraction(1, 2))),
            CdfPiece(Fraction(1, 2), Fraction(1), (Fraction(-1, 2), Fraction(3, 2))),
        )
    )
    densities = {"w": density(dist, "w")}
    assert polytope_probability(densities, [constraint(var("w"), "<", num(Fraction(1, 2)))]) == Fraction(1, 4)


def test_unbounded_region_rejected():
    with pytest.raises(UnboundedRegion):
        polytope_probability(two_clock(), [constraint(var("w"), "<", num(1))])


def test_depth_limit_enforced():
    cons = [
        constraint(var("x0"), "<", var("y0")),
        constraint(var("x0") + var("z1"), "<", num(1)),
    ]
    with pytest.raises(DepthExceeded):
        polytope_probability(three_clock(), cons, max_cells=1)


def test_density_normalization_checked():
    half = {"x0": (MultiPoly.univariate("x0", [1, -1]), BOX)}  # mass 1/2
    with pytest.raises(DensityNotNormalized):
        polytope_probability(half, [])


def test_monte_carlo_agreement():
    cons = [
        constraint(var("x0"), "<", var("y0")),
        constraint(var("x0") + var("z1"), "<", num(1)),
    ]
    exact = float(polytope_probability(three_clock(), cons))
    rng = np.random.default_rng(2024)
    n = 1_000_000
    x = 1 - np.sqrt(rng.random(n))  # inverse CDF of 2 - 2t
    y = np.sqrt(rng.random(n))  # inverse CDF of t^2
    z = rng.random(n)
    estimate = np.mean((x < y) & (x + z < 1))
    assert abs(exact - estimate) < 5e-3


def test_feasibility():
    assert feasible([constraint(var("a"), "<", var("b")), constraint(var("b"), "<", num(1))])
    assert not feasible(
        [
            constraint(var("a"), "<", var("b")),
            constraint(var("b"), "<", var("a")),
        ]
    )
    assert not feasible([constraint(num(1), "<", num(0))])
    assert feasible([])
    # strictness matters: a < b and b <= a is empty, a <= b and b <= a is not
    assert not feasible([constraint(var("a"), "<", var("b")), constraint(var("b"), "<=", var("a"))])
    assert feasible([constraint(var("a"), "<=", var("b")), constraint(var("b"), "<=", var("a"))])


def test_parse_integration_problem_round_trip():
    text = """
    # toy problem
    var x0 density 2 - 2*t on [0,1]
    var y0 density 2*t on [0,1]
    constraint x0 < y0
    order y0, x0
    """
    densities, cons, order = parse_integration_problem(text)
    assert set(densities) == {"x0", "y0"}
    assert order == ["y0", "x0"]
    assert polytope_probability(densities, cons, elimination_order=order) == Fraction(5, 6)


def test_parse_integration_problem_rejects_unknown_vars():
    with pytest.raises(ValueError):
        parse_integration_problem("constraint q < 1")
