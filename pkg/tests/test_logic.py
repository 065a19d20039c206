from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from samc.logic import (
    And,
    Atom,
    Box,
    Diamond,
    EngineOptions,
    FalseFormula,
    Implies,
    NestedUntil,
    Not,
    Or,
    ParseError,
    TrueFormula,
    UnknownProposition,
    UnsupportedTimeBound,
    Until,
    check,
    compare_probability,
    desugar,
    eval_state_formula,
    interval_passes,
    interval_refutes,
    parse_formula,
    pretty,
)


def test_parse_bounded_until_formula():
    f = parse_formula("[ (phi0 | phi1) U{<1} phi2 ] >= 9/10")
    assert isinstance(f, Until)
    # the disjunction desugars through De Morgan
    assert f.left == Not(And(Not(Atom("phi0")), Not(Atom("phi1"))))
    assert f.right == Atom("phi2")
    assert (f.time_cmp, f.time_bound) == ("<", Fraction(1))
    assert (f.prob_cmp, f.prob_bound) == (">=", Fraction(9, 10))


def test_parse_trivia():
    assert parse_formula("tt") == TrueFormula()
    assert parse_formula("ff") == Not(TrueFormula())
    assert parse_formula("!a") == Not(Atom("a"))
    assert parse_formula("a & b & c") == And(And(Atom("a"), Atom("b")), Atom("c"))


def test_nested_until_rejected():
    with pytest.raises(NestedUntil):
        parse_formula("[ [a U{<1} b] > 0 U{<2} c ] > 0")


def test_parse_error_has_position():
    with pytest.raises(ParseError) as err:
        parse_formula("a &")
    assert err.value.position == 3
    with pytest.raises(ParseError):
        parse_formula("[ a U{<1} b ] >= 2")  # probability bound out of range


def test_desugar_diamond():
    f = parse_formula("<>{<=5} a > 1/2")
    assert f == Until(TrueFormula(), Atom("a"), "<=", Fraction(5), ">", Fraction(1, 2))


def test_desugar_implies():
    f = parse_formula("a => b")
    assert f == Not(And(Not(Not(Atom("a"))), Not(Atom("b"))))


def test_desugar_box_flips_comparison():
    f = parse_formula("[]{<=5} a >= 9/10")
    assert f == Until(TrueFormula(), Not(Atom("a")), "<=", Fraction(5), "<=", Fraction(1, 10))


def test_desugar_quantified_forms():
    assert parse_formula("A[ a U{<1} b ]") == Until(
        Atom("a"), Atom("b"), "<", Fraction(1), ">=", Fraction(1)
    )
    assert parse_formula("E[ a U{<1} b ]") == Until(
        Atom("a"), Atom("b"), "<", Fraction(1), ">", Fraction(0)
    )


_leaf = st.sampled_from(
    [TrueFormula(), FalseFormula(), Atom("a"), Atom("b"), Atom("c")]
)
# state formulae: propositional only (the grammar keeps untils out of these)
_state = st.recursive(
    _leaf,
    lambda sub: st.one_of(
        st.builds(Not, sub),
        st.builds(And, sub, sub),
        st.builds(Or, sub, sub),
        st.builds(Implies, sub, sub),
    ),
    max_leaves=6,
)
_temporal = st.one_of(
    st.builds(
        Diamond,
        st.just("<="),
        st.just(Fraction(2)),
        _state,
        st.sampled_from(["<", "<=", ">", ">="]),
        st.just(Fraction(1, 2)),
    ),
    st.builds(
        Box,
        st.just("<"),
        st.just(Fraction(3)),
        _state,
        st.sampled_from(["<", "<=", ">", ">="]),
        st.just(Fraction(1, 4)),
    ),
)
_formulas = st.recursive(
    st.one_of(_leaf, _temporal),
    lambda sub: st.one_of(
        st.builds(Not, sub),
        st.builds(And, sub, sub),
        st.builds(Or, sub, sub),
        st.builds(Implies, sub, sub),
    ),
    max_leaves=8,
)


@given(_formulas)
@settings(max_examples=120, deadline=None)
def test_desugar_idempotent(formula):
    once = desugar(formula)
    assert desugar(once) == once


@given(_formulas)
@settings(max_examples=120, deadline=None)
def test_pretty_round_trip(formula):
    core = desugar(formula)
    assert parse_formula(pretty(core)) == core


def test_eval_state_formula(packet):
    assert eval_state_formula(Atom("phi2"), "s2", packet)
    assert eval_state_formula(parse_formula("!ff"), "s0", packet)
    assert not eval_state_formula(And(Atom("phi0"), Atom("phi1")), "s0", packet)
    assert eval_state_formula(parse_formula("phi0 | phi1"), "s1", packet)


def test_unknown_atoms(packet):
    with pytest.warns(UserWarning):
        assert not eval_state_formula(Atom("nope"), "s0", packet)
    with pytest.raises(UnknownProposition):
        eval_state_formula(Atom("nope"), "s0", packet, strict=True)


def test_comparator_helpers():
    assert compare_probability(Fraction(1, 2), ">=", Fraction(1, 2))
    assert not compare_probability(Fraction(1, 2), ">", Fraction(1, 2))
    assert interval_passes(Fraction(1, 6), Fraction(1), ">", 0)
    assert interval_refutes(Fraction(0), Fraction(23, 30), ">=", Fraction(9, 10))
    assert not interval_passes(Fraction(0), Fraction(1), ">", Fraction(1, 2))


def test_check_region_verdict(packet, benevolent):
    f = parse_formula("[ (phi0 | phi1) U{<1} phi2 ] >= 9/10")
    result = check(packet, benevolent, f, EngineOptions(engine="region", max_depth=4))
    assert result.verdict == "false"
    assert result.leaves[0].verdict == "false"


def test_check_matrix_verdict(packet_shifted, benevolent):
    f = parse_formula("[ (a0 | a1) U{<=3/2} a2 ] > 1/2")
    result = check(packet_shifted, benevolent, f, EngineOptions(engine="matrix", delta=Fraction(1, 2)))
    assert result.verdict == "false"


def test_check_tautology_with_definite_leaf(packet, benevolent):
    f = parse_formula("[ (phi0|phi1) U{<1} phi2 ] >= 9/10 | ![ (phi0|phi1) U{<1} phi2 ] >= 9/10")
    result = check(packet, benevolent, f, EngineOptions(engine="region", max_depth=4))
    assert result.verdict == "true"


def test_check_undecided_propagation(packet, benevolent):
    f = parse_formula("[ (phi0|phi1) U{<1} phi2 ] >= 1/2")
    options = EngineOptions(engine="region", max_depth=0)
    assert check(packet, benevolent, f, options).verdict == "undecided"
    # an undecided leaf under a conjunction with ff is still decided
    g = parse_formula("([ (phi0|phi1) U{<1} phi2 ] >= 1/2) & ff")
    assert check(packet, benevolent, g, options).verdict == "false"


def test_check_montecarlo_engine(packet_shifted, benevolent):
    f = parse_formula("[ (a0 | a1) U{<=3/2} a2 ] > 1/2")
    options = EngineOptions(engine="montecarlo", samples=4000, seed=9)
    result = check(packet_shifted, benevolent, f, options)
    assert result.verdict == "false"  # estimate near 1/6 is far below 1/2


def test_ground_evaluation_monotone_in_leaf_verdicts(packet):
    from samc.logic import _three_valued

    rng = __import__("random").Random(31)
    leaves = [
        Until(TrueFormula(), Atom(name), "<=", Fraction(1), ">", Fraction(1, 2))
        for name in ("phi0", "phi1", "phi2")
    ]
    options = EngineOptions()

    def build(depth, parity, parities):
        kind = rng.randrange(4) if depth else rng.randrange(2)
        if kind == 0:
            return TrueFormula()
        if kind == 1:
            leaf = rng.choice(leaves)
            parities.setdefault(leaf, set()).add(parity)
            return leaf
        if kind == 2:
            return Not(build(depth - 1, 1 - parity, parities))
        return And(build(depth - 1, parity, parities), build(depth - 1, parity, parities))

    for _ in range(300):
        parities: dict = {}
        tree = build(4, 0, parities)
        flip = rng.choice(leaves)
        if parities.get(flip) != {0}:
            continue  # only flip leaves that occur purely under even negations
        verdicts = {leaf: rng.choice(["true", "false"]) for leaf in leaves}
        verdicts[flip] = "false"
        before = _three_valued(tree, verdicts, packet, options)
        verdicts[flip] = "true"
        after = _three_valued(tree, verdicts, packet, options)
        if before is True:
            assert after is True


def test_unsupported_time_bound(packet, benevolent):
    f = parse_formula("[ a0 U{>=1} a2 ] > 1/2")
    with pytest.raises(UnsupportedTimeBound):
        check(packet, benevolent, f, EngineOptions(engine="region"))


def test_matrix_engine_requires_delta(packet_shifted, benevolent):
    f = parse_formula("[ (a0|a1) U{<=3/2} a2 ] > 1/2")
    with pytest.raises(ValueError):
        check(packet_shifted, benevolent, f, EngineOptions(engine="matrix", delta=None))
