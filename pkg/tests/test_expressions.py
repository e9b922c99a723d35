import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pauli_lab.harness.expressions import (
    ExpressionError,
    evaluate,
    parse,
    parse_field_expression,
    pretty,
    roundtrip_ok,
    strip_ws,
    variables_of,
)

from exproracle import eval_points, oracle, random_expression, same


def test_constant_everywhere():
    f = parse_field_expression("2", "constant")
    np.testing.assert_array_equal(f(x1=np.zeros(3)), [2.0, 2.0, 2.0])


def test_radial_polynomial():
    assert parse_field_expression("1 + r^2", "radial").radial(2.0) == 5.0


def test_planar_gaussian():
    f = parse_field_expression("exp(-(x1^2+x2^2))+0.1", "expression")
    assert f.planar(0.0, 0.0) == pytest.approx(1.1)


@pytest.mark.parametrize(
    "src, value",
    [
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("2*3^2", 18.0),
        ("2^-1", 0.5),
        ("8/4/2", 1.0),
        ("1-2-3", -4.0),
        ("--3", 3.0),
        ("2*pi", 2 * math.pi),
        ("(1+2)*3", 9.0),
        ("sqrt(16) + log(1)", 4.0),
        ("1.5e1 + .5", 15.5),
    ],
)
def test_precedence(src, value):
    assert evaluate(parse(src), {}) == pytest.approx(value)


@pytest.mark.parametrize(
    "src, pos, fragment",
    [
        ("1 + ", 3, "unexpected end of input"),
        ("2 * (3 + 4", 10, "expected ')'"),
        ("3 $ 4", 2, "unexpected character"),
        ("1 + x3", 4, "unknown identifier 'x3'"),
        ("expp(r)", 0, "did you mean 'exp'"),
        ("exp + 1", 0, "needs an argument"),
        ("1 2", 2, "unexpected '2'"),
        (")", 0, "unexpected ')'"),
    ],
)
def test_errors_carry_positions(src, pos, fragment):
    with pytest.raises(ExpressionError) as exc:
        parse(src, ("x1", "x2", "r"))
    assert exc.value.position == pos
    assert fragment in str(exc.value)


def test_identifier_suggestion():
    with pytest.raises(ExpressionError, match="did you mean 'x1'"):
        parse_field_expression("x11 + 1", "expression")


def test_variables_restricted_by_kind():
    with pytest.raises(ExpressionError):
        parse_field_expression("x1 + 1", "radial")
    with pytest.raises(ExpressionError):
        parse_field_expression("r", "constant")
    assert variables_of(parse("x1 * r + pi")) == {"x1", "r"}


def test_empty_rejected():
    with pytest.raises(ExpressionError):
        parse_field_expression("   ", "expression")


def test_vectorised_evaluation():
    f = parse_field_expression("1 + 0.5*cos(x1)", "expression")
    x = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(f.planar(x, 0 * x), 1 + 0.5 * np.cos(x))


def test_oracle_self_check():
    assert oracle("2^3^2") == 512
    assert oracle("-2^2") == -4
    assert oracle("2^-1 * 4") == 2
    assert oracle("x1 - -x2", x1=1.0, x2=2.0) == 3


CORPUS = [random_expression(np.random.default_rng(1000 + i)) for i in range(100)]


def test_corpus_is_varied():
    assert len(set(CORPUS)) >= 90
    assert sum("^" in s for s in CORPUS) >= 10
    assert sum("(" in s for s in CORPUS) >= 30


@pytest.mark.parametrize("src", CORPUS)
def test_agrees_with_shunting_yard_oracle(src):
    node = parse(src)
    for env in eval_points(3, seed=hash(src) % 1000):
        with np.errstate(all="ignore"):
            ours = float(evaluate(node, env))
        assert same(ours, oracle(src, **env)), (src, env)


@pytest.mark.parametrize("src", CORPUS[:50])
def test_pretty_print_round_trip(src):
    ok, out = roundtrip_ok(src)
    assert ok, (src, out)
    assert strip_ws(pretty(out)) == strip_ws(out)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_round_trip_random_seeds(seed):
    src = random_expression(np.random.default_rng(seed), depth=2)
    assert roundtrip_ok(src)[0]
