import numpy as np
import pytest

from sipfw.exprs import ExprError, compile_expression


def test_arithmetic_and_precedence():
    f = compile_expression("1 + 2 * 3 - 4 / 2")
    assert f(np.zeros((3, 2)))[0] == pytest.approx(5.0)


def test_unary_minus_and_parens():
    f = compile_expression("-(x1 - 2) * (x1 + 2)")
    pts = np.array([[3.0, 0.0]])
    assert f(pts)[0] == pytest.approx(-(3.0 - 2.0) * (3.0 + 2.0))


def test_benchmark_v0_expression():
    text = "0.05 * cos(5 * pi * x1 * x1 / 18) * sin(13 * pi * x2 * x2 / 72) + 0.3"
    f = compile_expression(text)
    pts = np.array([[1.3, 2.7], [0.0, 0.0], [5.5, 4.4]])
    expected = 0.05 * np.cos(5 * np.pi * pts[:, 0] ** 2 / 18) * np.sin(13 * np.pi * pts[:, 1] ** 2 / 72) + 0.3
    assert np.abs(f(pts) - expected).max() < 1e-14


def test_max_and_abs():
    f = compile_expression("max(0.3 - abs(x1 - 3), 0)")
    pts = np.array([[3.1, 0.0], [5.0, 0.0]])
    out = f(pts)
    assert out[0] == pytest.approx(0.2)
    assert out[1] == 0.0


def test_exp_and_constants():
    f = compile_expression("exp(-x1) + pi")
    assert f(np.array([[0.0, 0.0]]))[0] == pytest.approx(1.0 + np.pi)


def test_constant_broadcasts():
    f = compile_expression("2.5")
    assert f(np.zeros((7, 3))).shape == (7,)


def test_scientific_notation():
    f = compile_expression("1.5e-3 * x1")
    assert f(np.array([[2.0, 0.0]]))[0] == pytest.approx(3e-3)


@pytest.mark.parametrize(
    "bad",
    ["x4", "foo(x1)", "max(x1)", "1 +", "(x1", "x1 @ 2", "cos x1", ""],
)
def test_malformed_expressions(bad):
    with pytest.raises(ExprError):
        compile_expression(bad)


def test_missing_coordinate_flagged_at_eval():
    f = compile_expression("x3 + 1")
    with pytest.raises(ExprError):
        f(np.zeros((4, 2)))
