from fractions import Fraction

import pytest

from fairflow import MM1, Affine, Constant, DomainError, Polynomial, ValidationError, eval_latency, eval_marginal
from fairflow.latency import latency_from_params, rational


def test_polynomial_value_derivative_integral_exact():
    f = Polynomial((Fraction(1), Fraction(0), Fraction(3)))  # 1 + 3x^2
    x = Fraction(1, 2)
    assert f.value(x) == Fraction(7, 4)
    assert f.derivative(x) == 3
    assert f.integral(x) == Fraction(1, 2) + Fraction(1, 8)
    assert f.marginal(x) == Fraction(7, 4) + x * 3
    assert f.degree == 2
    assert f.is_exact


def test_trailing_zero_coefficients_do_not_raise_degree():
    assert Polynomial((1, 2, 0, 0)).degree == 1


def test_affine_and_constant():
    a = Affine(2, 1)
    assert a.value(3) == 7 and a.derivative(3) == 2 and a.integral(2) == 6
    assert a.marginal(3) == 13
    c = Constant(Fraction(5, 2))
    assert c.value(100) == Fraction(5, 2) and c.marginal(7) == Fraction(5, 2)
    assert c.integral(2) == 5
    assert Affine(0, 3).degree == 0


def test_mm1_values_and_pole():
    f = MM1(4)
    assert f.value(Fraction(2)) == Fraction(1, 2)
    assert f.derivative(Fraction(2)) == Fraction(1, 4)
    assert f.marginal(Fraction(2)) == 1  # u / (u - x)^2
    assert f.integral(2.0) == pytest.approx(0.6931471805599453)
    with pytest.raises(DomainError):
        f.value(4)
    with pytest.raises(DomainError):
        f.value(5)


def test_negative_load_and_bad_parameters_rejected():
    with pytest.raises(DomainError):
        Affine(1, 0).value(-1)
    with pytest.raises(ValidationError):
        Affine(-1, 0)
    with pytest.raises(ValidationError):
        Polynomial(())
    with pytest.raises(ValidationError):
        MM1(0)
    with pytest.raises(ValidationError):
        Constant(float("inf"))


def test_to_float_keeps_values():
    f = Polynomial((Fraction(1, 3), Fraction(2, 7)))
    g = f.to_float()
    assert not g.is_exact
    assert g.value(0.5) == pytest.approx(float(f.value(Fraction(1, 2))))


def test_params_round_trip():
    for f in (Polynomial((1, 0, 2)), Affine(1, 2), Constant(3), MM1(5)):
        assert latency_from_params(f.kind, f.params()) == f


def test_eval_helpers():
    assert eval_latency(Affine(1, 1), 2) == 3
    assert eval_marginal(Affine(1, 1), 2) == 5


def test_rational_conversion():
    assert rational("3/4") == Fraction(3, 4)
    assert rational(0.5) == Fraction(1, 2)
    assert rational(2) == 2
