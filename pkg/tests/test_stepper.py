import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hovar.enclosure import rough_enclosure
from hovar.interval import Interval, ivector
from hovar.stepper import (
    Integrator,
    MethodOrder,
    StepConfig,
    corrector,
    cost_model,
    ho_coefficient,
    predict_step,
    predictor,
    psi_operator,
    step_ratio_g,
)
from hovar.vectorfield import VectorField, c0_jet, default_ic, system

from oracles import exp_mp, ho_coefficient_oracle, pade_exp


def linear(lam) -> VectorField:
    return VectorField(f"var x\nx' = {lam}*x")


def exact_in(x: Interval, value) -> bool:
    v = Fraction(str(value)) if not isinstance(value, (int, Fraction)) else Fraction(value)
    return Fraction(float(np.ravel(x.lo)[0])) <= v <= Fraction(float(np.ravel(x.hi)[0]))


# --- coefficients and operators --------------------------------------------------


def test_ho_coefficient_examples():
    assert ho_coefficient(3, 4, 0) == 1
    assert ho_coefficient(1, 1, 1) == Fraction(1, 2)
    assert ho_coefficient(10, 10, 10) == Fraction(1, 184756)
    assert abs(float(ho_coefficient(10, 10, 10)) - 5.4e-6) < 0.05e-6


@given(st.integers(1, 15), st.integers(1, 15), st.data())
def test_ho_coefficient_matches_factorial_form(q, p, data):
    i = data.draw(st.integers(0, q))
    assert ho_coefficient(q, p, i) == ho_coefficient_oracle(q, p, i)


def test_psi_operator_examples():
    jet = c0_jet(linear(1), ivector([1.0]), 3)
    h = 0.25
    assert psi_operator(jet, h, 1, 1).contains(1 + h / 2)
    assert psi_operator(jet, 0.0, 3, 2).contains(1.0) and psi_operator(jet, 0.0, 3, 2).is_point()


@pytest.mark.parametrize("p,q", [(1, 1), (2, 1), (2, 2), (3, 2), (5, 5)])
@pytest.mark.parametrize("z", [0.1, -0.3, 0.5])
def test_psi_ratio_is_pade(p, q, z):
    jet = c0_jet(linear(1), ivector([1.0]), max(p, q))
    num = psi_operator(jet, z, p, q)
    den = psi_operator(jet, -z, q, p)
    R = pade_exp(p, q, Fraction(z))
    assert exact_in(num / den, R)


def test_predict_step_examples():
    jet = c0_jet(linear(1), ivector([1.0]), 6)
    h_lo, h_ho = predict_step(jet, 1e-10, 5)
    assert math.isclose(h_lo, (1e-10 * 720) ** (1 / 6), rel_tol=1e-12)
    assert math.isclose(h_ho / h_lo, step_ratio_g(5), rel_tol=1e-12)
    h2, _ = predict_step(jet, 1e-10 * 2**6, 5)
    assert math.isclose(h2, 2 * h_lo, rel_tol=1e-12)


def test_step_ratio_examples():
    assert step_ratio_g(1) == 1
    assert math.isclose(step_ratio_g(6), 20 ** (1 / 7))
    assert 1.53 <= step_ratio_g(6) <= 1.54
    assert 1.73 <= step_ratio_g(16) <= 1.75
    g = [step_ratio_g(m) for m in range(1, 41)]
    assert all(v < 2 for v in g) and all(b > a for a, b in zip(g, g[1:]))


def test_cost_model_examples():
    c_lo, c_ho, _ = cost_model(1, 2, 0.0)
    assert (c_lo, c_ho) == (17, 23)
    _, _, r = cost_model(10**4, 7, 0.0)
    assert abs(r - 23 / 17) < 1e-3
    # c_f = n^2: the n -> oo limit at fixed m has 32m in the denominator
    # (the printed 3m drops a digit); both forms tend to 9/8 as m grows
    n = 10**6
    for m in (4, 10, 20):
        _, _, r = cost_model(n, m, float(n * n))
        assert math.isclose(r, (9 * m * m + 38 * m + 132) / (8 * m * m + 32 * m + 100), rel_tol=1e-5)
    _, _, r = cost_model(n, 10**4, float(n * n))
    assert math.isclose(r, 9 / 8, rel_tol=1e-3)


def test_method_order_split():
    assert MethodOrder.split(7) == MethodOrder(7, 4, 3)
    assert MethodOrder.split(6, q=2) == MethodOrder(6, 4, 2)
    with pytest.raises(ValueError):
        MethodOrder(5, 2, 2)
    with pytest.raises(ValueError):
        StepConfig(order=4, p=1, q=2)
    with pytest.raises(ValueError):
        StepConfig(step=None, tol=None)


# --- predictor and corrector -------------------------------------------------------


def test_predictor_constant_field():
    F = VectorField("var x y\nx' = 0\ny' = 0")
    x = ivector([(0, 1), (2, 3)])
    enc = rough_enclosure(F, x, 0.3, 4)
    pred = predictor(F, x, enc, 4)
    assert pred.x_next0.contains(x) and pred.r0.contains(np.zeros(2))
    assert pred.V0.contains(np.eye(2)) and pred.R0.contains(np.zeros((2, 2)))


@pytest.mark.parametrize("lam", [1, -2])
def test_predictor_linear_point(lam):
    F = linear(lam)
    m, h = 6, 0.1
    enc = rough_enclosure(F, ivector([1.0]), h, m)
    pred = predictor(F, ivector([1.0]), enc, m)
    assert pred.x_next0.contains(sum((lam * h) ** i / math.factorial(i) for i in range(m + 1)))
    assert pred.x_next0.lo[0] <= exp_mp(lam * h) <= pred.x_next0.hi[0]


def test_predictor_mean_value_sharpening():
    F = system("lorenz")
    x = ivector([(-0.1, 0.1)] * 3)
    enc = rough_enclosure(F, x, 0.01, 8)
    pred = predictor(F, x, enc, 8)
    assert np.all(pred.x_next0.width <= (pred.y + pred.r0).width)


def test_corrector_inside_predictor():
    F = system("lorenz")
    x = default_ic("lorenz")
    enc = rough_enclosure(F, x, 0.02, 10)
    pred = predictor(F, x, enc, 10)
    corr = corrector(F, x, pred, 5, 5)
    assert corr.x_next.subset(pred.x_next0) and corr.V.subset(pred.V0)


def test_corrector_exponential_against_pade():
    F = linear(1)
    x = ivector([1.0])
    enc = rough_enclosure(F, x, 0.1, 2)
    pred = predictor(F, x, enc, 2)
    corr = corrector(F, x, pred, 1, 1)
    assert corr.x_next.lo[0] <= exp_mp(0.1) <= corr.x_next.hi[0]
    pade = 1.05 / 0.95
    assert abs(float(corr.x_next.mid[0]) - pade) <= float(corr.tail.width[0])


def test_corrector_constant_field():
    F = VectorField("var x\nx' = 0")
    x = ivector([(1, 2)])
    enc = rough_enclosure(F, x, 0.5, 2)
    pred = predictor(F, x, enc, 2)
    corr = corrector(F, x, pred, 1, 1)
    assert corr.transfer.contains(np.eye(1)) and corr.tail.contains(np.zeros(1))
    assert corr.x_next.contains(x) and corr.V.contains(np.eye(1))


# --- advance and the integrator -------------------------------------------------


def test_first_step_from_identity():
    integ = Integrator(system("henon_heiles"), default_ic("henon_heiles"), order=10, step=0.1)
    res = integ.step()
    assert integ.matrix().subset(res.predictor.V0)
    assert res.corrected


def test_lohner_mode_is_the_predictor():
    F = system("lorenz")
    x = default_ic("lorenz")
    integ = Integrator(F, x, order=8, algorithm="lohner", step=0.01)
    res = integ.step()
    enc = rough_enclosure(F, x, 0.01, 8)
    pred = predictor(F, x, enc, 8)
    assert not res.corrected
    assert np.array_equal(res.x_next.lo, pred.x_next0.lo) and np.array_equal(res.x_next.hi, pred.x_next0.hi)
    assert np.array_equal(res.V.lo, pred.V0.lo) and np.array_equal(res.V.hi, pred.V0.hi)


@pytest.mark.parametrize("alg", ["ho", "lohner"])
def test_two_steps_compose(alg):
    lam = -1.5
    integ = Integrator(linear(lam), ivector([1.0]), order=8, algorithm=alg, step=0.1)
    h1 = integ.step().h
    h2 = integ.step(h=0.05).h
    e = exp_mp(lam * (h1 + h2))
    assert integ.matrix().lo[0, 0] <= e <= integ.matrix().hi[0, 0]
    assert integ.box().lo[0] <= e <= integ.box().hi[0]


def test_advance_to_lands_on_time():
    integ = Integrator(system("lorenz"), default_ic("lorenz"), order=12)
    integ.advance_to(0.37)
    assert integ.time.contains(0.37) or abs(integ.t - 0.37) < 1e-14


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["lorenz", "henon_heiles", "pcr3bp", "rossler"]), st.integers(4, 16), st.floats(0.005, 0.05))
def test_structural_inclusion_property(name, m, h):
    integ = Integrator(system(name), default_ic(name), order=m, step=h)
    for _ in range(5):
        res = integ.step()
        if res.corrected:
            assert res.x_next.subset(res.predictor.x_next0)
            assert res.V.subset(res.predictor.V0)
