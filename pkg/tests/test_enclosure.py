import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hovar.enclosure import c0_enclosure, c1_enclosure, first_order_enclosure_test, rough_enclosure
from hovar.errors import EnclosureFailure
from hovar.interval import Interval, imatrix, ivector
from hovar.vectorfield import VectorField, c0_jet, default_ic, system

from oracles import LD, exp_mp, reference

ZERO = VectorField("var x y\nx' = 0\ny' = 0")
EXP = VectorField("var x\nx' = x")


def test_constant_flow():
    x = ivector([(1, 2), (-1, 0)])
    enc = rough_enclosure(ZERO, x, 0.5, 5)
    assert enc.h == 0.5
    assert enc.ytilde.contains(x) and enc.epsilon.contains(np.zeros(2))
    assert enc.vtilde.contains(np.eye(2)) and enc.E.contains(np.zeros((2, 2)))


def test_exponential_state_and_variational():
    enc = rough_enclosure(EXP, ivector([1.0]), 0.1, 5)
    assert enc.h == 0.1
    e = exp_mp(0.1)
    assert enc.ytilde.lo[0] <= 1 and e <= enc.ytilde.hi[0]
    assert enc.vtilde.lo[0, 0] <= 1 and e <= enc.vtilde.hi[0, 0]


def test_step_shrinks_when_too_long():
    # x' = x^2 from 1 blows up at t = 1
    F = VectorField("var x\nx' = x^2")
    enc = c0_enclosure(F, ivector([1.0]), 2.0, 6)
    assert enc.h < 1.0
    # 1/(1 - t) on [0, h] is inside the candidate
    assert enc.ytilde.hi[0] >= 1.0 / (1.0 - enc.h)


def test_shrink_ratio_near_one_when_accepted():
    F = system("lorenz")
    x = default_ic("lorenz")
    m = 10
    enc = c0_enclosure(F, x, 0.02, m)
    coef = c0_jet(F, enc.ytilde, m + 1).coeff(m + 1)
    ratio = (np.max(enc.epsilon.mag) / (np.max(coef.mag) * enc.h ** (m + 1))) ** (1 / (m + 1))
    assert 0.9 <= ratio <= 1.2


def test_c1_reuses_c0_step():
    F = system("henon_heiles")
    x = default_ic("henon_heiles")
    enc0 = c0_enclosure(F, x, 0.1, 8, variational=True)
    enc1 = c1_enclosure(F, x, enc0, 8)
    assert enc1.h <= enc0.h and enc1.ytilde.subset(enc0.ytilde)
    assert enc1.vtilde.contains(np.eye(4))


def test_failure_below_minimum_step():
    F = VectorField("var x\nx' = x^2")
    with pytest.raises(EnclosureFailure):
        c0_enclosure(F, ivector([(1.0, 1e6)]), 1.0, 4, h_min=1e-3)


def test_first_order_test_examples():
    assert first_order_enclosure_test(ZERO, ivector([(0, 1), (0, 1)]), imatrix([[(0.5, 1.5), (-1, 1)], [(-1, 1), (1, 1)]]), 1.0)
    y = ivector([(0.9, 1.2)])
    # Id + [0, 0.1] [0.9, 1.2] = [1, 1.12]
    assert first_order_enclosure_test(EXP, y, imatrix([[(0.9, 1.2)]]), 0.1)
    assert not first_order_enclosure_test(EXP, y, imatrix([[(0.9, 1.05)]]), 0.1)
    assert first_order_enclosure_test(EXP, y, imatrix([[(0.9, 1.5)]]), 0.1)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["lorenz", "henon_heiles", "pcr3bp", "rossler"]), st.integers(0, 2**31), st.floats(1e-3, 0.05))
def test_enclosure_contains_sampled_trajectories(name, seed, h):
    F = system(name)
    c = default_ic(name).mid
    r = 1e-3 * (1 + np.abs(c))
    x = Interval(c - r, c + r)
    enc = rough_enclosure(F, x, h, 8, variational=False)
    ref = reference(name)
    rng = np.random.default_rng(seed)
    pts = (c[:, None] + r[:, None] * rng.uniform(-1, 1, (len(c), 8))).astype(LD)
    for t in np.linspace(0, enc.h, 5)[1:]:
        y = ref.flow(pts, t, substeps=2).astype(float)
        assert np.all(enc.ytilde.lo[:, None] <= y) and np.all(y <= enc.ytilde.hi[:, None])
