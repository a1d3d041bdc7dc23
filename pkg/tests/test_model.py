import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopfuq.exceptions import DomainError
from hopfuq.model import (FastSlowSystem, ModifiedExp, NormalForm, PolynomialReal, check_assumptions,
                          eigenvalues_at, eval_fast)

GRID = np.linspace(-2, 2, 41)


def test_eval_fast_origin_is_equilibrium_without_perturbation():
    sys_ = FastSlowSystem(NormalForm(1.0), delta=0.0, eps=0.01)
    assert np.array_equal(eval_fast(sys_, (0.0, 0.0), -0.5), [0.0, 0.0])


def test_eval_fast_only_forcing_survives_at_origin():
    sys_ = FastSlowSystem(NormalForm(1.0), delta=1.0, eps=0.01)
    assert eval_fast(sys_, (0.0, 0.0), -0.5) == pytest.approx([0.01, 0.0], abs=1e-15)


def test_eval_fast_hand_evaluation():
    # c y x1 - x2 - x1 r^2 = 2*0.5*0.1 - 0 - 0.1*0.01; x1 + c y x2 - x2 r^2 = 0.1
    sys_ = FastSlowSystem(NormalForm(2.0), delta=0.0, eps=0.05)
    out = eval_fast(sys_, (0.1, 0.0), 0.5, eps=0.0)
    assert out == pytest.approx([0.099, 0.1], abs=1e-15)


def test_eval_fast_modified_form_rotation_uses_b():
    sys_ = FastSlowSystem(ModifiedExp(1.0, 3.0), delta=0.0)
    out = eval_fast(sys_, (0.0, 0.2), 0.0, eps=0.0)
    # a1(0) = 0: (-b x2 - x1 r^2, b x1 - x2 r^2) = (-0.6, -0.008)
    assert out == pytest.approx([-0.6, -0.008], abs=1e-15)


@pytest.mark.parametrize("x, y", [((math.nan, 0.0), 0.0), ((0.0, 0.0), math.inf), ((2.0, 0.0), 0.0),
                                  ((0.0, 0.0), 5.0)])
def test_eval_fast_rejects_bad_points(x, y):
    with pytest.raises(DomainError):
        eval_fast(FastSlowSystem(NormalForm()), x, y)


def test_rhs_matches_eval_fast_over_eps():
    sys_ = FastSlowSystem(ModifiedExp(1.3, 0.7), delta=0.4, eps=0.05)
    f = sys_.rhs()
    for x1, x2, y in [(0.1, -0.2, 0.3), (-0.5, 0.4, -1.1)]:
        expect = eval_fast(sys_, (x1, x2), y) / sys_.eps
        got = f(x1, x2, y)
        assert got[:2] == pytest.approx(expect, rel=1e-14)
        assert got[2] == 1.0


def test_eigenvalues_examples():
    assert eigenvalues_at(NormalForm(1.0), 0.3) == (complex(0.3, -1), complex(0.3, 1))
    assert eigenvalues_at(ModifiedExp(1.0, 2.0), 0.0) == (-2j, 2j)
    lo, hi = eigenvalues_at(ModifiedExp(2.0, 1.0), 1.0)
    assert lo == pytest.approx(complex(math.exp(-2), -1), abs=1e-15)
    assert hi == pytest.approx(complex(0.1353352832366127, 1), abs=1e-15)


def test_eigenvalues_outside_domain():
    with pytest.raises(DomainError):
        eigenvalues_at(NormalForm(1.0, domain=(-1.0, 1.0)), 2.0)


@given(s=st.floats(-5, 5), a=st.floats(0.1, 4), b=st.floats(0.1, 4))
def test_eigenvalues_are_exact_conjugates(s, a, b):
    for fld in (NormalForm(a), ModifiedExp(a, b), PolynomialReal((0.0, a, 0.0, 1.0), b)):
        lo, hi = eigenvalues_at(fld, s)
        assert hi == lo.conjugate()


@given(s=st.floats(-5, 5).filter(lambda v: abs(v) > 1e-12), a=st.floats(0.1, 4), b=st.floats(0.1, 4))
def test_library_fields_satisfy_sign_condition(s, a, b):
    for fld in (NormalForm(a), ModifiedExp(a, b)):
        assert fld.a1(s) * s > 0


def test_normal_form_is_the_only_odd_library_field():
    s = np.linspace(0.1, 2, 20)
    nf, me = NormalForm(1.5), ModifiedExp(1.0, 1.0)
    assert np.allclose(nf.a1(-s), -nf.a1(s), rtol=0, atol=0)
    assert not np.allclose(me.a1(-s), -me.a1(s))


@settings(max_examples=30)
@given(y=st.floats(-3, 3))
def test_eval_fast_lipschitz_on_box(y):
    sys_ = FastSlowSystem(ModifiedExp(1.0, 1.0), delta=0.1)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(40, 2))
    vals = np.array([eval_fast(sys_, p, y) for p in pts])
    assert np.all(np.isfinite(vals))
    # |a1| <= 3 e^3 on the box, the cubic contributes at most 3 |x|^2 <= 6 per unit distance
    bound = abs(sys_.field.a1(y)) + sys_.field.b1 + 6.0
    for i in range(len(pts) - 1):
        d = np.linalg.norm(pts[i] - pts[i + 1])
        assert np.linalg.norm(vals[i] - vals[i + 1]) <= bound * 2 * d + 1e-12


def test_assumptions_pass_for_normal_form():
    rep = check_assumptions(FastSlowSystem(NormalForm(1.0), delta=1.0), GRID)
    assert rep.passed, rep.failed()
    assert {c.name for c in rep.checks} >= {"A1_critical_manifold", "A2_hyperbolic", "A3_sign", "A3_a1_zero",
                                             "A3_b1_positive", "A4_transversal", "A6_not_invariant"}


def test_assumptions_fail_sign_for_even_polynomial():
    rep = check_assumptions(FastSlowSystem(PolynomialReal((0.0, 0.0, 1.0), 1.0)), GRID)
    assert "A3_sign" in rep.failed()
    assert "A4_transversal" in rep.failed()
    assert rep.worst_violation > 0


def test_assumptions_fail_invariance_without_perturbation():
    rep = check_assumptions(FastSlowSystem(NormalForm(1.0), delta=0.0), GRID)
    assert rep.failed() == ["A6_not_invariant"]


def test_assumption_report_lists_every_check():
    rep = check_assumptions(FastSlowSystem(ModifiedExp(1.0, 1.0)), GRID)
    d = rep.to_dict()
    assert len(d["checks"]) == len(rep.checks) == 9
    assert d["passed"] is True


@pytest.mark.parametrize("grid, exc", [([], ValueError), ([0.1, 0.2], ValueError), ([-20.0, 0.0, 1.0], DomainError)])
def test_assumption_grid_validation(grid, exc):
    with pytest.raises(exc):
        check_assumptions(FastSlowSystem(NormalForm()), grid)


@pytest.mark.parametrize("ctor", [lambda: NormalForm(-1.0), lambda: ModifiedExp(0.0, 1.0),
                                  lambda: ModifiedExp(1.0, -1.0), lambda: NormalForm(1.0, domain=(0.5, 2.0)),
                                  lambda: PolynomialReal(())])
def test_invalid_fields_rejected(ctor):
    with pytest.raises(DomainError):
        ctor()
