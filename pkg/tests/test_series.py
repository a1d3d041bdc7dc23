import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopfuq.exceptions import DomainError
from hopfuq.model import ModifiedExp, NormalForm, PolynomialReal
from hopfuq.series import (NONTRIVIAL, TRIVIAL_ONLY, UNCONSTRAINED, SeriesMap, build_matrix, nullspace_truncated,
                           parse_series, power_coeffs, power_coeffs_convolution, shift_obstruction)


def test_binomial_square():
    assert np.array_equal(power_coeffs(SeriesMap((1.0, 1.0)), 2, 2), [1.0, 2.0, 1.0])
    assert np.array_equal(power_coeffs(SeriesMap((1.0, 1.0)), 2, 2, exact=False), [1.0, 2.0, 1.0])


def test_recurrence_matches_convolution_exactly_on_small_integers():
    pi = SeriesMap((2.0, 0.0, 1.0))
    expect = power_coeffs_convolution(pi, 3, 6)
    assert np.array_equal(expect, [8, 0, 12, 0, 6, 0, 1])
    assert np.array_equal(power_coeffs(pi, 3, 6), expect)
    assert np.array_equal(power_coeffs(pi, 3, 6, exact=False), expect)


@settings(max_examples=100, deadline=None)
@given(p0=st.floats(0.5, 2.0), rest=st.lists(st.floats(-1, 1), min_size=1, max_size=32),
       k=st.integers(1, 8))
def test_recurrence_matches_convolution(p0, rest, k):
    pi = SeriesMap((p0, *rest))
    got, ref = power_coeffs(pi, k, 32), power_coeffs_convolution(pi, k, 32)
    # normwise: single coefficients can cancel to far below the vector scale
    assert np.linalg.norm(got - ref) <= 1e-12 * np.linalg.norm(ref)


def test_float_recurrence_loses_accuracy_where_exact_does_not():
    rng = np.random.default_rng(4)
    worst_float = worst_exact = 0.0
    for _ in range(20):
        pi = SeriesMap((rng.uniform(0.5, 2), *rng.uniform(-1, 1, 32)))
        ref = power_coeffs_convolution(pi, 8, 32)
        scale = np.linalg.norm(ref)
        worst_float = max(worst_float, np.linalg.norm(power_coeffs(pi, 8, 32, exact=False) - ref) / scale)
        worst_exact = max(worst_exact, np.linalg.norm(power_coeffs(pi, 8, 32) - ref) / scale)
    assert worst_exact <= 1e-14
    assert worst_float > worst_exact


def test_power_validation():
    with pytest.raises(ValueError):
        power_coeffs(SeriesMap((1.0, 1.0)), 0, 3)
    with pytest.raises(ValueError):
        SeriesMap(())
    with pytest.raises(ValueError):
        SeriesMap((1.0, math.nan))


def test_identity_map_gives_identity_matrix():
    m = build_matrix(SeriesMap((0.0, 1.0)), 8)
    assert np.array_equal(m.square, np.eye(8))
    assert not np.any(m.matrix[8:])


def test_pure_scaling_is_diagonal():
    m = build_matrix(SeriesMap((0.0, 2.0)), 10)
    assert np.array_equal(m.square, np.diag([2.0 ** (i + 1) for i in range(1, 11)]))


@given(p1=st.floats(-2, 2), rest=st.lists(st.floats(-1, 1), max_size=6))
def test_lower_diagonal_exactly_when_pi0_vanishes(p1, rest):
    m = build_matrix(SeriesMap((0.0, p1, *rest)), 8).square
    assert np.all(np.triu(m, 1) == 0.0)
    assert np.allclose(np.diag(m), [p1 ** (i + 1) for i in range(1, 9)], rtol=1e-14, atol=0)


@pytest.mark.parametrize("p2", [0.1, -0.7, 2.0])
def test_first_subdiagonal(p2):
    sq = build_matrix(SeriesMap((0.0, 1.0, p2)), 12).square
    for j in range(1, 12):
        assert sq[j, j - 1] == pytest.approx((j + 1) * p2, rel=1e-14)
    # with pi_1 = -1 the exact coefficient carries (-1)^j
    sq = build_matrix(SeriesMap((0.0, -1.0, p2)), 12).square
    for j in range(1, 12):
        assert sq[j, j - 1] == pytest.approx((-1) ** j * (j + 1) * p2, rel=1e-14)


def test_entries_are_coefficients_of_powers():
    pi = SeriesMap((0.3, 0.9, -0.2, 0.05))
    m = build_matrix(pi, 6, extra_rows=0)
    for j in range(1, 7):
        col = power_coeffs_convolution(pi, j + 1, 7)
        for i in range(1, 7):
            assert m.matrix[i - 1, j - 1] == pytest.approx(col[i + 1], abs=1e-13)


@pytest.mark.parametrize("coeffs, verdict", [((0.0, 1.0), UNCONSTRAINED), ((0.0, 0.5), TRIVIAL_ONLY),
                                             ((0.0, 1.0, 0.1), TRIVIAL_ONLY)])
@pytest.mark.parametrize("n", [16, 32])
def test_verdicts_are_stable_under_doubling(coeffs, verdict, n):
    assert nullspace_truncated(build_matrix(SeriesMap(coeffs), n)).verdict == verdict


def test_reflection_has_a_kernel():
    # Pi(s) = -s is realised by every odd a1
    res = nullspace_truncated(build_matrix(SeriesMap((0.0, -1.0)), 16))
    assert res.verdict == NONTRIVIAL
    assert all(r <= 1e-9 for r in res.residuals)
    for v in res.basis:
        # only odd a1, i.e. v_k = 0 for even k (index k - 1 odd)
        assert np.allclose(np.asarray(v)[1::2], 0.0, atol=1e-12)


def test_square_truncation_alone_reports_spurious_kernel():
    m = build_matrix(SeriesMap((0.0, 1.0, 0.1)), 16, extra_rows=0)
    assert nullspace_truncated(m).verdict == NONTRIVIAL


def test_tol_range_enforced():
    m = build_matrix(SeriesMap((0.0, 0.5)), 4)
    for tol in (1e-13, 1e-5):
        with pytest.raises(ValueError):
            nullspace_truncated(m, tol)


def test_verdict_json():
    doc = nullspace_truncated(build_matrix(SeriesMap((0.0, 0.5)), 16)).to_dict()
    assert json.loads(json.dumps(doc)) == doc
    assert doc["verdict"] == TRIVIAL_ONLY and doc["smallest_singular_value"] == pytest.approx(0.75)
    assert "basis" not in doc


def test_shift_obstruction_examples():
    assert shift_obstruction(NormalForm(1.0), 1.0) == pytest.approx(0.5, abs=1e-14)
    assert shift_obstruction(ModifiedExp(1.0, 1.0), 1.0) == pytest.approx(1 - 2 / math.e, abs=1e-14)
    assert shift_obstruction(ModifiedExp(1.0, 1.0), 0.0) == 0.0
    with pytest.raises(DomainError):
        shift_obstruction(NormalForm(1.0, domain=(-1.0, 1.0)), 2.0)


@pytest.mark.parametrize("fld", [NormalForm(0.3), NormalForm(2.0), ModifiedExp(1.0, 1.0), ModifiedExp(3.0, 0.3),
                                 PolynomialReal((0.0, 1.0, 0.0, 0.5), 1.0, domain=(-3.0, 3.0))])
def test_shift_obstruction_positive_on_grid(fld):
    for m in np.linspace(0, fld.domain[1], 25)[1:]:
        assert shift_obstruction(fld, m) > 0


def test_parse_series():
    assert parse_series("0, 1,0.1").coeffs == (0.0, 1.0, 0.1)
    assert parse_series([1, 2]).padded(3).tolist() == [1.0, 2.0, 0.0, 0.0]
