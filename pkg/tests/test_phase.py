import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hopfuq.exceptions import DomainError, DomainExhausted
from hopfuq.model import ModifiedExp, NormalForm, PolynomialReal
from hopfuq.phase import (BufferEscape, ComplexPhase, Jump, complex_phase, entry_exit, entry_for_exit, exit_map,
                          relief, relief_grid)

NF = ComplexPhase(NormalForm(1.0))
ME = ComplexPhase(ModifiedExp(1.0, 1.0))

# root of (t + 1) e^{-1/2} = e^{t} / 2, computed with mpmath findroot at 30 digits
MODEXP_JUMP_A1_TAU0_HALF = 0.7564312086261697


def test_phase_examples():
    assert complex_phase(NF, 1.0) == 0.5 - 1j
    assert complex_phase(ME, 1.0) == pytest.approx(complex(1 - 2 / math.e, -1), abs=1e-15)
    for ph in (NF, ME, ComplexPhase(PolynomialReal((0.0, 1.0, 0.3), 2.0))):
        assert complex_phase(ph, 0) == 0


def test_polynomial_phase_by_quadrature():
    ph = ComplexPhase(PolynomialReal((0.0, 1.0, 0.3), 2.0))
    tau = 0.7 + 0.4j
    # int_0^tau (s + 0.3 s^2 - 2i) ds
    expect = tau**2 / 2 + 0.1 * tau**3 - 2j * tau
    assert complex_phase(ph, tau) == pytest.approx(expect, abs=1e-12)


def test_closed_form_matches_quadrature_on_grid():
    us, vs = np.linspace(-2, 2, 10), np.linspace(0, 2, 10)
    for fld in (NormalForm(0.7), ModifiedExp(1.0, 1.0), ModifiedExp(2.5, 0.3)):
        ph = ComplexPhase(fld)
        worst = max(abs(complex_phase(ph, complex(u, v)) - ph.quadrature(complex(u, v))) for u in us for v in vs)
        assert worst <= 1e-9


def test_relief_examples():
    assert relief(NF, 1.0, 1.0) == 1.0
    assert relief(NF, 0.0, 0.0) == 0.0
    assert relief(ME, 0.0, 0.0) == 0.0
    assert relief(ME, 1.0, 0.0) == pytest.approx(1 - 2 / math.e, abs=1e-15)


@given(u=st.floats(-2, 2), v=st.floats(0, 2), a=st.floats(0.2, 3), b=st.floats(0.1, 3))
def test_relief_is_real_part_of_phase(u, v, a, b):
    ph = ComplexPhase(ModifiedExp(a, b))
    assert relief(ph, u, v) == pytest.approx(complex_phase(ph, complex(u, v)).real, abs=1e-12)


def test_relief_grid_layout():
    us, vs = np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.5])
    g = relief_grid(NF, us, vs)
    assert g.shape == (2, 3)
    assert g[1, 2] == pytest.approx(relief(NF, 2.0, 0.5))
    poly = ComplexPhase(PolynomialReal((0.0, 1.0), 1.0))
    assert np.allclose(relief_grid(poly, us, vs), g, atol=1e-12)


def test_entry_exit_examples():
    res = entry_exit(NF, -0.5)
    assert isinstance(res, Jump) and res.tau_star == pytest.approx(0.5, abs=1e-10)
    assert entry_exit(NF, -0.5, 0.3) == BufferEscape(0.3)
    res = entry_exit(ME, -0.5)
    assert res.tau_star == pytest.approx(MODEXP_JUMP_A1_TAU0_HALF, abs=1e-10)


def test_reflection_law_on_grid():
    for c in (0.5, 1.0, 2.0):
        ph = ComplexPhase(NormalForm(c))
        for t0 in np.linspace(-1.5, -0.1, 50):
            assert abs(exit_map(ph, t0) + t0) <= 1e-10


@given(t0=st.floats(-3, -0.01), a=st.floats(0.2, 3))
def test_jump_residual_bound(t0, a):
    ph = ComplexPhase(ModifiedExp(a, 1.0))
    res = entry_exit(ph, t0)
    if isinstance(res, Jump):
        assert res.residual <= 1e-10
        assert abs(relief(ph, res.tau_star, 0) - relief(ph, t0, 0)) <= 1e-10
    else:
        assert math.isinf(res.tau_plus)
        assert ph.real_relief(t0) >= 1 / a**2


@given(t1=st.floats(-0.9, -0.05), t2=st.floats(-0.9, -0.05))
def test_exit_map_is_monotone(t1, t2):
    # for a = 1 the exit leaves the domain as tau0 -> -1, where the relief reaches its supremum
    lo, hi = min(t1, t2), max(t1, t2)
    r_lo, r_hi = entry_exit(ME, lo), entry_exit(ME, hi)
    assert isinstance(r_lo, Jump) and isinstance(r_hi, Jump)
    assert r_lo.tau_star >= r_hi.tau_star


def test_exit_near_relief_supremum_leaves_the_domain():
    with pytest.raises(DomainExhausted):
        entry_exit(ME, -0.99999)
    assert entry_exit(ME, -0.99999, 3.0) == BufferEscape(3.0)


@given(t0=st.floats(-2, -0.05), cap=st.floats(0.05, 3))
def test_buffer_cap_is_respected(t0, cap):
    res = entry_exit(NF, t0, cap)
    assert res.exit_time <= cap
    if isinstance(res, Jump):
        assert res.tau_star == pytest.approx(-t0, abs=1e-10)


def test_buffer_escape_without_cap_when_relief_saturates():
    res = entry_exit(ComplexPhase(ModifiedExp(2.0, 1.0)), -0.8)
    assert isinstance(res, BufferEscape) and math.isinf(res.exit_time)


def test_domain_exhausted_for_polynomial_without_cap():
    # relief s^2/2 only reaches 2 on the positive side of the domain
    ph = ComplexPhase(PolynomialReal((0.0, 1.0), 1.0, domain=(-5.0, 2.0)))
    with pytest.raises(DomainExhausted):
        entry_exit(ph, -4.0)
    assert entry_exit(ph, -4.0, 1.5) == BufferEscape(1.5)


@pytest.mark.parametrize("t0", [0.0, 0.5])
def test_entry_time_must_be_negative(t0):
    with pytest.raises(DomainError):
        entry_exit(NF, t0)


def test_entry_for_exit_inverts_the_map():
    assert entry_for_exit(NF, 1.0) == pytest.approx(-1.0, abs=1e-11)
    t0 = entry_for_exit(ME, 0.9)
    assert exit_map(ME, t0) == pytest.approx(0.9, abs=1e-10)
    with pytest.raises(DomainError):
        entry_for_exit(NF, -1.0)
