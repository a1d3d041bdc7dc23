import math

import pytest

from hopfuq.exceptions import IntegrationError
from hopfuq.integrate import Dopri5, locate_event


def oscillator(t, y):
    return (y[1], -y[0])


def final_state(stepper, y0, t_end):
    last = None
    for _, _, t, y in stepper.steps(0.0, y0, t_end):
        last = (t, y)
    return last


@pytest.mark.parametrize("rtol, bound", [(1e-6, 1e-5), (1e-10, 1e-9)])
def test_harmonic_oscillator_accuracy(rtol, bound):
    t, y = final_state(Dopri5(oscillator, rtol, rtol * 1e-3), (1.0, 0.0), 10.0)
    assert t == pytest.approx(10.0, abs=1e-12)
    assert abs(y[0] - math.cos(10.0)) <= bound
    assert abs(y[1] + math.sin(10.0)) <= bound


def test_exponential_decay_and_max_step():
    st = Dopri5(lambda t, y: (-2.0 * y[0],), 1e-10, 1e-14, max_step=0.05)
    prev = 0.0
    for t0, _, t, y in st.steps(0.0, (1.0,), 1.0):
        assert t - t0 <= 0.05 + 1e-15
        assert abs(y[0] - math.exp(-2 * t)) <= 1e-9
        prev = t
    assert prev == pytest.approx(1.0)


def test_fixed_step_is_fifth_order():
    st = Dopri5(oscillator, 1e-8, 1e-8)
    errs = []
    for h in (0.2, 0.1):
        y = st.step_fixed(0.0, (1.0, 0.0), h)
        errs.append(abs(y[0] - math.cos(h)))
    # local error scales like h^6
    assert errs[0] / errs[1] == pytest.approx(64, rel=0.2)


def test_event_location_crossing_of_cosine():
    st = Dopri5(oscillator, 1e-12, 1e-14, max_step=0.5)
    for t0, y0, t1, y1 in st.steps(0.0, (1.0, 0.0), 3.0):
        if y0[0] > 0 >= y1[0]:
            t_ev, y_ev = locate_event(st, lambda s: s[0], t0, y0, t1, y1, 1e-12)
            break
    assert t_ev == pytest.approx(math.pi / 2, abs=1e-10)
    assert abs(y_ev[0]) <= 1e-10


def test_step_underflow_raises():
    # blow-up at t = 1 forces the step size down without bound
    st = Dopri5(lambda t, y: (y[0] ** 2,), 1e-10, 1e-12, min_step=1e-10)
    with pytest.raises(IntegrationError):
        for _ in st.steps(0.0, (1.0,), 2.0):
            pass
