import math

import numpy as np
import pytest

from ptchain.control import (GainSchedule, ObserverLaw, StateFeedbackLaw, beta_output_components,
                             beta_output_feedback, beta_state_feedback, closed_form_x0,
                             observer_step_derivative, open_loop_u0, theta_open_loop, u0_envelope,
                             u0_law, u_output_feedback, u_state_feedback, x0_envelope)
from ptchain.errors import BetaTooSmallError, DomainError
from ptchain.model import to_transformed
from ptchain.ple import eval_P, ple_basis

LAMBDA2 = (3 + math.sqrt(5)) / 2
DP2 = 2 * (2 + math.sqrt(2))


def test_schedule():
    s = GainSchedule(2.0)
    assert s.gamma0 == 0.5
    assert s.gamma(1.5) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        s.gamma(2.0)
    with pytest.raises(DomainError):
        GainSchedule(0.0)


def test_state_gain_formula():
    beta = beta_state_feedback(2, DP2, 1.0, LAMBDA2)
    assert beta == pytest.approx((4 + DP2) / 2 + 2 * LAMBDA2)
    assert beta == pytest.approx(10.651, abs=1e-3)
    assert beta_state_feedback(2, DP2, 2.0, LAMBDA2) - beta == pytest.approx(2 * LAMBDA2)
    assert beta_state_feedback(2, DP2, 1.0, LAMBDA2, c0=0.3, T=1e-12) == pytest.approx(beta)
    assert beta_state_feedback(2, DP2, 1.0, LAMBDA2, c0=-0.3, T=2.0) == pytest.approx(
        beta * math.exp(0.6))


def test_output_gain_formula():
    b1, b2 = beta_output_components(2, DP2, 1.0, LAMBDA2, 10.0)
    assert b1 == pytest.approx(8 * math.sqrt(2) * 2 * LAMBDA2 * 10 + 2 * (2 + DP2 / 2))
    assert b2 == pytest.approx(4 * math.sqrt(2) * LAMBDA2 + 2 * (6 - 0.5))
    assert beta_output_feedback(2, DP2, 1.0, LAMBDA2, 10.0) == max(b1, b2)


def test_design_refuses_low_gain_unless_allowed():
    with pytest.raises(BetaTooSmallError) as info:
        StateFeedbackLaw.design(2, 1.0, 1.0, beta=5.0)
    assert "10.65" in str(info.value)
    law = StateFeedbackLaw.design(2, 1.0, 1.0, beta=5.0, allow_below_formula=True)
    assert law.beta == 5.0 and not law.certified
    law = StateFeedbackLaw.design(2, 1.0, 1.0)
    assert law.certified and law.beta == law.beta_min
    with pytest.raises(DomainError):
        ObserverLaw.design(2, 1.0, 1.0, beta=-1.0)


def test_u0_law_matches_open_loop_on_closed_form():
    T, beta = 2.5, 100.0
    law = StateFeedbackLaw.design(2, T, 44.0, beta=beta, allow_below_formula=True)
    for x0i in (0.0, 1.0, -3.0):
        for t in np.linspace(0, 0.99 * T, 17):
            x0 = closed_form_x0(t, x0i, beta, T)
            assert u0_law(law, t, x0) == pytest.approx(open_loop_u0(t, x0i, beta, T), rel=1e-12,
                                                       abs=1e-12)


def test_closed_form_solves_its_ode():
    T, beta, x0i, c0 = 2.0, 7.0, -1.5, 0.4
    law = StateFeedbackLaw.design(2, T, 1.0, c0=c0, beta=1e3)
    for t in (0.1, 0.9, 1.7):
        h = 1e-6
        dx = (closed_form_x0(t + h, x0i, law.beta, T, c0)
              - closed_form_x0(t - h, x0i, law.beta, T, c0)) / (2 * h)
        x = closed_form_x0(t, x0i, law.beta, T, c0)
        assert dx == pytest.approx(u0_law(law, t, x) + c0 * x, rel=1e-6)
    assert closed_form_x0(T, x0i, beta, T) == 0.0


def test_closed_form_examples():
    assert closed_form_x0(0.0, 1.3, 5.0, 2.0) == pytest.approx(1.3)
    assert theta_open_loop(0.0, -5.0 * 4 / 2, 5.0, 2.0) == pytest.approx(0.0, abs=1e-12)


def test_envelopes_dominate_closed_form():
    T, beta = 1.5, 20.0
    t = np.linspace(0, T, 301)
    for x0i in (-2.0, 0.0, 2.0):
        x = np.array([closed_form_x0(s, x0i, beta, T) for s in t])
        u = np.array([open_loop_u0(s, x0i, beta, T) for s in t])
        assert np.all(np.abs(x) <= x0_envelope(t, x0i, beta, T) * (1 + 1e-12) + 1e-300)
        assert np.all(np.abs(u) <= u0_envelope(t, x0i, beta, T) * (1 + 1e-12) + 1e-300)


def test_state_feedback_uses_scaled_state():
    law = StateFeedbackLaw.design(3, 2.0, 1.0)
    t, x = 0.5, np.array([0.3, -0.2, 0.9])
    g = 1 / 1.5
    expected = -law.beta * (eval_P(law.basis, g) @ to_transformed(t, 2.0, x))[-1]
    assert u_state_feedback(law, t, x) == pytest.approx(expected)


def test_output_feedback_law():
    law = ObserverLaw.design(2, 1.0, 1.0)
    xi = np.array([0.4, -0.1])
    assert u_output_feedback(law, 0.0, xi) == pytest.approx(
        -law.beta * (eval_P(law.basis, 1.0) @ xi)[-1])


def test_observer_derivative_example():
    law = ObserverLaw.design(2, 1.0, 1.0, beta=1.0, allow_below_formula=True)
    out = observer_step_derivative(law, 0.0, np.array([1.0, 0.0]), 0.0, (0.0, 0.0))
    assert np.allclose(out, [-2.0, -1.0])


def test_observer_innovation_vanishes_on_exact_estimate():
    law = ObserverLaw.design(2, 2.0, 1.0)
    t, x = 0.5, np.array([0.7, -0.3])
    z = to_transformed(t, 2.0, x)
    out = observer_step_derivative(law, t, z, 0.25, (0.0, x[0]))
    assert np.allclose(out, [law.beta * z[1], 0.25], rtol=1e-12)


def test_basis_shared():
    assert StateFeedbackLaw.design(2, 1.0, 1.0).basis is ple_basis(2)
