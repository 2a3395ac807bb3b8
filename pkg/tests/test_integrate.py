import math

import numpy as np
import pytest

from ptchain.errors import DomainError, SimulationDiverged
from ptchain.integrate import IntegratorConfig, integrate


def decay(t, y):
    return -y


def test_config_validation():
    with pytest.raises(DomainError):
        IntegratorConfig(method="euler")
    with pytest.raises(DomainError):
        IntegratorConfig(terminal_guard=0.1)
    with pytest.raises(DomainError):
        IntegratorConfig(step_cap_ratio=0.6)
    with pytest.raises(DomainError):
        IntegratorConfig(rel_tol=0.0)
    assert IntegratorConfig().t_end(2.0) == pytest.approx(2.0 * (1 - 1e-6))


@pytest.mark.parametrize("method", ["rk45", "rk4"])
def test_exponential_accuracy(method):
    cfg = IntegratorConfig(method=method, h0=1e-3)
    ts, ys, _ = integrate(decay, [1.0], 1.0, cfg)
    assert np.max(np.abs(ys[:, 0] - np.exp(-ts))) < 1e-8


def test_checkpoints_hit_exactly():
    cps = [0.1, 0.25, 0.5, 0.77777]
    ts, _, _ = integrate(decay, [1.0], 1.0, IntegratorConfig(), checkpoints=cps)
    for c in cps:
        assert c in ts
    assert ts[-1] == IntegratorConfig().t_end(1.0)


def test_step_cap_and_logarithmic_step_count():
    # y' = -y/(T-t) has solution y = (T-t)/T; steps must shrink with T - t.
    T = 1.0
    counts = {}
    for guard in (1e-3, 1e-6):
        cfg = IntegratorConfig(terminal_guard=guard)
        ts, ys, st = integrate(lambda t, y: -y / (T - t), [1.0], T, cfg)
        h = np.array(st.step_sizes)
        assert np.all(h <= cfg.step_cap_ratio * (T - ts[:-1]) * (1 + 1e-12))
        assert st.max_cap_ratio <= cfg.step_cap_ratio * (1 + 1e-12)
        assert ys[-1, 0] == pytest.approx(guard, rel=1e-5)
        counts[guard] = st.accepted
    # three more decades cost about three decades' worth of geometric steps
    per_decade = math.log(10) / math.log(1 / (1 - 0.1))
    assert counts[1e-6] - counts[1e-3] <= 3 * per_decade + 5


def test_stiffness_cap_applied():
    cfg = IntegratorConfig(stability_factor=1.0)
    ts, _, _ = integrate(decay, [1.0], 1.0, cfg, stiffness=lambda t: 100.0)
    assert np.max(np.diff(ts)) <= 1.0 / 100.0 * (1 + 1e-12)


def test_rk4_is_deterministic():
    cfg = IntegratorConfig(method="rk4", h0=1e-2)
    a = integrate(lambda t, y: np.array([y[1], -y[0]]), [1.0, 0.0], 1.0, cfg)
    b = integrate(lambda t, y: np.array([y[1], -y[0]]), [1.0, 0.0], 1.0, cfg)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@pytest.mark.parametrize("method", ["rk45", "rk4"])
def test_nonfinite_aborts_with_last_finite_sample(method):
    def blow(t, y):
        return y * y

    with pytest.raises(SimulationDiverged) as info:
        integrate(blow, [1.0], 2.0, IntegratorConfig(method=method, h0=1e-2))
    exc = info.value
    assert np.all(np.isfinite(exc.last_y))
    assert exc.last_t < 1.1


def test_nonfinite_initial_state_rejected():
    with pytest.raises(DomainError):
        integrate(decay, [np.nan], 1.0, IntegratorConfig())
