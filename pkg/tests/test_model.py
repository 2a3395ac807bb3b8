import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptchain.errors import AssumptionViolation, DomainError, UncertaintySpecError
from ptchain.model import (BilinearMaps, BilinearScenario, ChainedState, ChainedSystem,
                           UncertaintyBoundTable, UncertaintySpec, assumption_residual,
                           bilinear_example_spec, bilinear_rhs, bilinear_to_chained, chain_rhs,
                           compute_d, compute_g_table, decay_excess_rate, derive_bounds,
                           dynamics, from_transformed, linear_spec, psi_transformed,
                           scaling_matrix, to_transformed, zero_spec)
from ptchain.verify import violating_spec


def test_bound_table_validation():
    with pytest.raises(DomainError):
        UncertaintyBoundTable([[0, 1], [0, 0]])
    with pytest.raises(DomainError):
        UncertaintyBoundTable([[-1, 0], [0, 0]])
    with pytest.raises(DomainError):
        UncertaintyBoundTable([[1, 0, 0]])


def test_dynamics_zero_equilibrium():
    sys = ChainedSystem(3, zero_spec(3))
    d = dynamics(sys, 0.0, ChainedState(0.0, np.zeros(3)), 0.0, 0.0)
    assert d.x0 == 0 and np.all(d.x == 0)


def test_dynamics_substitution():
    sys = ChainedSystem(2, zero_spec(2))
    d = dynamics(sys, 0.0, ChainedState(1.0, [2.0, 3.0]), 1.0, 5.0)
    assert (d.x0, *d.x) == (1.0, 3.0, 5.0)


def test_drift_enters_x0_only():
    out = chain_rhs(2, 0.5, np.zeros(2), 2.0, np.array([1.0, 1.0]), 1.0, 0.0)
    assert out[0] == pytest.approx(2.0)


def test_bilinear_chained_vector_field():
    eps = 0.1
    sys, _ = bilinear_to_chained(BilinearScenario(eps=eps))
    t = 0.7
    x = np.array([1.3, -0.4])
    d = dynamics(sys, t, ChainedState(0.0, x), 0.0, 2.0)
    assert d.x[1] == pytest.approx(2.0 + 2 / (2 - eps ** 2) * x[0] * (1 + math.sin(t) ** 2))


def test_chained_state_output_and_validation():
    s = ChainedState(1.0, [2.0, 3.0])
    assert np.array_equal(s.output, [1.0, 2.0])
    with pytest.raises(DomainError):
        ChainedState(np.nan, [0.0, 0.0])


def test_assumption_residual_examples():
    spec = UncertaintySpec(UncertaintyBoundTable([[1.0, 0.0], [2.0, 3.0]]),
                           lambda t, u, x: np.zeros(2))
    assert np.array_equal(assumption_residual(spec, 0.0, 0.0, np.ones(2)), [1.0, 5.0])
    bad = violating_spec()
    assert assumption_residual(bad, 0.0, 0.0, np.array([0.5, 0.0]))[0] == pytest.approx(-0.5)


def test_bilinear_table_holds_on_dense_grid():
    spec = bilinear_example_spec(0.1)
    assert spec.bound.c[1, 0] == pytest.approx(4 / (2 - 0.01))
    for t in np.linspace(0, 20, 2001):
        assert np.all(assumption_residual(spec, t, 0.0, np.array([1.0, -2.0])) >= -1e-14)


def test_violation_marks_spec_and_blocks_bounds():
    spec = violating_spec()
    with pytest.raises(AssumptionViolation):
        spec.check(0.0, 0.0, np.array([1.0, 0.0]))
    assert spec.violated
    with pytest.raises(AssumptionViolation):
        derive_bounds(spec, 1.0)


def test_spec_shape_and_finiteness_checked():
    spec = UncertaintySpec(UncertaintyBoundTable.zeros(2), lambda t, u, x: np.zeros(3))
    with pytest.raises(UncertaintySpecError):
        spec(0.0, 0.0, np.zeros(2))
    spec = UncertaintySpec(UncertaintyBoundTable.zeros(2), lambda t, u, x: np.full(2, np.inf))
    with pytest.raises(UncertaintySpecError):
        spec(0.0, 0.0, np.zeros(2))


def test_spec_purity_spot_check():
    spec = bilinear_example_spec()
    x = np.array([0.3, 0.2])
    assert np.array_equal(spec(1.1, 0.5, x), spec(1.1, 0.5, x))


def test_linear_spec():
    spec = linear_spec([[1.0, 0.0], [-2.0, 0.5]])
    assert np.array_equal(spec.bound.c, [[1.0, 0.0], [2.0, 0.5]])
    assert np.array_equal(spec(0, 0, np.array([1.0, 2.0])), [1.0, -1.0])
    with pytest.raises(DomainError):
        linear_spec([[0.0, 1.0], [0.0, 0.0]])


def test_to_transformed_examples():
    assert np.array_equal(to_transformed(0.0, 1.0, [3.0, 4.0]), [3.0, 4.0])
    assert np.allclose(to_transformed(0.0, 2.0, [2.0, 5.0]), [1.0, 5.0])
    with pytest.raises(DomainError):
        to_transformed(1.0, 1.0, [1.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 6), frac=st.floats(0.0, 0.99), T=st.floats(0.1, 10),
       seed=st.integers(0, 2**31))
def test_transform_round_trip(n, frac, T, seed):
    x = np.random.default_rng(seed).uniform(-10, 10, n)
    t = frac * T
    back = from_transformed(t, T, to_transformed(t, T, x))
    assert np.allclose(back, x, rtol=1e-12, atol=0)


def test_scaling_matrix_consistent_with_transform():
    x = np.array([1.0, 2.0, 3.0])
    assert np.allclose(scaling_matrix(0.5, 2.0, 3) @ x, to_transformed(0.5, 2.0, x))


def test_g_table_examples():
    g = compute_g_table(UncertaintyBoundTable.zeros(2), 3.0)
    assert np.array_equal(g, [[1.0, 0.0], [0.0, 0.0]])
    g = compute_g_table(UncertaintyBoundTable([[1.0, 0.0], [0.0, 0.0]]), 2.0)
    assert g[0, 0] == pytest.approx(3.0)
    g = compute_g_table(UncertaintyBoundTable([[0.0, 0.0], [0.5, 0.0]]), 2.0)
    assert g[1, 0] == pytest.approx(2.0)


def test_d_examples():
    assert compute_d(compute_g_table(UncertaintyBoundTable.zeros(2), 1.0), 1.0, 2) == 1.0
    g = np.zeros((3, 3))
    g[2, 2] = 1.7
    assert compute_d(g, 0.4, 3) == pytest.approx(1.7 * math.sqrt(3))
    rng = np.random.default_rng(3)
    g = np.tril(rng.uniform(0, 2, (4, 4)))
    assert compute_d(2 * g, 0.7, 4) == pytest.approx(2 * compute_d(g, 0.7, 4))


def test_decay_excess_rate():
    assert decay_excess_rate(0.0, 100.0, 2.5, 2) == pytest.approx(6 * 20 * math.sqrt(3) * 2)


def test_psi_for_zero_uncertainty():
    z = np.array([1.0, 2.0, 3.0])
    assert np.allclose(psi_transformed(zero_spec(3), 0.5, 1.5, 0.0, z), [2.0, 2.0, 0.0])


def test_bilinear_maps():
    m = BilinearMaps(0.0)
    assert m.to_chained_state(1.0, 2.0, 3.0) == (1.0, 2.0, 3.0)
    assert m.to_chained_inputs(1.0, 2.0) == (1.0, 2.0)
    m = BilinearMaps(0.1)
    assert m.to_chained_state(0.0, 0.0, 1.0)[2] == pytest.approx(1.005025, abs=1e-6)
    assert m.from_chained_state(*m.to_chained_state(0.3, 0.4, 0.5)) == pytest.approx((0.3, 0.4, 0.5))
    assert m.from_chained_inputs(*m.to_chained_inputs(0.7, -1.2)) == pytest.approx((0.7, -1.2))
    with pytest.raises(DomainError):
        BilinearScenario(eps=1.5)


def test_bilinear_rhs_maps_to_chained_rhs():
    sc = BilinearScenario()
    sys, m = bilinear_to_chained(sc)
    s = np.array([0.2, -0.5, 0.8])
    v, u = 0.3, -1.1
    db = bilinear_rhs(sc, 0.4, s, v, u)
    u0, u1 = m.to_chained_inputs(v, u)
    x0, x1, x2 = m.to_chained_state(*s)
    dc = dynamics(sys, 0.4, ChainedState(x0, [x1, x2]), u0, u1)
    assert np.allclose(m.to_chained_state(*db), (dc.x0, *dc.x), rtol=1e-13)
