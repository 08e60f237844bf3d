import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pathmild.errors import OrderingError, PropagatorError, SingularityError
from pathmild.grids import SpatialGrid, TimeGrid
from pathmild.noise import sample_driver
from pathmild.operator_family import CoefficientField, OperatorFamily, assemble, build_family
from pathmild.evolution_family import (
    EvolutionOracle,
    PropagatorScheme,
    derivative_residual,
    singularity_profile,
    step_propagator,
)


def test_scalar_propagators():
    assert step_propagator(-1.0, 1.0)[0, 0] == pytest.approx(np.exp(-1))
    assert step_propagator(-1.0, 1.0, PropagatorScheme("crank-nicolson"))[0, 0] == pytest.approx(
        1 / 3)
    assert step_propagator(-1.0, 1.0, PropagatorScheme("implicit-euler"))[0, 0] == pytest.approx(
        0.5)


@pytest.mark.parametrize("kind", ["exact-exponential", "crank-nicolson", "implicit-euler"])
def test_zero_generator_gives_identity(kind):
    np.testing.assert_array_equal(step_propagator(np.zeros((3, 3)), 0.1, PropagatorScheme(kind)),
                                  np.eye(3))


def test_singular_implicit_step_is_propagator_error():
    with pytest.raises(PropagatorError):
        step_propagator(np.array([[1.0]]), 1.0, PropagatorScheme("implicit-euler"))


def test_substeps_compose():
    A = np.array([[-2.0, 1.0], [0.5, -3.0]])
    one = step_propagator(A, 0.2, PropagatorScheme("crank-nicolson", substeps=4))
    fine = np.linalg.matrix_power(step_propagator(A, 0.05, PropagatorScheme("crank-nicolson")), 4)
    np.testing.assert_allclose(one, fine, atol=1e-14)


def test_identity_on_the_diagonal(heat):
    *_, oracle, _ = heat
    v = np.arange(8.0)
    assert np.array_equal(oracle.apply_S(7, 7, v), v)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 32), st.integers(0, 32), st.integers(0, 32))
def test_cocycle_is_bit_exact(a, b, c):
    r, s, t = sorted((a, b, c))
    grid = SpatialGrid.on_interval(6, 1.0, "neumann-conormal")
    oracle = EvolutionOracle(build_family(sample_driver(TimeGrid(1.0, 32), 1, 3, 0), grid))
    v = np.linspace(-1, 1, 6)
    assert np.array_equal(oracle.apply_S(t, r, v), oracle.apply_S(t, s, oracle.apply_S(s, r, v)))


def test_ordering_and_singularity_errors(heat):
    *_, oracle, _ = heat
    with pytest.raises(OrderingError):
        oracle.apply_S(2, 5, np.ones(8))
    with pytest.raises(SingularityError):
        oracle.apply_SA(4, 4, np.ones(8))


def test_SA_is_bounded_by_inverse_distance_for_scalar_decay():
    tg = TimeGrid(4.0, 64)
    for lam in (0.5, 2.0, 10.0):
        o = EvolutionOracle(OperatorFamily.constant([[-lam]], tg))
        for s, t in [(0, 1), (3, 10), (0, 64)]:
            val = abs(o.apply_SA(t, s, np.ones(1))[0])
            assert val <= 1 / (np.e * (t - s) * tg.dt) + 1e-12


def test_SA_vanishes_on_constants():
    tg = TimeGrid(1.0, 16)
    g = SpatialGrid.on_interval(8, 1.0, "neumann-conormal")
    K = tg.steps + 1
    a = 1 + 0.3 * np.sin(np.outer(tg.nodes, np.arange(8)))
    o = EvolutionOracle(assemble(CoefficientField(a, np.zeros((K, 8)), 1.0, (0.7, 1.3)), tg, g))
    np.testing.assert_allclose(o.apply_SA(10, 2, np.ones(8)), 0.0, atol=1e-12)


def test_derivative_residual_of_zero_generator():
    o = EvolutionOracle(OperatorFamily.constant(np.zeros((2, 2)), TimeGrid(1.0, 8)))
    assert derivative_residual(o) == 0.0


def test_derivative_residual_shrinks_for_constant_scalar():
    res = [derivative_residual(EvolutionOracle(OperatorFamily.constant([[-1.0]],
                                                                       TimeGrid(1.0, N))))
           for N in (16, 32, 64)]
    assert res[0] > res[1] > res[2]
    assert res[0] == pytest.approx(1 + np.expm1(-1 / 16) * 16, rel=1e-6)


def test_uniform_bound_is_stable_under_refinement():
    g = SpatialGrid.on_interval(8, 1.0, "neumann-conormal")
    d = sample_driver(TimeGrid(1.0, 16), 1, 3, 0)
    bounds = [singularity_profile(EvolutionOracle(build_family(d.refined_to(N), g)))
              for N in (16, 32, 64)]
    S = [b["S_bound"] for b in bounds]
    SA = [b["SA_bound"] for b in bounds]
    assert max(S) <= 1.0 + 1e-12
    assert max(SA) / min(SA) < 1.25


def test_transposed_family_gives_transposed_propagators(heat):
    *_, family, oracle, _ = heat
    adj = EvolutionOracle(family.transposed())
    np.testing.assert_allclose(adj.P, np.swapaxes(oracle.P, 1, 2), atol=1e-13)
    # S(t, s)^T is the product of transposed steps in reversed order
    S = oracle.matrix(20, 5)
    St = np.eye(8)
    for j in range(19, 4, -1):
        St = adj.P[j] @ St
    np.testing.assert_allclose(St, S.T, atol=1e-13)


def test_trajectory_matches_apply_S(heat):
    *_, oracle, _ = heat
    v = np.linspace(0, 1, 8)
    traj = oracle.trajectory(v, 3)
    for k in range(3, 33):
        assert np.array_equal(traj[k - 3], oracle.apply_S(k, 3, v))
