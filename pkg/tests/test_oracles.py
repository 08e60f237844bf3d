import numpy as np
import pytest

from pathmild.errors import InstabilityError, OrderingError, ShapeError
from pathmild.evolution_family import EvolutionOracle
from pathmild.grids import SpatialGrid, TimeGrid
from pathmild.noise import NoiseOperator, ito_path, sample_driver
from pathmild.operator_family import CoefficientRecipe, OperatorFamily, build_family
from pathmild.oracles import (
    bounded_A_residual,
    euler_maruyama,
    forward_mild,
    naive_convolution,
    scalar_exact,
    weak_residual,
)
from pathmild.pathwise_core import pathwise_mild, pathwise_solution
from pathmild.semilinear import Nonlinearity, make_nonlinearity


def test_em_with_zero_generator_is_brownian():
    tg = TimeGrid(1.0, 32)
    d = sample_driver(tg, 1, 0, 0)
    fam = OperatorFamily.constant([[0.0]], tg)
    nl = make_nonlinearity(noise="additive")
    for scheme in ("semi-implicit", "explicit"):
        U = euler_maruyama(fam, 0.5, nl, d, scheme)
        np.testing.assert_allclose(U.states[:, 0], 0.5 + d.W[:, 0], atol=1e-14)


def test_em_without_noise_follows_the_evolution():
    grid = SpatialGrid.on_interval(8, 1.0, "neumann-conormal")
    base = sample_driver(TimeGrid(1.0, 32), 8, 3, 0)
    u0 = np.cos(np.pi * grid.x)
    errs = []
    for N in (32, 128):
        d = base.refined_to(N)
        family = build_family(d, grid)
        U = euler_maruyama(family, u0, None, d)
        errs.append(np.abs(U.states - EvolutionOracle(family).trajectory(u0)).max())
    assert errs[1] < errs[0] and errs[1] < 0.02


def test_explicit_em_blows_up():
    grid = SpatialGrid.on_interval(32, 1.0, "neumann-conormal")
    d = sample_driver(TimeGrid(1.0, 64), 1, 0, 0)
    with pytest.raises(InstabilityError):
        euler_maruyama(build_family(d, grid), np.ones(32), None, d, "explicit")


def test_scalar_exact_examples():
    d = sample_driver(TimeGrid(1.0, 32), 1, 0, 0)
    assert not scalar_exact(np.full(33, -1.0), 0.0, d).states.any()
    np.testing.assert_allclose(scalar_exact(np.zeros(33), 2.0, d).states[:, 0], 2 * d.W[:, 0],
                               atol=1e-14)
    with pytest.raises(ShapeError):
        scalar_exact(np.zeros(33), 1.0, sample_driver(TimeGrid(1.0, 32), 2, 0, 0))


def test_bounded_residual_vanishes_without_drift():
    tg = TimeGrid(1.0, 32)
    d = sample_driver(tg, 1, 0, 0)
    fam = OperatorFamily.constant([[0.0]], tg)
    G = NoiseOperator.scalar(1.0)
    U = pathwise_solution(EvolutionOracle(fam), G, d)
    assert bounded_A_residual(U, fam, G, d) < 1e-14
    assert bounded_A_residual(np.zeros(33), fam, G.scaled(0), d) == 0.0


def test_bounded_residual_decreases_under_refinement():
    grid = SpatialGrid(1, 1.0)
    recipe = CoefficientRecipe(kappa0=1.0, kappa1=0.9, a0=0.0)
    G = NoiseOperator.scalar(1.0)
    res = []
    for N in (64, 256, 1024):
        vals = []
        for p in range(10):
            d = sample_driver(TimeGrid(1.0, 64), 1, 5, p).refined_to(N)
            fam = build_family(d, grid, recipe)
            vals.append(bounded_A_residual(pathwise_solution(EvolutionOracle(fam), G, d),
                                           fam, G, d))
        res.append(np.median(vals))
    assert res[0] > res[1] > res[2]


def test_weak_residual_of_em_is_small(heat):
    _, driver, family, _, G = heat
    U = euler_maruyama(family, np.zeros(8), None, driver, G=G)
    assert weak_residual(U, family, G, driver, np.ones(8) / 8) < 0.1
    with pytest.raises(ValueError):
        weak_residual(U, family, G, driver, np.zeros(8))


def test_weak_residual_of_free_evolution_is_quadrature_error():
    grid = SpatialGrid.on_interval(8, 1.0, "neumann-conormal")
    res = []
    for N in (32, 64):
        d = sample_driver(TimeGrid(1.0, N), 8, 0, 0)
        fam = build_family(d, grid)
        u0 = np.cos(np.pi * grid.x)
        U = EvolutionOracle(fam).trajectory(u0)
        res.append(weak_residual(U, fam, NoiseOperator.constant(np.zeros((8, 8))), d,
                                 np.cos(np.pi * grid.x), u0))
    assert res[1] < res[0]


def test_weak_residual_of_pathwise_solution_decreases():
    grid = SpatialGrid.on_interval(8, 1.0, "neumann-conormal")
    G = NoiseOperator.constant(np.eye(8))
    x = np.random.default_rng(1).normal(size=8)
    res = []
    for N in (64, 256, 1024):
        vals = []
        for p in range(5):
            d = sample_driver(TimeGrid(1.0, 64), 8, 2, p).refined_to(N)
            fam = build_family(d, grid)
            vals.append(weak_residual(pathwise_solution(EvolutionOracle(fam), G, d), fam, G, d, x))
        res.append(np.median(vals))
    assert res[0] > res[1] > res[2]


def test_forward_mild_examples():
    N = 256
    A = -np.diag([1.0, 3.0])
    tg = TimeGrid(1.0, N)
    o = EvolutionOracle(OperatorFamily.constant(A, tg))
    G = NoiseOperator.constant(np.eye(2))
    d = sample_driver(tg, 2, 0, 0)
    assert not forward_mild(o, G.scaled(0), d, N, 16).any()
    errs = []
    for n in (N / 32, N / 8, N / 2):
        vals = []
        for p in range(50):
            d = sample_driver(tg, 2, 0, p)
            classical = naive_convolution(o, G, d)
            vals.append(np.linalg.norm(forward_mild(o, G, d, N, n) - classical)
                        / np.linalg.norm(classical))
        errs.append(np.median(vals))
    assert errs[0] > errs[1] > errs[2]


def test_naive_convolution_is_not_adapted(heat):
    grid, driver, _, _, G = heat
    k = 10
    other = driver.rerandomize_after(k + 1, seed=3)
    o1 = EvolutionOracle(build_family(driver, grid))
    o2 = EvolutionOracle(build_family(other, grid))
    assert not np.array_equal(naive_convolution(o1, G, driver, upto=k),
                              naive_convolution(o2, G, other, upto=k))
    with pytest.raises(OrderingError):
        naive_convolution(o1, G, driver, upto=20, t_idx=10)


def test_naive_convolution_matches_pathwise_for_deterministic_generator():
    tg = TimeGrid(1.0, 512)
    o = EvolutionOracle(OperatorFamily.constant(-np.diag([1.0, 5.0]), tg))
    G = NoiseOperator.constant(np.eye(2))
    d = sample_driver(tg, 2, 0, 0)
    a, b = pathwise_mild(o, G, d), naive_convolution(o, G, d)
    assert np.linalg.norm(a - b) < 0.05 * np.linalg.norm(b)
