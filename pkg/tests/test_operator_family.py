import numpy as np
import pytest

from pathmild.errors import ConfigurationError, InvertibilityError
from pathmild.grids import SpatialGrid, TimeGrid
from pathmild.noise import sample_driver
from pathmild.operator_family import (
    CoefficientField,
    CoefficientRecipe,
    OperatorFamily,
    assemble,
    build_family,
    cis_holder_constant,
    cis_running_quotient,
    kato_tanabe_constant,
    resolvent_bound,
    sample_coefficients,
    sector_probes,
)


def _field(a, a0, tg, n):
    K = tg.steps + 1
    return CoefficientField(np.full((K, n), a), np.full((K, n), a0), 1.0, (a, a))


def test_constant_recipe_gives_constant_field():
    tg = TimeGrid(1.0, 16)
    d = sample_driver(tg, 1, 0, 0)
    f = sample_coefficients(d, SpatialGrid.on_interval(8), tg, CoefficientRecipe(kappa1=0.0))
    assert np.all(f.a == 1.0)
    fam = assemble(f, tg, SpatialGrid.on_interval(8))
    assert cis_holder_constant(fam, 1.0) == 0.0


def test_default_recipe_respects_ellipticity_window():
    tg = TimeGrid(1.0, 64)
    g = SpatialGrid.on_interval(16, 1.0, "neumann-conormal")
    for p in range(5):
        f = sample_coefficients(sample_driver(tg, 1, 0, p), g, tg)
        assert f.a.min() >= 0.6 and f.a.max() <= 1.4
        assert f.ellipticity_holds()


def test_paths_give_different_fields_with_same_bounds():
    tg = TimeGrid(1.0, 64)
    g = SpatialGrid.on_interval(16)
    f0 = sample_coefficients(sample_driver(tg, 1, 0, 0), g, tg)
    f1 = sample_coefficients(sample_driver(tg, 1, 0, 1), g, tg)
    assert not np.array_equal(f0.a, f1.a)
    assert f0.bounds == f1.bounds


def test_non_elliptic_recipe_is_rejected():
    with pytest.raises(ConfigurationError):
        CoefficientRecipe(kappa0=0.5, kappa1=0.6)


def test_coefficients_are_adapted():
    tg = TimeGrid(1.0, 64)
    g = SpatialGrid.on_interval(8)
    d = sample_driver(tg, 1, 0, 0)
    r = d.rerandomize_after(20, seed=5)
    a, b = sample_coefficients(d, g, tg).a, sample_coefficients(r, g, tg).a
    assert np.array_equal(a[:21], b[:21])
    assert not np.array_equal(a, b)


def test_periodic_laplacian_stencil():
    tg = TimeGrid(1.0, 2)
    g = SpatialGrid(4, 1.0, "periodic")
    A = assemble(_field(1.0, 0.0, tg, 4), tg, g)[0]
    expected = np.array([[-2, 1, 0, 1], [1, -2, 1, 0], [0, 1, -2, 1], [1, 0, 1, -2]], float)
    np.testing.assert_array_equal(A, expected)


@pytest.mark.parametrize("bc", ["periodic", "neumann-conormal"])
def test_constants_are_in_the_kernel(bc):
    tg = TimeGrid(1.0, 2)
    g = SpatialGrid.on_interval(10, 1.0, bc)
    fam = assemble(_field(1.0, 0.0, tg, 10), tg, g)
    np.testing.assert_allclose(fam[1] @ np.ones(10), 0.0, atol=1e-12)


def test_a0_acts_on_constants():
    tg = TimeGrid(1.0, 2)
    g = SpatialGrid.on_interval(10, 1.0, "neumann-conormal")
    fam = assemble(_field(1.0, -1.5, tg, 10), tg, g)
    np.testing.assert_allclose(fam[0] @ np.ones(10), -1.5, atol=1e-12)


@pytest.mark.parametrize("bc", ["periodic", "neumann-conormal", "dirichlet"])
def test_divergence_part_is_symmetric_negative_semidefinite(bc):
    tg = TimeGrid(1.0, 16)
    g = SpatialGrid.on_interval(32, 1.0, bc)
    fam = build_family(sample_driver(tg, 1, 0, 0), g, CoefficientRecipe(a0=0.0))
    for A in fam.matrices:
        np.testing.assert_allclose(A, A.T, atol=1e-12)
        assert np.linalg.eigvalsh(0.5 * (A + A.T)).max() <= 1e-10


def test_positive_a0_triggers_shift():
    tg = TimeGrid(1.0, 4)
    g = SpatialGrid.on_interval(6, 1.0, "neumann-conormal")
    fam = assemble(_field(1.0, 2.0, tg, 6), tg, g)
    assert fam.shift == 3.0
    assert np.linalg.eigvalsh(fam[0]).max() < 0


def test_resolvent_of_minus_identity():
    tg = TimeGrid(1.0, 2)
    fam = OperatorFamily.constant([[-1.0]], tg)
    assert resolvent_bound(fam, [0.0]).bound == pytest.approx(1.0)
    assert resolvent_bound(fam, [1.0]).bound == pytest.approx(1.0)


def test_singular_resolvent_is_infinite():
    fam = OperatorFamily.constant([[0.0]], TimeGrid(1.0, 2))
    assert resolvent_bound(fam, [0.0]).bound == np.inf


def test_sector_probes_count_zero_once():
    pts = sector_probes()
    assert len(pts) == 10 and pts[0] == 0


def test_cis_constant_of_shifted_linear_scalar_family():
    tg = TimeGrid(1.0, 64)
    fam = OperatorFamily.scalar(lambda t: -(1 + t), tg)
    K = cis_holder_constant(fam, 1.0)
    assert 0.25 < K <= 1.0


def test_cis_constant_of_constant_family_is_zero():
    fam = OperatorFamily.constant(-np.eye(3) * 2, TimeGrid(1.0, 16))
    assert cis_holder_constant(fam, 1.0) == 0.0
    assert kato_tanabe_constant(fam, 1.0) == 0.0
    assert not cis_running_quotient(fam, 0.75).any()


def test_singular_family_raises_invertibility_error():
    fam = OperatorFamily.constant(np.zeros((2, 2)), TimeGrid(1.0, 4))
    with pytest.raises(InvertibilityError):
        cis_holder_constant(fam, 1.0)


def test_cis_constant_grows_with_kappa1():
    tg = TimeGrid(1.0, 64)
    g = SpatialGrid.on_interval(16, 1.0, "neumann-conormal")
    d = sample_driver(tg, 1, 0, 0)
    Ks = [cis_holder_constant(build_family(d, g, CoefficientRecipe(kappa1=k1)), 1.0)
          for k1 in (0.1, 0.2, 0.4)]
    assert all(np.isfinite(Ks)) and Ks[0] < Ks[1] < Ks[2]
    assert 1.5 < Ks[1] / Ks[0] < 2.5


def test_kato_tanabe_and_cis_both_finite_at_same_exponent():
    tg = TimeGrid(1.0, 64)
    g = SpatialGrid.on_interval(16, 1.0, "neumann-conormal")
    fam = build_family(sample_driver(tg, 1, 0, 0), g)
    assert np.isfinite(kato_tanabe_constant(fam, 1.0)) and kato_tanabe_constant(fam, 1.0) > 0
    assert np.isfinite(cis_holder_constant(fam, 1.0)) and cis_holder_constant(fam, 1.0) > 0


def test_frozen_and_transposed_families():
    tg = TimeGrid(1.0, 16)
    fam = build_family(sample_driver(tg, 1, 0, 0), SpatialGrid.on_interval(6))
    fr = fam.frozen_after(5)
    assert np.array_equal(fr.matrices[:6], fam.matrices[:6])
    assert all(np.array_equal(fr[k], fam[5]) for k in range(6, 17))
    np.testing.assert_array_equal(fam.transposed()[3], fam[3].T)
