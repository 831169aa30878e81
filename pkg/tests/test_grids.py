import numpy as np
import pytest

from fpalign.errors import ConfigError, GridMismatchError
from fpalign.grids import (TorusGrid, VelocityGrid, integrate, make_grids,
                           periodic_distance)


def test_make_grids_centers_and_spacings():
    g = make_grids(2 * np.pi, 4, 8.0, 8)
    assert g.x.dx == pytest.approx(np.pi / 2, abs=0)
    assert np.allclose(g.x.centers, [0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert g.v.dv == pytest.approx(2.0)
    assert np.allclose(g.v.centers, g.v.centers[::-1] * -1.0)  # exact symmetry


def test_dx_simple():
    assert TorusGrid(1.0, 10).dx == 0.1


@pytest.mark.parametrize("bad", [dict(length=2 * np.pi, nx=4, vmax=8, nv=7),
                                 dict(length=2 * np.pi, nx=3, vmax=8, nv=8),
                                 dict(length=-1.0, nx=8, vmax=8, nv=8),
                                 dict(length=1.0, nx=8, vmax=0.0, nv=8)])
def test_make_grids_rejects(bad):
    with pytest.raises(ConfigError):
        make_grids(bad["length"], bad["nx"], bad["vmax"], bad["nv"])


def test_length_snap_exact():
    for L, n in [(2 * np.pi, 128), (1.0, 10), (1.0, 6), (0.3, 7)]:
        g = TorusGrid(L, n)
        assert g.dx * n == g.length  # exact in floats by construction


def test_doubling_nx_halves_dx_exactly():
    for L in (2 * np.pi, 1.0, 0.3):
        for n in (8, 12, 48):
            assert TorusGrid(L, 2 * n).dx == TorusGrid(L, n).dx / 2.0


def test_periodic_distance_examples():
    assert periodic_distance(0.1, 0.9, 1.0) == pytest.approx(0.2, abs=1e-15)
    assert periodic_distance(0.37, 0.37, 2.0) == 0.0
    assert periodic_distance(0.0, 0.5, 1.0) == pytest.approx(0.5, abs=0)


def test_periodic_distance_symmetry_and_triangle():
    rng = np.random.default_rng(11)
    L = 2.5
    pts = rng.uniform(0, L, size=(60, 3))
    for x, y, z in pts:
        assert periodic_distance(x, y, L) == pytest.approx(
            periodic_distance(y, x, L), abs=1e-15)
        assert periodic_distance(x, z, L) <= (periodic_distance(x, y, L)
                                              + periodic_distance(y, z, L) + 1e-12)
        assert periodic_distance(x, y, L) <= L / 2 + 1e-15


def test_integrate_constant_and_sine():
    g = TorusGrid(2 * np.pi, 64)
    assert integrate(np.ones(64), g, "x") == pytest.approx(2 * np.pi, rel=1e-15)
    assert abs(integrate(np.sin(g.centers), g, "x")) < 1e-13


def test_integrate_matches_fine_grid_refinement():
    # Piecewise-constant profile: refining each cell 16x must reproduce the
    # coarse quadrature exactly (up to roundoff).
    rng = np.random.default_rng(3)
    coarse = TorusGrid(1.7, 16)
    field = rng.uniform(0.1, 2.0, size=16)
    fine = TorusGrid(1.7, 16 * 16)
    fine_field = np.repeat(field, 16)
    assert integrate(field, coarse, "x") == pytest.approx(
        integrate(fine_field, fine, "x"), abs=1e-12)


def test_integrate_linear():
    rng = np.random.default_rng(5)
    g = VelocityGrid(4.0, 32)
    f1 = rng.normal(size=32)
    f2 = rng.normal(size=32)
    a, b = 1.7, -0.3
    assert integrate(a * f1 + b * f2, g, "v") == pytest.approx(
        a * integrate(f1, g, "v") + b * integrate(f2, g, "v"), abs=1e-13)


def test_integrate_shape_mismatch():
    g = make_grids(1.0, 8, 1.0, 8)
    with pytest.raises(GridMismatchError):
        integrate(np.ones(9), g.x, "x")
    with pytest.raises(GridMismatchError):
        integrate(np.ones((8, 9)), g, "xv")
    with pytest.raises(ConfigError):
        integrate(np.ones(8), g.x, "y")


def test_phase_weight():
    g = make_grids(1.0, 10, 2.0, 8)
    assert g.cell_weight == pytest.approx(0.1 * 0.5, rel=1e-15)
    assert integrate(np.ones((10, 8)), g, "xv") == pytest.approx(4.0, rel=1e-14)
