import numpy as np
import pytest

from cflrh.fields import FieldGrid
from cflrh.lax import (FieldSample, build_Q, build_V0, build_Vminus1, k_of_lambda, lax_T, lax_X,
                       plane_wave, zero_curvature_residual)
from cflrh.matrix import SIGMA
from cflrh.suites import DetunedWave


def zero_sample():
    return FieldSample(0j, 0j, 0j, 0j)


def test_k_of_lambda():
    assert k_of_lambda(1) == pytest.approx(0.5)
    assert k_of_lambda(1 + 1j) == pytest.approx(0.75 + 1.25j)
    lam = np.exp(0.7j) / np.sqrt(2)
    assert abs(k_of_lambda(lam).real) < 1e-15
    with pytest.raises(ValueError):
        k_of_lambda(0)


def test_build_Q_pattern():
    assert not np.any(build_Q(zero_sample()))
    Q = build_Q(FieldSample(0j, 0j, 1 + 0j, 2j))
    ref = np.zeros((3, 3), complex)
    ref[0, 1], ref[0, 2], ref[1, 0], ref[2, 0] = 1, 2j, 1, -2j
    np.testing.assert_array_equal(Q, ref)


def test_build_V0_pattern():
    assert not np.any(build_V0(zero_sample()))
    assert not np.any(build_Vminus1(zero_sample()))
    V0 = build_V0(FieldSample(1 + 0j, 1j, 0j, 0j))
    assert V0[1, 2] == pytest.approx(1j)
    assert V0[2, 1] == pytest.approx(-1j)
    np.testing.assert_allclose(np.diag(V0), [-2, 1, 1])


def test_X_T_zero_fields():
    np.testing.assert_array_equal(lax_X(zero_sample(), 1.0), 1j * SIGMA)
    lam = 0.8 + 0.3j
    np.testing.assert_array_equal(lax_T(zero_sample(), lam), 2j * k_of_lambda(lam) ** 2 * SIGMA)


def test_hermitian_structure():
    f = FieldSample(0.3 + 0.1j, -0.2j, 0.5, 0.1 + 0.4j)
    Q, V0, V1 = build_Q(f), build_V0(f), build_Vminus1(f)
    np.testing.assert_allclose(Q, Q.conj().T)
    np.testing.assert_allclose(V0, V0.conj().T)
    np.testing.assert_allclose(V1, -V1.conj().T)


def test_dispersion_examples():
    assert plane_wave(0, 0, 1.0).omega == pytest.approx(-8)
    assert plane_wave(0, 0, -1.0).omega == pytest.approx(0)
    assert plane_wave(1, 0, 1.0).omega == pytest.approx(-6)


def test_zero_curvature_plane_wave(pw_grid):
    for lam in (1 + 1j, 0.3 - 0.2j, -1.5 + 0.1j):
        assert zero_curvature_residual(pw_grid, lam, 40, 30) <= 1e-10


def test_zero_curvature_zero_fields():
    x, t = np.linspace(0, 1, 9), np.linspace(0, 1, 9)
    z = np.zeros((9, 9), complex)
    g = FieldGrid(x, t, z, z, z, z, meta={})
    assert zero_curvature_residual(g, 0.7 + 0.2j, 4, 4) == 0.0


def test_zero_curvature_negative_controls(pw):
    from cflrh.fields import sample_exact
    bad = sample_exact(DetunedWave(pw.a, pw.b, pw.kappa), 4.0, 1.0, 33, 33)
    assert zero_curvature_residual(bad, 1 + 1j, 10, 10) >= 1e-2
    rng = np.random.default_rng(3)
    n = 17
    x, t = np.linspace(0, 1, n), np.linspace(0, 1, n)
    f = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(4)]
    g = FieldGrid(x, t, *f, meta={})
    assert zero_curvature_residual(g, 1 + 1j, 8, 8) >= 1e-2


def test_zero_curvature_boundary_node_rejected(pw_grid):
    with pytest.raises(ValueError):
        zero_curvature_residual(pw_grid, 1.0, 0, 5)
