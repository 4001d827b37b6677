import cmath
import math

import numpy as np
import pytest

from cflrh.fields import GaussianSpec, sample_exact
from cflrh.matrix import Involution, cofactor_matrix, det3, sigma_conjugate
from cflrh.spectral import (CONTOURS, SQRT_HALF, FieldSource, SingularityError, adjugate_check,
                            assemble_Sn, big_theta, born_s, bounded_columns, c_function,
                            classify_domain, compute_Mn, decomposition, decomposition_bruteforce,
                            denominators, domain_index, integrate_mu, l_values, mu_row,
                            scattering_record, spectral_point, spectral_s, spectral_S, z_values)
from cflrh.suites import random_unimodular, zero_grid

LAM1 = 0.9 * cmath.exp(0.15j)  # D1, small kernel growth on the default grids
LAMS = [0.9 * cmath.exp(0.15j), 0.5 * cmath.exp(0.5j), 0.5 * cmath.exp(2.1j), 0.9 * cmath.exp(3.0j)]


@pytest.fixture(scope="module")
def zgrid():
    return zero_grid(4.0, 1.0, 33, 17)


# --- domains ---------------------------------------------------------------

@pytest.mark.parametrize("lam, region", [
    (cmath.exp(1j * math.pi / 4), "D1"),
    (0.3 * cmath.exp(3j * math.pi / 4), "D3"),
    (SQRT_HALF * cmath.exp(1j * math.pi / 4), "Boundary"),
    (0.5 * cmath.exp(1j * math.pi / 4), "D2"),
    (2 * cmath.exp(3j * math.pi / 4), "D4"),
    (-1.0 - 1.0j, "D1"),
    (0.8, "Boundary"),
    (0.8j, "Boundary"),
])
def test_classify_examples(lam, region):
    assert classify_domain(lam) == region


def test_classify_rejects_zero():
    with pytest.raises(ValueError):
        classify_domain(0)


def test_domain_inequalities():
    # Re l1 < Re l2 exactly on D1, D2; Re z1 < Re z2 exactly on D1, D3
    rng = np.random.default_rng(1)
    for _ in range(500):
        lam = rng.uniform(0.05, 3) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        sp = spectral_point(lam)
        if sp.region == "Boundary":
            continue
        l, z = l_values(lam), z_values(lam)
        n = domain_index(sp.region)
        assert (l[0].real < l[1].real) == (n in (1, 2))
        assert (z[0].real < z[1].real) == (n in (1, 3))


def test_bounded_columns_table():
    d1, d2 = 2 * cmath.exp(0.5j), 0.5 * cmath.exp(0.5j)
    d3, d4 = 0.5 * cmath.exp(2.0j), 2 * cmath.exp(2.0j)
    # mu_1: (D2, D3, D3); mu_2: (D1, D4, D4); mu_3: (D3 u D4, D1 u D2, D1 u D2)
    assert bounded_columns(1, d2)[0] and bounded_columns(1, d3)[1:] == (True, True)
    assert not bounded_columns(1, d1)[0] and bounded_columns(1, d1)[1:] == (False, False)
    assert bounded_columns(2, d1)[0] and bounded_columns(2, d4)[1:] == (True, True)
    assert not bounded_columns(2, d2)[0]
    for lam in (d3, d4):
        assert bounded_columns(3, lam) == (True, False, False)
    for lam in (d1, d2):
        assert bounded_columns(3, lam) == (False, True, True)


# --- eigenfunctions -------------------------------------------------------

def test_zero_fields_identity(zgrid):
    I = np.eye(3)
    for lam in (LAM1, 2 * cmath.exp(2.0j)):
        for j in (1, 2, 3):
            rec = integrate_mu(j, lam, zgrid, [(1.0, 0.5), (2.0, 0.25)])
            adm = list(rec.admissible)
            assert np.all(rec.values[..., adm] == I[:, adm])
        assert np.all(spectral_s(zgrid, lam) == I)
        assert np.all(spectral_S(zgrid, lam) == I)
        assert np.all(c_function(zgrid, lam) == I)


def test_determinant_and_basepoint(gauss_grid):
    for lam in LAMS:
        for j in (1, 2, 3):
            rec = mu_row(j, lam, gauss_grid, 0.5)
            assert np.max(np.abs(det3(rec.values) - 1)) <= 1e-8
    bp = integrate_mu(2, LAM1, gauss_grid, [(0.0, 0.0)])
    assert np.all(bp.values[0] == np.eye(3))


def test_path_independence(gauss_grid):
    pts = [(1.0, 0.25), (3.0, 0.5), (5.0, 0.75)]
    for lam in LAMS:
        a = integrate_mu(2, lam, gauss_grid, pts).values
        b = integrate_mu(2, lam, gauss_grid, pts, variant="alt").values
        assert np.max(np.abs(a - b)) <= 1e-6


def test_inadmissible_columns_are_masked(gauss_grid):
    lam = 2 * cmath.exp(1j * math.pi / 4)
    rec = integrate_mu(3, lam, gauss_grid, [(0.0, 0.0)])
    assert rec.admissible == (False, True, True)
    assert np.all(np.isnan(rec.values[0][:, 0]))
    assert np.all(np.isfinite(rec.values[0][:, 1:]))


def test_integrate_mu_rejects_bad_input(gauss_grid):
    with pytest.raises(ValueError):
        integrate_mu(4, LAM1, gauss_grid, [(0.0, 0.0)])
    with pytest.raises(ValueError):
        integrate_mu(2, LAM1, gauss_grid, [(0.01, 0.0)])


def test_symmetry_epsilon_plus(gauss_grid):
    A = Involution(1.0).matrix
    for lam in LAMS:
        for j in (1, 2, 3):
            a = integrate_mu(j, lam, gauss_grid, [(3.0, 0.5)]).values[0]
            b = integrate_mu(j, np.conj(lam), gauss_grid, [(3.0, 0.5)]).values[0]
            assert np.max(np.abs(np.linalg.inv(a) - A @ b.conj().T @ A)) <= 1e-6


def test_relation_mu3_mu2_s(gauss_grid):
    for lam in LAMS[:2]:
        s, S = spectral_s(gauss_grid, lam), spectral_S(gauss_grid, lam)
        for x, t in [(1.0, 0.25), (3.0, 0.5), (5.0, 0.75)]:
            th = big_theta(x, t, lam)
            m1, m2, m3 = (integrate_mu(j, lam, gauss_grid, [(x, t)]).values[0] for j in (1, 2, 3))
            assert np.max(np.abs(m3 - m2 @ sigma_conjugate(th, s))) <= 1e-6
            assert np.max(np.abs(m1 - m2 @ sigma_conjugate(th, S))) <= 1e-6


def test_born_regime():
    lam, L = LAM1, 8.0
    errs = []
    for delta in (1e-3, 2e-3):
        src = FieldSource(sample_exact(GaussianSpec(delta, 0.5 * delta), L, 1.0, 513, 1))
        s = spectral_s(src, lam)
        errs.append(np.linalg.norm(s - np.eye(3) - born_s(src.row(0), lam, L)))
    assert errs[0] <= 10 * 1e-6
    assert math.log2(errs[1] / errs[0]) >= 1.8


def test_adjugate(zgrid, pw):
    rec = mu_row(2, LAM1, zgrid, 0.5)
    assert adjugate_check(rec, data=zgrid) == 0.0
    res = []
    for n in (129, 257):
        g = sample_exact(pw, 4.0, 1.0, n, 17)
        rec = mu_row(2, LAM1, g, 0.5)
        adj = cofactor_matrix(rec.values)
        assert np.max(np.abs(np.swapaxes(adj, -1, -2) - np.linalg.inv(rec.values))) <= 1e-8
        res.append(adjugate_check(rec, data=g))
    assert math.log2(res[0] / res[1]) >= 1.8


def test_adjugate_needs_row_record(gauss_grid):
    with pytest.raises(ValueError):
        adjugate_check(integrate_mu(2, LAM1, gauss_grid, [(1.0, 0.5)]), data=gauss_grid)


# --- S_n ------------------------------------------------------------------

def test_sn_identity():
    for n in (1, 2, 3, 4):
        assert np.allclose(assemble_Sn(np.eye(3), np.eye(3), n), np.eye(3), atol=0)


def test_sn_n1_structure():
    rng = np.random.default_rng(3)
    s, S = random_unimodular(rng, 2)
    S1 = assemble_Sn(s, S, 1)
    assert np.all(S1[:, 0] == s[:, 0])
    m33 = s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0]
    assert S1[1, 1] == pytest.approx(m33 / s[0, 0], rel=1e-14)


def test_sn_bruteforce_and_pattern():
    rng = np.random.default_rng(42)
    for s, S in zip(random_unimodular(rng, 20), random_unimodular(rng, 20)):
        for n in (1, 2, 3, 4):
            Sn = assemble_Sn(s, S, n)
            assert np.max(np.abs(Sn - decomposition_bruteforce(s, S, n))) <= 1e-10 * max(1, np.abs(Sn).max())
            R, _, T = decomposition(s, S, n)
            for i in range(3):
                for j in range(3):
                    g = CONTOURS[n][i][j]
                    if g == 3:
                        assert abs(T[i, j] - (i == j)) <= 1e-10
                    elif g == 1:
                        assert abs(R[i, j]) <= 1e-10
                    else:
                        assert Sn[i, j] == 0


def test_sn_singular():
    s = np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 1]], dtype=complex)
    with pytest.raises(SingularityError, match="s11"):
        assemble_Sn(s, np.eye(3), 1)
    assert denominators(s, np.eye(3))["s11"] == 0


# --- M_n --------------------------------------------------------------------

def test_mn_zero_fields(zgrid):
    for lam in LAMS:
        n = domain_index(classify_domain(lam))
        for method in ("product", "local", "bvp"):
            assert np.allclose(compute_Mn(1.0, 0.5, lam, n, zgrid, method), np.eye(3), atol=1e-15)


def test_mn_at_origin_and_methods(gauss_grid):
    for lam in LAMS:
        n = domain_index(classify_domain(lam))
        rec = scattering_record(gauss_grid, lam)
        assert np.max(np.abs(compute_Mn(0.0, 0.0, lam, n, gauss_grid, "bvp") - rec.Sn[n])) <= 1e-6
        assert np.max(np.abs(compute_Mn(0.0, 0.0, lam, n, gauss_grid, "product") - rec.Sn[n])) <= 1e-12
        a = compute_Mn(2.0, 0.5, lam, n, gauss_grid, "product")
        b = compute_Mn(2.0, 0.5, lam, n, gauss_grid, "local")
        assert np.max(np.abs(a - b)) <= 1e-5


def test_mn_unknown_method(zgrid):
    with pytest.raises(ValueError):
        compute_Mn(0.0, 0.0, LAM1, 1, zgrid, "magic")
