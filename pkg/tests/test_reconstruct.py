import math

import numpy as np
import pytest

from cflrh.fields import sample_exact
from cflrh.reconstruct import (VALIDATED_SIGN, RayError, closure_report, integrate_x, ray,
                               recover_derivatives, recover_ray, richardson)
from cflrh.suites import zero_grid

RAY = ray(math.pi / 4)


@pytest.fixture(scope="module")
def pw_fine(pw):
    return sample_exact(pw, 4.0, 1.0, 257, 257)


def test_plane_wave_recovery(pw, pw_fine):
    qx, rx = recover_derivatives(1.0, 0.5, RAY, pw_fine)
    ex = pw.sample(1.0, 0.5)
    assert abs(qx - ex.qx) <= 0.01 * abs(ex.qx)
    assert abs(rx - ex.rx) <= 0.01 * abs(ex.rx)


def test_sign_is_determined(pw, pw_fine):
    ex = pw.sample(1.0, 0.5)
    wrong, _ = recover_derivatives(1.0, 0.5, RAY, pw_fine, sign=-VALIDATED_SIGN)
    assert abs(wrong - ex.qx) > 1.5 * abs(ex.qx)


def test_plane_wave_other_quadrant(pw, pw_fine):
    # Im lam^2 < 0: integrated from x = 0 instead
    qx, _ = recover_derivatives(1.0, 0.5, ray(3 * math.pi / 4), pw_fine)
    assert abs(qx - pw.sample(1.0, 0.5).qx) <= 0.01 * abs(pw.sample(1.0, 0.5).qx)


def test_gaussian_closure(gauss_grid):
    pts = [(3.0, 0.25), (4.0, 0.5), (5.0, 0.75)]
    rep = closure_report(gauss_grid, pts)
    assert rep.max_rel_err <= 0.02
    assert np.all(np.abs(rep.decay_exponents - 1) <= 0.2)


def test_decay_and_correction_exponents(pw_fine):
    res = recover_ray(pw_fine, 1.0, 0.5, RAY)
    assert abs(res.decay_exponent - 1) <= 0.2
    assert res.correction_exponent >= 1.8
    assert res.contracting


def test_zero_fields():
    z = zero_grid(4.0, 1.0, 65, 33)
    qx, rx = recover_derivatives(1.0, 0.5, RAY, z)
    assert qx == 0 and rx == 0


def test_ray_errors(pw_fine):
    with pytest.raises(RayError):
        recover_ray(pw_fine, 1.0, 0.5, [4.0, 8.0, 16.0])  # real lambda: Im lam^2 = 0
    with pytest.raises(RayError):
        recover_ray(pw_fine, 1.0, 0.5, RAY[::-1])
    with pytest.raises(RayError):
        recover_ray(pw_fine, 1.0, 0.5, ray(0.5, (1, 2, 4)))
    with pytest.raises(RayError):
        recover_ray(pw_fine, 1.0, 0.5, [RAY[0], RAY[1] * 1j, RAY[2]])


def test_richardson_exact_on_quadratics():
    h = np.array([0.25, 0.125, 0.0625])
    v = np.stack([3 + 2 * h - 5 * h ** 2, 1j - h ** 2], axis=1)
    assert np.allclose(richardson(h, v, 2), [3, 1j], atol=1e-12)
    with pytest.raises(RayError):
        richardson(h[:2], v[:2], 2)


def test_integrate_x_round_trip(pw):
    errs = []
    for n in (65, 129, 257):
        g = sample_exact(pw, 4.0, 1.0, n, 3)
        q = integrate_x(g.qx[:, 1], g.q[0, 1], g.dx)
        errs.append(np.max(np.abs(q - g.q[:, 1])))
    assert errs[-1] <= 1e-6
    assert math.log2(errs[0] / errs[1]) >= 1.9
    # even count falls back to the trapezoid rule
    g = sample_exact(pw, 4.0, 1.0, 128, 3)
    assert np.max(np.abs(integrate_x(g.qx[:, 0], g.q[0, 0], g.dx) - g.q[:, 0])) <= 1e-3


def test_report_csv(tmp_path, pw_fine):
    rep = closure_report(pw_fine, [(1.0, 0.5)])
    path = tmp_path / "rec.csv"
    rep.to_csv(path, ["schema_version=1"])
    text = path.read_text().splitlines()
    assert text[0].startswith("#")
    assert len([l for l in text if not l.startswith("#")]) == 2
    assert rep.summary()["max_rel_err"] == pytest.approx(rep.max_rel_err)


def test_integrate_x_examples(pw):
    assert np.all(integrate_x(np.zeros(9), 0.5 + 1j, 0.1) == 0.5 + 1j)
    x = np.linspace(0, 4, 257)
    q = integrate_x(1j * pw.kappa * pw.a * np.exp(1j * pw.kappa * x), pw.a, x[1] - x[0])
    assert np.max(np.abs(q - pw.a * np.exp(1j * pw.kappa * x))) <= (x[1] - x[0]) ** 2


def test_closure_integrates_q(pw_fine, gauss_grid):
    rep = closure_report(pw_fine, [(1.0, 0.5), (2.0, 0.25)])
    assert rep.max_rel_err <= 0.01
    assert np.max(rep.rel_err_qint) <= 0.01 and np.max(rep.rel_err_rint) <= 0.01
    rep = closure_report(gauss_grid, [(4.0, 0.5)])
    assert np.max(rep.rel_err_qint) <= 0.02 and np.max(rep.rel_err_rint) <= 0.02
    assert rep.summary()["max_rel_err_integrated"] <= 0.02


def test_closure_zero_fields():
    rep = closure_report(zero_grid(4.0, 1.0, 65, 33), [(1.0, 0.5)])
    assert rep.max_rel_err == 0 and np.all(rep.recovered_q == 0)


def test_ray_direction_independence(pw, pw_fine):
    a = recover_derivatives(1.0, 0.5, ray(math.pi / 4), pw_fine)
    b = recover_derivatives(1.0, 0.5, ray(math.pi / 3), pw_fine)
    assert abs(a[0] - b[0]) <= 0.01 * abs(pw.sample(1.0, 0.5).qx)
