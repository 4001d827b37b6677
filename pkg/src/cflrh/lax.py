"""Lax-pair matrices for the coupled Fokas-Lenells system and the plane-wave family.

    psi_x = X psi,   X = i lam^2 sigma + lam Q
    psi_t = T psi,   T = 2i k^2 sigma + 2 lam Q + i V0 + i V_{-1} / lam,   k = lam - 1/(2 lam)

Every builder accepts scalars or equal-shape arrays and returns (..., 3, 3).
"""
from dataclasses import dataclass

import numpy as np

from .matrix import SIGMA, commutator


@dataclass
class FieldSample:
    q: complex
    r: complex
    qx: complex
    rx: complex


def _check_lambda(lam):
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam == 0):
        raise ValueError("spectral parameter lambda must be nonzero")
    return lam


def k_of_lambda(lam):
    lam = _check_lambda(lam)
    return lam - 0.5 / lam


def _zeros_like(*vals):
    shape = np.broadcast(*[np.asarray(v) for v in vals]).shape
    return np.zeros(shape + (3, 3), dtype=complex)


def build_Q(f):
    qx, rx = np.asarray(f.qx, dtype=complex), np.asarray(f.rx, dtype=complex)
    m = _zeros_like(qx, rx)
    m[..., 0, 1] = qx
    m[..., 0, 2] = rx
    m[..., 1, 0] = np.conj(qx)
    m[..., 2, 0] = np.conj(rx)
    return m


def build_V0(f):
    q, r = np.asarray(f.q, dtype=complex), np.asarray(f.r, dtype=complex)
    m = _zeros_like(q, r)
    aq, ar = np.abs(q) ** 2, np.abs(r) ** 2
    m[..., 0, 0] = -aq - ar
    m[..., 1, 1] = aq
    m[..., 1, 2] = np.conj(q) * r
    m[..., 2, 1] = q * np.conj(r)
    m[..., 2, 2] = ar
    return m


def build_Vminus1(f):
    q, r = np.asarray(f.q, dtype=complex), np.asarray(f.r, dtype=complex)
    m = _zeros_like(q, r)
    m[..., 0, 1] = q
    m[..., 0, 2] = r
    m[..., 1, 0] = -np.conj(q)
    m[..., 2, 0] = -np.conj(r)
    return m


def _lam_b(lam, m):
    return np.asarray(lam)[..., None, None] * np.ones_like(m)


def lax_X(f, lam):
    lam = _check_lambda(lam)
    Q = build_Q(f)
    lb = _lam_b(lam, Q)
    return 1j * lb ** 2 * SIGMA + lb * Q


def lax_U2(f, lam):
    """Part of T beyond 2i k^2 sigma: 2 lam Q + i V0 + i V_{-1} / lam."""
    lam = _check_lambda(lam)
    Q = build_Q(f)
    lb = _lam_b(lam, Q)
    return 2 * lb * Q + 1j * build_V0(f) + 1j * build_Vminus1(f) / lb


def lax_T(f, lam):
    # 2i lam^2 sigma - 2i sigma + (i/2) lam^-2 sigma collapses to 2i k^2 sigma
    lam = _check_lambda(lam)
    return 2j * k_of_lambda(lam) ** 2 * SIGMA + lax_U2(f, lam)


def curvature(f, lam, qxt, rxt, qxx, rxx):
    """X_t - T_x + [X, T] given the mixed and second x-derivatives at the sample."""
    lam = _check_lambda(lam)
    X, T = lax_X(f, lam), lax_T(f, lam)
    lb = _lam_b(lam, X)
    Xt = lb * build_Q(FieldSample(0, 0, qxt, rxt))
    # derivative of V0 and V_{-1}: both are sesquilinear / linear in (q, r)
    q, r, qx, rx = (np.asarray(v, dtype=complex) for v in (f.q, f.r, f.qx, f.rx))
    dV0 = _zeros_like(q, r)
    dq2, dr2 = 2 * np.real(np.conj(q) * qx), 2 * np.real(np.conj(r) * rx)
    dV0[..., 0, 0] = -dq2 - dr2
    dV0[..., 1, 1] = dq2
    dV0[..., 1, 2] = np.conj(qx) * r + np.conj(q) * rx
    dV0[..., 2, 1] = qx * np.conj(r) + q * np.conj(rx)
    dV0[..., 2, 2] = dr2
    dVm = build_Vminus1(FieldSample(qx, rx, 0, 0))
    Tx = 2 * lb * build_Q(FieldSample(0, 0, qxx, rxx)) + 1j * dV0 + 1j * dVm / lb
    return Xt - Tx + commutator(X, T)


@dataclass(frozen=True)
class PlaneWave:
    """Exact solution q = a e^{i(kappa x - omega t)}, r = b e^{i(kappa x - omega t)}."""
    a: complex
    b: complex
    kappa: float

    def __post_init__(self):
        if self.kappa == 0:
            raise ValueError("plane wave needs kappa != 0")

    @property
    def omega(self):
        k = self.kappa
        return -2 * k - 4 + 2 * (abs(self.a) ** 2 + abs(self.b) ** 2) - 2 / k

    def phase(self, x, t):
        return np.exp(1j * (self.kappa * np.asarray(x) - self.omega * np.asarray(t)))

    def sample(self, x, t):
        e = self.phase(x, t)
        ik = 1j * self.kappa
        return FieldSample(self.a * e, self.b * e, ik * self.a * e, ik * self.b * e)

    def derivatives(self, x, t):
        """Returns (qxt, rxt, qxx, rxx)."""
        e = self.phase(x, t)
        kw = self.kappa * self.omega
        kk = -self.kappa ** 2
        return kw * self.a * e, kw * self.b * e, kk * self.a * e, kk * self.b * e


def plane_wave(a, b, kappa):
    return PlaneWave(complex(a), complex(b), float(kappa))


def _central(line, h, reach):
    """Centered derivative at the middle of ``line`` from symmetric differences (exact on constants)."""
    m = line.shape[0] // 2
    d1 = line[m + 1] - line[m - 1]
    if reach >= 2:
        return (8 * d1 - (line[m + 2] - line[m - 2])) / (12 * h)
    return d1 / (2 * h)


def zero_curvature_residual(grid, lam, i, j, analytic=None):
    """Frobenius norm of X_t - T_x + [X, T] at grid node (i, j).

    Uses analytic derivatives when the grid carries an exact family (or
    ``analytic=True``), otherwise centered differences: fourth order where a
    five-point stencil fits in both directions, second order otherwise.
    """
    lam = complex(_check_lambda(lam))
    nx, nt = grid.q.shape
    if not (0 < i < nx - 1 and 0 < j < nt - 1):
        raise ValueError(f"node ({i}, {j}) has no centered stencil")
    exact = getattr(grid, "exact", None)
    if analytic is None:
        analytic = exact is not None
    x, t = grid.x[i], grid.t[j]
    f = FieldSample(grid.q[i, j], grid.r[i, j], grid.qx[i, j], grid.rx[i, j])
    if analytic:
        if exact is None:
            raise ValueError("analytic derivatives requested but grid has no exact family")
        return float(np.linalg.norm(curvature(f, lam, *exact.derivatives(x, t))))
    reach = min(i, nx - 1 - i, j, nt - 1 - j, 2)
    offs = np.arange(-reach, reach + 1)
    dx, dt = grid.x[1] - grid.x[0], grid.t[1] - grid.t[0]
    Tline = lax_T(FieldSample(grid.q[i + offs, j], grid.r[i + offs, j],
                              grid.qx[i + offs, j], grid.rx[i + offs, j]), lam)
    Xline = lax_X(FieldSample(grid.q[i, j + offs], grid.r[i, j + offs],
                              grid.qx[i, j + offs], grid.rx[i, j + offs]), lam)
    Tx = _central(Tline, dx, reach)
    Xt = _central(Xline, dt, reach)
    X, T = lax_X(f, lam), lax_T(f, lam)
    return float(np.linalg.norm(Xt - Tx + commutator(X, T)))
