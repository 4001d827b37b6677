"""Riemann-Hilbert data: jumps, global relation, zeros of the spectral scalars, residues."""
from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

from .lax import k_of_lambda
from .matrix import SIGMA_DIAG, cofactor_matrix, minor, sigma_conjugate
from .spectral import (SQRT_HALF, as_source, assemble_Sn, big_theta, bounded_columns,
                       c_function, classify_domain, denominators, domain_index, spectral_S,
                       spectral_s)

WHICH_REGION = {"s11": 1, "sTSA11": 2, "STsA11": 3, "m11s": 4}
ADJACENT = {frozenset(p) for p in ((1, 2), (3, 4), (1, 4), (2, 3))}


class ContourError(ValueError):
    """lambda is not on the common boundary of the two domains."""


def theta(i, j, x, t, lam):
    """theta_ij = (sigma_i - sigma_j)(i lam^2 x + 2i k^2 t), so theta_31 = -theta_13 = 2 Theta."""
    if lam == 0:
        raise ValueError("lambda = 0")
    return (SIGMA_DIAG[i - 1] - SIGMA_DIAG[j - 1]) * big_theta(x, t, lam)


# ---------------------------------------------------------------------------
# jumps

@dataclass
class JumpRecord:
    m: int
    n: int
    contour_point: complex
    x: float
    t: float
    J: np.ndarray


def _near_boundary(lam, tol):
    r = abs(lam)
    return (abs(r - SQRT_HALF) <= tol or abs(lam.real) <= tol * max(1, r)
            or abs(lam.imag) <= tol * max(1, r))


def jump_matrix(m, n, x, t, lam, Sn, tol=1e-8):
    """J_{m,n} = e^{(i lam^2 x + 2i k^2 t) sigma-hat}(S_m^{-1} S_n) so that M_n = M_m J_{m,n}.

    ``Sn`` maps domain index to S_n(lam), e.g. ScatteringRecord.Sn.
    """
    lam = complex(lam)
    if frozenset((m, n)) not in ADJACENT:
        raise ContourError(f"D{m} and D{n} share no boundary arc")
    if not _near_boundary(lam, tol):
        raise ContourError(f"lambda = {lam} is off the contour")
    Sm = Sn[m]
    if Sm is None or abs(np.linalg.det(Sm)) < 1e-14:
        raise np.linalg.LinAlgError(f"S_{m} is singular")
    J = sigma_conjugate(big_theta(x, t, lam), np.linalg.solve(Sm, Sn[n]))
    return JumpRecord(m, n, lam, x, t, J)


def contour_samples(per_segment=16, r_inner=0.2, r_outer=2.0):
    """(m, n, lam) samples on every boundary arc.

    Quarter circles |lam| = 1/sqrt2 and, per quadrant-facing half axis, an inner
    segment [r_inner, 1/sqrt2] and an outer one [1/sqrt2, r_outer].  End points
    (where four domains meet) are excluded.
    """
    out = []
    u = (np.arange(per_segment) + 0.5) / per_segment
    arc_pairs = [(1, 2), (4, 3), (1, 2), (4, 3)]  # quadrants I..IV, (outer, inner)
    for q in range(4):
        for a in q * np.pi / 2 + u * np.pi / 2:
            out.append((*arc_pairs[q], SQRT_HALF * np.exp(1j * a)))
    for q in range(4):
        d = np.exp(1j * q * np.pi / 2)
        outer = (1, 4)
        inner = (2, 3)
        for r in r_inner + u * (SQRT_HALF - r_inner):
            out.append((*inner, r * d))
        for r in SQRT_HALF + u * (r_outer - SQRT_HALF):
            out.append((*outer, r * d))
    return out


def meeting_points():
    return [SQRT_HALF * np.exp(1j * q * np.pi / 2) for q in range(4)]


def cyclic_product(x, t, lam, Sn):
    J = np.eye(3, dtype=complex)
    for m, n in ((1, 2), (2, 3), (3, 4), (4, 1)):
        J = J @ jump_matrix(m, n, x, t, lam, Sn).J
    return J


# ---------------------------------------------------------------------------
# global relation

def global_relation_matrix(data, lam, **kw):
    """S^{-1} s - e^{-2i k^2 T sigma-hat} c(T)."""
    src = as_source(data)
    s = spectral_s(src, lam, **kw)
    S = spectral_S(src, lam, **kw)
    c = c_function(src, lam, **kw)
    k2 = k_of_lambda(lam) ** 2
    return np.linalg.solve(S, s) - sigma_conjugate(-2j * k2 * src.T_end, c)


def global_relation_residual(data, lam, columns=None, **kw):
    """Max column norm of the global-relation mismatch over the admissible columns.

    By default the admissible columns are those where the mu_3 kernels stay bounded.
    """
    lam = complex(lam)
    if columns is None:
        columns = [c for c, ok in enumerate(bounded_columns(3, lam), start=1) if ok]
    if not columns:
        raise ValueError(f"no admissible column at lambda = {lam}")
    R = global_relation_matrix(data, lam, **kw)
    return float(max(np.linalg.norm(R[:, c - 1]) for c in columns))


# ---------------------------------------------------------------------------
# zeros

@dataclass
class ZeroRecord:
    location: complex
    which: str
    multiplicity: int
    region: int


def spectral_scalar(which, s_fn, S_fn):
    """lam -> one of s11, (s^T S^A)_11, (S^T s^A)_11, m11(s)."""
    if which not in WHICH_REGION:
        raise ValueError(f"unknown scalar {which!r}")
    return lambda lam: denominators(s_fn(lam), S_fn(lam))[which]


def dlam(f, lam, h=None):
    """Fourth-order central difference in lambda."""
    h = 1e-4 * max(1.0, abs(lam)) if h is None else h
    return (f(lam - 2 * h) - 8 * f(lam - h) + 8 * f(lam + h) - f(lam + 2 * h)) / (12 * h)


def _edges(box):
    x0, x1, y0, y1 = box
    c = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    return [(c[i], c[(i + 1) % 4]) for i in range(4)]


def winding_number(f, box, fprime=None, eps=1e-12):
    """(1/2 pi i) * contour integral of f'/f over the box boundary."""
    fprime = fprime or (lambda z: dlam(f, z))
    total = 0j
    for a, b in _edges(box):
        def g(u, a=a, b=b):
            z = a + u * (b - a)
            fz = f(z)
            if abs(fz) < eps:
                raise ZeroDivisionError("f vanishes on the box boundary")
            w = fprime(z) / fz * (b - a)
            return np.array([w.real, w.imag])
        val, _ = quad_vec(g, 0.0, 1.0, epsabs=1e-9, epsrel=1e-9)
        total += val[0] + 1j * val[1]
    return total / (2j * np.pi)


def find_zeros(f, box, which="s11", region=None, tol=1e-6, max_depth=40, integer_tol=1e-3):
    """Locate the simple zeros of f inside box = (re_min, re_max, im_min, im_max)."""
    region = WHICH_REGION.get(which, 0) if region is None else region
    found = []

    def count(b):
        w = winding_number(f, b)
        n = round(w.real)
        if abs(w - n) > integer_tol:
            raise ArithmeticError(f"non-integral winding {w} on box {b}")
        return n

    def split(b):
        x0, x1, y0, y1 = b
        # off-centre cut lines avoid hitting a zero placed at a symmetric spot
        if x1 - x0 >= y1 - y0:
            xm = x0 + 0.4999 * (x1 - x0)
            return (x0, xm, y0, y1), (xm, x1, y0, y1)
        ym = y0 + 0.4999 * (y1 - y0)
        return (x0, x1, y0, ym), (x0, x1, ym, y1)

    def search(b, n, depth):
        if n == 0:
            return
        size = max(b[1] - b[0], b[3] - b[2])
        if n == 1 and size < 1e-2:
            found.append(_polish(f, b, tol))
            return
        if depth > max_depth:
            raise ArithmeticError("zero localisation did not converge")
        halves = split(b)
        n0 = count(halves[0])
        search(halves[0], n0, depth + 1)
        search(halves[1], n - n0, depth + 1)

    search(box, count(box), 0)
    return [ZeroRecord(z, which, 1, region) for z in found]


def _polish(f, box, tol):
    z = complex((box[0] + box[1]) / 2, (box[2] + box[3]) / 2)
    for _ in range(50):
        step = f(z) / dlam(f, z)
        z -= step
        if abs(step) < tol * 1e-3:
            break
    x0, x1, y0, y1 = box
    pad = max(x1 - x0, y1 - y0)
    if not (x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad):
        raise ArithmeticError("Newton polish left the localisation box")
    return z


# ---------------------------------------------------------------------------
# residues

def residue_eval(zero, x, t, s_fn, S_fn, mu2_fn):
    """Right-hand sides of the residue conditions at a simple zero.

    Returns {column: residue vector} -- columns 2 and 3 for zeros in D1, D2,
    column 1 for zeros in D3, D4.  ``mu2_fn(x, t, lam)`` gives mu_2.
    """
    if zero.multiplicity != 1:
        raise NotImplementedError("only simple zeros are supported")
    lj, n = complex(zero.location), zero.region
    s, S = s_fn(lj), S_fn(lj)
    fdot = dlam(spectral_scalar(zero.which, s_fn, S_fn), lj)
    if abs(fdot) < 1e-14:
        raise ZeroDivisionError("derivative vanishes at the zero")
    mu2 = mu2_fn(x, t, lj)
    e13 = np.exp(theta(1, 3, x, t, lj))
    e31 = np.exp(theta(3, 1, x, t, lj))
    m = lambda i, j: minor(s, i, j)
    M = lambda i, j: minor(S, i, j)
    if n in (1, 2):
        # column 1 of M_n at the zero: mu_2 e^{Theta sigma-hat} [s]_1
        col1 = (mu2 @ sigma_conjugate(big_theta(x, t, lj), s))[:, 0]
        if abs(s[1, 0]) < 1e-14:
            raise ZeroDivisionError("s21 vanishes at the zero")
        if n == 1:
            a2, a3 = m(3, 3), m(3, 2)
        else:
            a2 = m(3, 3) * M(1, 1) - m(1, 3) * M(3, 1)
            a3 = m(3, 2) * M(1, 1) - m(1, 2) * M(3, 1)
        return {2: a2 / (fdot * s[1, 0]) * e13 * col1, 3: a3 / (fdot * s[1, 0]) * e13 * col1}
    cols = (mu2 @ sigma_conjugate(big_theta(x, t, lj), s))
    c2, c3 = cols[:, 1], cols[:, 2]
    if n == 3:
        d = fdot * m(1, 1)
        if abs(m(1, 1)) < 1e-14:
            raise ZeroDivisionError("m11(s) vanishes at the zero")
        alpha = (s[2, 2] * S[1, 0] - s[1, 2] * S[2, 0]) / d
        beta = (s[1, 1] * S[2, 0] - s[2, 1] * S[1, 0]) / d
        return {1: e31 * (alpha * c2 + beta * c3)}
    if abs(m(2, 1)) < 1e-14:
        raise ZeroDivisionError("m21(s) vanishes at the zero")
    return {1: e31 * (s[2, 2] * c2 - s[2, 1] * c3) / (fdot * m(2, 1))}


def laurent_residue(fn, center, radius, n=64):
    """(1/2 pi i) * contour integral of fn over a circle (trapezoid rule)."""
    phi = 2 * np.pi * np.arange(n) / n
    z = center + radius * np.exp(1j * phi)
    vals = np.array([fn(zz) for zz in z])
    w = (radius * np.exp(1j * phi))[:, None] if vals.ndim == 2 else radius * np.exp(1j * phi)
    return np.mean(vals * w, axis=0)


def M_column(n, col, x, t, s_fn, S_fn, mu2_fn):
    """lam -> column ``col`` of M_n(x, t, lam) = mu_2 e^{Theta sigma-hat} S_n."""
    def fn(lam):
        Sn = assemble_Sn(s_fn(lam), S_fn(lam), n)
        return (mu2_fn(x, t, lam) @ sigma_conjugate(big_theta(x, t, lam), Sn))[:, col - 1]
    return fn


# ---------------------------------------------------------------------------
# synthetic scattering data with a manufactured simple zero

def _sl2_block(rng, first):
    """Random constant unimodular matrix acting on rows/cols 2,3 (first) or 1,2."""
    a, b, c = rng.normal(size=3) + 1j * rng.normal(size=3)
    a = a if abs(a) > 0.3 else a + 1
    B = np.array([[a, b], [c, (1 + b * c) / a]])
    out = np.eye(3, dtype=complex)
    if first:
        out[1:, 1:] = B
    else:
        out[:2, :2] = B
    return out


def _traceless(rng, scale):
    A = scale * (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    return A - np.trace(A) / 3 * np.eye(3)


def synthetic_case(case, lam_j, seed=0, alpha=1.0):
    """Entire unimodular s(lam), S(lam), mu_2(x,t,lam) whose case scalar has a simple zero at lam_j.

    case 1: s11; 2: (s^T S^A)_11; 3: (S^T s^A)_11; 4: m11(s).
    """
    rng = np.random.default_rng(seed)
    L, R = _sl2_block(rng, True), _sl2_block(rng, True)
    c0, e0, f0 = rng.normal(size=3) * 0.5 + 0.3
    A0, A1 = _traceless(rng, 0.3), _traceless(rng, 0.2)
    B0, B1 = _traceless(rng, 0.3), _traceless(rng, 0.2)

    def Y(lam):  # Y11 = alpha (lam - lam_j), det Y = 1
        p = alpha * (lam - lam_j)
        c = c0 + 0.2 * lam
        X = np.array([[p, 1, 0], [p * c - 1, c, 0], [e0 + 0.1 * lam, f0, 1]], dtype=complex)
        return L @ X @ R

    S_fn = lambda lam: expm(A0 + lam * A1)
    mu2_fn = lambda x, t, lam: expm(x * B0 + t * lam * B1)
    if case == 1:
        s_fn = Y
    elif case == 2:
        s_fn = lambda lam: S_fn(lam) @ Y(lam)
    elif case == 3:
        s_fn = lambda lam: S_fn(lam) @ cofactor_matrix(Y(lam)).T
    elif case == 4:
        s_fn = lambda lam: cofactor_matrix(Y(lam)).T
    else:
        raise ValueError("case must be 1..4")
    return s_fn, S_fn, mu2_fn


def region_of(lam):
    return domain_index(classify_domain(lam))
