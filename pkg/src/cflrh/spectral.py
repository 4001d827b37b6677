"""Eigenfunctions mu_1, mu_2, mu_3, spectral functions s, S, S_n and the matrices M_n.

The eigenfunctions solve the gauged Lax pair

    mu_x - i lam^2 [sigma, mu] = lam Q mu,   mu_t - 2i k^2 [sigma, mu] = U2 mu

and are integrated along axis-parallel legs of staircase paths with a
fourth-order Magnus exponential integrator (two Gauss points per step), so
the exponentially fast diagonal part is propagated exactly.

Basepoints: mu_1 at (0, T), mu_2 at (0, 0), mu_3 at (L, 0).  The last is the
finite-domain version of the basepoint at x = infinity: with it, mu_3 solves
both halves of the Lax pair exactly on [0, L] x [0, T] and every relation
between mu_1, mu_2, mu_3 holds without a decay assumption.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import expm

from .fields import BoundaryTraces, FieldGrid
from .lax import build_Q, k_of_lambda, lax_U2, lax_X
from .matrix import (SIGMA, SIGMA_DIAG, cofactor_matrix, commutator, det3, minor,
                     sigma_conjugate)

SQRT_HALF = 1.0 / math.sqrt(2.0)
GROWTH_GUARD = 1e12
_GAUSS = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)

# gamma^n_ij contour labels (1, 2, 3 for gamma_1, gamma_2, gamma_3)
CONTOURS = {
    1: ((3, 2, 2), (3, 3, 3), (3, 3, 3)),
    2: ((3, 1, 1), (3, 3, 3), (3, 3, 3)),
    3: ((3, 3, 3), (1, 3, 3), (1, 3, 3)),
    4: ((3, 3, 3), (2, 3, 3), (2, 3, 3)),
}


class InadmissibleError(ValueError):
    """Requested entries whose exponential kernels grow beyond the guard."""


class SingularityError(ZeroDivisionError):
    """A scalar denominator of the S_n formulas vanishes."""


# ---------------------------------------------------------------------------
# spectral points and domains

def l_values(lam):
    """Diagonal of -i lam^2 sigma."""
    return -1j * lam ** 2 * SIGMA_DIAG


def z_values(lam):
    """Diagonal of -2i k^2 sigma."""
    return -2j * k_of_lambda(lam) ** 2 * SIGMA_DIAG


def classify_domain(lam, tol=1e-12):
    lam = complex(lam)
    if lam == 0:
        raise ValueError("lambda = 0 is not a spectral point")
    if (abs(abs(lam) - SQRT_HALF) <= tol or abs(lam.real) <= tol * max(1.0, abs(lam))
            or abs(lam.imag) <= tol * max(1.0, abs(lam))):
        return "Boundary"
    odd_quadrant = lam.real * lam.imag > 0  # arg in (0, pi/2) or (pi, 3pi/2)
    outside = abs(lam) > SQRT_HALF
    if odd_quadrant:
        return "D1" if outside else "D2"
    return "D4" if outside else "D3"


def domain_index(region):
    return int(region[1]) if region.startswith("D") else 0


@dataclass(frozen=True)
class SpectralPoint:
    lam: complex
    k: complex
    region: str


def spectral_point(lam):
    lam = complex(lam)
    return SpectralPoint(lam, complex(k_of_lambda(lam)), classify_domain(lam))


def kernel_bounded(j, lam, col):
    """Whether column ``col`` (1-based) of mu_j has non-growing Volterra kernels.

    The kernel of entry (i, c) is exp(a (x - xi) + b (t - tau)) with
    a = i lam^2 (sigma_i - sigma_c), b = 2i k^2 (sigma_i - sigma_c); the sign
    constraints on (x - xi, t - tau) along gamma_j decide boundedness.
    """
    k2 = k_of_lambda(lam) ** 2
    ok = True
    for i in range(3):
        d = SIGMA_DIAG[i] - SIGMA_DIAG[col - 1]
        if d == 0:
            continue
        a, b = (1j * lam ** 2 * d).real, (2j * k2 * d).real
        if j == 1:
            ok &= a <= 0 and b >= 0
        elif j == 2:
            ok &= a <= 0 and b <= 0
        else:
            ok &= a >= 0
    return bool(ok)


def bounded_columns(j, lam):
    return tuple(kernel_bounded(j, lam, c) for c in (1, 2, 3))


# ---------------------------------------------------------------------------
# field access

class FieldSource:
    """Uniform access to grid lines from a FieldGrid or from BoundaryTraces.

    BoundaryTraces only provide the line t = 0 (initial data) and x = 0
    (boundary data), which is all that s(lam) and S(lam) need.
    """

    def __init__(self, data):
        self.data = data
        self.x, self.t = data.x, data.t
        self._rows, self._cols = {}, {}
        self.is_grid = isinstance(data, FieldGrid)

    @property
    def L(self):
        return float(self.x[-1])

    @property
    def T_end(self):
        return float(self.t[-1])

    def row(self, j):
        if j not in self._rows:
            if self.is_grid:
                self._rows[j] = self.data.row(j)
            elif j == 0:
                self._rows[j] = self.data.initial_line()
            else:
                raise ValueError("boundary traces carry only the t = 0 row")
        return self._rows[j]

    def column(self, i):
        if i not in self._cols:
            if self.is_grid:
                self._cols[i] = self.data.column(i)
            elif i == 0:
                self._cols[i] = self.data.boundary_line()
            else:
                raise ValueError("boundary traces carry only the x = 0 column")
        return self._cols[i]


def as_source(data):
    if isinstance(data, FieldSource):
        return data
    if isinstance(data, (FieldGrid, BoundaryTraces)):
        return FieldSource(data)
    raise TypeError(f"cannot read fields from {type(data).__name__}")


# ---------------------------------------------------------------------------
# transport along a leg

def _generator(line, lam, axis, s):
    f = line(s)
    if axis == "x":
        return lax_X(f, lam)
    k = k_of_lambda(lam)
    return 2j * k ** 2 * SIGMA + lax_U2(f, lam)


def _diag_rate(lam, axis):
    if axis == "x":
        return 1j * lam ** 2 * SIGMA_DIAG
    return 2j * k_of_lambda(lam) ** 2 * SIGMA_DIAG


def transport(line, lam, axis, nodes, mu0, step_target=0.2, substeps=None, cols=None):
    """Integrate mu along ``nodes`` (monotone positions on one line).

    Returns the values at every node, shape (len(nodes), 3, 3); entry 0 is mu0.
    With ``cols`` only those columns are carried (mu0 then has shape (3, len(cols))),
    which keeps exponentially growing columns out of the computation.
    """
    nodes = np.asarray(nodes, dtype=float)
    mu0 = np.asarray(mu0, dtype=complex)
    out = np.empty((len(nodes),) + mu0.shape, dtype=complex)
    out[0] = mu0
    if len(nodes) == 1:
        return out
    h = np.diff(nodes)
    rate = _diag_rate(lam, axis)
    G = _generator(line, lam, axis, nodes)
    f = line(nodes)
    if not any(np.any(v) for v in (f.q, f.r, f.qx, f.rx)):
        # no coupling on this line (zero fields): the gauged solution is carried exactly
        for c in range(len(h)):
            out[c + 1] = _diag_carry(out[c], rate, rate if cols is None else rate[list(cols)], h[c])
        return out
    if substeps is None:
        scale = np.max(np.linalg.norm(G, axis=(1, 2)))
        substeps = max(1, math.ceil(scale * np.max(np.abs(h)) / step_target))
    m = substeps
    frac = (np.arange(m)[:, None] + np.array(_GAUSS)[None, :]) / m  # (m, 2)
    pts = nodes[:-1, None, None] + h[:, None, None] * frac[None]  # (ncell, m, 2)
    A = _generator(line, lam, axis, pts.ravel()).reshape(len(h), m, 2, 3, 3)
    hs = (h / m)[:, None, None, None]
    A1, A2 = A[:, :, 0], A[:, :, 1]
    omega = hs / 2 * (A1 + A2) + (math.sqrt(3) / 12) * hs ** 2 * commutator(A2, A1)
    E = expm(omega.reshape(-1, 3, 3)).reshape(len(h), m, 3, 3)
    if cols is not None:
        rate = rate[list(cols)]
    dcell = np.exp(-rate[None, :] * h[:, None] / m)  # right factor per substep
    mu = mu0.copy()
    for c in range(len(h)):
        Ec, dc = E[c], dcell[c]
        for s in range(m):
            mu = (Ec[s] @ mu) * dc[None, :]
        out[c + 1] = mu
    return out


def _diag_carry(mu, rows, cols, h):
    """e^{D h} mu e^{-D h}; entries with equal rates are copied exactly."""
    d = rows[:, None] - cols[None, :]
    return mu * np.where(d == 0, 1.0, np.exp(d * h))


def _leg_growth(lam, axis, delta):
    """Per-column log bound of kernel growth over a leg of signed length delta."""
    rate = _diag_rate(lam, axis)
    g = np.zeros(3)
    for c in range(3):
        g[c] = max(0.0, max(((rate[i] - rate[c]) * delta).real for i in range(3)))
    return g


# ---------------------------------------------------------------------------
# paths and eigenfunction records

def path_legs(j, ix, it, nx, nt, variant="default"):
    """Legs as (axis, fixed_index, from_index, to_index).

    default: mu_1 (0,T)->(0,t)->(x,t); mu_2 (0,0)->(0,t)->(x,t);
             mu_3 (L,0)->(L,t)->(x,t).
    alt:     the other staircase, x-leg first: mu_2 (0,0)->(x,0)->(x,t);
             mu_1 (0,T)->(x,T)->(x,t); mu_3 (L,0)->(x,0)->(x,t).
    row:     mu_3 only, (L,t)->(x,t) with mu_3(L,t) = I (row truncation).
    """
    x0, t0 = {1: (0, nt - 1), 2: (0, 0), 3: (nx - 1, 0)}[j]
    if variant == "row":
        if j != 3:
            raise ValueError("row basepoint only applies to mu_3")
        return [("x", it, nx - 1, ix)]
    if variant == "default":
        return [("t", x0, t0, it), ("x", it, x0, ix)]
    if variant == "alt":
        return [("x", t0, x0, ix), ("t", ix, t0, it)]
    raise ValueError(f"unknown path variant {variant!r}")


def run_path(src, lam, legs, mu0=None, keep_last=False, step_target=0.2):
    """Integrate along legs; returns (final value or last-leg values, column log-growth)."""
    mu = np.eye(3, dtype=complex) if mu0 is None else np.asarray(mu0, dtype=complex)
    growth = np.zeros(3)
    vals = mu[None]
    for axis, fixed, a, b in legs:
        if a == b:
            vals = mu[None]
            continue
        idx = np.arange(a, b + (1 if b > a else -1), 1 if b > a else -1)
        if axis == "x":
            line, pos = src.row(fixed), src.x[idx]
        else:
            line, pos = src.column(fixed), src.t[idx]
        vals = transport(line, lam, axis, pos, mu, step_target=step_target)
        mu = vals[-1]
        growth += _leg_growth(lam, axis, pos[-1] - pos[0])
    return (vals if keep_last else mu), growth


@dataclass
class EigenfunctionRecord:
    j: int
    lam: complex
    points: list
    values: np.ndarray
    basepoint: tuple
    admissible: tuple
    growth_log10: np.ndarray = field(default=None)
    axis: str = ""
    spacing: float = 0.0


def _mask(values, admissible):
    """Columns whose kernels exceed the growth guard are reported as NaN, not returned."""
    for c, ok in enumerate(admissible):
        if not ok:
            values[..., c] = np.nan
    return values


def _admissible(growth):
    return tuple(bool(g <= math.log(GROWTH_GUARD)) for g in growth)


def _basepoint(j, src, variant):
    if j == 1:
        return (0.0, src.T_end)
    if j == 2:
        return (0.0, 0.0)
    return (src.L, 0.0) if variant != "row" else (src.L, None)


def integrate_mu(j, lam, data, targets, variant="default", step_target=0.2):
    """mu_j at each (x, t) target (grid nodes)."""
    if j not in (1, 2, 3):
        raise ValueError("contour index must be 1, 2 or 3")
    lam = complex(lam)
    src = as_source(data)
    nx, nt = len(src.x), len(src.t)
    vals, growth = [], np.zeros(3)
    for x, t in targets:
        ix, it = _node(src.x, x), _node(src.t, t)
        v, g = run_path(src, lam, path_legs(j, ix, it, nx, nt, variant), step_target=step_target)
        vals.append(v)
        growth = np.maximum(growth, g)
    adm = _admissible(growth)
    return EigenfunctionRecord(j, lam, list(targets), _mask(np.array(vals), adm),
                               _basepoint(j, src, variant), adm, growth / math.log(10))


def mu_row(j, lam, data, t, variant="default", step_target=0.2):
    """mu_j at every x node of the row t, as an EigenfunctionRecord ordered by x."""
    lam = complex(lam)
    src = as_source(data)
    nx, nt = len(src.x), len(src.t)
    it = _node(src.t, t)
    far = 0 if j == 3 else nx - 1
    legs = path_legs(j, far, it, nx, nt, variant)
    vals, growth = run_path(src, lam, legs, keep_last=True, step_target=step_target)
    if j == 3:
        vals = vals[::-1]
    pts = [(float(x), float(src.t[it])) for x in src.x]
    adm = _admissible(growth)
    return EigenfunctionRecord(j, lam, pts, _mask(vals, adm), _basepoint(j, src, variant), adm,
                               growth / math.log(10), axis="x", spacing=float(src.x[1] - src.x[0]))


def _node(nodes, v):
    i = int(np.argmin(np.abs(nodes - v)))
    if abs(nodes[i] - v) > 1e-9 * max(1.0, abs(v)):
        raise ValueError(f"{v} is not a grid node")
    return i


# ---------------------------------------------------------------------------
# spectral functions

def spectral_s(data, lam, **kw):
    """s(lam) = mu_3(0, 0, lam); needs only the t = 0 row."""
    src = as_source(data)
    v, _ = run_path(src, complex(lam), [("x", 0, len(src.x) - 1, 0)], **kw)
    return v


def spectral_S(data, lam, **kw):
    """S(lam) = mu_1(0, 0, lam); needs only the x = 0 column."""
    src = as_source(data)
    v, _ = run_path(src, complex(lam), [("t", 0, len(src.t) - 1, 0)], **kw)
    return v


def c_function(data, lam, variant="default", **kw):
    """c(T, lam) = mu_3(0, T, lam)."""
    src = as_source(data)
    nx, nt = len(src.x), len(src.t)
    v, _ = run_path(src, complex(lam), path_legs(3, 0, nt - 1, nx, nt, variant), **kw)
    return v


def adjugate_check(record, lam=None, data=None):
    """Max residual of mu^A_x + i lam^2 [sigma, mu^A] = -(lam Q)^T mu^A along a row record."""
    if record.axis != "x" or len(record.values) < 3:
        raise ValueError("need a row record with at least three points")
    lam = record.lam if lam is None else lam
    mu = record.values
    adj = cofactor_matrix(mu)
    h = record.spacing
    d = (adj[2:] - adj[:-2]) / (2 * h)
    src = as_source(data)
    it = _node(src.t, record.points[0][1])
    xs = np.array([p[0] for p in record.points])
    V1 = lam * build_Q(src.row(it)(xs[1:-1]))
    res = d + 1j * lam ** 2 * commutator(SIGMA, adj[1:-1]) + np.swapaxes(V1, -1, -2) @ adj[1:-1]
    return float(np.max(np.linalg.norm(res, axis=(1, 2))))


# ---------------------------------------------------------------------------
# S_n and M_n

def _m(b, i, j):
    return minor(b, i, j)


def denominators(s, S):
    """The four scalars whose zeros are the possible poles, keyed by name."""
    return {
        "s11": s[0, 0],
        "sTSA11": s[0, 0] * _m(S, 1, 1) - s[1, 0] * _m(S, 2, 1) + s[2, 0] * _m(S, 3, 1),
        "STsA11": S[0, 0] * _m(s, 1, 1) - S[1, 0] * _m(s, 2, 1) + S[2, 0] * _m(s, 3, 1),
        "m11s": _m(s, 1, 1),
    }


_DENOM_FOR = {1: "s11", 2: "sTSA11", 3: "STsA11", 4: "m11s"}


def assemble_Sn(s, S, n, tol=0.0):
    """S_n in closed form from s and S."""
    s, S = np.asarray(s, dtype=complex), np.asarray(S, dtype=complex)
    name = _DENOM_FOR[n]
    d = denominators(s, S)[name]
    if abs(d) <= tol:
        raise SingularityError(f"{name} vanishes at this lambda")
    m = lambda i, j: _m(s, i, j)
    if n == 1:
        return np.array([[s[0, 0], 0, 0],
                         [s[1, 0], m(3, 3) / d, m(3, 2) / d],
                         [s[2, 0], m(2, 3) / d, m(2, 2) / d]])
    if n == 2:
        M = lambda i, j: _m(S, i, j)
        return np.array([
            [s[0, 0], (m(3, 3) * M(2, 1) - m(2, 3) * M(3, 1)) / d, (m(3, 2) * M(2, 1) - m(2, 2) * M(3, 1)) / d],
            [s[1, 0], (m(3, 3) * M(1, 1) - m(1, 3) * M(3, 1)) / d, (m(3, 2) * M(1, 1) - m(1, 2) * M(3, 1)) / d],
            [s[2, 0], (m(2, 3) * M(1, 1) - m(1, 3) * M(2, 1)) / d, (m(2, 2) * M(1, 1) - m(1, 2) * M(2, 1)) / d]])
    out = s.copy()
    if n == 3:
        out[:, 0] = S[:, 0] / d
    else:
        out[:, 0] = [1 / d, 0, 0]
    return out


def decomposition(s, S, n):
    """(R_n, S_n, T_n) with S_n = s T_n = S R_n."""
    Sn = assemble_Sn(s, S, n)
    return np.linalg.solve(S, Sn), Sn, np.linalg.solve(s, Sn)


def decomposition_bruteforce(s, S, n):
    """Solve the 18 linear conditions for (T_n, R_n) directly; returns S_n = s T_n."""
    A = np.zeros((18, 18), dtype=complex)
    b = np.zeros(18, dtype=complex)
    row = 0
    for i in range(3):
        for j in range(3):
            for k in range(3):
                A[row, 3 * k + j] += s[i, k]
                A[row, 9 + 3 * k + j] -= S[i, k]
            row += 1
    for i in range(3):
        for j in range(3):
            g = CONTOURS[n][i][j]
            if g == 3:
                A[row, 3 * i + j] = 1
                b[row] = 1.0 if i == j else 0.0
            elif g == 1:
                A[row, 9 + 3 * i + j] = 1
            else:
                A[row, 3 * np.arange(3) + j] = s[i]
            row += 1
    sol = np.linalg.solve(A, b)
    return s @ sol[:9].reshape(3, 3)


def big_theta(x, t, lam):
    return 1j * lam ** 2 * x + 2j * k_of_lambda(lam) ** 2 * t


def compute_Mn(x, t, lam, n, data, method="product", s=None, S=None, step_target=0.2):
    """M_n(x, t, lam).

    product: mu_2(x,t) e^{(i lam^2 x + 2i k^2 t) sigma-hat} S_n with S_n from s, S.
    local:   per-entry normalisation with mu_1, mu_2, mu_3 each integrated to
             (x, t) along its own contour: (R_n)_ij = 0 on gamma_1 entries,
             (S_n)_ij = 0 on gamma_2 entries, (T_n)_ij = delta_ij on gamma_3 entries.
    bvp:     imposes the per-entry normalisations of the gamma^n contours
             (delta_ij at (L, 0) for gamma_3 entries, 0 at (0, T) for gamma_1,
             0 at (0, 0) for gamma_2) on the general solution
             mu_2 e^{theta sigma-hat} C, solving for C column by column.
    """
    lam = complex(lam)
    src = as_source(data)
    nx, nt = len(src.x), len(src.t)
    ix, it = _node(src.x, x), _node(src.t, t)
    mu2, _ = run_path(src, lam, path_legs(2, ix, it, nx, nt), step_target=step_target)
    if method == "product":
        if s is None:
            s = spectral_s(src, lam, step_target=step_target)
        if S is None:
            S = spectral_S(src, lam, step_target=step_target)
        C = assemble_Sn(s, S, n)
    elif method == "bvp":
        C = _bvp_coefficients(src, lam, n, step_target)
    elif method == "local":
        th = big_theta(x, t, lam)
        mu1, _ = run_path(src, lam, path_legs(1, ix, it, nx, nt), step_target=step_target)
        mu3, _ = run_path(src, lam, path_legs(3, ix, it, nx, nt), step_target=step_target)
        P1 = sigma_conjugate(-th, np.linalg.solve(mu1, mu2))
        P3 = sigma_conjugate(-th, np.linalg.solve(mu3, mu2))
        C = _entry_conditions(n, P1, P3)
    else:
        raise ValueError(f"unknown method {method!r}")
    return mu2 @ sigma_conjugate(big_theta(x, t, lam), C)


def _entry_conditions(n, P1, P3):
    """C with (P1 C)_ij = 0 (gamma_1), C_ij = 0 (gamma_2), (P3 C)_ij = delta_ij (gamma_3)."""
    C = np.zeros((3, 3), dtype=complex)
    for j in range(3):
        A = np.zeros((3, 3), dtype=complex)
        b = np.zeros(3, dtype=complex)
        for i in range(3):
            g = CONTOURS[n][i][j]
            if g == 2:
                A[i, i] = 1.0
            else:
                A[i] = (P3 if g == 3 else P1)[i]
                b[i] = 1.0 if (g == 3 and i == j) else 0.0
        C[:, j] = np.linalg.solve(A, b)
    return C


def _bvp_coefficients(src, lam, n, step_target):
    nx, nt = len(src.x), len(src.t)
    L, T = src.L, src.T_end
    mu2_L, _ = run_path(src, lam, [("x", 0, 0, nx - 1)], step_target=step_target)
    mu2_T, _ = run_path(src, lam, [("t", 0, 0, nt - 1)], step_target=step_target)
    th_L, th_T = big_theta(L, 0.0, lam), big_theta(0.0, T, lam)
    C = np.zeros((3, 3), dtype=complex)
    for j in range(3):
        A = np.zeros((3, 3), dtype=complex)
        b = np.zeros(3, dtype=complex)
        for i in range(3):
            g = CONTOURS[n][i][j]
            if g == 2:
                A[i, i] = 1.0
                continue
            base, th = (mu2_L, th_L) if g == 3 else (mu2_T, th_T)
            A[i] = base[i] * np.exp(th * (SIGMA_DIAG - SIGMA_DIAG[j]))
            b[i] = 1.0 if (g == 3 and i == j) else 0.0
        C[:, j] = np.linalg.solve(A, b)
    return C


@dataclass
class ScatteringRecord:
    lam: complex
    region: str
    s: np.ndarray
    S: np.ndarray
    Sn: dict
    cT: np.ndarray
    admissible: dict = field(default_factory=dict)


def scattering_record(data, lam, step_target=0.2):
    lam = complex(lam)
    src = as_source(data)
    s = spectral_s(src, lam, step_target=step_target)
    S = spectral_S(src, lam, step_target=step_target)
    cT = c_function(src, lam, step_target=step_target) if src.is_grid else None
    Sn = {}
    for n in (1, 2, 3, 4):
        try:
            Sn[n] = assemble_Sn(s, S, n)
        except SingularityError:
            Sn[n] = None
    adm = {"s": bounded_columns(3, lam), "S": bounded_columns(1, lam)}
    return ScatteringRecord(lam, classify_domain(lam), s, S, Sn, cT, adm)


def determinant(m):
    return det3(m)


def born_s(line, lam, L):
    """First-order term B of s(lam) = I + B + O(amplitude^2).

    B = -int_0^L e^{-i lam^2 xi sigma-hat}(lam Q(xi, 0)) d xi, by adaptive quadrature
    of the callable ``line`` (xi -> FieldSample).
    """
    from scipy.integrate import quad_vec
    lam = complex(lam)

    def f(xi):
        Q = lax_X(line(np.array([xi])), lam)[0] - 1j * lam ** 2 * SIGMA
        v = sigma_conjugate(-1j * lam ** 2 * xi, Q).ravel()
        return np.concatenate([v.real, v.imag])

    val, _ = quad_vec(f, 0.0, L, epsabs=1e-14, epsrel=1e-12)
    return -(val[:9] + 1j * val[9:]).reshape(3, 3)
