"""Recovery of q_x, r_x from the large-lambda behaviour of the eigenfunctions, and of q, r by x-integration.

For lam -> infinity with x fixed, M = M0 + M1/lam + O(1/lam^2) where M0 is
block diagonal (a 1x1 and a 2x2 block) but not the identity when q_x, r_x are
nonzero.  Matching the O(lam) terms of the x-equation gives

    (q_x, r_x) = 2i lim lam M[1, 2:3] B^{-1},   B = M[2:3, 2:3],

so columns 2 and 3 suffice.  They are integrated along the row t from the side
where the (1, 2), (1, 3) kernels decay: from x = L for Im lam^2 > 0 and from
x = 0 for Im lam^2 < 0.
"""
from dataclasses import dataclass, field
import csv
import math

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from .spectral import SpectralPoint, as_source, _node, run_path, transport

VALIDATED_SIGN = 1


class RayError(ValueError):
    """Inadmissible or non-convergent lambda ray."""


def _lam(p):
    return complex(p.lam) if isinstance(p, SpectralPoint) else complex(p)


def ray(direction, magnitudes=(4, 8, 16, 32)):
    """lambda points |lam| e^{i direction}."""
    return [m * np.exp(1j * direction) for m in magnitudes]


def block_columns(data, lam, x, t, step_target=0.2):
    """Columns 2, 3 of the x-only eigenfunction at (x, t), shape (3, 2)."""
    src = as_source(data)
    lam = complex(lam)
    w = (lam * lam).imag
    if w == 0:
        raise RayError("ray on a domain boundary: Im lam^2 = 0")
    ix, it = _node(src.x, x), _node(src.t, t)
    start = len(src.x) - 1 if w > 0 else 0
    if start == ix:
        raise RayError("point coincides with the integration start")
    idx = np.arange(start, ix + (1 if ix > start else -1), 1 if ix > start else -1)
    mu0 = np.eye(3, dtype=complex)[:, 1:]
    vals = transport(src.row(it), lam, "x", src.x[idx], mu0, step_target=step_target, cols=(1, 2))
    return vals[-1]


def row_columns(data, lam, t, step_target=0.2):
    """Columns 2, 3 of the x-only eigenfunction at every node of the row t, ordered by x."""
    src = as_source(data)
    lam = complex(lam)
    w = (lam * lam).imag
    if w == 0:
        raise RayError("ray on a domain boundary: Im lam^2 = 0")
    it = _node(src.t, t)
    nodes = src.x[::-1] if w > 0 else src.x
    mu0 = np.eye(3, dtype=complex)[:, 1:]
    vals = transport(src.row(it), lam, "x", nodes, mu0, step_target=step_target, cols=(1, 2))
    return vals[::-1] if w > 0 else vals


def recover_row(data, t, lams, sign=VALIDATED_SIGN, order=2, step_target=0.2):
    """Extrapolated (q_x, r_x) at every x node of the row t from one sweep per lambda.

    Values within a few 1/|lam|^2 of the integration start are unreliable.
    """
    lams = [_lam(l) for l in lams]
    est = []
    for lam in lams:
        c = row_columns(data, lam, t, step_target)
        row = np.linalg.solve(np.swapaxes(c[:, 1:], -1, -2), c[:, 0][..., None])[..., 0]
        est.append(2j * sign * lam * row)
    est = np.array(est)  # (nlam, nx, 2)
    lim = richardson(1 / np.abs(lams), est.reshape(len(lams), -1), order).reshape(est.shape[1:])
    return lim[:, 0], lim[:, 1]


def ray_estimates(data, x, t, lams, sign=VALIDATED_SIGN, normalize_block=True, step_target=0.2):
    """2i sign lam M[1, 2:3] (B^{-1}) for each lambda; shape (len(lams), 2)."""
    out = []
    for lam in lams:
        lam = _lam(lam)
        c = block_columns(data, lam, x, t, step_target)
        row = c[0]
        if normalize_block:
            row = np.linalg.solve(c[1:].T, row)  # row @ B^{-1}
        out.append(2j * sign * lam * row)
    return np.array(out)


def richardson(h, v, order=2):
    """Polynomial extrapolation to h = 0 through the last order + 1 samples."""
    h = np.asarray(h, dtype=float)
    v = np.asarray(v)
    if len(h) < order + 1:
        raise RayError(f"need at least {order + 1} ray points")
    hh, vv = h[-order - 1:], v[-order - 1:]
    V = np.vander(hh, order + 1, increasing=True)
    return np.linalg.solve(V, vv.reshape(order + 1, -1))[0].reshape(v.shape[1:])


@dataclass
class RayResult:
    qx: complex
    rx: complex
    estimates: np.ndarray
    magnitudes: np.ndarray
    extrapolants: np.ndarray
    decay_exponent: float
    correction_exponent: float
    contracting: bool


def recover_ray(data, x, t, lams, sign=VALIDATED_SIGN, normalize_block=True, order=2,
                step_target=0.2):
    lams = [_lam(l) for l in lams]
    mags = np.abs(lams)
    if np.any(np.diff(mags) <= 0):
        raise RayError("ray magnitudes must be strictly increasing")
    if np.ptp(np.angle(lams)) > 1e-12:
        raise RayError("ray points must share one direction")
    if mags[0] < 4:
        raise RayError("ray magnitudes must be at least 4")
    est = ray_estimates(data, x, t, lams, sign, normalize_block, step_target)
    h = 1 / mags
    # extrapolants from successive windows; their differences should shrink
    ext = np.array([richardson(h[:i + 1], est[:i + 1], order) for i in range(order, len(h))])
    limit = ext[-1]
    diffs = np.abs(np.diff(ext, axis=0)).max(axis=1) if len(ext) > 1 else np.array([0.0])
    contracting = bool(len(diffs) < 2 or np.all(diffs[1:] <= diffs[:-1] * 1.0 + 1e-14))
    # the off-diagonal row M[1, 2:3] B^{-1} = est / (2i lam) should fall like 1/|lam|;
    # the remainder est - limit is measured separately (even powers only, so ~1/|lam|^2)
    off = np.abs(est).max(axis=1) / (2 * mags)
    err = np.abs(est - limit).max(axis=1)
    return RayResult(complex(limit[0]), complex(limit[1]), est, mags, ext,
                     _loglog_decay(mags, off), _loglog_decay(mags, err), contracting)


def _loglog_decay(mags, vals):
    good = vals > 1e-300
    if good.sum() < 2:
        return float("nan")
    return float(-np.polyfit(np.log(mags[good]), np.log(vals[good]), 1)[0])


def recover_derivatives(x, t, lams, data, sign=VALIDATED_SIGN, normalize_block=True, order=2):
    """(q_x, r_x) at (x, t) from a lambda ray."""
    res = recover_ray(data, x, t, lams, sign, normalize_block, order)
    return res.qx, res.rx


def integrate_x(qx, g0, dx):
    """q = g0 + int_0^x q_x; Simpson for an odd point count, trapezoid otherwise."""
    qx = np.asarray(qx, dtype=complex)
    rule = cumulative_simpson if len(qx) % 2 == 1 and len(qx) >= 3 else cumulative_trapezoid
    # cumulative_simpson casts complex input to real, so integrate the parts separately
    acc = rule(qx.real, dx=dx, initial=0) + 1j * rule(qx.imag, dx=dx, initial=0)
    return g0 + acc


@dataclass
class ReconstructionReport:
    points: list
    recovered_qx: np.ndarray
    recovered_rx: np.ndarray
    reference_qx: np.ndarray
    reference_rx: np.ndarray
    direction: float
    magnitudes: tuple
    extrapolation_order: int
    rel_err_q: np.ndarray
    rel_err_r: np.ndarray
    decay_exponents: np.ndarray
    sign: int = VALIDATED_SIGN
    diagnostics: list = field(default_factory=list)
    # q, r rebuilt by integrating the recovered row q_x, r_x from the x = 0 traces
    recovered_q: np.ndarray = None
    recovered_r: np.ndarray = None
    rel_err_qint: np.ndarray = None
    rel_err_rint: np.ndarray = None

    @property
    def max_rel_err(self):
        return float(max(np.max(self.rel_err_q, initial=0), np.max(self.rel_err_r, initial=0)))

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["x", "t", "re_qx_rec", "im_qx_rec", "re_qx_ref", "im_qx_ref",
                        "rel_err_q", "rel_err_r"])
            for (x, t), a, b, eq, er in zip(self.points, self.recovered_qx, self.reference_qx,
                                            self.rel_err_q, self.rel_err_r):
                w.writerow([repr(float(x)), repr(float(t)), repr(a.real), repr(a.imag),
                            repr(b.real), repr(b.imag), repr(float(eq)), repr(float(er))])

    def summary(self):
        return {
            "points": [list(p) for p in self.points],
            "direction": self.direction,
            "magnitudes": list(self.magnitudes),
            "extrapolation_order": self.extrapolation_order,
            "sign": self.sign,
            "max_rel_err": self.max_rel_err,
            "decay_exponents": [float(d) for d in self.decay_exponents],
            "max_rel_err_integrated": (None if self.rel_err_qint is None else
                                       float(max(np.max(self.rel_err_qint), np.max(self.rel_err_rint)))),
        }


def _rel(a, b):
    scale = abs(b)
    return abs(a - b) / scale if scale > 1e-12 else abs(a - b)


def closure_report(grid, points, direction=math.pi / 4, magnitudes=(4, 8, 16, 32), order=2,
                   sign=VALIDATED_SIGN, normalize_block=True, integrate=True):
    """Recover q_x, r_x at each point and compare with the stored grid values.

    With ``integrate`` the whole row is recovered as well and integrated from
    the Dirichlet traces at x = 0, giving q, r at each point.
    """
    rec_q, rec_r, ref_q, ref_r, dec, diag = [], [], [], [], [], []
    lams = ray(direction, magnitudes)
    for x, t in points:
        res = recover_ray(grid, x, t, lams, sign, normalize_block, order)
        i, j = grid.x_index(x), grid.t_index(t)
        rec_q.append(res.qx)
        rec_r.append(res.rx)
        ref_q.append(complex(grid.qx[i, j]))
        ref_r.append(complex(grid.rx[i, j]))
        dec.append(res.decay_exponent)
        diag.append({"contracting": res.contracting, "correction_exponent": res.correction_exponent,
                     "extrapolants_qx": [complex(e[0]) for e in res.extrapolants]})
    rec_q, rec_r, ref_q, ref_r = map(np.array, (rec_q, rec_r, ref_q, ref_r))
    eq = np.array([_rel(a, b) for a, b in zip(rec_q, ref_q)])
    er = np.array([_rel(a, b) for a, b in zip(rec_r, ref_r)])
    rep = ReconstructionReport(list(points), rec_q, rec_r, ref_q, ref_r, direction, tuple(magnitudes),
                               order, eq, er, np.array(dec), sign, diag)
    if integrate:
        rows = {}
        for _, t in points:
            j = grid.t_index(t)
            if j not in rows:
                qx, rx = recover_row(grid, t, lams, sign, order)
                rows[j] = (integrate_x(qx, grid.q[0, j], grid.dx), integrate_x(rx, grid.r[0, j], grid.dx))
        iq = [rows[grid.t_index(t)][0][grid.x_index(x)] for x, t in points]
        ir = [rows[grid.t_index(t)][1][grid.x_index(x)] for x, t in points]
        rep.recovered_q, rep.recovered_r = np.array(iq), np.array(ir)
        rep.rel_err_qint = np.array([_rel(a, grid.q[grid.x_index(x), grid.t_index(t)])
                                     for a, (x, t) in zip(iq, points)])
        rep.rel_err_rint = np.array([_rel(a, grid.r[grid.x_index(x), grid.t_index(t)])
                                     for a, (x, t) in zip(ir, points)])
    return rep
