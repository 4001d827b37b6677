"""Verification suites: each returns a list of Check records with measured values and tolerances."""
from dataclasses import dataclass, field
import math

import numpy as np

from . import rh
from .config import DEFAULT_GRIDS, RunConfig
from .fields import FieldGrid, GaussianSpec, sample_exact, solve_direct, solve_gaussian, solve_plane_wave
from .lax import PlaneWave, zero_curvature_residual
from .matrix import Involution, SIGMA_DIAG, cofactor_matrix, det3, sigma_conjugate
from .reconstruct import closure_report, recover_ray, ray
from .spectral import (CONTOURS, FieldSource, assemble_Sn, big_theta, born_s, classify_domain,
                       compute_Mn, decomposition, decomposition_bruteforce, domain_index,
                       integrate_mu, l_values, mu_row, scattering_record, spectral_S, spectral_s,
                       z_values)


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    measured: float
    tolerance: float
    comparison: str = "<="
    detail: dict = field(default_factory=dict)

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] criterion {self.criterion:>2} {self.name}: measured {self.measured:.3e} "
                f"{self.comparison} {self.tolerance:.3e}")

    def as_dict(self):
        return {"criterion": self.criterion, "name": self.name, "passed": bool(self.passed),
                "measured": _num(self.measured), "tolerance": self.tolerance,
                "comparison": self.comparison, "detail": self.detail}


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else str(v)


def _le(crit, name, measured, tol, **detail):
    return Check(crit, name, bool(measured <= tol), float(measured), float(tol), "<=", detail)


def _ge(crit, name, measured, tol, **detail):
    return Check(crit, name, bool(measured >= tol), float(measured), float(tol), ">=", detail)


# ---------------------------------------------------------------------------
# data

def zero_grid(L, T_end, nx, nt):
    x, t = np.linspace(0, L, nx), np.linspace(0, T_end, nt)
    z = np.zeros((nx, nt), dtype=complex)
    return FieldGrid(x, t, z, z.copy(), z.copy(), z.copy(), meta={"source": "zero"})


def build_grid(cfg: RunConfig):
    g = cfg.grid
    if cfg.scenario == "zero":
        return zero_grid(g["L"], g["T_end"], g["nx"], g["nt"])
    if cfg.scenario == "plane_wave":
        return sample_exact(cfg.plane_wave_params(), g["L"], g["T_end"], g["nx"], g["nt"])
    if cfg.scenario == "gaussian":
        return solve_gaussian(cfg.gaussian_spec(), g["L"], g["T_end"], g["nx"], g["nt"])
    from scipy.interpolate import CubicSpline
    from .io import load_profile
    p = load_profile(cfg.profile)
    q0, r0 = CubicSpline(p["x"], p["q0"]), CubicSpline(p["x"], p["r0"])
    g0 = h0 = None
    if "t" in p:
        g0, h0 = CubicSpline(p["t"], p["g0"]), CubicSpline(p["t"], p["h0"])
    else:
        g0, h0 = (lambda t: q0(0.0) + 0 * t), (lambda t: r0(0.0) + 0 * t)
    return solve_direct(q0, r0, g0, h0, g["L"], g["T_end"], g["nx"], g["nt"])


def _is_zero(grid):
    return not (np.any(grid.q) or np.any(grid.r) or np.any(grid.qx) or np.any(grid.rx))


def _interior_points(grid, fractions=((0.125, 0.25), (0.375, 0.5), (0.625, 0.75))):
    pts = []
    for fx, ft in fractions:
        i = int(round(fx * (grid.nx - 1)))
        j = int(round(ft * (grid.nt - 1)))
        pts.append((float(grid.x[i]), float(grid.t[j])))
    return pts


# ---------------------------------------------------------------------------
# 1. algebra

def suite_algebra(cfg, ctx=None, n=1000):
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.tolerances["algebra"]
    B = rng.normal(size=(n, 3, 3)) + 1j * rng.normal(size=(n, 3, 3))
    C = rng.normal(size=(n, 3, 3)) + 1j * rng.normal(size=(n, 3, 3))
    c1 = rng.uniform(-2, 2, n) + 1j * rng.uniform(-3, 3, n)
    c2 = rng.uniform(-2, 2, n) + 1j * rng.uniform(-3, 3, n)
    nb = np.linalg.norm(B, axis=(1, 2))
    d = det3(B)
    res = np.linalg.norm(B @ np.swapaxes(cofactor_matrix(B), -1, -2) - d[:, None, None] * np.eye(3), axis=(1, 2))
    adj = np.max(res / nb ** 3)
    det_ref = np.max(np.abs(d - np.linalg.det(B)) / nb ** 3)
    sc = lambda c, m: sigma_conjugate(c, m)
    lhs, rhs = sc(c1, B @ C), sc(c1, B) @ sc(c1, C)
    hom = np.max(np.linalg.norm(lhs - rhs, axis=(1, 2)) /
                 (np.linalg.norm(sc(c1, B), axis=(1, 2)) * np.linalg.norm(sc(c1, C), axis=(1, 2))))
    add = sc(c1 + c2, B) - sc(c1, sc(c2, B))
    add = np.max(np.linalg.norm(add, axis=(1, 2)) / np.linalg.norm(sc(c1 + c2, B), axis=(1, 2)))
    return [
        _le(1, "cofactor identity B (B^A)^T = det(B) I", adj, tol, samples=n),
        _le(1, "det3 against LU determinant", det_ref, tol, samples=n),
        _le(1, "sigma-hat homomorphism", hom, tol, samples=n),
        _le(1, "sigma-hat additivity in c", add, tol, samples=n),
    ]


# ---------------------------------------------------------------------------
# 2. Lax validity

@dataclass(frozen=True)
class DetunedWave(PlaneWave):
    """Plane wave with a wrong frequency: not a solution."""
    shift: float = 0.5

    @property
    def omega(self):
        return PlaneWave.omega.fget(self) + self.shift


def lambda_samples(rng, per_domain=5):
    """Random lambda in each of D1..D4, away from the boundaries."""
    out = []
    rad = {1: (0.9, 2.0), 2: (0.2, 0.6), 3: (0.2, 0.6), 4: (0.9, 2.0)}
    arg = {1: (0.1, 1.47), 2: (0.1, 1.47), 3: (1.67, 3.04), 4: (1.67, 3.04)}
    for n in (1, 2, 3, 4):
        for _ in range(per_domain):
            r = rng.uniform(*rad[n])
            a = rng.uniform(*arg[n]) + (math.pi if rng.random() < 0.5 else 0.0)
            out.append(r * complex(math.cos(a), math.sin(a)))
    return out


def suite_lax(cfg, ctx=None):
    pw = cfg.plane_wave_params()
    g = DEFAULT_GRIDS["plane_wave"]
    grid = sample_exact(pw, g["L"], g["T_end"], 33, 33)
    bad = sample_exact(DetunedWave(pw.a, pw.b, pw.kappa), g["L"], g["T_end"], 33, 33)
    lams = lambda_samples(np.random.default_rng(cfg.seed))
    nodes = [(8, 8), (16, 16), (24, 12)]
    worst = max(zero_curvature_residual(grid, l, i, j) for l in lams for i, j in nodes)
    weakest = min(zero_curvature_residual(bad, l, i, j) for l in lams for i, j in nodes)
    domains = sorted({classify_domain(l) for l in lams})
    return [
        _le(2, "zero curvature on the exact plane wave", worst, cfg.tolerances["zero_curvature"],
            lambdas=len(lams), domains=domains),
        _ge(2, "zero curvature violated by a detuned wave", weakest, cfg.tolerances["zero_curvature_negative"]),
    ]


# ---------------------------------------------------------------------------
# 3. solver convergence

def suite_solver(cfg, ctx=None, levels=(65, 129, 257)):
    pw = cfg.plane_wave_params()
    g = DEFAULT_GRIDS["plane_wave"]
    errs, hs = [], []
    for n in levels:
        sol = solve_plane_wave(pw, g["L"], g["T_end"], n, n)
        ex = sample_exact(pw, g["L"], g["T_end"], n, n)
        errs.append(float(max(np.max(np.abs(sol.q - ex.q)), np.max(np.abs(sol.r - ex.r)))))
        hs.append(g["L"] / (n - 1))
    order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return [
        _ge(3, "plane-wave refinement order", order, cfg.tolerances["solver_order"], errors=errs, levels=list(levels)),
        _le(3, "plane-wave error at finest level", errs[-1], cfg.tolerances["solver_error"]),
    ]


# ---------------------------------------------------------------------------
# 4-6. eigenfunctions, symmetry, spectral relations

def suite_eigen(cfg, ctx):
    src = ctx.source
    lams = cfg.lambda_sets.get(ctx.lambda_set, cfg.lambda_sets["default"])
    pts = _interior_points(ctx.grid)
    det_err = base_err = path_err = 0.0
    for lam in lams:
        for j in (1, 2, 3):
            for it in (0, ctx.grid.nt // 2, ctx.grid.nt - 1):
                rec = mu_row(j, lam, src, float(ctx.grid.t[it]))
                det_err = max(det_err, float(np.max(np.abs(det3(rec.values) - 1))))
            bp = integrate_mu(j, lam, src, [rec.basepoint if j != 3 else (src.L, 0.0)])
            base_err = max(base_err, float(np.max(np.abs(bp.values[0] - np.eye(3)))))
            a = integrate_mu(j, lam, src, pts).values
            b = integrate_mu(j, lam, src, pts, variant="alt").values
            path_err = max(path_err, float(np.max(np.abs(a - b))))
    return [
        _le(4, "det mu_j = 1 along stored rows", det_err, cfg.tolerances["determinant"]),
        _le(4, "basepoint normalisation", base_err, 0.0),
        _le(4, "two-staircase path independence", path_err, cfg.tolerances["path"], lambdas=len(lams)),
    ]


def suite_symmetry(cfg, ctx, pairs=10):
    src = ctx.source
    rng = np.random.default_rng(cfg.seed + 5)
    lams = list(cfg.lambda_sets.get(ctx.lambda_set, cfg.lambda_sets["default"]))
    while len(lams) < pairs:
        lams.append(rng.uniform(0.3, 1.0) * np.exp(1j * rng.uniform(0.1, 6.2)))
    lams = lams[:pairs]
    pt = _interior_points(ctx.grid)[1]
    res = {1.0: 0.0, -1.0: 0.0}
    for lam in lams:
        for j in (1, 2, 3):
            a = integrate_mu(j, lam, src, [pt]).values[0]
            b = integrate_mu(j, np.conj(lam), src, [pt]).values[0]
            ainv = np.linalg.inv(a)
            for eps in res:
                A = Involution(eps).matrix
                err = np.max(np.abs(ainv - A @ b.conj().T @ A)) / max(1.0, np.max(np.abs(ainv)))
                res[eps] = max(res[eps], float(err))
    eps = min(res, key=res.get)
    return [_le(5, "conjugate-pair symmetry", res[eps], cfg.tolerances["symmetry"],
                epsilon=eps, residual_by_epsilon={str(k): v for k, v in res.items()})]


def suite_relations(cfg, ctx):
    src = ctx.source
    lams = cfg.lambda_sets.get(ctx.lambda_set, cfg.lambda_sets["default"])[:6]
    pts = _interior_points(ctx.grid)
    worst = 0.0
    for lam in lams:
        s, S = spectral_s(src, lam), spectral_S(src, lam)
        for x, t in pts:
            th = big_theta(x, t, lam)
            m1, m2, m3 = (integrate_mu(j, lam, src, [(x, t)]).values[0] for j in (1, 2, 3))
            worst = max(worst, float(np.max(np.abs(m3 - m2 @ sigma_conjugate(th, s)))),
                        float(np.max(np.abs(m1 - m2 @ sigma_conjugate(th, S)))))
    # Born regime on small Gaussian initial data
    L, nx = DEFAULT_GRIDS["gaussian"]["L"], DEFAULT_GRIDS["gaussian"]["nx"]
    errs = []
    for delta in (1e-3, 2e-3):
        spec = GaussianSpec(amp_q=delta, amp_r=0.5 * delta)
        init = FieldSource(sample_exact(spec, L, 1.0, nx, 1))
        e = 0.0
        for lam in lams[:3]:
            s = spectral_s(init, lam)
            e = max(e, float(np.linalg.norm(s - np.eye(3) - born_s(init.row(0), lam, L))))
        errs.append(e)
    expo = math.log(errs[1] / errs[0]) / math.log(2.0)
    return [
        _le(6, "mu_3 = mu_2 e^(Theta sigma-hat) s and mu_1 = mu_2 e^(Theta sigma-hat) S", worst,
            cfg.tolerances["relations"], points=pts, lambdas=len(lams)),
        _ge(6, "Born remainder exponent", expo, cfg.tolerances["born_exponent"], remainders=errs),
    ]


# ---------------------------------------------------------------------------
# 7. S_n

def random_unimodular(rng, n):
    B = rng.normal(size=(n, 3, 3)) + 1j * rng.normal(size=(n, 3, 3))
    d = np.linalg.det(B)
    return B / (d ** (1 / 3))[:, None, None]


def suite_sn(cfg, ctx):
    rng = np.random.default_rng(cfg.seed + 7)
    s_all, S_all = random_unimodular(rng, 100), random_unimodular(rng, 100)
    worst = pattern = exact = 0.0
    for s, S in zip(s_all, S_all):
        for n in (1, 2, 3, 4):
            Sn = assemble_Sn(s, S, n)
            ref = decomposition_bruteforce(s, S, n)
            worst = max(worst, float(np.max(np.abs(Sn - ref)) / max(1.0, np.max(np.abs(ref)))))
            R, _, T = decomposition(s, S, n)
            for i in range(3):
                for j in range(3):
                    g = CONTOURS[n][i][j]
                    if g == 3:
                        pattern = max(pattern, abs(T[i, j] - (i == j)))
                    elif g == 1:
                        pattern = max(pattern, abs(R[i, j]))
                    else:
                        exact = max(exact, abs(Sn[i, j]))
    src = ctx.source
    mn = 0.0
    for lam in cfg.lambda_sets.get(ctx.lambda_set, cfg.lambda_sets["default"]):
        n = domain_index(classify_domain(lam))
        rec = scattering_record(src, lam)
        M0 = compute_Mn(0.0, 0.0, lam, n, src, method="bvp")
        mn = max(mn, float(np.max(np.abs(M0 - rec.Sn[n]))))
    return [
        _le(7, "assemble_Sn against 18-equation brute force", worst, cfg.tolerances["sn"], pairs=100),
        _le(7, "gamma_3 / gamma_1 pattern of T_n, R_n", pattern, cfg.tolerances["sn"]),
        _le(7, "gamma_2 zeros of S_n are exact", exact, 0.0),
        _le(7, "M_n(0,0) from contour normalisations equals S_n", mn, cfg.tolerances["mn"]),
    ]


# ---------------------------------------------------------------------------
# 8-9. jumps and global relation

def suite_jump(cfg, ctx, x=1.0, t=0.5):
    src = ctx.source
    c = cfg.contour
    worst = det_err = 0.0
    samples = rh.contour_samples(int(c["per_segment"]), float(c["r_inner"]), float(c["r_outer"]))
    for m, n, lam in samples:
        rec = scattering_record(src, lam)
        J = rh.jump_matrix(m, n, x, t, lam, rec.Sn).J
        Mm = compute_Mn(x, t, lam, m, src, "product", s=rec.s, S=rec.S)
        Mn = compute_Mn(x, t, lam, n, src, "local")
        worst = max(worst, float(np.max(np.abs(Mn - Mm @ J))))
        det_err = max(det_err, abs(det3(J) - 1))
    cyc = 0.0
    for lam in rh.meeting_points():
        rec = scattering_record(src, lam)
        cyc = max(cyc, float(np.max(np.abs(rh.cyclic_product(x, t, lam, rec.Sn) - np.eye(3)))))
    return [
        _le(8, "M_n = M_m J_mn on the contour", worst, cfg.tolerances["jump"], samples=len(samples), point=[x, t]),
        _le(8, "det J = 1", det_err, cfg.tolerances["jump"]),
        _le(8, "cyclic jump product at meeting points", cyc, cfg.tolerances["cyclic"]),
    ]


GLOBAL_EXTRA = [2.0 * complex(math.cos(math.pi / 4), math.sin(math.pi / 4)),
                1.5 * complex(math.cos(1.5), math.sin(1.5))]


def suite_global(cfg, ctx):
    src = ctx.source
    lams = list(cfg.lambda_sets.get(ctx.lambda_set, cfg.lambda_sets["default"])[:6]) + GLOBAL_EXTRA
    worst = max(rh.global_relation_residual(src, lam) for lam in lams)
    zg = FieldSource(zero_grid(ctx.grid.L, ctx.grid.T_end, 33, 17))
    zero = max(rh.global_relation_residual(zg, lam) for lam in lams)
    return [
        _le(9, "global relation on admissible columns", worst, cfg.tolerances["global"], lambdas=len(lams)),
        _le(9, "global relation for zero fields", zero, 0.0),
    ]


# ---------------------------------------------------------------------------
# 10. residues

RESIDUE_CASES = {1: 1.0 * complex(math.cos(0.6), math.sin(0.6)), 2: 0.5 * complex(math.cos(0.7), math.sin(0.7)),
                 3: 0.5 * complex(math.cos(2.2), math.sin(2.2)), 4: 1.1 * complex(math.cos(2.0), math.sin(2.0))}
_WHICH = {1: "s11", 2: "sTSA11", 3: "STsA11", 4: "m11s"}


def suite_residue(cfg, ctx=None, x=0.7, t=0.4):
    worst = wind = loc = 0.0
    for case, lj in RESIDUE_CASES.items():
        s_fn, S_fn, mu2 = rh.synthetic_case(case, lj, seed=cfg.seed + case)
        f = rh.spectral_scalar(_WHICH[case], s_fn, S_fn)
        box = (lj.real - 0.1, lj.real + 0.13, lj.imag - 0.12, lj.imag + 0.09)
        w = rh.winding_number(f, box)
        wind = max(wind, abs(w - round(w.real)))
        zeros = rh.find_zeros(f, box, _WHICH[case], region=case)
        if len(zeros) != 1:
            return [Check(10, f"case D{case}: one zero expected", False, len(zeros), 1, "==")]
        z = zeros[0]
        loc = max(loc, abs(z.location - lj))
        for col, v in rh.residue_eval(z, x, t, s_fn, S_fn, mu2).items():
            ref = rh.laurent_residue(rh.M_column(case, col, x, t, s_fn, S_fn, mu2), z.location, 0.05)
            worst = max(worst, float(np.max(np.abs(v - ref))))
    return [
        _le(10, "residue formulas against Laurent coefficients", worst, cfg.tolerances["residue"], point=[x, t]),
        _le(10, "winding numbers integral", wind, cfg.tolerances["winding"]),
        _le(10, "zero location", loc, 1e-6),
    ]


# ---------------------------------------------------------------------------
# 11. reconstruction

def reconstruction_points(cfg, grid):
    pts = cfg.reconstruct.get("points")
    if pts:
        return [tuple(map(float, p)) for p in pts]
    if cfg.scenario == "gaussian":
        return [(2.0, 0.5), (4.0, 0.5), (5.5, 0.75)]
    return _interior_points(grid)


def suite_reconstruct(cfg, ctx):
    r = cfg.reconstruct
    grid = ctx.grid
    pts = reconstruction_points(cfg, grid)
    rep = closure_report(grid, pts, r["direction"], r["magnitudes"], r["order"], r["sign"])
    tol = cfg.tolerances["reconstruct_gaussian" if cfg.scenario in ("gaussian", "file") else "reconstruct_plane"]
    checks = [_le(11, "recovered q_x, r_x relative error", rep.max_rel_err, tol, **rep.summary())]
    qint = float(max(np.max(rep.rel_err_qint), np.max(rep.rel_err_rint)))
    checks.append(_le(11, "q, r rebuilt by x-integration, relative error", qint, tol))
    if _is_zero(grid):
        checks.append(Check(11, "1/lambda decay exponent (not applicable: M[1,2:3] vanishes)", True,
                            float("nan"), cfg.tolerances["decay_exponent"], "n/a"))
        return checks
    dev = float(np.max(np.abs(rep.decay_exponents - 1.0)))
    checks.append(_le(11, "off-diagonal 1/lambda decay exponent deviation from 1", dev,
                      cfg.tolerances["decay_exponent"], exponents=[float(e) for e in rep.decay_exponents]))
    x, t = pts[0]
    lams = ray(r["direction"], r["magnitudes"])
    ref = complex(grid.qx[grid.x_index(x), grid.t_index(t)])
    errs = {}
    for sign in (1, -1):
        res = recover_ray(grid, x, t, lams, sign=sign)
        errs[sign] = abs(res.qx - ref) / max(abs(ref), 1e-300)
    validated = min(errs, key=errs.get)
    checks.append(Check(11, "sign of the recovery formula", validated == r["sign"], float(validated),
                        float(r["sign"]), "==", {"rel_err_by_sign": {str(k): float(v) for k, v in errs.items()}}))
    return checks


# ---------------------------------------------------------------------------
# 12. domains

def classify_by_inequalities(lam):
    l, z = l_values(lam), z_values(lam)
    lt = l[0].real < l[1].real
    zt = z[0].real < z[1].real
    return {(True, True): "D1", (True, False): "D2", (False, True): "D3", (False, False): "D4"}[(lt, zt)]


def suite_domain(cfg, ctx=None, n=10_000):
    rng = np.random.default_rng(cfg.seed + 12)
    lams = (rng.normal(size=n) + 1j * rng.normal(size=n)) * 0.8
    agree = total = 0
    for lam in lams:
        c = classify_domain(lam)
        if c == "Boundary":
            continue
        total += 1
        agree += c == classify_by_inequalities(lam)
    frac = agree / total
    return [_ge(12, "classify_domain agrees with the Re l, Re z inequalities", frac, 1.0, samples=total)]


# ---------------------------------------------------------------------------

class Context:
    """Lazily built data shared by the data-dependent suites."""

    def __init__(self, cfg, grid=None, lambda_set="default"):
        self.cfg = cfg
        self._grid = grid
        self._source = None
        self.lambda_set = lambda_set

    @property
    def grid(self):
        if self._grid is None:
            self._grid = build_grid(self.cfg)
        return self._grid

    @property
    def source(self):
        if self._source is None:
            self._source = FieldSource(self.grid)
        return self._source


SUITES = {
    "algebra": (suite_algebra,),
    "lax": (suite_lax,),
    "solver": (suite_solver,),
    "eigen": (suite_eigen,),
    "symmetry": (suite_symmetry,),
    "relations": (suite_relations,),
    "sn": (suite_sn,),
    "jump": (suite_jump,),
    "global": (suite_global,),
    "residue": (suite_residue,),
    "reconstruct": (suite_reconstruct,),
    "domain": (suite_domain,),
}
SUITES["spectral"] = SUITES["eigen"] + SUITES["symmetry"] + SUITES["relations"] + SUITES["sn"]
SUITES["rh"] = SUITES["jump"] + SUITES["global"] + SUITES["residue"]
SUITES["all"] = tuple(f for k in ("algebra", "lax", "solver", "eigen", "symmetry", "relations", "sn",
                                  "jump", "global", "residue", "reconstruct", "domain") for f in SUITES[k])


def run_suite(name, cfg, ctx=None, lambda_set="default"):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))}")
    ctx = ctx or Context(cfg, lambda_set=lambda_set)
    checks = []
    for fn in SUITES[name]:
        checks.extend(fn(cfg, ctx))
    return checks
