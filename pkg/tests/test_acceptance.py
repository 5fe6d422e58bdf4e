"""Acceptance criteria 1-9. Each test records one line shown in the terminal summary."""

import time

import numpy as np
import pytest

from helpers import flat_jump, poly, pure_jump, record, smooth
from sbd_approx import density_pipeline as dp
from sbd_approx import phase_field as pf
from sbd_approx.cli import CORPUS_IDS, corpus_field
from sbd_approx.extension import ReflectExtended, ReflectionParams, measure_extension_constants, trace_gap
from sbd_approx.geometry import Rect, h1_length
from sbd_approx.mollify import Mollifier, commutator_bound, mollify
from sbd_approx.rigid_fit import fit_rigid
from sbd_approx.rough_approx import classify_nodes
from sbd_approx.sbd_field import frob, sym_tensor_product

UNIT = Rect.from_bounds(0, 0, 1, 1)


def _seg(p0, p1):
    d = np.subtract(p1, p0)
    n = np.array([-d[1], d[0]]) / np.hypot(*d)
    return {"p0": [float(v) for v in p0], "p1": [float(v) for v in p1], "normal": [float(v) for v in n]}


def jump_corpus() -> dict:
    s = 0.3
    oblique = poly([["0.2*x", "0.1*y"], ["1 + 0.2*x", "0.5 + 0.1*y"]],
                   f"Piecewise((1, y > 0.5 + {s}*(x - 0.5)), (0, True))", [_seg((0, 0.5 - s / 2), (1, 0.5 + s / 2))])
    line = "Piecewise((0.45 + 0.1*x, x < 0.5), (0.5 - 0.16*(x - 0.5), True))"
    kinked = poly([["0", "0"], ["0.6", "-0.8"]], f"Piecewise((1, y > {line}), (0, True))",
                  [_seg((0, 0.45), (0.5, 0.5)), _seg((0.5, 0.5), (1, 0.42))])
    return {
        "pure-x": pure_jump((1.0, 0.0)), "pure-y": pure_jump((0.0, 1.0)), "pure-mixed": pure_jump((0.7, -0.4)),
        "strained": flat_jump(["0.3*x*y", "0.1*x**2"], ["1 + 0.3*x*y", "0.2 + 0.1*x**2"]),
        "varying": flat_jump(["x*y", "0"], ["x*y + 1 + 0.5*x", "0"]),
        "oblique": oblique, "kinked": kinked,
        "tip": flat_jump(["0", "0"], ["1", "0.5"], x0=0.45, x1=1.0),
        "curved": corpus_field("curved-crack-strained"), "rigid-flat": corpus_field("piecewise-rigid-flat"),
    }


# ------------------------------------------------------------------ 1
def test_criterion_1_constants():
    t = time.perf_counter()
    c = pf.constants(pf.psi_family("linear"), 2.0)
    dt = time.perf_counter() - t
    ok = c.b == 2.0 and abs(c.a - 8 / 3) <= 1e-9 and dt < 1.0
    record(1, ok, f"a={c.a:.15g} (|a-8/3|={abs(c.a - 8 / 3):.1e}) b={c.b:g} in {dt:.3f}s")
    assert ok


# ------------------------------------------------------------------ 2
def test_criterion_2_gamma_1d():
    t = time.perf_counter()
    rows = pf.gamma_check("jump", eps_list=(2 ** -3, 2 ** -4, 2 ** -5, 2 ** -6), h_ratio=8.0)
    dt = time.perf_counter() - t
    err = [r.rel_error for r in rows]
    ok = (rows[0].F_limit == pytest.approx(14 / 3) and err[-1] <= 0.05
          and all(b < a for a, b in zip(err, err[1:])) and dt < 60)
    record(2, ok, "rel errors " + ", ".join(f"{e:.4f}" for e in err) + f" in {dt:.1f}s")
    assert ok


# ------------------------------------------------------------------ 3
def test_criterion_3_fixed_point():
    f = corpus_field("piecewise-rigid-flat")
    t = time.perf_counter()
    worst = 0.0
    for k in (16, 32):
        row = dp.approximate_thm11(f, k).row
        worst = max(worst, row.bd_error, row.strain_lp_error, row.jump_symmdiff, row.jump_amp_error,
                    row.excluded_area, row.excluded_lp_error)
    dt = time.perf_counter() - t
    ok = worst <= 1e-6 and dt < 30
    record(3, ok, f"max metric {worst:.2e} in {dt:.1f}s")
    assert ok


# ------------------------------------------------------------------ 4
@pytest.fixture(scope="module")
def curved_sweep():
    f = corpus_field("curved-crack-strained")
    t = time.perf_counter()
    res = {k: dp.approximate_thm11(f, k, theta=0.1, eps=0.1) for k in (16, 32, 64, 128)}
    return res, time.perf_counter() - t


def test_criterion_4_convergence_sweep(curved_sweep):
    res, dt = curved_sweep
    a, b = res[16].row, res[128].row
    names = ("bd_error", "strain_lp_error", "jump_symmdiff", "jump_amp_error", "excluded_area")
    ratios = {n: getattr(a, n) / getattr(b, n) for n in names}
    ok = all(r >= 4 for r in ratios.values()) and dt < 300
    record(4, ok, " ".join(f"{n}x{r:.1f}" for n, r in ratios.items()) + f" in {dt:.0f}s")
    assert ok


# ------------------------------------------------------------------ 5
def test_criterion_5_node_bounds():
    theta = 0.1
    worst_count = worst_area = 0.0
    ok = True
    for name in CORPUS_IDS:
        f = corpus_field(name)
        F = ReflectExtended(f, pad=3.0)
        L = h1_length(f.segs)
        for k in (8, 16, 32, 64):
            c = classify_nodes(F, k, theta, UNIT)
            nb, area = len(c.bad), c.bad_region_area
            ok &= nb <= L * k / theta and area <= 256 * L / (k * theta)
            if L > 0:
                worst_count = max(worst_count, nb / (L * k / theta))
                worst_area = max(worst_area, area / (256 * L / (k * theta)))
    record(5, ok, f"max #bad/bound {worst_count:.3f}, max area/bound {worst_area:.4f}")
    assert ok


# ------------------------------------------------------------------ 6
def test_criterion_6_commutator():
    worst = 0.0
    ok = True
    fields = jump_corpus()
    for f in fields.values():
        for r in (1 / 8, 1 / 16, 1 / 32):
            Q = Rect((0.5, 0.5), (2 * r, 2 * r))
            for p in (1.5, 2.0, 3.0):
                c = commutator_bound(f, Mollifier(1 / r), Q, p)
                ok &= c.lhs <= c.rhs * (1 + 1e-6)
                worst = max(worst, c.ratio)
    record(6, ok, f"{len(fields)} fields x 3 radii x 3 exponents, max lhs/rhs {worst:.3f}")
    assert ok


# ------------------------------------------------------------------ 7
def test_criterion_7_extension():
    smooth_fields = [corpus_field("smooth-poly"), corpus_field("boundary-trace"),
                     smooth("x**3 - 0.4*y**2*x", "0.2*x*y + y**3")]
    gap = max(trace_gap(f, UNIT, face) for f in smooth_fields for face in ("top", "bottom", "left", "right"))
    q_err = 0.0
    for mu, nu in ((0.25, 0.5), (0.1, 0.9), (0.3, 0.35)):
        prm = ReflectionParams(mu, nu)
        q_err = max(q_err, abs(prm.q * mu + (1 - prm.q) * nu + 1) / prm.q)
    default = ReflectionParams()
    q_exact = default.q * default.mu + (1 - default.q) * default.nu == -1.0
    rects = {"big": Rect((0.5, 0.5), (0.4, 0.3)), "small": Rect((0.5, 0.5), (0.2, 0.15))}
    consts = {}
    for scale, R in rects.items():
        cmax = {}
        for name in CORPUS_IDS:
            f = corpus_field(name)
            for face in ("top", "bottom"):
                m = measure_extension_constants(f, R, face)
                for key in ("l1", "jump_length", "jump_energy", "strain"):
                    cmax[key] = max(cmax.get(key, 0.0), m[key])
        consts[scale] = cmax
    drift = {key: abs(consts["big"][key] / consts["small"][key] - 1) for key in consts["big"]}
    finite = all(np.isfinite(v) for c in consts.values() for v in c.values())
    ok = gap <= 1e-8 and q_exact and q_err <= 1e-15 and finite and max(drift.values()) <= 0.2
    record(7, ok, f"trace gap {gap:.1e}, q residual {q_err:.1e}, constants "
           + " ".join(f"{k}={consts['big'][k]:.2f}" for k in drift)
           + f", max drift {max(drift.values()):.3f}")
    assert ok


# ------------------------------------------------------------------ 8
def test_criterion_8_jump_creation():
    rows = [dp.approximate_thm12(corpus_field("smooth-poly"), k).row for k in (16, 32)]
    ok = all(r.jump_creation == 0.0 for r in rows)
    record(8, ok, f"smooth-poly created jump length {[r.jump_creation for r in rows]}")
    assert ok


@pytest.mark.xfail(strict=True, reason="the construction reproduces the pure jump exactly, so bd_error is 0 at every k")
def test_criterion_8_pure_jump_rate():
    f = corpus_field("pure-jump")
    e = [dp.approximate_thm12(f, k).row.bd_error for k in (16, 32, 64)]
    halves = all(b > 0 and 0.375 <= b / a <= 0.625 for a, b in zip(e, e[1:]))
    record(8, halves, f"pure-jump bd_error {e} (no halving: already exact)")
    assert halves


# ------------------------------------------------------------------ 9
def test_criterion_9_invariants(curved_sweep):
    parts = {}
    rng = np.random.default_rng(9)
    a, b = rng.normal(size=(10_000, 2)), rng.normal(size=(10_000, 2))
    n = frob(sym_tensor_product(a, b))
    ab = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    parts["sym-product"] = bool(np.all(n >= ab / np.sqrt(2) * (1 - 1e-12)) and np.all(n <= ab * (1 + 1e-12)))

    sq = Rect((0.5, 0.5), (0.25, 0.25))
    f = smooth("x*y + 0.3*y**2", "x**2 - 0.2*y")
    ok = True
    for seed in range(5):
        c = [float(v) for v in np.random.default_rng(seed).uniform(-2, 2, 2)]
        m = fit_rigid(f, sq).motion
        m2 = fit_rigid(m.as_field(sq), sq).motion
        ok &= np.allclose(m2.b, m.b, atol=1e-12) and abs(m2.omega - m.omega) < 1e-12
        g = smooth(f"x*y + 0.3*y**2 + {c[0]!r}", f"x**2 - 0.2*y + {c[1]!r}")
        mg = fit_rigid(g, sq).motion
        ok &= np.allclose(np.subtract(mg.b, m.b), c, atol=1e-12) and abs(mg.omega - m.omega) < 1e-12
    parts["rigid-fit"] = bool(ok)

    aff = smooth("0.7*x - 1.1*y + 0.2", "0.4*x + 0.9*y")
    X = rng.uniform(0.3, 0.7, (64, 2))
    parts["mollifier-affine"] = bool(np.allclose(mollify(aff, Mollifier(8)).eval(X), aff.eval(X), atol=1e-10))

    res, _ = curved_sweep
    agree = 0.0
    for k in (64, 128):
        sd = res[k].field.strips[0]
        for side in (-1, 1):
            for m in range(sd.count - 1):
                agree = max(agree, dp.adjacent_strip_agreement(res[k], 0, side, m))
    parts["adjacent-strip"] = agree <= 1e-10

    grid, u0, fixed, v0 = pf._bar_problem("jump", 2 ** -4, 1.0, 1.0, 2.0, 8.0)
    r = pf.minimize_F_eps(grid, u0, 2 ** -4, pf.psi_family("linear"), 2.0, fixed, v0)
    h = np.array(r.history)
    parts["energy-monotone"] = bool(np.all(np.diff(h) <= 1e-12 * np.maximum(1, h[:-1])))

    ok = all(parts.values())
    record(9, ok, ", ".join(f"{k} {'ok' if v else 'FAIL'}" for k, v in parts.items())
           + f" (strip agreement {agree:.1e}; full property suites in the module tests)")
    assert ok
