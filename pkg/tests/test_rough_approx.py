import numpy as np
import pytest

from helpers import flat_jump, poly, rigid_exprs, smooth
from sbd_approx.cli import corpus_field
from sbd_approx.extension import ReflectExtended
from sbd_approx.geometry import Rect, h1_length, length_in_rect
from sbd_approx.rough_approx import (build_rough, build_rough_conv, build_rough_inf, check_margin,
                                     classify_nodes, lengths_in_boxes)
from sbd_approx.sbd_field import eu_measure, frob, jump_energy, lp_strain_norm

BIG = [-3.0, -3.0, 4.0, 4.0]
OMEGA = Rect.from_bounds(0, 0, 1, 1)
THETA = 0.1


def crack(lo, hi, y=0.5, x0=0.0, x1=1.0, amplitude=None):
    return flat_jump(lo, hi, y=y, x0=x0, x1=x1, amplitude=amplitude, domain=BIG)


def grid_points(res):
    eng = res.engine
    ni, nj = res.U.shape[:2]
    return eng.cell_centers(0, ni, 0, nj).reshape(ni, nj, 2)


def test_lengths_in_boxes_matches_clipping():
    P0 = np.array([[0.1, 0.2], [0.0, 0.9]])
    P1 = np.array([[0.9, 0.7], [1.0, 0.9]])
    lo = np.array([[0.0, 0.0], [0.4, 0.3], [0.5, 0.85]])
    hi = np.array([[1.0, 1.0], [0.6, 0.6], [0.7, 0.95]])
    got = lengths_in_boxes(P0, P1, lo, hi)
    want = [length_in_rect((P0, P1), Rect.from_bounds(*l, *h)) for l, h in zip(lo, hi)]
    assert np.allclose(got, want, atol=1e-14)


def test_margin_rejection_names_minimum_k():
    f = smooth("x", "y")
    F = ReflectExtended(f, pad=0.5)
    with pytest.raises(ValueError, match="need k >= 46"):
        check_margin(F, OMEGA, 16, 16)


def test_classify_jump_free_all_good():
    c = classify_nodes(smooth("x*y", "y", domain=BIG), 16, THETA, OMEGA)
    assert len(c.bad) == 0 and c.bad_region_area == 0.0 and len(c.good) == 64


def brute_force_bad(k, theta, P0, P1):
    """Independent oracle: enumerate nodes and clip the segment against each Q_z."""
    bad = []
    for x in (2 * np.arange(k // 2) + 1) / k:
        for y in (2 * np.arange(k // 2) + 1) / k:
            Q = Rect((x, y), (4 / k, 4 / k))
            if length_in_rect((np.array([P0]), np.array([P1])), Q) > theta / k:
                bad.append((x, y))
    return sorted(bad)


def test_classify_horizontal_crack_brute_force():
    f = crack(["0", "0"], ["1", "0"])
    c = classify_nodes(f, 16, THETA, OMEGA)
    want = brute_force_bad(16, THETA, [0, 0.5], [1, 0.5])
    assert sorted(map(tuple, np.round(c.bad, 12))) == want
    assert len(want) == 32


def test_classify_monotone_in_theta():
    f = corpus_field("curved-crack-strained")
    F = ReflectExtended(f, pad=3.0)
    lo = {tuple(z) for z in classify_nodes(F, 16, 0.9, OMEGA).bad}
    hi = {tuple(z) for z in classify_nodes(F, 16, 0.1, OMEGA).bad}
    assert lo <= hi


@pytest.mark.parametrize("k", [8, 16, 32])
def test_classification_bounds(k):
    f = crack(["0", "0"], ["1", "0"], x0=0.2, x1=0.9)
    c = classify_nodes(f, k, THETA, OMEGA)
    L = 0.7
    assert len(c.bad) <= L * k / THETA
    assert c.bad_region_area <= 256 * L / (k * THETA)


def test_rigid_input_fixed_point():
    f = smooth(*rigid_exprs(0.2, -0.3, 0.6), domain=BIG)
    r = build_rough(f, OMEGA, 16, THETA)
    X = grid_points(r)
    exact = np.stack([0.2 + 0.6 * X[..., 1], -0.3 - 0.6 * X[..., 0]], -1)
    assert np.abs(r.U - exact).max() <= 1e-8
    assert np.abs(r.E).max() <= 1e-8
    assert len(r.classification.bad) == 0


@pytest.fixture(scope="module")
def piecewise_rigid_runs():
    lo, hi = rigid_exprs(0.1, -0.05, 0.2), rigid_exprs(1.1, -0.05, 0.2)
    f = crack(lo, hi, amplitude=["1", "0"])
    return f, {k: build_rough(f, OMEGA, k, THETA) for k in (8, 16, 32, 64)}


def test_piecewise_rigid_strain_vanishes(piecewise_rigid_runs):
    _, runs = piecewise_rigid_runs
    for r in runs.values():
        assert (frob(r.E) ** 2).sum() * r.engine.hg ** 2 <= 1e-16


def test_piecewise_rigid_jump_length_constant_stable(piecewise_rigid_runs):
    _, runs = piecewise_rigid_runs
    C = [r.jump_length() * THETA / 1.0 for r in runs.values()]
    assert max(C) <= 2 * min(C)


def test_jump_set_inside_bad_region(piecewise_rigid_runs):
    _, runs = piecewise_rigid_runs
    r = runs[16]
    amp = np.linalg.norm(r.edges.amp, axis=1)
    X = r.edges.X[amp > 1e-9]
    inside = np.zeros(len(X), bool)
    for Q in r.classification.bad_region_cubes:
        inside |= Q.contains(X, closed=True, tol=1e-12)
    assert inside.all()


def test_smooth_strain_l1_order():
    f = smooth("x**2/2 + 0.1*y**3", "0.2*x*y", domain=BIG)
    ks = [8, 16, 32, 64]
    errs = []
    for k in ks:
        r = build_rough(f, OMEGA, k, THETA)
        X = grid_points(r)
        errs.append(np.linalg.norm(r.U - f.eval(X.reshape(-1, 2)).reshape(X.shape), axis=-1).mean())
    order = -np.polyfit(np.log(ks), np.log(errs), 1)[0]
    assert order >= 0.9


def test_determinism():
    f = ReflectExtended(corpus_field("curved-crack-strained"), pad=3.0)
    a, b = build_rough(f, OMEGA, 16, THETA), build_rough(f, OMEGA, 16, THETA)
    assert np.array_equal(a.U, b.U) and np.array_equal(a.E, b.E)


@pytest.fixture(scope="module")
def curved_sweep():
    f = corpus_field("curved-crack-strained")
    F = ReflectExtended(f, pad=3.0)
    out = {}
    for k in (8, 16, 32, 64):
        r = build_rough(F, OMEGA, k, THETA)
        X = grid_points(r).reshape(-1, 2)
        keep = ~r.block.excluded.ravel()
        a = r.engine.hg ** 2
        d = np.linalg.norm(r.U.reshape(-1, 2) - f.eval(X), axis=1)
        de = frob(r.E.reshape(-1, 2, 2) - f.strain(X))
        out[k] = {"l1": float(d[keep].sum() * a), "lp": float((de[keep] ** 2).sum() * a) ** 0.5,
                  "area": r.excluded_area, "jl": r.jump_length(), "je": r.jump_energy(), "res": r}
    return f, out


def test_excluded_area_decreases(curved_sweep):
    _, out = curved_sweep
    assert out[64]["area"] * 4 <= out[8]["area"]


@pytest.mark.xfail(strict=True, reason="every node is bad at k=8, so the complement of E_8 is empty "
                                       "and the restricted errors start at 0")
def test_excluded_errors_decrease_curved(curved_sweep):
    _, out = curved_sweep
    for key in ("l1", "lp"):
        assert out[64][key] * 4 <= out[8][key], key


def test_excluded_errors_curved_nonvacuous(curved_sweep):
    # once the complement is nonempty the errors shrink while it grows
    _, out = curved_sweep
    assert out[8]["area"] == pytest.approx(1.0)
    for key in ("l1", "lp"):
        assert out[64][key] < out[16][key], key


def test_excluded_errors_decrease_smooth():
    f = smooth("0.3*x**2*y + 0.1*y**4 - 0.2*x*y", "0.25*x**3 - 0.15*x*y**2 + 0.1*y", domain=BIG)
    errs = {}
    for k in (8, 64):
        r = build_rough(f, OMEGA, k, THETA)
        X = grid_points(r).reshape(-1, 2)
        a = r.engine.hg ** 2
        assert r.excluded_area == 0.0
        d = np.linalg.norm(r.U.reshape(-1, 2) - f.eval(X), axis=1)
        de = frob(r.E.reshape(-1, 2, 2) - f.strain(X))
        errs[k] = (d.sum() * a, ((de ** 2).sum() * a) ** 0.5)
    assert errs[64][0] * 4 <= errs[8][0] and errs[64][1] * 4 <= errs[8][1]


def _curved_C(f, out, ks):
    L = h1_length(f.segs)
    return [out[k]["jl"] * THETA / L for k in ks]


@pytest.mark.xfail(strict=True, reason="k=8 covers the whole square with bad cubes, so few jump edges survive")
def test_jump_length_constant_uniform_curved_all_k(curved_sweep):
    f, out = curved_sweep
    C = _curved_C(f, out, (8, 16, 32, 64))
    assert max(C) <= 2 * min(C)


def test_jump_length_constant_uniform_curved(curved_sweep):
    f, out = curved_sweep
    C = _curved_C(f, out, (16, 32, 64))
    assert max(C) <= 2 * min(C)


def test_jump_energy_bound(curved_sweep):
    f, out = curved_sweep
    je_u = jump_energy(f)
    for k, o in out.items():
        r = o["res"]
        nbhd = 0.0
        for Q in r.classification.bad_region_cubes:
            X, a = Q.cell_centers(r.engine.hg)
            nbhd += float(frob(f.strain(X)).sum() * a)
        assert o["je"] <= 64 * (je_u + nbhd)


def test_inf_jump_free_is_plain_mollification():
    f = smooth("x**2*y", "y**2 - x", domain=BIG)
    r = build_rough_inf(f, OMEGA, 16)
    c = build_rough_conv(f, OMEGA, 16)
    assert len(r.classification.bad) == 0
    assert np.array_equal(r.U, c.U)
    assert r.jump_length() == 0.0


def full_width_jump(amp=("1", "0")):
    seg = {"p0": [BIG[0], 0.5], "p1": [BIG[2], 0.5], "normal": [0.0, 1.0], "amplitude_expr": list(amp)}
    return poly([["0", "0"], list(amp)], "Piecewise((1, y > 0.5), (0, True))", [seg], domain=BIG)


def test_inf_pure_jump_length_bound():
    f = crack(["0", "0"], ["1", "0"], amplitude=["1", "0"])
    r = build_rough_inf(f, OMEGA, 16)
    ej = eu_measure(f, Rect.from_bounds(*BIG)).jump
    assert ej == pytest.approx(1 / np.sqrt(2), abs=1e-9)
    assert r.jump_length() <= 16 * ej


def test_inf_strain_energy_bound_recorded():
    f = corpus_field("curved-crack-strained")
    F = ReflectExtended(f, pad=3.0)
    base = lp_strain_norm(f, 2) ** 2
    ej = eu_measure(f).jump
    Cs = []
    for k in (16, 32):
        r = build_rough_inf(F, OMEGA, k)
        lhs = float((frob(r.E) ** 2).sum() * r.engine.hg ** 2)
        Cs.append(max(lhs - base, 0.0) / ej)
    assert all(np.isfinite(Cs))


def test_conv_rigid_fixed():
    f = smooth(*rigid_exprs(-0.4, 0.9, 1.3), domain=BIG)
    r = build_rough_conv(f, OMEGA, 16)
    X = grid_points(r)
    exact = np.stack([-0.4 + 1.3 * X[..., 1], 0.9 - 1.3 * X[..., 0]], -1)
    assert np.abs(r.U - exact).max() <= 1e-10


def test_conv_pure_jump_total_strain_bound():
    r = build_rough_conv(full_width_jump(), OMEGA, 16)
    lhs = float(frob(r.E).sum() * r.engine.hg ** 2)
    assert lhs <= 1 / np.sqrt(2) + 1e-6 * (1 + lhs)


def test_conv_smooth_total_strain_converges():
    f = smooth("x**2*y + 0.2*y**3", "x*y - 0.3*x**2", domain=BIG)
    target = eu_measure(smooth("x**2*y + 0.2*y**3", "x*y - 0.3*x**2", h=1 / 512)).abs_cont
    gaps = []
    for k in (8, 16, 32, 64):
        r = build_rough_conv(f, OMEGA, k)
        gaps.append(abs(float(frob(r.E).sum() * r.engine.hg ** 2) - target))
    assert gaps[-1] <= 0.05 * target
    assert all(b <= a * 1.05 for a, b in zip(gaps, gaps[1:]))
