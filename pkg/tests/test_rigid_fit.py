import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import poly, rigid_exprs, smooth
from sbd_approx.geometry import Rect
from sbd_approx.rigid_fit import RigidMotion, check_korn_poincare, exceptional_area_bound, fit_rigid

SQ = Rect.from_bounds(0, 0, 1, 1)
H = 1 / 64


def band_field(base, amp=(1.0, 0.0), y=0.5):
    """base plus amp on the thin band |y - 0.5| < H, bounded by two jump segments."""
    band = [f"{base[0]} + {amp[0]!r}", f"{base[1]} + {amp[1]!r}"]
    segs = [{"p0": [0.0, y - H], "p1": [1.0, y - H], "normal": [0.0, 1.0]},
            {"p0": [0.0, y + H], "p1": [1.0, y + H], "normal": [0.0, 1.0]}]
    label = f"Piecewise((1, (y > {y - H!r}) & (y < {y + H!r})), (0, True))"
    return poly([base, band], label, segs)


def test_rigid_input_is_fixed_point():
    f = smooth(*rigid_exprs(0.3, -0.7, 0.25))
    r = fit_rigid(f, SQ)
    assert np.allclose(r.motion.b, (0.3, -0.7), atol=1e-10)
    assert r.motion.omega == pytest.approx(0.25, abs=1e-10)
    assert r.l1_residual < 1e-12 and r.lp_residual < 1e-12


def test_pure_strain_on_centered_square_fits_zero():
    f = smooth("x", "0", domain=[-1, -1, 1, 1])
    r = fit_rigid(f, Rect.from_bounds(-1, -1, 1, 1), h=1 / 32)
    assert np.allclose(r.motion.b, 0, atol=1e-12) and abs(r.motion.omega) < 1e-12


def test_jump_strip_excluded():
    rig = rigid_exprs(0.1, 0.2, -0.4)
    r = fit_rigid(band_field(rig), SQ)
    assert np.allclose(r.motion.b, (0.1, 0.2), atol=1e-6)
    assert r.motion.omega == pytest.approx(-0.4, abs=1e-6)


def test_degenerate_cube_flagged():
    f = band_field(["0", "0"])
    # every cell of a tiny cube straddling a jump segment lies within the exclusion radius
    r = fit_rigid(f, Rect((0.5, 0.5 + H), (H / 8, H / 8)), h=H / 16)
    assert r.degenerate


def test_korn_poincare_rigid_ratios_zero():
    k = check_korn_poincare(smooth(*rigid_exprs(1.0, 2.0, 0.5)), SQ)
    assert k["l1_ratio"] == 0.0 and k["lp_ratio"] == 0.0


def test_korn_poincare_strain_ratio_finite():
    k = check_korn_poincare(smooth("x", "0"), SQ)
    assert 0 < k["l1_ratio"] < np.inf and 0 < k["lp_ratio"] < np.inf


def test_korn_poincare_jump_only_numerator_zero():
    k = check_korn_poincare(band_field(["0", "0"]), SQ)
    assert k["l1_ratio"] == 0.0 and k["lp_ratio"] == 0.0


@settings(max_examples=25, deadline=None, derandomize=True)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2))
def test_idempotence(b1, b2, om):
    f = smooth("x*y + 0.3*y**2", "x**2 - 0.2*y")
    m = fit_rigid(f, SQ).motion
    m2 = fit_rigid(m.as_field(SQ), SQ).motion
    assert np.allclose(m2.b, m.b, atol=1e-12) and abs(m2.omega - m.omega) < 1e-12


@settings(max_examples=25, deadline=None, derandomize=True)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_translation_equivariance(c1, c2):
    base = ["x*y + 0.3*y**2", "x**2 - 0.2*y"]
    f = smooth(*base)
    g = smooth(f"{base[0]} + {c1!r}", f"{base[1]} + {c2!r}")
    m, mg = fit_rigid(f, SQ).motion, fit_rigid(g, SQ).motion
    assert np.allclose(np.subtract(mg.b, m.b), (c1, c2), atol=1e-12)
    assert mg.omega == pytest.approx(m.omega, abs=1e-12)


def _poly_corpus(n=20, seed=7):
    rng = np.random.default_rng(seed)
    monos = ["x", "y", "x**2", "x*y", "y**2", "x**3", "x**2*y", "y**3", "x**4", "y**4"]
    out = []
    for _ in range(n):
        c = rng.normal(size=(2, len(monos))).round(3)
        out.append(smooth(*[" + ".join(f"({float(v)!r})*{m}" for v, m in zip(row, monos)) for row in c]))
    return out


def test_korn_poincare_ratio_scale_invariant():
    corpus = _poly_corpus()
    worst = {}
    for r in (1 / 4, 1 / 8, 1 / 16):
        cube = Rect((0.5, 0.5), (r, r))
        worst[r] = max(check_korn_poincare(f, cube, 2.0, h=r / 16)["l1_ratio"] for f in corpus)
    assert np.isfinite(worst[1 / 4])
    assert worst[1 / 16] <= 1.2 * worst[1 / 4]


@pytest.mark.parametrize("y", [0.5, 0.37, 0.5 + H / 3])
def test_exceptional_area_bound(y):
    f = band_field(["0", "0"], y=y)
    r = fit_rigid(f, SQ)
    assert r.exceptional_area <= exceptional_area_bound(2.0, H)


def test_rigid_motion_has_zero_strain_by_construction():
    m = RigidMotion((1.0, -1.0), 0.3)
    assert np.allclose(m.W + m.W.T, 0)
