"""Least-squares projection onto infinitesimal rigid motions and exceptional cells."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Rect, length_in_rect, points_near_segments
from .sbd_field import AffineField, Field, frob

EXCEPTIONAL_RADIUS = 2.0  # in units of the cell spacing


@dataclass(frozen=True)
class RigidMotion:
    """a(x) = b + W x with W = [[0, omega], [-omega, 0]]."""

    b: tuple
    omega: float

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def W(self) -> np.ndarray:
        return np.array([[0.0, self.omega], [-self.omega, 0.0]])

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        return np.array(self.b) + X @ self.W.T

    def as_field(self, domain: Rect, h: float = 1 / 64) -> AffineField:
        return AffineField(self.b, self.W, domain, h)


@dataclass(frozen=True)
class FitResult:
    motion: RigidMotion
    l1_residual: float
    lp_residual: float
    exceptional_cells: np.ndarray
    exceptional_area: float
    degenerate: bool = False


def exceptional_area_bound(jump_length: float, h: float) -> float:
    """Area of cells within 2h of a segment set of total length L is at most this."""
    return (jump_length + 4 * h) * (4 * h + 2 * np.sqrt(2) * h)


def fit_rigid_samples(X, U, weights=None) -> RigidMotion:
    """Weighted L2 fit of b + W x to samples U at points X (3x3 normal equations)."""
    X = np.asarray(X, float)
    U = np.asarray(U, float)
    w = np.ones(len(X)) if weights is None else np.asarray(weights, float)
    c = (w[:, None] * X).sum(0) / w.sum()
    Y = X - c
    # basis: e1, e2, rotation about c, r(x) = (y2, -y1)
    A = np.zeros((3, 3))
    rhs = np.zeros(3)
    r = np.stack([Y[:, 1], -Y[:, 0]], 1)
    sw = w.sum()
    A[0, 0] = A[1, 1] = sw
    A[0, 2] = A[2, 0] = (w * r[:, 0]).sum()
    A[1, 2] = A[2, 1] = (w * r[:, 1]).sum()
    A[2, 2] = (w * (r * r).sum(1)).sum()
    rhs[0] = (w * U[:, 0]).sum()
    rhs[1] = (w * U[:, 1]).sum()
    rhs[2] = (w * (r * U).sum(1)).sum()
    if A[2, 2] <= 1e-300:
        return RigidMotion(rhs[:2] / sw, 0.0)
    sol = np.linalg.solve(A, rhs)
    om = sol[2]
    # a(x) = b' + W (x - c)  =>  b = b' - W c
    b = sol[:2] - np.array([om * c[1], -om * c[0]])
    return RigidMotion(b, om)


def exceptional_mask(f: Field, X, h: float) -> np.ndarray:
    P0, P1, _ = f.segs
    if len(P0) == 0:
        return np.zeros(len(X), bool)
    return points_near_segments(X, P0, P1, EXCEPTIONAL_RADIUS * h)


def fit_rigid(f: Field, cube: Rect, h: float | None = None, p: float = 2.0) -> FitResult:
    """Rigid motion closest in L2 to f over the cube minus the exceptional cells."""
    h = f.h if h is None else h
    X, a = cube.cell_centers(h)
    hc = np.sqrt(a)
    exc = exceptional_mask(f, X, hc)
    U = f.eval(X)
    keep = ~exc
    if not keep.any():
        motion = RigidMotion(U.mean(0), 0.0)
        return FitResult(motion, 0.0, 0.0, X, float(exc.sum() * a), True)
    motion = fit_rigid_samples(X[keep], U[keep])
    res = np.linalg.norm(U[keep] - motion(X[keep]), axis=1)
    return FitResult(motion, float(res.sum() * a), float((res ** p).sum() * a) ** (1 / p),
                     X[exc], float(exc.sum() * a))


def check_korn_poincare(f: Field, cube: Rect, p: float = 2.0, h: float | None = None) -> dict:
    """Measured constants of the Korn-Poincare bounds on cube Q with inner cube Q'.

    Q has side 2r and Q' = half of it around the same center. The rigid motion is
    fitted on Q' minus the exceptional cells. Ratios 0/0 are reported as 0.
    """
    h = f.h if h is None else h
    r = cube.half_widths[0]
    inner = Rect(cube.center, tuple(0.5 * cube.hw), cube.angle)
    fit = fit_rigid(f, inner, h, p)
    X, a = inner.cell_centers(h)
    keep = ~exceptional_mask(f, X, np.sqrt(a))
    res = np.linalg.norm(f.eval(X[keep]) - fit.motion(X[keep]), axis=1)
    num1 = float(res.sum() * a)
    nump = float((res ** p).sum() * a) ** (1 / p)
    XQ, aQ = cube.cell_centers(h)
    E = frob(f.strain(XQ))
    den1 = r * float(E.sum() * aQ)
    denp = r * float((E ** p).sum() * aQ) ** (1 / p)

    def ratio(n, d):
        if d <= 1e-14 * max(1.0, n):
            return 0.0 if n <= 1e-12 else np.inf
        return n / d

    P0, P1, _ = f.segs
    L = length_in_rect(f.segs, cube) if len(P0) else 0.0
    return {"l1_ratio": ratio(num1, den1), "lp_ratio": ratio(nump, denp),
            "exceptional_area": fit.exceptional_area,
            "exceptional_bound": exceptional_area_bound(length_in_rect(f.segs, inner) if len(P0) else 0.0,
                                                        np.sqrt(a)),
            "jump_length": L, "motion": fit.motion}
