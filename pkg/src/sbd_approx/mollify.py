"""Radial bump mollifier, convolution by direct quadrature, and the jump commutator estimate."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .geometry import Rect
from .sbd_field import Field, frob, jump_integral, sym, sym_tensor_product

_CHUNK = 1 << 21


def _bump(rho2):
    out = np.zeros_like(rho2, dtype=float)
    m = rho2 < 1.0
    out[m] = np.exp(-1.0 / (1.0 - rho2[m]))
    return out


@lru_cache(maxsize=None)
def bump_mass() -> float:
    val, _ = integrate.quad(lambda r: np.exp(-1.0 / (1.0 - r * r)) * r, 0.0, 1.0,
                            epsabs=1e-15, epsrel=1e-13)
    return 2 * np.pi * val


@lru_cache(maxsize=None)
def profile_lp_norm_p(p: float) -> float:
    """Integral of phi^p over the unit ball for the normalized profile."""
    Z = 1.0 / bump_mass()
    val, _ = integrate.quad(lambda r: (Z * np.exp(-1.0 / (1.0 - r * r))) ** p * r, 0.0, 1.0,
                            epsabs=1e-15, epsrel=1e-12)
    return 2 * np.pi * val


@lru_cache(maxsize=64)
def _stencil(radius_cells: float):
    """Integer offsets within the open disk and raw profile values, gradients on them."""
    R = int(np.ceil(radius_cells))
    a = np.arange(-R, R + 1)
    A, B = np.meshgrid(a, a, indexing="ij")
    off = np.stack([A.ravel(), B.ravel()], 1).astype(float)
    rho2 = (off ** 2).sum(1) / radius_cells ** 2
    keep = rho2 < 1.0
    off, rho2 = off[keep], rho2[keep]
    val = _bump(rho2)
    # d/dx exp(-1/(1-|x|^2)) = -2x / (1-|x|^2)^2 * exp(...)
    dval = (-2.0 / (1.0 - rho2) ** 2 * val)[:, None] * off / radius_cells
    return off, val, dval


@dataclass(frozen=True)
class Mollifier:
    """phi_k(x) = k^2 phi(k x) with phi = Z exp(-1/(1-|x|^2)) on the unit disk."""

    k: float

    @property
    def radius(self) -> float:
        return 1.0 / self.k

    def phi(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return _bump((X ** 2).sum(1)) / bump_mass()

    def phi_k(self, X) -> np.ndarray:
        return self.k ** 2 * self.phi(self.k * np.atleast_2d(X))

    def stencil(self, hq: float):
        """Offsets, normalized weights and gradient weights on a lattice of spacing hq.

        Weights sum to one and gradient weights satisfy sum y (x) g = -I, so
        affine fields are reproduced exactly by the discrete convolution.
        """
        cells = self.radius / hq
        off, val, dval = _stencil(round(cells, 12))
        Y = off * hq
        w = val / val.sum()
        g = dval.copy()
        s = -(Y[:, 0] * g[:, 0]).sum()
        g = g / s
        return Y, w, g

    def kernel_array(self, hq: float):
        cells = self.radius / hq
        off, val, dval = _stencil(round(cells, 12))
        R = int(np.ceil(cells))
        K = np.zeros((2 * R + 1, 2 * R + 1))
        K[off[:, 0].astype(int) + R, off[:, 1].astype(int) + R] = val / val.sum()
        return K


def convolve_points(fun, X, Y, w):
    """sum_j w_j fun(X - Y_j) for a vector-valued evaluator, chunked over points."""
    X = np.atleast_2d(np.asarray(X, float))
    out = np.zeros((len(X), 2))
    step = max(1, _CHUNK // max(1, len(Y)))
    for s in range(0, len(X), step):
        Xc = X[s:s + step]
        P = (Xc[:, None, :] - Y[None, :, :]).reshape(-1, 2)
        V = fun(P).reshape(len(Xc), len(Y), 2)
        out[s:s + step] = np.einsum("j,njc->nc", w, V)
    return out


class MollifiedField(Field):
    """f * phi_k evaluated pointwise by lattice quadrature."""

    def __init__(self, f: Field, m: Mollifier, region: Rect, hq: float):
        self.f, self.m, self.domain, self.hq = f, m, region, hq
        self.h = f.h
        z = np.zeros((0, 2))
        self.segs = (z, z.copy(), z.copy())
        self.Y, self.w, self.g = m.stencil(hq)

    def eval(self, X):
        return convolve_points(self.f.eval, X, self.Y, self.w)

    def grad(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        out = np.zeros((len(X), 2, 2))
        step = max(1, _CHUNK // len(self.Y))
        for s in range(0, len(X), step):
            Xc = X[s:s + step]
            P = (Xc[:, None, :] - self.Y[None, :, :]).reshape(-1, 2)
            V = self.f.eval(P).reshape(len(Xc), len(self.Y), 2)
            out[s:s + step] = np.einsum("njc,jd->ncd", V, self.g)
        return out

    def one_sided(self, X, n, side):
        return self.eval(X)


def _check_margin(f: Field, region: Rect, r: float):
    room = region.dilate(r)
    C = room.corners()
    if not np.all(f.domain.contains(C, closed=True, tol=1e-12)):
        raise ValueError("field is not defined on region + B(0, 1/k); no room for convolution")


def mollify(f: Field, m: Mollifier, region: Rect | None = None, cells_per_radius: int = 8) -> MollifiedField:
    region = f.domain.dilate(-m.radius) if region is None else region
    _check_margin(f, region, m.radius)
    hq = min(f.h, m.radius / cells_per_radius)
    hq = m.radius / np.ceil(m.radius / hq - 1e-9)
    return MollifiedField(f, m, region, hq)


def convolved_strain(f: Field, X, Y, w) -> np.ndarray:
    """e(f) * phi by the same lattice quadrature."""
    X = np.atleast_2d(np.asarray(X, float))
    out = np.zeros((len(X), 2, 2))
    step = max(1, _CHUNK // len(Y))
    for s in range(0, len(X), step):
        Xc = X[s:s + step]
        P = (Xc[:, None, :] - Y[None, :, :]).reshape(-1, 2)
        E = f.strain(P).reshape(len(Xc), len(Y), 2, 2)
        out[s:s + step] = np.einsum("j,njcd->ncd", w, E)
    return out


@dataclass(frozen=True)
class CommutatorCheck:
    lhs: float
    rhs: float
    ratio: float
    holds: bool


def commutator_bound(f: Field, m: Mollifier, Q: Rect, p: float,
                     cells_per_radius: int = 16) -> CommutatorCheck:
    """Both sides of the mollifier commutator estimate on Q = center + (-2r, 2r)^2.

    lhs integrates |e(f * phi_r) - e(f) * phi_r|^p over the inner cube
    (-r, r)^2; rhs is ||phi_1||_p^p r^{-2(p-1)} |E^j f|(Q)^p.
    """
    r = m.radius
    if np.max(np.abs(Q.hw - 2 * r)) > 1e-9 * r:
        raise ValueError("cube half width must be twice the mollifier radius")
    hq = r / cells_per_radius
    Y, w, g = m.stencil(hq)
    inner = Rect(Q.center, (r, r), Q.angle)
    X, a = inner.cell_centers(hq)
    mf = MollifiedField(f, m, inner, hq)
    diff = sym(mf.grad(X)) - convolved_strain(f, X, Y, w)
    lhs = float((frob(diff) ** p).sum() * a)
    ej = jump_integral(f, Q, lambda amp, n: frob(sym_tensor_product(amp, n)))
    rhs = profile_lp_norm_p(p) * r ** (-2 * (p - 1)) * ej ** p
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs <= 1e-8 else np.inf)
    return CommutatorCheck(lhs, rhs, ratio, lhs <= rhs * (1 + 1e-6) + (1e-8 if rhs == 0 else 0.0))
