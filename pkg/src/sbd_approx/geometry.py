"""Rectangles, segments, polylines and the length measures built on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GAUSS_ORDER = 16
_GX, _GW = np.polynomial.legendre.leggauss(GAUSS_ORDER)
GAUSS_T = 0.5 * (_GX + 1.0)
GAUSS_W = 0.5 * _GW


def rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Rect:
    """Open rectangle with center, half widths and a rotation angle.

    The local frame has first axis ``R[:, 0]`` and second axis ``R[:, 1]``;
    the second axis is the face normal used for oriented cubes.
    """

    center: tuple
    half_widths: tuple
    angle: float = 0.0

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        hw = tuple(float(v) for v in self.half_widths)
        if len(c) != 2 or len(hw) != 2:
            raise ValueError("Rect needs 2D center and half widths")
        if min(hw) < 0:
            raise ValueError("half widths must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", hw)
        object.__setattr__(self, "angle", float(self.angle))

    @classmethod
    def from_bounds(cls, x0, y0, x1, y1) -> "Rect":
        return cls(((x0 + x1) / 2, (y0 + y1) / 2), ((x1 - x0) / 2, (y1 - y0) / 2))

    @property
    def c(self) -> np.ndarray:
        return np.array(self.center)

    @property
    def hw(self) -> np.ndarray:
        return np.array(self.half_widths)

    @property
    def R(self) -> np.ndarray:
        return rotation(self.angle)

    @property
    def normal(self) -> np.ndarray:
        return self.R[:, 1].copy()

    @property
    def tangent(self) -> np.ndarray:
        return self.R[:, 0].copy()

    @property
    def area(self) -> float:
        return 4.0 * self.half_widths[0] * self.half_widths[1]

    @property
    def is_empty(self) -> bool:
        return min(self.half_widths) <= 0

    @property
    def axis_aligned(self) -> bool:
        return abs(np.sin(self.angle)) < 1e-14 and np.cos(self.angle) > 0

    def bounds(self):
        if not self.axis_aligned:
            raise ValueError("bounds only defined for axis-aligned rectangles")
        (cx, cy), (a, b) = self.center, self.half_widths
        return cx - a, cy - b, cx + a, cy + b

    def to_local(self, X) -> np.ndarray:
        return (np.asarray(X, float) - self.c) @ self.R

    def to_global(self, Y) -> np.ndarray:
        return self.c + np.asarray(Y, float) @ self.R.T

    def contains(self, X, closed: bool = False, tol: float = 0.0) -> np.ndarray:
        Y = np.abs(self.to_local(np.atleast_2d(X)))
        lim = self.hw + tol
        if closed:
            return np.all(Y <= lim, axis=-1)
        return np.all(Y < lim, axis=-1)

    def corners(self) -> np.ndarray:
        a, b = self.half_widths
        return self.to_global(np.array([[-a, -b], [a, -b], [a, b], [-a, b]]))

    def edges(self):
        """Four boundary segments as (P0, P1) arrays, counterclockwise."""
        C = self.corners()
        return C, np.roll(C, -1, axis=0)

    def dilate(self, d) -> "Rect":
        d = np.broadcast_to(np.asarray(d, float), (2,))
        return Rect(self.center, tuple(self.hw + d), self.angle)

    def overlaps(self, other: "Rect", tol: float = 1e-12) -> bool:
        """True when the open rectangles intersect (touching faces do not count)."""
        axes = [self.R[:, 0], self.R[:, 1], other.R[:, 0], other.R[:, 1]]
        A, B = self.corners(), other.corners()
        for ax in axes:
            pa, pb = A @ ax, B @ ax
            if pa.max() <= pb.min() + tol or pb.max() <= pa.min() + tol:
                return False
        return True

    def cell_centers(self, h: float):
        """Midpoints of a uniform cell grid of spacing about h covering the rectangle.

        Returns global points and the cell area.
        """
        nx = max(1, int(np.ceil(2 * self.half_widths[0] / h - 1e-9)))
        ny = max(1, int(np.ceil(2 * self.half_widths[1] / h - 1e-9)))
        a, b = self.half_widths
        xs = -a + (np.arange(nx) + 0.5) * (2 * a / nx)
        ys = -b + (np.arange(ny) + 0.5) * (2 * b / ny)
        Y = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1).reshape(-1, 2)
        return self.to_global(Y), (2 * a / nx) * (2 * b / ny)


@dataclass(frozen=True)
class Polyline:
    """Ordered vertices with one unit normal per segment.

    Default normals are the segment tangents rotated by +90 degrees.
    """

    vertices: np.ndarray
    normals: np.ndarray = field(default=None)

    def __post_init__(self):
        V = np.asarray(self.vertices, float).reshape(-1, 2)
        if len(V) < 2:
            raise ValueError("a polyline needs at least two vertices")
        D = np.diff(V, axis=0)
        L = np.linalg.norm(D, axis=1)
        if np.any(L <= 0):
            raise ValueError("consecutive vertices must be distinct")
        if self.normals is None:
            N = np.stack([-D[:, 1], D[:, 0]], 1) / L[:, None]
        else:
            N = np.asarray(self.normals, float).reshape(-1, 2)
            if len(N) != len(D):
                raise ValueError("need one normal per segment")
            if np.any(np.abs(np.linalg.norm(N, axis=1) - 1) > 1e-12):
                raise ValueError("normals must have unit length")
        V.setflags(write=False)
        N.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "normals", N)

    def segments(self):
        V = self.vertices
        return V[:-1].copy(), V[1:].copy(), self.normals.copy()

    def concat(self, other: "Polyline") -> "Polyline":
        if not np.allclose(self.vertices[-1], other.vertices[0]):
            raise ValueError("polylines do not share an endpoint")
        return Polyline(np.vstack([self.vertices, other.vertices[1:]]),
                        np.vstack([self.normals, other.normals]))


def as_segments(s):
    """Normalize a Polyline, a list of Polylines or a (P0, P1[, N]) tuple to arrays."""
    if isinstance(s, Polyline):
        return s.segments()
    if isinstance(s, (list, tuple)) and s and all(isinstance(p, Polyline) for p in s):
        parts = [p.segments() for p in s]
        return tuple(np.vstack([q[i] for q in parts]) for i in range(3))
    if isinstance(s, (list, tuple)) and len(s) == 0:
        z = np.zeros((0, 2))
        return z, z.copy(), z.copy()
    P0 = np.asarray(s[0], float).reshape(-1, 2)
    P1 = np.asarray(s[1], float).reshape(-1, 2)
    if len(s) > 2:
        N = np.asarray(s[2], float).reshape(-1, 2)
    else:
        D = P1 - P0
        L = np.linalg.norm(D, axis=1, keepdims=True)
        N = np.stack([-D[:, 1], D[:, 0]], 1) / np.where(L > 0, L, 1)
    return P0, P1, N


def h1_length(p) -> float:
    P0, P1, _ = as_segments(p)
    return float(np.linalg.norm(P1 - P0, axis=1).sum())


def clip_params(P0, P1, rect: Rect, closed: bool = True):
    """Parameter interval [t0, t1] of each segment inside the rectangle (Liang-Barsky).

    Empty intersections come back with t0 >= t1.
    """
    A = rect.to_local(np.atleast_2d(P0))
    B = rect.to_local(np.atleast_2d(P1))
    D = B - A
    t0 = np.zeros(len(A))
    t1 = np.ones(len(A))
    for ax in range(2):
        lo, hi = -rect.half_widths[ax], rect.half_widths[ax]
        d = D[:, ax]
        a = A[:, ax]
        par = np.abs(d) < 1e-300
        outside = par & ((a < lo) | (a > hi) if closed else (a <= lo) | (a >= hi))
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (lo - a) / d
            tb = (hi - a) / d
        tmin = np.where(par, -np.inf, np.minimum(ta, tb))
        tmax = np.where(par, np.inf, np.maximum(ta, tb))
        t0 = np.maximum(t0, tmin)
        t1 = np.minimum(t1, tmax)
        t1 = np.where(outside, t0 - 1.0, t1)
    return t0, t1


def length_in_rect(segs, rect: Rect) -> float:
    P0, P1, _ = as_segments(segs)
    if len(P0) == 0:
        return 0.0
    t0, t1 = clip_params(P0, P1, rect)
    return float((np.linalg.norm(P1 - P0, axis=1) * np.clip(t1 - t0, 0, None)).sum())


def clip_segments(segs, rect: Rect, min_len: float = 0.0):
    """Pieces of the segments lying inside the closed rectangle."""
    P0, P1, N = as_segments(segs)
    if len(P0) == 0:
        return P0, P1, N
    t0, t1 = clip_params(P0, P1, rect)
    D = P1 - P0
    keep = (t1 - t0) * np.linalg.norm(D, axis=1) > min_len
    return (P0[keep] + t0[keep, None] * D[keep], P0[keep] + t1[keep, None] * D[keep],
            N[keep])


def segment_distance(X, P0, P1) -> np.ndarray:
    """Distance from each point to the nearest of the given segments."""
    X = np.atleast_2d(np.asarray(X, float))
    out = np.full(len(X), np.inf)
    for a, b in zip(np.atleast_2d(P0), np.atleast_2d(P1)):
        d = b - a
        dd = d @ d
        t = np.clip(((X - a) @ d) / dd, 0.0, 1.0) if dd > 0 else np.zeros(len(X))
        dist = np.linalg.norm(X - a - t[:, None] * d, axis=1)
        np.minimum(out, dist, out=out)
    return out


def points_near_segments(X, P0, P1, radius: float) -> np.ndarray:
    """Boolean mask of points strictly within ``radius`` of some segment.

    Each segment only tests the points inside its padded bounding box.
    """
    X = np.atleast_2d(np.asarray(X, float))
    mask = np.zeros(len(X), bool)
    for a, b in zip(np.atleast_2d(P0), np.atleast_2d(P1)):
        lo = np.minimum(a, b) - radius
        hi = np.maximum(a, b) + radius
        cand = np.nonzero(np.all((X > lo) & (X < hi), axis=1) & ~mask)[0]
        if len(cand) == 0:
            continue
        d = b - a
        dd = d @ d
        Y = X[cand] - a
        t = np.clip(Y @ d / dd, 0.0, 1.0) if dd > 0 else np.zeros(len(cand))
        near = np.linalg.norm(Y - t[:, None] * d, axis=1) < radius
        mask[cand[near]] = True
    return mask


def gauss_samples(segs, max_len: float | None = None):
    """16-point Gauss samples on every segment (optionally subdivided).

    Returns points, weights (arc length), unit normals and the segment index.
    """
    P0, P1, N = as_segments(segs)
    pts, wts, nrm, idx = [], [], [], []
    for i, (a, b, n) in enumerate(zip(P0, P1, N)):
        L = float(np.linalg.norm(b - a))
        if L <= 0:
            continue
        m = 1 if max_len is None else max(1, int(np.ceil(L / max_len)))
        s = (np.arange(m)[:, None] + GAUSS_T[None, :]).ravel() / m
        pts.append(a + s[:, None] * (b - a))
        wts.append(np.tile(GAUSS_W, m) * L / m)
        nrm.append(np.tile(n, (len(s), 1)))
        idx.append(np.full(len(s), i))
    if not pts:
        z = np.zeros((0, 2))
        return z, np.zeros(0), z.copy(), np.zeros(0, int)
    return np.vstack(pts), np.concatenate(wts), np.vstack(nrm), np.concatenate(idx)


def _unmatched_length(a, b, match_tol, samples):
    P0, P1, _ = as_segments(a)
    Q0, Q1, _ = as_segments(b)
    if len(P0) == 0:
        return 0.0
    L = np.linalg.norm(P1 - P0, axis=1)
    t = (np.arange(samples) + 0.5) / samples
    X = (P0[:, None, :] + t[None, :, None] * (P1 - P0)[:, None, :]).reshape(-1, 2)
    if len(Q0) == 0:
        return float(L.sum())
    near = points_near_segments(X, Q0, Q1, match_tol).reshape(len(P0), samples)
    return float((L * (~near).mean(axis=1)).sum())


def symm_diff_measure(a, b, match_tol: float, samples: int = 64) -> float:
    """Length of a not within match_tol of b plus length of b not within match_tol of a."""
    if match_tol <= 0:
        raise ValueError("match_tol must be positive")
    return _unmatched_length(a, b, match_tol, samples) + _unmatched_length(b, a, match_tol, samples)


def merge_collinear(segs, tol: float = 1e-12):
    """Union of segments: collinear overlapping pieces are fused.

    Normals of a fused group follow the first segment of that group.
    """
    P0, P1, N = as_segments(segs)
    groups: list[dict] = []
    for a, b, n in zip(P0, P1, N):
        d = b - a
        L = np.linalg.norm(d)
        if L <= tol:
            continue
        u = d / L
        if u[0] < -tol or (abs(u[0]) <= tol and u[1] < 0):
            u = -u
        off = a[0] * u[1] - a[1] * u[0]
        for g in groups:
            if abs(abs(g["u"] @ u) - 1) < 1e-12 and abs(g["off"] - off) < 1e-9:
                break
        else:
            g = {"u": u, "off": off, "base": a.copy(), "n": n, "iv": []}
            groups.append(g)
        s0, s1 = sorted(((a - g["base"]) @ g["u"], (b - g["base"]) @ g["u"]))
        g["iv"].append((s0, s1))
    out0, out1, outn = [], [], []
    for g in groups:
        iv = sorted(g["iv"])
        cur = list(iv[0])
        merged = []
        for s0, s1 in iv[1:]:
            if s0 <= cur[1] + tol:
                cur[1] = max(cur[1], s1)
            else:
                merged.append(cur)
                cur = [s0, s1]
        merged.append(cur)
        for s0, s1 in merged:
            out0.append(g["base"] + s0 * g["u"])
            out1.append(g["base"] + s1 * g["u"])
            outn.append(g["n"])
    if not out0:
        z = np.zeros((0, 2))
        return z, z.copy(), z.copy()
    return np.array(out0), np.array(out1), np.array(outn)


@dataclass(frozen=True)
class CubeLattice:
    """Nodes z = origin + (2i, 2j)/k with the four concentric cubes around each node.

    ``origin`` is the domain's lower-left corner shifted by (1/k, 1/k), so the
    cells q_z tile the domain whenever its sides are multiples of 2/k.
    """

    origin: tuple
    k: int
    nodes: np.ndarray
    index: np.ndarray

    def node(self, i, j) -> np.ndarray:
        return np.array(self.origin) + 2.0 * np.array([i, j], float) / self.k

    def _cube(self, z, factor) -> Rect:
        return Rect(tuple(z), (factor / self.k, factor / self.k))

    def q(self, z) -> Rect:
        return self._cube(z, 1)

    def q_tilde(self, z) -> Rect:
        return self._cube(z, 2)

    def Q(self, z) -> Rect:
        return self._cube(z, 4)

    def Q_tilde(self, z) -> Rect:
        return self._cube(z, 8)

    def __len__(self):
        return len(self.nodes)


def cube_lattice(domain: Rect | None, k: int) -> CubeLattice:
    """All lattice nodes strictly inside an axis-aligned domain."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if domain is None or domain.is_empty:
        return CubeLattice((0.0, 0.0), k, np.zeros((0, 2)), np.zeros((0, 2), int))
    x0, y0, x1, y1 = domain.bounds()
    origin = (x0 + 1.0 / k, y0 + 1.0 / k)
    ni = int(np.floor((x1 - origin[0]) * k / 2 + 1e-9)) + 1
    nj = int(np.floor((y1 - origin[1]) * k / 2 + 1e-9)) + 1
    I, J = np.meshgrid(np.arange(ni), np.arange(nj), indexing="ij")
    idx = np.stack([I.ravel(), J.ravel()], 1)
    Z = np.array(origin) + 2.0 * idx / k
    inside = domain.contains(Z)
    return CubeLattice(origin, k, Z[inside], idx[inside])
