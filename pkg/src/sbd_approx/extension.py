"""Two-fold scaled reflection across a straight face, and its measured constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Rect, clip_segments, gauss_samples, h1_length, merge_collinear
from .sbd_field import Field, frob

FACES = {"right": (0, 1.0), "left": (0, -1.0), "top": (1, 1.0), "bottom": (1, -1.0)}


@dataclass(frozen=True)
class ReflectionParams:
    mu: float = 0.25
    nu: float = 0.5

    def __post_init__(self):
        if not (0 < self.mu < self.nu < 1):
            raise ValueError("need 0 < mu < nu < 1")

    @property
    def q(self) -> float:
        return (1 + self.nu) / (self.nu - self.mu)

    @property
    def normal_stretch(self) -> float:
        """Factor relating the reflected normal-normal derivative to the original one."""
        q = self.q
        return q * self.mu ** 2 + (1 - q) * self.nu ** 2


class ReflectedField(Field):
    """Keeps ``base`` on the side s <= 0 of a face and reflects it to s > 0.

    The face passes through ``point`` with unit ``normal`` pointing away from the
    original side. With frame coordinates y = (t, s) and A = diag(1, -c), the
    extension is q A u(A y) + (1 - q) A u(A y) for c = mu and c = nu respectively.
    """

    def __init__(self, base: Field, point, normal, params: ReflectionParams = ReflectionParams(),
                 reach: float | None = None, domain: Rect | None = None):
        self.base, self.params = base, params
        self.p = np.asarray(point, float)
        n = np.asarray(normal, float)
        self.n = n / np.linalg.norm(n)
        self.t = np.array([-self.n[1], self.n[0]])
        self.B = np.stack([self.t, self.n], 1)
        self.reach = np.inf if reach is None else float(reach)
        self.domain = base.domain if domain is None else domain
        self.h = base.h
        self.segs = self._reflect_segments()

    def _s(self, X):
        return (np.atleast_2d(X) - self.p) @ self.n

    def _map(self, X, c):
        s = self._s(X)
        return X - (1 + c) * s[:, None] * self.n

    def _frame_vec(self, c):
        # A in global coordinates: B diag(1, -c) B^T
        return self.B @ np.diag([1.0, -c]) @ self.B.T

    def _reflect_segments(self):
        P0, P1, N = self.base.segs
        if len(P0) == 0:
            return P0, P1, N
        s0, s1 = self._s(P0), self._s(P1)
        # keep the part with s <= 0
        keep0, keep1, keepn = [], [], []
        for a, b, n, sa, sb in zip(P0, P1, N, s0, s1):
            if sa <= 0 and sb <= 0:
                keep0.append(a); keep1.append(b); keepn.append(n)
            elif sa < 0 or sb < 0:
                lam = sa / (sa - sb)
                m = a + lam * (b - a)
                if sa < 0:
                    keep0.append(a); keep1.append(m)
                else:
                    keep0.append(m); keep1.append(b)
                keepn.append(n)
        if not keep0:
            z = np.zeros((0, 2))
            return z, z.copy(), z.copy()
        K0, K1, KN = np.array(keep0), np.array(keep1), np.array(keepn)
        parts0, parts1, partsn = [K0], [K1], [KN]
        for c in (self.params.mu, self.params.nu):
            A = self._frame_vec(c)
            Ainv = self._frame_vec(1.0 / c)
            I0 = self.p + (K0 - self.p) @ Ainv.T
            I1 = self.p + (K1 - self.p) @ Ainv.T
            IN = KN @ A.T
            IN = IN / np.linalg.norm(IN, axis=1, keepdims=True)
            if np.isfinite(self.reach):
                box = self._reach_box(I0, I1)
                I0, I1, IN = clip_segments((I0, I1, IN), box)
            parts0.append(I0); parts1.append(I1); partsn.append(IN)
        segs = (np.vstack(parts0), np.vstack(parts1), np.vstack(partsn))
        L = np.linalg.norm(segs[1] - segs[0], axis=1)
        segs = tuple(a[L > 1e-14] for a in segs)
        return merge_collinear(segs) if len(segs[0]) else segs

    def _reach_box(self, I0, I1):
        T = np.concatenate([(I0 - self.p) @ self.t, (I1 - self.p) @ self.t])
        tc = 0.5 * (T.min() + T.max())
        tw = 0.5 * (T.max() - T.min()) + 1.0
        center = self.p + tc * self.t + 0.5 * self.reach * self.n
        ang = np.arctan2(self.t[1], self.t[0])
        return Rect(tuple(center), (tw, 0.5 * self.reach), ang)

    def eval(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        out = np.empty((len(X), 2))
        s = self._s(X)
        inner = s <= 0
        if inner.any():
            out[inner] = self.base.eval(X[inner])
        outer = ~inner
        if outer.any():
            Y = X[outer]
            q = self.params.q
            acc = np.zeros((len(Y), 2))
            for c, wgt in ((self.params.mu, q), (self.params.nu, 1 - q)):
                A = self._frame_vec(c)
                acc += wgt * self.base.eval(self._map(Y, c)) @ A.T
            out[outer] = acc
        return out

    def grad(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        out = np.empty((len(X), 2, 2))
        s = self._s(X)
        inner = s <= 0
        if inner.any():
            out[inner] = self.base.grad(X[inner])
        outer = ~inner
        if outer.any():
            Y = X[outer]
            q = self.params.q
            acc = np.zeros((len(Y), 2, 2))
            for c, wgt in ((self.params.mu, q), (self.params.nu, 1 - q)):
                A = self._frame_vec(c)
                acc += wgt * A @ self.base.grad(self._map(Y, c)) @ A
            out[outer] = acc
        return out

    def one_sided(self, X, n, side):
        X = np.atleast_2d(np.asarray(X, float))
        n = np.broadcast_to(np.atleast_2d(n), X.shape)
        out = np.empty((len(X), 2))
        s = self._s(X + side * self.delta * n)
        inner = s <= 0
        if inner.any():
            out[inner] = self.base.one_sided(X[inner], n[inner], side)
        outer = ~inner
        if outer.any():
            Y, m = X[outer], n[outer]
            q = self.params.q
            acc = np.zeros((len(Y), 2))
            for c, wgt in ((self.params.mu, q), (self.params.nu, 1 - q)):
                A = self._frame_vec(c)
                mm = m @ A.T
                mm = mm / np.linalg.norm(mm, axis=1, keepdims=True)
                Z = np.maximum(self._s(Y), 0.0)
                img = Y - (1 + c) * Z[:, None] * self.n
                acc += wgt * self.base.one_sided(img, mm, side) @ A.T
            out[outer] = acc
        return out


def face_frame(R: Rect, face: str):
    """Point on the named face of R and its outward unit normal."""
    if face not in FACES:
        raise ValueError(f"unknown face {face!r}")
    ax, sgn = FACES[face]
    loc = np.zeros(2)
    loc[ax] = sgn * R.half_widths[ax]
    n = R.R[:, ax] * sgn
    return R.to_global(loc[None])[0], n


def reflected_rect(R: Rect, face: str) -> Rect:
    """R union its mirror image across the named face."""
    ax, sgn = FACES[face]
    loc = np.zeros(2)
    loc[ax] = sgn * R.half_widths[ax]
    hw = list(R.half_widths)
    hw[ax] *= 2
    return Rect(tuple(R.to_global(loc[None])[0]), tuple(hw), R.angle)


def reflect_extend(f: Field, R: Rect, face: str,
                   params: ReflectionParams = ReflectionParams()) -> ReflectedField:
    """Extend f from R across one full face of R."""
    p, n = face_frame(R, face)
    P0, P1, _ = f.segs
    if len(P0):
        ax = FACES[face][0]
        width = 2 * R.half_widths[1 - ax]
        tang = R.R[:, 1 - ax]
        face_rect = Rect(tuple(p), (1e-10, width / 2 + 1e-10),
                         np.arctan2(tang[1], tang[0]) - np.pi / 2)
        clipped = clip_segments(f.segs, face_rect)
        if len(clipped[0]):
            raise ValueError("jump set touches the reflection face")
    Rhat = reflected_rect(R, face)
    reach = 2 * R.half_widths[FACES[face][0]]
    return ReflectedField(f, p, n, params, reach=reach, domain=Rhat)


def _jump_stats(f: Field, region: Rect):
    segs = clip_segments(f.segs, region)
    X, W, N, _ = gauss_samples(segs)
    amp = np.linalg.norm(f.jump(X, N), axis=1) if len(X) else np.zeros(0)
    return h1_length(segs), float((W * amp).sum())


def measure_extension_constants(f: Field, R: Rect, face: str = "top",
                                params: ReflectionParams = ReflectionParams(),
                                p: float = 2.0, h: float | None = None) -> dict:
    """Measured ratios (extended over original) for the L1, jump length, jump energy and strain bounds."""
    g = reflect_extend(f, R, face, params)
    Rhat = g.domain
    h = f.h if h is None else h

    def ratio(a, b):
        if b <= 1e-14:
            return 0.0 if a <= 1e-12 else np.inf
        return a / b

    X, a = R.cell_centers(h)
    Xh, ah = Rhat.cell_centers(h)
    l1 = float(np.linalg.norm(f.eval(X), axis=1).sum() * a)
    l1h = float(np.linalg.norm(g.eval(Xh), axis=1).sum() * ah)
    ep = float((frob(f.strain(X)) ** p).sum() * a)
    eph = float((frob(g.strain(Xh)) ** p).sum() * ah)
    L, JE = _jump_stats(f, R)
    Lh, JEh = _jump_stats(g, Rhat)
    return {"l1": ratio(l1h, l1), "jump_length": ratio(Lh, L), "jump_energy": ratio(JEh, JE),
            "strain": ratio(eph, ep), "q": params.q}


def trace_gap(f: Field, R: Rect, face: str = "top", params: ReflectionParams = ReflectionParams(),
              samples: int = 1000) -> float:
    """Largest mismatch between limits from both sides of the face, relative to field size."""
    g = reflect_extend(f, R, face, params)
    p, n = face_frame(R, face)
    ax = FACES[face][0]
    tang = R.R[:, 1 - ax]
    w = R.half_widths[1 - ax]
    s = (np.arange(samples) + 0.5) / samples * 2 * w - w
    X = p + s[:, None] * tang
    inside = g.one_sided(X, n, -1)
    outside = g.one_sided(X, n, 1)
    scale = 1.0 + np.abs(inside).max()
    return float(np.abs(outside - inside).max() / scale)


class ReflectExtended(Field):
    """A field on an axis-aligned rectangle extended across all four sides.

    Sides are reflected left/right first, then bottom/top, each with the
    two-fold scaled reflection. One round reaches twice the shorter side;
    larger pads repeat the construction on the extended rectangle. Rigid
    motions are reproduced exactly.
    """

    def __init__(self, base: Field, params: ReflectionParams = ReflectionParams(),
                 pad: float | None = None):
        self.base, self.params = base, params
        self.inner = base.domain
        x0, y0, x1, y1 = self.inner.bounds()
        pad = 2 * min(x1 - x0, y1 - y0) if pad is None else float(pad)
        if pad <= 0:
            raise ValueError("pad must be positive")
        self.pad = pad
        g, left = base, pad
        while left > 1e-15:
            x0, y0, x1, y1 = g.domain.bounds()
            step = min(left, 2 * min(x1 - x0, y1 - y0))
            for point, normal in (((x0, y0), (-1, 0)), ((x1, y0), (1, 0))):
                g = ReflectedField(g, point, normal, params, reach=step)
            for point, normal in (((x0, y0), (0, -1)), ((x0, y1), (0, 1))):
                g = ReflectedField(g, point, normal, params, reach=step)
            g.domain = Rect.from_bounds(x0 - step, y0 - step, x1 + step, y1 + step)
            left -= step
        self.chain = g
        self.domain = self.inner.dilate(pad)
        self.h = base.h
        self.segs = g.segs

    def eval(self, X):
        return self.chain.eval(X)

    def grad(self, X):
        return self.chain.grad(X)

    def one_sided(self, X, n, side):
        return self.chain.one_sided(X, n, side)
