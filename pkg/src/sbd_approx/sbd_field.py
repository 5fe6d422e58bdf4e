"""Piecewise smooth displacement fields with an explicit jump set, and their measures.

A field is evaluated pointwise on arrays of points of shape (N, 2). Jumps live on
straight segments with a unit normal; the amplitude at a point of a segment is
the limit from the normal side minus the limit from the other side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .geometry import (Rect, as_segments, clip_segments, gauss_samples, merge_collinear,
                       segment_distance)

X_SYM, Y_SYM = sp.symbols("x y", real=True)


def sym(G: np.ndarray) -> np.ndarray:
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def frob(M: np.ndarray) -> np.ndarray:
    return np.sqrt((M * M).sum(axis=(-2, -1)))


def sym_tensor_product(a, b) -> np.ndarray:
    """(a (x) b + b (x) a) / 2 for single vectors or stacks of vectors."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return sym(a[..., :, None] * b[..., None, :])


@dataclass(frozen=True)
class JumpSet:
    """Oriented segments with amplitude samples at their midpoints."""

    p0: np.ndarray
    p1: np.ndarray
    normals: np.ndarray
    amplitude_samples: np.ndarray

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.p1 - self.p0, axis=1)

    def segments(self):
        return self.p0, self.p1, self.normals


class Field:
    """Base class. Subclasses set ``domain``, ``h``, ``segs`` and implement eval/grad."""

    domain: Rect
    h: float
    segs: tuple
    delta: float = 1e-9

    def eval(self, X) -> np.ndarray:
        raise NotImplementedError

    def grad(self, X) -> np.ndarray:
        """Absolutely continuous gradient density, grad[:, i, j] = d u_i / d x_j."""
        return _fd_grad(self.eval, X, 1e-6)

    def strain(self, X) -> np.ndarray:
        return sym(self.grad(X))

    def one_sided(self, X, n, side: int) -> np.ndarray:
        X = np.atleast_2d(X)
        return self.eval(X + side * self.delta * np.atleast_2d(n))

    def jump(self, X, n) -> np.ndarray:
        return self.one_sided(X, n, 1) - self.one_sided(X, n, -1)

    def jump_set(self) -> JumpSet:
        P0, P1, N = self.segs
        M = 0.5 * (P0 + P1)
        amp = self.jump(M, N) if len(M) else np.zeros((0, 2))
        return JumpSet(P0, P1, N, amp)

    def __add__(self, other):
        return SumField(self, other, 1.0, 1.0)

    def __sub__(self, other):
        return SumField(self, other, 1.0, -1.0)

    def __mul__(self, c):
        return ScaledField(self, float(c))

    __rmul__ = __mul__


def _fd_grad(fun, X, step):
    X = np.atleast_2d(np.asarray(X, float))
    G = np.empty((len(X), 2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step
        G[:, :, j] = (fun(X + e) - fun(X - e)) / (2 * step)
    return G


def _empty_segs():
    z = np.zeros((0, 2))
    return z, z.copy(), z.copy()


class ScaledField(Field):
    def __init__(self, base: Field, c: float):
        self.base, self.c = base, c
        self.domain, self.h, self.segs = base.domain, base.h, base.segs

    def eval(self, X):
        return self.c * self.base.eval(X)

    def grad(self, X):
        return self.c * self.base.grad(X)

    def one_sided(self, X, n, side):
        return self.c * self.base.one_sided(X, n, side)


class SumField(Field):
    """ca * a + cb * b with the union of both jump sets."""

    def __init__(self, a: Field, b: Field, ca: float, cb: float):
        if a.domain != b.domain:
            raise ValueError("fields live on different domains")
        self.a, self.b, self.ca, self.cb = a, b, ca, cb
        self.domain = a.domain
        self.h = min(a.h, b.h)
        segs = [np.vstack([s, t]) for s, t in zip(a.segs, b.segs)]
        self.segs = merge_collinear(segs) if len(segs[0]) else _empty_segs()

    def eval(self, X):
        return self.ca * self.a.eval(X) + self.cb * self.b.eval(X)

    def grad(self, X):
        return self.ca * self.a.grad(X) + self.cb * self.b.grad(X)

    def one_sided(self, X, n, side):
        return self.ca * self.a.one_sided(X, n, side) + self.cb * self.b.one_sided(X, n, side)


class AffineField(Field):
    """u(x) = b + A x; with A skew this is an infinitesimal rigid motion."""

    def __init__(self, b, A, domain: Rect, h: float = 1 / 64):
        self.b = np.asarray(b, float)
        self.A = np.asarray(A, float)
        self.domain, self.h, self.segs = domain, h, _empty_segs()

    def eval(self, X):
        return self.b + np.atleast_2d(X) @ self.A.T

    def grad(self, X):
        return np.broadcast_to(self.A, (len(np.atleast_2d(X)), 2, 2)).copy()

    def one_sided(self, X, n, side):
        return self.eval(X)


def _lambdify(expr):
    f = sp.lambdify((X_SYM, Y_SYM), expr, [{"Heaviside": np.heaviside}, "numpy"])

    def g(x, y):
        return np.broadcast_to(np.asarray(f(x, y), float), np.shape(x))

    return g


def parse_expr(s: str):
    return sp.sympify(s, locals={"x": X_SYM, "y": Y_SYM})


class PolyField(Field):
    """Component-labelled analytic field.

    ``components[c]`` is a pair of expressions in x, y defining the smooth part on
    component c (and its smooth extension everywhere); ``label_expr`` maps a point
    to its component index. Jump segments carry normals and optionally a declared
    amplitude expression.
    """

    def __init__(self, domain: Rect, components, label_expr: str = "0", jump_segments=(),
                 h: float = 1 / 64):
        self.domain = domain
        self.h = float(h)
        self.component_src = [[str(e) for e in c] for c in components]
        self.label_src = str(label_expr)
        self._exprs = [[parse_expr(str(e)) for e in c] for c in components]
        self._vals = [[_lambdify(e) for e in c] for c in self._exprs]
        self._grads = [[[_lambdify(sp.diff(e, v)) for v in (X_SYM, Y_SYM)] for e in c]
                       for c in self._exprs]
        lab = parse_expr(self.label_src)
        self._label = _lambdify(lab) if lab.free_symbols else (lambda x, y, c=int(lab): np.full(np.shape(x), c))
        self.jump_src = [dict(s) for s in jump_segments]
        if self.jump_src:
            P0 = np.array([s["p0"] for s in self.jump_src], float)
            P1 = np.array([s["p1"] for s in self.jump_src], float)
            N = np.array([s["normal"] for s in self.jump_src], float)
            N = N / np.linalg.norm(N, axis=1, keepdims=True)
            self.segs = (P0, P1, N)
        else:
            self.segs = _empty_segs()
        self._amp = [None if "amplitude_expr" not in s else
                     [_lambdify(parse_expr(str(e))) for e in s["amplitude_expr"]]
                     for s in self.jump_src]

    @property
    def n_components(self) -> int:
        return len(self._exprs)

    def label(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        lab = np.asarray(self._label(X[:, 0], X[:, 1])).astype(int)
        if lab.size and (lab.min() < 0 or lab.max() >= self.n_components):
            raise ValueError("label expression out of range")
        return lab

    def value(self, X, labels) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        labels = np.broadcast_to(labels, (len(X),))
        out = np.empty((len(X), 2))
        for c in range(self.n_components):
            m = labels == c
            if m.any():
                for i in range(2):
                    out[m, i] = self._vals[c][i](X[m, 0], X[m, 1])
        return out

    def grad_value(self, X, labels) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        labels = np.broadcast_to(labels, (len(X),))
        out = np.empty((len(X), 2, 2))
        for c in range(self.n_components):
            m = labels == c
            if m.any():
                for i in range(2):
                    for j in range(2):
                        out[m, i, j] = self._grads[c][i][j](X[m, 0], X[m, 1])
        return out

    def eval(self, X):
        X = np.atleast_2d(X)
        return self.value(X, self.label(X))

    def grad(self, X):
        X = np.atleast_2d(X)
        return self.grad_value(X, self.label(X))

    def one_sided(self, X, n, side):
        X = np.atleast_2d(np.asarray(X, float))
        lab = self.label(X + side * self.delta * np.atleast_2d(n))
        return self.value(X, lab)

    def declared_amplitude(self, X, seg: int):
        amp = self._amp[seg]
        if amp is None:
            return None
        X = np.atleast_2d(X)
        return np.stack([a(X[:, 0], X[:, 1]) for a in amp], 1)

    def to_spec(self) -> dict:
        x0, y0, x1, y1 = self.domain.bounds()
        return {"domain": [x0, y0, x1, y1], "components": self.component_src,
                "label_expr": self.label_src, "jump_segments": self.jump_src, "h": self.h}

    @classmethod
    def from_spec(cls, spec: dict) -> "PolyField":
        d = spec["domain"]
        dom = Rect.from_bounds(*d) if len(d) == 4 else Rect(d["center"], d["half_widths"])
        return cls(dom, spec["components"], spec.get("label_expr", "0"),
                   spec.get("jump_segments", []), spec.get("h", 1 / 64))


def consistency_error(f: PolyField, samples: int = 8) -> float:
    """Largest relative gap between declared amplitudes and one-sided differences."""
    worst = 0.0
    P0, P1, N = f.segs
    t = (np.arange(samples) + 0.5) / samples
    for s in range(len(P0)):
        X = P0[s] + t[:, None] * (P1[s] - P0[s])
        dec = f.declared_amplitude(X, s)
        if dec is None:
            continue
        got = f.jump(X, N[s])
        scale = 1.0 + np.abs(got).max()
        worst = max(worst, float(np.abs(dec - got).max() / scale))
    return worst


class ZeroExtended(Field):
    """The field extended by zero outside its domain.

    The domain boundary joins the jump set; its amplitude is the inner trace,
    taken as the one-sided limit of the smooth part.
    """

    def __init__(self, base: Field, pad: float | None = None):
        self.base = base
        self.inner = base.domain
        pad = max(base.domain.half_widths) if pad is None else pad
        self.domain = base.domain.dilate(pad)
        self.h = base.h
        E0, E1 = self.inner.edges()
        c = self.inner.c
        mid = 0.5 * (E0 + E1)
        D = E1 - E0
        N = np.stack([D[:, 1], -D[:, 0]], 1) / np.linalg.norm(D, axis=1, keepdims=True)
        N = np.where(((mid - c) * N).sum(1, keepdims=True) > 0, N, -N)
        P0, P1, Nb = base.segs
        self.boundary_segs = (E0, E1, N)
        self.segs = (np.vstack([P0, E0]), np.vstack([P1, E1]), np.vstack([Nb, N]))

    def _inside(self, X):
        return self.inner.contains(X)

    def eval(self, X):
        X = np.atleast_2d(X)
        out = np.zeros((len(X), 2))
        m = self._inside(X)
        if m.any():
            out[m] = self.base.eval(X[m])
        return out

    def grad(self, X):
        X = np.atleast_2d(X)
        out = np.zeros((len(X), 2, 2))
        m = self._inside(X)
        if m.any():
            out[m] = self.base.grad(X[m])
        return out

    def one_sided(self, X, n, side):
        X = np.atleast_2d(np.asarray(X, float))
        n = np.broadcast_to(np.atleast_2d(n), X.shape)
        probe = X + side * self.delta * n
        m = self._inside(probe)
        out = np.zeros((len(X), 2))
        if m.any():
            out[m] = self.base.one_sided(X[m], n[m], side)
        return out


def _crosses_jump(f: Field, A, B) -> bool:
    P0, P1, _ = f.segs
    for p, q in zip(P0, P1):
        d1, d2 = B - A, q - p
        den = d1[0] * d2[1] - d1[1] * d2[0]
        if abs(den) < 1e-300:
            continue
        r = p - A
        s = (r[0] * d2[1] - r[1] * d2[0]) / den
        t = (r[0] * d1[1] - r[1] * d1[0]) / den
        if 0 <= s <= 1 and 0 <= t <= 1:
            return True
    return False


def sym_gradient(f: Field, x, h: float | None = None) -> np.ndarray:
    """Symmetrized finite-difference gradient at a single point.

    Labelled fields difference their own component's smooth extension, which
    is the one-sided rule near the jump. Other fields pick, per axis, a central
    or one-sided stencil that does not cross the jump set.
    """
    x = np.asarray(x, float)
    h = f.h if h is None else h
    P0, P1, _ = f.segs
    if len(P0) and segment_distance(x[None], P0, P1)[0] < 1e-12:
        raise ValueError("point lies on the jump set; query a one-sided limit instead")
    G = np.empty((2, 2))
    if isinstance(f, PolyField):
        lab = f.label(x[None])
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            G[:, j] = (f.value(x + e, lab)[0] - f.value(x - e, lab)[0]) / (2 * h)
        return sym(G)
    u0 = f.eval(x[None])[0]
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fwd = not _crosses_jump(f, x, x + e)
        bwd = not _crosses_jump(f, x, x - e)
        if fwd and bwd:
            G[:, j] = (f.eval((x + e)[None])[0] - f.eval((x - e)[None])[0]) / (2 * h)
        elif fwd:
            G[:, j] = (-3 * u0 + 4 * f.eval((x + e)[None])[0] - f.eval((x + 2 * e)[None])[0]) / (2 * h)
        else:
            G[:, j] = (3 * u0 - 4 * f.eval((x - e)[None])[0] + f.eval((x - 2 * e)[None])[0]) / (2 * h)
    return sym(G)


@dataclass(frozen=True)
class EuMeasure:
    abs_cont: float
    jump: float
    total: float


def jump_integral(f: Field, region: Rect | None, integrand, segs=None) -> float:
    """Gauss quadrature of integrand(amplitude, normal) over jump segments in a region."""
    segs = f.segs if segs is None else as_segments(segs)
    if region is not None:
        segs = clip_segments(segs, region)
    X, W, N, _ = gauss_samples(segs)
    if len(X) == 0:
        return 0.0
    return float((W * integrand(f.jump(X, N), N)).sum())


def eu_measure(f: Field, region: Rect | None = None) -> EuMeasure:
    region = f.domain if region is None else region
    X, a = region.cell_centers(f.h)
    ac = float(frob(f.strain(X)).sum() * a)
    jp = jump_integral(f, region, lambda amp, n: frob(sym_tensor_product(amp, n)))
    return EuMeasure(ac, jp, ac + jp)


def lp_strain_norm(f: Field, p: float, region: Rect | None = None) -> float:
    if p <= 1:
        raise ValueError("p must exceed 1")
    region = f.domain if region is None else region
    X, a = region.cell_centers(f.h)
    return float((frob(f.strain(X)) ** p).sum() * a) ** (1.0 / p)


def lp_norm(f: Field, p: float = 1.0, region: Rect | None = None) -> float:
    region = f.domain if region is None else region
    X, a = region.cell_centers(f.h)
    return float((np.linalg.norm(f.eval(X), axis=1) ** p).sum() * a) ** (1.0 / p)


def bd_distance(f: Field, g: Field) -> float:
    """L1 distance plus total variation of E(f - g) with both jump sets merged."""
    if f.domain != g.domain:
        raise ValueError("fields live on different domains")
    d = f - g
    return lp_norm(d, 1.0) + eu_measure(d).total


def jump_energy(f: Field, subset=None) -> float:
    return jump_integral(f, None, lambda amp, n: np.linalg.norm(amp, axis=1), subset)


class FramedField(Field):
    """A field seen in a rotated frame: y = R^T (x - origin), components rotated alike."""

    def __init__(self, base: Field, origin, angle: float, domain: Rect | None = None):
        from .geometry import rotation
        self.base = base
        self.origin = np.asarray(origin, float)
        self.angle = float(angle)
        self.Rm = rotation(angle)
        self.h = base.h
        if domain is None:
            B = base.domain
            domain = Rect(tuple(self.to_local(B.c[None])[0]), tuple(B.hw), B.angle - self.angle)
        self.domain = domain
        P0, P1, N = base.segs
        self.segs = (self.to_local(P0), self.to_local(P1), N @ self.Rm) if len(P0) else _empty_segs()

    def to_local(self, X):
        return (np.atleast_2d(X) - self.origin) @ self.Rm

    def to_global(self, Y):
        return self.origin + np.atleast_2d(Y) @ self.Rm.T

    def eval(self, Y):
        return self.base.eval(self.to_global(Y)) @ self.Rm

    def grad(self, Y):
        G = self.base.grad(self.to_global(Y))
        return self.Rm.T @ G @ self.Rm

    def one_sided(self, Y, n, side):
        n = np.atleast_2d(n) @ self.Rm.T
        return self.base.one_sided(self.to_global(Y), n, side) @ self.Rm
