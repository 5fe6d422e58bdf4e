"""Jump-set covering, strip decomposition, gluing of local approximants, and convergence metrics.

The jump set is covered by disjoint oriented cubes in which it is a flat-ish
graph. Each half of a cube (below/above the graph) is cut into strips; on
each strip the field is reflected across a line just beside the graph and
approximated there, so the approximant on that half sees no jump near the
graph. Everything outside the cubes is approximated directly. The glued field
takes, at every point, the value of the unique local approximant owning it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np
from shapely.geometry import Polygon

from .extension import ReflectedField, ReflectExtended, ReflectionParams
from .geometry import Polyline, Rect, as_segments, gauss_samples
from .rough_approx import PROBE, RoughEngine, check_margin, grid_edges
from .sbd_field import Field, FramedField, ZeroExtended, frob, sym, sym_tensor_product

SEAM_FAT = 32 * np.sqrt(2)      # fattening of strip faces, in units of 1/k
REFLECT_BAND = 25 * np.sqrt(2)  # height of the reflection rectangles, in units of 1/k
RHO_MIN = 1e-3
ENGINE_VARIANT = {"thm11": "thm31", "thm12": "conv", "thm13": "inf"}


# ---------------------------------------------------------------------- covering
@dataclass
class CoverCube:
    """Oriented cube with the covered piece of jump set as a graph over its tangent axis."""

    rect: Rect
    t: np.ndarray
    g: np.ndarray
    segs: tuple
    boundary: bool = False

    @property
    def rho(self) -> float:
        return float(self.rect.half_widths[0])

    @property
    def axis_aligned(self) -> bool:
        return self.rect.angle == 0.0

    def height(self, t) -> np.ndarray:
        return np.interp(t, self.t, self.g)

    def surface(self) -> Polyline:
        V = self.rect.to_global(np.stack([self.t, self.g], 1))
        return Polyline(V)

    def slopes(self) -> np.ndarray:
        return np.diff(self.g) / np.diff(self.t)


@dataclass
class JumpCover:
    cubes: list
    boundary_cubes: list
    gamma_hat: tuple
    gamma_hat_boundary: tuple
    eta_eps: float
    epsilon: float
    uncovered_length: float
    tail_energy: float
    remainder_area: float

    @property
    def surfaces(self) -> list:
        return [c.surface() for c in self.cubes]

    @property
    def all_cubes(self) -> list:
        return self.cubes + self.boundary_cubes


def _chains(segs, tol: float = 1e-10):
    """Split segments into maximal chains joined at degree-2 vertices."""
    P0, P1, N = segs
    n = len(P0)
    if n == 0:
        return []
    pts = np.vstack([P0, P1])
    keys = [tuple(np.round(p / tol).astype(np.int64)) for p in pts]
    ends: dict = {}
    for i, key in enumerate(keys):
        ends.setdefault(key, []).append(i)
    used = np.zeros(n, bool)

    def other(e):
        return e + n if e < n else e - n

    def walk(seg, start_end):
        verts = [pts[start_end]]
        normals = []
        e = start_end
        while True:
            used[seg] = True
            normals.append(N[seg])
            far = other(e)
            verts.append(pts[far])
            nxt = [x for x in ends[keys[far]] if x % n != seg and not used[x % n]]
            if len(ends[keys[far]]) != 2 or not nxt:
                break
            e = nxt[0]
            seg = e % n
        return np.array(verts), np.array(normals)

    chains = []
    for key, lst in ends.items():
        if len(lst) != 2:
            for e in lst:
                if not used[e % n]:
                    chains.append(walk(e % n, e))
    for s in range(n):
        if not used[s]:
            chains.append(walk(s, s))
    return chains


def _frame_from_normal(nrm):
    n = np.asarray(nrm, float) / np.linalg.norm(nrm)
    if n[1] < 0 or (n[1] == 0 and n[0] > 0):
        n = -n
    ang = float(np.arctan2(-n[0], n[1]))
    if abs(ang) < 1e-14:
        ang = 0.0
    return ang


def _point_at_arclength(V, s):
    L = np.concatenate([[0], np.cumsum(np.linalg.norm(np.diff(V, axis=0), axis=1))])
    i = int(np.clip(np.searchsorted(L, s, side="right") - 1, 0, len(V) - 2))
    lam = (s - L[i]) / max(L[i + 1] - L[i], 1e-300)
    return V[i] + lam * (V[i + 1] - V[i]), i


def _local_graph(V, center, ang):
    R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    Y = (V - center) @ R
    return Y[:, 0], Y[:, 1]


def _fit_cube(V, N, eps):
    """Cube around a chain or None when the chain is not a flat enough graph."""
    L = float(np.linalg.norm(np.diff(V, axis=0), axis=1).sum())
    c, i = _point_at_arclength(V, L / 2)
    ang = _frame_from_normal(N[i])
    t, s = _local_graph(V, c, ang)
    dt = np.diff(t)
    if not (np.all(dt > 0) or np.all(dt < 0)):
        return None
    if dt[0] < 0:
        V, N, t, s = V[::-1], N[::-1], t[::-1], s[::-1]
    # recenter on the chain point at the middle of the tangent range
    tm = 0.5 * (t[0] + t[-1])
    j = int(np.clip(np.searchsorted(t, tm) - 1, 0, len(t) - 2))
    lam = (tm - t[j]) / (t[j + 1] - t[j])
    c = c + (V[j] - c) + lam * (V[j + 1] - V[j])
    ang = _frame_from_normal(N[j])
    t, s = _local_graph(V, c, ang)
    dt = np.diff(t)
    if not np.all(dt > 0):
        return None
    rho = float(max(-t[0], t[-1]))
    if rho < RHO_MIN:
        return None
    slopes = np.diff(s) / dt
    if np.abs(slopes).max() > eps / 2 or np.abs(s).max() > eps * rho / 2:
        return None
    rect = Rect(tuple(c), (rho, rho), ang)
    segs = (V[:-1].copy(), V[1:].copy(), N.copy())
    return CoverCube(rect, t, s, segs)


def _split_chain(V, N):
    L = float(np.linalg.norm(np.diff(V, axis=0), axis=1).sum())
    p, i = _point_at_arclength(V, L / 2)
    A = np.vstack([V[:i + 1], p])
    B = np.vstack([p, V[i + 1:]])
    keepA = np.linalg.norm(np.diff(A, axis=0), axis=1) > 1e-14
    keepB = np.linalg.norm(np.diff(B, axis=0), axis=1) > 1e-14
    NA = N[:i + 1][keepA]
    NB = N[i:][keepB]
    A = np.vstack([A[:-1][keepA], A[-1]])
    B = np.vstack([B[0], B[1:][keepB]])
    return (A, NA), (B, NB)


def _segment_energy(F: Field, segs):
    X, W, Nn, idx = gauss_samples(segs)
    if len(X) == 0:
        return np.zeros(len(segs[0]))
    dens = np.linalg.norm(F.jump(X, Nn), axis=1)
    return np.bincount(idx, W * dens, minlength=len(segs[0]))


def cover_jump_set(F: Field, eps: float, omega: Rect | None = None, target: str = "length",
                   boundary_segs=None) -> JumpCover:
    """Greedy cover of the jump set inside ``omega`` by disjoint graph cubes.

    ``target="length"`` covers all of it (uncovered length must stay below eps);
    ``target="energy"`` first keeps the highest-energy segments until the
    remaining jump energy is below eps and covers those only.
    """
    if not (0 < eps < 0.5):
        raise ValueError("eps must lie in (0, 1/2)")
    omega = getattr(F, "inner", F.domain) if omega is None else omega
    base = getattr(F, "base", None)
    segs = as_segments(base.segs if base is not None and hasattr(F, "inner") else F.segs)
    bsegs = as_segments(boundary_segs) if boundary_segs is not None else as_segments(())
    nb = len(bsegs[0])
    allsegs = tuple(np.vstack([a, b]) for a, b in zip(segs, bsegs))
    energy = _segment_energy(F, allsegs)
    chosen = np.ones(len(allsegs[0]), bool)
    if target == "energy":
        order = np.argsort(-energy, kind="stable")
        chosen[:] = False
        rest = energy.sum()
        for i in order:
            if rest < eps:
                break
            chosen[i] = True
            rest -= energy[i]
    is_boundary = np.zeros(len(allsegs[0]), bool)
    if nb:
        is_boundary[-nb:] = True
    pending = []
    for flag in (False, True):
        sel = chosen & (is_boundary == flag)
        for V, Nn in _chains(tuple(a[sel] for a in allsegs)):
            pending.append((V, Nn, flag))
    pending.sort(key=lambda c: -np.linalg.norm(np.diff(c[0], axis=0), axis=1).sum())
    accepted: list = []
    uncovered = 0.0
    while pending:
        V, Nn, flag = pending.pop(0)
        cube = _fit_cube(V, Nn, eps)
        if cube is not None and not any(cube.rect.overlaps(a.rect) for a in accepted):
            cube.boundary = flag
            accepted.append(cube)
            continue
        length = float(np.linalg.norm(np.diff(V, axis=0), axis=1).sum())
        if length / 2 < 2 * RHO_MIN:
            uncovered += length
            continue
        A, B = _split_chain(V, Nn)
        pending[0:0] = [(A[0], A[1], flag), (B[0], B[1], flag)]
    inner = [c for c in accepted if not c.boundary]
    bnd = [c for c in accepted if c.boundary]
    if target == "length" and uncovered >= eps:
        raise ValueError(f"cover leaves jump length {uncovered:.3g} >= eps uncovered")

    def gather(cs):
        if not cs:
            return as_segments(())
        return tuple(np.vstack([c.segs[i] for c in cs]) for i in range(3))

    gh, ghb = gather(inner), gather(bnd)
    covered_energy = sum(float(_segment_energy(F, c.segs).sum()) for c in accepted)
    tail = max(float(energy.sum()) - covered_energy, 0.0)
    eta = max(eps, tail)
    box = Polygon(omega.corners())
    rem = box.area - sum(box.intersection(Polygon(c.rect.corners())).area for c in accepted)
    return JumpCover(inner, bnd, gh, ghb, eta, eps, uncovered, tail, float(rem))


# ---------------------------------------------------------------------- strips
@dataclass
class StripDecomposition:
    cube: CoverCube
    k: int
    eta: float
    faces: np.ndarray
    faces_fat: np.ndarray
    heights: dict
    reflect_rects: dict
    compat: float
    window: np.ndarray | None = None

    @property
    def count(self) -> int:
        return len(self.faces)

    def strip_of(self, t) -> np.ndarray:
        edges = np.concatenate([self.faces[:, 0], [self.faces[-1, 1]]])
        return np.clip(np.searchsorted(edges, t, side="right") - 1, 0, self.count - 1)


def strip_decompose(cube: CoverCube, k: int, eta: float, strict: bool = False,
                    eps: float | None = None) -> StripDecomposition:
    """Strips of width 1/(eta k) along the cube face and admissible heights on both sides.

    Heights are in cube coordinates: below the graph the reflection line sits
    at h with the graph inside (h, h + 1/(2k)) over the fattened face; above it
    the mirror rule applies.
    """
    rho = cube.rho
    if strict:
        t_par = min(eps if eps is not None else eta, rho) / 16
        if k < 64 / t_par:
            raise ValueError(f"k below 64/t: need k >= {int(np.ceil(64 / t_par))}")
    count = max(1, int(np.floor(2 * eta * k * rho)))
    w = 1.0 / (eta * k)
    edges = -rho + w * np.arange(count + 1)
    edges[-1] = rho
    faces = np.stack([edges[:-1], edges[1:]], 1)
    fat = np.clip(faces + np.array([-SEAM_FAT, SEAM_FAT]) / k, -rho, rho)
    hm = np.empty(count)
    hp = np.empty(count)
    window = np.full(count, 0.5 / k)
    for m, (a, b) in enumerate(fat):
        inside = (cube.t > a) & (cube.t < b)
        g = np.concatenate([cube.g[inside], cube.height(np.array([a, b]))])
        lo, hi = g.min(), g.max()
        osc = hi - lo
        if k * osc >= 0.5 and strict:
            raise ValueError(f"no admissible height in strip {m}: graph oscillation {osc:.3g} >= 1/(2k)")
        if strict:
            slack = (window[m] - osc) / 2
        else:
            # fixed slack: adjacent heights drift only as much as the graph does.
            # The fattened faces are wider than the strips at moderate eps, so widen when needed.
            slack = 0.125 / k
            window[m] = max(window[m], osc + 0.25 / k)
        hm[m] = lo - slack
        hp[m] = hi + slack
    band = REFLECT_BAND / k
    rects = {}
    for side, hs in ((-1, hm), (1, hp)):
        R, Rp = [], []
        for (a, b), h in zip(fat, hs):
            cx, hx = (a + b) / 2, (b - a) / 2
            # R on the side whose values are kept, R' on the reflected side
            R.append(Rect((cx, h + side * band / 2), (hx, band / 2)))
            Rp.append(Rect((cx, h - side * band / 2), (hx, band / 2)))
        rects[side] = (R, Rp)
    compat = 0.0
    if count > 1:
        compat = float(k * max(np.abs(np.diff(hm)).max(), np.abs(np.diff(hp)).max()))
    return StripDecomposition(cube, k, eta, faces, fat, {-1: hm, 1: hp}, rects, compat, window)


# ---------------------------------------------------------------------- gluing
@dataclass
class Owner:
    engine: RoughEngine
    frame: FramedField | None
    cube: int = -1
    side: int = 0
    strip: int = -1


def _clip_box(region: Rect, k: int) -> Rect:
    x0, y0, x1, y1 = region.bounds()
    d = 16.0 / k
    return Rect.from_bounds(x0 - d, y0 - d, x1 + d, y1 + d)


class _Clipped(Field):
    """Same field, jump segments restricted to a box (for faster bookkeeping)."""

    def __init__(self, base: Field, box: Rect):
        from .geometry import clip_segments
        self.base, self.domain, self.h = base, base.domain, base.h
        self.segs = clip_segments(base.segs, box) if len(base.segs[0]) else base.segs

    def eval(self, X):
        return self.base.eval(X)

    def grad(self, X):
        return self.base.grad(X)

    def one_sided(self, X, n, side):
        return self.base.one_sided(X, n, side)


class GluedApproximant(Field):
    """Characteristic-function gluing of local approximants."""

    def __init__(self, omega: Rect, k: int, owners: list, cover: JumpCover | None,
                 strips: list, hg: float):
        self.domain, self.k, self.owners = omega, k, owners
        self.cover, self.strips, self.hg = cover, strips, hg
        self.h = hg
        z = np.zeros((0, 2))
        self.segs = (z, z.copy(), z.copy())
        self._lookup = {}
        for idx, o in enumerate(owners):
            self._lookup[(o.cube, o.side, o.strip)] = idx

    def owner_of(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        own = np.zeros(len(X), np.int64)
        if self.cover is None:
            return own
        for j, (cube, sd) in enumerate(zip(self.cover.all_cubes, self.strips)):
            Y = cube.rect.to_local(X)
            rho = cube.rho
            inside = (np.abs(Y[:, 0]) < rho) & (np.abs(Y[:, 1]) < rho)
            if not inside.any():
                continue
            Yi = Y[inside]
            side = np.where(Yi[:, 1] > cube.height(Yi[:, 0]), 1, -1)
            m = sd.strip_of(Yi[:, 0])
            own[inside] = [self._lookup[(j, int(s), int(mm))] for s, mm in zip(side, m)]
        return own

    def cube_side(self, own) -> tuple:
        cube = np.array([o.cube for o in self.owners])[own]
        side = np.array([o.side for o in self.owners])[own]
        return cube, side

    def _eval_owner(self, o: Owner, X, probe, grad=False):
        if o.frame is None:
            return o.engine.grad_points(X, probe) if grad else o.engine.eval_points(X, probe)
        Rm = o.frame.Rm
        Y = o.frame.to_local(X)
        pr = None if probe is None else np.atleast_2d(probe) @ Rm
        if grad:
            return Rm @ o.engine.grad_points(Y, pr) @ Rm.T
        return o.engine.eval_points(Y, pr) @ Rm.T

    def eval(self, X, probe=None, owners=None):
        X = np.atleast_2d(np.asarray(X, float))
        if owners is None:
            owners = self.owner_of(X if probe is None else X + probe)
        out = np.empty((len(X), 2))
        for o in np.unique(owners):
            sel = owners == o
            pr = None if probe is None else np.broadcast_to(probe, X.shape)[sel]
            out[sel] = self._eval_owner(self.owners[o], X[sel], pr)
        return out

    def grad(self, X, probe=None, owners=None):
        X = np.atleast_2d(np.asarray(X, float))
        if owners is None:
            owners = self.owner_of(X if probe is None else X + probe)
        out = np.empty((len(X), 2, 2))
        for o in np.unique(owners):
            sel = owners == o
            pr = None if probe is None else np.broadcast_to(probe, X.shape)[sel]
            out[sel] = self._eval_owner(self.owners[o], X[sel], pr, grad=True)
        return out

    def one_sided(self, X, n, side):
        X = np.atleast_2d(np.asarray(X, float))
        d = side * PROBE * self.hg * np.broadcast_to(np.atleast_2d(n), X.shape)
        return self.eval(X, d)

    # -------------------------------------------------------------- grid view
    def grid(self):
        """Values, strains, owners, piece labels and excluded flags on the cell grid of the domain."""
        x0, y0, x1, y1 = self.domain.bounds()
        hg = self.hg
        ni, nj = int(round((x1 - x0) / hg)), int(round((y1 - y0) / hg))
        xs = x0 + (np.arange(ni) + 0.5) * hg
        ys = y0 + (np.arange(nj) + 0.5) * hg
        X = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1)
        own = self.owner_of(X.reshape(-1, 2)).reshape(ni, nj)
        U = np.empty((ni, nj, 2))
        E = np.empty((ni, nj, 2, 2))
        piece = np.empty((ni, nj), np.int64)
        excl = np.empty((ni, nj), bool)
        for o in np.unique(own):
            sel = own == o
            ow = self.owners[o]
            if ow.frame is None:
                ii, jj = np.nonzero(sel)
                i0, i1, j0, j1 = ii.min(), ii.max() + 1, jj.min(), jj.max() + 1
                blk = ow.engine.eval_block(int(i0), int(i1), int(j0), int(j1))
                loc = (ii - i0, jj - j0)
                U[ii, jj] = blk.U[loc]
                E[ii, jj] = blk.E[loc]
                piece[ii, jj] = blk.piece[loc]
                excl[ii, jj] = blk.excluded[loc]
            else:
                Xs = X[sel]
                U[sel] = self._eval_owner(ow, Xs, None)
                E[sel] = sym(self._eval_owner(ow, Xs, None, grad=True))
                Y = ow.frame.to_local(Xs)
                p, e = ow.engine.point_info(Y)
                piece[sel] = p
                excl[sel] = e
        _, label = np.unique(np.stack([own.ravel(), piece.ravel()], 1), axis=0, return_inverse=True)
        return X, U, E, own, label.reshape(ni, nj), excl


def _engine_corner(omega: Rect):
    return np.array(omega.bounds()[:2])


def _extend(f: Field, mode: str, pad: float):
    if mode == "reflect":
        return ReflectExtended(f, pad=pad)
    if mode == "zero":
        return ZeroExtended(f, pad=pad)
    raise ValueError(f"unknown extension mode {mode!r}")


def build_glued(f: Field, k: int, variant: str, theta: float = 0.1, eps: float = 0.1,
                mode: str = "reflect", target: str = "length", strict_scales: bool = False,
                params: ReflectionParams = ReflectionParams(), m: int = 1, pad: float | None = None):
    """Cover, strips, local engines and the glued approximant for one k."""
    omega = f.domain
    x0, y0, x1, y1 = omega.bounds()
    pad = 2 * min(x1 - x0, y1 - y0) if pad is None else pad
    F = _extend(f, mode, pad)
    factor = {"thm31": 16.0, "inf": 8.0, "conv": 1.0 / np.sqrt(2)}[variant]
    check_margin(F, omega, k, factor)
    corner = _engine_corner(omega)
    bsegs = F.boundary_segs if mode == "zero" else None
    if len(f.segs[0]) or bsegs is not None:
        cover = cover_jump_set(F, eps, omega, target, bsegs)
        if not cover.all_cubes:
            cover = None
    else:
        cover = None
    box = _clip_box(omega, k)
    owners = [Owner(RoughEngine(_Clipped(F, box), k, theta, variant, corner, m), None)]
    strips = []
    if cover is not None:
        for j, cube in enumerate(cover.all_cubes):
            sd = strip_decompose(cube, k, cover.eta_eps, strict_scales, eps)
            strips.append(sd)
            for side in (-1, 1):
                for mm in range(sd.count):
                    h = sd.heights[side][mm]
                    if cube.axis_aligned:
                        base, frame = F, None
                        point = cube.rect.to_global(np.array([[0.0, h]]))[0]
                        nrm = -side * cube.rect.normal
                        ecorner = corner
                        cbox = _clip_box(cube.rect, k)
                    else:
                        frame = FramedField(F, cube.rect.c, cube.rect.angle)
                        base = frame
                        point = np.array([0.0, h])
                        nrm = np.array([0.0, -float(side)])
                        ecorner = np.array([-cube.rho, -cube.rho])
                        cbox = _clip_box(Rect((0.0, 0.0), (cube.rho, cube.rho)), k)
                    um = ReflectedField(_Clipped(base, cbox.dilate(cube.rho)), point, nrm, params)
                    eng = RoughEngine(_Clipped(um, cbox), k, theta, variant, ecorner, m)
                    owners.append(Owner(eng, frame, j, side, mm))
    hg = owners[0].engine.hg
    return F, GluedApproximant(omega, k, owners, cover, strips, hg)


# ---------------------------------------------------------------------- metrics
@dataclass
class ReportRow:
    k: int
    bd_error: float
    strain_lp_error: float
    jump_symmdiff: float
    jump_amp_error: float
    excluded_area: float
    excluded_lp_error: float
    jump_creation: float
    l1_error: float
    strain_l1_error: float
    jump_strain_error: float
    seam_length: float
    seam_energy: float
    eta_eps: float
    n_cubes: int
    n_strips: int


COLUMNS = [f.name for f in ReportRow.__dataclass_fields__.values()]


@dataclass
class ConvergenceReport:
    construction: str
    rows: list = field(default_factory=list)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([v if isinstance(v, (int, np.integer)) else f"{v:.17g}" for v in asdict(r).values()])
        return buf.getvalue()


@dataclass
class Measurement:
    row: ReportRow
    edges: object
    edge_owners: tuple
    tol: float


def measure(f: Field, F: Field, glued: GluedApproximant, p: float = 2.0) -> Measurement:
    """All convergence metrics of the glued approximant against f on the cell grid."""
    X, U, E, own, label, excl = glued.grid()
    hg = glued.hg
    a = hg * hg
    Xf = X.reshape(-1, 2)
    u = f.eval(Xf)
    eu = f.strain(Xf)
    Uf = U.reshape(-1, 2)
    Ef = E.reshape(-1, 2, 2)
    scale = 1.0 + float(np.abs(u).max())
    tol = 1e-9 * scale
    du = np.linalg.norm(Uf - u, axis=1)
    de = frob(Ef - eu)
    l1 = float(du.sum() * a)
    s1 = float(de.sum() * a)
    slp = float((de ** p).sum() * a) ** (1 / p)
    ex = excl.ravel()
    ex_area = float(ex.sum() * a)
    ex_lp = float((du[~ex] ** p).sum() * a)
    # grid edges between owners or pieces, except across the graph inside a cube
    cube_arr, side_arr = glued.cube_side(own.ravel())

    def skip(A, B):
        return (cube_arr[A] == cube_arr[B]) & (cube_arr[A] >= 0) & (side_arr[A] != side_arr[B])

    corner = np.array(glued.domain.bounds()[:2])
    edges = grid_edges(label, corner, hg, skip=skip)
    amp = np.zeros((len(edges.X), 2))
    if len(edges.X):
        d = PROBE * hg * edges.normal
        o_lo = own.ravel()[edges.lo]
        o_hi = own.ravel()[edges.hi]
        amp = glued.eval(edges.X, d, owners=o_hi) - glued.eval(edges.X, -d, owners=o_lo)
    else:
        o_lo = o_hi = np.zeros(0, np.int64)
    edges.amp = amp
    amag = np.linalg.norm(amp, axis=1)
    t_jump = amag > tol
    t_len = float(edges.length[t_jump].sum())
    t_amp = float((edges.length * amag).sum())
    t_sym = float((edges.length * frob(sym_tensor_product(amp, edges.normal))).sum()) if len(amp) else 0.0
    # jump samples on the jump set of f inside the domain
    segs = _jump_segments_in(f, F)
    Xs, W, Ns, _ = gauss_samples(segs, max_len=4 * hg)
    if len(Xs):
        ju = F.jump(Xs, Ns)
        d = PROBE * hg * Ns
        jk = glued.eval(Xs, d) - glued.eval(Xs, -d)
        a_u = np.linalg.norm(ju, axis=1) > tol
        a_k = np.linalg.norm(jk, axis=1) > tol
        s_sym = float(W[a_u ^ a_k].sum())
        s_amp = float((W * np.linalg.norm(ju - jk, axis=1)).sum())
        s_e = float((W * frob(sym_tensor_product(jk - ju, Ns))).sum())
        s_create = float(W[a_k & ~a_u].sum())
    else:
        s_sym = s_amp = s_e = s_create = 0.0
    owners = glued.owners
    seam = np.array([owners[x].cube >= 0 and owners[x].cube == owners[y].cube and
                     owners[x].side == owners[y].side and owners[x].strip != owners[y].strip
                     for x, y in zip(o_lo, o_hi)], bool)
    seam_len = float(edges.length[seam & t_jump].sum()) if len(seam) else 0.0
    seam_en = float((edges.length * amag)[seam].sum()) if len(seam) else 0.0
    jump_part = s_e + t_sym
    cover = glued.cover
    row = ReportRow(
        k=glued.k, bd_error=l1 + s1 + jump_part, strain_lp_error=slp,
        jump_symmdiff=s_sym + t_len, jump_amp_error=s_amp + t_amp,
        excluded_area=ex_area, excluded_lp_error=ex_lp,
        jump_creation=s_create + t_len, l1_error=l1, strain_l1_error=s1, jump_strain_error=jump_part,
        seam_length=seam_len, seam_energy=seam_en,
        eta_eps=cover.eta_eps if cover else 0.0,
        n_cubes=len(cover.all_cubes) if cover else 0,
        n_strips=int(sum(2 * s.count for s in glued.strips)))
    return Measurement(row, edges, (o_lo, o_hi), tol)


def _jump_segments_in(f: Field, F: Field):
    P0, P1, N = as_segments(f.segs)
    if isinstance(F, ZeroExtended):
        B0, B1, BN = F.boundary_segs
        return np.vstack([P0, B0]), np.vstack([P1, B1]), np.vstack([N, BN])
    return P0, P1, N


# ---------------------------------------------------------------------- constructions
@dataclass
class Result:
    field: GluedApproximant
    row: ReportRow
    measurement: Measurement
    extended: Field


def _approximate(f, k, variant, theta, eps, mode, target, strict_scales, p, m=1) -> Result:
    F, glued = build_glued(f, k, variant, theta, eps, mode, target, strict_scales, m=m)
    meas = measure(f, F, glued, p)
    return Result(glued, meas.row, meas, F)


def approximate_thm11(f: Field, k: int, theta: float = 0.1, eps: float = 0.1, mode: str = "reflect",
                      p: float = 2.0, strict_scales: bool = False, m: int = 1) -> Result:
    """Good/bad rough approximation on strips and remainder; all convergence metrics."""
    return _approximate(f, k, "thm31", theta, eps, mode, "length", strict_scales, p, m)


def approximate_thm12(f: Field, k: int, eps: float = 0.1, mode: str = "reflect",
                      p: float = 2.0, strict_scales: bool = False, m: int = 1) -> Result:
    """Plain mollification on strips and remainder; cover chosen by jump energy."""
    return _approximate(f, k, "conv", 0.5, eps, mode, "energy", strict_scales, p, m)


def approximate_thm13(f: Field, k: int, eps: float = 0.1, mode: str = "reflect",
                      p: float = 2.0, strict_scales: bool = False, m: int = 1) -> Result:
    """Jump-measure node rule on strips and remainder; cover chosen by jump energy."""
    return _approximate(f, k, "inf", 0.5, eps, mode, "energy", strict_scales, p, m)


APPROXIMATORS = {"11": approximate_thm11, "12": approximate_thm12, "13": approximate_thm13}


def sweep(f: Field, ks, construction: str = "11", **kw) -> ConvergenceReport:
    ks = list(ks)
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k values must be strictly increasing")
    rep = ConvergenceReport("thm" + construction)
    for k in ks:
        rep.rows.append(APPROXIMATORS[construction](f, k, **kw).row)
    return rep


# ---------------------------------------------------------------------- audits
@dataclass
class SeamAudit:
    seam_length: float
    seam_energy: float
    seam_count: int
    bound: float
    holds: bool


def seam_audit(result: Result) -> SeamAudit:
    """Seam length and energy between adjacent strips against 8/k per seam."""
    g = result.field
    count = int(sum(2 * (s.count - 1) for s in g.strips))
    L = result.row.seam_length
    bound = 8.0 / g.k * sum(2 * s.count for s in g.strips)
    return SeamAudit(L, result.row.seam_energy, count, bound, L <= bound + 1e-12)


def adjacent_strip_agreement(result: Result, cube: int = 0, side: int = -1, strip: int = 0) -> float:
    """Largest difference of two neighbouring strip approximants well below both heights."""
    g = result.field
    sd = g.strips[cube]
    if strip + 1 >= sd.count:
        return 0.0
    c = sd.cube
    a = max(sd.faces_fat[strip][0], sd.faces_fat[strip + 1][0])
    b = min(sd.faces_fat[strip][1], sd.faces_fat[strip + 1][1])
    hs = sd.heights[side][strip:strip + 2]
    off = (4 * np.sqrt(2) + 0.5) / g.k
    if side < 0:
        lo, hi = -c.rho, hs.min() - off
    else:
        lo, hi = hs.max() + off, c.rho
    if hi <= lo or b <= a:
        return 0.0
    n = 40
    T, S = np.meshgrid(np.linspace(a, b, n + 2)[1:-1], np.linspace(lo, hi, n + 2)[1:-1], indexing="ij")
    X = c.rect.to_global(np.stack([T.ravel(), S.ravel()], 1))
    o1 = g._lookup[(cube, side, strip)]
    o2 = g._lookup[(cube, side, strip + 1)]
    v1 = g._eval_owner(g.owners[o1], X, None)
    v2 = g._eval_owner(g.owners[o2], X, None)
    return float(np.abs(v1 - v2).max())
