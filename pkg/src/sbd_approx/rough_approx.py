"""Rough approximation on a k-lattice: good/bad nodes, exceptional cells, rigid patches, mollification.

Everything is computed on a cell grid of spacing 1/(8 k m) anchored at the
domain corner, so lattice cubes, bad-region edges and exceptional cells are
unions of grid cells. Three variants share the machinery:

``"thm31"``  nodes are bad when the jump length in Q_z exceeds theta/k; good
             nodes replace u by a fitted rigid motion on exceptional cells
             before mollifying; bad region is the union of Q_z.
``"inf"``    nodes are bad when the jump measure in the doubled cell exceeds
             k^-2; no exceptional cells; bad region is the union of doubled cells.
``"conv"``   plain mollification, no bad nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import Rect, cube_lattice, gauss_samples, points_near_segments
from .mollify import Mollifier
from .rigid_fit import RigidMotion, fit_rigid_samples
from .sbd_field import Field, frob, sym, sym_tensor_product

VARIANTS = ("thm31", "inf", "conv")


def lengths_in_boxes(P0, P1, lo, hi, chunk: int = 1 << 20) -> np.ndarray:
    """Total length of the segments inside each open axis-aligned box (lo, hi)."""
    P0 = np.atleast_2d(P0)
    P1 = np.atleast_2d(P1)
    lo = np.atleast_2d(lo)
    hi = np.atleast_2d(hi)
    out = np.zeros(len(lo))
    if len(P0) == 0 or len(lo) == 0:
        return out
    D = P1 - P0
    L = np.linalg.norm(D, axis=1)
    step = max(1, chunk // len(P0))
    for s in range(0, len(lo), step):
        l, h = lo[s:s + step, None, :], hi[s:s + step, None, :]
        t0 = np.zeros((len(l), len(P0)))
        t1 = np.ones((len(l), len(P0)))
        for ax in range(2):
            d = D[None, :, ax]
            a = P0[None, :, ax]
            par = np.abs(d) < 1e-300
            with np.errstate(divide="ignore", invalid="ignore"):
                ta = (l[..., ax] - a) / d
                tb = (h[..., ax] - a) / d
            tmin = np.where(par, -np.inf, np.minimum(ta, tb))
            tmax = np.where(par, np.inf, np.maximum(ta, tb))
            bad = par & ((a <= l[..., ax]) | (a >= h[..., ax]))
            t0 = np.maximum(t0, tmin)
            t1 = np.where(bad, -np.inf, np.minimum(t1, tmax))
        out[s:s + step] = (np.clip(t1 - t0, 0, None) * L[None, :]).sum(1)
    return out


@dataclass
class BlockResult:
    """Approximant on a block of grid cells [i0, i1) x [j0, j1)."""

    i0: int
    j0: int
    U: np.ndarray
    E: np.ndarray
    piece: np.ndarray
    excluded: np.ndarray
    bad: np.ndarray


MOLLIFIED = -1


class RoughEngine:
    """Lazy evaluator of the rough approximant of ``f`` at scale k."""

    def __init__(self, f: Field, k: int, theta: float = 0.1, variant: str = "thm31",
                 corner=(0.0, 0.0), m: int = 1):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if not (0 < theta < 1):
            raise ValueError("theta must lie in (0, 1)")
        self.f, self.k, self.theta, self.variant, self.m = f, int(k), float(theta), variant, int(m)
        self.corner = np.asarray(corner, float)
        self.c = 8 * self.m            # cells per 1/k
        self.nq = 2 * self.c           # cells per q-cell
        self.hg = 1.0 / (self.k * self.c)
        self.moll = Mollifier(self.k)
        self.kernel = self.moll.kernel_array(self.hg)
        self.R = (self.kernel.shape[0] - 1) // 2
        self.Yq, self.wq, self.gq = self.moll.stencil(self.hg)
        P0, P1, N = f.segs
        self.P0, self.P1, self.N = P0, P1, N
        self._motions: dict = {}
        self._bad_cache: dict = {}
        self._jump_samples = None

    # ------------------------------------------------------------------ lattice
    def node_center(self, I, J) -> np.ndarray:
        return self.corner + (2.0 * np.stack([I, J], -1) + 1.0) / self.k

    def cell_centers(self, i0, i1, j0, j1) -> np.ndarray:
        xs = self.corner[0] + (np.arange(i0, i1) + 0.5) * self.hg
        ys = self.corner[1] + (np.arange(j0, j1) + 0.5) * self.hg
        return np.stack(np.meshgrid(xs, ys, indexing="ij"), -1)

    def _jump_measure_samples(self):
        if self._jump_samples is None:
            X, W, N, _ = gauss_samples(self.f.segs, max_len=self.hg)
            dens = frob(sym_tensor_product(self.f.jump(X, N), N)) if len(X) else np.zeros(0)
            self._jump_samples = (X, W * dens)
        return self._jump_samples

    def bad_nodes(self, I0, I1, J0, J1) -> np.ndarray:
        """Boolean bad flags for node indices [I0, I1) x [J0, J1)."""
        key = (I0, I1, J0, J1)
        if key in self._bad_cache:
            return self._bad_cache[key]
        ni, nj = I1 - I0, J1 - J0
        if self.variant == "conv" or len(self.P0) == 0:
            out = np.zeros((ni, nj), bool)
        elif self.variant == "thm31":
            I, J = np.meshgrid(np.arange(I0, I1), np.arange(J0, J1), indexing="ij")
            Z = self.node_center(I, J).reshape(-1, 2)
            r = 4.0 / self.k
            L = lengths_in_boxes(self.P0, self.P1, Z - r, Z + r)
            out = (L > self.theta / self.k).reshape(ni, nj)
        else:
            X, w = self._jump_measure_samples()
            acc = np.zeros((ni, nj))
            u = (X - self.corner) * self.k / 2.0     # q-cell coordinates
            for di in (0, 1):
                for dj in (0, 1):
                    # node i' contains u when u in (i' - 0.5, i' + 1.5)
                    Ii = np.floor(u[:, 0] - 0.5).astype(int) + di
                    Jj = np.floor(u[:, 1] - 0.5).astype(int) + dj
                    inside = ((u[:, 0] > Ii - 0.5) & (u[:, 0] < Ii + 1.5) &
                              (u[:, 1] > Jj - 0.5) & (u[:, 1] < Jj + 1.5) &
                              (Ii >= I0) & (Ii < I1) & (Jj >= J0) & (Jj < J1))
                    np.add.at(acc, (Ii[inside] - I0, Jj[inside] - J0), w[inside])
            out = acc > self.k ** -2.0
        self._bad_cache[key] = out
        return out

    def _half_span(self):
        # half-cells (units 1/k) covered by the bad set of node i: [2i - lo, 2i + hi]
        return (3, 4) if self.variant == "thm31" else (1, 2)

    def bad_halfcells(self, a0, a1, b0, b1) -> np.ndarray:
        """Bad-region indicator on half-cells (side 1/k) [a0, a1) x [b0, b1)."""
        if self.variant == "conv":
            return np.zeros((a1 - a0, b1 - b0), bool)
        lo, hi = self._half_span()
        I0, I1 = (a0 - hi) // 2 - 1, (a1 + lo) // 2 + 2
        J0, J1 = (b0 - hi) // 2 - 1, (b1 + lo) // 2 + 2
        B = self.bad_nodes(I0, I1, J0, J1)
        out = np.zeros((a1 - a0, b1 - b0), bool)
        for I, J in zip(*np.nonzero(B)):
            i, j = I + I0, J + J0
            x0, x1 = max(2 * i - lo, a0), min(2 * i + hi + 1, a1)
            y0, y1 = max(2 * j - lo, b0), min(2 * j + hi + 1, b1)
            if x0 < x1 and y0 < y1:
                out[x0 - a0:x1 - a0, y0 - b0:y1 - b0] = True
        return out

    # ------------------------------------------------------------------ fits
    def motion(self, I: int, J: int) -> RigidMotion:
        """L2 rigid fit on the doubled cell of node (I, J) minus exceptional cells."""
        key = (int(I), int(J))
        if key not in self._motions:
            i0, j0 = I * self.nq - self.c, J * self.nq - self.c
            X = self.cell_centers(i0, i0 + 2 * self.nq, j0, j0 + 2 * self.nq).reshape(-1, 2)
            U = self.f.eval(X)
            keep = ~self._near_jump(X)
            if keep.any():
                self._motions[key] = fit_rigid_samples(X[keep], U[keep])
            else:
                self._motions[key] = RigidMotion(U.mean(0), 0.0)
        return self._motions[key]

    def _near_jump(self, X) -> np.ndarray:
        if len(self.P0) == 0:
            return np.zeros(len(X), bool)
        return points_near_segments(X, self.P0, self.P1, 2.0 * self.hg)

    # ------------------------------------------------------------------ exceptional owners
    def _owners(self, ii, jj, near):
        """Owning good node (lexicographic in (z2, z1)) for near-jump cells, or None."""
        ownI = np.full(ii.shape, np.iinfo(np.int64).min, dtype=np.int64)
        ownJ = np.full(ii.shape, np.iinfo(np.int64).min, dtype=np.int64)
        if not near.any():
            return ownI, ownJ, near
        q_i = np.floor_divide(ii, self.nq)
        q_j = np.floor_divide(jj, self.nq)
        lo_i = np.where(ii - q_i * self.nq < self.c, q_i - 1, q_i)
        lo_j = np.where(jj - q_j * self.nq < self.c, q_j - 1, q_j)
        sel = np.nonzero(near)
        li, lj = lo_i[sel], lo_j[sel]
        B = self.bad_nodes(int(li.min()), int(li.max()) + 2, int(lj.min()), int(lj.max()) + 2)
        bI0, bJ0 = int(li.min()), int(lj.min())
        found = np.zeros(len(li), bool)
        oI = np.zeros(len(li), np.int64)
        oJ = np.zeros(len(li), np.int64)
        for dj in (0, 1):
            for di in (0, 1):
                good = ~B[li + di - bI0, lj + dj - bJ0]
                take = good & ~found
                oI[take] = li[take] + di
                oJ[take] = lj[take] + dj
                found |= take
        ownI[sel] = np.where(found, oI, ownI[sel])
        ownJ[sel] = np.where(found, oJ, ownJ[sel])
        omega = np.zeros_like(near)
        omega[sel] = found
        return ownI, ownJ, omega

    def _apply_motions(self, X, I, J):
        out = np.empty((len(X), 2))
        keys = I.astype(np.int64) * (1 << 32) + (J.astype(np.int64) + (1 << 31))
        for key in np.unique(keys):
            sel = keys == key
            a = self.motion(int(I[sel][0]), int(J[sel][0]))
            out[sel] = a(X[sel])
        return out

    def u_tilde_block(self, i0, i1, j0, j1):
        """u with exceptional cells replaced by their owner's rigid motion."""
        X = self.cell_centers(i0, i1, j0, j1)
        shp = X.shape[:2]
        Xf = X.reshape(-1, 2)
        U = self.f.eval(Xf)
        omega = np.zeros(len(Xf), bool)
        if self.variant == "thm31" and len(self.P0):
            near = self._near_jump(Xf)
            ii, jj = np.meshgrid(np.arange(i0, i1), np.arange(j0, j1), indexing="ij")
            oI, oJ, omega = self._owners(ii.ravel(), jj.ravel(), near)
            if omega.any():
                U[omega] = self._apply_motions(Xf[omega], oI[omega], oJ[omega])
        return U.reshape(shp + (2,)), omega.reshape(shp)

    # ------------------------------------------------------------------ evaluation
    def eval_block(self, i0, i1, j0, j1) -> BlockResult:
        pad = self.R + 1
        Ut, omega = self.u_tilde_block(i0 - pad, i1 + pad, j0 - pad, j1 + pad)
        M = np.stack([ndimage.correlate(Ut[..., c], self.kernel, mode="nearest") for c in range(2)], -1)
        core = M[pad - 1:M.shape[0] - pad + 1, pad - 1:M.shape[1] - pad + 1]
        U = core[1:-1, 1:-1].copy()
        G = np.empty(U.shape[:2] + (2, 2))
        G[..., :, 0] = (core[2:, 1:-1] - core[:-2, 1:-1]) / (2 * self.hg)
        G[..., :, 1] = (core[1:-1, 2:] - core[1:-1, :-2]) / (2 * self.hg)
        E = sym(G)
        piece = np.full(U.shape[:2], MOLLIFIED, dtype=np.int64)
        a0, a1 = i0 // self.c, -(-i1 // self.c)
        b0, b1 = j0 // self.c, -(-j1 // self.c)
        H = self.bad_halfcells(a0, a1, b0, b1)
        ii = np.arange(i0, i1)
        jj = np.arange(j0, j1)
        bad = H[(ii // self.c - a0)[:, None], (jj // self.c - b0)[None, :]]
        if bad.any():
            X = self.cell_centers(i0, i1, j0, j1)
            bi, bj = np.nonzero(bad)
            I = (ii[bi] // self.nq)
            J = (jj[bj] // self.nq)
            U[bi, bj] = self._apply_motions(X[bi, bj], I, J)
            E[bi, bj] = 0.0
            piece[bi, bj] = I.astype(np.int64) * (1 << 32) + (J.astype(np.int64) + (1 << 31))
        excl = bad | omega[pad:-pad, pad:-pad]
        return BlockResult(i0, j0, U, E, piece, excl, bad)

    def _point_bad(self, X):
        if self.variant == "conv" or len(X) == 0 or len(self.P0) == 0:
            return np.zeros(len(X), bool)
        a = np.floor((X - self.corner) * self.k).astype(int)
        a0, b0 = a.min(0)
        a1, b1 = a.max(0) + 1
        H = self.bad_halfcells(int(a0), int(a1), int(b0), int(b1))
        return H[a[:, 0] - a0, a[:, 1] - b0]

    def _u_tilde_points(self, Y):
        U = self.f.eval(Y)
        if self.variant == "thm31" and len(self.P0):
            idx = np.floor((Y - self.corner) / self.hg).astype(np.int64)
            centers = self.corner + (idx + 0.5) * self.hg
            near = self._near_jump(centers)
            if near.any():
                oI, oJ, omega = self._owners(idx[:, 0], idx[:, 1], near)
                if omega.any():
                    U[omega] = self._apply_motions(Y[omega], oI[omega], oJ[omega])
        return U

    def _locate(self, X, probe):
        """Bad flags and q-cell indices of X, decided at X + probe."""
        P = X if probe is None else X + np.broadcast_to(probe, X.shape)
        bad = self._point_bad(P)
        q = np.floor((P - self.corner) * self.k / 2).astype(np.int64)
        return bad, q

    def point_info(self, X, probe=None):
        """Piece label and excluded flag of each point (same labels as eval_block)."""
        X = np.atleast_2d(np.asarray(X, float))
        P = X if probe is None else X + np.broadcast_to(probe, X.shape)
        bad, q = self._locate(X, probe)
        piece = np.full(len(X), MOLLIFIED, dtype=np.int64)
        piece[bad] = q[bad, 0] * (1 << 32) + (q[bad, 1] + (1 << 31))
        excl = bad.copy()
        if self.variant == "thm31" and len(self.P0):
            idx = np.floor((P - self.corner) / self.hg).astype(np.int64)
            near = self._near_jump(self.corner + (idx + 0.5) * self.hg)
            if near.any():
                _, _, omega = self._owners(idx[:, 0], idx[:, 1], near)
                excl |= omega
        return piece, excl

    def eval_points(self, X, probe=None) -> np.ndarray:
        """Pointwise value; ``probe`` offsets the point only when choosing its piece."""
        X = np.atleast_2d(np.asarray(X, float))
        out = np.empty((len(X), 2))
        bad, q = self._locate(X, probe)
        if bad.any():
            out[bad] = self._apply_motions(X[bad], q[bad, 0], q[bad, 1])
        good = ~bad
        if good.any():
            Xg = X[good]
            res = np.empty((len(Xg), 2))
            step = max(1, (1 << 20) // len(self.Yq))
            for s in range(0, len(Xg), step):
                Xc = Xg[s:s + step]
                P = (Xc[:, None, :] - self.Yq[None]).reshape(-1, 2)
                V = self._u_tilde_points(P).reshape(len(Xc), len(self.Yq), 2)
                res[s:s + step] = np.einsum("j,njc->nc", self.wq, V)
            out[good] = res
        return out

    def grad_points(self, X, probe=None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        out = np.zeros((len(X), 2, 2))
        bad, q = self._locate(X, probe)
        for n in np.nonzero(bad)[0]:
            out[n] = self.motion(int(q[n, 0]), int(q[n, 1])).W
        good = ~bad
        if good.any():
            Xg = X[good]
            res = np.empty((len(Xg), 2, 2))
            step = max(1, (1 << 20) // len(self.Yq))
            for s in range(0, len(Xg), step):
                Xc = Xg[s:s + step]
                P = (Xc[:, None, :] - self.Yq[None]).reshape(-1, 2)
                V = self._u_tilde_points(P).reshape(len(Xc), len(self.Yq), 2)
                res[s:s + step] = np.einsum("njc,jd->ncd", V, self.gq)
            out[good] = res
        return out


# ---------------------------------------------------------------------- jump edges
@dataclass
class EdgeSamples:
    """Midpoints of grid edges across which the piece label changes.

    ``lo``/``hi`` are flat cell indices on the - and + side of each edge; the
    normal points from ``lo`` to ``hi``.
    """

    X: np.ndarray
    normal: np.ndarray
    length: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    amp: np.ndarray | None = None


PROBE = 1e-7  # fraction of the grid spacing used to pick a side at an edge


def grid_edges(piece, corner, hg, i0=0, j0=0, skip=None) -> EdgeSamples:
    """Grid edges separating different piece labels (``skip(a, b)`` masks pairs to ignore)."""
    ni, nj = piece.shape
    flat = np.arange(ni * nj).reshape(ni, nj)
    Xs, Ns, Lo, Hi = [], [], [], []
    for ax in (0, 1):
        A = flat[:-1] if ax == 0 else flat[:, :-1]
        B = flat[1:] if ax == 0 else flat[:, 1:]
        pa, pb = piece.ravel()[A], piece.ravel()[B]
        diff = pa != pb
        if skip is not None:
            diff &= ~skip(A, B)
        if not diff.any():
            continue
        ii, jj = np.nonzero(diff)
        if ax == 0:
            X = np.stack([corner[0] + (i0 + ii + 1) * hg, corner[1] + (j0 + jj + 0.5) * hg], 1)
        else:
            X = np.stack([corner[0] + (i0 + ii + 0.5) * hg, corner[1] + (j0 + jj + 1) * hg], 1)
        n = np.zeros((len(X), 2))
        n[:, ax] = 1.0
        Xs.append(X)
        Ns.append(n)
        Lo.append(A[ii, jj])
        Hi.append(B[ii, jj])
    if not Xs:
        z = np.zeros((0, 2))
        e = np.zeros(0, np.int64)
        return EdgeSamples(z, z.copy(), np.zeros(0), e, e.copy(), z.copy())
    X = np.vstack(Xs)
    return EdgeSamples(X, np.vstack(Ns), np.full(len(X), hg), np.concatenate(Lo), np.concatenate(Hi))


# ---------------------------------------------------------------------- public records
@dataclass
class NodeClassification:
    good: np.ndarray
    bad: np.ndarray
    theta: float
    k: int
    bad_region_area: float
    bad_region_cubes: list = field(default_factory=list)
    good_region_area: float = 0.0


def _margin(omega: Rect, omega_tilde: Rect) -> float:
    x0, y0, x1, y1 = omega.bounds()
    X0, Y0, X1, Y1 = omega_tilde.bounds()
    return min(x0 - X0, y0 - Y0, X1 - x1, Y1 - y1)


def _inner_domain(f: Field) -> Rect:
    return getattr(f, "inner", f.domain)


def check_margin(f: Field, omega: Rect, k: int, factor: float):
    d = _margin(omega, f.domain)
    need = factor * np.sqrt(2)
    if d <= 0 or k <= need / d:
        kmin = np.inf if d <= 0 else int(np.floor(need / d)) + 1
        raise ValueError(f"k = {k} leaves no room around the domain: need k >= {kmin}")


def classify_nodes(f: Field, k: int, theta: float, omega: Rect | None = None,
                   variant: str = "thm31") -> NodeClassification:
    """Good and bad lattice nodes of the domain with the bad-region area.

    When ``omega`` is given, the field domain plays the enlarged domain and the
    lattice margin is enforced.
    """
    if omega is None:
        omega = _inner_domain(f)
    else:
        check_margin(f, omega, k, 16 if variant == "thm31" else 8)
    eng = RoughEngine(f, k, theta, variant, corner=omega.bounds()[:2])
    lat = cube_lattice(omega, k)
    if len(lat) == 0:
        z = np.zeros((0, 2))
        return NodeClassification(z, z.copy(), theta, k, 0.0)
    I0, J0 = lat.index.min(0)
    I1, J1 = lat.index.max(0) + 1
    B = eng.bad_nodes(int(I0), int(I1), int(J0), int(J1))
    isbad = B[lat.index[:, 0] - I0, lat.index[:, 1] - J0]
    lo, hi = eng._half_span()
    if isbad.any():
        bi = lat.index[isbad]
        a0, b0 = (bi * 2 - lo).min(0)
        a1, b1 = (bi * 2 + hi + 1).max(0)
        mask = np.zeros((a1 - a0, b1 - b0), bool)
        for i, j in bi:
            mask[2 * i - lo - a0:2 * i + hi + 1 - a0, 2 * j - lo - b0:2 * j + hi + 1 - b0] = True
        area = mask.sum() / k ** 2
    else:
        area = 0.0
    size = 4.0 if variant == "thm31" else 2.0
    cubes = [Rect(tuple(z), (size / k, size / k)) for z in lat.nodes[isbad]]
    good_area = (~isbad).sum() * 4.0 / k ** 2
    return NodeClassification(lat.nodes[~isbad], lat.nodes[isbad], theta, k, float(area),
                              cubes, float(good_area))


class ApproxField(Field):
    """Pointwise view of a rough approximant (for evaluation off the grid)."""

    def __init__(self, engine: RoughEngine, domain: Rect, segs=None):
        self.engine, self.domain, self.h = engine, domain, engine.hg
        z = np.zeros((0, 2))
        self.segs = (z, z.copy(), z.copy()) if segs is None else segs

    def eval(self, X):
        return self.engine.eval_points(X)

    def grad(self, X):
        return self.engine.grad_points(X)


@dataclass
class RoughApproximant:
    field: ApproxField
    engine: RoughEngine
    block: BlockResult
    classification: NodeClassification | None
    exceptional_area: float
    excluded_area: float
    edges: EdgeSamples

    @property
    def U(self):
        return self.block.U

    @property
    def E(self):
        return self.block.E

    def per_node_motions(self) -> dict:
        return dict(self.engine._motions)

    def jump_length(self, tol: float = 1e-9) -> float:
        amp = np.linalg.norm(self.edges.amp, axis=1)
        return float(self.edges.length[amp > tol].sum())

    def jump_energy(self) -> float:
        return float((self.edges.length * np.linalg.norm(self.edges.amp, axis=1)).sum())


def _grid_extent(omega: Rect, hg: float):
    x0, y0, x1, y1 = omega.bounds()
    ni = int(round((x1 - x0) / hg))
    nj = int(round((y1 - y0) / hg))
    if abs(ni * hg - (x1 - x0)) > 1e-9 or abs(nj * hg - (y1 - y0)) > 1e-9:
        raise ValueError("domain sides must be multiples of the grid spacing 1/(8k)")
    return ni, nj


def _build(f: Field, omega: Rect | None, k: int, theta: float, variant: str, m: int = 1,
           margin_factor: float = 16.0) -> RoughApproximant:
    inner = _inner_domain(f) if omega is None else omega
    check_margin(f, inner, k, margin_factor)
    corner = np.array(inner.bounds()[:2])
    eng = RoughEngine(f, k, theta, variant, corner=corner, m=m)
    ni, nj = _grid_extent(inner, eng.hg)
    blk = eng.eval_block(0, ni, 0, nj)
    cls = None if variant == "conv" else _classify_on(f, inner, k, theta, variant, eng)
    a = eng.hg ** 2
    _, om = eng.u_tilde_block(0, ni, 0, nj)
    edges = grid_edges(blk.piece, corner, eng.hg)
    d = PROBE * eng.hg * edges.normal
    edges.amp = eng.eval_points(edges.X, d) - eng.eval_points(edges.X, -d)
    return RoughApproximant(ApproxField(eng, inner), eng, blk, cls, float(om.sum() * a),
                            float(blk.excluded.sum() * a), edges)


def _classify_on(f, inner, k, theta, variant, eng):
    lat = cube_lattice(inner, k)
    I0, J0 = lat.index.min(0)
    I1, J1 = lat.index.max(0) + 1
    B = eng.bad_nodes(int(I0), int(I1), int(J0), int(J1))
    isbad = B[lat.index[:, 0] - I0, lat.index[:, 1] - J0]
    ni, nj = (int(round(2 * w * k)) for w in inner.half_widths)
    lo, hi = eng._half_span()
    H = eng.bad_halfcells(-hi - 1, ni + lo + 1, -hi - 1, nj + lo + 1)
    size = 4.0 if variant == "thm31" else 2.0
    return NodeClassification(lat.nodes[~isbad], lat.nodes[isbad], theta, k,
                              float(H.sum() / k ** 2),
                              [Rect(tuple(z), (size / k, size / k)) for z in lat.nodes[isbad]],
                              float((~isbad).sum() * 4.0 / k ** 2))


def build_rough(f: Field, omega: Rect | None, k: int, theta: float = 0.1, m: int = 1) -> RoughApproximant:
    """Good/bad construction with exceptional cells (length-based node rule)."""
    return _build(f, omega, k, theta, "thm31", m, 16.0)


def build_rough_inf(f: Field, omega: Rect | None, k: int, m: int = 1) -> RoughApproximant:
    """Good/bad construction with the jump-measure node rule and plain mollification on good cells."""
    return _build(f, omega, k, 0.5, "inf", m, 8.0)


def build_rough_conv(f: Field, omega: Rect | None, k: int, m: int = 1) -> RoughApproximant:
    """Plain mollification."""
    return _build(f, omega, k, 0.5, "conv", m, 1.0 / np.sqrt(2))
