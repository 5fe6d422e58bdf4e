"""Damage phase-field energies with cohesive limit: constants, evaluation, alternating minimization.

F_eps(u, v) = int v |e(u)|^2 + psi(v)/eps + eps^(p-1) |grad v|^p
F(u)        = int |e(u)|^2 + a H^1(J_u) + b int_J |[u] (.) nu|

Discretization: u and v are nodal on a uniform grid (1D bar or 2D rectangle);
every element uses the mean of its nodal v, the difference-quotient strain of
u and the difference-quotient gradient of v.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize, sparse
from scipy.sparse.linalg import cg

from .geometry import gauss_samples, h1_length
from .sbd_field import Field, frob, lp_strain_norm, sym_tensor_product


# ---------------------------------------------------------------------- damage profiles
@dataclass(frozen=True)
class Psi:
    """Decreasing damage profile psi on [0, 1] with psi(1) = 0."""

    value: Callable
    deriv: Callable | None = None
    name: str = "custom"

    def __call__(self, s):
        return self.value(np.asarray(s, float))

    def d(self, s):
        s = np.asarray(s, float)
        if self.deriv is not None:
            return self.deriv(s)
        e = 1e-7
        return (self.value(np.minimum(s + e, 1.0)) - self.value(np.maximum(s - e, 0.0))) / (
            np.minimum(s + e, 1.0) - np.maximum(s - e, 0.0))

    @property
    def affine(self) -> bool:
        s = np.linspace(0, 1, 9)
        return bool(np.allclose(np.diff(self(s), 2), 0.0, atol=1e-14))


def psi_family(name: str = "linear", c: float = 1.0, q: float = 2.0) -> Psi:
    """Named profiles: linear c(1-s), quadratic c(1-s)^2, power c(1-s)^q."""
    if name == "linear":
        return Psi(lambda s: c * (1 - s), lambda s: -c * np.ones_like(s), "linear")
    if name == "quadratic":
        return Psi(lambda s: c * (1 - s) ** 2, lambda s: -2 * c * (1 - s), "quadratic")
    if name == "power":
        return Psi(lambda s: c * (1 - s) ** q, lambda s: -q * c * (1 - s) ** (q - 1), "power")
    if name == "zero":
        return Psi(lambda s: 0.0 * s, lambda s: 0.0 * s, "zero")
    raise ValueError(f"unknown psi family {name!r}")


def _as_psi(psi) -> Psi:
    return psi if isinstance(psi, Psi) else Psi(psi)


def check_psi(psi, samples: int = 64):
    psi = _as_psi(psi)
    s = np.linspace(0.0, 1.0, samples)
    v = psi(s)
    if abs(float(psi(np.array([1.0]))[0])) > 1e-12:
        raise ValueError("psi(1) must vanish")
    if np.any(np.diff(v) > 1e-12):
        raise ValueError("psi must be decreasing on [0, 1]")
    return psi


# ---------------------------------------------------------------------- constants
@dataclass(frozen=True)
class CohesiveConstants:
    a: float
    b: float
    psi: Psi
    p: float


def constants(psi, p: float = 2.0) -> CohesiveConstants:
    """Surface constant a and cohesive slope b of the limit energy."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    psi = check_psi(psi)
    pp = p / (p - 1)
    val, _ = integrate.quad(lambda s: max(float(psi(np.array([s]))[0]), 0.0) ** (1 / p), 0.0, 1.0,
                            epsabs=1e-13, epsrel=1e-12, limit=200)
    a = 2 * p ** (1 / p) * pp ** (1 / pp) * val
    b = 2 * np.sqrt(max(float(psi(np.array([0.0]))[0]), 0.0))
    return CohesiveConstants(float(a), float(b), psi, float(p))


def eval_F_limit(f: Field, consts: CohesiveConstants) -> float:
    """Bulk strain energy plus surface and cohesive terms of a jump field."""
    bulk = lp_strain_norm(f, 2.0) ** 2
    segs = f.segs
    if len(segs[0]) == 0:
        return bulk
    X, W, N, _ = gauss_samples(segs)
    coh = float((W * frob(sym_tensor_product(f.jump(X, N), N))).sum())
    return bulk + consts.a * h1_length(segs) + consts.b * coh


def limit_1d(L: float, jumps, elastic_slope: float = 0.0, consts: CohesiveConstants | None = None) -> float:
    """Limit energy of a 1D profile with constant slope and given jump sizes."""
    jumps = np.atleast_1d(np.asarray(jumps, float))
    jumps = jumps[jumps != 0]
    return elastic_slope ** 2 * L + consts.a * len(jumps) + consts.b * np.abs(jumps).sum()


# ---------------------------------------------------------------------- grids
@dataclass
class Grid:
    """Uniform nodal grid on [0, L] (1D) or [0, Lx] x [0, Ly] (2D)."""

    shape: tuple
    h: float

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def nodes(self) -> np.ndarray:
        axes = [np.arange(n) * self.h for n in self.shape]
        if self.dim == 1:
            return axes[0]
        return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 2)

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def operators(self):
        """Cell-mean matrix M and cell difference matrices D[axis] (cells x nodes)."""
        if self.dim == 1:
            n = self.shape[0]
            M = sparse.diags([0.5 * np.ones(n - 1), 0.5 * np.ones(n - 1)], [0, 1], shape=(n - 1, n))
            D = sparse.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n)) / self.h
            return M.tocsr(), [D.tocsr()]
        nx, ny = self.shape
        ax = sparse.diags([0.5 * np.ones(nx - 1), 0.5 * np.ones(nx - 1)], [0, 1], shape=(nx - 1, nx))
        ay = sparse.diags([0.5 * np.ones(ny - 1), 0.5 * np.ones(ny - 1)], [0, 1], shape=(ny - 1, ny))
        dx = sparse.diags([-np.ones(nx - 1), np.ones(nx - 1)], [0, 1], shape=(nx - 1, nx)) / self.h
        dy = sparse.diags([-np.ones(ny - 1), np.ones(ny - 1)], [0, 1], shape=(ny - 1, ny)) / self.h
        M = sparse.kron(ax, ay)
        Dx = sparse.kron(dx, ay)
        Dy = sparse.kron(ax, dy)
        return M.tocsr(), [Dx.tocsr(), Dy.tocsr()]


def grid_1d(L: float, h: float) -> Grid:
    n = int(round(L / h))
    if abs(n * h - L) > 1e-9 * L:
        raise ValueError("bar length must be a multiple of h")
    return Grid((n + 1,), L / n)


def grid_2d(Lx: float, Ly: float, h: float) -> Grid:
    nx, ny = int(round(Lx / h)), int(round(Ly / h))
    return Grid((nx + 1, ny + 1), Lx / nx)


# ---------------------------------------------------------------------- state and energy
@dataclass
class PhaseFieldState:
    u: np.ndarray
    v: np.ndarray
    eps: float
    grid: Grid
    psi: Psi
    p: float = 2.0
    boundary: np.ndarray | None = None

    def __post_init__(self):
        self.psi = _as_psi(self.psi)
        if np.any(self.v < self.eps - 1e-12) or np.any(self.v > 1 + 1e-12):
            raise ValueError("v must lie in [eps, 1]")

    @property
    def h(self) -> float:
        return self.grid.h


def _strain_blocks(grid: Grid, M, D):
    """Linear maps from stacked nodal u to cell strain components with weights for |e|^2."""
    if grid.dim == 1:
        return [(D[0], 1.0)]
    Dx, Dy = D
    Z = sparse.csr_matrix(Dx.shape)
    exx = sparse.hstack([Dx, Z])
    eyy = sparse.hstack([Z, Dy])
    exy = sparse.hstack([0.5 * Dy, 0.5 * Dx])
    return [(exx.tocsr(), 1.0), (eyy.tocsr(), 1.0), (exy.tocsr(), 2.0)]


def _flat_u(state_u, grid):
    return state_u.ravel() if grid.dim == 1 else np.concatenate([state_u[:, 0], state_u[:, 1]])


def _unflat_u(x, grid):
    return x if grid.dim == 1 else np.stack([x[:grid.n_nodes], x[grid.n_nodes:]], 1)


def _energy_terms(u, v, eps, grid, psi, p, ops=None):
    M, D = grid.operators() if ops is None else ops
    vol = grid.cell_volume
    x = _flat_u(u, grid)
    e2 = sum(w * (B @ x) ** 2 for B, w in _strain_blocks(grid, M, D))
    vc = M @ v
    g2 = sum((Dk @ v) ** 2 for Dk in D)
    elastic = float((vc * e2).sum() * vol)
    damage = float((psi(vc) / eps).sum() * vol)
    grad = float((eps ** (p - 1) * g2 ** (p / 2)).sum() * vol)
    return elastic, damage, grad


def eval_F_eps(state: PhaseFieldState) -> float:
    return float(sum(_energy_terms(state.u, state.v, state.eps, state.grid, state.psi, state.p)))


# ---------------------------------------------------------------------- minimization
@dataclass
class MinimizeResult:
    state: PhaseFieldState
    energy: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    u_residual: float = 0.0


def _u_step(u, v, grid, fixed, ops, rtol=1e-12):
    M, D = ops
    vol = grid.cell_volume
    vc = M @ v
    K = None
    for B, w in _strain_blocks(grid, M, D):
        term = B.T @ sparse.diags(w * vol * vc) @ B
        K = term if K is None else K + term
    K = K.tocsr()
    x = _flat_u(u, grid).astype(float)
    free = ~fixed
    Kff = K[free][:, free]
    rhs = -K[free][:, ~free] @ x[~free]
    if Kff.shape[0] == 0:
        return u, 0.0
    sol, info = cg(Kff, rhs, x0=x[free], rtol=rtol, atol=0.0, maxiter=20 * Kff.shape[0])
    x[free] = sol
    res = np.linalg.norm(Kff @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300)
    return _unflat_u(x, grid), float(res)


def _v_step(u, v, eps, grid, psi, p, ops):
    M, D = ops
    vol = grid.cell_volume
    x = _flat_u(u, grid)
    e2 = sum(w * (B @ x) ** 2 for B, w in _strain_blocks(grid, M, D))
    c = eps ** (p - 1)

    def fun(vv):
        vc = M @ vv
        g = [Dk @ vv for Dk in D]
        g2 = sum(gk * gk for gk in g)
        gp = (g2 + 1e-300) ** (p / 2)
        val = (vc * e2 + psi(vc) / eps + c * gp).sum() * vol
        dc = (e2 + psi.d(vc) / eps) * vol
        grad = M.T @ dc
        coef = c * p * (g2 + 1e-300) ** (p / 2 - 1) * vol
        for Dk, gk in zip(D, g):
            grad = grad + Dk.T @ (coef * gk)
        return float(val), np.asarray(grad, float)

    bounds = [(eps, 1.0)] * len(v)
    res = optimize.minimize(fun, v, jac=True, method="L-BFGS-B", bounds=bounds,
                            options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12})
    vn = np.clip(res.x, eps, 1.0)
    return vn if fun(vn)[0] <= fun(v)[0] else v


def minimize_F_eps(grid: Grid, u0, eps: float, psi, p: float = 2.0, fixed=None, v0=None,
                   rtol: float = 1e-8, max_outer: int = 500) -> MinimizeResult:
    """Alternating minimization from (u0, v0) with u held at u0 on the ``fixed`` nodes."""
    if grid.h > eps / 8 * (1 + 1e-9):
        raise ValueError("grid spacing must not exceed eps/8")
    psi = check_psi(psi)
    ops = grid.operators()
    u = np.array(u0, float)
    v = np.ones(grid.n_nodes) if v0 is None else np.clip(np.array(v0, float), eps, 1.0)
    fx = np.zeros(grid.n_nodes * (1 if grid.dim == 1 else 2), bool)
    if fixed is not None:
        fm = np.asarray(fixed, bool)
        fx = fm if grid.dim == 1 else np.concatenate([fm, fm])
    E = float(sum(_energy_terms(u, v, eps, grid, psi, p, ops)))
    hist = [E]
    converged = False
    res = 0.0
    it = 0
    for it in range(1, max_outer + 1):
        u, res = _u_step(u, v, grid, fx, ops)
        v = _v_step(u, v, eps, grid, psi, p, ops)
        En = float(sum(_energy_terms(u, v, eps, grid, psi, p, ops)))
        hist.append(En)
        if E - En <= rtol * max(abs(E), 1e-300):
            converged = True
            E = En
            break
        E = En
    u, res = _u_step(u, v, grid, fx, ops)
    E = float(sum(_energy_terms(u, v, eps, grid, psi, p, ops)))
    hist.append(E)
    state = PhaseFieldState(u, v, eps, grid, psi, p, fx)
    return MinimizeResult(state, E, it, converged, hist, res)


# ---------------------------------------------------------------------- Gamma check
@dataclass
class GammaRow:
    eps: float
    energy: float
    F_limit: float
    rel_error: float
    iterations: int


def _bar_problem(kind: str, eps: float, L: float, delta: float, window: float, h_ratio: float):
    grid = grid_1d(L, eps / h_ratio)
    x = grid.nodes()
    xj = L / 2
    fixed = np.zeros(grid.n_nodes, bool)
    fixed[0] = fixed[-1] = True
    v0 = None
    if kind == "jump":
        u0 = np.where(x > xj, delta, 0.0)
        fixed |= np.abs(x - xj) > window * eps
        v0 = np.clip(1 - np.exp(-np.abs(x - xj) / eps), eps, 1)
    elif kind == "elastic":
        u0 = delta * x / L
    elif kind == "zero":
        u0 = np.zeros_like(x)
    else:
        raise ValueError(f"unknown 1D target {kind!r}")
    return grid, u0, fixed, v0


def gamma_check(target: str = "jump", eps_list=(2 ** -3, 2 ** -4, 2 ** -5, 2 ** -6), psi=None,
                p: float = 2.0, L: float = 1.0, delta: float = 1.0, window: float = 2.0,
                h_ratio: float = 8.0) -> list:
    """Minimum of F_eps against the limit energy of a 1D target along an eps sweep.

    ``jump``: u pinned to the step profile outside a window of half-width
    window*eps around the jump. ``elastic``: linear bar with end displacements.
    ``zero``: zero data.
    """
    psi = psi_family("linear") if psi is None else _as_psi(psi)
    consts = constants(psi, p)
    if target == "jump":
        F = limit_1d(L, [delta], 0.0, consts)
    elif target == "elastic":
        F = limit_1d(L, [], delta / L, consts)
    else:
        F = 0.0
    rows = []
    for eps in eps_list:
        grid, u0, fixed, v0 = _bar_problem(target, eps, L, delta, window, h_ratio)
        r = minimize_F_eps(grid, u0, eps, psi, p, fixed, v0)
        rel = abs(r.energy - F) / F if F > 0 else abs(r.energy)
        rows.append(GammaRow(float(eps), r.energy, float(F), float(rel), r.iterations))
    return rows


def cohesive_bar_oracle(L: float, delta: float, consts: CohesiveConstants) -> float:
    """Limit minimum for a bar with end displacements: elastic or one cohesive crack plus elastic rest."""
    el = delta ** 2 / L
    s = delta - consts.b * L / 2
    cr = consts.a + consts.b * s + (delta - s) ** 2 / L if s > 0 else np.inf
    return float(min(el, cr))
