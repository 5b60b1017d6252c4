"""Modal discontinuous Galerkin discretisation of the coupled problem.

Each cell carries Legendre coefficients ``c_j`` (``j = 0..k``) in the local
coordinate ``xi in [-1, 1]``, so the mass matrix is ``dx / (2j + 1)``.
Coefficient arrays are shaped ``(cells, components, k + 1)``.

The left domain solves the full system ``U_t + A U_x = Q U``; the right
domain solves the equilibrium system ``u_t + A11 u_x = 0``.  Interior faces
use upwind fluxes, the outer faces see a zero exterior state and the
interface face takes its incoming characteristics from the coupling
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import legendre as npleg

from ..coupling import CouplingMatrices, Derivation, derive
from ..errors import InstabilityError, ValidationError
from ..matkernels import sym_eig
from ..spectral import CharBasis, EquilBasis, char_decomp, equil_decomp
from ..sysmodel import RelaxationSystem, blocks
from .grid import Grid
from .rk import ssp_rk3_step


@lru_cache(maxsize=None)
def gauss_legendre(npts: int) -> tuple[np.ndarray, np.ndarray]:
    return npleg.leggauss(npts)


@lru_cache(maxsize=None)
def derivative_matrix(k: int) -> np.ndarray:
    """``D[j, l] = int_{-1}^{1} P_j'(xi) P_l(xi) dxi``, by (k+1)-point Gauss."""
    xi, w = gauss_legendre(k + 1)
    V = npleg.legvander(xi, k)
    dV = np.zeros_like(V)
    for j in range(1, k + 1):
        coef = np.zeros(j + 1)
        coef[j] = 1.0
        dV[:, j] = npleg.legval(xi, npleg.legder(coef))
    return (dV * w[:, None]).T @ V


def _signs(k: int) -> np.ndarray:
    return (-1.0) ** np.arange(k + 1)


def project(f: Callable, edges: np.ndarray, k: int, ncomp: int) -> np.ndarray:
    """Cellwise L2 projection of ``f`` onto degree-``k`` Legendre modes."""
    xi, w = gauss_legendre(k + 2)
    centers = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    xs = centers[:, None] + half[:, None] * xi[None, :]
    vals = np.asarray(f(xs.ravel()), dtype=float).reshape(xs.shape[0], xs.shape[1], -1)
    vals = vals[:, :, :ncomp]
    V = npleg.legvander(xi, k)
    weights = (w[:, None] * V) * (0.5 * (2 * np.arange(k + 1) + 1))[None, :]
    return np.einsum("iqa,qj->iaj", vals, weights)


def evaluate(coef: np.ndarray, edges: np.ndarray, x) -> np.ndarray:
    """Evaluate a modal field at points ``x`` inside ``[edges[0], edges[-1]]``."""
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, coef.shape[0] - 1)
    xi = 2.0 * (x - edges[idx]) / (edges[idx + 1] - edges[idx]) - 1.0
    V = npleg.legvander(xi, coef.shape[2] - 1)
    return np.einsum("pal,pl->pa", coef[idx], V)


def traces(coef: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cell values at the left (``xi = -1``) and right (``xi = 1``) ends."""
    k = coef.shape[2] - 1
    return coef @ _signs(k), coef.sum(axis=2)


def cell_rhs(coef, dx, A, Q, faces, D) -> np.ndarray:
    """Modal time derivative given face fluxes ``faces`` of shape (cells + 1, c)."""
    k = coef.shape[2] - 1
    inv_mass = (2 * np.arange(k + 1) + 1) / dx
    AC = np.einsum("ab,ibl->ial", A, coef)
    out = np.einsum("jl,ial->iaj", D, AC)
    out -= faces[1:, :, None]
    out += faces[:-1, :, None] * _signs(k)[None, None, :]
    out *= inv_mass[None, None, :]
    if Q is not None:
        out += np.einsum("ab,ibl->ial", Q, coef)
    return out


def upwind_faces(left_trace, right_trace, A_plus, A_minus, inflow=None, outflow=None):
    """Upwind fluxes on all faces of a 1-D mesh with zero exterior states.

    ``left_trace[i]``/``right_trace[i]`` are the cell-``i`` values at its left
    and right ends.  ``inflow``/``outflow`` override the first/last face.
    """
    nc, c = left_trace.shape
    faces = np.empty((nc + 1, c))
    faces[1:-1] = right_trace[:-1] @ A_plus.T + left_trace[1:] @ A_minus.T
    faces[0] = left_trace[0] @ A_minus.T if inflow is None else inflow
    faces[-1] = right_trace[-1] @ A_plus.T if outflow is None else outflow
    return faces


@dataclass
class DGState:
    degree: int
    left: np.ndarray
    right: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.left.shape[2] != self.degree + 1 or self.right.shape[2] != self.degree + 1:
            raise ValidationError("coefficient arrays do not match the degree")
        if not (np.all(np.isfinite(self.left)) and np.all(np.isfinite(self.right))):
            raise InstabilityError(f"non-finite DG coefficients at t={self.time}")

    def pack(self) -> np.ndarray:
        return np.concatenate([self.left.ravel(), self.right.ravel()])

    def unpack(self, flat: np.ndarray, time: float | None = None) -> "DGState":
        nl = self.left.size
        return DGState(
            self.degree,
            flat[:nl].reshape(self.left.shape),
            flat[nl:].reshape(self.right.shape),
            self.time if time is None else time,
        )


def project_initial(f: Callable, grid: Grid, k: int, system: RelaxationSystem) -> DGState:
    """Project ``f(x) -> (len(x), n)`` onto both DG spaces.

    The right domain keeps only the equilibrium components.
    """
    if k < 1:
        raise ValidationError(f"DG degree must be >= 1, got {k}")
    left = project(f, grid.edges_left(), k, system.n)
    right = project(f, grid.edges_right(), k, system.n_eq)
    return DGState(k, left, right, 0.0)


@dataclass
class DDOperator:
    """Semi-discrete right-hand side of the coupled DG scheme."""

    system: RelaxationSystem
    char: CharBasis
    equil: EquilBasis
    cm: CouplingMatrices
    grid: Grid
    k: int

    def __post_init__(self):
        if self.cm is None:
            raise ValidationError("missing coupling matrices")
        self.A11 = blocks(self.system)[0]
        self.D = derivative_matrix(self.k)
        self.Ap, self.Am = self.char.A_plus, self.char.A_minus
        self.A11p, self.A11m = self.equil.A11_plus, self.equil.A11_minus
        self.Q = self.system.Q

    @classmethod
    def from_coupling(cls, system, coupling, grid: Grid, k: int) -> "DDOperator":
        """Build from a Derivation, bare CouplingMatrices, or ``None`` (derive now)."""
        if isinstance(coupling, Derivation):
            d = coupling
            return cls(system, d.char, d.equil, d.matrices, grid, k)
        if coupling is None:
            d = derive(system)
            return cls(system, d.char, d.equil, d.matrices, grid, k)
        return cls(system, char_decomp(system), equil_decomp(system), coupling, grid, k)

    def interface_fluxes(self, U_minus: np.ndarray, u_plus: np.ndarray):
        """Interface fluxes from the left trace ``U(0-)`` and right trace ``u(0+)``."""
        ch, eq = self.char, self.equil
        a = ch.R_plus.T @ U_minus
        b = eq.P_minus.T @ u_plus
        alpha_minus, beta_plus = self.cm.incoming(a, b)
        F = ch.R_plus @ (ch.lam_plus * a) + ch.R_minus @ (ch.lam_minus * alpha_minus)
        f = eq.P_plus @ (eq.lam1_plus * beta_plus) + eq.P_minus @ (eq.lam1_minus * b)
        return F, f

    def __call__(self, left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid
        lt_l, rt_l = traces(left)
        lt_r, rt_r = traces(right)
        F0, f0 = self.interface_fluxes(rt_l[-1], lt_r[0])
        faces_l = upwind_faces(lt_l, rt_l, self.Ap, self.Am, outflow=F0)
        faces_r = upwind_faces(lt_r, rt_r, self.A11p, self.A11m, inflow=f0)
        dl = cell_rhs(left, g.dx_left, self.system.A, self.Q, faces_l, self.D)
        dr = cell_rhs(right, g.dx_right, self.A11, None, faces_r, self.D)
        return dl, dr


def dg_rhs(state: DGState, system: RelaxationSystem, char: CharBasis, equil: EquilBasis,
           cm: CouplingMatrices, grid: Grid) -> DGState:
    """Time derivative of a DG state, returned with the state's layout."""
    op = DDOperator(system, char, equil, cm, grid, state.degree)
    dl, dr = op(state.left, state.right)
    return DGState(state.degree, dl, dr, state.time)


def stable_dt(system: RelaxationSystem, dx: float, cfl: float) -> float:
    ch = char_decomp(system)
    lam_max = max(np.max(np.abs(ch.lam_plus)), np.max(np.abs(ch.lam_minus)))
    return cfl * dx / lam_max


def integrate(u0, rhs, dt: float, t_end: float, monitor=None, t0: float = 0.0):
    """SSP-RK3 from ``t0`` to ``t_end``; the final step is shortened to land exactly."""
    u, t = u0, t0
    with np.errstate(over="ignore", invalid="ignore"):
        while t < t_end - 1e-14 * max(1.0, t_end):
            h = min(dt, t_end - t)
            u = ssp_rk3_step(u, h, rhs)
            t = t_end if h < dt else t + h
            if not np.all(np.isfinite(u)):
                raise InstabilityError(f"instability detected at t={t:.6g}")
            if monitor is not None:
                monitor(t, u)
    return u, t


def run_dd(system: RelaxationSystem, coupling, grid: Grid, k: int = 2,
           cfl: float = 0.17, t_end: float = 0.5, init: Callable | None = None,
           monitor: Callable | None = None) -> DGState:
    """Solve the coupled problem with DG in space and SSP-RK3 in time.

    ``coupling`` is a Derivation, CouplingMatrices, or ``None`` to derive here.
    ``dt = cfl * min(dx) / max|eig(A)|``.  ``monitor(t, state)`` is called
    after every accepted step.
    """
    if cfl <= 0:
        raise ValidationError(f"cfl must be positive, got {cfl}")
    if init is None:
        raise ValidationError("run_dd needs initial data")
    op = DDOperator.from_coupling(system, coupling, grid, k)
    state = project_initial(init, grid, k, system)
    if t_end <= 0:
        return state
    nl = state.left.size

    def rhs(flat):
        dl, dr = op(flat[:nl].reshape(state.left.shape), flat[nl:].reshape(state.right.shape))
        return np.concatenate([dl.ravel(), dr.ravel()])

    mon = None
    if monitor is not None:
        def mon(t, flat):
            monitor(t, state.unpack(flat, t))

    flat, t = integrate(state.pack(), rhs, stable_dt(system, grid.dx_min, cfl), t_end, mon)
    return state.unpack(flat, t)


def single_domain_rhs(A, Q, dx: float, k: int) -> Callable:
    """Modal rhs of ``U_t + A U_x = Q U`` on one uniform mesh, zero exterior states.

    ``Q`` may be ``None``.  The returned function maps ``(cells, n, k+1)``
    coefficients to their time derivative.
    """
    A = np.asarray(A, dtype=float)
    lam, R = sym_eig(A)
    Ap = (R[:, lam > 0] * lam[lam > 0]) @ R[:, lam > 0].T
    Am = (R[:, lam < 0] * lam[lam < 0]) @ R[:, lam < 0].T
    D = derivative_matrix(k)

    def rhs(coef):
        lt, rt = traces(coef)
        return cell_rhs(coef, dx, A, Q, upwind_faces(lt, rt, Ap, Am), D)

    return rhs


def run_single(A, Q, edges: np.ndarray, k: int, cfl: float, t_end: float, init: Callable) -> np.ndarray:
    """One-domain DG run of ``U_t + A U_x = Q U`` with zero exterior states."""
    dx = np.diff(edges)
    if not np.allclose(dx, dx[0]):
        raise ValidationError("run_single expects a uniform mesh")
    A = np.asarray(A, dtype=float)
    coef = project(init, edges, k, A.shape[0])
    if t_end <= 0:
        return coef
    shape = coef.shape
    op = single_domain_rhs(A, Q, dx[0], k)
    dt = cfl * dx[0] / float(np.max(np.abs(sym_eig(A)[0])))
    flat, _ = integrate(coef.ravel(), lambda f: op(f.reshape(shape)).ravel(), dt, t_end)
    return flat.reshape(shape)
