"""First-order upwind finite volumes with forward Euler for the stiff problem.

The scheme is advanced in characteristic variables ``W = R^T U``: the
upwind flux ``A+ U_i + A- U_{i+1}`` then splits into independent scalar
shifts, and the source becomes ``G W / eps`` with ``G = R^T Q R``.
Because ``R`` is orthogonal this is the same scheme as in physical
variables, only cheaper for long grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import InstabilityError, ValidationError
from ..matkernels import sym_eig
from ..sysmodel import RelaxationSystem
from .grid import Grid

_GAUSS3 = np.polynomial.legendre.leggauss(3)


@dataclass
class FVState:
    averages: np.ndarray
    edges: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.averages.shape[0] != self.edges.size - 1:
            raise ValidationError("cell averages do not match the mesh")
        if not np.all(np.isfinite(self.averages)):
            raise InstabilityError(f"non-finite cell averages at t={self.time}")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.widths[:, None] * self.averages**2)))


def cell_averages(f: Callable, edges: np.ndarray) -> np.ndarray:
    """Cell averages of ``f(x) -> (len(x), n)`` by 3-point Gauss quadrature."""
    xi, w = _GAUSS3
    c = 0.5 * (edges[1:] + edges[:-1])
    h = 0.5 * np.diff(edges)
    xs = c[:, None] + h[:, None] * xi[None, :]
    vals = np.asarray(f(xs.ravel()), dtype=float).reshape(xs.shape[0], 3, -1)
    return 0.5 * np.einsum("iqa,q->ia", vals, w)


def fv_time_step(A, Q, eps_min: float, dx_min: float, cfl: float) -> float:
    """Minimum of the advective and explicit-source step limits."""
    lam = sym_eig(np.asarray(A, dtype=float))[0]
    dt = cfl * dx_min / float(np.max(np.abs(lam)))
    if Q is not None:
        stiff = float(np.max(np.abs(sym_eig(np.asarray(Q, dtype=float))[0])))
        if stiff > 0:
            dt = min(dt, eps_min / (2.0 * stiff))
    return dt


def advance_upwind(A, Q, inv_eps: np.ndarray, edges: np.ndarray, U0: np.ndarray, dt: float,
                   t_end: float, monitor: Callable | None = None) -> tuple[np.ndarray, float]:
    """Advance cell averages ``U0 (cells, n)`` of ``U_t + A U_x = Q U / eps``.

    ``inv_eps`` holds ``1 / eps`` per cell; ``Q`` may be ``None``.  Exterior
    states are zero.  ``monitor(t, W)`` receives the characteristic averages
    ``(n, cells)`` after every step.
    """
    lam, R = sym_eig(np.asarray(A, dtype=float))
    W = np.ascontiguousarray((U0 @ R).T)
    n, nc = W.shape
    lam_p = np.maximum(lam, 0.0)[:, None]
    lam_m = np.minimum(lam, 0.0)[:, None]
    G = None if Q is None else R.T @ np.asarray(Q, dtype=float) @ R
    if G is not None and not np.any(np.abs(G) > 0):
        G = None
    ratio_cells = 1.0 / np.diff(edges)
    padded = np.zeros((n, nc + 2))
    faces = np.empty((n, nc + 1))
    t = 0.0
    steps = 0
    while t < t_end - 1e-14 * max(1.0, t_end):
        h = min(dt, t_end - t)
        padded[:, 1:-1] = W
        np.multiply(lam_p, padded[:, :-1], out=faces)
        faces += lam_m * padded[:, 1:]
        update = (faces[:, :-1] - faces[:, 1:]) * ratio_cells
        if G is not None:
            update += (G @ W) * inv_eps
        W += h * update
        t = t_end if h < dt else t + h
        steps += 1
        if steps % 50 == 0 and not np.all(np.isfinite(W[:, :: max(1, nc // 64)])):
            raise InstabilityError(f"instability detected at t={t:.6g}")
        if monitor is not None:
            monitor(t, W)
    if not np.all(np.isfinite(W)):
        raise InstabilityError(f"instability detected at t={t:.6g}")
    return (R @ W).T, t


def run_reference(system: RelaxationSystem, grid: Grid, cfl: float = 0.67, t_end: float = 0.2,
                  init: Callable | None = None, monitor: Callable | None = None) -> FVState:
    """Reference solution of the original problem with ``eps = 1`` on ``x <= 0``.

    ``eps = system.eps_right`` on ``x > 0``.  ``monitor(t, state)`` is called
    after every step with the current :class:`FVState`.
    """
    if cfl <= 0:
        raise ValidationError(f"cfl must be positive, got {cfl}")
    if init is None:
        raise ValidationError("run_reference needs initial data")
    edges = grid.edges()
    U0 = cell_averages(init, edges)[:, : system.n]
    if t_end <= 0:
        return FVState(U0, edges, 0.0)
    centers = 0.5 * (edges[1:] + edges[:-1])
    inv_eps = np.where(centers > 0, 1.0 / system.eps_right, 1.0)
    dt = fv_time_step(system.A, system.Q, min(1.0, system.eps_right), grid.dx_min, cfl)
    mon = None
    if monitor is not None:
        # the physical averages are only formed when someone is watching
        _, R = sym_eig(system.A)

        def mon(t, W):
            monitor(t, FVState((R @ W).T, edges, t))

    U, t = advance_upwind(system.A, system.Q, inv_eps, edges, U0, dt, t_end, mon)
    return FVState(U, edges, t)
