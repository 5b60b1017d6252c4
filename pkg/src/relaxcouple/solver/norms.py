"""Solution samplers, windowed L2 errors and the weighted DG norm."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import ValidationError
from ..spectral import char_decomp, equil_decomp
from ..sysmodel import RelaxationSystem
from . import dg
from .fv import FVState
from .grid import Grid


class Sampler:
    """Point evaluation of a solution on ``domain``; returns ``(len(x), n)``."""

    def __init__(self, func: Callable, domain: tuple[float, float], ncomp: int):
        self.func = func
        self.domain = (float(domain[0]), float(domain[1]))
        self.ncomp = ncomp

    def __call__(self, x) -> np.ndarray:
        vals = np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)
        return vals.reshape(vals.shape[0], -1)


def function_sampler(f: Callable, domain, ncomp: int = 1) -> Sampler:
    return Sampler(f, domain, ncomp)


def dg_sampler(state: dg.DGState, grid: Grid, system: RelaxationSystem) -> Sampler:
    """Modal evaluation; the right domain is padded with ``v = 0``."""
    el, er = grid.edges_left(), grid.edges_right()
    n, neq = system.n, system.n_eq

    def f(x):
        out = np.zeros((x.size, n))
        lm = x < 0
        if np.any(lm):
            out[lm] = dg.evaluate(state.left, el, x[lm])
        if np.any(~lm):
            out[~lm, :neq] = dg.evaluate(state.right, er, x[~lm])
        return out

    return Sampler(f, (grid.x_left, grid.x_right), n)


def fv_sampler(state: FVState) -> Sampler:
    """Piecewise-constant lookup of cell averages."""
    edges = state.edges

    def f(x):
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, edges.size - 2)
        return state.averages[idx]

    return Sampler(f, (edges[0], edges[-1]), state.averages.shape[1])


def l2_error(a: Callable, b: Callable, window, samples: int = 10_000) -> np.ndarray:
    """Per-component L2 distance on ``window`` by the composite midpoint rule."""
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValidationError(f"empty window [{lo}, {hi}]")
    if samples < 10_000:
        raise ValidationError(f"need at least 10000 samples, got {samples}")
    for s in (a, b):
        dom = getattr(s, "domain", None)
        if dom is not None and (lo < dom[0] - 1e-12 or hi > dom[1] + 1e-12):
            raise ValidationError(f"window [{lo}, {hi}] outside domain [{dom[0]}, {dom[1]}]")
    h = (hi - lo) / samples
    x = lo + h * (np.arange(samples) + 0.5)
    va = np.asarray(a(x), dtype=float).reshape(samples, -1)
    vb = np.asarray(b(x), dtype=float).reshape(samples, -1)
    if va.shape[1] != vb.shape[1]:
        width = max(va.shape[1], vb.shape[1])
        va = np.pad(va, ((0, 0), (0, width - va.shape[1])))
        vb = np.pad(vb, ((0, 0), (0, width - vb.shape[1])))
    return np.sqrt(h * np.sum((va - vb) ** 2, axis=0))


def _quadrature_sum(coef: np.ndarray, dx: float, weights_fn) -> float:
    k = coef.shape[2] - 1
    xi, w = dg.gauss_legendre(k + 1)
    V = np.polynomial.legendre.legvander(xi, k)
    vals = np.einsum("ial,ql->iqa", coef, V)
    return float(0.5 * dx * np.einsum("q,iq->", w, weights_fn(vals)))


def weighted_l2(state: dg.DGState, delta: float, system: RelaxationSystem, grid: Grid,
                char=None, equil=None) -> float:
    """Squared weighted norm used in the DG stability estimate.

    Incoming characteristic components (``R-`` on the left, ``P+`` on the
    right) carry weight ``delta``; all others weight one.
    """
    if not delta > 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    char = char or char_decomp(system)
    equil = equil or equil_decomp(system)

    def left(vals):
        return np.sum((vals @ char.R_plus) ** 2, axis=2) + delta * np.sum((vals @ char.R_minus) ** 2, axis=2)

    def right(vals):
        return (delta * np.sum((vals @ equil.P_plus) ** 2, axis=2)
                + np.sum((vals @ equil.P_zero) ** 2, axis=2)
                + np.sum((vals @ equil.P_minus) ** 2, axis=2))

    return _quadrature_sum(state.left, grid.dx_left, left) + _quadrature_sum(state.right, grid.dx_right, right)


def dg_l2_squared(state: dg.DGState, grid: Grid) -> float:
    """Plain squared L2 norm over both domains (exact for modal data)."""
    k = state.degree
    mass = 1.0 / (2 * np.arange(k + 1) + 1)
    return float(grid.dx_left * np.sum(state.left**2 * mass)
                 + grid.dx_right * np.sum(state.right**2 * mass))
