"""Interface coupling conditions between a relaxation system and its limit.

On ``x > 0`` the relaxed solution is approximated by the equilibrium
solution plus two boundary-layer corrections: a parabolic layer of width
``sqrt(eps)`` living on the zero-speed equilibrium modes ``P0`` and an ODE
layer of width ``eps`` spanned by ``(N; K~) R_S``.  Matching the layered
right state against the left trace at ``x = 0`` gives ``n`` linear
equations for the ``n`` unknowns (incoming left characteristics, incoming
right characteristics, and the two layer amplitudes).  Solving them yields
the coupling matrices

    alpha_- = B_ll alpha_+ + B_lr beta_-
    beta_+  = B_rr beta_-  + B_rl alpha_+

with ``alpha = R^T U^l(0)`` and ``beta = P^T u^r(0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import RelaxCoupleError, SingularSystemError, ValidationError
from .matkernels import lu_solve, max_norm, orth_complement, pencil_eig
from .spectral import CharBasis, EquilBasis, char_decomp, equil_decomp
from .sysmodel import RelaxationSystem, SignCounts, blocks, sign_counts

BETA_ZERO_TOL = 1e-9


@dataclass(frozen=True)
class LayerData:
    K: np.ndarray
    K_tilde: np.ndarray
    X: np.ndarray
    N: np.ndarray
    R_S: Optional[np.ndarray] = None

    def with_stable(self, R_S: np.ndarray) -> "LayerData":
        return LayerData(self.K, self.K_tilde, self.X, self.N, R_S)


@dataclass(frozen=True)
class CouplingMatrices:
    B_ll: np.ndarray
    B_lr: np.ndarray
    B_rr: np.ndarray
    B_rl: np.ndarray

    def incoming(self, alpha_plus, beta_minus) -> tuple[np.ndarray, np.ndarray]:
        """Map outgoing traces ``(alpha_+, beta_-)`` to ``(alpha_-, beta_+)``."""
        a = np.asarray(alpha_plus, dtype=float)
        b = np.asarray(beta_minus, dtype=float)
        return self.B_ll @ a + self.B_lr @ b, self.B_rl @ a + self.B_rr @ b


class CouplingAssembly(NamedTuple):
    lhs: np.ndarray
    rhs_alpha_plus: np.ndarray
    rhs_beta_minus: np.ndarray
    rhs_beta_zero: np.ndarray
    widths: tuple[int, int, int, int]


@dataclass(frozen=True)
class Derivation:
    """Everything computed on the way to the coupling matrices."""

    system: RelaxationSystem
    counts: SignCounts
    char: CharBasis
    equil: EquilBasis
    layer: LayerData
    matrices: CouplingMatrices


def layer_matrices(system: RelaxationSystem, equil: EquilBasis, K_tilde=None) -> LayerData:
    """Boundary-layer matrices ``K``, ``K~``, ``X`` and ``N`` (no ``R_S`` yet).

    ``K_tilde`` overrides the computed orthonormal complement of ``K``.
    """
    _, A12, A22 = blocks(system)
    S = system.S
    pinv = equil.A11_pinv
    P0 = equil.P_zero

    K = A12.T @ P0
    Kt = orth_complement(K) if K_tilde is None else np.asarray(K_tilde, dtype=float)
    X = A22 - A12.T @ pinv @ A12
    X = 0.5 * (X + X.T)
    N = -pinv @ A12 @ Kt
    if K.shape[1] > 0 and Kt.shape[1] > 0:
        G = Kt.T @ X @ Kt
        inner = (K.T @ S @ Kt) @ lu_solve(Kt.T @ S @ Kt, G) - K.T @ X @ Kt
        N = N + P0 @ lu_solve(K.T @ K, inner)
    return LayerData(K, Kt, X, N)


def stable_manifold(layer: LayerData, S, expected: int | None = None) -> np.ndarray:
    """Right-stable basis ``R_S`` of ``(K~^T X K~)^-1 (K~^T S K~)``.

    Uses the symmetric-definite pencil ``G v = mu H v`` with
    ``G = K~^T X K~`` and ``H = -K~^T S K~``; the target matrix then has
    eigenvalue ``-1/mu``, so the stable directions are those with ``mu > 0``.
    """
    Kt = layer.K_tilde
    width = Kt.shape[1]
    if width == 0:
        R_S = np.zeros((0, 0))
    else:
        G = Kt.T @ layer.X @ Kt
        H = -(Kt.T @ np.asarray(S, dtype=float) @ Kt)
        mu, W = pencil_eig(0.5 * (G + G.T), 0.5 * (H + H.T))
        if np.min(np.abs(mu)) <= 1e-10 * max(1.0, np.max(np.abs(mu))):
            raise SingularSystemError("K~^T X K~ is singular")
        R_S = W[:, mu > 0]
    if expected is not None and R_S.shape[1] != expected:
        raise ValidationError(
            f"stable manifold dimension violates the layer count: got {R_S.shape[1]}, "
            f"expected n+ - n1o - n1+ = {expected}"
        )
    return R_S


def _layer_with_stable(system, counts, equil) -> LayerData:
    layer = layer_matrices(system, equil)
    expected = counts.n_plus - counts.n1_zero - counts.n1_plus
    return layer.with_stable(stable_manifold(layer, system.S, expected))


def _assemble(system, counts, char, equil, layer) -> CouplingAssembly:
    n, k = system.n, system.n_eq
    m = system.m

    def lift(P):
        return np.vstack([P, np.zeros((m, P.shape[1]))])

    layer_cols = np.vstack([layer.N @ layer.R_S, layer.K_tilde @ layer.R_S])
    lhs = np.hstack([-char.R_minus, lift(equil.P_plus), lift(equil.P_zero), layer_cols])
    widths = (counts.n_minus, counts.n1_plus, counts.n1_zero, layer_cols.shape[1])
    if sum(widths) != n or lhs.shape != (n, n):
        raise ValidationError(f"coupling system is not square: block widths {widths}, n={n}")
    return CouplingAssembly(lhs, char.R_plus.copy(), -lift(equil.P_minus), -lift(equil.P_zero), widths)


def assemble_coupling(system: RelaxationSystem) -> CouplingAssembly:
    counts = sign_counts(system)
    char, equil = char_decomp(system), equil_decomp(system)
    layer = _layer_with_stable(system, counts, equil)
    return _assemble(system, counts, char, equil, layer)


def _solve(assembly: CouplingAssembly, counts: SignCounts) -> CouplingMatrices:
    rhs = np.hstack([assembly.rhs_alpha_plus, assembly.rhs_beta_minus, assembly.rhs_beta_zero])
    try:
        Z = lu_solve(assembly.lhs, rhs)
    except SingularSystemError as exc:
        raise SingularSystemError(
            "coupling system singular: GKC violated or assumptions unmet"
        ) from exc
    nm, p1 = counts.n_minus, counts.n1_plus
    cols_a = slice(0, counts.n_plus)
    cols_b = slice(counts.n_plus, counts.n_plus + counts.n1_minus)
    cols_0 = slice(counts.n_plus + counts.n1_minus, rhs.shape[1])
    rows_l, rows_r = slice(0, nm), slice(nm, nm + p1)

    # the coupling must not see the zero-speed traces beta_0
    E = np.vstack([Z[rows_l, cols_0], Z[rows_r, cols_0]])
    if max_norm(E) > BETA_ZERO_TOL * max(1.0, max_norm(Z)):
        raise RelaxCoupleError(f"coupling depends on beta_0 (max entry {max_norm(E):.3e})")
    return CouplingMatrices(
        B_ll=Z[rows_l, cols_a].copy(),
        B_lr=Z[rows_l, cols_b].copy(),
        B_rr=Z[rows_r, cols_b].copy(),
        B_rl=Z[rows_r, cols_a].copy(),
    )


def solve_coupling(system: RelaxationSystem) -> CouplingMatrices:
    return derive(system).matrices


def derive(system: RelaxationSystem) -> Derivation:
    """Run the full coupling derivation and keep the intermediate data."""
    counts = sign_counts(system)
    char, equil = char_decomp(system), equil_decomp(system)
    layer = _layer_with_stable(system, counts, equil)
    assembly = _assemble(system, counts, char, equil, layer)
    return Derivation(system, counts, char, equil, layer, _solve(assembly, counts))


def noncharacteristic_layer(system: RelaxationSystem) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form ODE layer when ``A11`` is invertible.

    Returns ``(trace_map, decay)`` with ``mu~ = trace_map nu~`` and
    ``d nu~/dy = decay nu~``.
    """
    if sign_counts(system).n1_zero > 0:
        raise ValidationError("noncharacteristic_layer requires an invertible A11")
    A11, A12, A22 = blocks(system)
    inv_a12 = lu_solve(A11, A12)
    trace_map = -inv_a12
    decay = lu_solve(A22 - A12.T @ inv_a12, system.S)
    return trace_map, decay
