"""Admissibility checks for boundary conditions of relaxation IBVPs.

For the half-space problem ``U_t + A U_x = Q U / eps``, ``B U(0,t) = b`` on
``x > 0`` the generalised Kreiss condition asks that ``det(B R(xi, eta))``
stays away from zero, where ``R(xi, eta)`` spans the stable subspace of
``A^-1 (eta Q - xi I)``.  Only real ``xi > 0`` is sampled here, so
:func:`gkc_sample` is a necessary-condition check, not a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .matkernels import as_matrix, lu_det, max_norm, orthonormalize, pencil_eig, sym_eig
from .sysmodel import RelaxationSystem

DEFAULT_XI = tuple(2.0**k for k in range(-6, 7))
DEFAULT_ETA = (0.0,) + tuple(2.0**k for k in range(-6, 21))
DISSIPATIVE_C = tuple(2.0**k for k in range(-20, 21))


def boundary_matrix(B, n: int | None = None) -> np.ndarray:
    """Validate a full-row-rank boundary matrix."""
    b = as_matrix(B, "B")
    if n is not None and b.shape[1] != n:
        raise ValidationError(f"B must have {n} columns, got {b.shape[1]}")
    if b.shape[0] == 0:
        return b
    lam, _ = sym_eig(b @ b.T)
    if lam[0] <= 1e-20 * lam[-1]:
        raise ValidationError("B does not have full row rank")
    return b


def strict_dissipative(B, A) -> float | None:
    """Smallest ``c`` on a dyadic grid with ``y^T A y <= -c|y|^2 + |By|^2 / c``.

    Returns ``None`` when no grid value works.
    """
    A = as_matrix(A, "A")
    b = boundary_matrix(B, A.shape[0])
    BtB = b.T @ b
    floor = 1e-12 * max_norm(A)
    eye = np.eye(A.shape[0])
    for c in DISSIPATIVE_C:
        lam, _ = sym_eig(A + c * eye - BtB / c)
        if lam[-1] <= floor:
            return c
    return None


def right_stable(system: RelaxationSystem, xi: float, eta: float) -> np.ndarray:
    """Basis of the stable subspace of ``A^-1 (eta Q - xi I)``.

    With ``A x = mu (xi I - eta Q) x`` the matrix has eigenvalue ``-1/mu``,
    so the stable directions are the pencil eigenvectors with ``mu > 0``.
    """
    if not xi > 0:
        raise ValidationError(f"right_stable needs xi > 0, got {xi}")
    if eta < 0:
        raise ValidationError(f"right_stable needs eta >= 0, got {eta}")
    weight = xi * np.eye(system.n) - eta * system.Q
    mu, W = pencil_eig(system.A, weight)
    return W[:, mu > 0]


def limit_stable_basis(derivation) -> np.ndarray:
    """Stable basis at ``xi = 1``, ``eta -> infinity``: ``[[P+, P0, N R_S], [0, 0, K~ R_S]]``."""
    eq, layer = derivation.equil, derivation.layer
    m = derivation.system.m
    top = np.hstack([eq.P_plus, eq.P_zero, layer.N @ layer.R_S])
    bottom = np.hstack(
        [np.zeros((m, eq.P_plus.shape[1] + eq.P_zero.shape[1])), layer.K_tilde @ layer.R_S]
    )
    return np.vstack([top, bottom])


@dataclass
class GKCResult:
    minimum: float
    argmin: tuple[float, float]
    samples: list[tuple[float, float, float]] = field(default_factory=list)


def gkc_value(system: RelaxationSystem, B, xi: float, eta: float) -> float:
    R = orthonormalize(right_stable(system, xi, eta))
    return abs(lu_det(np.asarray(B, dtype=float) @ R))


def gkc_sample(system: RelaxationSystem, B, xi_grid=DEFAULT_XI, eta_grid=DEFAULT_ETA) -> GKCResult:
    """Minimum of ``|det(B R(xi, eta))|`` over the sample grid."""
    b = boundary_matrix(B, system.n)
    width = right_stable(system, 1.0, 0.0).shape[1]
    if b.shape[0] != width:
        raise ValidationError(
            f"B has {b.shape[0]} rows but the stable subspace has dimension {width}"
        )
    samples = [(xi, eta, gkc_value(system, b, xi, eta)) for xi in xi_grid for eta in eta_grid]
    best = min(samples, key=lambda s: s[2])
    return GKCResult(best[2], (best[0], best[1]), samples)
