"""Signed characteristic decompositions of ``A`` and of ``A11``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .matkernels import sym_eig
from .sysmodel import ZERO_EIG_TOL, RelaxationSystem, blocks


@dataclass(frozen=True)
class CharBasis:
    R_plus: np.ndarray
    R_minus: np.ndarray
    lam_plus: np.ndarray
    lam_minus: np.ndarray

    @property
    def A_plus(self) -> np.ndarray:
        return (self.R_plus * self.lam_plus) @ self.R_plus.T

    @property
    def A_minus(self) -> np.ndarray:
        return (self.R_minus * self.lam_minus) @ self.R_minus.T


@dataclass(frozen=True)
class EquilBasis:
    P_plus: np.ndarray
    P_minus: np.ndarray
    P_zero: np.ndarray
    lam1_plus: np.ndarray
    lam1_minus: np.ndarray

    @property
    def A11_plus(self) -> np.ndarray:
        return (self.P_plus * self.lam1_plus) @ self.P_plus.T

    @property
    def A11_minus(self) -> np.ndarray:
        return (self.P_minus * self.lam1_minus) @ self.P_minus.T

    @property
    def A11_pinv(self) -> np.ndarray:
        """``P+ L1+^-1 P+^T + P- L1-^-1 P-^T``: inverse of A11 off its kernel."""
        return (self.P_plus / self.lam1_plus) @ self.P_plus.T + (
            self.P_minus / self.lam1_minus
        ) @ self.P_minus.T


def _radius(system: RelaxationSystem) -> float:
    eigs, _ = sym_eig(system.A)
    return float(np.max(np.abs(eigs)))


def char_decomp(system: RelaxationSystem) -> CharBasis:
    lam, V = sym_eig(system.A)
    threshold = ZERO_EIG_TOL * float(np.max(np.abs(lam)))
    if np.any(np.abs(lam) <= threshold):
        raise ValidationError("characteristic interface: A is singular")
    pos = lam > 0
    return CharBasis(V[:, pos], V[:, ~pos], lam[pos], lam[~pos])


def equil_decomp(system: RelaxationSystem) -> EquilBasis:
    A11, _, _ = blocks(system)
    lam, V = sym_eig(A11)
    threshold = ZERO_EIG_TOL * _radius(system)
    pos = lam > threshold
    neg = lam < -threshold
    zero = ~(pos | neg)
    return EquilBasis(V[:, pos], V[:, neg], V[:, zero], lam[pos], lam[neg])
