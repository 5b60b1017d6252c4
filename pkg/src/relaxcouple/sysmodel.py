"""Linear hyperbolic relaxation systems ``U_t + A U_x = Q U / eps(x)``.

The system is stored in normal form: ``A`` symmetric and
``Q = diag(0, S)`` with ``S`` symmetric negative definite.  The relaxation
time is 1 on ``x <= 0`` and ``eps_right`` on ``x > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .matkernels import as_matrix, max_norm, sym_eig

SYMMETRY_TOL = 1e-12
ZERO_EIG_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RelaxationSystem:
    n: int
    m: int
    A: np.ndarray
    S: np.ndarray
    eps_right: float = 1.0
    name: str = field(default="custom", compare=False)

    @property
    def Q(self) -> np.ndarray:
        Q = np.zeros((self.n, self.n))
        Q[self.n - self.m :, self.n - self.m :] = self.S
        return Q

    @property
    def n_eq(self) -> int:
        """Number of equilibrium (conserved) components, ``n - m``."""
        return self.n - self.m

    def with_eps(self, eps_right: float) -> "RelaxationSystem":
        return build_system(self.n, self.m, self.A, self.S, eps_right, name=self.name)


@dataclass(frozen=True)
class SignCounts:
    n_plus: int
    n_minus: int
    n1_plus: int
    n1_minus: int
    n1_zero: int


def build_system(n, m, A, S, eps_right=1.0, name="custom") -> RelaxationSystem:
    """Validate the structural assumptions and freeze the system.

    Raises :class:`ValidationError` whose ``violations`` attribute lists
    every failed invariant.
    """
    n, m = int(n), int(m)
    problems: list[str] = []
    A = as_matrix(A, "A")
    S = as_matrix(S, "S")
    if not 0 < m < n:
        problems.append(f"need 0 < m < n, got n={n}, m={m}")
    if A.shape != (n, n):
        problems.append(f"A must be {n}x{n}, got {A.shape}")
    if S.shape != (m, m):
        problems.append(f"S must be {m}x{m}, got {S.shape}")
    if not (np.isfinite(eps_right) and eps_right > 0):
        problems.append(f"eps_right must be positive, got {eps_right}")
    if problems:
        _fail(problems)

    if max_norm(A - A.T) > SYMMETRY_TOL * max(1.0, max_norm(A)):
        problems.append("A not symmetric")
    if max_norm(S - S.T) > SYMMETRY_TOL * max(1.0, max_norm(S)):
        problems.append("S not symmetric")
    if problems:
        _fail(problems)

    s_eigs, _ = sym_eig(S)
    if s_eigs[-1] >= -1e-12:
        problems.append(f"S not negative definite: eigenvalue {s_eigs[-1]:.6g}")
    a_eigs, _ = sym_eig(A)
    radius = np.max(np.abs(a_eigs))
    smallest = np.min(np.abs(a_eigs))
    if smallest <= ZERO_EIG_TOL * radius:
        problems.append(
            f"characteristic interface: A has eigenvalue {a_eigs[np.argmin(np.abs(a_eigs))]:.3e}"
        )
    if problems:
        _fail(problems)

    system = RelaxationSystem(
        n, m, _frozen(0.5 * (A + A.T)), _frozen(0.5 * (S + S.T)), float(eps_right), name
    )
    counts = sign_counts(system)
    assert counts.n_plus + counts.n_minus == n
    assert counts.n1_plus + counts.n1_minus + counts.n1_zero == n - m
    return system


def _fail(problems: list[str]) -> None:
    err = ValidationError("; ".join(problems))
    err.violations = problems
    raise err


def blocks(system: RelaxationSystem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(A11, A12, A22)`` for the ``(n - m, m)`` partition."""
    k = system.n_eq
    A = system.A
    return A[:k, :k].copy(), A[:k, k:].copy(), A[k:, k:].copy()


def _count(eigs: np.ndarray, threshold: float) -> tuple[int, int, int]:
    pos = int(np.sum(eigs > threshold))
    neg = int(np.sum(eigs < -threshold))
    return pos, neg, eigs.size - pos - neg


def sign_counts(system: RelaxationSystem, tol: float = ZERO_EIG_TOL) -> SignCounts:
    """Signed eigenvalue counts of ``A`` and ``A11``.

    The zero band for ``A11`` is ``tol`` times the spectral radius of ``A``
    so that a vanishing ``A11`` is classified as entirely zero.
    """
    a_eigs, _ = sym_eig(system.A)
    threshold = tol * float(np.max(np.abs(a_eigs)))
    n_plus, n_minus, _ = _count(a_eigs, threshold)
    A11, _, _ = blocks(system)
    e1, _ = sym_eig(A11)
    p1, m1, z1 = _count(e1, threshold)
    return SignCounts(n_plus, n_minus, p1, m1, z1)
