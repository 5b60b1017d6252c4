"""Concrete relaxation systems and the JSON system-file loader."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .sysmodel import RelaxationSystem, build_system

GRAD_MAX_M = 15


def carleman(v: float = 1.0, rho_star: float = 0.5, eps_right: float = 1.0) -> RelaxationSystem:
    """Carleman model linearised at ``rho = rho_star``; state ``(rho, q)``."""
    if not (v > 0 and rho_star > 0):
        raise ValidationError(f"need v > 0 and rho_star > 0, got v={v}, rho_star={rho_star}")
    A = np.array([[0.0, -v], [-v, 0.0]])
    S = np.array([[-2.0 * rho_star]])
    return build_system(2, 1, A, S, eps_right, name="carleman")


def grad_moment(M: int = 5, eps_right: float = 1.0, max_M: int = GRAD_MAX_M) -> RelaxationSystem:
    """Linearised 1-D Grad moment system of order ``M`` in scaled variables."""
    M = int(M)
    if M < 3:
        raise ValidationError(f"Grad system needs M >= 3, got {M}")
    if M % 2 == 0:
        raise ValidationError(f"A singular for even M (got M={M}); use an odd M")
    if M > max_M:
        raise ValidationError(f"M={M} exceeds the cap {max_M}")
    n = M + 1
    off = np.sqrt(np.arange(1, M + 1, dtype=float))
    A = np.diag(off, 1) + np.diag(off, -1)
    return build_system(n, M - 2, A, -np.eye(M - 2), eps_right, name=f"grad{M}")


@dataclass(frozen=True)
class MomentConvention:
    """Maps physical moments ``(rho, w, theta, f_3..f_M)`` to the scaled state."""

    M: int

    def __post_init__(self):
        if self.M < 3 or self.M % 2 == 0:
            raise ValidationError(f"moment order must be odd and >= 3, got {self.M}")

    @property
    def scale(self) -> np.ndarray:
        s = [1.0, 1.0, 1.0 / math.sqrt(2.0)]
        s += [math.sqrt(math.factorial(k)) for k in range(3, self.M + 1)]
        return np.array(s)

    @property
    def names(self) -> list[str]:
        return ["rho", "w", "theta"] + [f"f{k}" for k in range(3, self.M + 1)]

    def to_state(self, physical) -> np.ndarray:
        phys = np.asarray(physical, dtype=float)
        return phys * self.scale[: phys.shape[-1]]

    def to_physical(self, state) -> np.ndarray:
        st = np.asarray(state, dtype=float)
        return st / self.scale[: st.shape[-1]]


def system_to_dict(system: RelaxationSystem) -> dict:
    return {
        "n": system.n,
        "m": system.m,
        "A": [float(x) for x in system.A.ravel()],
        "S": [float(x) for x in system.S.ravel()],
        "eps_right": system.eps_right,
    }


def save_system(system: RelaxationSystem, path) -> None:
    Path(path).write_text(json.dumps(system_to_dict(system), indent=2) + "\n")


def load_system(path) -> RelaxationSystem:
    """Read a system file: JSON with keys ``n``, ``m``, ``A``, ``S``, ``eps_right``."""
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top level must be an object")
    missing = [k for k in ("n", "m", "A", "S") if k not in data]
    if missing:
        raise ValidationError(f"{path}: missing keys {', '.join(missing)}")
    n, m = data["n"], data["m"]
    for key in ("n", "m"):
        if not isinstance(data[key], int) or isinstance(data[key], bool):
            raise ValidationError(f"{path}: key '{key}' must be an integer")
    A = _flat(data["A"], n * n, "A", path)
    S = _flat(data["S"], m * m, "S", path)
    eps = data.get("eps_right", 1.0)
    if not isinstance(eps, (int, float)) or isinstance(eps, bool):
        raise ValidationError(f"{path}: key 'eps_right' must be a number")
    try:
        return build_system(n, m, A.reshape(n, n), S.reshape(m, m), float(eps), name=path.stem)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def _flat(values, size, key, path) -> np.ndarray:
    if not isinstance(values, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in values
    ):
        raise ValidationError(f"{path}: key '{key}' must be a flat array of numbers")
    if len(values) != size:
        raise ValidationError(f"{path}: key '{key}' needs {size} entries, got {len(values)}")
    return np.array(values, dtype=float)
