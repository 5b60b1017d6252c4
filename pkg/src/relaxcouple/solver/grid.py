from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class Grid:
    """Two uniform meshes meeting at the interface ``x = 0``."""

    x_left: float
    x_right: float
    n_left: int
    n_right: int

    def __post_init__(self):
        if not self.x_left < 0 < self.x_right:
            raise ValidationError(f"need x_left < 0 < x_right, got [{self.x_left}, {self.x_right}]")
        if self.n_left < 1 or self.n_right < 1:
            raise ValidationError("each side needs at least one cell")

    @classmethod
    def uniform(cls, x_left: float, x_right: float, dx: float) -> "Grid":
        """Grid with cell width as close to ``dx`` as the side lengths allow."""
        if dx <= 0:
            raise ValidationError(f"dx must be positive, got {dx}")
        n_left = max(1, int(round(-x_left / dx)))
        n_right = max(1, int(round(x_right / dx)))
        return cls(float(x_left), float(x_right), n_left, n_right)

    @property
    def dx_left(self) -> float:
        return -self.x_left / self.n_left

    @property
    def dx_right(self) -> float:
        return self.x_right / self.n_right

    @property
    def dx_min(self) -> float:
        return min(self.dx_left, self.dx_right)

    @property
    def n_cells(self) -> int:
        return self.n_left + self.n_right

    def edges_left(self) -> np.ndarray:
        return self.x_left + self.dx_left * np.arange(self.n_left + 1)

    def edges_right(self) -> np.ndarray:
        return self.dx_right * np.arange(self.n_right + 1)

    def edges(self) -> np.ndarray:
        return np.concatenate([self.edges_left()[:-1], self.edges_right()])

    def centers(self) -> np.ndarray:
        e = self.edges()
        return 0.5 * (e[1:] + e[:-1])

    def widths(self) -> np.ndarray:
        return np.concatenate(
            [np.full(self.n_left, self.dx_left), np.full(self.n_right, self.dx_right)]
        )
