from __future__ import annotations

import math
import sys

import numpy as np
import pytest

from relaxcouple.models import MomentConvention, carleman, grad_moment
from relaxcouple.sysmodel import build_system


def hermite_roots(order: int) -> np.ndarray:
    """Roots of the probabilists' Hermite polynomial He_order.

    Brackets sign changes on a fine grid, then polishes each root by Newton
    using the three-term recurrence and He_k' = k He_{k-1}.
    """

    def he(x, k):
        p0, p1 = 1.0, x
        if k == 0:
            return p0, 0.0
        for j in range(1, k):
            p0, p1 = p1, x * p1 - j * p0
        return p1, k * p0

    bound = 2.0 * math.sqrt(order + 1.0)
    grid = np.linspace(-bound, bound, 20001)
    vals = np.array([he(x, order)[0] for x in grid])
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:])):
        x = 0.5 * (grid[i] + grid[i + 1])
        for _ in range(50):
            p, dp = he(x, order)
            step = p / dp
            x -= step
            if abs(step) < 1e-15 * max(1.0, abs(x)):
                break
        roots.append(x)
    return np.sort(np.array(roots))


def carleman_init(x):
    x = np.asarray(x, dtype=float)
    return np.stack([np.sin(x) + 1.0, np.zeros_like(x)], axis=1)


def grad_init(M: int = 5):
    conv = MomentConvention(M)

    def f(x):
        x = np.asarray(x, dtype=float)
        phys = np.zeros((x.size, M + 1))
        phys[:, 0] = np.sin(2 * x) + 1.1
        phys[:, 2] = math.sqrt(2.0)
        return conv.to_state(phys)

    return f


def random_system(rng, n: int, m: int, eps_right: float = 1.0):
    """Random valid system with invertible A and negative definite S."""
    while True:
        G = rng.normal(size=(n, n))
        A = 0.5 * (G + G.T)
        lam = np.linalg.eigvalsh(A)
        if np.min(np.abs(lam)) < 0.1:
            continue
        H = rng.normal(size=(m, m))
        S = -(H @ H.T + 0.5 * np.eye(m))
        return build_system(n, m, A, S, eps_right=eps_right, name="random")


@pytest.fixture
def car():
    return carleman()


@pytest.fixture
def grad5():
    return grad_moment(5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        passed, detail = results[num]
        terminalreporter.write_line(f"ACCEPTANCE {num}: {'PASS' if passed else 'FAIL'} | {detail}")
