from __future__ import annotations

import json
import math

import numpy as np
import pytest

from relaxcouple.errors import ValidationError
from relaxcouple.models import MomentConvention, carleman, grad_moment, load_system, save_system

from conftest import hermite_roots


def test_carleman_parameters():
    assert np.array_equal(carleman().S, [[-1.0]])
    s = carleman(v=2.0, rho_star=1.0)
    assert np.allclose(np.linalg.eigvalsh(s.A), [-2.0, 2.0])
    with pytest.raises(ValidationError):
        carleman(v=0.0)
    with pytest.raises(ValidationError):
        carleman(rho_star=-1.0)


def test_grad_matrix():
    g = grad_moment(5)
    assert np.allclose(np.diag(g.A, 1), [1, math.sqrt(2), math.sqrt(3), 2, math.sqrt(5)])
    assert np.allclose(g.A, g.A.T) and np.allclose(np.diag(g.A), 0)
    assert np.array_equal(g.S, -np.eye(3))
    g3 = grad_moment(3)
    assert (g3.n, g3.m) == (4, 1)


def test_grad_even_and_cap():
    with pytest.raises(ValidationError, match="A singular for even M"):
        grad_moment(4)
    with pytest.raises(ValidationError):
        grad_moment(17)
    assert grad_moment(17, max_M=17).n == 18


@pytest.mark.parametrize("M", [3, 5, 7])
def test_grad_eigenvalues_are_hermite_roots(M):
    assert np.allclose(np.linalg.eigvalsh(grad_moment(M).A), hermite_roots(M + 1), atol=1e-9)


def test_moment_convention_round_trip(rng):
    conv = MomentConvention(5)
    assert conv.names == ["rho", "w", "theta", "f3", "f4", "f5"]
    assert np.allclose(conv.scale, [1, 1, 1 / math.sqrt(2), math.sqrt(6), math.sqrt(24), math.sqrt(120)])
    phys = rng.normal(size=(7, 6))
    assert np.max(np.abs(conv.to_physical(conv.to_state(phys)) - phys)) <= 1e-14
    with pytest.raises(ValidationError):
        MomentConvention(4)


def test_save_load_round_trip(tmp_path):
    p = tmp_path / "car.json"
    save_system(carleman(eps_right=0.01), p)
    s = load_system(p)
    assert np.array_equal(s.A, carleman().A) and np.array_equal(s.S, carleman().S)
    assert s.eps_right == 0.01


def _write(tmp_path, data, name="sys.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return p


def test_load_errors(tmp_path):
    base = {"n": 2, "m": 1, "A": [0, 1, 2, 0], "S": [-1]}
    with pytest.raises(ValidationError, match="A not symmetric"):
        load_system(_write(tmp_path, base))
    with pytest.raises(ValidationError, match="S not negative definite"):
        load_system(_write(tmp_path, dict(base, A=[0, 1, 1, 0], S=[2])))
    with pytest.raises(ValidationError, match="missing keys S"):
        load_system(_write(tmp_path, {"n": 2, "m": 1, "A": [0, 1, 1, 0]}))
    with pytest.raises(ValidationError, match="'A' needs 4 entries"):
        load_system(_write(tmp_path, dict(base, A=[0, 1, 1])))
    with pytest.raises(ValidationError, match=r"sys\.json:1:"):
        load_system(_write(tmp_path, "{not json"))
    with pytest.raises(FileNotFoundError):
        load_system(tmp_path / "absent.json")
