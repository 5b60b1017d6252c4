"""Convergence studies, interface profiles and norm monitoring.

Each experiment returns plain data (an :class:`ExperimentReport` or arrays);
writing files is left to the command-line layer.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .coupling import derive
from .errors import InstabilityError, ValidationError
from .models import MomentConvention
from .solver import (
    Grid,
    dg_l2_squared,
    dg_sampler,
    fv_sampler,
    l2_error,
    run_dd,
    run_reference,
    weighted_l2,
)
from .solver.fv import FVState, cell_averages
from .solver.norms import Sampler
from .sysmodel import RelaxationSystem

THREADS_ENV = "RELAXCOUPLE_THREADS"


# ---------------------------------------------------------------------------
# model set-up


@dataclass(frozen=True)
class Setup:
    """Initial data, component names and default domain for one system."""

    system: RelaxationSystem
    init: Callable
    names: list[str]
    domain: tuple[float, float]
    to_physical: Callable = field(default=lambda v: v)


def _carleman_init(x):
    x = np.asarray(x, dtype=float)
    return np.stack([np.sin(x) + 1.0, np.zeros_like(x)], axis=1)


class _GradInit:
    # a class rather than a closure so it survives pickling into workers
    def __init__(self, M: int):
        self.conv = MomentConvention(M)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        phys = np.zeros((x.size, self.conv.M + 1))
        phys[:, 0] = np.sin(2 * x) + 1.1
        phys[:, 2] = math.sqrt(2.0)
        return self.conv.to_state(phys)


class _GenericInit:
    def __init__(self, n: int):
        self.n = n

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros((x.size, self.n))
        out[:, 0] = np.sin(x) + 1.0
        return out


def model_setup(system: RelaxationSystem) -> Setup:
    """Experiment defaults keyed on the system name.

    Carleman: ``rho = sin x + 1, q = 0`` on ``[-0.4, 0.4]``.  Grad order M:
    ``(rho, w, theta) = (sin 2x + 1.1, 0, sqrt 2)``, higher moments zero, on
    ``[-2 pi, 2 pi]``.  Anything else: first component ``sin x + 1``.
    """
    name = system.name
    if name == "carleman":
        return Setup(system, _carleman_init, ["rho", "q"], (-0.4, 0.4))
    if name.startswith("grad") and name[4:].isdigit():
        conv = MomentConvention(int(name[4:]))
        return Setup(system, _GradInit(conv.M), conv.names, (-2 * math.pi, 2 * math.pi), conv.to_physical)
    return Setup(system, _GenericInit(system.n), [f"u{i + 1}" for i in range(system.n)], (-1.0, 1.0))


def physical(sampler: Sampler, to_physical: Callable) -> Sampler:
    return Sampler(lambda x: to_physical(sampler(x)), sampler.domain, sampler.ncomp)


# ---------------------------------------------------------------------------
# reports


def observed_orders(params, errors) -> list[float | None]:
    """``log(e[i-1] / e[i]) / log(p[i-1] / p[i])``; ``None`` for the first row."""
    out: list[float | None] = [None]
    for i in range(1, len(params)):
        e0, e1 = errors[i - 1], errors[i]
        if e0 > 0 and e1 > 0:
            out.append(math.log(e0 / e1) / math.log(params[i - 1] / params[i]))
        else:
            out.append(float("nan"))
    return out


@dataclass
class ReportRow:
    param: float
    comp: str
    err_l2: float
    order: float | None


@dataclass
class ExperimentReport:
    name: str
    params: list[float]
    rows: list[ReportRow]
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_errors(cls, name, params, comps, errors, metadata=None) -> "ExperimentReport":
        errs = np.asarray(errors, dtype=float).reshape(len(params), len(comps))
        orders = [observed_orders(params, errs[:, j]) for j in range(len(comps))]
        rows = [
            ReportRow(float(p), c, float(errs[i, j]), orders[j][i])
            for i, p in enumerate(params)
            for j, c in enumerate(comps)
        ]
        return cls(name, [float(p) for p in params], rows, dict(metadata or {}))

    @property
    def comps(self) -> list[str]:
        seen: list[str] = []
        for r in self.rows:
            if r.comp not in seen:
                seen.append(r.comp)
        return seen

    def errors(self, comp: str) -> np.ndarray:
        return np.array([r.err_l2 for r in self.rows if r.comp == comp])

    def orders(self, comp: str) -> list[float | None]:
        return [r.order for r in self.rows if r.comp == comp]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param", "comp", "err_l2", "order"])
        for r in self.rows:
            w.writerow([repr(r.param), r.comp, f"{r.err_l2:.10e}", "" if r.order is None else f"{r.order:.6f}"])
        return buf.getvalue()

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.name}.csv"
        meta_path = out / f"{self.name}.meta.json"
        csv_path.write_text(self.to_csv())
        meta_path.write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")
        return csv_path, meta_path

    def table(self) -> str:
        """Human-readable table, one line per parameter value."""
        comps = self.comps
        head = f"{'param':>12}" + "".join(f"{c + ' err':>16}{'order':>8}" for c in comps)
        lines = [head]
        for i, p in enumerate(self.params):
            cells = []
            for c in comps:
                e = self.errors(c)[i]
                o = self.orders(c)[i]
                cells.append(f"{e:>16.4e}{'' if o is None else f'{o:.3f}':>8}")
            lines.append(f"{p:>12.4g}" + "".join(cells))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# parallel helpers


def worker_count(tasks: int) -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        cap = int(raw)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return max(1, min(cap, tasks))


def parallel_map(fn, items) -> list:
    items = list(items)
    workers = worker_count(len(items))
    if workers == 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _check_ratio(values, what: str, dyadic: bool = False) -> float:
    v = [float(x) for x in values]
    if not v:
        raise ValidationError(f"{what} list is empty")
    if any(x <= 0 for x in v):
        raise ValidationError(f"{what} values must be positive")
    if len(v) == 1:
        return float("nan")
    ratios = [v[i - 1] / v[i] for i in range(1, len(v))]
    if any(r <= 1 for r in ratios):
        raise ValidationError(f"{what} list must be strictly decreasing")
    if max(ratios) - min(ratios) > 1e-9 * max(ratios):
        raise ValidationError(f"{what} list must decrease by a constant ratio")
    if dyadic and abs(ratios[0] - 2.0) > 1e-9:
        raise ValidationError(f"{what} list must be dyadic (ratio 2), got ratio {ratios[0]:.6g}")
    return ratios[0]


# ---------------------------------------------------------------------------
# experiments


@dataclass
class _RefTask:
    system: RelaxationSystem
    eps: float
    domain: tuple[float, float]
    dx: float
    cfl: float
    t_end: float


def _reference(task: _RefTask) -> FVState:
    s = task.system.with_eps(task.eps)
    grid = Grid.uniform(task.domain[0], task.domain[1], task.dx)
    try:
        return run_reference(s, grid, task.cfl, task.t_end, model_setup(task.system).init)
    except InstabilityError as exc:
        raise InstabilityError(f"reference run eps={task.eps:g}, dx={task.dx:g}: {exc}") from exc


def convergence_eps(system: RelaxationSystem, eps_list=(8e-4, 4e-4, 2e-4, 1e-4), dx_ref: float = 1e-5,
                    window=(-0.1, 0.1), t_end: float = 0.2, domain=None, cfl_ref: float = 0.67,
                    dd_dx: float = 1e-3, k: int = 2, cfl_dd: float = 0.17) -> ExperimentReport:
    """Distance between the stiff solution and the coupled solution as eps shrinks.

    The coupled problem does not depend on eps, so it is solved once (DG,
    degree ``k``, cell width ``dd_dx``); the original problem is solved by the
    upwind reference scheme for every eps.
    """
    start = time.perf_counter()
    ratio = _check_ratio(eps_list, "eps")
    setup = model_setup(system)
    domain = tuple(domain or setup.domain)
    grid_dd = Grid.uniform(domain[0], domain[1], dd_dx)
    dd = run_dd(system, derive(system), grid_dd, k, cfl_dd, t_end, setup.init)
    dd_s = physical(dg_sampler(dd, grid_dd, system), setup.to_physical)
    tasks = [_RefTask(system, float(e), domain, dx_ref, cfl_ref, t_end) for e in eps_list]
    errors = []
    for ref in parallel_map(_reference, tasks):
        errors.append(l2_error(physical(fv_sampler(ref), setup.to_physical), dd_s, window))
    meta = {
        "system": system.name, "domain": list(domain), "t_end": t_end, "window": list(window),
        "dx_ref": dx_ref, "cfl_ref": cfl_ref, "dd_dx": grid_dd.dx_min, "dd_degree": k,
        "cfl_dd": cfl_dd, "ratio": ratio, "wall_time_s": time.perf_counter() - start,
    }
    return ExperimentReport.from_errors("convergence_eps", list(eps_list), setup.names, errors, meta)


@dataclass
class _DGTask:
    system: RelaxationSystem
    domain: tuple[float, float]
    dx: float
    k: int
    cfl: float
    t_end: float


def _dd_run(task: _DGTask):
    grid = Grid.uniform(task.domain[0], task.domain[1], task.dx)
    try:
        return grid, run_dd(task.system, derive(task.system), grid, task.k, task.cfl, task.t_end,
                            model_setup(task.system).init)
    except InstabilityError as exc:
        raise InstabilityError(f"DG run dx={task.dx:g}: {exc}") from exc


def convergence_dx(system: RelaxationSystem, dx_list=None, k: int = 2, cfl: float = 0.17,
                   t_end: float = 0.5, window=(-2 * math.pi / 3, 2 * math.pi / 3),
                   domain=(-2 * math.pi, 2 * math.pi)) -> ExperimentReport:
    """Mesh refinement study of the coupled DG scheme.

    The reference is the same scheme at half the finest listed cell width.
    ``U^l`` errors are measured on ``[window[0], 0]`` and ``u^r`` errors on
    ``[0, window[1]]``, both as vector L2 norms of the scaled state.
    """
    start = time.perf_counter()
    if dx_list is None:
        dx_list = [math.pi / N for N in (10, 20, 40, 80, 160)]
    _check_ratio(dx_list, "dx", dyadic=len(dx_list) > 1)
    if not window[0] < 0 < window[1]:
        raise ValidationError("window must contain the interface")
    ref_dx = min(dx_list) / 2
    tasks = [_DGTask(system, tuple(domain), float(dx), k, cfl, t_end) for dx in [ref_dx, *dx_list]]
    runs = parallel_map(_dd_run, tasks)
    g_ref, st_ref = runs[0]
    ref_s = dg_sampler(st_ref, g_ref, system)
    errors = []
    for g, st in runs[1:]:
        s = dg_sampler(st, g, system)
        el = float(np.linalg.norm(l2_error(s, ref_s, (window[0], 0.0))))
        er = float(np.linalg.norm(l2_error(s, ref_s, (0.0, window[1]))))
        errors.append([el, er])
    meta = {
        "system": system.name, "domain": list(domain), "t_end": t_end, "window": list(window),
        "degree": k, "cfl": cfl, "reference_dx": ref_dx, "wall_time_s": time.perf_counter() - start,
    }
    return ExperimentReport.from_errors("convergence_dx", list(dx_list), ["U^l", "u^r"], errors, meta)


@dataclass
class Profile:
    names: list[str]
    x_ref: np.ndarray
    ref: np.ndarray
    x_dd: np.ndarray
    dd: np.ndarray
    dd_at_ref: np.ndarray
    metadata: dict


def profile(system: RelaxationSystem, eps: float = 1e-3, t_end: float | None = None, window=None,
            dx_ref: float = 1e-4, dd_dx: float | None = None, k: int = 2, cfl_ref: float = 0.67,
            cfl_dd: float = 0.17, domain=None, points_per_cell: int = 4, init: Callable | None = None) -> Profile:
    """Reference and coupled solutions side by side, in physical variables."""
    setup = model_setup(system)
    carl = system.name == "carleman"
    t_end = t_end if t_end is not None else (0.2 if carl else 0.5)
    domain = tuple(domain or ((-0.4, 0.4) if carl else (-2.5, 2.5)))
    window = tuple(window or domain)
    dd_dx = dd_dx or (1e-3 if carl else math.pi / 80)
    init = init or setup.init
    ref = run_reference(system.with_eps(eps), Grid.uniform(domain[0], domain[1], dx_ref), cfl_ref, t_end, init)
    g = Grid.uniform(domain[0], domain[1], dd_dx)
    dd = run_dd(system, derive(system), g, k, cfl_dd, t_end, init)

    c = ref.centers
    keep = (c >= window[0]) & (c <= window[1])
    x_ref = c[keep]
    ref_vals = setup.to_physical(ref.averages[keep])
    edges = g.edges()
    frac = (np.arange(points_per_cell) + 0.5) / points_per_cell
    x_dd = (edges[:-1, None] + np.diff(edges)[:, None] * frac[None, :]).ravel()
    x_dd = x_dd[(x_dd >= window[0]) & (x_dd <= window[1])]
    dd_s = dg_sampler(dd, g, system)
    dd_vals = setup.to_physical(dd_s(x_dd))
    dd_at_ref = setup.to_physical(dd_s(x_ref))
    meta = {"system": system.name, "eps": eps, "t_end": t_end, "domain": list(domain),
            "window": list(window), "dx_ref": dx_ref, "dd_dx": g.dx_min, "degree": k}
    return Profile(setup.names, x_ref, ref_vals, x_dd, dd_vals, dd_at_ref, meta)


def interface_gap(p: Profile, comp: int, side: str = "right", width: float = 0.02) -> float:
    """Largest ``|reference - coupled|`` within ``width`` of the interface on one side."""
    diff = np.abs(p.ref[:, comp] - p.dd_at_ref[:, comp])
    if side == "right":
        sel = (p.x_ref > 0) & (p.x_ref <= width)
    else:
        sel = (p.x_ref < 0) & (p.x_ref >= -width)
    return float(np.max(diff[sel]))


def window_gap(p: Profile, comp: int, lo: float, hi: float) -> float:
    sel = (p.x_ref >= lo) & (p.x_ref <= hi)
    return float(np.max(np.abs(p.ref[sel, comp] - p.dd_at_ref[sel, comp])))


@dataclass
class StabilitySeries:
    t_dd: np.ndarray
    weighted: np.ndarray
    l2_dd: np.ndarray
    t_fv: np.ndarray
    l2_fv: np.ndarray

    @property
    def dd_growth(self) -> float:
        return float(np.max(self.weighted) / self.weighted[0]) if self.weighted[0] > 0 else 0.0

    @property
    def fv_step_growth(self) -> float:
        """Largest ratio between consecutive plain L2 norms of the reference run."""
        if self.l2_fv[0] == 0:
            return 0.0
        return float(np.max(self.l2_fv[1:] / self.l2_fv[:-1])) if self.l2_fv.size > 1 else 1.0


def stability(system: RelaxationSystem, t_end: float = 0.5, delta: float = 0.05, dd_dx: float = 0.02,
              fv_dx: float = 1e-3, eps: float = 1e-2, k: int = 2, cfl_dd: float = 0.17,
              cfl_fv: float = 0.67, domain=None, init: Callable | None = None) -> StabilitySeries:
    """Monitor the weighted DG norm and the plain reference-solver L2 norm each step."""
    setup = model_setup(system)
    domain = tuple(domain or setup.domain)
    init = init or setup.init
    g = Grid.uniform(domain[0], domain[1], dd_dx)
    d = derive(system)
    t_dd, wn, pn = [0.0], [], []

    def mon_dd(t, st):
        t_dd.append(t)
        wn.append(weighted_l2(st, delta, system, g, d.char, d.equil))
        pn.append(dg_l2_squared(st, g))

    from .solver import project_initial

    st0 = project_initial(init, g, k, system)
    wn.append(weighted_l2(st0, delta, system, g, d.char, d.equil))
    pn.append(dg_l2_squared(st0, g))
    run_dd(system, d, g, k, cfl_dd, t_end, init, monitor=mon_dd)

    gf = Grid.uniform(domain[0], domain[1], fv_dx)
    U0 = cell_averages(init, gf.edges())[:, : system.n]
    t_fv, fn = [0.0], [FVState(U0, gf.edges()).l2_norm()]

    def mon_fv(t, st):
        t_fv.append(t)
        fn.append(st.l2_norm())

    run_reference(system.with_eps(eps), gf, cfl_fv, t_end, init, monitor=mon_fv)
    return StabilitySeries(np.array(t_dd), np.array(wn), np.array(pn), np.array(t_fv), np.array(fn))
