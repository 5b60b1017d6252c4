"""Command-line driver: ``relaxcouple <command> [options]``.

Exit codes: 0 success, 1 invalid input, 2 numerical instability, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .coupling import derive
from .errors import InstabilityError, RelaxCoupleError, ValidationError
from .gkc import gkc_sample, strict_dissipative
from .models import MomentConvention, carleman, grad_moment, load_system
from .spectral import char_decomp
from .svg import write_line_chart
from .sysmodel import RelaxationSystem

EXIT_OK, EXIT_INVALID, EXIT_UNSTABLE, EXIT_IO = 0, 1, 2, 3
PAPER_EXACT_DX = 4e-6


def parse_number(text: str) -> float:
    """Parse ``1e-3``, ``pi``, ``pi/80`` or ``2pi/3`` style values."""
    t = text.strip().lower().replace(" ", "")
    try:
        return float(t)
    except ValueError:
        pass
    num, _, den = t.partition("/")
    if num.endswith("pi"):
        coef = num[:-2].rstrip("*")
        value = (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
        return value / float(den) if den else value
    raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def parse_list(text: str) -> list[float]:
    return [parse_number(p) for p in text.split(",") if p.strip()]


def parse_window(text: str) -> tuple[float, float]:
    vals = parse_list(text)
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise argparse.ArgumentTypeError(f"window must be 'lo,hi' with lo < hi, got {text!r}")
    return vals[0], vals[1]


def _int_pair(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return int(parts[0]), int(parts[1])


# ---------------------------------------------------------------------------
# system selection


def system_from_args(args) -> RelaxationSystem:
    if args.model == "carleman":
        return carleman(v=args.v, rho_star=args.rho_star)
    if args.model == "grad":
        return grad_moment(args.M, max_M=args.max_M)
    if not args.file:
        raise ValidationError("--model file needs --file PATH")
    return load_system(args.file)


def _matrix_block(label: str, M: np.ndarray) -> str:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [f"# {label} ({M.shape[0]}x{M.shape[1]})"]
    if M.shape[1] > 0:
        lines += [",".join(f"{v:.12g}" for v in row) for row in M]
    return "\n".join(lines)


def moment_relation_check(derivation, trials: int = 100, seed: int = 0) -> float:
    """Largest residual of the four M=5 interface relations over random traces."""
    rng = np.random.default_rng(seed)
    ch, eq = derivation.char, derivation.equil
    conv = MomentConvention(5)
    r3, r5 = math.sqrt(3), math.sqrt(5)
    worst = 0.0
    for _ in range(trials):
        a = rng.normal(size=ch.R_plus.shape[1])
        b = rng.normal(size=eq.P_minus.shape[1])
        b0 = rng.normal(size=eq.P_zero.shape[1])
        am, bp = derivation.matrices.incoming(a, b)
        UL = conv.to_physical(ch.R_plus @ a + ch.R_minus @ am)
        ur = conv.to_physical(np.concatenate([eq.P_plus @ bp + eq.P_minus @ b + eq.P_zero @ b0, np.zeros(3)]))
        res = [
            (UL[0] - r3 * UL[1] + UL[2]) - (ur[0] - r3 * ur[1] + ur[2]),
            UL[3],
            UL[4] - r5 * UL[5],
            (ur[0] + r3 * ur[1] + ur[2]) - (UL[0] + r3 * UL[1] + UL[2]),
        ]
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


# ---------------------------------------------------------------------------
# commands


def cmd_derive(args) -> int:
    system = system_from_args(args)
    d = derive(system)
    c = d.counts
    out = [
        f"# system {system.name} n={system.n} m={system.m}",
        "# sign counts",
        "n_plus,n_minus,n1_plus,n1_minus,n1_zero",
        f"{c.n_plus},{c.n_minus},{c.n1_plus},{c.n1_minus},{c.n1_zero}",
    ]
    L, B = d.layer, d.matrices
    for label, M in [("K", L.K), ("K_tilde", L.K_tilde), ("X", L.X), ("N", L.N), ("R_S", L.R_S),
                     ("B_ll", B.B_ll), ("B_lr", B.B_lr), ("B_rr", B.B_rr), ("B_rl", B.B_rl)]:
        out.append(_matrix_block(label, M))
    if system.name == "grad5":
        worst = moment_relation_check(d)
        status = "PASS" if worst <= 1e-9 else "FAIL"
        out += ["# moment relations (100 random traces)", "status,max_residual", f"{status},{worst:.3e}"]
    text = "\n".join(out) + "\n"
    sys.stdout.write(text)
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"derive_{system.name}.csv").write_text(text)
    return EXIT_OK


def _emit_report(report: ex.ExperimentReport, args) -> None:
    print(report.metadata.get("system", ""), report.name)
    print(report.table())
    if args.out:
        csv_path, _ = report.write(args.out)
        print(f"wrote {csv_path}")


def cmd_convergence_eps(args) -> int:
    system = system_from_args(args)
    eps = args.eps or [8e-4, 4e-4, 2e-4, 1e-4]
    dx = args.dx[0] if args.dx else (PAPER_EXACT_DX if args.paper_exact else 1e-5)
    report = ex.convergence_eps(
        system, eps, dx_ref=dx, window=args.window or (-0.1, 0.1),
        t_end=args.t_end if args.t_end is not None else 0.2,
        domain=args.domain or (-0.4, 0.4), cfl_ref=args.cfl_ref,
        dd_dx=args.dd_dx or 1e-3, k=args.k, cfl_dd=args.cfl,
    )
    _emit_report(report, args)
    return EXIT_OK


def cmd_convergence_dx(args) -> int:
    system = system_from_args(args)
    report = ex.convergence_dx(
        system, args.dx or None, k=args.k, cfl=args.cfl,
        t_end=args.t_end if args.t_end is not None else 0.5,
        window=args.window or (-2 * math.pi / 3, 2 * math.pi / 3),
        domain=args.domain or (-2 * math.pi, 2 * math.pi),
    )
    _emit_report(report, args)
    return EXIT_OK


def _write_profile_csv(path: Path, names, x, vals) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", *names])
    for xi, row in zip(x, vals):
        w.writerow([f"{xi:.10g}", *(f"{v:.12e}" for v in row)])
    path.write_text(buf.getvalue())


def cmd_profile(args) -> int:
    system = system_from_args(args)
    eps = args.eps[0] if args.eps else 1e-3
    p = ex.profile(system, eps=eps, t_end=args.t_end, window=args.window,
                   dx_ref=args.dx[0] if args.dx else 1e-4, dd_dx=args.dd_dx, k=args.k,
                   cfl_ref=args.cfl_ref, cfl_dd=args.cfl, domain=args.domain)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    _write_profile_csv(out / "profile_reference.csv", p.names, p.x_ref, p.ref)
    _write_profile_csv(out / "profile_dd.csv", p.names, p.x_dd, p.dd)
    # the SVG is a preview; thin long series so files stay small
    sr = max(1, p.x_ref.size // 4000)
    sd = max(1, p.x_dd.size // 4000)
    for j, name in enumerate(p.names):
        write_line_chart(
            out / f"profile_{name}.svg",
            [("original problem", p.x_ref[::sr], p.ref[::sr, j]), ("DD method", p.x_dd[::sd], p.dd[::sd, j])],
            title=f"{system.name}: {name}, eps={eps:g}, t={p.metadata['t_end']:g}",
            xlabel="x", ylabel=name,
        )
    print(f"wrote profiles for {', '.join(p.names)} to {out}")
    return EXIT_OK


def cmd_stability(args) -> int:
    system = system_from_args(args)
    series = ex.stability(system, t_end=args.t_end if args.t_end is not None else 0.5,
                          delta=args.delta, dd_dx=args.dd_dx or 0.02,
                          fv_dx=args.dx[0] if args.dx else 1e-3,
                          eps=args.eps[0] if args.eps else 1e-2, k=args.k,
                          cfl_dd=args.cfl, cfl_fv=args.cfl_ref, domain=args.domain)
    print(f"DG weighted norm max growth factor: {series.dd_growth:.6f}")
    print(f"reference L2 largest step ratio:   {series.fv_step_growth:.15f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows = ["t,weighted_l2,l2"] + [
            f"{t:.10g},{w:.12e},{v:.12e}" for t, w, v in zip(series.t_dd, series.weighted, series.l2_dd)
        ]
        (out / "stability_dd.csv").write_text("\n".join(rows) + "\n")
        rows = ["t,l2"] + [f"{t:.10g},{v:.12e}" for t, v in zip(series.t_fv, series.l2_fv)]
        (out / "stability_reference.csv").write_text("\n".join(rows) + "\n")
    return EXIT_OK


def cmd_gkc_check(args) -> int:
    system = system_from_args(args)
    ch = char_decomp(system)
    if args.B == "r-plus":
        B = ch.R_plus.T
    elif args.B == "r-minus":
        B = ch.R_minus.T
    else:
        B = np.atleast_2d(np.loadtxt(args.B, delimiter=","))
    lo, hi = args.xi_exp
    xi = tuple(2.0**k for k in range(lo, hi + 1))
    elo, ehi = args.eta_exp
    eta = (0.0,) + tuple(2.0**k for k in range(elo, ehi + 1))
    c = strict_dissipative(B, system.A)
    res = gkc_sample(system, B, xi, eta)
    print(f"strictly dissipative: {'yes, c=%g' % c if c is not None else 'no'}")
    print(f"min |det(B R)| = {res.minimum:.6e} at xi={res.argmin[0]:g}, eta={res.argmin[1]:g}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows = ["xi,eta,absdet"] + [f"{a:.10g},{b:.10g},{v:.12e}" for a, b, v in res.samples]
        (out / "gkc.csv").write_text("\n".join(rows) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=["carleman", "grad", "file"], default=None,
                        help="default: grad for convergence-dx, carleman otherwise")
    common.add_argument("--file", help="system JSON file for --model file")
    common.add_argument("--M", type=int, default=None, help="Grad moment order (odd, default 5)")
    common.add_argument("--max-M", type=int, default=15, dest="max_M")
    common.add_argument("--v", type=float, default=1.0)
    common.add_argument("--rho-star", type=float, default=0.5, dest="rho_star")
    common.add_argument("--eps", type=parse_list, default=None, help="comma-separated eps values")
    common.add_argument("--dx", type=parse_list, default=None, help="comma-separated cell widths (pi/80 ok)")
    common.add_argument("--dd-dx", type=parse_number, default=None, dest="dd_dx")
    common.add_argument("--k", type=int, default=2)
    common.add_argument("--cfl", type=float, default=0.17, help="DG CFL number")
    common.add_argument("--cfl-ref", type=float, default=0.67, dest="cfl_ref", help="reference-solver CFL")
    common.add_argument("--t-end", type=float, default=None, dest="t_end")
    common.add_argument("--window", type=parse_window, default=None)
    common.add_argument("--domain", type=parse_window, default=None)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--paper-exact", action="store_true", dest="paper_exact")

    p = argparse.ArgumentParser(prog="relaxcouple", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("derive", parents=[common], help="print layer and coupling matrices").set_defaults(fn=cmd_derive)
    sub.add_parser("convergence-eps", parents=[common], help="error versus eps").set_defaults(fn=cmd_convergence_eps)
    sub.add_parser("convergence-dx", parents=[common], help="DG mesh refinement").set_defaults(fn=cmd_convergence_dx)
    sub.add_parser("profile", parents=[common], help="solution profiles (CSV + SVG)").set_defaults(fn=cmd_profile)
    st = sub.add_parser("stability", parents=[common], help="norm time series")
    st.add_argument("--delta", type=float, default=0.05)
    st.set_defaults(fn=cmd_stability)
    g = sub.add_parser("gkc-check", parents=[common], help="dissipativity and sampled Kreiss condition")
    g.add_argument("--B", default="r-plus", help="r-plus, r-minus, or a CSV file")
    g.add_argument("--xi-exp", type=_int_pair, default=(-6, 6), dest="xi_exp")
    g.add_argument("--eta-exp", type=_int_pair, default=(-6, 20), dest="eta_exp")
    g.set_defaults(fn=cmd_gkc_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.model is None:
        args.model = "grad" if args.command == "convergence-dx" else "carleman"
    if args.model == "grad" and args.M is None:
        args.M = 5
    try:
        return args.fn(args)
    except InstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (ValidationError, RelaxCoupleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", EXIT_INVALID)
    except OSError as exc:
        name = getattr(exc, "filename", None)
        print(f"error: {f'{name}: ' if name else ''}{exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
