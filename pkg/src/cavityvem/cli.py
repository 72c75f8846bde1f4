"""Command-line interface: mesh generation, eigensolves, interpolation
checks and convergence studies.

Subcommands
-----------
vem mesh         generate a mesh family member and write it as JSON
vem solve        assemble and solve the eigenproblem on a mesh file
vem interp-check run the interpolation diagnostics on a mesh family
vem study        run a convergence study from a JSON configuration
"""

from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import __version__
from .assembly import assemble, export_system
from .eigensolve import EigenOptions, solve
from .fields import AnalyticField, cavity_mode, gradient_bubble
from .interp_lab import interpolation_rate_study
from .mesh import PolygonalMesh, check_mesh_assumptions, generators
from .study import StudyConfig, run_study

__all__ = ["main"]


def _add_mesh_parser(sub) -> None:
    p = sub.add_parser("mesh", help="generate a polygonal mesh and write JSON")
    p.add_argument("--family", choices=sorted(generators), required=True)
    p.add_argument("--a", type=float, default=1.0, help="cavity width (default 1)")
    p.add_argument("--b", type=float, default=1.1, help="cavity height (default 1.1)")
    p.add_argument("--n", type=int, required=True, help="refinement index N")
    p.add_argument("--out", required=True, help="output mesh JSON path")
    p.add_argument("--quality", action="store_true", help="print a mesh quality report")
    p.add_argument("--plot", help="also render the mesh to this image file")


def _add_solve_parser(sub) -> None:
    p = sub.add_parser("solve", help="solve the acoustic eigenproblem on a mesh")
    p.add_argument("--mesh", required=True, help="mesh JSON path")
    p.add_argument("--k", type=int, default=0, help="polynomial degree (default 0)")
    p.add_argument("--sigma", type=float, default=1.0, help="stabilization weight")
    p.add_argument("--modes", type=int, default=5, help="positive modes to compute")
    p.add_argument("--method", choices=["auto", "dense", "si"], default="auto")
    p.add_argument("--shift", type=float, default=4.0, help="shift-invert target")
    p.add_argument("--dense-cutoff", type=int, default=6000)
    p.add_argument("--raw", action="store_true", help="report raw eigenvalues only")
    p.add_argument("--out", help="spectrum JSON path (default: stdout)")
    p.add_argument("--vtk", help="export a mode as a legacy VTK file")
    p.add_argument("--vtk-mode", type=int, default=0, help="mode index for --vtk")
    p.add_argument("--dump-system", metavar="PREFIX",
                   help="write PREFIX.K.mtx and PREFIX.M.mtx in Matrix Market format")
    p.add_argument("--dump-element", type=int, metavar="CELL",
                   help="write the local matrices of one cell as JSON")
    p.add_argument("--plot", help="render the pressure of a mode to this image file")
    p.add_argument("--plot-mode", type=int, default=0, help="mode index for --plot")


def _add_interp_parser(sub) -> None:
    p = sub.add_parser("interp-check", help="interpolation and commuting-diagram checks")
    p.add_argument("--family", choices=sorted(generators), default="rect")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--field", default="w11",
                   help="wNM for a cavity mode (e.g. w11, w23) or 'bubble'")
    p.add_argument("--n", default="4,8,16,32", help="comma-separated refinement levels")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--refine", type=int, default=3, help="submesh refinement for evaluation")
    p.add_argument("--out", help="report JSON path (default: stdout)")
    p.add_argument("--plot", help="render the error history to this image file")


def _add_study_parser(sub) -> None:
    p = sub.add_parser("study", help="run a convergence study from a config")
    p.add_argument("--config", required=True, help="StudyConfig JSON path")
    p.add_argument("--csv", help="write per-run rows as CSV")
    p.add_argument("--table", help="write the aligned text table")
    p.add_argument("--figdir", help="render convergence figures into this directory")


def _parse_field(name: str, a: float, b: float) -> AnalyticField:
    if name == "bubble":
        return gradient_bubble(a, b)
    match = re.fullmatch(r"w(\d)(\d)", name)
    if not match:
        raise SystemExit(f"unknown field {name!r}: expected wNM or 'bubble'")
    return cavity_mode(int(match.group(1)), int(match.group(2)), a, b)


def _cmd_mesh(args) -> int:
    mesh = generators[args.family](args.a, args.b, args.n)
    mesh.to_json(args.out)
    print(
        f"{args.family} mesh N={args.n}: {mesh.n_cells} cells, "
        f"{mesh.n_edges} edges, {int(mesh.boundary_edge.sum())} boundary edges "
        f"-> {args.out}",
        file=sys.stderr,
    )
    if args.quality:
        rep = check_mesh_assumptions(mesh)
        print(
            f"quality: min edge/diameter {rep.edge_ratio:.4f}, "
            f"min star-radius/diameter {rep.star_ratio:.4f}, "
            f"star centers found: {rep.star_center_found}",
            file=sys.stderr,
        )
    if args.plot:
        from .plots import plot_mesh

        plot_mesh(mesh, args.plot)
        print(f"mesh figure -> {args.plot}", file=sys.stderr)
    return 0


def _cmd_solve(args) -> int:
    mesh = PolygonalMesh.from_json(args.mesh)
    system = assemble(mesh, args.k, args.sigma)
    if args.dump_system:
        kpath, mpath = export_system(system, args.dump_system)
        print(f"system matrices -> {kpath}, {mpath}", file=sys.stderr)
    if args.dump_element is not None:
        path = _dump_element(system, args.dump_element)
        print(f"element matrices -> {path}", file=sys.stderr)
    opts = EigenOptions(
        modes=args.modes,
        method=args.method,
        sigma_shift=args.shift,
        dense_cutoff=args.dense_cutoff,
    )
    spectrum = solve(system, opts)
    doc = {
        "n_dofs": system.n_dofs,
        "k": args.k,
        "sigma": args.sigma,
        "method": spectrum.method,
        "eigenvalues": spectrum.eigenvalues.tolist(),
        "kernel_multiplicity": spectrum.kernel_multiplicity,
        "zero_threshold": spectrum.zero_threshold,
        "residuals": spectrum.residuals.tolist(),
    }
    if not args.raw:
        doc["scaled"] = spectrum.scaled.tolist()
    if spectrum.below_shift is not None:
        doc["below_shift"] = spectrum.below_shift
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"spectrum -> {args.out}", file=sys.stderr)
    else:
        print(text)
    if args.vtk:
        from .vtk_export import export_eigenfunction

        if not 0 <= args.vtk_mode < spectrum.vectors.shape[1]:
            raise SystemExit(f"--vtk-mode {args.vtk_mode} out of range")
        export_eigenfunction(system, spectrum.vectors[:, args.vtk_mode], args.vtk)
        print(f"mode {args.vtk_mode} -> {args.vtk}", file=sys.stderr)
    if args.plot:
        from .plots import plot_mode

        plot_mode(system, spectrum, args.plot_mode, args.plot)
        print(f"mode figure -> {args.plot}", file=sys.stderr)
    return 0


def _dump_element(system, ci: int) -> str:
    if not 0 <= ci < system.mesh.n_cells:
        raise SystemExit(f"cell {ci} out of range (mesh has {system.mesh.n_cells} cells)")
    ops = system.local_ops(ci)
    doc = {
        "cell": ci,
        "k": system.k,
        "sigma": system.sigma,
        "vertices": system.mesh.cell_vertices(ci).tolist(),
        "area": ops.geometry.area,
        "diameter": ops.geometry.diameter,
        "centroid": ops.geometry.centroid.tolist(),
        "H": ops.H.tolist(),
        "D": ops.D.tolist(),
        "G": ops.G.tolist(),
        "R": ops.R.tolist(),
        "proj_coeff": ops.proj_coeff.tolist(),
        "proj_dof": ops.proj_dof.tolist(),
        "stiffness": ops.stiffness.tolist(),
        "mass": ops.mass.tolist(),
    }
    path = f"element-{ci}.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
    return path


def _cmd_interp(args) -> int:
    levels = tuple(int(s) for s in args.n.split(",") if s)
    if not levels:
        raise SystemExit("--n needs at least one level")
    field = _parse_field(args.field, args.a, args.b)
    study = interpolation_rate_study(
        field,
        family=args.family,
        levels=levels,
        k=args.k,
        a=args.a,
        b=args.b,
        refine=args.refine,
    )
    doc = {
        "field": field.name,
        "family": study.family,
        "k": args.k,
        "levels": list(study.levels),
        "h": study.h.tolist(),
        "l2_error": study.l2_error.tolist(),
        "projected_error": study.projected_error.tolist(),
        "divergence_error": study.divergence_error.tolist(),
        "commuting_max": study.commuting_max.tolist(),
        "rates": {
            "l2": study.rate_l2,
            "projected": study.rate_projected,
            "divergence": study.rate_divergence,
        },
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"interpolation report -> {args.out}", file=sys.stderr)
    else:
        print(text)
    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(study.h, study.l2_error, "o-", label="field error")
        ax.loglog(study.h, study.projected_error, "s-", label="projected error")
        ax.loglog(study.h, study.divergence_error, "^-", label="divergence error")
        ax.set_xlabel("h")
        ax.set_ylabel("L2 error")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        plt.close(fig)
        print(f"error history -> {args.plot}", file=sys.stderr)
    return 0


def _cmd_study(args) -> int:
    config = StudyConfig.from_json(args.config)
    report = run_study(config)
    table = report.format_table()
    if args.table:
        with open(args.table, "w") as fh:
            fh.write(table)
        print(f"table -> {args.table}", file=sys.stderr)
    else:
        print(table)
    if args.csv:
        report.to_csv(args.csv)
        print(f"csv -> {args.csv}", file=sys.stderr)
    if args.figdir:
        import os

        from .plots import plot_convergence

        os.makedirs(args.figdir, exist_ok=True)
        out = plot_convergence(report, os.path.join(args.figdir, "convergence.png"))
        print(f"convergence figure -> {out}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vem",
        description="Divergence-conforming virtual elements for acoustic "
        "eigenmodes of a rigid rectangular cavity.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_mesh_parser(sub)
    _add_solve_parser(sub)
    _add_interp_parser(sub)
    _add_study_parser(sub)
    args = parser.parse_args(argv)
    if args.command == "mesh":
        return _cmd_mesh(args)
    if args.command == "solve":
        return _cmd_solve(args)
    if args.command == "interp-check":
        return _cmd_interp(args)
    if args.command == "study":
        return _cmd_study(args)
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
