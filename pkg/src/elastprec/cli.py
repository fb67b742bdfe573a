"""Command-line front end: bench, fourier-check, verify and mesh-info."""

from __future__ import annotations

import argparse
import sys

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4


def _parse_levels(text: str):
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(part) for part in text.split(","))


def _parse_floats(text: str):
    return tuple(float(part) for part in text.split(","))


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w"), True


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastprec",
        description="Benchmarks and verification for the projection-preconditioned "
                    "nearly-incompressible elasticity solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="reproduce the iteration/condition tables")
    bench.add_argument("--pair", choices=["p2p0", "p2p1", "both"], default="both")
    bench.add_argument("--levels", type=_parse_levels, default=(2, 3, 4, 5),
                       metavar="LO..HI|L1,L2,...")
    bench.add_argument("--nu", type=_parse_floats,
                       default=(0.25, 0.4, 0.49, 0.499, 0.4999), metavar="NU1,NU2,...")
    bench.add_argument("--tol", type=float, default=1e-6)
    bench.add_argument("--format", choices=["md", "csv", "json"], default="md")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--max-level-guard", type=int, default=6)
    bench.add_argument("--projection", choices=["diagonal", "exact"],
                       default="diagonal",
                       help="pressure-projection realization in the operator")
    bench.add_argument("--out", default=None, metavar="FILE")

    fourier = sub.add_parser("fourier-check", help="per-mode identity sweeps")
    fourier.add_argument("--modes", type=int, default=1000)
    fourier.add_argument("--seed", type=int, default=0)
    fourier.add_argument("--out", default=None, metavar="FILE")

    verify = sub.add_parser("verify", help="run the release verification suite")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--out", default=None, metavar="FILE")

    info = sub.add_parser("mesh-info", help="mesh statistics and optional dump")
    info.add_argument("--level", type=int, required=True)
    info.add_argument("--dump", action="store_true")
    info.add_argument("--out", default=None, metavar="FILE")

    return parser


def _cmd_bench(args) -> int:
    from .bench import ExperimentConfig, emit_report, run_table_experiment

    pairs = ("p2p0", "p2p1") if args.pair == "both" else (args.pair,)
    fmt = {"md": "markdown", "csv": "csv", "json": "json"}[args.format]
    try:
        config = ExperimentConfig(pairs=pairs, levels=args.levels,
                                  nu_values=args.nu, tolerance=args.tol,
                                  report_format=fmt, seed=args.seed,
                                  max_level_guard=args.max_level_guard,
                                  projection=args.projection)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    result = run_table_experiment(config)
    stream, close = _open_out(args.out)
    try:
        stream.write(emit_report(result))
        stream.write("\n")
    finally:
        if close:
            stream.close()
    if any(cell.error for cell in result.cells):
        failures = [f"({c.pair}, L={c.level}, nu={c.nu}): {c.error}"
                    for c in result.cells if c.error]
        print("solver failures:\n  " + "\n  ".join(failures), file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_fourier(args) -> int:
    from . import fourier

    rng = np.random.default_rng(args.seed)
    stream, close = _open_out(args.out)
    failed = False
    try:
        for dim in (2, 3):
            worst_convex = worst_idem = worst_stokes = 0.0
            for _ in range(args.modes):
                xi = rng.uniform(-10.0, 10.0, size=dim)
                while np.linalg.norm(xi) < 0.5:
                    xi = rng.uniform(-10.0, 10.0, size=dim)
                fhat = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
                lam = float(rng.choice([0.0, 10.0 ** rng.uniform(-2.0, 8.0)]))
                t = float(rng.choice([rng.uniform(-0.99, 2.0),
                                      10.0 ** rng.uniform(0.0, 6.0)]))
                worst_convex = max(worst_convex,
                                   fourier.verify_convex_combination(xi, lam, fhat))
                worst_idem = max(worst_idem,
                                 fourier.verify_inverse_idempotent(t, xi) / (1.0 + abs(t)))
                worst_stokes = max(worst_stokes,
                                   fourier.stokes_symbol_residual(xi, fhat)
                                   / np.linalg.norm(fhat))
            stream.write(f"dim {dim}: max convex-combination residual {worst_convex:.3e}, "
                         f"max scaled inverse-idempotent residual {worst_idem:.3e}, "
                         f"max scaled saddle residual {worst_stokes:.3e}\n")
            failed |= worst_convex > 1e-12 or worst_idem > 1e-13 or worst_stokes > 1e-13
    finally:
        if close:
            stream.close()
    return EXIT_VERIFY if failed else EXIT_OK


def _cmd_verify(args) -> int:
    from .bench import run_verification_suite

    outcomes = run_verification_suite(seed=args.seed)
    stream, close = _open_out(args.out)
    try:
        for outcome in outcomes:
            status = "PASS" if outcome.passed else "FAIL"
            stream.write(f"{status} {outcome.name}: {outcome.detail}\n")
    finally:
        if close:
            stream.close()
    return EXIT_OK if all(o.passed for o in outcomes) else EXIT_VERIFY


def _cmd_mesh_info(args) -> int:
    from .mesh import build_uniform_mesh, dump_mesh

    try:
        mesh = build_uniform_mesh(args.level)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stream, close = _open_out(args.out)
    try:
        stream.write(f"level {mesh.level}: h = {mesh.h}, "
                     f"{mesh.num_vertices} vertices, {mesh.num_cells} cells, "
                     f"{mesh.num_edges} edges, "
                     f"{int(mesh.boundary_vertex_flags.sum())} boundary vertices, "
                     f"{int(mesh.boundary_edge_flags.sum())} boundary edges\n")
        if args.dump:
            dump_mesh(mesh, stream)
    finally:
        if close:
            stream.close()
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {
        "bench": _cmd_bench,
        "fourier-check": _cmd_fourier,
        "verify": _cmd_verify,
        "mesh-info": _cmd_mesh_info,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
