"""Command-line entry point: ``bulkedge <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .configspace import validate
from .confmap import conf_region
from .contours import Contour
from .errors import (BulkEdgeError, ConvergenceError, DomainError, FormatError, ResolutionError)
from .indices import (DEFAULT_GRID, MAX_GRID, HermitianPath, bulk_index_result, edge_index_result,
                      three_level_path, spectral_flow_trace, thread_count, verify_correspondence)
from .jsonio import decode_complex, decode_matrix, dumps, read_json
from .matpoly import MatrixLaurentPoly, fejer_approx
from .models import BUILTINS, ModelSpec, builtin, gap_check, load_model
from .toeplitz import RANK_TOL, stabilized_coker_dim, truncate

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_CONVERGENCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _grid(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        grid = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 32x32, got {text!r}")
    if min(grid) < 4:
        raise argparse.ArgumentTypeError("grid sizes must be at least 4")
    return grid


def _coerce(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def resolve_model(ref: str) -> ModelSpec:
    """A model file (JSON/TOML) or a builtin reference such as ``qwz:m=1``."""
    path = Path(ref)
    if path.exists():
        return load_model(path)
    name, _, params = ref.partition(":")
    if name in BUILTINS:
        kwargs = {}
        for item in filter(None, params.split(",")):
            key, sep, val = item.partition("=")
            if not sep:
                raise UsageError(f"builtin parameters look like key=value, got {item!r}")
            kwargs[key.strip()] = _coerce(val.strip())
        return builtin(name, **kwargs)
    raise FileNotFoundError(f"{ref}: no such model file or builtin")


def _contour_arg(args) -> Contour:
    if args.contour:
        src = args.contour
        obj = read_json(src) if Path(src).exists() else _json_text(src)
        return Contour.from_json(obj)
    if args.circle:
        try:
            cx, cy, r = (float(v) for v in args.circle.split(","))
        except ValueError:
            raise UsageError("--circle expects cx,cy,radius")
        return Contour.circle(complex(cx, cy), r)
    return Contour.unit_circle()


def _json_text(text: str):
    import json
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"contour is neither a file nor JSON: {exc}") from exc


def _emit(payload, out: str | None) -> None:
    text = dumps(payload)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _write_csv(rows, header, out: str | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if out:
        Path(out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())


def _fmt(v: float) -> str:
    return repr(float(v))


# -- subcommands -------------------------------------------------------------


def cmd_verify(args) -> int:
    model = resolve_model(args.model)
    report = verify_correspondence(model, args.grid, args.max_grid, args.backend, args.gap_margin,
                                   args.nodes, thread_count())
    payload = report.to_json(with_timing=not args.no_timing)
    payload["settings"]["rank_tol"] = RANK_TOL
    _emit(payload, args.out)
    if not report.converged:
        return EXIT_CONVERGENCE
    return EXIT_OK if report.equal else EXIT_VALIDATION


def _single(args, which: str) -> int:
    model = resolve_model(args.model)
    gap = gap_check(model, margin=args.gap_margin)
    if not gap.ok:
        _emit({"model": model.name, "gap": gap.to_json()}, args.out)
        return EXIT_VALIDATION
    t0 = time.perf_counter()
    if which == "bulk":
        res = bulk_index_result(model, args.grid, args.max_grid, args.nodes, thread_count())
    else:
        res = edge_index_result(model, args.grid, args.max_grid, args.backend, args.nodes, thread_count())
    payload = {"model": model.name, which: res.value, "refinement": res.to_json(), "gap": gap.to_json(),
               "settings": {"initial_grid": list(args.grid), "max_grid": args.max_grid,
                            "gap_margin": args.gap_margin, "quadrature_nodes": args.nodes or model.gap.nodes}}
    if which == "edge":
        payload["settings"]["backend"] = args.backend
    if not args.no_timing:
        payload["timing"] = {"total_s": time.perf_counter() - t0}
    _emit(payload, args.out)
    return EXIT_OK if res.converged else EXIT_CONVERGENCE


def cmd_bulk(args) -> int:
    return _single(args, "bulk")


def cmd_edge(args) -> int:
    return _single(args, "edge")


def cmd_conf(args) -> int:
    poly = MatrixLaurentPoly.from_json(read_json(args.poly))
    contour = _contour_arg(args)
    cfg = conf_region(poly, contour, tol=args.tol, allow_chart=not args.no_chart, nodes=args.nodes)
    rep = validate(cfg)
    _emit({"configuration": cfg.to_json(),
           "validation": {"controllability_margin": rep.controllability_margin,
                          "spectral_margin": rep.spectral_margin, "ok": rep.ok},
           "eigenvalues": [[complex(v).real, complex(v).imag] for v in np.sort_complex(cfg.eigenvalues())],
           "settings": {"tol": args.tol, "contour": contour.to_json()}}, args.out)
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_sf(args) -> int:
    if args.builtin == "three_level":
        path = three_level_path(args.samples)
    elif args.path:
        path = HermitianPath.from_json(read_json(args.path))
    else:
        raise UsageError("sf needs a path file or --builtin three_level")
    flow = spectral_flow_trace(path, args.tol)
    sys.stdout.write(f"{flow.value}\n")
    if args.csv:
        n = flow.eigenvalues.shape[1]
        rows = [[_fmt(t)] + [_fmt(v) for v in vals] for t, vals in zip(path.ts, flow.eigenvalues)]
        _write_csv(rows, ["t"] + [f"lambda_{b}" for b in range(n)], args.csv)
    if args.out:
        _emit({"spectral_flow": flow.value,
               "crossings": [{"branch": c.branch, "t": c.t, "direction": c.direction} for c in flow.crossings],
               "signed_crossings": flow.crossing_count, "samples": len(path.ts), "tol": args.tol}, args.out)
    if args.figure:
        from .plotting import flow_figure
        flow_figure(path.ts, flow.eigenvalues, args.figure, flow.crossings)
    return EXIT_OK


def cmd_toeplitz(args) -> int:
    poly = MatrixLaurentPoly.from_json(read_json(args.poly))
    scan = stabilized_coker_dim(poly, args.N, args.rank_tol, strict=False)
    payload = scan.to_json()
    payload["settings"] = {"rank_tol": args.rank_tol, "N0": scan.N_sequence[0] if scan.N_sequence else args.N}
    if args.dump_matrix:
        t = truncate(poly, scan.N_sequence[0])
        np.savetxt(args.dump_matrix, np.abs(t.dense()), fmt="%.6g", delimiter=",")
    _emit(payload, args.out)
    return EXIT_OK if scan.stabilized else EXIT_CONVERGENCE


def _read_samples(obj) -> tuple[np.ndarray, np.ndarray]:
    try:
        if "angles" in obj:
            zs = np.exp(1j * np.asarray(obj["angles"], dtype=float))
        else:
            zs = np.array([decode_complex(z) for z in obj["z"]])
        vals = np.array([decode_matrix(v) for v in obj["values"]])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad samples file: {exc}") from exc
    return zs, vals


def cmd_approx(args) -> int:
    zs, vals = _read_samples(read_json(args.samples))
    degrees = [int(v) for v in str(args.degree).split(",")]
    results = [fejer_approx(zs, vals, n) for n in degrees]
    _emit({"polynomial": results[-1].poly.to_json(),
           "sup_error": results[-1].sup_error,
           "convergence": [{"degree": n, "sup_error": r.sup_error} for n, r in zip(degrees, results)],
           "samples": int(zs.size)}, args.out)
    return EXIT_OK


def cmd_spectra(args) -> int:
    model = resolve_model(args.model)
    xs = 2 * np.pi * np.arange(args.nx) / args.nx
    eigs = []
    rows = []
    for x in xs:
        t = truncate(model.symbol_at(x), args.sites)
        ev = np.linalg.eigvals(t.dense())
        ev = ev[np.lexsort((ev.imag, ev.real))]
        eigs.append(ev)
        rows.extend([_fmt(x), i, _fmt(v.real), _fmt(v.imag)] for i, v in enumerate(ev))
    _write_csv(rows, ["x", "index", "re", "im"], args.csv)
    if args.figure:
        from .plotting import spectra_figure
        spectra_figure(xs, np.array(eigs), args.figure, f"{model.name}, {args.sites} sites", model.gap)
    return EXIT_OK


def cmd_models(args) -> int:
    if args.action == "list":
        for name in sorted(BUILTINS):
            params = ", ".join(BUILTINS[name][1])
            sys.stdout.write(f"{name}\t{params}\n")
        return EXIT_OK
    if not args.name:
        raise UsageError("models emit needs a model name")
    params = {}
    rest = list(args.params)
    while rest:
        key = rest.pop(0)
        if not key.startswith("--") or not rest:
            raise UsageError(f"model parameters look like --name value, got {key!r}")
        value = rest.pop(0)
        if key == "--out":
            args.out = value
        else:
            params[key[2:]] = _coerce(value)
    spec = builtin(args.name, **params)
    _emit(spec.to_json(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bulkedge", description="Bulk and edge indices of 1D tight-binding families.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def index_args(p, backend=True):
        p.add_argument("model", help="model file (.json/.toml) or builtin reference like qwz:m=1")
        p.add_argument("--grid", type=_grid, default=DEFAULT_GRID, help="initial grid, e.g. 16x16")
        p.add_argument("--max-grid", type=int, default=MAX_GRID)
        p.add_argument("--nodes", type=int, default=None, help="quadrature nodes (default: the contour's)")
        p.add_argument("--gap-margin", type=float, default=1e-2)
        if backend:
            p.add_argument("--backend", choices=("pencil", "chart"), default="pencil")
        p.add_argument("--out")
        p.add_argument("--no-timing", action="store_true", help="omit wall-clock timings from the report")

    p = sub.add_parser("verify", help="bulk and edge index with refinement")
    index_args(p)
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("bulk", help="bulk index only")
    index_args(p, backend=False)
    p.set_defaults(func=cmd_bulk)
    p = sub.add_parser("edge", help="edge index only")
    index_args(p)
    p.set_defaults(func=cmd_edge)

    p = sub.add_parser("conf", help="configuration of the roots inside a contour")
    p.add_argument("poly")
    p.add_argument("--contour", help="contour JSON file or inline JSON")
    p.add_argument("--circle", help="cx,cy,radius")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--no-chart", action="store_true", help="fail instead of using a chart for singular a_l")
    p.add_argument("--out")
    p.set_defaults(func=cmd_conf)

    p = sub.add_parser("sf", help="spectral flow of a Hermitian path")
    p.add_argument("path", nargs="?")
    p.add_argument("--builtin", choices=("three_level",))
    p.add_argument("--samples", type=int, default=401)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--csv", help="eigenvalue trajectories")
    p.add_argument("--figure", help="render the trajectories to an image file")
    p.add_argument("--out", help="JSON report with the crossing trace")
    p.set_defaults(func=cmd_sf)

    p = sub.add_parser("toeplitz", help="finite-section cokernel scan and index")
    p.add_argument("poly")
    p.add_argument("--N", type=int, default=None, help="starting truncation size")
    p.add_argument("--rank-tol", type=float, default=RANK_TOL)
    p.add_argument("--dump-matrix", help="CSV of |entries| of the first truncation")
    p.add_argument("--out")
    p.set_defaults(func=cmd_toeplitz)

    p = sub.add_parser("approx", help="Fejer approximation of sampled symbols")
    p.add_argument("samples")
    p.add_argument("--degree", required=True, help="degree, or comma-separated degrees for a convergence report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("spectra", help="half-space truncation spectra over x")
    p.add_argument("model")
    p.add_argument("--sites", type=int, required=True)
    p.add_argument("--nx", type=int, default=128)
    p.add_argument("--csv", help="output file (default stdout)")
    p.add_argument("--figure", help="render the spectrum to an image file")
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("models", help="list or emit builtin models")
    p.add_argument("action", choices=("list", "emit"))
    p.add_argument("name", nargs="?")
    p.add_argument("--out")
    p.add_argument("params", nargs=argparse.REMAINDER)
    p.set_defaults(func=cmd_models)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"bulkedge: {exc}\n")
        return EXIT_USAGE
    except (ConvergenceError, ResolutionError) as exc:
        sys.stderr.write(f"bulkedge: {exc}\n")
        return EXIT_CONVERGENCE
    except (BulkEdgeError, DomainError, FormatError, FileNotFoundError) as exc:
        sys.stderr.write(f"bulkedge: {exc}\n")
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())
