"""Command-line entry point: ``knotenergy <command> ...``.

Every command writes its result (to ``--out`` or stdout) and a JSON run
manifest.  Exit codes: 0 ok, 1 usage, 2 input parse, 3 numeric
precondition, 4 flow abort.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import generators as gen
from .conformal import ConformalError, cross_ratio_grid, cross_ratio_sample
from .curve import CurveError, LinkSet, PolyCurve, resample_uniform
from .energy import (EnergyError, arc_parameters, energy_alpha, energy_cosine, energy_open,
                     energy_sphere)
from .flow import FlowConfig, relax
from .knotfile import KnotFileError, format_knot, read_knot, read_link, write_knot, write_link
from .minkowski import (Blade, MinkowskiError, blade_inner, plucker_residual,
                        psi_matrix, s_map, signed_area_grid, wedge)
from .moebius import (MoebiusError, MoebiusMap, SphereInversion, apply_map, lift_curve,
                      lift_to_sphere)
from .symplectic import SymplecticError, canonical_form_pullback

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC, EXIT_ABORT = 0, 1, 2, 3, 4
NUMERIC_ERRORS = (EnergyError, CurveError, MoebiusError, ConformalError, MinkowskiError,
                  SymplecticError, np.linalg.LinAlgError, FloatingPointError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    return f"{float(x):.17g}"


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class Run:
    """Collects outputs and writes the manifest."""

    def __init__(self, args):
        self.args = args
        self.start = time.perf_counter()
        self.outputs: list[str] = []
        self.inputs: list[str] = []

    def emit(self, text: str, path=None):
        path = path if path is not None else self.args.out
        if path is None or str(path) == "-":
            sys.stdout.write(text)
            self.outputs.append("<stdout>")
        else:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            Path(path).write_text(text)
            self.outputs.append(str(path))

    def manifest_path(self) -> Path:
        if self.args.manifest:
            return Path(self.args.manifest)
        out = self.args.out
        if out is None or str(out) == "-":
            return Path(f"knotenergy-{self.args.command}.manifest.json")
        out = Path(out)
        if out.is_dir():
            return out / "manifest.json"
        return out.with_name(out.name + ".manifest.json")

    def finish(self, status: str = "ok"):
        params = {k: v for k, v in vars(self.args).items()
                  if k not in ("func", "out", "manifest", "input")}
        manifest = {
            "command": self.args.command,
            "inputs": self.inputs,
            "parameters": params,
            "version": _version(),
            "wall_time": 0.0 if self.args.det else time.perf_counter() - self.start,
            "outputs": self.outputs,
            "status": status,
        }
        path = self.manifest_path()
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dump_json(manifest))


def _threads(args) -> int:
    return max(1, int(args.threads))


def _load_curve(run: Run, path: str, n: int | None = None) -> PolyCurve:
    run.inputs.append(path)
    c = read_knot(path)
    if n:
        c = resample_uniform(c, n)
    return c


def _load_link(run: Run, path: str) -> LinkSet:
    run.inputs.append(path)
    return read_link(path)


# -- commands --------------------------------------------------------------------

def cmd_energy(args, run: Run) -> int:
    c = _load_curve(run, args.input, args.n)
    if not 0.0 < args.alpha < 3.0:
        raise EnergyError(f"alpha must lie in (0, 3), got {args.alpha}")
    workers = _threads(args)
    if args.formula == "renorm":
        rep = energy_alpha(c, args.alpha, workers=workers)
    elif args.formula == "cosine":
        if args.alpha != 2.0:
            raise EnergyError("the cosine formula is the alpha = 2 energy")
        rep = energy_cosine(c, workers=workers)
    elif args.formula == "sphere":
        c4 = lift_curve(c) if c.dim == 3 else c
        rep = energy_sphere(c4, args.alpha, workers=workers)
    else:
        rep = energy_open(c, workers=workers)
    run.emit(dump_json(rep.to_dict()))
    return EXIT_OK


def cmd_invariance(args, run: Run) -> int:
    c = _load_curve(run, args.input, args.n)
    m = MoebiusMap(tuple(SphereInversion.parse(s) for s in args.invert or []))
    before = energy_alpha(c, 2.0, workers=_threads(args)).value
    after = energy_alpha(apply_map(m, c), 2.0, workers=_threads(args)).value
    rel = abs(after - before) / max(1.0, abs(before))
    doc = {"before": before, "after": after, "rel_diff": rel, "tolerance": args.tol,
           "inversions": [list(i.center) + [i.radius] for i in m.inversions],
           "pass": bool(rel <= args.tol)}
    run.emit(dump_json(doc))
    return EXIT_OK


def _csv_text(header, rows, footer=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    if footer:
        for key, val in footer.items():
            buf.write(f"# {key},{fmt(val)}\n")
    return buf.getvalue()


def cmd_crossratio(args, run: Run) -> int:
    c = _load_curve(run, args.input, args.n)
    if args.stride < 1:
        raise UsageError("--stride must be positive")
    g = cross_ratio_grid(c, args.stride)
    rows = []
    for a, i in enumerate(g.rows):
        for b, j in enumerate(g.cols):
            if i == j:
                continue
            rows.append((int(i), int(j), g.arclen_rows[a], g.arclen_cols[b], g.abs[a, b],
                         g.theta[a, b], g.re[a, b], g.im[a, b]))
    footer = {"energy_from_grid": g.weighted_sum(g.abs - g.re), "length": c.length}
    run.emit(_csv_text(["i", "j", "arclen_i", "arclen_j", "abs", "theta", "re", "im"], rows, footer))
    return EXIT_OK


def _read_vectors(text: str) -> np.ndarray:
    """Vectors as ``"a,b,c;d,e,f"`` or a path to a JSON list of lists."""
    p = Path(text)
    if p.exists():
        return np.array(json.loads(p.read_text()), dtype=float)
    try:
        return np.array([[float(x) for x in part.split(",")] for part in text.split(";")])
    except ValueError:
        raise KnotFileError(f"cannot parse vectors {text!r}") from None


def _read_blade(text: str) -> Blade:
    p = Path(text)
    try:
        doc = json.loads(p.read_text()) if p.exists() else json.loads(text)
        return Blade(int(doc["q"]), int(doc["n"]), np.array(doc["coords"], dtype=float))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise KnotFileError(f"cannot parse blade: {exc}") from None


def _read_matrix(text: str) -> np.ndarray:
    p = Path(text)
    try:
        if p.exists():
            return np.loadtxt(p, delimiter=",", ndmin=2)
        return np.array([[float(x) for x in row.split(",")] for row in text.split(";")])
    except ValueError as exc:
        raise KnotFileError(f"cannot parse matrix: {exc}") from None


def cmd_spheres(args, run: Run) -> int:
    op = args.op
    if op == "wedge":
        b = wedge(_read_vectors(args.vectors))
        doc = b.to_json()
        doc["pseudonorm_sq"] = float(blade_inner(b, b))
        run.emit(dump_json(doc))
    elif op == "pnorm":
        b = _read_blade(args.blade)
        run.emit(dump_json({"pseudonorm_sq": float(blade_inner(b, b))}))
    elif op == "plucker-check":
        if args.blade:
            b = _read_blade(args.blade)
        else:
            rng = np.random.default_rng(args.seed)
            b = wedge(rng.standard_normal((args.q + 2, args.n + 2)))
        res = float(plucker_residual(b))
        run.emit(dump_json({"q": b.q, "n": b.n, "residual": res, "coords": b.coords}))
    elif op == "psi":
        mat = psi_matrix(_read_matrix(args.matrix), args.q, args.n)
        run.emit("".join(",".join(fmt(x) for x in row) + "\n" for row in mat))
    elif op == "smap":
        x = _read_vectors(args.x)[0]
        y = _read_vectors(args.y)[0]
        if len(x) == 3:
            x, y = lift_to_sphere(x), lift_to_sphere(y)
        run.emit(dump_json(s_map(x, y).blade.to_json()))
    elif op == "area":
        if args.input.endswith(".json"):
            link = _load_link(run, args.input)
            a, b = link.components[0], link.components[1]
            rows = np.arange(0, a.n, args.stride)
            cols = np.arange(0, b.n, args.stride)
            area = signed_area_grid(a, rows, cols, other=b).area
            wa = args.stride * arc_parameters(a)[1][rows]
            wb = args.stride * arc_parameters(b)[1][cols]
        else:
            c = _load_curve(run, args.input)
            rows = np.arange(0, c.n, args.stride)
            area = signed_area_grid(c, rows, rows).area
            wa = wb = args.stride * arc_parameters(c)[1][rows]
        wgt = wa[:, None] * wb[None, :]
        signed = float(np.nansum(wgt * area))
        absolute = float(np.nansum(wgt * np.abs(area)))
        run.emit(dump_json({"signed_sum": signed, "abs_sum": absolute,
                            "ratio": signed / absolute if absolute else 0.0}))
    return EXIT_OK


def _trace_csv(trace) -> str:
    rows = [(r.step, r.energy, r.stepsize, r.gradnorm, r.minselfdist, r.event) for r in trace.records]
    return _csv_text(["step", "energy", "stepsize", "gradnorm", "minselfdist", "event"], rows)


def cmd_relax(args, run: Run) -> int:
    c = _load_curve(run, args.input, args.n)
    cfg = FlowConfig(alpha=args.alpha, stepInit=args.step_init, maxSteps=args.max_steps,
                     gradTol=args.grad_tol, resampleEvery=args.resample_every,
                     minSelfDistFactor=args.min_self_dist_factor, metric=args.metric,
                     targetEnergy=args.target_energy)
    outdir = Path(args.out) if args.out and args.out != "-" else Path("relax-run")
    outdir.mkdir(parents=True, exist_ok=True)
    args.out = str(outdir)

    def checkpoint(rec, cur):
        if rec.event == "step" and rec.step % 100 == 0:
            write_knot(outdir / f"checkpoint_{rec.step:06d}.knot", cur)

    trace = relax(c, cfg, callback=checkpoint)
    run.emit(dump_json(cfg.to_dict()), outdir / "config.json")
    run.emit(_trace_csv(trace), outdir / "trace.csv")
    write_knot(outdir / "final.knot", trace.final)
    run.outputs.append(str(outdir / "final.knot"))
    summary = {"status": trace.status, "final_energy": trace.records[-1].energy,
               "accepted_steps": max(r.step for r in trace.records), "monotone": trace.is_monotone()}
    run.emit(dump_json(summary), outdir / "summary.json")
    if trace.aborted:
        sys.stderr.write("flow aborted: minimum self-distance below threshold\n")
        run.finish("abort")
        return EXIT_ABORT
    return EXIT_OK


def cmd_symplectic(args, run: Run) -> int:
    c = _load_curve(run, args.input, args.n)
    rng = np.random.default_rng(args.seed)
    n = c.n
    gap = max(3, n // 32)
    rows = []
    while len(rows) < args.pairs:
        i, j = (int(k) for k in rng.integers(0, n, size=2))
        if min((i - j) % n, (j - i) % n) < gap:
            continue
        dens = canonical_form_pullback(c, i, j)
        smp = cross_ratio_sample(c, i, j)
        rows.append((i, j, dens, smp.reDensity, abs(-0.5 * dens - smp.reDensity) / smp.absDensity))
    run.emit(_csv_text(["i", "j", "pullback_density", "re_density", "rel_err"], rows))
    return EXIT_OK


GENERATORS = {
    "circle": lambda a: gen.circle(a.n),
    "ellipse": lambda a: gen.ellipse(a.n, a.a, a.b),
    "torus": lambda a: gen.torus_knot(a.n, a.p, a.q),
    "trefoil": lambda a: gen.trefoil(a.n),
    "perturbed": lambda a: gen.perturbed_circle(a.n, a.amplitude, seed=a.seed),
    "clasp": lambda a: gen.clasp_with_relative_gap(a.n, a.gap),
}


def cmd_generate(args, run: Run) -> int:
    if args.kind in ("hopf", "torus-link"):
        if not args.out or args.out == "-":
            raise UsageError("links need --out pointing at a manifest .json path")
        link = gen.hopf_link(args.n) if args.kind == "hopf" else gen.torus_link(args.n)
        write_link(args.out, link, stem=Path(args.out).stem + "_")
        run.outputs.append(args.out)
        return EXIT_OK
    run.emit(format_knot(GENERATORS[args.kind](args)))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="knotenergy", description="Moebius-invariant knot energies and sphere geometry.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", "-o", default=None, help="output path (default stdout)")
    common.add_argument("--manifest", default=None, help="manifest path")
    common.add_argument("--threads", type=int, default=int(os.environ.get("KNOT_THREADS", "1")),
                        help="worker threads (default $KNOT_THREADS or 1)")
    common.add_argument("--det", action="store_true", help="deterministic mode")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("energy", parents=[common], help="energy of a knot file")
    e.add_argument("input")
    e.add_argument("--alpha", type=float, default=2.0)
    e.add_argument("--formula", choices=["renorm", "cosine", "sphere", "open"], default="renorm")
    e.add_argument("--n", type=int, default=None, help="resample to n vertices first")
    e.set_defaults(func=cmd_energy)

    v = sub.add_parser("invariance", parents=[common], help="energy before/after inversions")
    v.add_argument("input")
    v.add_argument("--invert", action="append", metavar="cx,cy,cz,r")
    v.add_argument("--n", type=int, default=None)
    v.add_argument("--tol", type=float, default=1e-2)
    v.set_defaults(func=cmd_invariance)

    c = sub.add_parser("crossratio", aliases=["crossratio-grid"], parents=[common],
                       help="cross-ratio samples as CSV")
    c.add_argument("input")
    c.add_argument("--stride", type=int, default=1)
    c.add_argument("--n", type=int, default=None)
    c.set_defaults(func=cmd_crossratio)

    s = sub.add_parser("spheres", parents=[common], help="exterior-algebra utilities")
    s.add_argument("op", choices=["wedge", "pnorm", "plucker-check", "psi", "smap", "area"])
    s.add_argument("--vectors", help="'a,b,..;c,d,..' or JSON file")
    s.add_argument("--blade", help="blade JSON or file")
    s.add_argument("--matrix", help="CSV file or 'a,b;c,d' rows")
    s.add_argument("--q", type=int, default=0)
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--x")
    s.add_argument("--y")
    s.add_argument("--input", help="knot file or link manifest (.json) for 'area'")
    s.add_argument("--stride", type=int, default=1)
    s.set_defaults(func=cmd_spheres)

    r = sub.add_parser("relax", parents=[common], help="gradient-flow relaxation")
    r.add_argument("input")
    r.add_argument("--n", type=int, default=None)
    r.add_argument("--alpha", type=float, default=2.0)
    r.add_argument("--step-init", type=float, default=1e-2)
    r.add_argument("--max-steps", type=int, default=5000)
    r.add_argument("--grad-tol", type=float, default=1e-6)
    r.add_argument("--resample-every", type=int, default=10)
    r.add_argument("--min-self-dist-factor", type=float, default=0.25)
    r.add_argument("--metric", choices=["sobolev", "l2"], default="sobolev")
    r.add_argument("--target-energy", type=float, default=None)
    r.set_defaults(func=cmd_relax)

    y = sub.add_parser("symplectic-check", parents=[common], help="pullback vs cross ratio")
    y.add_argument("input")
    y.add_argument("--pairs", type=int, default=100)
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--n", type=int, default=None)
    y.set_defaults(func=cmd_symplectic)

    g = sub.add_parser("generate", parents=[common], help="write a built-in test curve")
    g.add_argument("kind", choices=sorted(GENERATORS) + ["hopf", "torus-link"])
    g.add_argument("--n", type=int, default=256)
    g.add_argument("--a", type=float, default=2.0)
    g.add_argument("--b", type=float, default=1.0)
    g.add_argument("--p", type=int, default=2)
    g.add_argument("--q", type=int, default=3)
    g.add_argument("--amplitude", type=float, default=0.3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--gap", type=float, default=1e-3, help="clasp gap as a fraction of length")
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "crossratio-grid":
        args.command = "crossratio"
    if args.command == "spheres" and args.op == "area" and not args.input:
        parser.error("spheres area needs --input")
    run = Run(args)
    try:
        code = args.func(args, run)
    except UsageError as exc:
        sys.stderr.write(f"knotenergy: error: {exc}\n")
        run.finish("usage_error")
        return EXIT_USAGE
    except KnotFileError as exc:
        sys.stderr.write(f"knotenergy: parse error: {exc}\n")
        run.finish("parse_error")
        return EXIT_PARSE
    except NUMERIC_ERRORS as exc:
        sys.stderr.write(f"knotenergy: numeric error: {exc}\n")
        run.finish("numeric_error")
        return EXIT_NUMERIC
    if code != EXIT_ABORT:
        run.finish("ok")
    return code


if __name__ == "__main__":
    sys.exit(main())
