"""Command line front end.

Six commands wire the library into a scriptable pipeline:

* ``spectrum``        compute or load a spectral basis, print a summary
* ``scan``            count negative modes over an r grid, emit CSV + JSON
* ``count``           single-radius count
* ``weyl``            predicted quadratic growth coefficient
* ``verify-symbols``  run the pointwise symbol identity suite
* ``regions``         complex-plane region membership and the real-axis bound

Exit codes: 0 success, 2 resource/precondition failure, 3 invariant-gate
failure, 64 usage error.  Options may also be supplied through a flat
``key = value`` config file (``--config``); explicit flags win.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import (
    BranchError,
    CacheError,
    ChartDegeneracyError,
    DomainError,
    InsufficientSpectrumError,
    InvalidFieldError,
    MeshQualityError,
    SolverError,
    UsageError,
)
from .lb_spectrum import (
    cached_mesh_spectrum,
    exact_sphere_spectrum,
    sphere_degree_for,
)
from .semiclassical_count import (
    build_operator,
    constants_for,
    count_negative,
    scan,
    weyl_coefficient,
    weyl_prediction,
)
from .spectral_regions import (
    RegionParams,
    membership_report,
    real_eigenvalue_bound,
)
from .surface import AnalyticSurface, DampingField
from .surface.mesh import icosphere, read_off, read_vertex_values
from .symbol_algebra import identity_suite

EXIT_OK = 0
EXIT_RESOURCE = 2
EXIT_GATE = 3
EXIT_USAGE = 64

RESIDUAL_GATE = 1e-8

_RESOURCE_ERRORS = (
    InsufficientSpectrumError,
    MeshQualityError,
    SolverError,
    CacheError,
    InvalidFieldError,
    DomainError,
    ChartDegeneracyError,
    BranchError,
    OSError,
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad invocations as UsageError (exit 64)."""

    def error(self, message):
        raise UsageError(message)


def _parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError("expected a boolean, got %r" % (text,))


def read_config(path):
    """Parse a flat ``key = value`` file; '#' starts a comment."""
    entries = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(
                    "%s:%d: expected 'key = value', got %r"
                    % (path, lineno, raw.rstrip("\n")))
            key, value = line.split("=", 1)
            entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _merge_config(args, parser):
    """Fill options the user left at None from the config file."""
    path = getattr(args, "config", None)
    if not path:
        return
    actions = {action.dest: action for action in parser._actions}
    for key, text in read_config(path).items():
        if key == "config" or key not in actions:
            raise UsageError("unknown config key %r" % (key,))
        if getattr(args, key) is not None:
            continue  # explicit flag wins
        action = actions[key]
        if action.type is not None:
            convert = action.type
        elif action.const is True:  # store_true flag
            convert = _parse_bool
        else:
            convert = str
        try:
            setattr(args, key, convert(text))
        except (TypeError, ValueError) as err:
            raise UsageError(
                "config key %r: %s" % (key, err)) from err


def _defaults(args, **values):
    for key, value in values.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


# ----------------------------------------------------------------------
# argument resolution
# ----------------------------------------------------------------------

def resolve_surface(spec):
    """'unit-sphere' or 'ellipsoid:A,B,C'."""
    spec = spec.strip()
    if spec == "unit-sphere":
        return AnalyticSurface.unit_sphere()
    if spec.startswith("ellipsoid:"):
        parts = spec[len("ellipsoid:"):].split(",")
        if len(parts) != 3:
            raise UsageError(
                "ellipsoid needs three semi-axes, got %r" % (spec,))
        try:
            a, b, c = (float(p) for p in parts)
        except ValueError as err:
            raise UsageError("bad ellipsoid axes in %r" % (spec,)) from err
        return AnalyticSurface.ellipsoid(a, b, c)
    raise UsageError("unknown surface %r" % (spec,))


_NAMED_AXES = {
    "x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0),
    "-x": (-1.0, 0.0, 0.0), "-y": (0.0, -1.0, 0.0), "-z": (0.0, 0.0, -1.0),
}


def _parse_axis(token):
    token = token.strip().lower()
    if token in _NAMED_AXES:
        return _NAMED_AXES[token]
    parts = token.split("/")
    if len(parts) != 3:
        raise UsageError("bad axis %r (use x|y|z or ax/ay/az)" % (token,))
    try:
        return tuple(float(p) for p in parts)
    except ValueError as err:
        raise UsageError("bad axis %r" % (token,)) from err


def resolve_field(spec, invert=False):
    """A float (constant), 'affine:OFFSET,SLOPE,AXIS', or 'table:PATH'."""
    spec = str(spec).strip()
    if spec.startswith("affine:"):
        parts = spec[len("affine:"):].split(",")
        if len(parts) != 3:
            raise UsageError(
                "affine field needs offset,slope,axis; got %r" % (spec,))
        try:
            offset, slope = float(parts[0]), float(parts[1])
        except ValueError as err:
            raise UsageError("bad affine field %r" % (spec,)) from err
        return DampingField.affine(offset, slope, _parse_axis(parts[2]),
                                   invert=invert)
    if spec.startswith("table:"):
        table = read_vertex_values(spec[len("table:"):])
        return DampingField.vertex_table(table, invert=invert)
    try:
        value = float(spec)
    except ValueError as err:
        raise UsageError("unknown damping field spec %r" % (spec,)) from err
    return DampingField.constant(value, invert=invert)


def resolve_mesh(spec):
    """'icosphere:LEVEL' or a path to an OFF file."""
    spec = spec.strip()
    if spec.startswith("icosphere:"):
        try:
            level = int(spec[len("icosphere:"):])
        except ValueError as err:
            raise UsageError("bad icosphere level in %r" % (spec,)) from err
        return icosphere(level)
    return read_off(spec)


def auto_degree(surface, field, r_max, cut_factor):
    """Sphere degree resolving 3.2x the ellipticity threshold at r_max."""
    constants = constants_for(field, surface)
    target = 3.2 * constants.ellipticity_threshold(1.0 / r_max)
    return max(int(sphere_degree_for(target)), 1)


def _r_grid(args):
    if args.steps < 2:
        raise UsageError("steps must be >= 2, got %d" % args.steps)
    if not 0.0 < args.r_min < args.r_max:
        raise UsageError(
            "need 0 < r-min < r-max, got %g, %g" % (args.r_min, args.r_max))
    if args.log:
        return np.geomspace(args.r_min, args.r_max, args.steps)
    return np.linspace(args.r_min, args.r_max, args.steps)


def _resolve_basis(args, surface, field, r_max):
    """(basis, cache_hit_or_None).  Mesh FEM when --mesh, else exact."""
    if getattr(args, "mesh", None):
        if args.modes is None:
            raise UsageError("--mesh runs need --modes")
        mesh = resolve_mesh(args.mesh)
        basis, hit = cached_mesh_spectrum(
            mesh, args.modes, tol=args.tol, directory=args.cache_dir,
            seed=args.seed)
        return basis, hit
    degree = args.max_degree
    if degree is None:
        degree = auto_degree(surface, field, r_max, args.cut_factor)
    return exact_sphere_spectrum(degree), None


def _echo_config(args, keys):
    resolved = {}
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key.replace("_", "-")] = value
    return resolved


def _emit_json(document):
    print(json.dumps(document, sort_keys=True, indent=2,
                     ensure_ascii=False))


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def cmd_spectrum(args, parser):
    _merge_config(args, parser)
    _defaults(args, surface="unit-sphere", max_degree=10, tol=1e-8,
              seed=0x5EED)
    if args.mesh:
        if args.count is None:
            raise UsageError("--mesh needs --count (number of modes)")
        mesh = resolve_mesh(args.mesh)
        basis, hit = cached_mesh_spectrum(
            mesh, args.count, tol=args.tol, directory=args.cache_dir,
            seed=args.seed)
        note = " (cache hit)" if hit else ""
        print("%d modes, top lambda = %.12g%s"
              % (basis.mode_count, basis.top, note))
        print("area = %.12g, trusted horizon = %.12g, worst residual = %.3g"
              % (basis.area, basis.trusted_horizon, basis.residual))
    else:
        basis = exact_sphere_spectrum(args.max_degree)
        print("%d modes, top lambda = %g" % (basis.mode_count, basis.top))
        print("area = %.12g, trusted horizon = %.12g"
              % (basis.area, basis.trusted_horizon))
    return EXIT_OK


def cmd_scan(args, parser):
    _merge_config(args, parser)
    _defaults(args, surface="unit-sphere", gamma="2.0", r_min=5.0,
              r_max=20.0, steps=4, log=False, invert=False, cut_factor=2.0,
              zero_tol=1e-12, tol=1e-8, seed=42, output=".")
    surface = resolve_surface(args.surface)
    field = resolve_field(args.gamma, invert=args.invert)
    grid = _r_grid(args)
    basis, hit = _resolve_basis(args, surface, field, args.r_max)
    report = scan(surface, field, grid, basis,
                  cut_factor=args.cut_factor, zero_tol=args.zero_tol)
    config = _echo_config(args, (
        "surface", "gamma", "invert", "r_min", "r_max", "steps", "log",
        "cut_factor", "zero_tol", "max_degree", "mesh", "modes", "seed"))
    os.makedirs(args.output, exist_ok=True)
    csv_path = os.path.join(args.output, "report.csv")
    json_path = os.path.join(args.output, "report.json")
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        handle.write(report.to_csv())
    with open(json_path, "w", encoding="utf-8", newline="") as handle:
        handle.write(report.to_json(config=config, version=__version__))
        handle.write("\n")
    if hit:
        print("spectrum cache hit")
    print("wrote %s" % csv_path)
    print("wrote %s" % json_path)
    print("coefficient: predicted %.12g, fitted %s"
          % (report.coefficient,
             "n/a" if report.fitted_coefficient is None
             else "%.12g" % report.fitted_coefficient))
    gates = report.gates()
    print("gates: " + ", ".join(
        "%s=%s" % (name, {True: "pass", False: "FAIL", None: "n/a"}[value])
        for name, value in sorted(gates.items())))
    if not report.passed():
        failing = sorted(name for name, ok in gates.items() if ok is False)
        print("gate failure: %s" % ", ".join(failing), file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_count(args, parser):
    _merge_config(args, parser)
    _defaults(args, surface="unit-sphere", gamma="2.0", invert=False,
              cut_factor=2.0, zero_tol=1e-12, tol=1e-8, seed=42)
    if args.r is None or args.r <= 0.0:
        raise UsageError("count needs a positive --r")
    surface = resolve_surface(args.surface)
    field = resolve_field(args.gamma, invert=args.invert)
    basis, _ = _resolve_basis(args, surface, field, args.r)
    op = build_operator(basis, field, 1.0 / args.r, surface=surface,
                        cut_factor=args.cut_factor)
    outcome = count_negative(op, zero_tol=args.zero_tol)
    _emit_json({
        "r": args.r,
        "N_scalar": outcome.negative,
        "N_system": 2 * outcome.negative,
        "borderline": outcome.borderline,
        "W": weyl_prediction(surface, field, args.r),
        "mode_cut": op.mode_cut,
        "config": _echo_config(args, (
            "surface", "gamma", "invert", "r", "cut_factor", "zero_tol",
            "max_degree", "mesh", "modes", "seed")),
        "version": __version__,
    })
    return EXIT_OK


def cmd_weyl(args, parser):
    _merge_config(args, parser)
    _defaults(args, surface="unit-sphere", gamma="2.0", invert=False)
    surface = resolve_surface(args.surface)
    field = resolve_field(args.gamma, invert=args.invert)
    coefficient = weyl_coefficient(surface, field)
    document = {
        "coefficient": coefficient,
        "config": _echo_config(args, ("surface", "gamma", "invert", "r")),
        "version": __version__,
    }
    if args.r is not None:
        if args.r <= 0.0:
            raise UsageError("weyl needs a positive --r")
        document["r"] = args.r
        document["W"] = coefficient * args.r ** 2
    _emit_json(document)
    return EXIT_OK


def cmd_verify_symbols(args, parser):
    _merge_config(args, parser)
    _defaults(args, surface="unit-sphere", samples=1000, seed=42)
    surface = resolve_surface(args.surface)
    suite = identity_suite(surface, samples=args.samples, seed=args.seed)
    residuals = suite["residuals"]
    failures = sorted(
        name for name, value in residuals.items()
        if not np.isfinite(value) or value >= RESIDUAL_GATE)
    _emit_json({
        "surface": args.surface,
        "samples": args.samples,
        "seed": args.seed,
        "residual_gate": RESIDUAL_GATE,
        "residuals": residuals,
        "failures": failures,
        "config": _echo_config(args, ("surface", "samples", "seed")),
        "version": __version__,
    })
    if failures:
        print("identity residual breach: %s" % ", ".join(failures),
              file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def _read_points(path):
    points = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise UsageError(
                    "%s:%d: expected 're im', got %r"
                    % (path, lineno, raw.rstrip("\n")))
            try:
                points.append(complex(float(parts[0]), float(parts[1])))
            except ValueError as err:
                raise UsageError(
                    "%s:%d: bad number in %r" % (path, lineno, line)) from err
    return points


def cmd_regions(args, parser):
    _merge_config(args, parser)
    _defaults(args, c0=2.0, c2=1.0, c_eps=1.0, eps=0.1, c_m=1.0, m=2)
    if args.check is None and args.bound is None:
        raise UsageError("regions needs --check FILE and/or --bound GAMMA0")
    params = RegionParams(c0=args.c0, c2=args.c2, c_eps=args.c_eps,
                          eps=args.eps, c_m=args.c_m, m=args.m)
    document = {
        "params": {"c0": params.c0, "c2": params.c2, "c_eps": params.c_eps,
                   "eps": params.eps, "c_m": params.c_m, "m": params.m},
        "version": __version__,
    }
    if args.bound is not None:
        document["bound"] = {"gamma0": args.bound,
                             "value": real_eigenvalue_bound(args.bound)}
    if args.check is not None:
        document["points"] = membership_report(_read_points(args.check),
                                               params)
    _emit_json(document)
    return EXIT_OK


# ----------------------------------------------------------------------
# parser assembly
# ----------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--seed", type=int, help="RNG seed")


def _add_surface_field(sub):
    sub.add_argument("--surface",
                     help="unit-sphere (default) or ellipsoid:A,B,C")
    sub.add_argument("--gamma",
                     help="constant VALUE, affine:OFFSET,SLOPE,AXIS, "
                          "or table:PATH")
    sub.add_argument("--invert", action="store_true", default=None,
                     help="use the reciprocal (below-one) field 1/gamma")


def _add_basis(sub):
    sub.add_argument("--max-degree", type=int,
                     help="exact sphere basis degree (default: auto)")
    sub.add_argument("--mesh", help="icosphere:LEVEL or an OFF file")
    sub.add_argument("--modes", type=int,
                     help="number of FEM modes for --mesh runs")
    sub.add_argument("--cache-dir", help="spectrum cache directory")
    sub.add_argument("--tol", type=float, help="FEM residual tolerance")


def build_parser():
    parser = _Parser(prog="weylcount",
                     description="Spectral counting laboratory for damped "
                                 "wave models on closed surfaces.")
    parser.add_argument("--version", action="version",
                        version="weylcount " + __version__)
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")

    spectrum = commands.add_parser(
        "spectrum", help="compute or load a spectral basis")
    _add_common(spectrum)
    spectrum.add_argument("--surface",
                          help="unit-sphere (default) or ellipsoid:A,B,C")
    spectrum.add_argument("--exact", action="store_true", default=None,
                          help="use the closed-form sphere spectrum")
    spectrum.add_argument("--max-degree", type=int,
                          help="top spherical-harmonic degree")
    spectrum.add_argument("--mesh", help="icosphere:LEVEL or an OFF file")
    spectrum.add_argument("--count", type=int, help="number of FEM modes")
    spectrum.add_argument("--cache-dir", help="spectrum cache directory")
    spectrum.add_argument("--tol", type=float, help="FEM residual tolerance")
    spectrum.set_defaults(handler=cmd_spectrum, _parser=spectrum)

    scan_cmd = commands.add_parser(
        "scan", help="count negative modes over an r grid")
    _add_common(scan_cmd)
    _add_surface_field(scan_cmd)
    _add_basis(scan_cmd)
    scan_cmd.add_argument("--r-min", type=float, help="grid start (default 5)")
    scan_cmd.add_argument("--r-max", type=float, help="grid end (default 20)")
    scan_cmd.add_argument("--steps", type=int, help="grid size (default 4)")
    scan_cmd.add_argument("--log", action="store_true", default=None,
                          help="geometric instead of linear r grid")
    scan_cmd.add_argument("--cut-factor", type=float,
                          help="mode-cut multiple of the ellipticity "
                               "threshold (default 2)")
    scan_cmd.add_argument("--zero-tol", type=float,
                          help="borderline tolerance (default 1e-12)")
    scan_cmd.add_argument("--output", help="report directory (default .)")
    scan_cmd.set_defaults(handler=cmd_scan, _parser=scan_cmd)

    count_cmd = commands.add_parser(
        "count", help="single-radius negative-mode count")
    _add_common(count_cmd)
    _add_surface_field(count_cmd)
    _add_basis(count_cmd)
    count_cmd.add_argument("--r", type=float, help="count radius")
    count_cmd.add_argument("--cut-factor", type=float)
    count_cmd.add_argument("--zero-tol", type=float)
    count_cmd.set_defaults(handler=cmd_count, _parser=count_cmd)

    weyl_cmd = commands.add_parser(
        "weyl", help="predicted quadratic growth coefficient")
    _add_common(weyl_cmd)
    _add_surface_field(weyl_cmd)
    weyl_cmd.add_argument("--r", type=float,
                          help="also report the prediction at this radius")
    weyl_cmd.set_defaults(handler=cmd_weyl, _parser=weyl_cmd)

    verify = commands.add_parser(
        "verify-symbols", help="run the symbol identity suite")
    _add_common(verify)
    verify.add_argument("--surface",
                        help="unit-sphere (default) or ellipsoid:A,B,C")
    verify.add_argument("--samples", type=int,
                        help="cotangent samples (default 1000)")
    verify.set_defaults(handler=cmd_verify_symbols, _parser=verify)

    regions_cmd = commands.add_parser(
        "regions", help="region membership and the real-axis bound")
    _add_common(regions_cmd)
    regions_cmd.add_argument("--check",
                             help="file of complex points, one 're im' "
                                  "pair per line")
    regions_cmd.add_argument("--bound", type=float,
                             help="report the |Re z| bound for this gamma0")
    regions_cmd.add_argument("--c0", type=float)
    regions_cmd.add_argument("--c2", type=float)
    regions_cmd.add_argument("--c-eps", type=float)
    regions_cmd.add_argument("--eps", type=float)
    regions_cmd.add_argument("--c-m", type=float)
    regions_cmd.add_argument("--m", type=int)
    regions_cmd.set_defaults(handler=cmd_regions, _parser=regions_cmd)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "handler", None) is None:
            raise UsageError("no command given (see --help)")
        return args.handler(args, args._parser)
    except UsageError as err:
        print("usage error: %s" % err, file=sys.stderr)
        return EXIT_USAGE
    except _RESOURCE_ERRORS as err:
        print("error: %s" % err, file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
