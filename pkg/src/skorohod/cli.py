"""Command-line front end.

Subcommands::

    skorohod decompose DENSITY.json          mixture-of-uniforms JSON
    skorohod project MEASURE.json --vector   exact or sampled linear image
    skorohod polyimage MEASURE.json POLY.json histogram of a polynomial image
    skorohod verify [SCENARIOS.json]         run a scenario suite

The main artifact goes to ``--output`` (or stdout); human-readable summary
lines go to stderr.  Exit status: 0 on success, 1 when a verified inequality
fails, 2 on usage, schema or input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import measures1d, pwpoly, regularity, verify
from .measures1d import BVDensity, InvalidDensityError
from .multilinear import SymmetricPolynomial
from .pushforward import (CellCapError, GridDensity, ProductMeasure, image_samples, linear_image_exact,
                          projection_image)
from .verify import SchemaError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
LADDER = (1e-4, 1e-3, 1e-2, 1e-1)
BESOV_SHIFTS = (1e-3, 1e-2, 1e-1)


class UsageError(Exception):
    pass


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None


def _emit(text, output):
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(msg):
    print(msg, file=sys.stderr)


def _g(x):
    return f"{x:.17g}"


def load_measure(path) -> ProductMeasure:
    """``{"factors": [...]}`` with the factor specs of the scenario format."""
    doc = _read_json(path)
    factors = verify._need(doc, "factors", "$", list)
    dens, mix = [], []
    for i, spec in enumerate(factors):
        f, m = verify.parse_factor(spec, f"$.factors[{i}]")
        reps = int(spec.get("repeat", 1))
        dens += [f] * reps
        mix += [m] * reps
    return ProductMeasure(dens, mix)


def load_polynomial(path) -> SymmetricPolynomial:
    """Either a map spec (``"kind": "polynomial"``) or a serialised polynomial."""
    doc = _read_json(path)
    if isinstance(doc, dict) and "kind" in doc:
        return verify.parse_map(doc, "$")["P"]
    try:
        return SymmetricPolynomial.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"$: not a polynomial ({exc})") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_decompose(args):
    doc = _read_json(args.density)
    try:
        mu = BVDensity.from_dict(doc) if "breakpoints" in doc else verify.parse_factor(doc, "$")[0]
    except InvalidDensityError as exc:
        raise UsageError(f"invalid density: {exc}") from None
    m = measures1d.decompose_mixture(mu)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["weight", "a", "b", "a_lo", "a_hi", "b_lo", "b_hi"])
        for row in zip(m.weights, m.a, m.b, m.a_lo, m.a_hi, m.b_lo, m.b_hi):
            w.writerow([_g(v) for v in row])
        _emit(buf.getvalue(), args.output)
    else:
        _emit(m.to_json() + "\n", args.output)
    tv, mix = measures1d.tv_skorohod(mu), m.derivative_norm()
    _say(f"components: {len(m)}")
    _say(f"identity: ||mu'||_TV = {_g(tv)}  sum w 2/(b-a) = {_g(mix)}  |diff| = {abs(tv - mix):.3g}")
    return EXIT_OK


def _parse_matrix(args, n):
    if (args.vector is None) == (args.matrix is None):
        raise UsageError("give exactly one of --vector and --matrix")
    if args.vector is not None:
        try:
            A = np.array([[float(v) for v in args.vector.split(",")]])
        except ValueError:
            raise UsageError(f"--vector: expected comma-separated numbers, got {args.vector!r}") from None
    else:
        try:
            A = np.atleast_2d(np.asarray(json.loads(args.matrix), dtype=float))
        except (json.JSONDecodeError, ValueError):
            raise UsageError("--matrix: expected a JSON array of rows") from None
    if A.shape[1] != n:
        raise UsageError(f"dimension mismatch: map has {A.shape[1]} columns, measure has {n} factors")
    if args.normalize:
        A = A / np.linalg.norm(A, axis=1, keepdims=True)
    return A


def _density_csv(p, points):
    x = np.unique(np.concatenate([p.breakpoints, np.linspace(*p.support, points)]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "density"])
    for xi, yi in zip(x, pwpoly.evaluate(p, x)):
        w.writerow([_g(xi), _g(yi)])
    return buf.getvalue()


def cmd_project(args):
    mu = load_measure(args.measure)
    A = _parse_matrix(args, mu.n)
    rhs = np.sqrt(2.0) * float(mu.tvs.max())
    if A.shape[0] == 1:
        try:
            dens = linear_image_exact(mu, A[0])
        except CellCapError as exc:
            _say(f"exact path unavailable ({exc}); using the sampled histogram")
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        else:
            _emit(_density_csv(dens, args.bins or 512), args.output)
            _say("method: exact")
            _say(f"LHS ||(mu o a^-1)'||_TV = {_g(pwpoly.variation(dens))}")
            _say(f"RHS sqrt(2) max_j ||mu_j'||_TV = {_g(rhs)}")
            return EXIT_OK
    try:
        G = projection_image(mu, A, args.samples, args.seed, args.bins)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(G.to_csv(), args.output)
    _say(f"method: histogram, {args.samples} samples, seed {args.seed}")
    if A.shape[0] == 1:
        rep = regularity.directional_tv_grid(G, [1.0])
        _say(f"LHS estimate = {_g(rep.value)} +- {rep.error_budget:.3g}")
        _say(f"RHS sqrt(2) max_j ||mu_j'||_TV = {_g(rhs)}")
    else:
        _say(f"report-only: k={A.shape[0]} directional norms have no explicit bound")
        for ax in range(A.shape[0]):
            rep = regularity.directional_tv_grid(G, np.eye(A.shape[0])[ax])
            _say(f"axis {ax}: ratio to max_j ||mu_j'|| = {_g(rep.value / mu.tvs.max())} "
                 f"+- {rep.error_budget / mu.tvs.max():.3g}")
    return EXIT_OK


def cmd_polyimage(args):
    mu = load_measure(args.measure)
    P = load_polynomial(args.polynomial)
    if P.dim != mu.n:
        raise UsageError(f"dimension mismatch: polynomial has dimension {P.dim}, measure has {mu.n} factors")
    ev = measures1d.pushforward_poly_1d(mu.factors[0], P.univariate_coeffs()) if mu.n == 1 else None
    y = image_samples(mu, P, args.samples, args.seed)
    window = [ev.support] if ev is not None else None
    G = GridDensity.from_samples(y, args.bins or 512, window, args.seed, {"map": "polynomial"})
    _emit(G.to_csv() if args.format == "csv" else G.to_json() + "\n", args.output)
    d = P.degree
    _say(f"histogram: {G.masses.size} bins, {args.samples} samples, seed {args.seed}")
    if ev is not None:
        e = G.edges[0]
        flagged = []
        for s in ev.singularities:
            i = int(np.clip(np.searchsorted(e, s.t, side="right") - 1, 0, e.size - 2))
            flagged.append(i)
            _say(f"singular bin {i}: [{_g(e[i])}, {_g(e[i + 1])}) holds a density singularity at t = {_g(s.t)} "
                 f"(order {s.order})")
        if not flagged:
            _say("singular bins: none")
    rho = ev if ev is not None else G
    rep = regularity.besov_ratio(rho, 1.0 / d, BESOV_SHIFTS)
    _say(f"Besov ratio at alpha = 1/{d}: {_g(rep.value)} +- {rep.error_budget:.3g} ({rep.method})")
    if ev is not None:
        center = ev.singularities[0].t if ev.singularities else float(np.median(y))
    else:
        center = float(G.centers[0][np.argmax(G.masses)])
    _say(f"small-ball ladder centred at {_g(center)}:")
    for lam in LADDER:
        A = [(center - lam / 2, center + lam / 2)]
        sb = regularity.small_ball(ev if ev is not None else y, A)
        _say(f"  lambda(A) = {lam:g}: mass {_g(sb.value)} +- {sb.error_budget:.3g}")
    return EXIT_OK


def cmd_verify(args):
    source = args.scenarios or verify.bundled_suite_path()
    try:
        records = verify.run_scenarios(source, seed=args.seed, samples=args.samples, bins=args.bins,
                                       tolerance_scale=args.tolerance_scale)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    text = verify.report_csv(records) if args.format == "csv" else verify.report_json(records) + "\n"
    _emit(text, args.output)
    counts = {v: sum(r.verdict == v for r in records) for v in ("pass", "fail", "report-only")}
    _say(f"{len(records)} records: {counts['pass']} pass, {counts['fail']} fail, {counts['report-only']} report-only")
    for r in records:
        if r.verdict == "fail":
            _say(f"FAIL {r.scenario} {r.check}: lhs {_g(r.lhs)} > rhs {_g(r.rhs)} (budget {r.error_budget:.3g})")
    return EXIT_FAIL if verify.any_failed(records) else EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None, help="unsigned 64-bit seed override")
    common.add_argument("--samples", type=_positive_int, default=None, help="Monte Carlo sample count")
    common.add_argument("--bins", type=_positive_int, default=None, help="histogram bins per axis")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--output", "-o", default=None, help="output path (default: stdout)")
    common.add_argument("--tolerance-scale", type=float, default=1.0, help="multiplier on error budgets")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(prog="skorohod", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="mixture-of-uniforms decomposition of a density")
    p.add_argument("density", help="BVDensity JSON or a factor spec")
    p.set_defaults(func=cmd_decompose, fmt="json")

    p = sub.add_parser("project", parents=[common], help="image of a product measure under a linear map")
    p.add_argument("measure", help='JSON file {"factors": [...]}')
    p.add_argument("--vector", help="comma-separated direction a")
    p.add_argument("--matrix", help="JSON array of orthonormal rows")
    p.add_argument("--normalize", action="store_true", help="rescale rows to unit length")
    p.set_defaults(func=cmd_project, fmt="csv")

    p = sub.add_parser("polyimage", parents=[common], help="histogram and regularity of a polynomial image")
    p.add_argument("measure")
    p.add_argument("polynomial")
    p.set_defaults(func=cmd_polyimage, fmt="csv")

    p = sub.add_parser("verify", parents=[common], help="run a scenario suite (default: the bundled suite)")
    p.add_argument("scenarios", nargs="?", default=None)
    p.set_defaults(func=cmd_verify, fmt="json")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    args.format = args.format or args.fmt
    if args.command == "project" and args.format != "csv":
        _say("project writes CSV only")
        return EXIT_USAGE
    if args.command in ("project", "polyimage"):
        args.samples = args.samples or 1_000_000
        args.seed = 0 if args.seed is None else args.seed
    try:
        return args.func(args)
    except (UsageError, SchemaError, InvalidDensityError) as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
