"""Scenario runner: evaluate both sides of each inequality and report verdicts.

A scenario file is JSON::

    {"schema_version": 1,
     "scenarios": [{"id": ..., "factors": [...], "map": {...}, "map2": {...},
                    "mc": {"samples": N, "seed": s, "bins": B},
                    "checks": [{"id": "small-ball", ...}, ...]}]}

Each check yields one or more :class:`ReportRecord` rows with
``margin = rhs - lhs``; a row fails when ``margin < -(error_budget + slack)``,
where ``slack`` is ``1e-9`` for exact and quadrature evaluations and zero for
Monte Carlo ones.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np
from scipy import integrate

from . import measures1d, pwpoly, regularity
from .measures1d import BVDensity, UniformMixture
from .multilinear import (SymmetricPolynomial, dir_deriv, eval_poly, form_norm_upper, leading_form_norm,
                          random_polynomial)
from .pushforward import (CellCapError, GridDensity, ProductMeasure, image_samples, linear_image_exact,
                          projection_image)

SCHEMA_VERSION = 1
EXACT_SLACK = 1e-9
MIN_SAMPLES = 10_000
DEFAULT_SAMPLES = 200_000
DEFAULT_BINS = 256
BUNDLED_SUITE = "paper-suite.json"


class SchemaError(ValueError):
    """A scenario file is malformed; the message names the offending field."""


@dataclass
class ReportRecord:
    scenario: str
    check: str
    statement: str
    lhs: float
    rhs: float
    margin: float
    error_budget: float
    verdict: str
    lhs_method: str
    rhs_method: str = "exact"
    borderline: bool = False
    notes: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        return {k: _jsonable(v) for k, v in d.items()}


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def make_record(scenario, check, lhs, rhs, budget, lhs_method, rhs_method="exact", report_only=False,
                notes="", extra=None, tolerance_scale=1.0):
    """Assemble a record and its verdict."""
    budget = float(budget) * tolerance_scale
    margin = float(rhs) - float(lhs) if math.isfinite(lhs) or math.isfinite(rhs) else -math.inf
    if math.isnan(margin):
        margin = -math.inf
    slack = EXACT_SLACK if lhs_method in ("exact", "quadrature") else 0.0
    if report_only:
        verdict = "report-only"
    else:
        verdict = "fail" if margin < -(budget + slack) else "pass"
    return ReportRecord(scenario, check, STATEMENTS[check], float(lhs), float(rhs), margin, budget, verdict,
                        lhs_method, rhs_method, abs(margin) <= budget, notes, dict(extra or {}))


# ---------------------------------------------------------------------------
# scenario parsing
# ---------------------------------------------------------------------------

def _need(d, key, path, kind=None):
    if not isinstance(d, dict) or key not in d:
        raise SchemaError(f"{path}.{key}: missing required field")
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise SchemaError(f"{path}.{key}: expected {getattr(kind, '__name__', kind)}")
    return v


def _num(d, key, path, default=None):
    if key not in d:
        if default is None:
            raise SchemaError(f"{path}.{key}: missing required field")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{path}.{key}: expected a number")
    return float(v)


def parse_factor(spec, path):
    """Build ``(BVDensity, mixture-or-None)`` from a factor spec."""
    if not isinstance(spec, dict):
        raise SchemaError(f"{path}: expected an object")
    kind = _need(spec, "kind", path, str)
    try:
        if kind == "uniform":
            return BVDensity.uniform(_num(spec, "a", path), _num(spec, "b", path)), None
        if kind == "triangle":
            peak = spec.get("peak")
            return BVDensity.triangle(_num(spec, "a", path), _num(spec, "b", path), peak), None
        if kind == "trapezoid":
            knots = _need(spec, "knots", path, list)
            if len(knots) != 4:
                raise SchemaError(f"{path}.knots: expected four numbers")
            return BVDensity.trapezoid(*[float(k) for k in knots]), None
        if kind == "random_pl":
            seed = int(_num(spec, "seed", path))
            return BVDensity.random_piecewise_linear(seed, int(spec.get("max_pieces", 12)),
                                                     bool(spec.get("jumps", True))), None
        if kind == "mixture":
            comps = _need(spec, "components", path, list)
            m = UniformMixture.from_components(comps)
            return measures1d.reconstruct(m), m
        if kind == "density":
            return BVDensity.from_dict(_need(spec, "density", path, dict)), None
    except SchemaError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    raise SchemaError(f"{path}.kind: unknown factor kind {kind!r}")


def parse_map(spec, path):
    if not isinstance(spec, dict):
        raise SchemaError(f"{path}: expected an object")
    kind = _need(spec, "kind", path, str)
    try:
        if kind == "linear":
            a = np.asarray(_need(spec, "a", path, list), dtype=float)
            if spec.get("normalize", False):
                a = a / np.linalg.norm(a)
            return {"kind": "linear", "a": a}
        if kind == "projection":
            return {"kind": "projection", "A": np.atleast_2d(np.asarray(_need(spec, "A", path, list), dtype=float))}
        if kind == "polynomial":
            dim = int(_num(spec, "dim", path))
            if "forms" in spec:
                P = SymmetricPolynomial.from_dict({"dim": dim, "forms": spec["forms"]})
            else:
                mons = _need(spec, "monomials", path, list)
                P = SymmetricPolynomial.from_monomials(dim, {tuple(m["exponents"]): float(m["coeff"]) for m in mons})
            return {"kind": "polynomial", "P": P}
        if kind == "random_polynomial":
            P = random_polynomial(int(_num(spec, "dim", path)), int(_num(spec, "degree", path)),
                                  int(_num(spec, "seed", path)))
            return {"kind": "polynomial", "P": P}
    except SchemaError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    raise SchemaError(f"{path}.kind: unknown map kind {kind!r}")


@dataclass
class Scenario:
    id: str
    measure: ProductMeasure
    maps: dict
    samples: int
    seed: int
    bins: int
    checks: list
    tolerance_scale: float = 1.0
    threads: int = 1
    _cache: dict = field(default_factory=dict, repr=False)

    def polynomial(self, key="map"):
        m = self.maps.get(key)
        if m is None or m["kind"] != "polynomial":
            raise SchemaError(f"scenario {self.id}: check needs a polynomial {key}")
        return m["P"]

    def exact_image(self, key="map"):
        """Exact image evaluator when ``n = 1``, else ``None``."""
        P = self.polynomial(key)
        if self.measure.n != 1:
            return None
        if ("exact", key) not in self._cache:
            self._cache[("exact", key)] = measures1d.pushforward_poly_1d(self.measure.factors[0],
                                                                          P.univariate_coeffs())
        return self._cache[("exact", key)]

    def samples_of(self, key="map"):
        if ("samples", key) not in self._cache:
            self._cache[("samples", key)] = image_samples(self.measure, self.polynomial(key), self.samples,
                                                          self.seed, self.threads)
        return self._cache[("samples", key)]


def parse_scenario(spec, path, overrides):
    if not isinstance(spec, dict):
        raise SchemaError(f"{path}: expected an object")
    sid = str(_need(spec, "id", path))
    factors_spec = _need(spec, "factors", path, list)
    if not factors_spec:
        raise SchemaError(f"{path}.factors: at least one factor is required")
    factors, mixtures = [], []
    for i, fs in enumerate(factors_spec):
        reps = int(fs.get("repeat", 1)) if isinstance(fs, dict) else 1
        f, m = parse_factor(fs, f"{path}.factors[{i}]")
        factors += [f] * reps
        mixtures += [m] * reps
    measure = ProductMeasure(factors, mixtures)
    maps = {}
    for key in ("map", "map2"):
        if key in spec:
            maps[key] = parse_map(spec[key], f"{path}.{key}")
            m = maps[key]
            dim = m["a"].size if m["kind"] == "linear" else m["A"].shape[1] if m["kind"] == "projection" else m["P"].dim
            if dim != measure.n:
                raise SchemaError(f"{path}.{key}: dimension {dim} does not match {measure.n} factors")
    mc = spec.get("mc", {})
    if not isinstance(mc, dict):
        raise SchemaError(f"{path}.mc: expected an object")
    samples = int(overrides.get("samples") or _num(mc, "samples", f"{path}.mc", DEFAULT_SAMPLES))
    if samples < MIN_SAMPLES:
        raise SchemaError(f"{path}.mc.samples: need at least {MIN_SAMPLES} samples")
    seed = overrides.get("seed")
    seed = int(_num(mc, "seed", f"{path}.mc", 0)) if seed is None else int(seed)
    bins = int(overrides.get("bins") or _num(mc, "bins", f"{path}.mc", DEFAULT_BINS))
    checks = _need(spec, "checks", path, list)
    for i, c in enumerate(checks):
        cid = _need(c, "id", f"{path}.checks[{i}]", str)
        if cid not in CHECKS:
            raise SchemaError(f"{path}.checks[{i}].id: unknown check {cid!r}")
    return Scenario(sid, measure, maps, samples, seed, bins, checks,
                    float(overrides.get("tolerance_scale", 1.0)), int(overrides.get("threads", 1)))


# ---------------------------------------------------------------------------
# smooth test functions with |phi| <= 1
# ---------------------------------------------------------------------------

def _sech2(x):
    return 1.0 / np.cosh(np.clip(x, -350, 350)) ** 2


PHI_CATALOG = {
    "sin": lambda x: np.cos(x),
    "sin4": lambda x: 4.0 * np.cos(4.0 * x),
    "tanh": lambda x: _sech2(x),
    "tanh8": lambda x: 8.0 * _sech2(8.0 * x),
    "gauss": lambda x: -2.0 * x * np.exp(-x * x),
    "atan": lambda x: (2.0 / math.pi) / (1.0 + x * x),
}
"""Derivatives ``phi'`` of ``sin x, sin 4x, tanh x, tanh 8x, exp(-x^2), (2/pi) atan x``."""


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

STATEMENTS = {
    "mixture-identity": "|  ||mu'||_TV - sum w 2/(b - a) | is within the identity tolerance",
    "linear-projection-tv": "derivative norm of a linear image is at most sqrt(2) times the largest factor norm",
    "cube-section": "central hyperplane sections of the unit cube have volume at most sqrt(2)",
    "projection-directional-tv": "directional derivative norm of a k-dimensional projection (report only)",
    "regularized-derivative": "regularised derivative integral is at most (3 pi d + 1/2) ||D_theta mu|| eps^(-1/2)",
    "small-ball": "mu(f in A) <= 12 pi S ||B_d||^(-1/d) lambda(A)^(1/d)",
    "besov-shift": "||B_d||^(1/d) sup_h ||rho_f(. + h) - rho_f|| h^(-1/d) <= 24 pi S",
    "density-lp": "||rho_f||_p <= c(p, d) S^(d(1 - 1/p)) ||B_d||^(1/p - 1) for 1 <= p < d/(d-1)",
    "tv-kr-interpolation": "TV distance of two polynomial images is at most C KR^(1/(1+d))",
}


def _rhs_scale(c):
    return float(c.get("rhs_scale", 1.0))


def check_mixture_identity(sc: Scenario, c):
    """One row per factor: ``||mu'||_TV`` against ``sum weight * 2/(b - a)``."""
    rows = []
    idx = c.get("factors", range(sc.measure.n))
    for j in idx:
        mu = sc.measure.factors[j]
        # a mixture given in the scenario need not conserve the norm, so decompose afresh
        m = measures1d.decompose_mixture(mu)
        tol = c.get("tolerance", 1e-8 if mu.density.is_piecewise_linear() else 1e-3)
        tv, mix = measures1d.tv_skorohod(mu), m.derivative_norm() * _rhs_scale(c)
        # an identity: the row compares |tv - mix| with the tolerance
        rows.append(make_record(sc.id, "mixture-identity", abs(tv - mix), tol, 0.0, "exact",
                                notes=f"factor {j}, {len(m)} components",
                                extra={"tv": tv, "mixture_side": mix}, tolerance_scale=sc.tolerance_scale))
    return rows


def _direction(sc, c):
    if "a" in c:
        a = np.asarray(c["a"], dtype=float)
        return a / np.linalg.norm(a)
    m = sc.maps.get("map")
    if m is None or m["kind"] != "linear":
        raise SchemaError(f"scenario {sc.id}: linear-projection-tv needs a linear map or an 'a' field")
    return m["a"]


def check_linear_projection_tv(sc: Scenario, c):
    a = _direction(sc, c)
    rhs = math.sqrt(2.0) * float(sc.measure.tvs.max()) * _rhs_scale(c)
    try:
        dens = linear_image_exact(sc.measure, a, cap=c.get("cap", 100_000))
    except CellCapError as exc:
        G = projection_image(sc.measure, a[None, :], sc.samples, sc.seed, sc.bins, sc.threads)
        rep = regularity.directional_tv_grid(G, [1.0])
        return [make_record(sc.id, "linear-projection-tv", rep.value, rhs, rep.error_budget, "histogram",
                            report_only=True, notes=f"sampling fallback: {exc}",
                            tolerance_scale=sc.tolerance_scale)]
    lhs = pwpoly.variation(dens)
    return [make_record(sc.id, "linear-projection-tv", lhs, rhs, 0.0, "exact",
                        notes=f"{dens.n_pieces} pieces", tolerance_scale=sc.tolerance_scale)]


def _unit_directions(n, count, seed):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((count, n))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def check_cube_section(sc: Scenario, c):
    """Largest ``rho_theta(0)`` over the listed or sampled unit directions."""
    if "directions" in c:
        dirs = np.asarray(c["directions"], dtype=float)
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    else:
        dirs = _unit_directions(sc.measure.n, int(c.get("count", 100)), int(c.get("seed", sc.seed)))
    vals = [float(pwpoly.evaluate(linear_image_exact(sc.measure, th, cap=None), 0.0)) for th in dirs]
    i = int(np.argmax(vals))
    return [make_record(sc.id, "cube-section", vals[i], math.sqrt(2.0) * _rhs_scale(c), 0.0, "exact",
                        notes=f"max over {len(dirs)} directions",
                        extra={"argmax_direction": dirs[i].tolist()}, tolerance_scale=sc.tolerance_scale)]


def check_projection_directional_tv(sc: Scenario, c):
    """Report-only: grid estimate of the largest directional derivative norm of ``A x``.

    For ``k = 1`` the exact ratio from the linear image is recorded as well,
    together with whether the grid estimate agrees with it within budget.
    """
    m = sc.maps.get("map")
    if m is None or m["kind"] not in ("projection", "linear"):
        raise SchemaError(f"scenario {sc.id}: projection-directional-tv needs a projection map")
    A = m["A"] if m["kind"] == "projection" else m["a"][None, :]
    k = A.shape[0]
    bins = int(c.get("bins", {1: 32, 2: 48, 3: 16}[k]))
    G = projection_image(sc.measure, A, sc.samples, sc.seed, bins, sc.threads)
    if "directions" in c:
        dirs = [np.asarray(e, dtype=float) / np.linalg.norm(e) for e in c["directions"]]
    else:
        dirs = list(np.eye(k)) if k > 1 else [np.ones(1)]
    reps = [regularity.directional_tv_grid(G, e) for e in dirs]
    i = int(np.argmax([r.value for r in reps]))
    best = reps[i]
    norm = float(sc.measure.tvs.max())
    extra = {"ratio": best.value / norm, "ratio_budget": best.error_budget / norm, "direction": dirs[i].tolist()}
    if k == 1:
        try:
            exact = pwpoly.variation(linear_image_exact(sc.measure, A[0]))
            extra["exact_ratio"] = exact / norm
            extra["agrees"] = abs(best.value - exact) <= best.error_budget
        except CellCapError:
            pass
    for kc in c.get("gamma", []):
        kk, cc = kc
        extra.setdefault("radial_integral", []).append([kk, cc, regularity.radial_exponential_integral(kk, cc)])
    return [make_record(sc.id, "projection-directional-tv", best.value, norm, best.error_budget, "histogram",
                        report_only=True, notes=f"k={k}, {bins} bins per axis", extra=extra,
                        tolerance_scale=sc.tolerance_scale)]


def _phis(c):
    names = c.get("phis", sorted(PHI_CATALOG))
    for nm in names:
        if nm not in PHI_CATALOG:
            raise SchemaError(f"unknown test function {nm!r}")
    return names


def check_regularized_derivative(sc: Scenario, c):
    """One row per ``eps``; ``|int phi'(f) (d_theta f)^2 / ((d_theta f)^2 + eps) dmu|`` over the catalog."""
    P = sc.polynomial()
    n, d = sc.measure.n, P.degree
    theta = np.asarray(c.get("theta", np.eye(n)[0]), dtype=float)
    theta = theta / np.linalg.norm(theta)
    center = float(c.get("center", 0.0))
    eps_list = [float(e) for e in c.get("eps", [1e-2, 1e-1, 1.0])]
    names = _phis(c)
    dnorm = sc.measure.derivative_bound(theta)
    rows = []
    ev = sc.exact_image() if n == 1 else None
    if ev is None:
        X = sc._cache.get("X")
        if X is None:
            from .pushforward import sample_product
            X = sc._cache["X"] = sample_product(sc.measure, sc.samples, sc.seed, sc.threads)
        fx = eval_poly(P, X)
        g = dir_deriv(P, X, theta)
    for eps in eps_list:
        rhs = (3 * math.pi * d + 0.5) * dnorm * eps ** -0.5 * _rhs_scale(c)
        best = None
        for nm in names:
            dphi = PHI_CATALOG[nm]
            if ev is None:
                vals = dphi(fx - center) * g * g / (g * g + eps)
                mean = float(vals.mean())
                se = float(vals.std(ddof=1) / math.sqrt(vals.size))
                cand = (abs(mean) - 3 * se, abs(mean), 3 * se, nm, "histogram")
            else:
                coef = P.univariate_coeffs()
                dcoef = np.polynomial.polynomial.polyder(coef)
                rho = sc.measure.factors[0].density
                total, err = 0.0, 0.0
                for lo, hi in zip(rho.breakpoints[:-1], rho.breakpoints[1:]):
                    def integrand(x, dphi=dphi):
                        fp = theta[0] * np.polynomial.polynomial.polyval(x, dcoef)
                        fv = np.polynomial.polynomial.polyval(x, coef)
                        return float(dphi(fv - center) * fp * fp / (fp * fp + eps) * rho(x))
                    v, e = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
                    total, err = total + v, err + e
                cand = (abs(total) - err, abs(total), err, nm, "quadrature")
            if best is None or cand[0] > best[0]:
                best = cand
        _, lhs, budget, nm, method = best
        rows.append(make_record(sc.id, "regularized-derivative", lhs, rhs, budget, method,
                                notes=f"eps={eps:g}, phi={nm}", extra={"eps": eps, "phi": nm, "theta": theta.tolist()},
                                tolerance_scale=sc.tolerance_scale))
    return rows


def _norm_info(P):
    fn = leading_form_norm(P)
    upper = fn.value if not fn.lower_bound else form_norm_upper(P.leading)
    return fn, upper


def _default_center(sc, ev):
    if ev is not None:
        if ev.singularities:
            return ev.singularities[0].t
        lo, hi = ev.support
        t = np.linspace(lo, hi, 2001)[1:-1]
        return float(t[np.argmax(ev.pdf(t))])
    y = sc.samples_of()
    G = GridDensity.from_samples(y, sc.bins)
    return float(G.centers[0][np.argmax(G.masses)])


def _intervals(sc, c, ev):
    if "intervals" in c:
        return [[(float(a), float(b)) for a, b in A] for A in c["intervals"]]
    center = float(c["center"]) if "center" in c else _default_center(sc, ev)
    lengths = c.get("lengths", [1e-4, 1e-3, 1e-2, 1e-1])
    return [[(center - 0.5 * lam, center + 0.5 * lam)] for lam in lengths]


def check_small_ball(sc: Scenario, c):
    P = sc.polynomial()
    d = P.degree
    fn, _ = _norm_info(P)
    S = sc.measure.sup_derivative_bound()
    ev = sc.exact_image()
    image = ev if ev is not None else sc.samples_of()
    rows = []
    for A in _intervals(sc, c, ev):
        rep = regularity.small_ball(image, A)
        lam = regularity.lebesgue(A)
        rhs = 12 * math.pi * S * fn.value ** (-1.0 / d) * lam ** (1.0 / d) * _rhs_scale(c)
        note = f"lambda(A)={lam:.3g}" + (", norm is a lower bound" if fn.lower_bound else "")
        rows.append(make_record(sc.id, "small-ball", rep.value, rhs, rep.error_budget, rep.method, notes=note,
                                extra={"intervals": A, "form_norm": fn.value, "S": S},
                                tolerance_scale=sc.tolerance_scale))
    return rows


def check_besov_shift(sc: Scenario, c):
    P = sc.polynomial()
    d = P.degree
    fn, upper = _norm_info(P)
    S = sc.measure.sup_derivative_bound()
    H = c.get("shifts", [1e-3, 1e-2, 1e-1])
    ev = sc.exact_image()
    rho = ev if ev is not None else GridDensity.from_samples(sc.samples_of(), c.get("bins", sc.bins))
    rep = regularity.besov_ratio(rho, 1.0 / d, H)
    scale = upper ** (1.0 / d)
    rhs = 24 * math.pi * S * _rhs_scale(c)
    note = "upper bound on the form norm" if fn.lower_bound else ""
    return [make_record(sc.id, "besov-shift", scale * rep.value, rhs, scale * rep.error_budget, rep.method,
                        notes=note, extra={"ratio": rep.value, "argmax_shift": rep.details.get("argmax_shift")},
                        tolerance_scale=sc.tolerance_scale)]


def lp_constant(p, d):
    """``c(p, d) = (p + p (d/(d-1) - p)^(-1))^(1/p) (12 pi)^(d (1 - 1/p))``."""
    return (p + p / (d / (d - 1.0) - p)) ** (1.0 / p) * (12 * math.pi) ** (d * (1 - 1.0 / p))


def check_density_lp(sc: Scenario, c):
    P = sc.polynomial()
    d = P.degree
    ps = [float(p) for p in c.get("p", [1.2, 1.5])]
    if d == 1:
        return [make_record(sc.id, "density-lp", 0.0, 0.0, 0.0, "exact", report_only=True,
                            notes="degree one: the exponent range has no interior", tolerance_scale=sc.tolerance_scale)]
    for p in ps:
        if not 1 <= p < d / (d - 1.0):
            raise SchemaError(f"scenario {sc.id}: p={p} outside [1, {d}/{d - 1})")
    fn, _ = _norm_info(P)
    S = sc.measure.sup_derivative_bound()
    ev = sc.exact_image()
    rho = ev if ev is not None else GridDensity.from_samples(sc.samples_of(), c.get("bins", sc.bins))
    rows = []
    for p in ps:
        rep = regularity.lp_norm(rho, p)
        rhs = lp_constant(p, d) * S ** (d * (1 - 1.0 / p)) * fn.value ** (1.0 / p - 1) * _rhs_scale(c)
        rows.append(make_record(sc.id, "density-lp", rep.value, rhs, rep.error_budget, rep.method,
                                notes=f"p={p:g}" + (", norm is a lower bound" if fn.lower_bound else ""),
                                extra={"p": p}, tolerance_scale=sc.tolerance_scale))
    return rows


def _kr_noise(masses, n_samples, width):
    F = np.clip(np.cumsum(masses), 0.0, 1.0)
    return float(np.sum(np.sqrt(F * (1 - F) / n_samples)) * width)


def check_tv_kr(sc: Scenario, c):
    """TV against ``C KR^(1/(1+d))`` with ``KR`` replaced by a certified lower bound."""
    P1, P2 = sc.polynomial("map"), sc.polynomial("map2")
    if P1.degree != P2.degree:
        raise SchemaError(f"scenario {sc.id}: both polynomials must have the same degree")
    d = P1.degree
    S = sc.measure.sup_derivative_bound()
    n1, _ = _norm_info(P1)
    n2, _ = _norm_info(P2)
    C = 2 * (1 + 12 * math.pi * S * (n1.value ** (-1.0 / d) + n2.value ** (-1.0 / d)))
    bins = int(c.get("bins", min(sc.bins, 4096)))
    ev1, ev2 = sc.exact_image("map"), sc.exact_image("map2")
    if ev1 is not None:
        tv = regularity.tv_distance(ev1, ev2)
        lo = min(ev1.support[0], ev2.support[0])
        hi = max(ev1.support[1], ev2.support[1])
        edges = np.linspace(lo, hi, bins + 1)
        w1, w2 = np.diff(ev1.cdf(edges)), np.diff(ev2.cdf(edges))
        centers = 0.5 * (edges[:-1] + edges[1:])
        kr = regularity.kr_norm(centers, w1, w2)
        kr_budget = float(edges[1] - edges[0])
    else:
        y1, y2 = sc.samples_of("map"), sc.samples_of("map2")
        lo, hi = min(y1.min(), y2.min()), max(y1.max(), y2.max())
        pad = 0.01 * (hi - lo)
        window = [(lo - pad, hi + pad)]
        g1 = GridDensity.from_samples(y1, bins, window)
        g2 = GridDensity.from_samples(y2, bins, window)
        tv = regularity.tv_distance(g1, g2)
        kr = regularity.kr_norm(g1, g2)
        width = float(g1.widths[0][0])
        kr_budget = kr.error_budget + 3 * (_kr_noise(g1.masses, g1.n_samples, width)
                                           + _kr_noise(g2.masses, g2.n_samples, width))
    kr_low = max(kr.value - kr_budget, 0.0)
    rhs = C * kr_low ** (1.0 / (1 + d)) * _rhs_scale(c)
    return [make_record(sc.id, "tv-kr-interpolation", tv.value, rhs, tv.error_budget, tv.method, "exact",
                        notes="KR lower bound used on the right",
                        extra={"kr": kr.value, "kr_lower": kr_low, "C": C}, tolerance_scale=sc.tolerance_scale)]


CHECKS = {
    "mixture-identity": check_mixture_identity,
    "linear-projection-tv": check_linear_projection_tv,
    "cube-section": check_cube_section,
    "projection-directional-tv": check_projection_directional_tv,
    "regularized-derivative": check_regularized_derivative,
    "small-ball": check_small_ball,
    "besov-shift": check_besov_shift,
    "density-lp": check_density_lp,
    "tv-kr-interpolation": check_tv_kr,
}


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def load_scenarios(source):
    """Parse a path, JSON text or already-loaded dict into the raw document."""
    if isinstance(source, dict):
        return source
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        raise FileNotFoundError(f"scenario file not found: {source}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc


def bundled_suite_path():
    return str(resources.files("skorohod").joinpath("data", BUNDLED_SUITE))


def run_scenario(sc: Scenario):
    rows = []
    for i, c in enumerate(sc.checks):
        try:
            rows += CHECKS[c["id"]](sc, c)
        except SchemaError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise SchemaError(f"scenario {sc.id}, checks[{i}]: {exc}") from exc
    return rows


def run_scenarios(source, seed=None, samples=None, bins=None, tolerance_scale=1.0, threads=None):
    """Run every scenario of a file and return the records in file order."""
    doc = load_scenarios(source)
    if not isinstance(doc, dict):
        raise SchemaError("$: expected an object")
    version = _need(doc, "schema_version", "$")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"$.schema_version: unsupported version {version!r}")
    specs = _need(doc, "scenarios", "$", list)
    if threads is None:
        from .pushforward import default_threads
        threads = default_threads()
    overrides = {"seed": seed, "samples": samples, "bins": bins, "tolerance_scale": tolerance_scale, "threads": 1}
    scenarios = [parse_scenario(s, f"$.scenarios[{i}]", overrides) for i, s in enumerate(specs)]
    if threads > 1 and len(scenarios) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run_scenario, scenarios))
    else:
        results = [run_scenario(sc) for sc in scenarios]
    return [r for rows in results for r in rows]


def any_failed(records):
    return any(r.verdict == "fail" for r in records)


CSV_FIELDS = ["scenario", "check", "lhs", "rhs", "margin", "budget", "verdict", "lhs_method", "borderline", "notes"]


def _fmt(x):
    return f"{x:.17g}"


def report_json(records):
    return json.dumps([r.to_dict() for r in records], indent=1, sort_keys=True)


def report_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow([r.scenario, r.check, _fmt(r.lhs), _fmt(r.rhs), _fmt(r.margin), _fmt(r.error_budget), r.verdict,
                    r.lhs_method, str(r.borderline).lower(), r.notes])
    return buf.getvalue()
