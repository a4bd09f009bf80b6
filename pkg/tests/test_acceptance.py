"""Acceptance suite: each test checks one numbered criterion at its stated tolerance.

Run it alone with ``python3 tests/test_acceptance.py`` or ``pytest tests/test_acceptance.py``;
a one-line verdict per criterion is printed in the terminal summary.
"""

import math
import sys
import time

import numpy as np
import pytest

from skorohod import measures1d, pwpoly, verify
from skorohod.measures1d import BVDensity
from skorohod.pushforward import ProductMeasure, linear_image_exact

SQRT2 = math.sqrt(2.0)
THREADS = 4


def run(scenarios):
    return verify.run_scenarios({"schema_version": 1, "scenarios": scenarios}, threads=THREADS)


def failures(records):
    return [r for r in records if r.verdict == "fail"]


def random_factor(rng):
    a = float(rng.uniform(-1.0, 0.5))
    return {"kind": str(rng.choice(["uniform", "triangle"])), "a": a, "b": a + float(rng.uniform(0.5, 2.0))}


def monomials(terms):
    return {"kind": "polynomial", "dim": 1, "monomials": [{"exponents": [e], "coeff": c} for e, c in terms]}


def test_mixture_identity_on_random_piecewise_linear(acceptance):
    t0 = time.perf_counter()
    worst_l1 = worst_identity = 0.0
    for seed in range(100):
        mu = BVDensity.random_piecewise_linear(seed, 12, True)
        m = measures1d.decompose_mixture(mu)
        worst_l1 = max(worst_l1, pwpoly.abs_integral(measures1d.reconstruct(m).density - mu.density))
        worst_identity = max(worst_identity, abs(m.derivative_norm() - mu.tv))
    elapsed = time.perf_counter() - t0
    ok = worst_l1 <= 1e-8 and worst_identity <= 1e-8 and elapsed < 10
    assert acceptance(1, ok, f"mixture identity: max L1 {worst_l1:.2e}, max |identity| {worst_identity:.2e}, "
                             f"{elapsed:.1f}s")


def test_equality_case_diagonal_square(acceptance):
    t0 = time.perf_counter()
    (r,) = run([{"id": "diag", "factors": [{"kind": "uniform", "a": -0.5, "b": 0.5, "repeat": 2}],
                 "map": {"kind": "linear", "a": [1, 1], "normalize": True},
                 "checks": [{"id": "linear-projection-tv"}]}])
    elapsed = time.perf_counter() - t0
    ok = (r.lhs_method == "exact" and abs(r.lhs - 2 * SQRT2) <= 1e-9 and abs(r.rhs - 2 * SQRT2) <= 1e-9
          and elapsed < 1)
    assert acceptance(2, ok, f"equality case: LHS {r.lhs:.15f}, RHS {r.rhs:.15f}, {elapsed:.2f}s")


def test_linear_projection_random_suite(acceptance):
    rng = np.random.default_rng(3)
    scenarios = []
    for i in range(200):
        n = int(rng.integers(1, 7))
        factors = []
        for _ in range(n):
            k = int(rng.integers(1, 5))
            w = rng.dirichlet(np.ones(k))
            a = rng.uniform(-2, 1, k)
            b = a + rng.uniform(0.1, 2.5, k)
            factors.append({"kind": "mixture", "components": [[float(w[j]), float(a[j]), float(b[j])]
                                                              for j in range(k)]})
        scenarios.append({"id": f"random-{i}", "factors": factors,
                          "map": {"kind": "linear", "a": rng.standard_normal(n).tolist(), "normalize": True},
                          "checks": [{"id": "linear-projection-tv"}]})
    t0 = time.perf_counter()
    recs = run(scenarios)
    elapsed = time.perf_counter() - t0
    exact = all(r.lhs_method == "exact" for r in recs)
    worst = max(r.lhs - r.rhs for r in recs)
    ok = len(recs) == 200 and exact and worst <= 1e-9 and elapsed < 60
    assert acceptance(3, ok, f"random projections: {len(recs)} scenarios, max LHS-RHS {worst:.3g}, "
                             f"{elapsed:.1f}s")


def test_cube_section_bound(acceptance):
    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(1000):
        n = 2 + i % 5
        theta = rng.standard_normal(n)
        theta /= np.linalg.norm(theta)
        dens = linear_image_exact(ProductMeasure.uniform_cube(n), theta, cap=None)
        worst = max(worst, float(dens(0.0)))
    diag = float(linear_image_exact(ProductMeasure.uniform_cube(2), np.array([1.0, 1.0]) / SQRT2)(0.0))
    ok = worst <= SQRT2 + 1e-9 and abs(diag - SQRT2) <= 1e-9
    assert acceptance(4, ok, f"cube sections: max rho(0) {worst:.12f}, diagonal {diag:.15f}")


def small_ball_scenarios():
    rng = np.random.default_rng(2024)
    out = []
    for i in range(50):
        n = int(rng.integers(2, 4))
        d = int(rng.integers(1, 5))
        out.append({"id": f"small-ball-{i}", "factors": [random_factor(rng) for _ in range(n)],
                    "map": {"kind": "random_polynomial", "dim": n, "degree": d, "seed": int(rng.integers(2 ** 31))},
                    "mc": {"samples": 1_000_000, "seed": i, "bins": 512}, "checks": [{"id": "small-ball"}]})
    return out


def test_small_ball(acceptance):
    t0 = time.perf_counter()
    mc = run(small_ball_scenarios())
    exact = run([{"id": "square", "factors": [{"kind": "uniform", "a": 0, "b": 1}],
                  "map": monomials([(2, 1.0)]), "checks": [{"id": "small-ball"}]},
                 {"id": "cubic", "factors": [{"kind": "triangle", "a": -1, "b": 1}],
                  "map": monomials([(3, 1.0), (1, -1.0)]), "checks": [{"id": "small-ball"}]}])
    elapsed = time.perf_counter() - t0
    n_scen = len({r.scenario for r in mc})
    exact_ok = all(r.error_budget == 0.0 and r.lhs_method in ("exact", "quadrature") for r in exact)
    ok = n_scen == 50 and not failures(mc) and not failures(exact) and exact_ok and \
        verify.EXACT_SLACK <= 1e-6 and elapsed < 300
    assert acceptance(5, ok, f"small ball: {len(mc)} MC rows over {n_scen} scenarios, {len(exact)} exact rows, "
                             f"{len(failures(mc)) + len(failures(exact))} failures, {elapsed:.1f}s")


BESOV_CASES = [
    ("square-on-unit", {"kind": "uniform", "a": 0, "b": 1}, [(2, 1.0)]),
    ("cubic-on-triangle", {"kind": "triangle", "a": -1, "b": 1}, [(3, 1.0), (1, -1.0)]),
    ("square-on-triangle", {"kind": "triangle", "a": -1, "b": 1}, [(2, 1.0)]),
    ("double-well-on-uniform", {"kind": "uniform", "a": -1, "b": 1}, [(4, 1.0), (2, -1.0)]),
    ("affine-on-random", {"kind": "random_pl", "seed": 3}, [(1, 2.0), (0, 1.0)]),
    ("cubic-on-trapezoid", {"kind": "trapezoid", "knots": [-1.5, -0.5, 0.5, 1.5]},
     [(3, 0.5), (2, 1.0), (1, -1.0)]),
]


def test_besov_shift_exact(acceptance):
    recs = run([{"id": cid, "factors": [f], "map": monomials(terms),
                 "checks": [{"id": "besov-shift", "shifts": [1e-3, 1e-2, 1e-1]}]} for cid, f, terms in BESOV_CASES])
    quad = all(r.lhs_method in ("exact", "quadrature") for r in recs)
    worst = max(r.lhs / r.rhs for r in recs)
    ok = len(recs) == len(BESOV_CASES) and quad and not failures(recs)
    assert acceptance(6, ok, f"Besov shift: {len(recs)} exact images, max LHS/RHS {worst:.3g}")


def test_density_lp_square_map(acceptance):
    recs = run([{"id": "square", "factors": [{"kind": "uniform", "a": 0, "b": 1}], "map": monomials([(2, 1.0)]),
                 "checks": [{"id": "density-lp", "p": [1.2, 1.5, 1.8]}]}])
    at15 = next(r.lhs for r in recs if r.extra["p"] == 1.5)
    ok = len(recs) == 3 and not failures(recs) and abs(at15 - 2 ** (1 / 3)) <= 1e-9
    assert acceptance(7, ok, f"density L^p: {len(recs)} exponents pass, ||rho||_1.5 - 2^(1/3) = "
                             f"{at15 - 2 ** (1 / 3):.2e}")


def test_tv_kr_interpolation(acceptance):
    scenarios = [{"id": f"quadratic-pair-{i}", "factors": [{"kind": "uniform", "a": 0, "b": 1, "repeat": 2}],
                  "map": {"kind": "random_polynomial", "dim": 2, "degree": 2, "seed": 1000 + 2 * i},
                  "map2": {"kind": "random_polynomial", "dim": 2, "degree": 2, "seed": 1001 + 2 * i},
                  "mc": {"samples": 200_000, "seed": i, "bins": 256},
                  "checks": [{"id": "tv-kr-interpolation"}]} for i in range(20)]
    t0 = time.perf_counter()
    recs = run(scenarios)
    elapsed = time.perf_counter() - t0
    ok = len(recs) == 20 and not failures(recs) and elapsed < 120
    assert acceptance(8, ok, f"TV/KR interpolation: {len(recs)} pairs, {len(failures(recs))} failures, "
                             f"{elapsed:.1f}s")


def test_regularized_derivative(acceptance):
    rng = np.random.default_rng(9)
    scenarios = []
    for i in range(10):
        n = int(rng.integers(1, 4))
        d = int(rng.integers(1, 4))
        scenarios.append({"id": f"regularized-{i}", "factors": [random_factor(rng) for _ in range(n)],
                          "map": {"kind": "random_polynomial", "dim": n, "degree": d,
                                  "seed": int(rng.integers(2 ** 31))},
                          "mc": {"samples": 1_000_000, "seed": i},
                          "checks": [{"id": "regularized-derivative", "eps": [0.01, 0.1, 1.0]}]})
    recs = run(scenarios)
    ok = len({r.scenario for r in recs}) == 10 and not failures(recs)
    assert acceptance(9, ok, f"regularized derivative: {len(recs)} rows, {len(failures(recs))} failures")


def test_projection_directional_tv_substitute(acceptance):
    rng = np.random.default_rng(10)
    scenarios = []
    for i in range(20):
        n = int(rng.integers(2, 5))
        a = rng.standard_normal(n)
        a /= np.linalg.norm(a)
        scenarios.append({"id": f"line-{i}", "factors": [random_factor(rng) for _ in range(n)],
                          "map": {"kind": "projection", "A": [a.tolist()]}, "mc": {"samples": 1_000_000, "seed": i},
                          "checks": [{"id": "projection-directional-tv"}]})
    for i in range(5):
        Q = np.linalg.qr(rng.standard_normal((3, 2)))[0].T
        scenarios.append({"id": f"plane-{i}", "factors": [random_factor(rng) for _ in range(3)],
                          "map": {"kind": "projection", "A": Q.tolist()}, "mc": {"samples": 1_000_000, "seed": i},
                          "checks": [{"id": "projection-directional-tv"}]})
    recs = run(scenarios)
    lines = [r for r in recs if r.scenario.startswith("line-")]
    planes = [r for r in recs if r.scenario.startswith("plane-")]
    agree = sum(bool(r.extra.get("agrees")) for r in lines)
    finite = all(math.isfinite(r.extra["ratio"]) for r in planes)
    ok = len(lines) == 20 and agree == 20 and len(planes) == 5 and finite and \
        all(r.verdict == "report-only" for r in recs)
    assert acceptance(10, ok, f"directional TV substitute: k=1 agreement {agree}/{len(lines)}, "
                              f"k=2 ratios finite: {finite}")


def test_bundled_suite_deterministic(acceptance):
    path = verify.bundled_suite_path()
    first = verify.report_json(verify.run_scenarios(path))
    second = verify.report_json(verify.run_scenarios(path, threads=THREADS))
    fails = len(failures(verify.run_scenarios(path)))
    ok = first == second and fails == 0
    assert acceptance(11, ok, f"determinism: two bundled-suite reports byte-identical: {first == second}, "
                              f"{fails} failures")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
