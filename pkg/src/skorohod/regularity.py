"""Regularity functionals of one-dimensional densities and their estimates.

Every functional returns a :class:`MetricReport` carrying the value, an
error budget and how it was obtained: ``exact`` (closed-form piecewise
polynomial arithmetic), ``quadrature`` (adaptive quadrature on an exact
pointwise density, with the quadrature error estimate as budget) or
``histogram`` (grid or sample estimates, with discretisation and Monte Carlo
terms in the budget).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import singledispatch

import numpy as np
from scipy import integrate, ndimage, optimize, sparse, special

from . import pwpoly
from .measures1d import BVDensity, DensityEvaluator
from .pushforward import GridDensity
from .pwpoly import PiecewisePoly

METHODS = ("exact", "quadrature", "histogram")
DIVERGENCE_LIMIT = 1e12
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class MetricReport:
    value: float
    error_budget: float = 0.0
    method: str = "exact"
    lower_bound: bool = False
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if not self.error_budget >= 0:
            raise ValueError("error budget must be nonnegative")

    def to_dict(self):
        return {"value": self.value, "error_budget": self.error_budget, "method": self.method,
                "lower_bound": self.lower_bound}

    def to_json(self):
        return json.dumps(self.to_dict())


def _unwrap(rho):
    return rho.density if isinstance(rho, BVDensity) else rho


# ---------------------------------------------------------------------------
# quadrature on exact image densities
# ---------------------------------------------------------------------------

def _singular_orders(ev: DensityEvaluator):
    orders = {}
    for s in ev.singularities:
        orders[s.t] = max(orders.get(s.t, 1), s.order)
    return orders


def _quad(g, a, b, **kw):
    """``integrate.quad`` that retries with a larger subdivision limit.

    If QUADPACK still reports trouble, the change between the two runs is
    added to the returned error estimate instead of raising a warning.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            return integrate.quad(g, a, b, epsabs=1e-13, epsrel=1e-12, limit=200, **kw)
        except integrate.IntegrationWarning:
            pass
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        v1, e1 = integrate.quad(g, a, b, epsabs=1e-13, epsrel=1e-12, limit=200, **kw)
        v2, e2 = integrate.quad(g, a, b, epsabs=1e-13, epsrel=1e-12, limit=2000, **kw)
    return v2, max(e2, abs(v2 - v1))


def _half_quad(g, t0, L, k, power):
    """``int g`` over the segment from ``t0`` to ``t0 + L`` (either sign of ``L``).

    ``g(t0, d)`` is the integrand at ``t0 + d``.  When ``t0`` is a critical
    value of order ``k``, ``g`` is a ``power``-th power of an image density
    near it; with ``d = L s^k`` the source point moves analytically in ``s``
    and the transformed integrand is an analytic function times
    ``s^(-(k - 1)(power - 1))``, and that pure power is handed to QUADPACK's
    algebraic-weight rule.
    """
    k = max(int(k), 1)
    gamma = (k - 1) * (power - 1.0)
    scale = abs(L) * k

    def raw(s):
        return g(t0, L * s ** k) * scale * s ** (k - 1 + gamma)

    if k == 1:
        return _quad(raw, 0.0, 1.0)
    # offsets below about 1e-300 underflow; h is analytic there, so its value
    # is extrapolated linearly from s_min and 2 s_min
    s_min = max(1e-12, (1e-290 / abs(L)) ** (1.0 / k))

    def h(s):
        if s >= s_min:
            return raw(s)
        h1, h2 = raw(s_min), raw(2 * s_min)
        return h1 + (h1 - h2) * (s_min - s) / s_min

    if gamma > 0:
        return _quad(h, 0.0, 1.0, weight="alg", wvar=(-gamma, 0.0))
    return _quad(h, 0.0, 1.0)


def _knot_quad(g, knots, orders, power):
    """``int g`` over the hull of ``knots``, splitting every knot interval in half.

    ``orders`` maps knots that are singular critical values to their order;
    each half is integrated outwards from its knot.
    """
    knots = np.unique(np.asarray(knots, dtype=float))
    total, err = 0.0, 0.0
    for t0, t1 in zip(knots[:-1], knots[1:]):
        half = 0.5 * (t1 - t0)
        for base, L in ((t0, half), (t1, -half)):
            v, e = _half_quad(g, base, L, orders.get(base, 1), power)
            total, err = total + v, err + e
    return total, err


def _scalar_pdf(ev):
    """``(base, d) -> density at base + d``, with infinities mapped to zero."""
    def f(base, d=0.0):
        v = ev.pdf_offset(base, d)
        return v if math.isfinite(v) else 0.0
    return f


def _diverges(ev: DensityEvaluator, p):
    return any(p * (1.0 - 1.0 / s.order) >= 1.0 for s in ev.singularities)


# ---------------------------------------------------------------------------
# shift-L1 distance and Besov ratio
# ---------------------------------------------------------------------------

@singledispatch
def shift_l1(rho, h) -> MetricReport:
    """``int |rho(t + h) - rho(t)| dt``."""
    raise TypeError(f"unsupported density type {type(rho).__name__}")


@shift_l1.register
def _(rho: PiecewisePoly, h):
    if h == 0:
        return MetricReport(0.0)
    return MetricReport(pwpoly.abs_integral(pwpoly.shift(rho, h) - rho))


@shift_l1.register
def _(rho: BVDensity, h):
    return shift_l1(rho.density, h)


@shift_l1.register
def _(rho: DensityEvaluator, h):
    if h == 0:
        return MetricReport(0.0, 0.0, "quadrature")
    pdf = _scalar_pdf(rho)
    base = _singular_orders(rho)
    orders = dict(base)
    # shifted knots remember the knot they came from, so that t0 + h lands
    # on it exactly instead of one rounding away
    origin = {}
    for t in rho.knots:
        origin[float(t - h)] = float(t)
    for t, k in base.items():
        orders[t - h] = max(orders.get(t - h, 1), k)
    knots = np.concatenate([rho.knots, rho.knots - h])

    def g(t0, d):
        return abs(pdf(origin.get(t0, t0 + h), d) - pdf(t0, d))

    v, e = _knot_quad(g, knots, orders, 1.0)
    return MetricReport(v, e, "quadrature")


def _histogram_tv(d, dx):
    """Variation of a step function with values ``d`` (zero outside), per unit ``dx``."""
    padded = np.concatenate([[0.0], d, [0.0]])
    return float(np.sum(np.abs(np.diff(padded))))


@shift_l1.register
def _(rho: GridDensity, h):
    if rho.k != 1:
        raise ValueError("shift_l1 needs a one-dimensional grid")
    w = rho.widths[0]
    dx = float(w.mean())
    s = int(round(abs(h) / dx))
    m = rho.masses
    N = rho.n_samples
    if s == 0:
        shifted_diff = np.zeros_like(m)
        value = 0.0
    else:
        padded = np.concatenate([m, np.zeros(s)])
        other = np.concatenate([np.zeros(s), m])
        shifted_diff = padded - other
        value = float(np.sum(np.abs(shifted_diff)))
    tv_hat = _histogram_tv(m / w, dx)
    sigma = np.sqrt(m * (1 - m) / N)
    sig_pair = np.sqrt(np.concatenate([sigma, np.zeros(s)]) ** 2 + np.concatenate([np.zeros(s), sigma]) ** 2)
    noise = SQRT_2_OVER_PI * float(sig_pair.sum()) if s else 0.0
    rounding = abs(abs(h) - s * dx) * tv_hat
    binning = 2.0 * dx * tv_hat
    return MetricReport(value, rounding + binning + noise, "histogram",
                        details={"rounded_shift": s * dx, "rounding": rounding, "binning": binning, "noise": noise})


def besov_ratio(rho, alpha, H) -> MetricReport:
    """``max_{h in H} shift_l1(rho, h) / h^alpha``.

    The budget is chosen so that ``value + budget`` bounds every
    ``(shift_l1 + its budget) / h^alpha``.
    """
    H = [float(h) for h in H]
    if not H:
        raise ValueError("the shift set must be nonempty")
    if any(h <= 0 for h in H):
        raise ValueError("shifts must be positive")
    reps = [shift_l1(rho, h) for h in H]
    ratios = [r.value / h ** alpha for r, h in zip(reps, H)]
    uppers = [(r.value + r.error_budget) / h ** alpha for r, h in zip(reps, H)]
    i = int(np.argmax(ratios))
    value = ratios[i]
    return MetricReport(value, max(0.0, max(uppers) - value), reps[i].method,
                        details={"argmax_shift": H[i], "ratios": ratios})


# ---------------------------------------------------------------------------
# L^p norms
# ---------------------------------------------------------------------------

@singledispatch
def lp_norm(rho, p) -> MetricReport:
    """``(int rho^p)^(1/p)``; ``inf`` when the integral diverges."""
    raise TypeError(f"unsupported density type {type(rho).__name__}")


@lp_norm.register
def _(rho: PiecewisePoly, p):
    if p < 1:
        raise ValueError("p must be at least 1")
    if float(p).is_integer():
        return MetricReport(pwpoly.power_integral(rho, int(p)) ** (1.0 / p))
    total, err = 0.0, 0.0
    for row, hw in zip(rho.coeffs, rho.half_widths):
        g = lambda u, row=row: max(float(pwpoly._horner(row, u)), 0.0) ** p
        v, e = integrate.quad(g, -hw, hw, epsabs=1e-14, epsrel=1e-13, limit=200)
        total, err = total + v, err + e
    value = total ** (1.0 / p)
    return MetricReport(value, value * err / (p * total) if total > 0 else err, "quadrature")


@lp_norm.register
def _(rho: BVDensity, p):
    return lp_norm(rho.density, p)


@lp_norm.register
def _(rho: DensityEvaluator, p):
    if p < 1:
        raise ValueError("p must be at least 1")
    if _diverges(rho, p):
        return MetricReport(math.inf, 0.0, "quadrature", details={"divergent": True})
    pdf = _scalar_pdf(rho)
    total, err = _knot_quad(lambda t0, d: pdf(t0, d) ** p, rho.knots, _singular_orders(rho), p)
    if total > DIVERGENCE_LIMIT:
        return MetricReport(math.inf, 0.0, "quadrature", details={"divergent": True})
    value = total ** (1.0 / p)
    # d(x^(1/p)) = x^(1/p - 1) dx / p
    return MetricReport(value, value * err / (p * total), "quadrature")


@lp_norm.register
def _(rho: GridDensity, p):
    if p < 1:
        raise ValueError("p must be at least 1")
    vol = rho.cell_volume()
    d = rho.masses / vol
    total = float(np.sum(d ** p * vol))
    value = total ** (1.0 / p)
    sigma = np.sqrt(rho.masses * (1 - rho.masses) / rho.n_samples) / vol
    # first-order propagation of the per-cell noise
    noise = float(np.sqrt(np.sum((p * d ** (p - 1) * sigma * vol) ** 2)))
    budget = 3.0 * value * noise / (p * total) if total > 0 else 0.0
    return MetricReport(value, budget, "histogram")


# ---------------------------------------------------------------------------
# small balls
# ---------------------------------------------------------------------------

def _normalize_intervals(A):
    iv = sorted((float(a), float(b)) for a, b in A if b > a)
    for (a0, b0), (a1, b1) in zip(iv[:-1], iv[1:]):
        if a1 < b0:
            raise ValueError("intervals must be disjoint")
    return iv


def lebesgue(A):
    return float(sum(b - a for a, b in _normalize_intervals(A)))


@singledispatch
def small_ball(image, A, z=3.0) -> MetricReport:
    """Mass of a finite union of disjoint intervals under the image measure.

    For samples and grids the budget is ``z`` Monte Carlo standard errors
    (plus partially covered bins for grids).
    """
    raise TypeError(f"unsupported image type {type(image).__name__}")


@small_ball.register
def _(image: DensityEvaluator, A, z=3.0):
    return MetricReport(image.mass(_normalize_intervals(A)), 0.0, "exact")


@small_ball.register
def _(image: PiecewisePoly, A, z=3.0):
    return MetricReport(float(sum(pwpoly.integral(image, a, b) for a, b in _normalize_intervals(A))))


@small_ball.register
def _(image: BVDensity, A, z=3.0):
    return small_ball(image.density, A, z)


@small_ball.register
def _(image: np.ndarray, A, z=3.0):
    y = np.asarray(image, dtype=float).ravel()
    N = y.size
    hit = np.zeros(N, dtype=bool)
    for a, b in _normalize_intervals(A):
        hit |= (y >= a) & (y <= b)
    p = float(hit.mean())
    se = math.sqrt(max(p * (1 - p), 1.0 / N) / N)
    return MetricReport(p, z * se, "histogram", details={"standard_error": se})


@small_ball.register
def _(image: GridDensity, A, z=3.0):
    if image.k != 1:
        raise ValueError("small_ball needs a one-dimensional grid")
    e = image.edges[0]
    m = image.masses
    value, partial = 0.0, 0.0
    for a, b in _normalize_intervals(A):
        cover = np.clip(np.minimum(e[1:], b) - np.maximum(e[:-1], a), 0.0, None) / np.diff(e)
        value += float(np.sum(cover * m))
        frac = (cover > 0) & (cover < 1)
        partial += float(np.sum(m[frac]))
    N = image.n_samples
    se = math.sqrt(max(value * (1 - value), 1.0 / N) / N)
    return MetricReport(value, z * se + partial, "histogram", details={"standard_error": se})


# ---------------------------------------------------------------------------
# TV and KR distances
# ---------------------------------------------------------------------------

def tv_distance(rho1, rho2) -> MetricReport:
    """``int |rho1 - rho2|``."""
    rho1, rho2 = _unwrap(rho1), _unwrap(rho2)
    if isinstance(rho1, PiecewisePoly) and isinstance(rho2, PiecewisePoly):
        return MetricReport(pwpoly.abs_integral(rho1 - rho2))
    if isinstance(rho1, GridDensity) and isinstance(rho2, GridDensity):
        return _tv_grid(rho1, rho2)
    if isinstance(rho1, (PiecewisePoly, DensityEvaluator)) and isinstance(rho2, (PiecewisePoly, DensityEvaluator)):
        return _tv_quadrature(rho1, rho2)
    raise TypeError("tv_distance needs two exact densities or two grids")


def _exact_parts(rho):
    if isinstance(rho, PiecewisePoly):
        return (lambda t0, d=0.0: float(rho(t0 + d))), rho.breakpoints, {}
    return _scalar_pdf(rho), rho.knots, _singular_orders(rho)


def _tv_quadrature(rho1, rho2):
    f1, k1, o1 = _exact_parts(rho1)
    f2, k2, o2 = _exact_parts(rho2)
    orders = dict(o1)
    for t, k in o2.items():
        orders[t] = max(orders.get(t, 1), k)
    v, e = _knot_quad(lambda t0, d: abs(f1(t0, d) - f2(t0, d)), np.concatenate([k1, k2]), orders, 1.0)
    return MetricReport(v, e, "quadrature")


def _tv_grid(g1: GridDensity, g2: GridDensity):
    if g1.k != 1 or g2.k != 1 or not np.array_equal(g1.edges[0], g2.edges[0]):
        raise ValueError("grids must be one-dimensional with identical edges")
    m1, m2 = g1.masses, g2.masses
    value = float(np.sum(np.abs(m1 - m2)) + abs(g1.outside_mass - g2.outside_mass))
    s1 = m1 * (1 - m1) / g1.n_samples
    s2 = m2 * (1 - m2) / g2.n_samples
    noise = SQRT_2_OVER_PI * float(np.sum(np.sqrt(s1 + s2)))
    w = g1.widths[0]
    dx = float(w.max())
    binning = dx * (_histogram_tv(m1 / w, dx) + _histogram_tv(m2 / w, dx))
    return MetricReport(value, noise + binning, "histogram", details={"noise": noise, "binning": binning})


def kr_norm(x, w1, w2=None, grid_restricted=True) -> MetricReport:
    """Kantorovich-Rubinstein norm of ``w1 - w2`` on a sorted grid ``x``.

    Solves ``max sum phi_i (w1_i - w2_i)`` subject to ``|phi_i| <= 1`` and
    ``|phi_{i+1} - phi_i| <= x_{i+1} - x_i`` as a linear program.  Two
    :class:`GridDensity` arguments (``kr_norm(g1, g2)``) are compared on their
    shared bin centres.  The result is flagged as a lower bound because
    grid-restricted test functions only see the binned measures.
    """
    budget = 0.0
    if isinstance(x, GridDensity):
        g1, g2 = x, w1
        if g1.k != 1 or g2.k != 1 or not np.array_equal(g1.edges[0], g2.edges[0]):
            raise ValueError("grids must be one-dimensional with identical edges")
        x = g1.centers[0]
        w1, w2 = g1.masses, g2.masses
        # moving each mass to its bin centre shifts it by at most half a bin
        budget = float(np.max(g1.widths[0]))
    x = np.asarray(x, dtype=float)
    d = np.asarray(w1, dtype=float) - (0.0 if w2 is None else np.asarray(w2, dtype=float))
    if x.shape != d.shape:
        raise ValueError("weights and grid must have matching lengths")
    m = x.size
    if m > 4096:
        raise ValueError("grid has more than 4096 points")
    if np.any(np.diff(x) <= 0):
        raise ValueError("grid must be strictly increasing")
    if m == 1:
        return MetricReport(abs(float(d[0])), budget, "exact", grid_restricted)
    D = sparse.diags([-np.ones(m - 1), np.ones(m - 1)], [0, 1], shape=(m - 1, m))
    A_ub = sparse.vstack([D, -D]).tocsr()
    gap = np.diff(x)
    b_ub = np.concatenate([gap, gap])
    res = optimize.linprog(-d, A_ub=A_ub, b_ub=b_ub, bounds=[(-1.0, 1.0)] * m, method="highs")
    if not res.success:
        raise RuntimeError(f"KR linear program failed: {res.message}")
    return MetricReport(float(-res.fun), budget, "exact", grid_restricted, details={"phi": res.x})


def wasserstein1(x, w1, w2):
    """``int |F1 - F2|`` for weights on a sorted grid."""
    x = np.asarray(x, dtype=float)
    F = np.cumsum(np.asarray(w1, dtype=float) - np.asarray(w2, dtype=float))
    return float(np.sum(np.abs(F[:-1]) * np.diff(x)))


# ---------------------------------------------------------------------------
# directional variation on grids
# ---------------------------------------------------------------------------

def _line_variation(D):
    """Sum over lines (last axis) of the variation with zero padding."""
    pad = [(0, 0)] * (D.ndim - 1) + [(1, 1)]
    return np.sum(np.abs(np.diff(np.pad(D, pad), axis=-1)), axis=-1)


def _frame(e):
    """Orthonormal matrix whose last column is ``e``."""
    k = e.size
    M = np.eye(k)
    M[:, 0] = e
    Q, _ = np.linalg.qr(M)
    if Q[:, 0] @ e < 0:
        Q[:, 0] = -Q[:, 0]
    return np.roll(Q, -1, axis=1)


def _directional_raw(G: GridDensity, e):
    dens = G.density()
    var = G.masses * (1 - G.masses) / G.n_samples / G.cell_volume() ** 2
    widths = [float(w.mean()) for w in G.widths]
    axis = [i for i in range(G.k) if abs(abs(e[i]) - 1.0) < 1e-12]
    if axis:
        ax = axis[0]
        D = np.moveaxis(dens, ax, -1)
        S = np.moveaxis(var, ax, -1)
        perp = math.prod(w for i, w in enumerate(widths) if i != ax)
        value = float(_line_variation(D).sum() * perp)
        pair = np.sqrt(np.pad(S, [(0, 0)] * (G.k - 1) + [(1, 0)])[..., :] + np.pad(S, [(0, 0)] * (G.k - 1) + [(0, 1)]))
        noise = SQRT_2_OVER_PI * float(pair.sum() * perp)
        return value, noise, widths[ax]
    # rotated lines through a grid of spacing = finest bin width, multilinear interpolation
    step = min(widths)
    lo = np.array([ed[0] for ed in G.edges])
    hi = np.array([ed[-1] for ed in G.edges])
    centre = 0.5 * (lo + hi)
    radius = 0.5 * float(np.linalg.norm(hi - lo))
    n = int(math.ceil(radius / step)) + 1
    ticks = np.arange(-n, n + 1) * step
    Q = _frame(e)
    coords = np.meshgrid(*([ticks] * G.k), indexing="ij")
    P = centre[:, None] + Q @ np.stack([c.ravel() for c in coords])
    idx = np.stack([(P[i] - G.edges[i][0]) / widths[i] - 0.5 for i in range(G.k)])
    vals = ndimage.map_coordinates(dens, idx, order=1, mode="constant", cval=0.0).reshape(coords[0].shape)
    svals = ndimage.map_coordinates(var, idx, order=1, mode="constant", cval=0.0).reshape(coords[0].shape)
    perp = step ** (G.k - 1)
    value = float(_line_variation(vals).sum() * perp)
    S = np.pad(svals, [(0, 0)] * (G.k - 1) + [(1, 1)])
    noise = SQRT_2_OVER_PI * float(np.sqrt(S[..., 1:] + S[..., :-1]).sum() * perp)
    return value, noise, step


def _coarsen(G: GridDensity):
    shape = G.masses.shape
    if any(s % 2 for s in shape) or any(s < 8 for s in shape):
        return None
    M = G.masses
    for ax in range(G.k):
        M = np.add.reduceat(M, np.arange(0, M.shape[ax], 2), axis=ax)
    edges = tuple(e[::2] for e in G.edges)
    return GridDensity(edges, M, G.n_samples, G.seed, G.outside_mass)


def directional_tv_grid(G: GridDensity, e) -> MetricReport:
    """Estimate of ``||D_e nu||_TV`` from a ``k``-dimensional histogram.

    The density is read along lines parallel to ``e`` (bin values for axis
    directions, multilinear interpolation otherwise), the 1-D variation of
    each line is summed and weighted by the cross-sectional cell size.  The
    budget adds a Monte Carlo term (each absolute difference of noisy values
    is biased upwards by at most ``sqrt(2/pi)`` times its standard deviation)
    and a discretisation term taken as the change under halving the
    resolution.
    """
    e = np.asarray(e, dtype=float).ravel()
    if G.k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    if e.size != G.k or abs(np.linalg.norm(e) - 1.0) > 1e-10:
        raise ValueError("e must be a unit vector of the grid dimension")
    value, noise, _ = _directional_raw(G, e)
    coarse = _coarsen(G)
    disc = 0.0
    if coarse is not None:
        cval, cnoise, _ = _directional_raw(coarse, e)
        disc = abs(value - cval)
    return MetricReport(value, noise + disc, "histogram", details={"noise": noise, "discretisation": disc})


# ---------------------------------------------------------------------------
# reference constants
# ---------------------------------------------------------------------------

def radial_exponential_integral(k, c=1.0):
    """``int_{R^(k-1)} exp(-c |x|) dx = Gamma(k) pi^((k-1)/2) / (c^(k-1) Gamma((k+1)/2))``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return math.exp(special.gammaln(k) + 0.5 * (k - 1) * math.log(math.pi)
                    - (k - 1) * math.log(c) - special.gammaln(0.5 * (k + 1)))


def projection_constant(k, c, C, Ck):
    """``k Ck^k e^(C k) int exp(-c|x|)``: the projection constant for given absolute constants."""
    return k * Ck ** k * math.exp(C * k) * radial_exponential_integral(k, c)
