"""Skorohod-differentiable probability measures on the line.

A measure with a density of bounded variation is stored as a
:class:`BVDensity`; its derivative norm ``||mu'||_TV`` is the pointwise
variation of the density.  :func:`decompose_mixture` writes such a measure as
a convex mixture of uniform distributions whose derivative norms add up to
``||mu'||_TV`` (a layer-cake sweep over the superlevel sets), and
:func:`reconstruct` goes back.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import pwpoly
from .pwpoly import PiecewisePoly, _bracketed_newton, _horner, _horner_with_derivative

DEFAULT_SLABS = 512
COMPONENT_CAP = 10_000
MASS_TOL = 1e-10
NEG_TOL = 1e-12


class InvalidDensityError(ValueError):
    """A density violates nonnegativity or unit mass."""


class ComponentCapError(RuntimeError):
    """A decomposition or reconstruction would exceed the component cap."""


# ---------------------------------------------------------------------------
# BVDensity
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BVDensity:
    """Probability density of bounded variation, with its cached ``||mu'||_TV``."""

    density: PiecewisePoly
    tv: float = field(init=False)

    def __post_init__(self):
        p = self.density
        mass = pwpoly.integral(p)
        if abs(mass - 1.0) > MASS_TOL:
            raise InvalidDensityError(f"unit mass violated: integral is {mass!r}")
        low = pwpoly.minimum(p)
        if low < -NEG_TOL:
            raise InvalidDensityError(f"nonnegativity violated: minimum is {low!r}")
        object.__setattr__(self, "tv", pwpoly.variation(p))

    @property
    def support(self):
        return self.density.support

    def pdf(self, x):
        return self.density(x)

    def cdf(self, x):
        P = pwpoly.antiderivative(self.density)
        lo, hi = self.support
        x = np.asarray(x, dtype=float)
        out = np.where(x <= lo, 0.0, np.where(x >= hi, 1.0, P(np.clip(x, lo, hi), side="left")))
        return float(out) if out.ndim == 0 else out

    def mean(self):
        lo, hi = self.support
        from numpy.polynomial import polynomial as P

        total = 0.0
        for row, m, h in zip(self.density.coeffs, self.density.mids, self.density.half_widths):
            c = P.polymul(row, [m, 1.0])
            a = P.polyint(c)
            total += P.polyval(h, a) - P.polyval(-h, a)
        return float(total)

    # -- constructors --------------------------------------------------------

    @classmethod
    def uniform(cls, a, b):
        return cls(PiecewisePoly.constant(a, b, 1.0 / (b - a)))

    @classmethod
    def triangle(cls, a, b, peak=None):
        """Triangular density on ``[a, b]`` with its mode at ``peak`` (default midpoint)."""
        c = 0.5 * (a + b) if peak is None else peak
        h = 2.0 / (b - a)
        if c <= a:
            return cls(PiecewisePoly.piecewise_linear([a, b], [h, 0.0]))
        if c >= b:
            return cls(PiecewisePoly.piecewise_linear([a, b], [0.0, h]))
        return cls(PiecewisePoly.piecewise_linear([a, c, b], [0.0, h, 0.0]))

    @classmethod
    def trapezoid(cls, a, b, c, d):
        """Trapezoid rising on ``[a, b]``, flat on ``[b, c]``, falling on ``[c, d]``."""
        h = 2.0 / ((d - a) + (c - b))
        xs, vals = [a], [0.0]
        for x in (b, c):
            if x > xs[-1]:
                xs.append(x)
                vals.append(h)
        if d > xs[-1]:
            xs.append(d)
            vals.append(0.0)
        left = [vals[i] for i in range(len(xs) - 1)]
        right = [vals[i + 1] for i in range(len(xs) - 1)]
        if b == a:
            left[0] = h
        if c == d:
            right[-1] = h
        return cls(PiecewisePoly.piecewise_linear(xs, left, right))

    @classmethod
    def piecewise_linear(cls, x, left, right=None, normalize=True):
        p = PiecewisePoly.piecewise_linear(x, left, right)
        if normalize:
            p = p * (1.0 / pwpoly.integral(p))
        return cls(p)

    @classmethod
    def random_piecewise_linear(cls, seed, max_pieces=12, jumps=True, span=(-2.0, 2.0)):
        """Seeded random piecewise-linear density with up to ``max_pieces`` pieces.

        With ``jumps`` the values at either side of a breakpoint (and at the
        two ends of the support) are drawn independently, so the density has
        jump discontinuities; without it the density is continuous and
        vanishes at both ends.
        """
        rng = np.random.default_rng(seed)
        m = int(rng.integers(1, max_pieces + 1))
        x = np.sort(rng.uniform(span[0], span[1], m + 1))
        while np.any(np.diff(x) < 1e-3 * (span[1] - span[0])):
            x = np.sort(rng.uniform(span[0], span[1], m + 1))
        if jumps:
            left = rng.uniform(0.0, 1.0, m)
            right = rng.uniform(0.0, 1.0, m)
            # occasional plateaus and exact continuity
            for i in range(m):
                r = rng.uniform()
                if r < 0.2:
                    right[i] = left[i]
                elif r < 0.4 and i + 1 < m:
                    left[i + 1] = right[i]
        else:
            v = np.concatenate([[0.0], rng.uniform(0.0, 1.0, m - 1), [0.0]])
            if m == 1:
                v = np.array([0.0, 1.0])
            left, right = v[:-1], v[1:]
        return cls.piecewise_linear(x, left, right)

    @classmethod
    def from_mixture(cls, mixture):
        return reconstruct(mixture)

    # -- serialisation -------------------------------------------------------

    def to_dict(self):
        d = self.density.to_dict()
        d["tv"] = self.tv
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(PiecewisePoly.from_dict(d))

    def to_json(self):
        return json.dumps(self.to_dict())


def tv_skorohod(mu: BVDensity) -> float:
    """``||mu'||_TV``, the variation of the density."""
    return mu.tv


# ---------------------------------------------------------------------------
# UniformMixture
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UniformMixture:
    """Finite representation of a mixing measure on intervals ``[a, b]``.

    Each component has a weight and a representative interval ``[a, b]``.
    Components coming from a level slab of a sloped density also carry the
    interval at the bottom (``a_lo, b_lo``) and at the top (``a_hi, b_hi``)
    of the slab: the component then stands for the whole family of uniform
    distributions swept between the two, and ``[a, b]`` are the slab-averaged
    endpoints.  Plain uniform components have ``a_lo == a_hi == a`` and
    ``b_lo == b_hi == b``.
    """

    weights: np.ndarray
    a: np.ndarray
    b: np.ndarray
    a_lo: np.ndarray = None
    a_hi: np.ndarray = None
    b_lo: np.ndarray = None
    b_hi: np.ndarray = None

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        spans = []
        for name, default in (("a_lo", a), ("a_hi", a), ("b_lo", b), ("b_hi", b)):
            v = getattr(self, name)
            spans.append(default.copy() if v is None else np.atleast_1d(np.asarray(v, dtype=float)))
        if not (w.shape == a.shape == b.shape) or any(s.shape != w.shape for s in spans):
            raise ValueError("component arrays must share one length")
        if w.size == 0:
            raise ValueError("a mixture needs at least one component")
        if np.any(w <= 0) or np.any(w > 1 + MASS_TOL):
            raise ValueError("weights must lie in (0, 1]")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        if np.any(b <= a):
            raise ValueError("every component needs a < b")
        order = np.lexsort((b, a))
        for name, v in zip(("weights", "a", "b", "a_lo", "a_hi", "b_lo", "b_hi"), [w, a, b, *spans]):
            v = v[order]
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def from_components(cls, components):
        """Build from ``(weight, a, b)`` triples of plain uniform components."""
        arr = np.asarray(components, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def __len__(self):
        return self.weights.size

    @property
    def components(self):
        return list(zip(self.weights.tolist(), self.a.tolist(), self.b.tolist()))

    def is_plain(self):
        return bool(np.all(self.a_lo == self.a_hi) and np.all(self.b_lo == self.b_hi))

    def derivative_norm(self):
        """``sum weight * 2 / (b - a)``: the mixture's side of the norm identity."""
        return float(np.sum(self.weights * 2.0 / (self.b - self.a)))

    def to_dict(self):
        comps = []
        for i in range(len(self)):
            c = {"weight": float(self.weights[i]), "a": float(self.a[i]), "b": float(self.b[i])}
            if self.a_lo[i] != self.a_hi[i] or self.b_lo[i] != self.b_hi[i]:
                c["a_span"] = [float(self.a_lo[i]), float(self.a_hi[i])]
                c["b_span"] = [float(self.b_lo[i]), float(self.b_hi[i])]
            comps.append(c)
        return {"components": comps}

    @classmethod
    def from_dict(cls, d):
        comps = d["components"]
        w = [c["weight"] for c in comps]
        a = [c["a"] for c in comps]
        b = [c["b"] for c in comps]
        a_lo = [c.get("a_span", [c["a"], c["a"]])[0] for c in comps]
        a_hi = [c.get("a_span", [c["a"], c["a"]])[1] for c in comps]
        b_lo = [c.get("b_span", [c["b"], c["b"]])[0] for c in comps]
        b_hi = [c.get("b_span", [c["b"], c["b"]])[1] for c in comps]
        return cls(w, a, b, a_lo, a_hi, b_lo, b_hi)

    def to_json(self):
        return json.dumps(self.to_dict())


# ---------------------------------------------------------------------------
# layer-cake decomposition
# ---------------------------------------------------------------------------

def _critical_levels(p: PiecewisePoly):
    left, right = p.one_sided_limits()
    vals = [left, right, [0.0]]
    if p.degree >= 2:
        crit = pwpoly._critical_points(p)
        V = _horner(p.coeffs[:, None, :], np.nan_to_num(crit))
        vals.append(V[~np.isnan(crit)])
    v = np.concatenate([np.ravel(x) for x in vals])
    v = v[v >= 0.0]
    top = max(float(v.max()), 1.0)
    v = np.sort(v)
    keep = np.concatenate([[True], np.diff(v) > 1e-12 * top])
    return v[keep]


def _monotone_segments(p: PiecewisePoly):
    """Per piece: sorted local segment ends ``[-hw, crit..., hw]`` (NaN padded)."""
    hw = p.half_widths
    crit = pwpoly._critical_points(p) if p.degree >= 2 else np.zeros((p.n_pieces, 0))
    E = np.concatenate([-hw[:, None], crit, hw[:, None]], axis=1)
    E = np.where(np.isnan(E), np.inf, E)
    return np.sort(E, axis=1)


def _crossings(p: PiecewisePoly, t, segments):
    """Points where ``p`` crosses level ``t``, sorted, with direction and provenance.

    Each entry is ``(x, up, piece, seg_lo, seg_hi)``; ``piece`` is ``None`` for
    a crossing by a jump at a breakpoint.
    """
    out = []
    bp = p.breakpoints
    left, right = p.one_sided_limits()
    for k in range(bp.size):
        if left[k] < t < right[k]:
            out.append((float(bp[k]), True, None, None, None))
        elif left[k] > t > right[k]:
            out.append((float(bp[k]), False, None, None, None))
    if p.degree >= 1:
        hw = p.half_widths
        C = np.array(p.coeffs, copy=True)
        C[:, 0] -= t
        R = pwpoly._roots_in_interval(C, -hw, hw)
        for i, j in zip(*np.nonzero(~np.isnan(R))):
            u = R[i, j]
            if not (-hw[i] < u < hw[i]):
                continue
            _, df = _horner_with_derivative(p.coeffs[i], u)
            E = segments[i]
            k = np.searchsorted(E, u, side="right")
            out.append((float(p.mids[i] + u), bool(df > 0), int(i), float(E[k - 1]), float(E[k])))
    out.sort(key=lambda c: c[0])
    return out


def _invert_on_segment(row, lo, hi, levels):
    """Local ``u`` in ``[lo, hi]`` with ``row(u) = level`` for a monotone row."""
    levels = np.asarray(levels, dtype=float)
    if row.size <= 2:
        c0 = row[0]
        c1 = row[1] if row.size > 1 else 0.0
        return np.clip((levels - c0) / c1, lo, hi)
    flo = _horner(row, lo)
    fhi = _horner(row, hi)
    u = np.where(levels <= min(flo, fhi), lo if flo <= fhi else hi, np.nan)
    u = np.where(levels >= max(flo, fhi), hi if fhi >= flo else lo, u)
    todo = np.isnan(u)
    if todo.any():
        C = np.tile(row, (int(todo.sum()), 1))
        C[:, 0] -= levels[todo]
        n = C.shape[0]
        f_at_lo = flo - levels[todo]
        u[todo] = _bracketed_newton(C, np.full(n, lo), np.full(n, hi), f_at_lo)
    return u


def _flank(row, u_from, u_to, base):
    """``|int_{u_from}^{u_to} (row(u) - base) du|`` for arrays of limits."""
    k = np.arange(1, row.size + 1, dtype=float)
    A = np.zeros(row.size + 1)
    A[1:] = row / k
    A[0] = 0.0
    val = _horner(A, u_to) - _horner(A, u_from) - base * (u_to - u_from)
    return np.abs(val)


def decompose_mixture(mu: BVDensity, slabs=DEFAULT_SLABS, cap=COMPONENT_CAP) -> UniformMixture:
    """Convex mixture of uniform distributions preserving the derivative norm.

    Sweeps the critical levels of the density.  Inside a band between two
    consecutive critical levels the superlevel set ``{rho > t}`` is a fixed
    number of intervals whose endpoints move monotonically with ``t``.  Each
    interval family over a level slab becomes one component whose weight is
    the exact mass of the slab; its interval is the slab average of the
    moving endpoints, so ``weight * 2 / (b - a) = 2 * slab height`` and the
    norm identity holds exactly.  Piecewise-linear densities use one slab per
    band (endpoints are affine in the level and reconstruction is exact);
    other densities split each band into ``slabs`` slabs.
    """
    p = mu.density
    levels = _critical_levels(p)
    segments = _monotone_segments(p)
    linear = p.is_piecewise_linear()
    W, A, B, ALO, AHI, BLO, BHI = ([] for _ in range(7))
    count = 0
    for t_lo, t_hi in zip(levels[:-1], levels[1:]):
        if t_hi <= t_lo:
            continue
        t_mid = 0.5 * (t_lo + t_hi)
        cross = _crossings(p, t_mid, segments)
        if len(cross) % 2 or any(c[1] != (i % 2 == 0) for i, c in enumerate(cross)):
            raise RuntimeError(f"inconsistent superlevel structure at level {t_mid!r}")
        grid = np.array([t_lo, t_hi]) if linear else np.linspace(t_lo, t_hi, slabs + 1)
        h = np.diff(grid)
        count += (len(cross) // 2) * h.size
        if count > cap:
            raise ComponentCapError(f"decomposition needs more than {cap} components")
        pos, flank = [], []
        for x, up, piece, s_lo, s_hi in cross:
            if piece is None:
                pos.append(np.full(grid.size, x))
                flank.append(np.zeros(h.size))
                continue
            row = np.trim_zeros(p.coeffs[piece], "b")
            if row.size == 0:
                row = np.zeros(1)
            u = _invert_on_segment(row, s_lo, s_hi, grid)
            pos.append(p.mids[piece] + u)
            flank.append(_flank(row, u[:-1], u[1:], grid[:-1]))
        for j in range(0, len(cross), 2):
            left, right = pos[j], pos[j + 1]
            fl, fr = flank[j], flank[j + 1]
            a_lo, a_hi = left[:-1], left[1:]
            b_lo, b_hi = right[:-1], right[1:]
            w = fl + h * (b_hi - a_hi) + fr
            a_bar = a_hi - fl / h
            b_bar = b_hi + fr / h
            ok = (w > 0) & (b_bar > a_bar)
            W.append(w[ok])
            A.append(a_bar[ok])
            B.append(b_bar[ok])
            ALO.append(a_lo[ok])
            AHI.append(a_hi[ok])
            BLO.append(b_lo[ok])
            BHI.append(b_hi[ok])
    w = np.concatenate(W)
    # the slab masses add up to the total mass up to rounding
    w = w / w.sum()
    return UniformMixture(w, np.concatenate(A), np.concatenate(B), np.concatenate(ALO),
                          np.concatenate(AHI), np.concatenate(BLO), np.concatenate(BHI))


def reconstruct(m: UniformMixture, cap=COMPONENT_CAP * 10) -> BVDensity:
    """Density ``sum weight * (component density)`` as an exact piecewise-linear function.

    A plain component contributes a box; a slab family contributes the
    trapezoid swept by its moving interval, scaled to the component weight.
    """
    if len(m) > cap:
        raise ComponentCapError(f"mixture has more than {cap} components")
    a_lo, a_hi, b_lo, b_hi = m.a_lo, m.a_hi, m.b_lo, m.b_hi
    area = 0.5 * ((b_lo - a_lo) + (b_hi - a_hi))
    H = m.weights / area
    pos, jump, dslope = [], [], []
    rise = a_hi > a_lo
    fall = b_lo > b_hi
    with np.errstate(divide="ignore", invalid="ignore"):
        s_up = np.where(rise, H / (a_hi - a_lo), 0.0)
        s_dn = np.where(fall, H / (b_lo - b_hi), 0.0)
    pos += [a_lo, a_hi, b_hi, b_lo]
    jump += [np.where(rise, 0.0, H), np.zeros_like(H), np.where(fall, 0.0, -H), np.zeros_like(H)]
    dslope += [s_up, -s_up, -s_dn, s_dn]
    pos = np.concatenate(pos)
    jump = np.concatenate(jump)
    dslope = np.concatenate(dslope)
    order = np.argsort(pos, kind="stable")
    pos, jump, dslope = pos[order], jump[order], dslope[order]
    scale = max(1.0, float(np.max(np.abs(pos))))
    new = np.concatenate([[True], np.diff(pos) > 1e-12 * scale])
    group = np.cumsum(new) - 1
    knots = pos[new]
    J = np.bincount(group, weights=jump)
    S = np.bincount(group, weights=dslope)
    slope = np.cumsum(S)[:-1]
    dx = np.diff(knots)
    # value just right of each knot
    vR = np.zeros(knots.size)
    vR[0] = J[0]
    inc = slope * dx
    vR[1:] = J[0] + np.cumsum(inc + J[1:])
    c0 = vR[:-1] + 0.5 * slope * dx
    return BVDensity(PiecewisePoly(knots, np.stack([c0, slope], axis=1)))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample(m: UniformMixture, n: int, seed) -> np.ndarray:
    """``n`` i.i.d. draws from the mixture; deterministic for a fixed ``(seed, n)``.

    ``seed`` may be an integer, a ``SeedSequence`` or a ``Generator``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = _as_rng(seed)
    idx = rng.choice(len(m), size=n, p=m.weights) if len(m) > 1 else np.zeros(n, dtype=int)
    u_level = rng.random(n)
    u_pos = rng.random(n)
    L0 = (m.b_lo - m.a_lo)[idx]
    L1 = (m.b_hi - m.a_hi)[idx]
    # level s in [0, 1] with density proportional to L0 + (L1 - L0) s
    dL = L1 - L0
    mean_len = 0.5 * (L0 + L1)
    rhs = u_level * mean_len
    disc = np.maximum(L0 * L0 + 2.0 * dL * rhs, 0.0)
    s = np.clip(2.0 * rhs / (L0 + np.sqrt(disc)), 0.0, 1.0)
    lo = m.a_lo[idx] + s * (m.a_hi[idx] - m.a_lo[idx])
    hi = m.b_lo[idx] + s * (m.b_hi[idx] - m.b_lo[idx])
    return lo + u_pos * (hi - lo)


# ---------------------------------------------------------------------------
# exact pushforward under a one-variable polynomial
# ---------------------------------------------------------------------------

def _newton_scalar(C, c0, a, b):
    """Root of ``c0 + C[1] v + C[2] v^2 + ...`` on ``[a, b]`` and the derivative there.

    Plain-float twin of :func:`pwpoly._bracketed_newton` (relative stopping
    rule), used when a single point is evaluated.
    """
    n = len(C)

    def ev(v):
        f, df = 0.0, 0.0
        for k in range(n - 1, 0, -1):
            df = df * v + f
            f = f * v + C[k]
        df = df * v + f
        f = f * v + c0
        return f, df

    if c0 == 0.0:
        return 0.0, ev(0.0)[1]
    fa = ev(a)[0]
    lo, hi = a, b
    x = 0.5 * (lo + hi)
    for _ in range(200):
        f, df = ev(x)
        if f == 0.0:
            return x, df
        if (f > 0) == (fa > 0):
            lo, fa = x, f
        else:
            hi = x
        xn = x - f / df if df != 0.0 else math.nan
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        tol = pwpoly.ROOT_TOL * 1e-3 * max(abs(xn), 1e-300)
        if abs(xn - x) <= tol or hi - lo <= tol:
            x = xn
            break
        x = xn
    return x, ev(x)[1]


@dataclass(frozen=True)
class Singularity:
    """A critical value ``t`` of the map where the image density may blow up.

    Near ``t`` the image density behaves like ``|s - t|^(1/order - 1)``
    when ``density_at`` is positive.
    """

    t: float
    x: float
    order: int
    density_at: float


class DensityEvaluator:
    """Pointwise density, CDF and masses of ``mu o f^{-1}`` for a polynomial ``f``.

    The support of ``mu`` is cut at the breakpoints of its density and at the
    critical points of ``f``; on each resulting branch ``f`` is strictly
    monotone and ``rho_f(t)`` collects ``rho(x) / |f'(x)|`` over the branch
    solutions of ``f(x) = t``.  Evaluation exactly at a singular critical
    value returns ``inf``.
    """

    def __init__(self, mu: BVDensity, f):
        coef = np.trim_zeros(np.atleast_1d(np.asarray(f, dtype=float)), "b")
        if coef.size < 2:
            raise ValueError("the map must have degree at least one")
        self.mu = mu
        self.f = coef
        self.degree = coef.size - 1
        p = mu.density
        self._rho = p
        # f about each piece midpoint
        F = pwpoly._taylor_shift(np.tile(coef, (p.n_pieces, 1)), p.mids)
        dF = pwpoly._derivative_coeffs(F)
        hw = p.half_widths
        crit = pwpoly._roots_in_interval(dF, -hw, hw) if self.degree >= 2 else np.zeros((p.n_pieces, 0))
        branches = []
        sing = []
        for i in range(p.n_pieces):
            cuts = [-hw[i], *sorted(c for c in crit[i] if not np.isnan(c) and -hw[i] < c < hw[i]), hw[i]]
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                if hi <= lo:
                    continue
                f_lo = float(_horner(F[i], lo))
                f_hi = float(_horner(F[i], hi))
                if f_lo == f_hi:
                    continue
                branches.append((i, lo, hi, f_lo, f_hi))
            for c in cuts[1:-1]:
                sing.append(self._singularity(F[i], i, c))
        # critical points sitting on breakpoints
        for k, x in enumerate(p.breakpoints):
            d = np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(coef))
            if abs(d) <= 1e-13 * max(1.0, np.abs(coef).max()):
                i = min(k, p.n_pieces - 1)
                sing.append(self._singularity(F[i], i, x - p.mids[i]))
        self.branches = branches
        self._ends = [
            (pwpoly._taylor_shift(F[i][None, :], np.array([lo]))[0], pwpoly._taylor_shift(F[i][None, :], np.array([hi]))[0])
            for i, lo, hi, _, _ in branches
        ]
        self.singularities = [s for s in sing if s.density_at > 0 and s.order >= 2]
        self._singular_t = {s.t for s in self.singularities}
        self._F = F
        # plain-float copies for the scalar path used inside adaptive quadrature
        self._scalar = [
            (i, lo, hi, f_lo, f_hi, Clo.tolist(), Chi.tolist(), p.coeffs[i].tolist())
            for (i, lo, hi, f_lo, f_hi), (Clo, Chi) in zip(branches, self._ends)
        ]
        rho_int = np.zeros((p.n_pieces, p.coeffs.shape[1] + 1))
        rho_int[:, 1:] = p.coeffs / np.arange(1, p.coeffs.shape[1] + 1)
        self._rho_int = rho_int
        self._branch_mass = np.array(
            [_horner(rho_int[i], hi) - _horner(rho_int[i], lo) for i, lo, hi, _, _ in branches]
        )

    def _singularity(self, Fi, i, u):
        p = self._rho
        derivs = pwpoly._derivative_coeffs(Fi)
        order = 1
        scale = max(1.0, float(np.abs(Fi).max()))
        while order < self.degree:
            derivs = pwpoly._derivative_coeffs(derivs)
            order += 1
            if abs(_horner(derivs, u)) > 1e-10 * scale:
                break
        x = float(p.mids[i] + u)
        dens = max(float(p(x, side="left")), float(p(x, side="right")))
        return Singularity(float(_horner(Fi, u)), x, order, dens)

    @property
    def support(self):
        vals = [v for _, _, _, a, b in self.branches for v in (a, b)]
        return min(vals), max(vals)

    @property
    def knots(self):
        """Image points where the density may be discontinuous or singular."""
        vals = {v for _, _, _, a, b in self.branches for v in (a, b)}
        return np.array(sorted(vals))

    def _solve(self, j, t):
        """Branch solution ``u`` of ``f = t`` and ``f'(u)``.

        The root is sought in powers of the distance to the branch end whose
        image is closer to ``t``, with the constant term ``f(end) - t``
        formed directly; near a critical point this keeps full relative
        accuracy in the distance to the critical point.
        """
        i, lo, hi, f_lo, f_hi = self.branches[j]
        Clo, Chi = self._ends[j]
        t = np.asarray(t, dtype=float)
        u = np.full(t.size, lo)
        df = np.full(t.size, Clo[1])
        near_lo = np.abs(t - f_lo) <= np.abs(t - f_hi)
        for end, C0, fe, mask, a, b in (
            (lo, Clo, f_lo, near_lo, 0.0, hi - lo),
            (hi, Chi, f_hi, ~near_lo, lo - hi, 0.0),
        ):
            n = int(mask.sum())
            if not n:
                continue
            C = np.tile(C0, (n, 1))
            C[:, 0] = fe - t[mask]
            v = np.where(C[:, 0] == 0.0, 0.0, np.nan)
            todo = np.isnan(v)
            if todo.any():
                k = int(todo.sum())
                fa = _horner(C[todo], np.full(k, a))
                v[todo] = _bracketed_newton(C[todo], np.full(k, a), np.full(k, b), fa, relative=True)
            u[mask] = end + v
            df[mask] = _horner_with_derivative(C, v)[1]
        return u, df

    def _in_branch(self, j, t):
        # half-open in the source variable: x in [lo, hi)
        _, _, _, f_lo, f_hi = self.branches[j]
        if f_hi > f_lo:
            return (t >= f_lo) & (t < f_hi)
        return (t <= f_lo) & (t > f_hi)

    def pdf_offset(self, base, d=0.0):
        """Density at ``base + d`` for scalar ``base`` and offset ``d``.

        The offset is never added to ``base`` before the distance to a
        branch end is formed, so when ``base`` is a critical value the
        distance ``d`` keeps full relative accuracy however small it is.
        """
        base, d = float(base), float(d)
        t = base + d
        if d == 0.0 and t in self._singular_t:
            return math.inf
        total = 0.0
        for i, lo, hi, f_lo, f_hi, Clo, Chi, rc in self._scalar:
            below = (base - min(f_lo, f_hi)) + d
            above = (max(f_lo, f_hi) - base) - d
            if below < 0 or above < 0:
                continue
            if (below == 0 or above == 0) and not ((f_lo <= t < f_hi) if f_hi > f_lo else (f_hi < t <= f_lo)):
                continue
            if abs(t - f_lo) <= abs(t - f_hi):
                v, df = _newton_scalar(Clo, (f_lo - base) - d, 0.0, hi - lo)
                u = lo + v
            else:
                v, df = _newton_scalar(Chi, (f_hi - base) - d, lo - hi, 0.0)
                u = hi + v
            rho = 0.0
            for c in reversed(rc):
                rho = rho * u + c
            if rho > 0 and df != 0.0:
                total += rho / abs(df)
            elif rho > 0:
                return math.inf
        return total

    def pdf(self, t):
        if isinstance(t, (float, int)) and not isinstance(t, bool):
            return self.pdf_offset(t)
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        out = np.zeros(flat.size)
        for j, (i, lo, hi, f_lo, f_hi) in enumerate(self.branches):
            inside = self._in_branch(j, flat)
            if not inside.any():
                continue
            u, df = self._solve(j, flat[inside])
            rho = _horner(self._rho.coeffs[i], u)
            with np.errstate(divide="ignore", invalid="ignore"):
                val = np.where(rho > 0, rho / np.abs(df), 0.0)
            out[inside] += val
        for s in self.singularities:
            out[flat == s.t] = np.inf
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        out = np.zeros(flat.size)
        for j, (i, lo, hi, f_lo, f_hi) in enumerate(self.branches):
            tmin, tmax = min(f_lo, f_hi), max(f_lo, f_hi)
            out[flat >= tmax] += self._branch_mass[j]
            inside = (flat > tmin) & (flat < tmax)
            if not inside.any():
                continue
            u, _ = self._solve(j, flat[inside])
            A = self._rho_int[i]
            if f_hi > f_lo:
                out[inside] += _horner(A, u) - _horner(A, lo)
            else:
                out[inside] += _horner(A, hi) - _horner(A, u)
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def mass(self, intervals):
        """Mass of a finite union of disjoint closed intervals."""
        total = 0.0
        for a, b in intervals:
            if b > a:
                total += float(self.cdf(b) - self.cdf(a))
        return total

    def branch_integral(self, func, p=1.0):
        """``int rho_f(t)^p dt`` computed in the source variable.

        Substituting ``t = f(x)`` on each branch gives
        ``int rho(x)^p |f'(x)|^(1-p) dx``; ``func`` is the quadrature routine
        ``func(g, lo, hi) -> (value, abserr)``.
        """
        total, err = 0.0, 0.0
        for i, lo, hi, _, _ in self.branches:
            Fi = self._F[i]
            R = self._rho.coeffs[i]

            def g(u, Fi=Fi, R=R):
                _, df = _horner_with_derivative(Fi, u)
                r = max(float(_horner(R, u)), 0.0)
                if r == 0.0:
                    return 0.0
                return r ** p * abs(float(df)) ** (1.0 - p)

            v, e = func(g, lo, hi)
            total += v
            err += e
        return total, err


def pushforward_poly_1d(mu: BVDensity, f) -> DensityEvaluator:
    """Exact image density of ``mu`` under the polynomial with ascending coefficients ``f``."""
    return DensityEvaluator(mu, f)
