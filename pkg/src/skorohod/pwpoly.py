"""Exact piecewise-polynomial functions on the real line.

A :class:`PiecewisePoly` is zero outside ``[breakpoints[0], breakpoints[-1]]``
and polynomial on each open interval between consecutive breakpoints.  Each
piece stores ascending coefficients in powers of ``(x - midpoint)`` of its own
interval, which keeps coefficient growth under control when pieces sit far
from the origin or after repeated convolution.

Everything here is exact up to floating point: integrals use antiderivatives,
convolution uses iterated antiderivatives, and variation/extrema use the real
roots of the piece derivatives.
"""
from __future__ import annotations

import json
from typing import NamedTuple

import numpy as np

DEGREE_CAP = 16
MERGE_TOL = 1e-12
ROOT_TOL = 1e-12


class DegreeCapError(ValueError):
    """A piece would exceed the configured polynomial degree cap."""


# ---------------------------------------------------------------------------
# vectorised polynomial kernels; rows are independent polynomials
# ---------------------------------------------------------------------------

def _horner(C, u):
    """Evaluate each row of ``C`` at the matching entry of ``u``."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(np.broadcast(C[..., 0], u).shape)
    for k in range(C.shape[-1] - 1, -1, -1):
        out = out * u + C[..., k]
    return out


def _horner_with_derivative(C, u):
    f = np.zeros(np.broadcast(C[..., 0], u).shape)
    df = np.zeros_like(f)
    for k in range(C.shape[-1] - 1, -1, -1):
        df = df * u + f
        f = f * u + C[..., k]
    return f, df


def _derivative_coeffs(C):
    if C.shape[-1] == 1:
        return np.zeros_like(C)
    k = np.arange(1, C.shape[-1], dtype=float)
    return C[..., 1:] * k


def _taylor_shift(C, delta):
    """Coefficients of ``p(u + delta)`` for each row polynomial ``p``."""
    C = np.array(C, dtype=float, copy=True)
    delta = np.asarray(delta, dtype=float)
    D = C.shape[-1] - 1
    for k in range(D):
        for j in range(D - 1, k - 1, -1):
            C[..., j] += delta * C[..., j + 1]
    return C


def _pad(C, width):
    if C.shape[-1] >= width:
        return C
    pad = np.zeros(C.shape[:-1] + (width - C.shape[-1],))
    return np.concatenate([C, pad], axis=-1)


def _bracketed_newton(C, lo, hi, flo, relative=False):
    """Root of each row on ``[lo, hi]`` given a sign change; bisection-safeguarded Newton.

    With ``relative`` the stopping rule is relative to the root itself, for
    roots that sit very close to zero.
    """
    lo = lo.copy()
    hi = hi.copy()
    flo = flo.copy()
    x = 0.5 * (lo + hi)
    scale = np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    for _ in range(200):
        f, df = _horner_with_derivative(C, x)
        same = np.sign(f) == np.sign(flo)
        lo = np.where(same, x, lo)
        flo = np.where(same, f, flo)
        hi = np.where(same, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - f / df
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        xn = np.where(ok, newton, 0.5 * (lo + hi))
        xn = np.where(f == 0.0, x, xn)
        if relative:
            scale = np.maximum(np.abs(xn), 1e-300)
        done = (np.abs(xn - x) <= ROOT_TOL * 1e-3 * scale) | (hi - lo <= ROOT_TOL * 1e-3 * scale)
        x = xn
        if done.all():
            break
    return x


def _quadratic_roots(C, lo, hi):
    """Closed-form real roots of rows ``c0 + c1 u + c2 u^2`` inside ``[lo, hi]``."""
    c0, c1, c2 = C[:, 0], C[:, 1], C[:, 2]
    N = C.shape[0]
    out = np.full((N, 2), np.nan)
    quad = c2 != 0
    lin = ~quad & (c1 != 0)
    if lin.any():
        out[lin, 0] = -c0[lin] / c1[lin]
    if quad.any():
        a, b, c = c2[quad], c1[quad], c0[quad]
        disc = b * b - 4 * a * c
        real = disc >= 0
        sq = np.sqrt(np.where(real, disc, 0.0))
        q = -0.5 * (b + np.where(b >= 0, sq, -sq))
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.where(q != 0, q / a, 0.0)
            r2 = np.where(q != 0, c / q, 0.0)
        r1 = np.where(real, r1, np.nan)
        r2 = np.where(real, r2, np.nan)
        sub = np.stack([r1, r2], axis=1)
        # two Newton polish steps
        rows = C[quad]
        for _ in range(2):
            f, df = _horner_with_derivative(rows[:, None, :], sub)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(df != 0, f / df, 0.0)
            sub = np.where(np.isfinite(step), sub - step, sub)
        out[quad] = sub
    inside = (out >= lo[:, None]) & (out <= hi[:, None])
    out = np.where(inside, out, np.nan)
    return np.sort(out, axis=1)


def _dedupe_sorted(R):
    if R.shape[1] < 2:
        return R
    R = R.copy()
    scale = np.maximum(1.0, np.abs(R))
    for j in range(1, R.shape[1]):
        dup = np.abs(R[:, j] - R[:, j - 1]) <= 1e-13 * scale[:, j]
        R[dup, j] = np.nan
        R = np.sort(R, axis=1)
    return R


def _roots_in_interval(C, lo, hi):
    """Real roots of each row polynomial inside its closed interval.

    Returns an ``(N, K)`` array of sorted roots padded with NaN, where ``K``
    is the padded degree.  Rows that vanish identically report no roots.
    Degrees one and two use closed forms; higher degrees isolate roots on the
    monotone segments delimited by the derivative's roots and refine each with
    bracketed Newton.
    """
    C = np.asarray(C, dtype=float)
    N, K1 = C.shape
    K = K1 - 1
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if K == 0 or N == 0:
        return np.full((N, K), np.nan)
    if K == 1:
        out = np.full((N, 1), np.nan)
        nz = C[:, 1] != 0
        r = np.full(N, np.nan)
        r[nz] = -C[nz, 0] / C[nz, 1]
        inside = (r >= lo) & (r <= hi)
        out[inside, 0] = r[inside]
        return out
    # rows whose constant term dominates the rest on the interval have no roots
    r = np.maximum(np.abs(lo), np.abs(hi))
    bound = _horner(np.abs(C[:, 1:]), r) * r
    live = ~(np.abs(C[:, 0]) > bound * (1.0 + 1e-12))
    if not live.all():
        out = np.full((N, K), np.nan)
        if live.any():
            out[live] = _roots_in_interval_dense(C[live], lo[live], hi[live])
        return out
    return _roots_in_interval_dense(C, lo, hi)


def _roots_in_interval_dense(C, lo, hi):
    N, K1 = C.shape
    K = K1 - 1
    if K == 2:
        return _dedupe_sorted(_quadratic_roots(C, lo, hi))

    zero_rows = ~np.any(C, axis=1)
    crit = _roots_in_interval(_derivative_coeffs(C), lo, hi)
    E = np.concatenate([lo[:, None], crit, hi[:, None]], axis=1)
    E = np.where(np.isnan(E), hi[:, None], E)
    E = np.sort(E, axis=1)
    F = _horner(C[:, None, :], E)
    roots = np.full((N, K + 1), np.nan)
    # exact zeros at segment ends
    zero_at = F == 0.0
    roots[:, : K + 1] = np.where(zero_at, E, np.nan)
    extra = []
    for j in range(K):
        a, b = E[:, j], E[:, j + 1]
        fa, fb = F[:, j], F[:, j + 1]
        sc = (np.sign(fa) * np.sign(fb) < 0) & (b > a)
        col = np.full(N, np.nan)
        if sc.any():
            col[sc] = _bracketed_newton(C[sc], a[sc], b[sc], fa[sc])
        extra.append(col)
    allr = np.concatenate([roots, np.stack(extra, axis=1)], axis=1)
    allr = np.sort(allr, axis=1)
    allr = _dedupe_sorted(allr)[:, :K]
    allr[zero_rows] = np.nan
    return allr


def _merge_points(x, tol=MERGE_TOL):
    x = np.sort(np.asarray(x, dtype=float))
    if x.size == 0:
        return x
    keep = np.ones(x.size, dtype=bool)
    gap = np.diff(x) > tol * np.maximum(1.0, np.abs(x[1:]))
    keep[1:] = gap
    return x[keep]


# ---------------------------------------------------------------------------
# the value type
# ---------------------------------------------------------------------------

class RootSet(NamedTuple):
    points: np.ndarray
    intervals: list


class PiecewisePoly:
    """Piecewise polynomial with compact support and possible jumps at breakpoints.

    Args:
        breakpoints: strictly increasing sequence of length ``m + 1``.
        pieces: ``m`` coefficient sequences, ascending powers of ``x - mid``
            where ``mid`` is the midpoint of the piece's interval.
        degree_cap: maximal allowed piece degree.
    """

    __slots__ = ("breakpoints", "coeffs", "degree_cap")

    def __init__(self, breakpoints, pieces, degree_cap=DEGREE_CAP):
        bp = np.array(breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(bp)):
            raise ValueError("breakpoints must be finite")
        if isinstance(pieces, np.ndarray) and pieces.ndim == 2:
            C = np.array(pieces, dtype=float)
        else:
            pieces = [np.atleast_1d(np.asarray(c, dtype=float)) for c in pieces]
            width = max(len(c) for c in pieces) if pieces else 1
            C = np.zeros((len(pieces), width))
            for i, c in enumerate(pieces):
                C[i, : len(c)] = c
        if C.shape[0] != bp.size - 1:
            raise ValueError(f"{bp.size - 1} pieces expected, got {C.shape[0]}")
        if not np.all(np.isfinite(C)):
            raise ValueError("coefficients must be finite")
        # trim all-zero top columns
        while C.shape[1] > 1 and not np.any(C[:, -1]):
            C = C[:, :-1]
        if C.shape[1] - 1 > degree_cap:
            raise DegreeCapError(f"degree {C.shape[1] - 1} exceeds cap {degree_cap}")
        bp.setflags(write=False)
        C.setflags(write=False)
        self.breakpoints = bp
        self.coeffs = C
        self.degree_cap = degree_cap

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_global(cls, breakpoints, pieces, degree_cap=DEGREE_CAP):
        """Build from coefficients in powers of ``x`` itself (not ``x - mid``)."""
        bp = np.asarray(breakpoints, dtype=float)
        mids = 0.5 * (bp[:-1] + bp[1:])
        width = max(len(np.atleast_1d(c)) for c in pieces)
        C = np.zeros((len(pieces), width))
        for i, c in enumerate(pieces):
            c = np.atleast_1d(np.asarray(c, dtype=float))
            C[i, : len(c)] = c
        return cls(bp, _taylor_shift(C, mids), degree_cap)

    @classmethod
    def constant(cls, a, b, value):
        return cls([a, b], [[value]])

    @classmethod
    def piecewise_linear(cls, x, left, right=None):
        """Linear interpolation between knots.

        ``left[i]``/``right[i]`` are the values at the left and right ends of
        piece ``i``; when ``right`` is omitted, ``left`` is read as knot values
        of a continuous interpolant (length ``len(x)``).
        """
        x = np.asarray(x, dtype=float)
        if right is None:
            v = np.asarray(left, dtype=float)
            left, right = v[:-1], v[1:]
        left = np.asarray(left, dtype=float)
        right = np.asarray(right, dtype=float)
        w = np.diff(x)
        C = np.stack([0.5 * (left + right), (right - left) / w], axis=1)
        return cls(x, C)

    # -- basic accessors -----------------------------------------------------

    @property
    def n_pieces(self):
        return self.coeffs.shape[0]

    @property
    def degree(self):
        return self.coeffs.shape[1] - 1

    @property
    def mids(self):
        return 0.5 * (self.breakpoints[:-1] + self.breakpoints[1:])

    @property
    def half_widths(self):
        return 0.5 * np.diff(self.breakpoints)

    @property
    def support(self):
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def pieces(self):
        return [np.trim_zeros(row, "b") if np.any(row) else row[:1] for row in self.coeffs]

    def is_piecewise_linear(self):
        return self.degree <= 1

    def global_pieces(self):
        """Coefficients of each piece in powers of ``x``."""
        return _taylor_shift(self.coeffs, -self.mids)

    def __repr__(self):
        return f"PiecewisePoly(n_pieces={self.n_pieces}, degree={self.degree}, support={self.support})"

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x, side="right"):
        return evaluate(self, x, side)

    def one_sided_limits(self):
        """Left and right limits at every breakpoint (zero outside the support)."""
        hw = self.half_widths
        at_left = _horner(self.coeffs, -hw)
        at_right = _horner(self.coeffs, hw)
        left = np.concatenate([[0.0], at_right])
        right = np.concatenate([at_left, [0.0]])
        return left, right

    # -- algebra -------------------------------------------------------------

    def _refine(self, bp):
        """Coefficients on a finer breakpoint grid (must cover or extend the support)."""
        mids = 0.5 * (bp[:-1] + bp[1:])
        idx = np.searchsorted(self.breakpoints, mids, side="right") - 1
        inside = (idx >= 0) & (idx < self.n_pieces)
        C = np.zeros((mids.size, self.coeffs.shape[1]))
        ii = idx[inside]
        C[inside] = _taylor_shift(self.coeffs[ii], mids[inside] - self.mids[ii])
        return C

    def __add__(self, other):
        if isinstance(other, PiecewisePoly):
            bp = _merge_points(np.concatenate([self.breakpoints, other.breakpoints]))
            A, B = self._refine(bp), other._refine(bp)
            width = max(A.shape[1], B.shape[1])
            return PiecewisePoly(bp, _pad(A, width) + _pad(B, width), self.degree_cap)
        return NotImplemented

    def __neg__(self):
        return PiecewisePoly(self.breakpoints, -self.coeffs, self.degree_cap)

    def __sub__(self, other):
        if isinstance(other, PiecewisePoly):
            return self + (-other)
        return NotImplemented

    def __mul__(self, s):
        if np.isscalar(s):
            return PiecewisePoly(self.breakpoints, self.coeffs * float(s), self.degree_cap)
        return NotImplemented

    __rmul__ = __mul__

    def derivative(self):
        """Piecewise derivative (jumps are not included)."""
        return PiecewisePoly(self.breakpoints, _derivative_coeffs(self.coeffs), self.degree_cap)

    # -- serialisation -------------------------------------------------------

    def to_dict(self):
        return {
            "breakpoints": [float(b) for b in self.breakpoints],
            "pieces": [[float(c) for c in row] for row in self.pieces],
            "basis": "midpoint",
        }

    @classmethod
    def from_dict(cls, d):
        basis = d.get("basis", "global")
        if basis == "midpoint":
            return cls(d["breakpoints"], d["pieces"])
        if basis == "global":
            return cls.from_global(d["breakpoints"], d["pieces"])
        raise ValueError(f"unknown basis {basis!r}")

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def evaluate(p: PiecewisePoly, x, side="right"):
    """Evaluate ``p`` at ``x``.

    At a breakpoint the right limit is returned (``side="left"`` gives the
    left limit); at the final breakpoint the left limit is used so that the
    closed support carries its boundary value.
    """
    x = np.asarray(x, dtype=float)
    bp = p.breakpoints
    m = p.n_pieces
    if side == "right":
        idx = np.searchsorted(bp, x, side="right") - 1
        idx = np.where(x == bp[-1], m - 1, idx)
    elif side == "left":
        idx = np.searchsorted(bp, x, side="left") - 1
        idx = np.where(x == bp[0], 0, idx)
    else:
        raise ValueError("side must be 'left' or 'right'")
    inside = (idx >= 0) & (idx < m)
    safe = np.clip(idx, 0, m - 1)
    val = _horner(p.coeffs[safe], x - p.mids[safe])
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def _piece_integrals(C, hw):
    """Integral of each row over ``[-hw, hw]``."""
    k = np.arange(C.shape[1])
    even = k % 2 == 0
    powers = hw[:, None] ** (k + 1)
    return np.sum(np.where(even, 2 * C * powers / (k + 1), 0.0), axis=1)


def integral(p: PiecewisePoly, a=None, b=None):
    """Exact integral of ``p`` over ``[a, b]`` (defaults: the whole support)."""
    if a is None and b is None:
        return float(np.sum(_piece_integrals(p.coeffs, p.half_widths)))
    lo, hi = p.support
    a = lo if a is None else a
    b = hi if b is None else b
    if b < a:
        return -integral(p, b, a)
    a, b = max(a, lo), min(b, hi)
    if b <= a:
        return 0.0
    P = antiderivative(p)
    return float(P(b, side="left") - P(a, side="left"))


def antiderivative(p: PiecewisePoly):
    """Continuous antiderivative vanishing at the left end of the support.

    The result is only meaningful on the support; beyond it use
    :func:`_antiderivative_tower` which also carries the polynomial tail.
    """
    tower = _antiderivative_tower(p, 1)
    C, _ = tower[0]
    return PiecewisePoly(p.breakpoints, C, p.degree_cap + 1)


def _antiderivative_tower(p, depth):
    """Iterated antiderivatives ``P_1 .. P_depth`` of ``p`` starting from zero on the left.

    Each entry is ``(C, tail)`` where ``C`` holds piece coefficients (about
    piece midpoints) and ``tail`` the polynomial valid for ``x >= end`` in
    powers of ``x - end``.
    """
    hw = p.half_widths
    C = p.coeffs
    tail = np.zeros(1)
    out = []
    for _ in range(depth):
        k = np.arange(1, C.shape[1] + 1, dtype=float)
        A = np.zeros((C.shape[0], C.shape[1] + 1))
        A[:, 1:] = C / k
        inc = _horner(A, hw) - _horner(A, -hw)
        left_vals = np.concatenate([[0.0], np.cumsum(inc)[:-1]])
        A[:, 0] = left_vals - _horner(A, -hw)
        end_val = _horner(A[-1], hw[-1])
        kt = np.arange(1, tail.size + 1, dtype=float)
        new_tail = np.zeros(tail.size + 1)
        new_tail[1:] = tail / kt
        new_tail[0] = end_val
        out.append((A, new_tail))
        C, tail = A, new_tail
    return out


def _jump_table(q: PiecewisePoly):
    """Jumps of every derivative order of ``q`` at every breakpoint.

    Returns an array ``J`` of shape ``(m + 1, deg + 1)`` with
    ``J[k, i] = q^{(i)}(c_k+) - q^{(i)}(c_k-)``.
    """
    hw = q.half_widths
    D = q.degree
    m = q.n_pieces
    J = np.zeros((m + 1, D + 1))
    C = q.coeffs
    for i in range(D + 1):
        right_at_left = _horner(C, -hw)
        left_at_right = _horner(C, hw)
        J[:m, i] += right_at_left
        J[1:, i] -= left_at_right
        C = _derivative_coeffs(C)
    return J


def convolve(p: PiecewisePoly, q: PiecewisePoly, degree_cap=DEGREE_CAP):
    """Exact convolution ``(p * q)(t) = int p(x) q(t - x) dx``.

    Repeated integration by parts gives
    ``p * q = sum_k sum_i J[k, i] P_{i+1}(t - c_k)`` where ``c_k`` are the
    breakpoints of ``q``, ``J[k, i]`` the jump of ``q^{(i)}`` there and
    ``P_r`` the ``r``-th antiderivative of ``p``.  Each output piece lies
    between consecutive points of ``{b + c_k}``, so every shifted
    antiderivative restricts to one polynomial there.
    """
    out_deg = p.degree + q.degree + 1
    if out_deg > degree_cap:
        raise DegreeCapError(f"convolution degree {out_deg} exceeds cap {degree_cap}")
    if not np.any(p.coeffs) or not np.any(q.coeffs):
        lo = p.breakpoints[0] + q.breakpoints[0]
        hi = p.breakpoints[-1] + q.breakpoints[-1]
        return PiecewisePoly([lo, hi], [[0.0]], degree_cap)

    J = _jump_table(q)
    knots = q.breakpoints
    tower = _antiderivative_tower(p, q.degree + 1)
    bp = _merge_points((p.breakpoints[:, None] + knots[None, :]).ravel())
    mids = 0.5 * (bp[:-1] + bp[1:])
    width = out_deg + 1
    out = np.zeros((mids.size, width))
    pb = p.breakpoints
    pm = p.mids
    end = pb[-1]
    for i in range(q.degree + 1):
        A, tail = tower[i]
        A = _pad(A, width)
        tail = _pad(tail, width)
        for k in range(knots.size):
            jump = J[k, i]
            if jump == 0.0:
                continue
            y = mids - knots[k]
            idx = np.searchsorted(pb, y, side="right") - 1
            body = (idx >= 0) & (idx < p.n_pieces)
            beyond = idx >= p.n_pieces
            if body.any():
                ii = idx[body]
                out[body] += jump * _taylor_shift(A[ii], y[body] - pm[ii])
            if beyond.any():
                T = np.broadcast_to(tail, (int(beyond.sum()), width))
                out[beyond] += jump * _taylor_shift(T, y[beyond] - end)
    return PiecewisePoly(bp, out, degree_cap)


def affine_pushforward(p: PiecewisePoly, s, c=0.0):
    """Density of ``s X + c`` when ``p`` is the density of ``X``."""
    s = float(s)
    if s == 0.0:
        raise ValueError("scale must be nonzero")
    D = p.coeffs.shape[1]
    # q(y) = p((y - c)/s)/|s|; local variable scales by 1/s
    scale = (1.0 / s) ** np.arange(D)
    C = p.coeffs * scale / abs(s)
    bp = s * p.breakpoints + c
    if s < 0:
        bp = bp[::-1]
        C = C[::-1]
    return PiecewisePoly(bp, C, p.degree_cap)


def shift(p: PiecewisePoly, h):
    """The function ``x -> p(x + h)``."""
    return PiecewisePoly(p.breakpoints - h, p.coeffs, p.degree_cap)


def _critical_points(p: PiecewisePoly):
    """Roots of each piece derivative in local coordinates, ``(m, deg-1)`` NaN padded."""
    hw = p.half_widths
    dC = _derivative_coeffs(p.coeffs)
    if p.degree <= 1:
        return np.zeros((p.n_pieces, 0))
    return _roots_in_interval(dC, -hw, hw)


def variation(p: PiecewisePoly):
    """Pointwise total variation on the whole line.

    Sums the variation inside each piece (split at derivative roots), the
    jumps at interior breakpoints, and the jumps to zero at both support ends.
    """
    hw = p.half_widths
    left, right = p.one_sided_limits()
    total = float(np.sum(np.abs(right - left)))
    if p.degree == 0:
        return total
    crit = _critical_points(p)
    E = np.concatenate([-hw[:, None], crit, hw[:, None]], axis=1)
    E = np.where(np.isnan(E), hw[:, None], E)
    E = np.sort(E, axis=1)
    V = _horner(p.coeffs[:, None, :], E)
    return total + float(np.sum(np.abs(np.diff(V, axis=1))))


def extrema(p: PiecewisePoly):
    """``(max value, argmax)``, counting one-sided limits at breakpoints."""
    hw = p.half_widths
    crit = _critical_points(p)
    E = np.concatenate([-hw[:, None], crit, hw[:, None]], axis=1)
    V = _horner(p.coeffs[:, None, :], np.nan_to_num(E, nan=0.0))
    V = np.where(np.isnan(E), -np.inf, V)
    i, j = np.unravel_index(np.argmax(V), V.shape)
    best = float(V[i, j])
    if best < 0.0:
        # zero outside the support
        return 0.0, float(p.breakpoints[-1] + 1.0)
    return best, float(p.mids[i] + E[i, j])


def minimum(p: PiecewisePoly):
    """Minimum over the support (one-sided limits included)."""
    hw = p.half_widths
    crit = _critical_points(p)
    E = np.concatenate([-hw[:, None], crit, hw[:, None]], axis=1)
    V = _horner(p.coeffs[:, None, :], np.nan_to_num(E, nan=0.0))
    V = np.where(np.isnan(E), np.inf, V)
    return float(V.min())


def real_roots(p: PiecewisePoly, t=0.0):
    """Solutions of ``p(x) = t`` on the support.

    Returns a :class:`RootSet`; pieces identically equal to ``t`` are
    reported in ``intervals`` instead of as points.  Jumps across ``t`` at a
    breakpoint are not roots.
    """
    hw = p.half_widths
    C = np.array(p.coeffs, copy=True)
    C[:, 0] -= t
    flat = ~np.any(C, axis=1)
    intervals = [(float(p.breakpoints[i]), float(p.breakpoints[i + 1])) for i in np.flatnonzero(flat)]
    if p.degree == 0:
        return RootSet(np.zeros(0), intervals)
    R = (_roots_in_interval(C, -hw, hw) + p.mids[:, None])[~flat]
    pts = R[~np.isnan(R)]
    return RootSet(_merge_points(pts, 1e-13), intervals)


def abs_integral(p: PiecewisePoly):
    """Exact ``int |p|``, splitting pieces at their sign changes."""
    hw = p.half_widths
    if p.degree == 0:
        return float(np.sum(np.abs(p.coeffs[:, 0]) * 2 * hw))
    R = _roots_in_interval(p.coeffs, -hw, hw)
    E = np.concatenate([-hw[:, None], R, hw[:, None]], axis=1)
    E = np.where(np.isnan(E), hw[:, None], E)
    E = np.sort(E, axis=1)
    k = np.arange(1, p.coeffs.shape[1] + 1, dtype=float)
    A = np.zeros((p.n_pieces, p.coeffs.shape[1] + 1))
    A[:, 1:] = p.coeffs / k
    F = _horner(A[:, None, :], E)
    return float(np.sum(np.abs(np.diff(F, axis=1))))


def power_integral(p: PiecewisePoly, k: int):
    """Exact ``int p^k`` for a positive integer ``k``."""
    from numpy.polynomial import polynomial as P

    total = 0.0
    for row, h in zip(p.coeffs, p.half_widths):
        c = P.polypow(row, k)
        a = P.polyint(c)
        total += P.polyval(h, a) - P.polyval(-h, a)
    return float(total)
