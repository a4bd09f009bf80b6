"""Product measures on R^n and their one- and low-dimensional images.

Linear functionals of a product measure have exact piecewise-polynomial
densities, obtained by convolving the rescaled factor densities.  Projections
to ``k <= 3`` dimensions and polynomial images are estimated from seeded
samples and returned as :class:`GridDensity` histograms.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import measures1d, pwpoly
from .measures1d import BVDensity, UniformMixture
from .multilinear import SymmetricPolynomial, eval_poly
from .pwpoly import PiecewisePoly

CELL_CAP = 100_000
UNIT_TOL = 1e-10
DEFAULT_BINS = 512
CHUNK = 1 << 16
GENERATOR = "numpy.PCG64/SeedSequence"


class CellCapError(RuntimeError):
    """The product of per-factor component counts exceeds the enumeration cap."""


def default_threads():
    """Worker count from ``SKOROHOD_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SKOROHOD_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(eq=False)
class ProductMeasure:
    """``mu_1 x ... x mu_n`` with optional cached mixture decompositions per factor."""

    factors: list
    mixtures: list = None

    def __post_init__(self):
        self.factors = list(self.factors)
        if not self.factors:
            raise ValueError("a product measure needs at least one factor")
        for j, f in enumerate(self.factors):
            if not isinstance(f, BVDensity):
                raise TypeError(f"factor {j} is not a BVDensity")
        if self.mixtures is None:
            self.mixtures = [None] * len(self.factors)
        if len(self.mixtures) != len(self.factors):
            raise ValueError("one mixture slot per factor is required")

    @classmethod
    def from_mixtures(cls, mixtures):
        mixtures = list(mixtures)
        return cls([measures1d.reconstruct(m) for m in mixtures], mixtures)

    @classmethod
    def uniform_cube(cls, n, half=0.5):
        return cls([BVDensity.uniform(-half, half) for _ in range(n)])

    @property
    def n(self):
        return len(self.factors)

    @property
    def tvs(self):
        return np.array([f.tv for f in self.factors])

    def mixture(self, j):
        """Decomposition of factor ``j``, computed once and cached."""
        if self.mixtures[j] is None:
            self.mixtures[j] = measures1d.decompose_mixture(self.factors[j])
        return self.mixtures[j]

    def derivative_bound(self, theta):
        """Upper bound ``sum |theta_j| ||mu_j'||`` on ``||D_theta mu||_TV``."""
        theta = np.asarray(theta, dtype=float)
        return float(np.abs(theta) @ self.tvs)

    def sup_derivative_bound(self):
        """``(sum ||mu_j'||^2)^(1/2)``, the maximum of :meth:`derivative_bound` over unit vectors."""
        return float(np.sqrt(np.sum(self.tvs ** 2)))

    def support_box(self):
        return np.array([f.support for f in self.factors], dtype=float)


def _check_unit(a, tol=UNIT_TOL):
    a = np.asarray(a, dtype=float).ravel()
    if abs(np.linalg.norm(a) - 1.0) > tol:
        raise ValueError(f"direction must be a unit vector, |a| = {np.linalg.norm(a)!r}")
    return a


def _cell_counts(mu: ProductMeasure, active):
    return [len(mu.mixtures[j]) if mu.mixtures[j] is not None else mu.factors[j].density.n_pieces
            for j in active]


def _component_density(m: UniformMixture, i):
    one = UniformMixture([1.0], [m.a[i]], [m.b[i]], [m.a_lo[i]], [m.a_hi[i]], [m.b_lo[i]], [m.b_hi[i]])
    return measures1d.reconstruct(one).density


def _sum_weighted(polys, weights):
    bp = pwpoly._merge_points(np.concatenate([p.breakpoints for p in polys]))
    cap = max(p.degree_cap for p in polys)
    width = max(p.coeffs.shape[1] for p in polys)
    C = np.zeros((bp.size - 1, width))
    for p, w in zip(polys, weights):
        r = p._refine(bp)
        C[:, : r.shape[1]] += w * r
    return PiecewisePoly(bp, C, cap)


def linear_image_exact(mu: ProductMeasure, a, cap=CELL_CAP, method="convolution"):
    """Exact density of ``<a, x>`` under the product measure.

    Args:
        mu: the product measure.
        a: unit vector of length ``n``; coordinates with ``a_j = 0`` are skipped.
        cap: bound on the product of per-factor cell counts (mixture
            components when a decomposition is cached, density pieces otherwise).
        method: ``"convolution"`` convolves the rescaled factor densities in
            turn, which by distributivity equals summing over all cells of
            the product mixture; ``"mixture"`` enumerates the cells of the
            product mixture explicitly and convolves one component per factor.

    Raises:
        CellCapError: when the cell count exceeds ``cap``.
    """
    a = _check_unit(a)
    if a.size != mu.n:
        raise ValueError(f"direction has length {a.size}, measure has {mu.n} factors")
    active = [j for j in range(mu.n) if a[j] != 0.0]
    if cap is not None and math.prod(_cell_counts(mu, active)) > cap:
        raise CellCapError(f"more than {cap} cells; use sampling instead")
    if method == "convolution":
        out = None
        for j in active:
            q = pwpoly.affine_pushforward(mu.factors[j].density, a[j], 0.0)
            out = q if out is None else pwpoly.convolve(out, q)
        return out
    if method != "mixture":
        raise ValueError(f"unknown method {method!r}")
    mixes = [mu.mixture(j) for j in active]
    scaled = [[pwpoly.affine_pushforward(_component_density(m, i), a[j], 0.0) for i in range(len(m))]
              for j, m in zip(active, mixes)]
    polys, weights = [], []
    for cell in itertools.product(*[range(len(m)) for m in mixes]):
        w = math.prod(float(m.weights[i]) for m, i in zip(mixes, cell))
        dens = None
        for j, i in enumerate(cell):
            q = scaled[j][i]
            dens = q if dens is None else pwpoly.convolve(dens, q)
        polys.append(dens)
        weights.append(w)
    return _sum_weighted(polys, weights)


def linear_image_range(mu: ProductMeasure, A):
    """Exact coordinate ranges of ``A x`` over the support box, shape ``(k, 2)``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    box = mu.support_box()
    lo = np.minimum(A * box[:, 0], A * box[:, 1]).sum(axis=1)
    hi = np.maximum(A * box[:, 0], A * box[:, 1]).sum(axis=1)
    return np.stack([lo, hi], axis=1)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _substream(seed, j, c):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(j), int(c)))
    return np.random.Generator(np.random.PCG64(ss))


def sample_product(mu: ProductMeasure, N: int, seed: int, threads=None) -> np.ndarray:
    """``N x n`` table of i.i.d. draws.

    Coordinate ``j`` in chunk ``c`` (rows ``c*CHUNK`` onwards) uses its own
    substream keyed by ``(seed, j, c)``, so the table does not depend on how
    chunks are scheduled across threads.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    mixes = [mu.mixture(j) for j in range(mu.n)]
    out = np.empty((N, mu.n))
    jobs = [(j, c) for j in range(mu.n) for c in range((N + CHUNK - 1) // CHUNK)]

    def run(job):
        j, c = job
        lo = c * CHUNK
        hi = min(N, lo + CHUNK)
        out[lo:hi, j] = measures1d.sample(mixes[j], hi - lo, _substream(seed, j, c))

    threads = default_threads() if threads is None else threads
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(run, jobs))
    else:
        for job in jobs:
            run(job)
    return out


# ---------------------------------------------------------------------------
# grid densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridDensity:
    """Histogram estimate of an image density in ``k <= 3`` dimensions.

    ``masses`` holds the fraction of samples in each cell, so
    ``masses.sum() + outside_mass == 1``.
    """

    edges: tuple
    masses: np.ndarray
    n_samples: int
    seed: int = None
    outside_mass: float = 0.0
    sample_min: np.ndarray = None
    sample_max: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        edges = tuple(np.asarray(e, dtype=float) for e in self.edges)
        masses = np.asarray(self.masses, dtype=float)
        if masses.ndim != len(edges):
            raise ValueError("one edge array per axis is required")
        for ax, e in enumerate(edges):
            if e.size != masses.shape[ax] + 1 or np.any(np.diff(e) <= 0):
                raise ValueError(f"edges on axis {ax} must be strictly increasing with one more entry than bins")
        if np.any(masses < 0):
            raise ValueError("masses must be nonnegative")
        if abs(masses.sum() + self.outside_mass - 1.0) > 1e-12:
            raise ValueError("masses and outside mass must sum to 1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "masses", masses)

    @classmethod
    def from_samples(cls, Y, bins=DEFAULT_BINS, window=None, seed=None, meta=None):
        """Histogram of the rows of ``Y`` (or of a 1-D sample array).

        Args:
            Y: samples, shape ``(N,)`` or ``(N, k)``.
            bins: bins per axis (int or sequence).
            window: per-axis ``(lo, hi)``; defaults to the sample range padded by 1%.
        """
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        N, k = Y.shape
        bins = [int(bins)] * k if np.isscalar(bins) else [int(b) for b in bins]
        ymin, ymax = Y.min(axis=0), Y.max(axis=0)
        if window is None:
            pad = 0.01 * np.maximum(ymax - ymin, 1e-12)
            window = np.stack([ymin - pad, ymax + pad], axis=1)
        window = np.atleast_2d(np.asarray(window, dtype=float))
        edges = [np.linspace(window[i, 0], window[i, 1], bins[i] + 1) for i in range(k)]
        H, _ = np.histogramdd(Y, bins=edges)
        inside = H.sum()
        return cls(tuple(edges), H / N, N, seed, float((N - inside) / N), ymin, ymax, dict(meta or {}))

    @property
    def k(self):
        return self.masses.ndim

    @property
    def widths(self):
        return [np.diff(e) for e in self.edges]

    @property
    def centers(self):
        return [0.5 * (e[:-1] + e[1:]) for e in self.edges]

    def cell_volume(self):
        vol = np.ones(self.masses.shape)
        for ax, w in enumerate(self.widths):
            shape = [1] * self.k
            shape[ax] = w.size
            vol = vol * w.reshape(shape)
        return vol

    def density(self):
        return self.masses / self.cell_volume()

    def marginal(self, axis):
        other = tuple(i for i in range(self.k) if i != axis)
        return GridDensity((self.edges[axis],), self.masses.sum(axis=other), self.n_samples, self.seed,
                           self.outside_mass, None, None, dict(self.meta))

    def to_dict(self):
        d = {
            "k": self.k,
            "edges": [e.tolist() for e in self.edges],
            "masses": self.masses.tolist(),
            "n_samples": int(self.n_samples),
            "seed": self.seed,
            "generator": GENERATOR,
            "outside_mass": self.outside_mass,
        }
        if self.sample_min is not None:
            d["sample_min"] = np.atleast_1d(self.sample_min).tolist()
            d["sample_max"] = np.atleast_1d(self.sample_max).tolist()
        d.update(self.meta)
        return d

    def to_json(self):
        return json.dumps(self.to_dict())

    def to_csv(self):
        """CSV with per-axis ``bin_left``/``bin_right`` columns and ``mass``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.k == 1:
            w.writerow(["bin_left", "bin_right", "mass"])
        else:
            w.writerow([f"{s}{ax}" for ax in range(self.k) for s in ("bin_left_", "bin_right_")] + ["mass"])
        for idx in itertools.product(*[range(n) for n in self.masses.shape]):
            row = []
            for ax, i in enumerate(idx):
                row += [f"{self.edges[ax][i]:.17g}", f"{self.edges[ax][i + 1]:.17g}"]
            w.writerow(row + [f"{self.masses[idx]:.17g}"])
        return buf.getvalue()


def _check_orthonormal(A, tol=UNIT_TOL):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    k = A.shape[0]
    if k > 3:
        raise ValueError("projections are supported for k <= 3")
    err = np.abs(A @ A.T - np.eye(k)).max()
    if err > tol:
        raise ValueError(f"rows of A are not orthonormal (max deviation {err:.3g})")
    return A


def projection_image(mu: ProductMeasure, A, N, seed, bins=None, threads=None) -> GridDensity:
    """Histogram of ``A x`` for a ``k x n`` matrix with orthonormal rows.

    The default window is the exact coordinate range of the image; the
    default bin count is 512 for ``k = 1``, 128 per axis for ``k = 2`` and
    32 per axis for ``k = 3``.
    """
    A = _check_orthonormal(A)
    if A.shape[1] != mu.n:
        raise ValueError(f"A has {A.shape[1]} columns, measure has {mu.n} factors")
    k = A.shape[0]
    if bins is None:
        bins = {1: DEFAULT_BINS, 2: 128, 3: 32}[k]
    X = sample_product(mu, N, seed, threads)
    Y = X @ A.T
    window = linear_image_range(mu, A)
    return GridDensity.from_samples(Y, bins, window, seed, {"map": "projection"})


def image_samples(mu: ProductMeasure, P: SymmetricPolynomial, N, seed, threads=None) -> np.ndarray:
    """``f(x)`` for ``N`` seeded draws ``x`` from the product measure."""
    if P.dim != mu.n:
        raise ValueError(f"polynomial has dimension {P.dim}, measure has {mu.n} factors")
    X = sample_product(mu, N, seed, threads)
    return eval_poly(P, X)


def polynomial_image(mu: ProductMeasure, P: SymmetricPolynomial, N, seed, bins=DEFAULT_BINS, window=None,
                     threads=None) -> GridDensity:
    """Histogram of ``f(x)``; records the sample range and the mass outside ``window``."""
    Y = image_samples(mu, P, N, seed, threads)
    return GridDensity.from_samples(Y, bins, None if window is None else [window], seed, {"map": "polynomial"})


def isotropic_map(A, L):
    """``(A L^2 A^T)^(-1/2) A L`` for a ``k x n`` matrix ``A`` and box side scales ``L``.

    If ``x`` has identity covariance, ``isotropic_map(A, L) @ x`` does too:
    this is the normalisation that turns the projection of a box into an
    isotropic measure.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    L = np.diag(np.asarray(L, dtype=float))
    M = A @ L @ L @ A.T
    vals, vecs = np.linalg.eigh(M)
    inv_sqrt = vecs @ np.diag(vals ** -0.5) @ vecs.T
    return inv_sqrt @ A @ L
