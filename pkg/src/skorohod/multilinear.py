"""Symmetric multilinear forms and polynomials on R^n.

A :class:`SymmetricForm` of degree ``j`` stores one tensor entry per sorted
multi-index ``i_1 <= ... <= i_j`` (0-based); all permutations of the index
share that entry.  A :class:`SymmetricPolynomial` is the sum of its forms
evaluated on the diagonal, ``f(x) = sum_j B_j(x, ..., x)``.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


def _multiplicity(idx):
    """Number of distinct orderings of a sorted multi-index."""
    counts = Counter(idx).values()
    return math.factorial(len(idx)) // math.prod(math.factorial(c) for c in counts)


class SymmetricForm:
    """Symmetric ``degree``-linear form on ``R^dim``.

    Args:
        dim: dimension ``n`` of the space.
        degree: number of arguments ``j``.
        entries: mapping from multi-index (any order) to tensor entry; entries
            for permutations of one index are summed into its sorted key.
    """

    def __init__(self, dim, degree, entries):
        self.dim = int(dim)
        self.degree = int(degree)
        store = {}
        for idx, c in dict(entries).items():
            key = tuple(sorted(int(i) for i in idx))
            if len(key) != self.degree:
                raise ValueError(f"index {idx} has length {len(key)}, expected {self.degree}")
            if key and (key[0] < 0 or key[-1] >= self.dim):
                raise ValueError(f"index {idx} out of range for dimension {self.dim}")
            store[key] = store.get(key, 0.0) + float(c)
        self.entries = {k: v for k, v in store.items() if v != 0.0}
        keys = sorted(self.entries)
        self._idx = np.array(keys, dtype=int).reshape(len(keys), self.degree)
        self._coef = np.array([self.entries[k] for k in keys], dtype=float)
        self._mult = np.array([_multiplicity(k) for k in keys], dtype=float)
        # monomial exponents of B(x, ..., x)
        E = np.zeros((len(keys), self.dim), dtype=int)
        for r, k in enumerate(keys):
            for i in k:
                E[r, i] += 1
        self._exp = E

    @classmethod
    def from_monomials(cls, dim, monomials):
        """Form whose diagonal is ``sum c * prod x_i^{e_i}`` for ``{exponents: c}``."""
        degree = None
        entries = {}
        for exps, c in dict(monomials).items():
            idx = tuple(i for i, e in enumerate(exps) for _ in range(int(e)))
            if degree is None:
                degree = len(idx)
            elif len(idx) != degree:
                raise ValueError("all monomials of a form must share one degree")
            entries[idx] = entries.get(idx, 0.0) + c / _multiplicity(tuple(sorted(idx)))
        return cls(dim, degree or 0, entries)

    @classmethod
    def from_tensor(cls, T):
        """Form from a dense tensor of shape ``(n,) * j``, averaged over index permutations."""
        T = np.asarray(T, dtype=float)
        n = T.shape[0] if T.ndim else 0
        entries = {}
        for idx in itertools.combinations_with_replacement(range(n), T.ndim):
            perms = set(itertools.permutations(idx))
            entries[idx] = sum(T[p] for p in perms) / len(perms)
        return cls(n, T.ndim, entries)

    def is_zero(self):
        return not self.entries

    def __mul__(self, s):
        return SymmetricForm(self.dim, self.degree, {k: v * s for k, v in self.entries.items()})

    __rmul__ = __mul__

    def diagonal(self, X):
        """``B(x, ..., x)`` for each row of ``X`` (or a single vector)."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.dim:
            raise ValueError(f"expected vectors of dimension {self.dim}, got {X.shape[1]}")
        if self.degree == 0:
            out = np.full(X.shape[0], self._coef.sum() if self._coef.size else 0.0)
        elif not self.entries:
            out = np.zeros(X.shape[0])
        else:
            mono = np.prod(X[:, self._idx], axis=2)
            out = mono @ (self._coef * self._mult)
        return float(out[0]) if single else out

    def gradient(self, x):
        """Gradient of ``x -> B(x, ..., x)``, equal to ``j * B(x, ..., x, .)``."""
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.dim)
        if self.degree == 0 or not self.entries:
            return g
        w = self._coef * self._mult
        for i in range(self.dim):
            e = self._exp[:, i]
            has = e > 0
            if not has.any():
                continue
            E = self._exp[has].copy()
            E[:, i] -= 1
            g[i] = np.sum(w[has] * e[has] * np.prod(x ** E, axis=1))
        return g

    def dense(self):
        T = np.zeros((self.dim,) * self.degree)
        for k, v in self.entries.items():
            for perm in set(itertools.permutations(k)):
                T[perm] = v
        return T

    def to_dict(self):
        return {
            "degree": self.degree,
            "entries": [{"idx": list(k), "coeff": v} for k, v in sorted(self.entries.items())],
        }

    @classmethod
    def from_dict(cls, dim, d):
        return cls(dim, d["degree"], {tuple(e["idx"]): e["coeff"] for e in d["entries"]})


def eval_form(B: SymmetricForm, *xs):
    """``B(x_1, ..., x_j)`` for ``j = B.degree`` vectors."""
    if len(xs) != B.degree:
        raise ValueError(f"form of degree {B.degree} takes {B.degree} arguments, got {len(xs)}")
    X = [np.asarray(x, dtype=float) for x in xs]
    for x in X:
        if x.shape != (B.dim,):
            raise ValueError(f"argument of shape {x.shape}, expected ({B.dim},)")
    if B.degree == 0:
        return float(B._coef.sum()) if B._coef.size else 0.0
    total = 0.0
    for key, c in B.entries.items():
        s = 0.0
        for perm in set(itertools.permutations(key)):
            s += math.prod(X[k][perm[k]] for k in range(B.degree))
        total += c * s
    return total


class SymmetricPolynomial:
    """Polynomial ``f(x) = sum_j B_j(x, ..., x)`` with leading form ``B_d != 0``."""

    def __init__(self, forms):
        forms = list(forms)
        if not forms:
            raise ValueError("need at least one form")
        dims = {B.dim for B in forms}
        if len(dims) != 1:
            raise ValueError("all forms must share one dimension")
        self.dim = dims.pop()
        by_degree = {}
        for B in forms:
            if B.degree in by_degree:
                merged = dict(by_degree[B.degree].entries)
                for k, v in B.entries.items():
                    merged[k] = merged.get(k, 0.0) + v
                B = SymmetricForm(self.dim, B.degree, merged)
            by_degree[B.degree] = B
        nonzero = [d for d, B in by_degree.items() if not B.is_zero()]
        if not nonzero:
            raise ValueError("the polynomial vanishes identically")
        self.degree = max(nonzero)
        self.forms = [by_degree.get(j, SymmetricForm(self.dim, j, {})) for j in range(self.degree + 1)]

    @property
    def leading(self):
        return self.forms[-1]

    @classmethod
    def from_monomials(cls, dim, monomials):
        """Polynomial from ``{exponent tuple: coefficient}``."""
        groups = {}
        for exps, c in dict(monomials).items():
            groups.setdefault(int(sum(exps)), {})[tuple(exps)] = c
        forms = []
        for j, mons in groups.items():
            if j == 0:
                forms.append(SymmetricForm(dim, 0, {(): sum(mons.values())}))
            else:
                forms.append(SymmetricForm.from_monomials(dim, mons))
        return cls(forms)

    @classmethod
    def linear(cls, a, b=0.0):
        a = np.asarray(a, dtype=float)
        n = a.size
        return cls([SymmetricForm(n, 0, {(): b}), SymmetricForm(n, 1, {(i,): a[i] for i in range(n)})])

    def __call__(self, X):
        return eval_poly(self, X)

    def __mul__(self, s):
        return SymmetricPolynomial([B * s for B in self.forms])

    __rmul__ = __mul__

    def shifted(self, c):
        """The polynomial ``f + c``."""
        forms = list(self.forms)
        forms[0] = SymmetricForm(self.dim, 0, {(): (forms[0]._coef.sum() if forms[0]._coef.size else 0.0) + c})
        return SymmetricPolynomial(forms)

    def univariate_coeffs(self):
        """Ascending coefficients when ``dim == 1``."""
        if self.dim != 1:
            raise ValueError("only defined in dimension one")
        return np.array([B.diagonal(np.ones(1)) for B in self.forms])

    def to_dict(self):
        return {"dim": self.dim, "degree": self.degree, "forms": [B.to_dict() for B in self.forms]}

    @classmethod
    def from_dict(cls, d):
        dim = int(d["dim"])
        return cls([SymmetricForm.from_dict(dim, f) for f in d["forms"]])

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


def eval_poly(P: SymmetricPolynomial, X):
    """``f(x)`` for a vector or each row of a matrix."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != P.dim:
        raise ValueError(f"expected dimension {P.dim}, got {X2.shape[1]}")
    out = sum(B.diagonal(X2) for B in P.forms)
    return float(out[0]) if single else out


def dir_deriv(P: SymmetricPolynomial, X, theta):
    """``d/dtheta f(x) = sum_j j * B_j(x, ..., x, theta)``; rows of ``X`` are points."""
    theta = np.asarray(theta, dtype=float)
    X = np.asarray(X, dtype=float)
    if theta.shape != (P.dim,):
        raise ValueError(f"direction must have shape ({P.dim},)")
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != P.dim:
        raise ValueError(f"expected dimension {P.dim}, got {X2.shape[1]}")
    out = np.zeros(X2.shape[0])
    for B in P.forms[1:]:
        if B.is_zero():
            continue
        w = B._coef * B._mult
        for i in range(P.dim):
            if theta[i] == 0.0:
                continue
            e = B._exp[:, i]
            has = e > 0
            if not has.any():
                continue
            E = B._exp[has].copy()
            E[:, i] -= 1
            mono = np.prod(X2[:, None, :] ** E[None, :, :], axis=2)
            out += theta[i] * (mono @ (w[has] * e[has]))
    return float(out[0]) if single else out


class FormNorm(NamedTuple):
    value: float
    dispersion: float
    lower_bound: bool
    method: str


def _sphere_ascent(B: SymmetricForm, x0, sign, iters=2000):
    """Riemannian gradient ascent of ``sign * B(x,...,x)`` on the unit sphere."""
    x = x0 / np.linalg.norm(x0)
    val = sign * B.diagonal(x)
    step = 1.0
    for _ in range(iters):
        g = sign * B.gradient(x)
        rg = g - np.dot(g, x) * x
        gn = np.linalg.norm(rg)
        # near an optimum the value error is of order gn**2
        if gn < 1e-9 * max(1.0, abs(val)):
            break
        while step > 1e-16:
            y = x + step * rg
            y /= np.linalg.norm(y)
            vy = sign * B.diagonal(y)
            if vy >= val + 1e-4 * step * gn * gn:
                stalled = vy - val <= 4 * np.finfo(float).eps * max(1.0, abs(val))
                x, val = y, vy
                step *= 2.0
                break
            step *= 0.5
        else:
            break
        if stalled:
            break
    return val, x


def leading_form_norm(P: SymmetricPolynomial, restarts=64, seed=0) -> FormNorm:
    """``||B_d|| = sup |B_d(x_1, ..., x_d)|`` over unit vectors.

    Degree one gives ``|a|`` and degree two the spectral norm of the symmetric
    coefficient matrix, both exactly.  From degree three the supremum over the
    diagonal ``x_1 = ... = x_d`` is equal to the full supremum for symmetric
    forms, and it is approached by sphere-constrained gradient ascent from
    ``restarts`` seeded random starts; the best value found is a lower bound
    and ``dispersion`` is the spread of the restart optima.
    """
    B = P.leading
    if B.is_zero() or P.degree == 0:
        raise ValueError("the polynomial is constant")
    n = P.dim
    if P.degree == 1:
        a = np.array([B.entries.get((i,), 0.0) for i in range(n)])
        return FormNorm(float(np.linalg.norm(a)), 0.0, False, "exact")
    if P.degree == 2:
        ev = np.linalg.eigvalsh(B.dense())
        return FormNorm(float(np.max(np.abs(ev))), 0.0, False, "exact")
    rng = np.random.default_rng(seed)
    best = []
    for _ in range(restarts):
        x0 = rng.standard_normal(n)
        vals = [_sphere_ascent(B, x0, s)[0] for s in (1.0, -1.0)]
        best.append(max(vals))
    best = np.array(best)
    return FormNorm(float(best.max()), float(best.max() - best.min()), True, "sphere-ascent")


def form_norm_upper(B: SymmetricForm) -> float:
    """Frobenius norm of the full tensor, an upper bound on ``||B||``."""
    if B.is_zero():
        return 0.0
    return float(np.sqrt(np.sum(B._mult * B._coef ** 2)))


def random_polynomial(dim, degree, seed, scale=1.0) -> SymmetricPolynomial:
    """Polynomial with i.i.d. normal coefficients on every monomial of degree ``<= degree``."""
    rng = np.random.default_rng(seed)
    monomials = {}
    for j in range(degree + 1):
        for idx in itertools.combinations_with_replacement(range(dim), j):
            exps = [0] * dim
            for i in idx:
                exps[i] += 1
            monomials[tuple(exps)] = scale * float(rng.standard_normal())
    return SymmetricPolynomial.from_monomials(dim, monomials)
