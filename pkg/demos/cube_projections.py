"""Exact one-dimensional projections of product measures.

The image of a product of piecewise-polynomial densities under a unit
direction is computed exactly by convolution. Its total variation never
exceeds sqrt(2) times the largest factor variation, and the diagonal of the
square attains that bound.
"""

import math

import numpy as np

from skorohod import pwpoly
from skorohod.measures1d import BVDensity
from skorohod.pushforward import ProductMeasure, linear_image_exact

square = ProductMeasure.uniform_cube(2)
diag = linear_image_exact(square, np.array([1.0, 1.0]) / math.sqrt(2))
print(f"diagonal of the square: TV = {pwpoly.variation(diag):.15f}, 2 sqrt 2 = {2 * math.sqrt(2):.15f}")

mu = ProductMeasure([BVDensity.triangle(-1, 1), BVDensity.uniform(0, 2), BVDensity.random_piecewise_linear(3)])
rng = np.random.default_rng(0)
for _ in range(5):
    a = rng.standard_normal(3)
    a /= np.linalg.norm(a)
    tv = pwpoly.variation(linear_image_exact(mu, a))
    print(f"a = {np.round(a, 3)}: TV = {tv:.6f} <= {math.sqrt(2) * mu.tvs.max():.6f}")

for n in range(2, 7):
    cube = ProductMeasure.uniform_cube(n)
    best = max(float(linear_image_exact(cube, th / np.linalg.norm(th), cap=None)(0.0))
               for th in rng.standard_normal((200, n)))
    print(f"cube section n={n}: largest central density over 200 directions = {best:.6f} (bound {math.sqrt(2):.6f})")
