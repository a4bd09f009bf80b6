"""Write a piecewise-linear density as a mixture of uniform laws.

The layer-cake decomposition splits the density into uniform laws on its
superlevel intervals. The weighted sum of ``2 / (b - a)`` over the components
then equals the total variation of the density.
"""

from skorohod import measures1d, pwpoly
from skorohod.measures1d import BVDensity

for name, mu in [("triangle on [-1, 1]", BVDensity.triangle(-1, 1)),
                 ("trapezoid", BVDensity.trapezoid(-1.5, -0.5, 0.5, 1.5)),
                 ("random density, seed 7", BVDensity.random_piecewise_linear(7, 12, True))]:
    m = measures1d.decompose_mixture(mu)
    err = pwpoly.abs_integral(measures1d.reconstruct(m).density - mu.density)
    word = "component" if len(m) == 1 else "components"
    print(f"{name}: {len(m)} {word}, ||mu'||_TV = {mu.tv:.12f}, "
          f"sum w 2/(b-a) = {m.derivative_norm():.12f}, reconstruction L1 = {err:.1e}")
