"""Regularity of polynomial images.

For x^2 on U[0, 1] the image density is 1 / (2 sqrt t). The shift integral
behaves like h^(1/2), the small-ball probability of [0, s] is sqrt(s), and the
L^p norms stay finite for p < 2. The bundled verification suite runs the same
checks on further scenarios.
"""

from skorohod import measures1d, regularity, verify
from skorohod.measures1d import BVDensity

rho = measures1d.pushforward_poly_1d(BVDensity.uniform(0, 1), [0.0, 0.0, 1.0])
for h in (1e-3, 1e-2, 1e-1):
    print(f"h = {h:g}: int |rho(t+h) - rho(t)| dt = {regularity.shift_l1(rho, h).value:.10f}")
for s in (1e-4, 1e-2):
    print(f"P(x^2 <= {s:g}) = {regularity.small_ball(rho, [(0.0, s)]).value:.10f}")
for p in (1.2, 1.5, 1.8):
    print(f"||rho||_{p:g} = {regularity.lp_norm(rho, p).value:.12f}")

records = verify.run_scenarios(verify.bundled_suite_path())
print(f"bundled suite: {len(records)} rows, verdicts " +
      ", ".join(f"{v}={sum(r.verdict == v for r in records)}" for v in ("pass", "fail", "report-only")))
