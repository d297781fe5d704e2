"""Both sides of the lower bound for |h|^2 over a grid.

On a genuine warped scenario the warp gradient and the tangential Lee field
cancel inside the bracket, so the bound is zero and the margin is all of
|h|^2.  With the Lee convention flipped they add up instead and the bound
overshoots.  The named special regimes reduce the general right-hand side.
"""

import math

from slantlab import warped as W
from slantlab.ambient import LinearFactor, ProductFactor
from slantlab.runner import margin_table
from slantlab.scenarios import build_scenario, cr_product, default_sampling

for family in ("example81", "example82"):
    for factor in (None, LinearFactor(), ProductFactor()):
        sc = build_scenario(family, None, factor)
        rows = [r for r in margin_table(sc) if r["status"] == "ok"]
        worst = min(rows, key=lambda r: r["margin"])
        name = "flat" if factor is None else factor.family
        print(f"{family} {name:<8} points={len(rows)}  min margin={worst['margin']:.4f}  largest bound={max(r['rhs'] for r in rows):.1e}")

wrong = build_scenario("example81", None, LinearFactor(), sampling=default_sampling("example81", shape=(3, 3)), lee=(1, 1.0))
print("\nflipped convention, min margin:", min(r["margin"] for r in margin_table(wrong)))

sc = build_scenario("example82")
rep = W.chen_inequality(sc.immersion, sc.ambient, [1.1, 0.7, 1.0, 0.3])
print("\nKaehler regime:", W.special_case_report(rep, "kaehler"))

sc = build_scenario("example81", {"k": 0.8}, ProductFactor())
rep = W.chen_inequality(sc.immersion, sc.ambient, [0.2, 0.1, 0.8, 1.1])
print("constant slant regime:", W.special_case_report(rep, "constant-slant"))

for eps in (1e-2, 1e-4, 1e-5):
    syn = W.ChenReport.synthetic(math.pi / 2 - eps, 2, grad_norm_sq=0.7, lee_tangent_norm_sq=0.3, g_star=0.1)
    print(f"theta = pi/2 - {eps:g}: csc^2 + cot^2 = {1 / math.sin(syn.theta) ** 2 + 1 / math.tan(syn.theta) ** 2:.10f}")
cr = cr_product(factor=LinearFactor())
rep = W.chen_inequality(cr.immersion, cr.ambient, [0.3, 0.2, 0.9, 0.4], require_proper=False)
print("totally real regime:", W.special_case_report(rep, "cr"))
