"""Warped product relations on a conformally deformed product.

With f = x1 the base coordinates carry the whole conformal factor, so the
product metric becomes a warped one with ln(warp) = -f / 2.  Every relation
between the second fundamental form, the warping function and the Lee form
then holds to rounding.  Three deliberate mistakes show which relations
notice what: the wrong Lee convention, a factor that moves along the fiber,
and a split that mixes base and fiber directions.
"""

from slantlab import warped as W
from slantlab.ambient import AmbientSpace, LinearFactor
from slantlab.scenarios import example82_immersion
from slantlab.submanifold import Split

imm = example82_immersion()
u = [1.1, 0.7, 1.0, 0.3]
good = AmbientSpace(3, LinearFactor()).with_convention(-1, 0.5)

ws = W.extract_warped_structure(imm, good, u)
print(f"ln(warp) = {ws.warp_log:.6f}  (expected {-(1.1**2 + 0.7**2) / 4:.6f}), worst product defect {ws.worst_defect():.1e}")


def suite(imm, amb):
    ctx = W.PointContext(imm, amb, u)
    out = dict(W.wl2_residuals(imm, amb, u, ctx))
    out["lee_orthogonal_fiber"] = W.wp1_check(imm, amb, u, ctx)
    out["warped_connection"] = W.wl1_residual(imm, amb, u, ctx)
    out["shape_relation"] = W.wt2_residual(imm, amb, u, ctx)
    out["warp_slant_relation"] = max(W.tc1_residual(imm, amb, u, ctx).values())
    out["characterization"] = W.tc2_characterization_residual(imm, amb, u, ctx)
    return out


runs = {
    "calibrated": suite(imm, good),
    "wrong sign": suite(imm, good.with_convention(1, 1.0)),
    "f = x2": suite(imm, good.with_factor(LinearFactor("x2"))),
    "mixed split": suite(imm.with_split(Split((0, 2), (1, 3))), good),
}
print(f"\n{'relation':<32}" + "".join(f"{k:>13}" for k in runs))
for rel in runs["calibrated"]:
    # nan: the relation is undefined there (no slant derivative on a mixed split)
    print(f"{rel:<32}" + "".join(f"{runs[k][rel]:>13.1e}" if runs[k][rel] == runs[k][rel] else f"{'n/a':>13}" for k in runs))

print("\nfoliation relations:", {k: f"{v:.0e}" for k, v in W.foliation_residuals(imm, good, u).items()})
