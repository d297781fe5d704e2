"""Slant angle of the fiber block, constant and pointwise.

The first product has the same angle everywhere, fixed by its parameter k.
The second one turns from point to point; its angle follows a closed form in
the last two chart coordinates.  Rescaling the ambient metric conformally
leaves both untouched.
"""

import math

import numpy as np

from slantlab.ambient import AmbientSpace, GaussianBump, ProductFactor
from slantlab.scenarios import example81_immersion, example82_immersion, example82_slant_cos2
from slantlab.slant import classify, slant_function
from slantlab.submanifold import point_geometry

flat = AmbientSpace(3)

print("constant slant: cos(theta) against k / sqrt(1 + k^2)")
for k in (0.5, 1.0, 2.0):
    imm = example81_immersion(k=k)
    thetas = [slant_function(point_geometry(imm, flat, [0.1, -0.2, r, s])).theta for r in (0.5, 2.0, 4.0) for s in (0.4, 1.7)]
    print(f"  k={k:<4} theta={thetas[0]:.12f}  spread={max(thetas) - min(thetas):.1e}  "
          f"cos err={abs(math.cos(thetas[0]) - k / math.sqrt(1 + k * k)):.1e}")

print("\npointwise slant along u3 at u4 = 0.3")
imm = example82_immersion()
for u3 in np.linspace(0.6, 1.2, 4):
    u = [1.1, 0.7, u3, 0.3]
    sa = slant_function(point_geometry(imm, flat, u))
    print(f"  u3={u3:.2f} theta={sa.theta:.6f}  closed form cos^2 gap={abs(sa.cos2 - example82_slant_cos2(u)):.1e}")

print("\nconformal rescaling does not move the angle")
u = [1.1, 0.7, 1.0, 0.3]
for factor in (ProductFactor(), GaussianBump(amplitude=1.2, width=0.8)):
    theta = slant_function(point_geometry(imm, AmbientSpace(3, factor), u)).theta
    print(f"  {factor.family:<9} theta={theta:.15f}")

report = classify(imm, flat, [[1.1, 0.7, a, b] for a in (0.7, 1.1) for b in (0.1, 0.4)])
print("\nclassification:", report.summary())
