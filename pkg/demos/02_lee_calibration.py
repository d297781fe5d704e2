"""Finding the Lee form convention of a conformally flat ambient.

For the metric exp(-f) times the Euclidean one, the structure equation for
the covariant derivative of J only closes for one sign and one scale in
alpha = sign * scale * df.  The calibration fits both from sample points and
the wrong sign leaves an O(1) residual.  The exterior identity for the
fundamental two-form is then checked with the fitted form and with twice it.
"""

import numpy as np

from slantlab.ambient import AmbientSpace, LinearFactor, ProductFactor, calibrate_lee_convention, random_ambient_points

pts = random_ambient_points(3, 50, seed=1)
rng = np.random.default_rng(2)

for factor in (LinearFactor(), ProductFactor()):
    amb = AmbientSpace(3, factor)
    rec = calibrate_lee_convention(amb, pts)
    print(f"{factor.family}: sign={rec.sign:+d} scale={rec.scale:.15f} worst residual={rec.residual:.1e}")
    for sign, (scale, res) in sorted(rec.candidates.items()):
        print(f"    candidate sign {sign:+d}: best scale {scale:.4g}, residual {res:.3g}")
    good = amb.with_convention(rec.sign, rec.scale)
    x, v, w = pts[0], rng.normal(size=6), rng.normal(size=6)
    print(f"    structure residual at a random point: {good.nabla_J_residual(x, v, w):.1e}")
    print(f"    with the sign flipped:                {good.with_convention(-rec.sign, rec.scale).nabla_J_residual(x, v, w):.3f}")
    forms = good.two_form_conventions(x)
    print(f"    two-form identity, fitted form {forms['structure_lee']:.3f}, doubled form {forms['doubled_lee']:.1e}\n")
