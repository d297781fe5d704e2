"""Named tolerances used for pass/fail decisions.

Three levels underlie everything: ``1e-12`` for algebraic identities,
``1e-9`` for frame orthonormality and ``1e-7`` for composed geometric
residuals.  Individual checks pick from (or sit between) these.
"""

import os

ALGEBRAIC = 1e-12
FRAME = 1e-9
GEOMETRIC = 1e-7

DEFAULT_TOLERANCES = {
    "structure_equation": 1e-7,
    "two_form": 1e-8,
    "metric_compatibility": 1e-8,
    "hermitian": ALGEBRAIC,
    "tangent_normal_orthogonality": FRAME,
    "h_symmetry": FRAME,
    "duality": 1e-8,
    "slant_identities": 1e-8,
    "slant_uniformity": 1e-6,
    "expected_slant": 1e-8,
    "holomorphic_block": FRAME,
    "warped_block": FRAME,
    "lee_orthogonal_fiber": 1e-8,
    "warped_connection": GEOMETRIC,
    "mixed_relations": GEOMETRIC,
    "shape_relation": GEOMETRIC,
    "shape_consistency": FRAME,
    "cr_shape": GEOMETRIC,
    "warp_slant_relation": 1e-6,
    "characterization": GEOMETRIC,
    "foliation": 1e-6,
    "adapted_frame": 1e-8,
    "chen_margin": 1e-9,
    # not residual checks: thresholds for flags and guards
    "calibration": 1e-5,
    "properness": 1e-6,
    "geodesic_flag": GEOMETRIC,
    "rank": 1e-10,
}

# multipliers applied to every entry of DEFAULT_TOLERANCES
PROFILES = {"default": 1.0, "strict": 0.1, "loose": 100.0}

PROFILE_ENV = "SLANTLAB_TOLERANCE_PROFILE"


def tolerance_table(profile=None, overrides=None):
    """Return the effective tolerance table.

    ``profile`` defaults to the value of ``SLANTLAB_TOLERANCE_PROFILE`` (or
    ``"default"``).  ``overrides`` maps names to absolute values and wins over
    the profile.
    """
    if profile is None:
        profile = os.environ.get(PROFILE_ENV, "default")
    if profile not in PROFILES:
        raise KeyError(f"unknown tolerance profile {profile!r}; choose from {sorted(PROFILES)}")
    scale = PROFILES[profile]
    table = {name: value * scale for name, value in DEFAULT_TOLERANCES.items()}
    for name, value in (overrides or {}).items():
        if name not in table:
            raise KeyError(f"unknown tolerance {name!r}")
        table[name] = float(value)
    return table
