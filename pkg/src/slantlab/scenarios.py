"""Built-in immersions, sampling, scenario configuration and random scenarios.

Scenario configuration is TOML.  Schema (version 1)::

    schema_version = 1
    id = "my-run"                      # optional, defaults to the immersion name

    [immersion]
    family = "example81"               # example81 | example82 | cr_product
    k = 1.0                            # example81 only, > 0
    curve = { kind = "circle", radius = 1.0 }
    # or curve = { kind = "turning", coeffs = [0.0, 1.0] }  (turning angle polynomial)
    bend = 1.0                         # cr_product only

    [conformal]                        # omitted or empty: flat Kaehler ambient
    family = "linear"                  # constant | linear | product | gaussian
    coordinate = "x1"                  # plus the family's own parameters

    [sampling]
    kind = "grid"                      # grid | random
    shape = [10, 10]                   # grid: counts along the scenario's grid axes
    count = 100                        # random: number of admitted points
    seed = 0

    [lee]                              # optional explicit convention (skips calibration)
    sign = -1
    scale = 0.5

    [tolerances]                       # optional absolute overrides by name
    chen_margin = 1e-9
"""

import copy
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import jsonschema
import numpy as np
from scipy.integrate import quad

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import jets
from .ambient import (
    AmbientSpace,
    ConstantFactor,
    factor_from_dict,
    random_ambient_points,
)
from .errors import CalibrationDegenerateError, ScenarioConfigError
from .submanifold import Immersion, Split
from .tolerances import DEFAULT_TOLERANCES

SCHEMA_VERSION = 1

# -- unit-speed planar curves ------------------------------------------------


@dataclass(frozen=True)
class CircleCurve:
    radius: float = 1.0
    kind = "circle"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("curve radius must be positive")

    def __call__(self, s):
        R = self.radius
        return R * jets.cos(s / R), R * jets.sin(s / R)

    def speed_sq(self, s):
        t = jets.Taylor2.variable(s, 0, 1)
        g, h = self(t)
        return float(g.grad[0] ** 2 + h.grad[0] ** 2)

    def to_dict(self):
        return {"kind": self.kind, "radius": self.radius}


@dataclass(frozen=True)
class TurningAngleCurve:
    """Unit-speed curve with turning angle ``psi(s) = sum coeffs[i] s**i``.

    Positions come from quadrature of ``(cos psi, sin psi)`` from ``s = 0``;
    derivatives are exact.
    """

    coeffs: tuple = (0.0, 1.0)
    kind = "turning"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("turning angle needs at least one coefficient")

    def _psi(self, s):
        c = np.polynomial.Polynomial(self.coeffs)
        return float(c(s)), float(c.deriv()(s))

    def __call__(self, s):
        s0 = float(s)
        psi, dpsi = self._psi(s0)
        g0 = quad(lambda t: math.cos(self._psi(t)[0]), 0.0, s0, epsabs=1e-13, epsrel=1e-13)[0]
        h0 = quad(lambda t: math.sin(self._psi(t)[0]), 0.0, s0, epsabs=1e-13, epsrel=1e-13)[0]
        c, sn = math.cos(psi), math.sin(psi)
        g = jets.apply_univariate(s, g0, c, -sn * dpsi)
        h = jets.apply_univariate(s, h0, sn, c * dpsi)
        return g, h

    def speed_sq(self, s):
        psi, _ = self._psi(float(s))
        return math.cos(psi) ** 2 + math.sin(psi) ** 2

    def to_dict(self):
        return {"kind": self.kind, "coeffs": list(self.coeffs)}


def curve_from_dict(desc):
    desc = dict(desc)
    kind = desc.pop("kind", "circle")
    if kind == "circle":
        return CircleCurve(**desc)
    if kind == "turning":
        return TurningAngleCurve(tuple(desc.get("coeffs", (0.0, 1.0))))
    raise ValueError(f"unknown curve kind {kind!r}")


# -- immersions --------------------------------------------------------------

S_EXCLUSION = 1e-3
EXCLUSION_MARGIN = 1e-6


def example81_immersion(k=1.0, curve=None):
    """4-dimensional semi-slant product in C^3 with constant slant.

    Chart ``(u, v, r, s)``; base ``(u, v)``, fiber ``(r, s)``.  The locus
    ``s = 0`` is excluded (the fiber metric degenerates there).
    """
    if not k > 0:
        raise ValueError("k must be positive")
    curve = CircleCurve() if curve is None else curve

    def phi(c):
        u, v, r, s = c
        g, h = curve(s)
        ks = k * s
        return [u, -ks * jets.sin(r), g, v, ks * jets.cos(r), h]

    def domain(c):
        return abs(c[3]) > S_EXCLUSION

    return Immersion(
        name="example81",
        n=4,
        ambient_dim=6,
        phi=phi,
        domain=domain,
        split=Split(base=(0, 1), fiber=(2, 3)),
        coordinate_names=("u", "v", "r", "s"),
    )


def example82_immersion():
    """4-dimensional proper pointwise semi-slant product in C^3.

    Chart ``(u1, u2, u3, u4)`` on ``u1, u2 != 0``, ``u3*u4 != 1``,
    ``0 < u3 - u4 < pi/2``.
    """

    def phi(c):
        u1, u2, u3, u4 = c
        return [
            0.5 * (u1 * u1 + u2 * u2),
            u3 * jets.cos(u4),
            u3 * jets.sin(u4),
            0.5 * (u1 * u1 - u2 * u2),
            u4 * jets.cos(u3),
            u4 * jets.sin(u3),
        ]

    def domain(c):
        u1, u2, u3, u4 = c
        e = EXCLUSION_MARGIN
        return abs(u1) > e and abs(u2) > e and abs(u3 * u4 - 1.0) > e and e < u3 - u4 < math.pi / 2 - e

    return Immersion(
        name="example82",
        n=4,
        ambient_dim=6,
        phi=phi,
        domain=domain,
        split=Split(base=(0, 1), fiber=(2, 3)),
        coordinate_names=("u1", "u2", "u3", "u4"),
    )


def example82_slant_cos2(u):
    """Closed-form ``cos^2`` of the slant function of :func:`example82_immersion`."""
    u3, u4 = float(u[2]), float(u[3])
    return (u3 * u4 - 1.0) ** 2 * math.cos(u3 - u4) ** 2 / ((1.0 + u3**2) * (1.0 + u4**2))


def cr_product_immersion(bend=1.0):
    """CR product in C^3: a complex line times a totally real surface.

    Chart ``(u, v, r, s)`` maps to ``x1 + i y1 = u + i v``,
    ``x2 + i y2 = exp(i r)``, ``x3 + i y3 = s + i bend s^2 / 2``.
    """

    def phi(c):
        u, v, r, s = c
        return [u, jets.cos(r), s, v, jets.sin(r), 0.5 * bend * s * s]

    return Immersion(
        name="cr_product",
        n=4,
        ambient_dim=6,
        phi=phi,
        split=Split(base=(0, 1), fiber=(2, 3)),
        coordinate_names=("u", "v", "r", "s"),
    )


def affine_immersion(A, b=None, split=None, name="affine"):
    """``u -> A u + b``; columns of ``A`` span the image."""
    A = np.asarray(A, dtype=float)
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)

    def phi(c):
        return [sum(A[r, i] * c[i] for i in range(A.shape[1])) + b[r] for r in range(A.shape[0])]

    return Immersion(name=name, n=A.shape[1], ambient_dim=A.shape[0], phi=phi, split=split)


# -- sampling ---------------------------------------------------------------


@dataclass(frozen=True)
class SampleSpec:
    """Grid or seeded random point set over a chart box.

    ``bounds`` is one ``(lo, hi)`` per chart coordinate; a grid runs over the
    coordinates in ``grid_axes`` with the others held at ``fixed``.
    """

    kind: str
    bounds: tuple
    grid_axes: tuple = ()
    shape: tuple = ()
    fixed: tuple = ()
    count: int = 100
    seed: int = 0
    max_attempts: int = 100000

    def __post_init__(self):
        if self.kind not in ("grid", "random"):
            raise ValueError(f"unknown sampling kind {self.kind!r}")
        object.__setattr__(self, "bounds", tuple(tuple(float(v) for v in b) for b in self.bounds))
        object.__setattr__(self, "grid_axes", tuple(int(i) for i in self.grid_axes))
        object.__setattr__(self, "shape", tuple(int(i) for i in self.shape))
        object.__setattr__(self, "fixed", tuple(float(v) for v in self.fixed))

    def to_dict(self):
        return {
            "kind": self.kind,
            "bounds": [list(b) for b in self.bounds],
            "grid_axes": list(self.grid_axes),
            "shape": list(self.shape),
            "fixed": list(self.fixed),
            "count": self.count,
            "seed": self.seed,
        }


def sample_points(immersion, plan):
    """Admitted chart points and the skipped ones, in deterministic order."""
    admitted, skipped = [], []
    if plan.kind == "grid":
        axes = [np.linspace(*plan.bounds[i], num) for i, num in zip(plan.grid_axes, plan.shape)]
        for combo in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes)):
            u = np.array(plan.fixed, dtype=float)
            u[list(plan.grid_axes)] = combo
            (admitted if immersion.admits(u) else skipped).append(u)
        return admitted, skipped
    rng = np.random.default_rng(plan.seed)
    lo = np.array([b[0] for b in plan.bounds])
    hi = np.array([b[1] for b in plan.bounds])
    attempts = 0
    while len(admitted) < plan.count and attempts < plan.max_attempts:
        u = rng.uniform(lo, hi)
        attempts += 1
        (admitted if immersion.admits(u) else skipped).append(u)
    return admitted, skipped


DEFAULT_SAMPLING = {
    "example81": dict(
        bounds=((-1.0, 1.0), (-1.0, 1.0), (0.1, 6.2), (0.3, 2.0)),
        grid_axes=(0, 3),
        fixed=(0.0, 0.4, 0.9, 1.0),
    ),
    "example82": dict(
        bounds=((0.3, 1.5), (0.3, 1.5), (0.6, 1.2), (0.05, 0.5)),
        grid_axes=(2, 3),
        fixed=(1.1, 0.7, 1.0, 0.3),
    ),
    "cr_product": dict(
        bounds=((-1.0, 1.0), (-1.0, 1.0), (0.0, 6.2), (-1.0, 1.0)),
        grid_axes=(0, 3),
        fixed=(0.0, 0.4, 0.9, 0.0),
    ),
}


# -- scenarios --------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    id: str
    immersion: Immersion
    ambient: AmbientSpace
    sampling: SampleSpec
    family: str
    params: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    calibration: Optional[object] = None
    calibration_status: str = "degenerate"
    tolerances: dict = field(default_factory=dict)

    def points(self):
        return sample_points(self.immersion, self.sampling)

    def expected_cos2(self, u):
        oracle = self.expected.get("cos2")
        if oracle is None:
            return None
        return oracle(u) if callable(oracle) else float(oracle)

    def to_config(self):
        conf = {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "immersion": {"family": self.family, **copy.deepcopy(self.params)},
            "conformal": self.ambient.factor.to_dict(),
            "sampling": self.sampling.to_dict(),
        }
        if self.calibration_status == "explicit":
            conf["lee"] = {"sign": self.ambient.lee_sign, "scale": self.ambient.lee_scale}
        if self.tolerances:
            conf["tolerances"] = dict(sorted(self.tolerances.items()))
        return conf

    def serialize(self):
        return json.dumps(self.to_config(), sort_keys=True, indent=2)

    def with_factor(self, factor, lee=None):
        return build_scenario(
            self.family, self.params, factor, sampling=self.sampling, scenario_id=self.id, lee=lee,
            tolerances=self.tolerances,
        )


CALIBRATION_POINTS = 50
CALIBRATION_SEED = 20240601


def attach_convention(ambient, lee=None):
    """Attach a Lee convention: explicit, calibrated, or nominal for constant factors."""
    if lee is not None:
        return ambient.with_convention(lee[0], lee[1]), None, "explicit"
    if ambient.factor.is_constant:
        # any convention gives a vanishing Lee form
        return ambient.with_convention(1, 1.0), None, "degenerate"
    pts = random_ambient_points(ambient.m, CALIBRATION_POINTS, CALIBRATION_SEED)
    try:
        calibrated, record = ambient.calibrate(pts)
    except CalibrationDegenerateError:
        return ambient.with_convention(1, 1.0), None, "degenerate"
    return calibrated, record, "calibrated"


def _make_immersion(family, params):
    if family == "example81":
        curve = curve_from_dict(params.get("curve", {"kind": "circle", "radius": 1.0}))
        return example81_immersion(k=float(params.get("k", 1.0)), curve=curve)
    if family == "example82":
        return example82_immersion()
    if family == "cr_product":
        return cr_product_immersion(bend=float(params.get("bend", 1.0)))
    raise ValueError(f"unknown immersion family {family!r}")


def _expected(family, params):
    if family == "example81":
        k = float(params.get("k", 1.0))
        return {"cos2": k * k / (1.0 + k * k)}
    if family == "example82":
        return {"cos2": example82_slant_cos2}
    if family == "cr_product":
        return {"cos2": 0.0}
    return {}


def default_sampling(family, kind="grid", shape=(10, 10), count=100, seed=0):
    base = DEFAULT_SAMPLING[family]
    return SampleSpec(kind=kind, shape=shape, count=count, seed=seed, **base)


def build_scenario(family, params=None, factor=None, sampling=None, scenario_id=None, lee=None, tolerances=None):
    params = dict(params or {})
    if family == "example81":
        params.setdefault("k", 1.0)
        params.setdefault("curve", {"kind": "circle", "radius": 1.0})
    if family == "cr_product":
        params.setdefault("bend", 1.0)
    imm = _make_immersion(family, params)
    amb = AmbientSpace(m=3, factor=ConstantFactor() if factor is None else factor)
    amb, record, status = attach_convention(amb, lee)
    if sampling is None:
        sampling = default_sampling(family)
    return Scenario(
        id=scenario_id or family,
        immersion=imm,
        ambient=amb,
        sampling=sampling,
        family=family,
        params=params,
        expected=_expected(family, params),
        calibration=record,
        calibration_status=status,
        tolerances=dict(tolerances or {}),
    )


def example_81(k=1.0, curve=None, factor=None, **kw):
    curve = CircleCurve() if curve is None else curve
    for s in np.linspace(*DEFAULT_SAMPLING["example81"]["bounds"][3], 7):
        if abs(curve.speed_sq(s) - 1.0) > 1e-10:
            raise ValueError("curve is not unit speed")
    return build_scenario("example81", {"k": k, "curve": curve.to_dict()}, factor, **kw)


def example_82(factor=None, **kw):
    return build_scenario("example82", {}, factor, **kw)


def cr_product(bend=1.0, factor=None, **kw):
    return build_scenario("cr_product", {"bend": bend}, factor, **kw)


BUILTINS = {"example81": example_81, "example82": example_82, "cr_product": cr_product}


# -- configuration ----------------------------------------------------------

_FACTOR_SCHEMA = {
    "type": "object",
    "properties": {
        "family": {"enum": ["constant", "linear", "product", "gaussian"]},
        "value": {"type": "number"},
        "coordinate": {"type": "string", "pattern": "^[xy][1-3]$"},
        "slope": {"type": "number"},
        "offset": {"type": "number"},
        "first": {"type": "string", "pattern": "^[xy][1-3]$"},
        "second": {"type": "string", "pattern": "^[xy][1-3]$"},
        "scale": {"type": "number"},
        "amplitude": {"type": "number"},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "center": {"type": "array", "items": {"type": "number"}},
        "coords": {"type": "array", "items": {"type": "string", "pattern": "^[xy][1-3]$"}},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "immersion"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "id": {"type": "string"},
        "immersion": {
            "type": "object",
            "required": ["family"],
            "properties": {
                "family": {"enum": ["example81", "example82", "cr_product"]},
                "k": {"type": "number", "exclusiveMinimum": 0},
                "bend": {"type": "number"},
                "curve": {
                    "type": "object",
                    "properties": {
                        "kind": {"enum": ["circle", "turning"]},
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                        "coeffs": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "conformal": _FACTOR_SCHEMA,
        "sampling": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["grid", "random"]},
                "shape": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "count": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "bounds": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
                "grid_axes": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "fixed": {"type": "array", "items": {"type": "number"}},
            },
            "additionalProperties": False,
        },
        "lee": {
            "type": "object",
            "required": ["sign", "scale"],
            "properties": {"sign": {"enum": [-1, 1]}, "scale": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
    },
    "additionalProperties": False,
}


def validate_config(conf):
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(conf), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path)
        raise ScenarioConfigError(path, err.message)


def scenario_from_config(conf):
    validate_config(conf)
    imm = dict(conf["immersion"])
    family = imm.pop("family")
    factor_desc = conf.get("conformal") or {}
    factor = factor_from_dict(factor_desc) if factor_desc else ConstantFactor()
    samp = dict(conf.get("sampling", {}))
    base = dict(DEFAULT_SAMPLING[family])
    for key in ("bounds", "grid_axes", "fixed"):
        if key in samp:
            base[key] = samp.pop(key)
    samp["shape"] = tuple(samp.get("shape", (10, 10)))
    sampling = SampleSpec(kind=samp.pop("kind", "grid"), **base, **samp)
    if sampling.kind == "grid" and len(sampling.shape) != len(sampling.grid_axes):
        raise ScenarioConfigError("sampling.shape", "needs one count per grid axis")
    if len(sampling.bounds) != 4 or (sampling.kind == "grid" and len(sampling.fixed) != 4):
        raise ScenarioConfigError("sampling", "bounds and fixed need one entry per chart coordinate")
    lee = conf.get("lee")
    lee = (lee["sign"], lee["scale"]) if lee else None
    tols = conf.get("tolerances", {})
    for name in tols:
        if name not in DEFAULT_TOLERANCES:
            raise ScenarioConfigError(f"tolerances.{name}", "unknown tolerance name")
    return build_scenario(family, imm, factor, sampling=sampling, scenario_id=conf.get("id"), lee=lee, tolerances=tols)


def load_scenario(text):
    """Build a :class:`Scenario` from TOML configuration text."""
    try:
        conf = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioConfigError("", f"invalid TOML: {exc}") from exc
    return scenario_from_config(conf)


def random_factor(rng):
    family = ["linear", "product", "gaussian"][int(rng.integers(3))]
    coord = ["x1", "y1"][int(rng.integers(2))]
    if family == "linear":
        return factor_from_dict(
            {"family": "linear", "coordinate": coord, "slope": float(rng.uniform(0.2, 1.5)), "offset": float(rng.uniform(-0.5, 0.5))}
        )
    if family == "product":
        return factor_from_dict({"family": "product", "first": "x1", "second": "y1", "scale": float(rng.uniform(0.2, 1.5))})
    return factor_from_dict(
        {
            "family": "gaussian",
            "amplitude": float(rng.uniform(0.2, 1.5)),
            "width": float(rng.uniform(0.5, 2.0)),
            "center": [float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-0.5, 0.5))],
            "coords": ["x1", "y1"],
        }
    )


def random_scenario(seed):
    """Seeded scenario: random immersion parameters and a random base-only conformal factor."""
    rng = np.random.default_rng(seed)
    family = ["example81", "example82"][int(rng.integers(2))]
    params = {}
    if family == "example81":
        params = {"k": float(rng.uniform(0.5, 2.0)), "curve": {"kind": "circle", "radius": float(rng.uniform(0.5, 2.0))}}
    factor = random_factor(rng)
    sampling = default_sampling(family, kind="random", count=20, seed=int(rng.integers(2**31)))
    return build_scenario(family, params, factor, sampling=sampling, scenario_id=f"random-{seed}")


def resolve(ref, **kw):
    """Scenario from a built-in name, ``random:<seed>``, or a TOML file path."""
    if ref in BUILTINS:
        return BUILTINS[ref](**kw)
    if ref.startswith("random:"):
        return random_scenario(int(ref.split(":", 1)[1]))
    with open(ref, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())
