"""Globally conformal Kaehler ambient space ``(R^2m, J, exp(-f) g0)``.

Coordinates are ordered ``(x1..xm, y1..ym)`` and the canonical complex
structure acts on vectors as ``J(vx, vy) = (-vy, vx)``.

The Lee-form convention is carried as data.  For ``g = exp(-f) g0`` the
covariant derivative of ``J`` takes the four-term form with Lee vector
``lee_sign * lee_scale * grad_g(f)``; :func:`calibrate_lee_convention`
recovers the pair from samples instead of assuming it.
"""

import math
import re
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import jets
from .errors import (
    CalibrationDegenerateError,
    CalibrationFailedError,
    UncalibratedConventionError,
)
from .tolerances import DEFAULT_TOLERANCES

_COORD = re.compile(r"^([xy])([1-9][0-9]*)$")


def coordinate_index(name, m):
    """Index of the ambient coordinate ``"x3"``/``"y1"``... for half-dimension m."""
    match = _COORD.match(name)
    if not match:
        raise ValueError(f"bad coordinate name {name!r}")
    k = int(match.group(2))
    if k > m:
        raise ValueError(f"coordinate {name!r} needs m >= {k}")
    return k - 1 if match.group(1) == "x" else m + k - 1


def coordinate_name(index, m):
    return f"x{index + 1}" if index < m else f"y{index - m + 1}"


# -- conformal factor families ----------------------------------------------


@dataclass(frozen=True)
class ConstantFactor:
    value: float = 0.0
    family = "constant"

    def __call__(self, x):
        return self.value

    def coordinates(self):
        return ()

    @property
    def is_constant(self):
        return True

    def to_dict(self):
        return {"family": self.family, "value": self.value}


@dataclass(frozen=True)
class LinearFactor:
    coordinate: str = "x1"
    slope: float = 1.0
    offset: float = 0.0
    family = "linear"

    def __call__(self, x):
        i = coordinate_index(self.coordinate, len(x) // 2)
        return self.slope * x[i] + self.offset

    def coordinates(self):
        return (self.coordinate,)

    @property
    def is_constant(self):
        return self.slope == 0.0

    def to_dict(self):
        return {
            "family": self.family,
            "coordinate": self.coordinate,
            "slope": self.slope,
            "offset": self.offset,
        }


@dataclass(frozen=True)
class ProductFactor:
    first: str = "x1"
    second: str = "y1"
    scale: float = 1.0
    family = "product"

    def __call__(self, x):
        m = len(x) // 2
        return self.scale * x[coordinate_index(self.first, m)] * x[coordinate_index(self.second, m)]

    def coordinates(self):
        return (self.first, self.second)

    @property
    def is_constant(self):
        return self.scale == 0.0

    def to_dict(self):
        return {"family": self.family, "first": self.first, "second": self.second, "scale": self.scale}


@dataclass(frozen=True)
class GaussianBump:
    amplitude: float = 1.0
    width: float = 1.0
    center: tuple = (0.0, 0.0)
    coords: tuple = ("x1", "y1")
    family = "gaussian"

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("gaussian width must be positive")
        if len(self.center) != len(self.coords):
            raise ValueError("center and coords must have equal length")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "coords", tuple(self.coords))

    def __call__(self, x):
        m = len(x) // 2
        r2 = 0.0
        for name, c in zip(self.coords, self.center):
            d = x[coordinate_index(name, m)] - c
            r2 = d * d + r2
        return self.amplitude * jets.exp(r2 * (-0.5 / self.width**2))

    def coordinates(self):
        return self.coords

    @property
    def is_constant(self):
        return self.amplitude == 0.0

    def to_dict(self):
        return {
            "family": self.family,
            "amplitude": self.amplitude,
            "width": self.width,
            "center": list(self.center),
            "coords": list(self.coords),
        }


FACTOR_FAMILIES = {
    "constant": ConstantFactor,
    "linear": LinearFactor,
    "product": ProductFactor,
    "gaussian": GaussianBump,
}


def factor_from_dict(desc):
    desc = dict(desc)
    family = desc.pop("family", "constant")
    try:
        cls = FACTOR_FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown conformal family {family!r}") from None
    for key in ("center", "coords"):
        if key in desc:
            desc[key] = tuple(desc[key])
    return cls(**desc)


# -- ambient space -----------------------------------------------------------


def complex_structure(m):
    """Matrix of the canonical J on R^2m."""
    I = np.eye(m)
    Z = np.zeros((m, m))
    return np.block([[Z, -I], [I, Z]])


@dataclass(frozen=True)
class LeeCalibration:
    sign: int
    scale: float
    residual: float
    candidates: dict = field(default_factory=dict)  # sign -> (scale, residual)
    n_points: int = 0

    def to_dict(self):
        return {
            "sign": self.sign,
            "scale": self.scale,
            "residual": self.residual,
            "n_points": self.n_points,
            "candidates": {str(k): list(v) for k, v in sorted(self.candidates.items())},
        }


@dataclass(frozen=True)
class AmbientSpace:
    m: int
    factor: object = field(default_factory=ConstantFactor)
    lee_sign: Optional[int] = None
    lee_scale: Optional[float] = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("half-dimension must be positive")
        if self.lee_sign not in (None, 1, -1):
            raise ValueError("lee_sign must be +1 or -1")
        if self.lee_scale is not None and not self.lee_scale > 0:
            raise ValueError("lee_scale must be positive")

    @property
    def dim(self):
        return 2 * self.m

    @property
    def J(self):
        return complex_structure(self.m)

    @property
    def calibrated(self):
        return self.lee_sign is not None and self.lee_scale is not None

    def with_convention(self, sign, scale):
        return replace(self, lee_sign=int(sign), lee_scale=float(scale))

    def with_factor(self, factor):
        return replace(self, factor=factor)

    def J_apply(self, V):
        V = np.asarray(V, dtype=float)
        m = self.m
        return np.concatenate([-V[m:], V[:m]])

    # conformal factor data
    def factor_jet(self, x):
        jet = jets.evaluate_jet(lambda xs: self.factor(xs), x)
        return jet.value[0], jet.d1[0], jet.d2[0]

    def factor_value(self, x):
        return float(self.factor(list(np.asarray(x, dtype=float))))

    def factor_gradient(self, x):
        return self.factor_jet(x)[1]

    def metric(self, x, V, W):
        return math.exp(-self.factor_value(x)) * float(np.dot(V, W))

    def metric_matrix(self, x):
        return math.exp(-self.factor_value(x)) * np.eye(self.dim)

    def hermitian_defect(self, x, V, W):
        return abs(self.metric(x, self.J_apply(V), self.J_apply(W)) - self.metric(x, V, W))

    def christoffel(self, x):
        """``Gamma[k, i, j]`` of the conformal metric at ``x``."""
        df = self.factor_gradient(x)
        d = self.dim
        I = np.eye(d)
        gamma = (
            np.einsum("i,jk->kij", df, I)
            + np.einsum("j,ik->kij", df, I)
            - np.einsum("k,ij->kij", df, I)
        )
        return -0.5 * gamma

    def connection(self, x, V, W, gamma=None):
        """``Gamma(V, W)``: the correction turning ``D_V W`` into the ambient derivative."""
        if gamma is None:
            gamma = self.christoffel(x)
        return np.einsum("kij,i,j->k", gamma, V, W)

    def metric_compatibility_residual(self, x):
        jet = jets.evaluate_jet(lambda xs: jets.exp(-self.factor(xs)), x)
        w, dw = jet.value[0], jet.d1[0]
        d = self.dim
        dg = np.einsum("k,ij->kij", dw, np.eye(d))
        g = w * np.eye(d)
        gamma = self.christoffel(x)
        rhs = np.einsum("lki,lj->kij", gamma, g) + np.einsum("lkj,il->kij", gamma, g)
        return float(np.max(np.abs(dg - rhs)))

    # Lee form under the attached convention
    def _require_convention(self):
        if not self.calibrated:
            raise UncalibratedConventionError(
                "no Lee convention attached; calibrate or supply (sign, scale)"
            )

    def lee_form(self, x):
        self._require_convention()
        return self.lee_sign * self.lee_scale * self.factor_gradient(x)

    def lee_vector(self, x):
        return math.exp(self.factor_value(x)) * self.lee_form(x)

    def covariant_derivative_J(self, x, V, W, gamma=None):
        """``(nabla_V J) W`` from the Christoffel symbols (J is constant in coordinates)."""
        if gamma is None:
            gamma = self.christoffel(x)
        return self.connection(x, V, self.J_apply(W), gamma) - self.J_apply(self.connection(x, V, W, gamma))

    def structure_rhs(self, x, V, W, lee=None):
        """Four-term Lee expression predicted for ``(nabla_V J) W``."""
        lam = self.lee_vector(x) if lee is None else np.asarray(lee, dtype=float)
        g = lambda a, b: self.metric(x, a, b)
        JV, JW, Jl = self.J_apply(V), self.J_apply(W), self.J_apply(lam)
        return g(lam, JW) * V - g(lam, W) * JV + g(JV, W) * lam + g(V, W) * Jl

    def nabla_J_residual(self, x, V, W):
        r = self.covariant_derivative_J(x, V, W) - self.structure_rhs(x, V, W)
        return math.sqrt(self.metric(x, r, r))

    # exterior algebra check
    def two_form_residual(self, x, lee_covector):
        """Max over triples of ``|dOmega - alpha ^ Omega|`` for the given covector."""
        jet = jets.evaluate_jet(lambda xs: jets.exp(-self.factor(xs)), x)
        w, dw = jet.value[0], jet.d1[0]
        J = self.J
        omega = w * J  # omega[j, k] = g(e_j, J e_k)
        alpha = np.asarray(lee_covector, dtype=float)
        worst = 0.0
        d = self.dim
        for i in range(d):
            for j in range(i + 1, d):
                for k in range(j + 1, d):
                    d_omega = dw[i] * J[j, k] + dw[j] * J[k, i] + dw[k] * J[i, j]
                    wedge = alpha[i] * omega[j, k] + alpha[j] * omega[k, i] + alpha[k] * omega[i, j]
                    worst = max(worst, abs(d_omega - wedge))
        return worst

    def fundamental_two_form_check(self, x, lee=None):
        if lee is None:
            lee = self.lee_form(x)
        return self.two_form_residual(x, lee)

    def two_form_conventions(self, x):
        """Two-form residual under the attached Lee form and under twice it."""
        alpha = self.lee_form(x)
        return {
            "structure_lee": self.two_form_residual(x, alpha),
            "doubled_lee": self.two_form_residual(x, 2.0 * alpha),
        }

    def calibrate(self, points, tol=None):
        record = calibrate_lee_convention(self, points, tol=tol)
        return self.with_convention(record.sign, record.scale), record


def calibrate_lee_convention(amb, points, tol=None, min_points=20):
    """Fit the Lee convention ``(sign, scale)`` from ambient sample points.

    Every coordinate pair ``(e_i, e_j)`` at every point contributes one sample
    of ``(nabla_{e_i} J) e_j`` against the unit-convention expression.  A
    coarse scale grid picks the best scale per sign; least squares refines it.
    The reported residual is the worst metric norm over all samples.
    """
    if tol is None:
        tol = DEFAULT_TOLERANCES["calibration"]
    pts = [np.asarray(p, dtype=float) for p in points]
    if len(pts) < min_points:
        raise ValueError(f"calibration needs at least {min_points} sample points, got {len(pts)}")
    d = amb.dim
    basis = np.eye(d)
    Ds, Ls, ws = [], [], []
    informative = 0
    for x in pts:
        f, df, _ = amb.factor_jet(x)
        if np.linalg.norm(df) > 1e-8:
            informative += 1
        gamma = amb.christoffel(x)
        unit_lee = math.exp(f) * df
        for i in range(d):
            for j in range(d):
                Ds.append(amb.covariant_derivative_J(x, basis[i], basis[j], gamma))
                Ls.append(amb.structure_rhs(x, basis[i], basis[j], lee=unit_lee))
                ws.append(math.exp(-f))
    if informative < min_points:
        raise CalibrationDegenerateError(
            f"only {informative} of {len(pts)} sample points have a nonzero factor gradient"
        )
    D = np.array(Ds)
    L = np.array(Ls)
    w = np.array(ws)

    def worst(s):
        r = D - s * L
        return float(np.sqrt(np.max(w * np.sum(r * r, axis=1))))

    s_ls = float(np.sum(w * np.sum(D * L, axis=1)) / np.sum(w * np.sum(L * L, axis=1)))
    grid = np.logspace(-3, 3, 61)
    candidates = {}
    for sign in (1, -1):
        coarse = min(grid, key=lambda c: worst(sign * c))
        scale = sign * s_ls if sign * s_ls > 0 else float(coarse)
        candidates[sign] = (scale, worst(sign * scale))
    sign = min(candidates, key=lambda s: candidates[s][1])
    scale, residual = candidates[sign]
    if residual >= tol:
        raise CalibrationFailedError(residual)
    return LeeCalibration(sign=sign, scale=scale, residual=residual, candidates=candidates, n_points=len(pts))


def random_ambient_points(m, count, seed, half_width=1.5):
    rng = np.random.default_rng(seed)
    return list(rng.uniform(-half_width, half_width, size=(count, 2 * m)))
