"""Geometry of an immersed chart relative to the conformal ambient metric."""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets
from .errors import DegenerateFrameError, DegenerateImmersionError
from .tolerances import DEFAULT_TOLERANCES


@dataclass(frozen=True)
class Split:
    """Partition of chart coordinates into base (holomorphic) and fiber (slant) indices."""

    base: tuple
    fiber: tuple

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(int(i) for i in self.base))
        object.__setattr__(self, "fiber", tuple(int(i) for i in self.fiber))
        if len(self.base) % 2 or len(self.fiber) % 2:
            raise ValueError("base and fiber blocks must have even size")
        if set(self.base) & set(self.fiber):
            raise ValueError("base and fiber indices overlap")

    @property
    def p(self):
        return len(self.base) // 2

    @property
    def q(self):
        return len(self.fiber) // 2


def _always(u):
    return True


@dataclass(frozen=True)
class Immersion:
    name: str
    n: int
    ambient_dim: int
    phi: Callable
    domain: Callable = _always
    split: Optional[Split] = None
    coordinate_names: tuple = ()

    def __post_init__(self):
        if self.split is not None:
            idx = sorted(self.split.base + self.split.fiber)
            if idx != list(range(self.n)):
                raise ValueError("split must partition the chart coordinates")
        if not self.coordinate_names:
            object.__setattr__(self, "coordinate_names", tuple(f"u{i + 1}" for i in range(self.n)))

    def admits(self, u):
        return bool(self.domain(np.asarray(u, dtype=float)))

    def jet(self, u):
        jet = jets.evaluate_jet(self.phi, u, domain=self.domain)
        if jet.dim != self.ambient_dim:
            raise ValueError(f"{self.name}: map returned {jet.dim} components, expected {self.ambient_dim}")
        return jet

    def with_split(self, split):
        return Immersion(self.name, self.n, self.ambient_dim, self.phi, self.domain, split, self.coordinate_names)


@dataclass(frozen=True)
class PointGeometry:
    """Frames, induced metric and second fundamental form at one chart point.

    ``h[i, j]`` is the ambient normal vector ``h(d_i, d_j)`` for coordinate
    fields; frame-level quantities contract it with coordinate components.
    """

    u: np.ndarray
    x: np.ndarray
    jet: jets.Jet2
    ambient: object
    immersion: Immersion
    conformal_weight: float  # exp(-f(x))
    tangent_frame: jets.GramFrame
    normal_frame: jets.GramFrame
    induced_metric: np.ndarray
    h: np.ndarray
    mean_curvature: np.ndarray
    gamma: np.ndarray = field(repr=False)

    @property
    def jacobian(self):
        return self.jet.d1

    @property
    def n(self):
        return self.jet.n

    def inner(self, V, W):
        return self.conformal_weight * float(np.dot(V, W))

    def norm(self, V):
        return math.sqrt(max(self.inner(V, V), 0.0))

    def tangential(self, V):
        E = self.tangent_frame.vectors
        return (self.conformal_weight * (E @ V)) @ E

    def normal(self, V):
        N = self.normal_frame.vectors
        if N.shape[0] == 0:
            return np.zeros_like(np.asarray(V, dtype=float))
        return (self.conformal_weight * (N @ V)) @ N

    def coordinates_of(self, V):
        """Chart components of a tangent vector."""
        rhs = self.conformal_weight * (self.jacobian.T @ V)
        return jets.solve_spd(self.induced_metric, rhs)

    def h_vec(self, X, Y):
        """``h(X, Y)`` for ambient tangent vectors."""
        a = self.coordinates_of(X)
        b = self.coordinates_of(Y)
        return np.einsum("i,j,ijk->k", a, b, self.h)

    def coordinate_frame(self, indices):
        return jets.gram_schmidt(self.jacobian[:, list(indices)].T, metric=self.conformal_weight * np.eye(len(self.x)))


def _normal_frame(tangent, weight, dim, rank_tol):
    """Complete an orthonormal tangent frame by projected ambient coordinate vectors.

    Candidates are chosen largest-residual-first, which is deterministic and
    avoids nearly dependent picks.
    """
    chosen = [v for v in tangent.vectors]
    normals = []
    k = dim - len(chosen)
    basis = np.eye(dim)
    for _ in range(k):
        best, best_norm = None, -1.0
        for e in basis:
            w = e.copy()
            for _ in range(2):
                for b in chosen:
                    w = w - weight * float(b @ w) * b
            nw = weight * float(w @ w)
            if nw > best_norm + 1e-14:
                best, best_norm = w, nw
        if best_norm <= rank_tol * weight:
            raise DegenerateFrameError(len(normals), math.sqrt(max(best_norm, 0.0)))
        v = best / math.sqrt(best_norm)
        chosen.append(v)
        normals.append(v)
    vectors = np.array(normals).reshape(len(normals), dim)
    return jets.GramFrame(vectors=vectors, gram=jets.gram_matrix(vectors, weight * np.eye(dim)), orthonormal=True)


def point_geometry(imm, amb, u, rank_tol=None):
    """Full extrinsic data of ``imm`` at chart point ``u`` in ambient ``amb``."""
    if rank_tol is None:
        rank_tol = DEFAULT_TOLERANCES["rank"]
    u = np.asarray(u, dtype=float)
    jet = imm.jet(u)
    x = jet.value
    weight = math.exp(-amb.factor_value(x))
    dim = amb.dim
    metric = weight * np.eye(dim)
    J1 = jet.d1
    try:
        tangent = jets.gram_schmidt(J1.T, metric=metric, rank_tol=rank_tol)
    except DegenerateFrameError as exc:
        raise DegenerateImmersionError(u, str(exc)) from exc
    normal = _normal_frame(tangent, weight, dim, rank_tol)
    G = weight * (J1.T @ J1)
    gamma = amb.christoffel(x)
    n = jet.n
    N = normal.vectors
    h = np.zeros((n, n, dim))
    for i in range(n):
        for j in range(i, n):
            acc = jet.d2[:, i, j] + amb.connection(x, J1[:, i], J1[:, j], gamma)
            hij = (weight * (N @ acc)) @ N if N.shape[0] else np.zeros(dim)
            h[i, j] = h[j, i] = hij
    Ginv = np.linalg.inv(G)
    H = np.einsum("ij,ijk->k", Ginv, h) / n
    return PointGeometry(
        u=u,
        x=x,
        jet=jet,
        ambient=amb,
        immersion=imm,
        conformal_weight=weight,
        tangent_frame=tangent,
        normal_frame=normal,
        induced_metric=G,
        h=h,
        mean_curvature=H,
        gamma=gamma,
    )


def shape_operator(pg, xi, X, check_normal=True):
    """``A_xi X`` defined by ``g(A_xi X, Y) = g(h(X, Y), xi)`` for every tangent ``Y``."""
    xi = np.asarray(xi, dtype=float)
    if check_normal:
        tan = pg.tangential(xi)
        if pg.norm(tan) > 1e-8 * max(pg.norm(xi), 1.0):
            raise ValueError("xi is not normal to the submanifold")
    a = pg.coordinates_of(X)
    hx = np.einsum("i,ijk->jk", a, pg.h)  # h(X, d_j)
    rhs = pg.conformal_weight * (hx @ xi)
    c = jets.solve_spd(pg.induced_metric, rhs)
    return pg.jacobian @ c


def gauss_weingarten_check(pg):
    """Worst ``|g(h(X,Y), xi) - g(A_xi X, Y)|`` over orthonormal frames."""
    worst = 0.0
    E = pg.tangent_frame.vectors
    for xi in pg.normal_frame.vectors:
        for X in E:
            AX = shape_operator(pg, xi, X, check_normal=False)
            for Y in E:
                worst = max(worst, abs(pg.inner(pg.h_vec(X, Y), xi) - pg.inner(AX, Y)))
    return worst


def tangent_normal_defect(pg):
    cross = pg.conformal_weight * (pg.tangent_frame.vectors @ pg.normal_frame.vectors.T)
    return float(np.max(np.abs(cross), initial=0.0))


def h_symmetry_defect(pg):
    E = pg.tangent_frame.vectors
    worst = 0.0
    for a, X in enumerate(E):
        for Y in E[a + 1:]:
            worst = max(worst, pg.norm(pg.h_vec(X, Y) - pg.h_vec(Y, X)))
    return worst


def h_norm_sq(pg, frame=None):
    """Squared norm of h summed over an orthonormal tangent frame."""
    E = pg.tangent_frame.vectors if frame is None else np.asarray(frame)
    total = 0.0
    for X in E:
        for Y in E:
            v = pg.h_vec(X, Y)
            total += pg.inner(v, v)
    return total


def connection_component(imm, amb, u, i, j, Z, pg=None):
    """``g(nabla_{d_i} d_j, Z)`` for chart coordinate fields and a tangent ``Z``.

    Only coordinate fields are accepted: ``i`` and ``j`` must be chart
    indices.
    """
    for idx in (i, j):
        if isinstance(idx, bool) or not isinstance(idx, (int, np.integer)):
            raise TypeError("connection_component only accepts chart coordinate indices")
    if pg is None:
        pg = point_geometry(imm, amb, u)
    Z = np.asarray(Z, dtype=float)
    if pg.norm(pg.normal(Z)) > 1e-8 * max(pg.norm(Z), 1.0):
        raise ValueError("Z must be tangent")
    J1 = pg.jacobian
    acc = pg.jet.d2[:, i, j] + amb.connection(pg.x, J1[:, i], J1[:, j], pg.gamma)
    return pg.inner(acc, Z)


def covariant_coordinate_derivative(pg, i, j):
    """Tangential part of the ambient derivative of ``d_j`` along ``d_i``."""
    J1 = pg.jacobian
    acc = pg.jet.d2[:, i, j] + pg.ambient.connection(pg.x, J1[:, i], J1[:, j], pg.gamma)
    return pg.tangential(acc)


def induced_metric_derivative(pg, flat=False):
    """``dG[k, i, j]``, the chart partial ``d_k`` of the induced metric.

    With ``flat`` the Euclidean induced metric (conformal factor dropped) is
    differentiated instead.
    """
    J1, J2 = pg.jet.d1, pg.jet.d2
    G0 = J1.T @ J1
    dG0 = np.einsum("aki,aj->kij", J2, J1) + np.einsum("ai,akj->kij", J1, J2)
    if flat:
        return dG0
    df = pg.ambient.factor_gradient(pg.x)
    dF = J1.T @ df  # chart partials of f along the immersion
    return pg.conformal_weight * (dG0 - np.einsum("k,ij->kij", dF, G0))
