"""Tangential/normal decomposition of J along a submanifold and the slant function."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPointwiseSlantError
from .submanifold import point_geometry
from .tolerances import DEFAULT_TOLERANCES


def pf_split(pg, X):
    """``JX = PX + FX`` for a tangent vector ``X``."""
    JX = pg.ambient.J_apply(X)
    return pg.tangential(JX), pg.normal(JX)


def tf_split(pg, xi):
    """``J xi = t xi + f xi`` for a normal vector ``xi``."""
    Jxi = pg.ambient.J_apply(xi)
    return pg.tangential(Jxi), pg.normal(Jxi)


def P(pg, X):
    return pg.tangential(pg.ambient.J_apply(X))


def F(pg, X):
    return pg.normal(pg.ambient.J_apply(X))


def base_frame(pg):
    return pg.coordinate_frame(pg.immersion.split.base)


def fiber_frame(pg):
    return pg.coordinate_frame(pg.immersion.split.fiber)


@dataclass(frozen=True)
class SlantAnalysis:
    theta: float
    cos2: float
    P_matrix: np.ndarray  # P in the orthonormal tangent frame, P_matrix[a, b] = g(P e_b, e_a)
    F_rank: int
    uniformity_defect: float
    holomorphic_defect: float
    fiber: np.ndarray  # orthonormal frame of the slant block used for the analysis

    @property
    def sin2(self):
        return 1.0 - self.cos2


def slant_function(pg, fiber=None, strict=True, tol=None):
    """Slant value of the fiber block at the point.

    ``cos^2`` is the mean of ``|PW|^2`` over an orthonormal fiber frame; the
    uniformity defect is the spread of the eigenvalues of the quadratic form
    ``W -> |PW|^2`` restricted to the block.  ``fiber`` overrides the declared
    fiber frame (rows, assumed orthonormal).
    """
    if tol is None:
        tol = DEFAULT_TOLERANCES["slant_uniformity"]
    W = fiber_frame(pg).vectors if fiber is None else np.atleast_2d(np.asarray(fiber, dtype=float))
    PW = np.array([P(pg, w) for w in W])
    Q = pg.conformal_weight * (PW @ PW.T)
    cos2 = float(np.trace(Q)) / W.shape[0]
    eig = np.linalg.eigvalsh(Q)
    defect = float(np.max(np.abs(eig - cos2)))
    if strict and defect > tol:
        raise NotPointwiseSlantError(defect)
    cos2 = min(max(cos2, 0.0), 1.0)
    E = pg.tangent_frame.vectors
    Pmat = np.array([[pg.inner(P(pg, eb), ea) for eb in E] for ea in E])
    FW = np.array([F(pg, w) for w in W])
    F_rank = int(np.linalg.matrix_rank(pg.conformal_weight * (FW @ FW.T), tol=1e-9))
    split = pg.immersion.split
    hol = 0.0
    if split is not None and split.base:
        for X in base_frame(pg).vectors:
            hol = max(hol, pg.norm(F(pg, X)))
    return SlantAnalysis(
        theta=math.acos(math.sqrt(cos2)),
        cos2=cos2,
        P_matrix=Pmat,
        F_rank=F_rank,
        uniformity_defect=defect,
        holomorphic_defect=hol,
        fiber=W,
    )


def slant_derivatives(pg):
    """Chart partials of ``cos^2(theta)`` and ``theta`` of the fiber block.

    Uses the fiber coordinate basis: with ``G`` its Euclidean Gram matrix and
    ``K[a, b] = <J d_a, d_b>`` the matrix of P is ``T = G^-1 K^T`` and
    ``cos^2 = -tr(T^2) / dim``; both are differentiated through the second
    partials of the immersion.  The conformal factor cancels.  Valid where the
    fiber block is J-orthogonal to the base block (true for every block-split
    warped scenario).
    """
    idx = list(pg.immersion.split.fiber)
    J1, J2 = pg.jet.d1, pg.jet.d2
    amb = pg.ambient
    B = J1[:, idx]
    dB = J2[:, :, idx]  # dB[:, k, a] = d_k d_a phi
    JB = np.array([amb.J_apply(b) for b in B.T]).T
    G = B.T @ B
    K = JB.T @ B
    Ginv = np.linalg.inv(G)
    T = Ginv @ K.T
    d = len(idx)
    cos2 = -float(np.trace(T @ T)) / d
    n = pg.n
    dcos2 = np.zeros(n)
    for k in range(n):
        dBk = dB[:, k, :]
        dG = dBk.T @ B + B.T @ dBk
        JdBk = np.array([amb.J_apply(b) for b in dBk.T]).T
        dK = JdBk.T @ B + JB.T @ dBk
        dT = -Ginv @ dG @ Ginv @ K.T + Ginv @ dK.T
        dcos2[k] = -2.0 * float(np.trace(T @ dT)) / d
    denom = 2.0 * math.sqrt(max(cos2, 0.0) * max(1.0 - cos2, 0.0))
    dtheta = -dcos2 / denom if denom > 0 else np.full(n, np.nan)
    return cos2, dcos2, dtheta


def slant_identity_residuals(pg, analysis=None, fiber=None):
    """Residuals of the slant identities over the fiber frame.

    Keys: ``p_squared`` (P^2 W = -cos^2 W), ``p_isometry`` (g(PW,PV) = cos^2 g(W,V)),
    ``f_isometry`` (g(FW,FV) = sin^2 g(W,V)), ``tf_identity`` (tFW = -sin^2 W),
    ``ff_identity`` (fFW = -FPW).
    """
    if analysis is None:
        analysis = slant_function(pg, fiber=fiber, strict=False)
    W = analysis.fiber if fiber is None else np.atleast_2d(np.asarray(fiber, dtype=float))
    c2, s2 = analysis.cos2, analysis.sin2
    out = {k: 0.0 for k in ("p_squared", "p_isometry", "f_isometry", "tf_identity", "ff_identity")}
    for a, w in enumerate(W):
        Pw, Fw = pf_split(pg, w)
        out["p_squared"] = max(out["p_squared"], pg.norm(P(pg, Pw) + c2 * w))
        t, f = tf_split(pg, Fw)
        out["tf_identity"] = max(out["tf_identity"], pg.norm(t + s2 * w))
        out["ff_identity"] = max(out["ff_identity"], pg.norm(f + F(pg, Pw)))
        for b, v in enumerate(W):
            Pv, Fv = pf_split(pg, v)
            gwv = pg.inner(w, v)
            out["p_isometry"] = max(out["p_isometry"], abs(pg.inner(Pw, Pv) - c2 * gwv))
            out["f_isometry"] = max(out["f_isometry"], abs(pg.inner(Fw, Fv) - s2 * gwv))
    return out


def skewness_defect(pg):
    E = pg.tangent_frame.vectors
    worst = 0.0
    for X in E:
        PX = P(pg, X)
        for Y in E:
            worst = max(worst, abs(pg.inner(PX, Y) + pg.inner(X, P(pg, Y))))
    return worst


def block_h_norms(pg):
    """Largest ``|h|`` over base-base, fiber-fiber and mixed frame pairs."""
    B = base_frame(pg).vectors if pg.immersion.split.base else np.zeros((0, len(pg.x)))
    Z = fiber_frame(pg).vectors if pg.immersion.split.fiber else np.zeros((0, len(pg.x)))

    def worst(U, V):
        return max((pg.norm(pg.h_vec(a, b)) for a in U for b in V), default=0.0)

    return {"base": worst(B, B), "fiber": worst(Z, Z), "mixed": worst(B, Z)}


@dataclass(frozen=True)
class PointClassification:
    u: tuple
    theta: float
    cos2: float
    proper: bool
    holomorphic: bool
    totally_real: bool
    base_geodesic: bool
    fiber_geodesic: bool
    mixed_geodesic: bool
    h_norms: dict


def classify_point(pg, tol=None, properness=None):
    if tol is None:
        tol = DEFAULT_TOLERANCES["geodesic_flag"]
    if properness is None:
        properness = DEFAULT_TOLERANCES["properness"]
    split = pg.immersion.split
    if split.fiber:
        sa = slant_function(pg)
        theta, cos2 = sa.theta, sa.cos2
    else:
        theta, cos2 = 0.0, 1.0
    norms = block_h_norms(pg)
    has_base = bool(split.base)
    return PointClassification(
        u=tuple(float(c) for c in pg.u),
        theta=theta,
        cos2=cos2,
        proper=has_base and bool(split.fiber) and properness < cos2 < 1.0 - properness,
        holomorphic=not split.fiber or cos2 > 1.0 - properness,
        totally_real=bool(split.fiber) and cos2 < properness,
        base_geodesic=norms["base"] < tol,
        fiber_geodesic=norms["fiber"] < tol,
        mixed_geodesic=norms["mixed"] < tol,
        h_norms=norms,
    )


@dataclass(frozen=True)
class StructureReport:
    points: list

    @property
    def proper_pointwise_semi_slant(self):
        return bool(self.points) and all(p.proper for p in self.points)

    @property
    def slant_is_constant(self):
        thetas = [p.theta for p in self.points]
        return max(thetas) - min(thetas) < 1e-9

    def flag(self, name):
        return all(getattr(p, name) for p in self.points)

    def summary(self):
        kind = "holomorphic"
        if self.proper_pointwise_semi_slant:
            kind = "proper semi-slant" if self.slant_is_constant else "proper pointwise semi-slant"
        elif self.flag("totally_real"):
            kind = "CR"
        return {
            "kind": kind,
            "base_geodesic": self.flag("base_geodesic"),
            "fiber_geodesic": self.flag("fiber_geodesic"),
            "mixed_geodesic": self.flag("mixed_geodesic"),
        }


def classify(imm, amb, points, tol=None):
    """Per-point semi-slant status and geodesic flags over sample points."""
    pts = list(points)
    if not pts:
        raise ValueError("classification needs at least one sample point")
    return StructureReport([classify_point(point_geometry(imm, amb, u), tol=tol) for u in pts])
