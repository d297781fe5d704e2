"""Warped-product pointwise semi-slant submanifolds: warping extraction, identity
residuals, characterization checks and the second fundamental form inequality.

The warping is recovered against the flat induced fiber metric:
``psi = ln(warp) = 1/2 ln(tr(G_fib Ghat_fib^-1) / dim)``, where ``G`` is the
induced metric in the conformal ambient and ``Ghat`` the one induced from the
flat metric.  For ``g = exp(-f) g0`` this is ``-f/2`` along the immersion.

Two-sided identities compare a side computed from ``h`` or ``A`` with a side
computed from warp derivatives and the Lee vector, so the two code paths share
no intermediate result beyond the point geometry itself.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FrameUndefinedError, ImproperPointError, ModeMismatchError, NotWarpedProductError
from .slant import F, P, base_frame, fiber_frame, slant_derivatives, slant_function
from .submanifold import h_norm_sq, induced_metric_derivative, point_geometry, shape_operator
from .tolerances import DEFAULT_TOLERANCES

IMPROPER_THRESHOLD = 1e-6


@dataclass(frozen=True)
class WarpedStructure:
    warp_log: float
    warp_log_partials: np.ndarray  # chart partials of psi
    grad_warp_log: np.ndarray  # ambient vector, gradient over the base block
    block_defect: float
    fiber_shape_defect: float
    fiber_gradient_defect: float
    base_fiber_dependence: float

    def worst_defect(self):
        return max(self.block_defect, self.fiber_shape_defect, self.fiber_gradient_defect, self.base_fiber_dependence)


def _rel(a, b):
    return float(np.max(np.abs(a), initial=0.0)) / max(float(np.max(np.abs(b), initial=0.0)), 1e-300)


def warped_structure_from_geometry(pg):
    split = pg.immersion.split
    B, Z = list(split.base), list(split.fiber)
    G = pg.induced_metric
    d = np.sqrt(np.diag(G))
    block = float(np.max(np.abs(G[np.ix_(B, Z)]) / np.outer(d[B], d[Z]), initial=0.0))

    J1 = pg.jacobian
    G0 = J1.T @ J1
    ref = G0[np.ix_(Z, Z)]
    ref_inv = np.linalg.inv(ref)
    ratio = G[np.ix_(Z, Z)] @ ref_inv
    dim = len(Z)
    scale = float(np.trace(ratio)) / dim
    shape_defect = float(np.max(np.abs(ratio - scale * np.eye(dim)))) / scale
    psi = 0.5 * math.log(scale)

    dG = induced_metric_derivative(pg)
    dG0 = induced_metric_derivative(pg, flat=True)
    n = pg.n
    dpsi = np.empty(n)
    for k in range(n):
        dratio = dG[k][np.ix_(Z, Z)] @ ref_inv - G[np.ix_(Z, Z)] @ ref_inv @ dG0[k][np.ix_(Z, Z)] @ ref_inv
        dpsi[k] = 0.5 * float(np.trace(dratio)) / float(np.trace(ratio))

    GB = G[np.ix_(B, B)]
    GZ = G[np.ix_(Z, Z)]
    fib_grad = math.sqrt(max(float(dpsi[Z] @ np.linalg.solve(GZ, dpsi[Z])), 0.0))
    # base block must not move along the fiber, reference fiber block not along the base
    dep = 0.0
    for k in Z:
        dep = max(dep, _rel(dG[k][np.ix_(B, B)], GB))
    for k in B:
        dep = max(dep, _rel(dG0[k][np.ix_(Z, Z)], ref))
    c = np.linalg.solve(GB, dpsi[B])
    grad = J1[:, B] @ c
    return WarpedStructure(
        warp_log=psi,
        warp_log_partials=dpsi,
        grad_warp_log=grad,
        block_defect=block,
        fiber_shape_defect=shape_defect,
        fiber_gradient_defect=fib_grad,
        base_fiber_dependence=dep,
    )


def _check_warped(ws, tol):
    for name in ("block_defect", "fiber_shape_defect", "fiber_gradient_defect", "base_fiber_dependence"):
        value = getattr(ws, name)
        if value > tol:
            raise NotWarpedProductError(name, value)


def extract_warped_structure(imm, amb, u, strict=True, pg=None, tol=None):
    """Warping data at ``u``; raises :class:`NotWarpedProductError` when ``strict``
    and any warped-product defect exceeds ``tol``."""
    if tol is None:
        tol = DEFAULT_TOLERANCES["warped_block"]
    if pg is None:
        pg = point_geometry(imm, amb, u)
    ws = warped_structure_from_geometry(pg)
    if strict:
        _check_warped(ws, tol)
    return ws


class PointContext:
    """Lazily shared per-point data for the warped checks."""

    def __init__(self, imm, amb, u, pg=None):
        self.imm = imm
        self.amb = amb
        self.u = np.asarray(u, dtype=float)
        self.pg = point_geometry(imm, amb, u) if pg is None else pg
        self._cache = {}

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def warped(self):
        return self._get("warped", lambda: warped_structure_from_geometry(self.pg))

    @property
    def slant(self):
        return self._get("slant", lambda: slant_function(self.pg, strict=False))

    @property
    def base(self):
        """Orthonormal base frame ``{e_1, Je_1, ...}``."""
        return self._get("base", lambda: _holomorphic_frame(self.pg))

    @property
    def fiber(self):
        return self._get("fiber", lambda: fiber_frame(self.pg).vectors)

    @property
    def lee(self):
        return self._get("lee", lambda: self.amb.lee_vector(self.pg.x))

    @property
    def slant_derivatives(self):
        return self._get("dslant", lambda: slant_derivatives(self.pg))

    @property
    def tangent_connection(self):
        """``C[i, j]``: tangential part of the ambient derivative of ``d_j`` along ``d_i``."""

        def build():
            pg = self.pg
            J1 = pg.jacobian
            n = pg.n
            C = np.zeros((n, n, len(pg.x)))
            for i in range(n):
                for j in range(i, n):
                    acc = pg.jet.d2[:, i, j] + self.amb.connection(pg.x, J1[:, i], J1[:, j], pg.gamma)
                    C[i, j] = C[j, i] = pg.tangential(acc)
            return C

        return self._get("conn", build)

    def coords(self, X):
        return self.pg.coordinates_of(X)

    def dpsi(self, X):
        """``X(psi)`` for a tangent vector."""
        return float(self.warped.warp_log_partials @ self.coords(X))

    def alpha(self, X):
        return self.pg.inner(self.lee, X)

    def nabla(self, X, Y):
        """``g``-tangent ``nabla_X Y`` for vectors whose coordinate extension is
        irrelevant (``Y`` orthogonal to the pairing direction)."""
        a, b = self.coords(X), self.coords(Y)
        return np.einsum("i,j,ijk->k", a, b, self.tangent_connection)

    def dtheta(self, X):
        return float(self.slant_derivatives[2] @ self.coords(X))


def context(imm, amb, u, ctx=None):
    return PointContext(imm, amb, u) if ctx is None else ctx


def _holomorphic_frame(pg, tol=1e-9):
    """Orthonormal ``{e_1, .., e_p, Je_1, .., Je_p}`` built from the base coordinate fields.

    If the declared base block is not J-invariant the plain orthonormalized
    coordinate frame is returned instead, so a misdeclared split shows up in
    the residuals rather than being silently repaired.
    """
    plain = base_frame(pg).vectors if pg.immersion.split.base else np.zeros((0, len(pg.x)))
    chosen = []
    for v in plain:
        w = v.copy()
        for _ in range(2):
            for b in chosen:
                w = w - pg.inner(b, w) * b
        nw = pg.inner(w, w)
        if nw <= 1e-20:
            continue
        e = w / math.sqrt(nw)
        Je = pg.ambient.J_apply(e)
        off_block = Je - sum(pg.inner(Je, b) * b for b in plain)
        if pg.norm(off_block) > tol:
            return plain
        chosen.extend([e, Je])
        if len(chosen) == plain.shape[0]:
            break
    p = len(chosen) // 2
    return np.array(chosen[0::2] + chosen[1::2]).reshape(2 * p, len(pg.x))


# -- identity residuals ------------------------------------------------------


def wl1_residual(imm, amb, u, ctx=None):
    """Worst ``|tan(nabla_X Z) - X(psi) Z|`` over base and fiber coordinate fields,
    relative to ``|X||Z|``; also covers ``nabla_Z X`` by symmetry of the connection."""
    ctx = context(imm, amb, u, ctx)
    pg = ctx.pg
    split = imm.split
    C = ctx.tangent_connection
    J1 = pg.jacobian
    dpsi = ctx.warped.warp_log_partials
    worst = 0.0
    for a in split.base:
        for z in split.fiber:
            r = C[a, z] - dpsi[a] * J1[:, z]
            worst = max(worst, pg.norm(r) / (pg.norm(J1[:, a]) * pg.norm(J1[:, z])))
    return worst


def wp1_check(imm, amb, u, ctx=None):
    """Worst ``|g(lambda, Z)|`` over the orthonormal fiber frame."""
    ctx = context(imm, amb, u, ctx)
    return max((abs(ctx.alpha(Z)) for Z in ctx.fiber), default=0.0)


def _ab(ctx, X):
    JX = P(ctx.pg, X)
    return ctx.alpha(X) - ctx.dpsi(X), ctx.alpha(JX) - ctx.dpsi(JX)


MIXED_KEYS = (
    "base_base_normal",
    "mixed",
    "mixed_p_fiber",
    "mixed_fp_normal",
    "mixed_p_fiber_fp_normal",
    "mixed_j_base",
    "mixed_j_base_p_fiber",
    "mixed_j_base_fp_normal",
    "mixed_j_base_p_fiber_fp_normal",
    "mixed_antisymmetry",
)


def wl2_signed(ctx):
    """Signed residuals ``lhs - rhs`` per relation, indexed by frame tuple."""
    pg = ctx.pg
    c2 = ctx.slant.cos2
    base, fib = ctx.base, ctx.fiber
    g = pg.inner
    out = {k: {} for k in MIXED_KEYS}
    for i, X in enumerate(base):
        for j, Y in enumerate(base):
            for z, Z in enumerate(fib):
                out["base_base_normal"][(i, j, z)] = g(pg.h_vec(X, Y), F(pg, Z))
    for i, X in enumerate(base):
        a, b = _ab(ctx, X)
        JX = P(pg, X)
        for z, Z in enumerate(fib):
            PZ = P(pg, Z)
            for w, W in enumerate(fib):
                PW = P(pg, W)
                FW, FPW = F(pg, W), F(pg, PW)
                gZW, gZPW = g(Z, W), g(Z, PW)
                hXZ, hXPZ = pg.h_vec(X, Z), pg.h_vec(X, PZ)
                hJZ, hJPZ = pg.h_vec(JX, Z), pg.h_vec(JX, PZ)
                key = (i, z, w)
                out["mixed"][key] = g(hXZ, FW) - (b * gZW + a * gZPW)
                out["mixed_p_fiber"][key] = g(hXPZ, FW) - (-b * gZPW + c2 * a * gZW)
                out["mixed_fp_normal"][key] = g(hXZ, FPW) - (-c2 * a * gZW + b * gZPW)
                out["mixed_p_fiber_fp_normal"][key] = g(hXPZ, FPW) - (c2 * b * gZW + c2 * a * gZPW)
                out["mixed_j_base"][key] = g(hJZ, FW) - (-a * gZW + b * gZPW)
                out["mixed_j_base_p_fiber"][key] = g(hJPZ, FW) - (a * gZPW + c2 * b * gZW)
                out["mixed_j_base_fp_normal"][key] = g(hJZ, FPW) - (-c2 * b * gZW - a * gZPW)
                out["mixed_j_base_p_fiber_fp_normal"][key] = g(hJPZ, FPW) - (-c2 * a * gZW + c2 * b * gZPW)
                out["mixed_antisymmetry"][key] = g(hXPZ, FW) + g(hXZ, FPW)
    return out


def wl2_residuals(imm, amb, u, ctx=None):
    """Worst absolute residual of each mixed second fundamental form relation.

    ``a(X) = g(lambda, X) - X(psi)`` and ``b(X) = g(lambda, JX) - JX(psi)``;
    keys name the slots: ``p_fiber`` puts ``PZ`` in the tangent slot,
    ``fp_normal`` pairs with ``FPW``, ``j_base`` uses ``JX``.
    """
    ctx = context(imm, amb, u, ctx)
    signed = wl2_signed(ctx)
    return {k: max((abs(v) for v in signed[k].values()), default=0.0) for k in MIXED_KEYS}


def wt2_signed(ctx):
    pg = ctx.pg
    s2 = ctx.slant.sin2
    out = {}
    for i, X in enumerate(ctx.base):
        JX = P(pg, X)
        gap = ctx.dpsi(X) - ctx.alpha(X)
        for z, Z in enumerate(ctx.fiber):
            FZ, FPZ = F(pg, Z), F(pg, P(pg, Z))
            V = shape_operator(pg, FZ, JX, check_normal=False) - shape_operator(pg, FPZ, X, check_normal=False)
            for w, W in enumerate(ctx.fiber):
                out[(i, z, w)] = pg.inner(V, W) - s2 * gap * pg.inner(Z, W)
    return out


def wt2_residual(imm, amb, u, ctx=None):
    """Worst ``|g(A_FZ JX - A_FPZ X, W) - sin^2 (X(psi) - alpha(X)) g(Z, W)|``."""
    ctx = context(imm, amb, u, ctx)
    return max((abs(v) for v in wt2_signed(ctx).values()), default=0.0)


def wt2_consistency(imm, amb, u, ctx=None):
    """Worst gap between the shape-operator residual above and the matching
    combination of two second fundamental form relations (slots swapped)."""
    ctx = context(imm, amb, u, ctx)
    wt = wt2_signed(ctx)
    s = wl2_signed(ctx)
    return max(
        (abs(v - (s["mixed_j_base"][(i, w, z)] - s["mixed_fp_normal"][(i, w, z)])) for (i, z, w), v in wt.items()),
        default=0.0,
    )


def _require_proper(ctx):
    s = ctx.slant
    if s.sin2 < IMPROPER_THRESHOLD or s.cos2 < IMPROPER_THRESHOLD:
        raise ImproperPointError(f"slant cos^2 = {s.cos2:.3e} is too close to 0 or 1")


def tc1_residual(imm, amb, u, ctx=None):
    """``|X(psi) - alpha(X) - tan(theta) X(theta)|`` per base frame vector ``e1, e2, ...``."""
    ctx = context(imm, amb, u, ctx)
    _require_proper(ctx)
    t = math.tan(ctx.slant.theta)
    return {
        f"e{i + 1}": abs(ctx.dpsi(X) - ctx.alpha(X) - t * ctx.dtheta(X)) for i, X in enumerate(ctx.base)
    }


def tc2_characterization_residual(imm, amb, u, ctx=None):
    """Worst ``|A_FZ JX - A_FPZ X - sin^2 (X(psi) - alpha(X)) Z|`` over base and fiber frames."""
    ctx = context(imm, amb, u, ctx)
    pg = ctx.pg
    s2 = ctx.slant.sin2
    worst = 0.0
    for X in ctx.base:
        JX = P(pg, X)
        gap = ctx.dpsi(X) - ctx.alpha(X)
        for Z in ctx.fiber:
            FZ, FPZ = F(pg, Z), F(pg, P(pg, Z))
            V = shape_operator(pg, FZ, JX, check_normal=False) - shape_operator(pg, FPZ, X, check_normal=False)
            worst = max(worst, pg.norm(V - s2 * gap * Z))
    return worst


def cr_shape_residual(imm, amb, u, ctx=None, tol=1e-9):
    """Totally real form: worst ``|A_JZ X + (g(J lambda, X) + JX(psi)) Z|``."""
    ctx = context(imm, amb, u, ctx)
    if ctx.slant.cos2 > tol:
        raise ModeMismatchError(f"fiber is not totally real (cos^2 = {ctx.slant.cos2:.3e})")
    pg = ctx.pg
    Jl = amb.J_apply(ctx.lee)
    worst = 0.0
    for X in ctx.base:
        coef = pg.inner(Jl, X) + ctx.dpsi(P(pg, X))
        for Z in ctx.fiber:
            A = shape_operator(pg, amb.J_apply(Z), X, check_normal=False)
            worst = max(worst, pg.norm(A + coef * Z))
    return worst


FOLIATION_KEYS = (
    "base_leaf",
    "fiber_leaf",
    "fiber_bracket",
    "fiber_bracket_antisymmetry",
    "holomorphic_integrability",
    "slant_integrability",
)


def foliation_residuals(imm, amb, u, ctx=None):
    """Residuals of the leaf relations and both integrability conditions.

    ``base_leaf``: ``sin^2 g(nabla_X Y, Z)`` against shape operator terms and
    the normal parts of the Lee vector.  ``fiber_leaf``: ``g(nabla_Z W, X)``
    against ``csc^2`` shape terms minus ``g(Z, W) alpha(X)``.  The bracket
    relations compare connection data with shape operator differences.  The
    holomorphic integrability condition is evaluated paired with ``FZ``; the
    unpaired vector form is reported by :func:`holomorphic_integrability_vector`.
    """
    ctx = context(imm, amb, u, ctx)
    _require_proper(ctx)
    pg = ctx.pg
    g = pg.inner
    s2 = ctx.slant.sin2
    lam = ctx.lee
    Jl = amb.J_apply(lam)
    out = dict.fromkeys(FOLIATION_KEYS, 0.0)

    def A(xi, X):
        return shape_operator(pg, xi, X, check_normal=False)

    def bump(key, value):
        out[key] = max(out[key], abs(value))

    for X in ctx.base:
        JX = P(pg, X)
        for Y in ctx.base:
            JY = P(pg, Y)
            for Z in ctx.fiber:
                FZ, FPZ = F(pg, Z), F(pg, P(pg, Z))
                lhs = s2 * g(ctx.nabla(X, Y), Z)
                rhs = g(A(FZ, JY) - A(FPZ, Y), X) - g(JX, Y) * g(lam, FZ) - g(X, Y) * g(Jl, FZ)
                bump("base_leaf", lhs - rhs)
                bump(
                    "holomorphic_integrability",
                    g(pg.h_vec(JY, X), FZ) - g(pg.h_vec(JX, Y), FZ) - 2.0 * g(JX, Y) * g(lam, FZ),
                )
        for Z in ctx.fiber:
            FZ, FPZ = F(pg, Z), F(pg, P(pg, Z))
            for W in ctx.fiber:
                FW, FPW = F(pg, W), F(pg, P(pg, W))
                lhs = g(ctx.nabla(Z, W), X)
                rhs = g(A(FPW, X) - A(FW, JX), Z) / s2 - g(Z, W) * ctx.alpha(X)
                bump("fiber_leaf", lhs - rhs)
                bracket = g(ctx.nabla(Z, W) - ctx.nabla(W, Z), X)
                side_zw = g(A(FZ, JX) - A(FPZ, X), W)
                side_wz = g(A(FW, JX) - A(FPW, X), Z)
                bump("fiber_bracket", s2 * bracket - (side_zw - side_wz))
                bracket_swapped = g(ctx.nabla(W, Z) - ctx.nabla(Z, W), X)
                bump("fiber_bracket_antisymmetry", bracket + bracket_swapped)
                bump("slant_integrability", side_wz - side_zw)
    return out


def holomorphic_integrability_vector(imm, amb, u, ctx=None):
    """Worst ``|h(JY, X) - h(JX, Y) - 2 g(JX, Y) lambda|`` with the Lee vector
    taken as is (mixing normal and tangent parts); diagnostic only."""
    ctx = context(imm, amb, u, ctx)
    pg = ctx.pg
    worst = 0.0
    for X in ctx.base:
        JX = P(pg, X)
        for Y in ctx.base:
            JY = P(pg, Y)
            v = pg.h_vec(JY, X) - pg.h_vec(JX, Y) - 2.0 * pg.inner(JX, Y) * ctx.lee
            worst = max(worst, pg.norm(v))
    return worst


# -- adapted frame and inequality --------------------------------------------


@dataclass(frozen=True)
class AdaptedFrame:
    base: np.ndarray  # e_1..e_p, Je_1..Je_p
    fiber: np.ndarray  # e*_1..e*_q, sec P e*_1..sec P e*_q
    slant_normal: np.ndarray  # csc F e*_j, csc sec F P e*_j
    invariant_normal: np.ndarray  # orthonormal frame of the complement nu

    @property
    def tangent(self):
        return np.vstack([self.base, self.fiber])

    @property
    def normal(self):
        return np.vstack([self.slant_normal, self.invariant_normal])

    def orthonormality_defect(self, pg):
        T, N = self.tangent, self.normal
        allv = np.vstack([T, N])
        G = pg.conformal_weight * (allv @ allv.T)
        return float(np.max(np.abs(G - np.eye(allv.shape[0]))))


def build_adapted_frame(pg, slant=None):
    """Frames ``{e_i, Je_i}``, ``{e*_j, sec P e*_j}``, ``{csc F e*_j, csc sec F P e*_j}`` and nu."""
    if slant is None:
        slant = slant_function(pg, strict=False)
    if slant.sin2 < IMPROPER_THRESHOLD or slant.cos2 < IMPROPER_THRESHOLD:
        raise FrameUndefinedError(f"adapted frame needs a proper point (cos^2 = {slant.cos2:.3e})")
    g = pg.inner
    base = _holomorphic_frame(pg)
    sec = 1.0 / math.sqrt(slant.cos2)
    csc = 1.0 / math.sqrt(slant.sin2)
    firsts, seconds = [], []
    for v in fiber_frame(pg).vectors:
        w = v.copy()
        for _ in range(2):
            for b in firsts + seconds:
                w = w - g(b, w) * b
        nw = g(w, w)
        if nw < 1e-20:
            continue
        e = w / math.sqrt(nw)
        firsts.append(e)
        seconds.append(sec * P(pg, e))
        if 2 * len(firsts) == len(pg.immersion.split.fiber):
            break
    fiber = np.array(firsts + seconds)
    slant_normal = np.array([csc * F(pg, e) for e in firsts] + [csc * sec * F(pg, P(pg, e)) for e in firsts])
    # complete the normal frame inside the normal space
    chosen = list(slant_normal)
    nu = []
    for cand in pg.normal_frame.vectors:
        w = cand.copy()
        for _ in range(2):
            for b in chosen:
                w = w - g(b, w) * b
        nw = g(w, w)
        if nw > 1e-12:
            e = w / math.sqrt(nw)
            chosen.append(e)
            nu.append(e)
    dim = len(pg.x)
    return AdaptedFrame(
        base=base,
        fiber=fiber,
        slant_normal=slant_normal,
        invariant_normal=np.array(nu).reshape(len(nu), dim),
    )


def chen_rhs(theta, q, grad_norm_sq, lee_tangent_norm_sq, g_star):
    s2 = math.sin(theta) ** 2
    if s2 == 0.0:
        raise ImproperPointError("csc is unbounded at theta = 0")
    coef = 1.0 / s2 + math.cos(theta) ** 2 / s2
    return 4.0 * q * coef * (grad_norm_sq + lee_tangent_norm_sq - 2.0 * g_star)


@dataclass(frozen=True)
class ChenReport:
    h_norm_sq: float
    theta: float
    q: int
    grad_norm_sq: float
    lee_tangent_norm_sq: float
    lee_norm_sq: float
    g_star: float
    rhs: float
    margin: float
    equality_diagnostics: dict = field(default_factory=dict)
    theta_gradient_norm: float = 0.0
    base_gap_sq: float = 0.0  # sum over the base frame of (alpha(e_i) - e_i(psi))^2

    @classmethod
    def synthetic(cls, theta, q, grad_norm_sq, lee_tangent_norm_sq, g_star, h_norm_sq=0.0, theta_gradient_norm=0.0):
        rhs = chen_rhs(theta, q, grad_norm_sq, lee_tangent_norm_sq, g_star)
        return cls(
            h_norm_sq=h_norm_sq,
            theta=theta,
            q=q,
            grad_norm_sq=grad_norm_sq,
            lee_tangent_norm_sq=lee_tangent_norm_sq,
            lee_norm_sq=lee_tangent_norm_sq,
            g_star=g_star,
            rhs=rhs,
            margin=h_norm_sq - rhs,
            theta_gradient_norm=theta_gradient_norm,
        )

    def to_dict(self):
        return {
            "h_norm_sq": self.h_norm_sq,
            "theta": self.theta,
            "q": self.q,
            "grad_norm_sq": self.grad_norm_sq,
            "lee_tangent_norm_sq": self.lee_tangent_norm_sq,
            "lee_norm_sq": self.lee_norm_sq,
            "g_star": self.g_star,
            "rhs": self.rhs,
            "margin": self.margin,
            "theta_gradient_norm": self.theta_gradient_norm,
            "base_gap_sq": self.base_gap_sq,
            "equality_diagnostics": dict(self.equality_diagnostics),
        }


def _block_norm(pg, U, V, project=None):
    worst = 0.0
    for a in U:
        for b in V:
            v = pg.h_vec(a, b)
            if project is not None:
                v = project(v)
            worst = max(worst, pg.norm(v))
    return worst


def chen_inequality(imm, amb, u, ctx=None, require_proper=True):
    """Both sides of the inequality ``|h|^2 >= 4q (csc^2 + cot^2)(|grad psi|^2 + |lambda_T|^2 - 2 G*)``.

    ``|h|^2`` is summed over the adapted frame; the right-hand side uses only
    warp derivatives and the Lee vector.  With ``require_proper=False`` a
    totally real fiber is accepted and plain orthonormal frames are used.
    """
    ctx = context(imm, amb, u, ctx)
    pg = ctx.pg
    s = ctx.slant
    if s.sin2 < IMPROPER_THRESHOLD:
        raise ImproperPointError(f"slant cos^2 = {s.cos2:.3e}: csc and cot are unbounded")
    if s.cos2 < IMPROPER_THRESHOLD:
        if require_proper:
            raise ImproperPointError(f"slant cos^2 = {s.cos2:.3e}: point is not proper")
        tangent = np.vstack([ctx.base, ctx.fiber])
        slant_normal = np.array([F(pg, Z) / pg.norm(F(pg, Z)) for Z in ctx.fiber])
    else:
        frame = build_adapted_frame(pg, s)
        tangent = frame.tangent
        slant_normal = frame.slant_normal
    h2 = h_norm_sq(pg, tangent)

    ws = ctx.warped
    grad = ws.grad_warp_log
    lam = ctx.lee
    lam_t = pg.tangential(lam)
    gstar = sum(pg.inner(grad, e) * pg.inner(lam, e) for e in ctx.base)
    rhs = chen_rhs(s.theta, imm.split.q, pg.inner(grad, grad), pg.inner(lam_t, lam_t), gstar)
    gap = sum((ctx.alpha(e) - ctx.dpsi(e)) ** 2 for e in ctx.base)

    def outside_slant_normal(v):
        return v - sum(pg.inner(v, e) * e for e in slant_normal)

    diag = {
        "base_block": _block_norm(pg, ctx.base, ctx.base),
        "fiber_block": _block_norm(pg, ctx.fiber, ctx.fiber),
        "mixed_off_slant_normal": _block_norm(pg, ctx.base, ctx.fiber, outside_slant_normal),
        "invariant_normal": _block_norm(pg, tangent, tangent, outside_slant_normal),
    }
    dth = ctx.slant_derivatives[2]
    tgrad = 0.0
    if np.all(np.isfinite(dth)):
        tgrad = math.sqrt(max(float(dth @ np.linalg.solve(pg.induced_metric, dth)), 0.0))
    return ChenReport(
        h_norm_sq=h2,
        theta=s.theta,
        q=imm.split.q,
        grad_norm_sq=pg.inner(grad, grad),
        lee_tangent_norm_sq=pg.inner(lam_t, lam_t),
        lee_norm_sq=pg.inner(lam, lam),
        g_star=gstar,
        rhs=rhs,
        margin=h2 - rhs,
        equality_diagnostics=diag,
        theta_gradient_norm=tgrad,
        base_gap_sq=gap,
    )


SPECIAL_MODES = ("kaehler", "cr", "constant-slant")


def special_case_report(chen, mode, lee_tol=1e-12, cr_tol=1e-9, slant_tol=1e-8):
    """Specialize the general right-hand side to a named regime.

    The regime's hypothesis is checked on ``chen``; a violation raises
    :class:`ModeMismatchError`.  The totally real regime reports both
    normalizations of the fiber dimension: ``q`` as half the fiber dimension
    and ``q`` as the full fiber dimension.
    """
    if mode not in SPECIAL_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    bracket = chen.grad_norm_sq + chen.lee_tangent_norm_sq - 2.0 * chen.g_star
    s2 = math.sin(chen.theta) ** 2
    out = {"mode": mode, "general_rhs": chen.rhs}
    if mode == "kaehler":
        if chen.lee_norm_sq > lee_tol:
            raise ModeMismatchError(f"Lee vector is nonzero (|lambda|^2 = {chen.lee_norm_sq:.3e})")
        coef = 1.0 / s2 + math.cos(chen.theta) ** 2 / s2
        special = 4.0 * chen.q * coef * chen.grad_norm_sq
        out.update(special_rhs=special)
    elif mode == "cr":
        c2 = math.cos(chen.theta) ** 2
        if c2 > cr_tol:
            raise ModeMismatchError(f"fiber is not totally real (cos^2 = {c2:.3e})")
        coef = 1.0 / s2 + c2 / s2
        half = 2.0 * chen.q * bracket  # paired with q = half the fiber dimension
        full = 2.0 * (2 * chen.q) * bracket  # paired with q = full fiber dimension
        out.update(
            coefficient=coef,
            coefficient_defect=abs(coef - 1.0),
            special_rhs=full,
            special_rhs_half_dimension=half,
            special_rhs_full_dimension=full,
        )
    else:
        if chen.theta_gradient_norm > slant_tol:
            raise ModeMismatchError(f"slant is not constant (|grad theta| = {chen.theta_gradient_norm:.3e})")
        out.update(special_rhs=chen_rhs(chen.theta, chen.q, chen.grad_norm_sq, chen.lee_tangent_norm_sq, chen.g_star))
        out.update(warp_lee_gap_sq=chen.base_gap_sq)
    out["defect"] = abs(out["general_rhs"] - out["special_rhs"])
    return out
