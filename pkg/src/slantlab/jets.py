"""Second-order forward-mode differentiation and small dense linear algebra.

Maps are written against the elementary functions exported here (``sin``,
``cos``, ``exp``, ...), which accept plain floats as well as :class:`Taylor2`
values.  :func:`evaluate_jet` seeds the chart coordinates and reads off the
value, first and second partials of every output component.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import DegenerateFrameError, DomainError, NotPositiveDefiniteError


class Taylor2:
    """Truncated second-order Taylor expansion of a scalar in ``n`` variables."""

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    @classmethod
    def variable(cls, value, index, n):
        grad = np.zeros(n)
        grad[index] = 1.0
        return cls(value, grad, np.zeros((n, n)))

    def _lift(self, other):
        if isinstance(other, Taylor2):
            return other
        n = self.grad.shape[0]
        return Taylor2(other, np.zeros(n), np.zeros((n, n)))

    def __add__(self, other):
        if not isinstance(other, Taylor2):
            return Taylor2(self.val + other, self.grad, self.hess)
        return Taylor2(self.val + other.val, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self):
        return Taylor2(-self.val, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Taylor2):
            return Taylor2(self.val * other, self.grad * other, self.hess * other)
        g1, g2 = self.grad, other.grad
        cross = np.outer(g1, g2)
        return Taylor2(
            self.val * other.val,
            self.val * g2 + other.val * g1,
            self.val * other.hess + other.val * self.hess + cross + cross.T,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.val
        if v == 0.0:
            raise ZeroDivisionError("Taylor2 division by a zero-valued expansion")
        return _compose(self, 1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if not isinstance(other, Taylor2):
            return self * (1.0 / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Taylor2):
            return exp(p * log(self))
        v = self.val
        if p == 0:
            return self._lift(1.0)
        if p == 1:
            return self
        if p == 2:
            return self * self
        return _compose(self, v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def __float__(self):
        return self.val

    def __repr__(self):
        return f"Taylor2({self.val!r}, grad={self.grad.tolist()!r})"


def _compose(x, f0, f1, f2):
    """Apply a univariate function with derivatives ``f0, f1, f2`` at ``x.val``."""
    g = x.grad
    return Taylor2(f0, f1 * g, f1 * x.hess + f2 * np.outer(g, g))


def apply_univariate(x, f0, f1, f2):
    """Chain rule hook for functions known only through their derivatives.

    ``f0, f1, f2`` are value, first and second derivative at ``float(x)``.
    Plain floats pass through returning ``f0``.
    """
    if isinstance(x, Taylor2):
        return _compose(x, f0, f1, f2)
    return f0


def sin(x):
    if isinstance(x, Taylor2):
        s, c = math.sin(x.val), math.cos(x.val)
        return _compose(x, s, c, -s)
    return math.sin(x)


def cos(x):
    if isinstance(x, Taylor2):
        s, c = math.sin(x.val), math.cos(x.val)
        return _compose(x, c, -s, -c)
    return math.cos(x)


def exp(x):
    if isinstance(x, Taylor2):
        e = math.exp(x.val)
        return _compose(x, e, e, e)
    return math.exp(x)


def log(x):
    if isinstance(x, Taylor2):
        v = x.val
        return _compose(x, math.log(v), 1.0 / v, -1.0 / v**2)
    return math.log(x)


def sqrt(x):
    if isinstance(x, Taylor2):
        r = math.sqrt(x.val)
        return _compose(x, r, 0.5 / r, -0.25 / (r * x.val))
    return math.sqrt(x)


@dataclass(frozen=True)
class Jet2:
    """Value, first partials (``dim x n``) and second partials (``dim x n x n``)."""

    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    @property
    def n(self):
        return self.d1.shape[1]

    @property
    def dim(self):
        return self.value.shape[0]

    def schwarz_defect(self):
        return float(np.max(np.abs(self.d2 - np.swapaxes(self.d2, 1, 2)), initial=0.0))


def evaluate_jet(fn, u, domain=None):
    """Second-order jet of ``fn`` at the chart point ``u``.

    ``fn`` maps a sequence of ``n`` coordinates to a sequence of outputs built
    from this module's elementary functions.  ``domain``, if given, is a
    predicate on the float point; points it rejects raise :class:`DomainError`.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ValueError("chart point must be one-dimensional")
    if domain is not None and not domain(u):
        raise DomainError(u)
    n = u.shape[0]
    seeds = [Taylor2.variable(u[i], i, n) for i in range(n)]
    out = fn(seeds)
    scalar = not isinstance(out, (list, tuple, np.ndarray))
    if scalar:
        out = [out]
    dim = len(out)
    value = np.empty(dim)
    d1 = np.zeros((dim, n))
    d2 = np.zeros((dim, n, n))
    for a, comp in enumerate(out):
        if isinstance(comp, Taylor2):
            value[a] = comp.val
            d1[a] = comp.grad
            d2[a] = comp.hess
        else:
            value[a] = float(comp)
    return Jet2(value=value, d1=d1, d2=d2)


def _as_float_vector(out):
    if isinstance(out, (list, tuple, np.ndarray)):
        return np.array([float(c) for c in out])
    return np.array([float(out)])


def central_difference(fn, u, step=1e-5, richardson=False):
    """Finite-difference oracle for the Jacobian of ``fn`` at ``u``.

    With ``richardson`` the step-``h`` and step-``h/2`` central differences are
    combined to cancel the leading ``h**2`` error term.
    """
    u = np.asarray(u, dtype=float)

    def cd(h):
        cols = []
        for i in range(u.shape[0]):
            e = np.zeros_like(u)
            e[i] = h
            cols.append((_as_float_vector(fn(list(u + e))) - _as_float_vector(fn(list(u - e)))) / (2 * h))
        return np.stack(cols, axis=1)

    d = cd(step)
    if richardson:
        d = (4.0 * cd(step / 2) - d) / 3.0
    return d


def central_second_difference(fn, u, step=1e-4):
    """Finite-difference oracle for second partials, shape ``dim x n x n``."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    f0 = _as_float_vector(fn(list(u)))
    out = np.zeros((f0.shape[0], n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = step
            ej[j] = step
            fpp = _as_float_vector(fn(list(u + ei + ej)))
            fpm = _as_float_vector(fn(list(u + ei - ej)))
            fmp = _as_float_vector(fn(list(u - ei + ej)))
            fmm = _as_float_vector(fn(list(u - ei - ej)))
            out[:, i, j] = (fpp - fpm - fmp + fmm) / (4 * step * step)
    return out


@dataclass(frozen=True)
class GramFrame:
    vectors: np.ndarray  # rows are the frame vectors
    gram: np.ndarray
    orthonormal: bool

    def __len__(self):
        return self.vectors.shape[0]

    def __iter__(self):
        return iter(self.vectors)

    def __getitem__(self, i):
        return self.vectors[i]

    def orthonormality_defect(self):
        k = len(self)
        return float(np.max(np.abs(self.gram - np.eye(k)), initial=0.0))


def _inner_product(metric):
    if metric is None:
        return lambda a, b: float(a @ b)
    if callable(metric):
        return metric
    M = np.asarray(metric, dtype=float)
    return lambda a, b: float(a @ M @ b)


def gram_matrix(vectors, metric=None):
    ip = _inner_product(metric)
    vs = np.atleast_2d(np.asarray(vectors, dtype=float))
    k = vs.shape[0]
    G = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            G[i, j] = G[j, i] = ip(vs[i], vs[j])
    return G


def gram_schmidt(vectors, metric=None, rank_tol=1e-10):
    """Orthonormalize ``vectors`` (rows) in order under ``metric``.

    ``metric`` is ``None`` (Euclidean), an SPD matrix, or a callable inner
    product.  Classical Gram-Schmidt with one re-orthogonalization pass; a
    vector whose squared residual falls below ``rank_tol`` times its squared
    length raises :class:`DegenerateFrameError` naming its index.
    """
    ip = _inner_product(metric)
    vs = np.atleast_2d(np.asarray(vectors, dtype=float))
    basis = []
    for idx, v in enumerate(vs):
        norm0 = ip(v, v)
        if norm0 <= 0.0:
            raise DegenerateFrameError(idx, 0.0)
        w = v.copy()
        for _ in range(2):
            for b in basis:
                w = w - ip(b, w) * b
        norm = ip(w, w)
        if norm <= rank_tol * norm0:
            raise DegenerateFrameError(idx, math.sqrt(max(norm, 0.0) / norm0))
        basis.append(w / math.sqrt(norm))
    out = np.array(basis).reshape(len(basis), vs.shape[1])
    return GramFrame(vectors=out, gram=gram_matrix(out, metric), orthonormal=True)


def solve_spd(matrix, rhs):
    """Solve ``matrix @ x = rhs`` for a symmetric positive definite ``matrix``.

    Non-symmetric input raises ``ValueError``; a failed Cholesky step raises
    :class:`NotPositiveDefiniteError` carrying the 1-based leading-minor order.
    """
    A = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(float(np.max(np.abs(A), initial=0.0)), 1.0)
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    c, info = lapack.dpotrf(A, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(int(info))
    if info < 0:
        raise ValueError(f"invalid argument {-info} to Cholesky factorization")
    x, info = lapack.dpotrs(c, b, lower=1)
    if info != 0:
        raise ValueError("Cholesky solve failed")
    return x
