"""Curvature of the Kubo-Mori metric on positive definite matrices and on
the trace-one slice.

R_D(X,Y)Z = -1/4 G^{-1} dG(X) G^{-1} dG(Y) Z + 1/4 G^{-1} dG(Y) G^{-1} dG(X) Z

Traces follow the conventions Ric(X, Z) = tr(Y -> R(X,Y)Z) and
Scal = sum_{t,s} G(R(A_t, A_s) A_t, A_s) over an orthonormal basis, which
makes Scal the negative of the usual (sectional-curvature sum) scalar
curvature.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import metric as km
from .matcore import DomainError, PosDefMatrix, as_matrix, hs_basis, quad_semi_infinite, quad_unit
from .metric import MetricContext, TangentVector

ORTHONORMAL_TOL = 1e-10
UNIT_TRACE_TOL = 1e-12


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    ORACLE = "oracle_finite_difference"
    GAUSS_ASSEMBLY = "gauss_assembly"


class Convention(str, enum.Enum):
    HILBERT_SCHMIDT = "hilbert_schmidt"
    METRIC = "metric"


@dataclass(frozen=True)
class CurvatureValue:
    value: float
    method: Method


@dataclass(frozen=True)
class OrthonormalBasis:
    """Basis of S (or of the traceless slice S0) at a point.

    ``elements`` are ambient-coordinate matrices, shape (K, n, n). The
    convention tag says which inner product they are orthonormal for.
    """

    point: PosDefMatrix
    elements: np.ndarray
    convention: Convention
    submanifold: bool = False
    n_diagonal: int = 0
    n_offdiagonal: int = 0
    ctx: MetricContext | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n = self.point.dim
        e = np.asarray(self.elements, dtype=float)
        object.__setattr__(self, "elements", e)
        full = n * (n + 1) // 2
        expected = full - 1 if self.submanifold else full
        if e.shape != (expected, n, n):
            raise DomainError(f"basis has shape {e.shape}, expected {(expected, n, n)}")
        if np.max(np.abs(e - np.swapaxes(e, 1, 2)), initial=0.0) > 1e-12:
            raise DomainError("basis elements must be symmetric")
        gram = self.gram()
        if np.max(np.abs(gram - np.eye(expected)), initial=0.0) > ORTHONORMAL_TOL:
            raise DomainError(f"basis is not orthonormal for the {self.convention.value} inner product")
        if self.submanifold:
            if abs(self.point.trace - 1.0) > UNIT_TRACE_TOL:
                raise DomainError("submanifold basis requires a trace-one point")
            if np.max(np.abs(np.trace(e, axis1=1, axis2=2)), initial=0.0) > ORTHONORMAL_TOL:
                raise DomainError("submanifold basis elements must be traceless")

    def gram(self) -> np.ndarray:
        e = self.elements
        if self.convention is Convention.HILBERT_SCHMIDT:
            return np.einsum("aij,bij->ab", e, e)
        ctx = self._ctx()
        f = ctx.to_frame_batch(e)
        return np.einsum("ij,aij,bij->ab", ctx.means.m2, f, f)

    def _ctx(self) -> MetricContext:
        if self.ctx is None:
            object.__setattr__(self, "ctx", MetricContext.at(self.point))
        return self.ctx

    def __len__(self) -> int:
        return self.elements.shape[0]

    def rotated(self, orth: np.ndarray) -> "OrthonormalBasis":
        """New basis sum_b orth[a, b] e_b for an orthogonal matrix ``orth``."""
        return OrthonormalBasis(self.point, np.einsum("ab,bij->aij", orth, self.elements),
                                self.convention, self.submanifold, 0, 0, self.ctx)

    def randomized(self, rng: np.random.Generator) -> "OrthonormalBasis":
        k = len(self)
        q, r = np.linalg.qr(rng.standard_normal((k, k)))
        return self.rotated(q * np.sign(np.diag(r)))


# -- bases ----------------------------------------------------------------------

def hilbert_schmidt_basis(point: PosDefMatrix) -> OrthonormalBasis:
    return OrthonormalBasis(point, hs_basis(point.dim), Convention.HILBERT_SCHMIDT,
                            n_diagonal=point.dim, n_offdiagonal=point.dim * (point.dim - 1) // 2)


def diagonal_coefficients(lam, traceless: bool = True) -> np.ndarray:
    """Rows a^t with sum_i a_i b_i / lam_i = delta and (if traceless) sum_i a_i = 0.

    Gram-Schmidt of e_i - lam (i ascending) under the weighted inner
    product; the final candidate is dependent and dropped. Without the
    trace constraint the rows are sqrt(lam_i) e_i.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    if not traceless:
        return np.diag(np.sqrt(lam))
    # e_i - lam/sum(lam) is the G-orthogonal projection of E_ii away from D
    cands = np.eye(n) - lam[None, :] / lam.sum()
    rows: list[np.ndarray] = []
    for i in range(n - 1):
        v = cands[i].copy()
        for _ in range(2):
            for r in rows:
                v = v - np.sum(v * r / lam) * r
        v = v / np.sqrt(np.sum(v * v / lam))
        rows.append(v)
    return np.array(rows).reshape(n - 1, n)


def metric_orthonormal_basis(ctx: MetricContext, submanifold: bool = False) -> OrthonormalBasis:
    """G_D-orthonormal basis built in the eigenframe: diagonal elements
    first, then F_ij / sqrt(2 m_ij) for i < j."""
    n, lam, m2 = ctx.n, ctx.lam, ctx.means.m2
    coeffs = diagonal_coefficients(lam, traceless=submanifold)
    frame = [np.diag(a) for a in coeffs]
    for i in range(n):
        for j in range(i + 1, n):
            f = np.zeros((n, n))
            f[i, j] = f[j, i] = 1.0 / np.sqrt(2.0 * m2[i, j])
            frame.append(f)
    frame = np.array(frame).reshape(len(frame), n, n)
    elements = ctx.from_frame_batch(frame)
    return OrthonormalBasis(ctx.point, elements, Convention.METRIC, submanifold,
                            n_diagonal=len(coeffs), n_offdiagonal=n * (n - 1) // 2, ctx=ctx)


# -- ambient curvature ---------------------------------------------------------

def _w(mt, x, y):
    """G^{-1} dG(X)(Y) in the frame."""
    return km.g_inv_frame(mt.m2, km.dg_frame(mt.m3, x, y))


def riemann_frame(mt, x, y, z):
    return -0.25 * _w(mt, x, _w(mt, y, z)) + 0.25 * _w(mt, y, _w(mt, x, z))


def riemann(ctx: MetricContext, x, y, z) -> np.ndarray:
    """R_D(X, Y) Z."""
    xf, yf, zf = (ctx.to_frame(v) for v in (x, y, z))
    return ctx.from_frame(riemann_frame(ctx.means, xf, yf, zf))


def riemann_form(ctx: MetricContext, x, y, z, u) -> float:
    """G_D(R_D(X,Y)Z, U)."""
    r = riemann_frame(ctx.means, *(ctx.to_frame(v) for v in (x, y, z)))
    return float(km.g_frame(ctx.means.m2, r, ctx.to_frame(u)))


def riemann_tensor(ctx: MetricContext, elements) -> np.ndarray:
    """Rm[a,b,c,d] = G(R(e_a, e_b) e_c, e_d) for a stack of matrices."""
    mt = ctx.means
    f = ctx.to_frame_batch(elements)
    w = _w(mt, f[:, None], f[None, :])                      # [b, c]
    v = _w(mt, f[:, None, None], w[None, :, :])             # [a, b, c]
    r = -0.25 * v + 0.25 * np.swapaxes(v, 0, 1)
    return np.einsum("ij,abcij,dij->abcd", mt.m2, r, f)


def _sectional_sum_frame(ctx: MetricContext, elements) -> np.ndarray:
    """T[t, s] = G(R(e_t, e_s) e_t, e_s) without forming the full tensor."""
    mt = ctx.means
    f = ctx.to_frame_batch(elements)
    k = len(f)
    w = _w(mt, f[:, None], f[None, :])
    wst = np.swapaxes(w, 0, 1)                              # [t, s] -> W(s, t)
    wtt = w[np.arange(k), np.arange(k)]
    r = (-0.25 * _w(mt, f[:, None], wst)
         + 0.25 * _w(mt, f[None, :], wtt[:, None]))
    return np.einsum("ij,tsij,sij->ts", mt.m2, r, f)


def _pairing(basis: OrthonormalBasis, ctx: MetricContext, r, u) -> float:
    if basis.convention is Convention.HILBERT_SCHMIDT:
        return float(np.sum(as_matrix(r) * as_matrix(u)))
    return km.g(ctx, r, u)


def ricci(ctx: MetricContext, x, z, basis: OrthonormalBasis) -> float:
    """Ric(X, Z) = tr(Y -> R(X, Y) Z), traced over ``basis``.

    A submanifold basis traces the intrinsic curvature of the trace-one
    slice (Gauss-corrected); X and Z must then be traceless.
    """
    if basis.submanifold:
        return float(sum(gauss_curvature(ctx, x, e, z, e) for e in basis.elements))
    return float(sum(_pairing(basis, ctx, riemann(ctx, x, e, z), e) for e in basis.elements))


def scal_ambient(ctx: MetricContext, basis: OrthonormalBasis | None = None) -> CurvatureValue:
    """Scal(D) = sum_{t,s} <R(A_t, A_s) G^{-1} A_t, A_s> over a Hilbert-Schmidt orthonormal basis."""
    if basis is None:
        basis = hilbert_schmidt_basis(ctx.point)
    if basis.convention is not Convention.HILBERT_SCHMIDT or basis.submanifold:
        raise DomainError("scal_ambient needs a Hilbert-Schmidt orthonormal basis of S")
    mt = ctx.means
    f = ctx.to_frame_batch(basis.elements)
    ginv = km.g_inv_frame(mt.m2, f)
    w_s_ginvt = _w(mt, f[None, :], ginv[:, None])           # [t, s] -> G^-1 dG(A_s)(G^-1 A_t)
    w_t_ginvt = _w(mt, f, ginv)                             # [t]
    r = (-0.25 * _w(mt, f[:, None], w_s_ginvt)
         + 0.25 * _w(mt, f[None, :], w_t_ginvt[:, None]))
    total = np.einsum("tsij,sij->", r, f)
    return CurvatureValue(float(total), Method.CLOSED_FORM)


# -- trace-one slice -------------------------------------------------------------

def _require_unit_trace(d):
    tr = float(np.trace(as_matrix(d)))
    if abs(tr - 1.0) > UNIT_TRACE_TOL:
        raise DomainError(f"point must have trace 1, got {tr!r}")


def _require_traceless(*xs):
    for x in xs:
        if isinstance(x, TangentVector) and x.traceless:
            continue
        a = as_matrix(x)
        if abs(np.trace(a)) > km.TRACE_TOL * max(1.0, np.linalg.norm(a)):
            raise DomainError(f"vector must be traceless, trace is {np.trace(a):.3g}")


def _point(d) -> PosDefMatrix:
    if isinstance(d, MetricContext):
        return d.point
    if isinstance(d, PosDefMatrix):
        return d
    return PosDefMatrix.from_array(as_matrix(d))


def normal_field(d) -> np.ndarray:
    """Unit normal of the trace-one slice at D, which is D itself."""
    p = _point(d)
    _require_unit_trace(p.matrix)
    return p.matrix.copy()


def project(d, x) -> np.ndarray:
    """G-orthogonal projection onto the traceless slice: X - tr(X) D."""
    p = _point(d)
    _require_unit_trace(p.matrix)
    a = as_matrix(x)
    return a - np.trace(a) * p.matrix


def weingarten(ctx: MetricContext, x) -> np.ndarray:
    """Shape operator L_D(X) = X - Gamma_D(X, D)."""
    _require_unit_trace(ctx.point.matrix)
    return as_matrix(x) - km.christoffel(ctx, x, ctx.point.matrix)


def second_fundamental(ctx: MetricContext, x, y) -> float:
    """S_D(X, Y) = tr Gamma_D(X, Y) for traceless X, Y at a trace-one D."""
    _require_unit_trace(ctx.point.matrix)
    _require_traceless(x, y)
    return float(np.trace(km.christoffel(ctx, x, y)))


def second_fundamental_weingarten(ctx: MetricContext, x, y) -> float:
    """S_D(X, Y) = G_D(L_D(X), Y)."""
    _require_traceless(x, y)
    return km.g(ctx, weingarten(ctx, x), y)


def _resolvent_frame(lam, t):
    return 1.0 / (lam[None, :] + np.asarray(t, dtype=float)[:, None])


def second_fundamental_integral(ctx: MetricContext, x, y, tol: float = 1e-12) -> float:
    """S_D(X, Y) from the integral over t of
    tr(R X R Y - 1/2 D R^2 X R Y - 1/2 D R^2 Y R X), R = (D + t)^{-1}."""
    _require_unit_trace(ctx.point.matrix)
    _require_traceless(x, y)
    lam = ctx.lam
    xf, yf = ctx.to_frame(x), ctx.to_frame(y)

    def f(t):
        r = _resolvent_frame(lam, t)                       # diagonal of R per node
        rxr = r[:, :, None] * xf[None] * r[:, None, :]
        a = np.einsum("tij,ji->t", rxr, yf)
        c = lam[None, :] * r                               # diagonal of D R
        b = np.einsum("ti,tij,ji->t", c, rxr, yf)          # tr(D R (R X R) Y)
        ryr = r[:, :, None] * yf[None] * r[:, None, :]
        b2 = np.einsum("ti,tij,ji->t", c, ryr, xf)
        return a - 0.5 * b - 0.5 * b2

    return float(quad_semi_infinite(f, _scale(lam), tol=tol))


def second_fundamental_tag4(ctx: MetricContext, x, y, tol: float = 1e-12) -> float:
    """S_D(X, Y) = tr(-1/2 G^{-1} dG(X)(Y)) with both inverses written as
    integrals: 1/2 int_0^1 int_0^inf tr(D^u R (X R Y + Y R X) R D^{1-u}) dt du."""
    _require_unit_trace(ctx.point.matrix)
    _require_traceless(x, y)
    lam = ctx.lam
    xf, yf = ctx.to_frame(x), ctx.to_frame(y)

    def inner(t):
        r = _resolvent_frame(lam, t)
        mid = np.einsum("ij,tj,jk->tik", xf, r, yf) + np.einsum("ij,tj,jk->tik", yf, r, xf)
        return r[:, :, None] * mid * r[:, None, :]

    m = quad_semi_infinite(inner, _scale(lam), tol=tol)

    def outer(u):
        du = lam[None, :] ** np.asarray(u)[:, None]
        d1u = lam[None, :] ** (1.0 - np.asarray(u))[:, None]
        return np.einsum("ui,ii,ui->u", du, m, d1u)

    return 0.5 * quad_unit(outer)


def _scale(lam) -> float:
    return float(np.sqrt(np.max(lam) * np.min(lam)))


def gauss_curvature(ctx: MetricContext, x, y, z, u) -> float:
    """G_D(R1(X,Y)Z, U) of the trace-one slice from the Gauss equation:
    G(R(X,Y)Z,U) - S(X,Z) S(Y,U) + S(Y,Z) S(X,U)."""
    _require_traceless(x, y, z, u)
    s = lambda a, b: second_fundamental(ctx, a, b)  # noqa: E731
    return riemann_form(ctx, x, y, z, u) - s(x, z) * s(y, u) + s(y, z) * s(x, u)


def _second_fundamental_matrix(ctx: MetricContext, elements) -> np.ndarray:
    f = ctx.to_frame_batch(elements)
    gam = km.christoffel_frame(ctx.means, f[:, None], f[None, :])
    return np.trace(gam, axis1=2, axis2=3)


def scal_submanifold(ctx: MetricContext, basis: OrthonormalBasis | None = None) -> CurvatureValue:
    """Scal1(D) = sum_{t,s} G(R1(A_t, A_s) A_t, A_s) over a G-orthonormal basis of S0,
    with R1 from the Gauss equation."""
    _require_unit_trace(ctx.point.matrix)
    if basis is None:
        basis = metric_orthonormal_basis(ctx, submanifold=True)
    if basis.convention is not Convention.METRIC or not basis.submanifold:
        raise DomainError("scal_submanifold needs a G_D-orthonormal basis of the traceless slice")
    t = _sectional_sum_frame(ctx, basis.elements)
    s = _second_fundamental_matrix(ctx, basis.elements)
    sd = np.diag(s)
    total = np.sum(t) - np.sum(np.outer(sd, sd)) + np.sum(s * s.T)
    return CurvatureValue(float(total), Method.GAUSS_ASSEMBLY)


def scal_submanifold_terms(ctx: MetricContext, basis: OrthonormalBasis | None = None) -> dict:
    """The three double sums behind Scal1 split by diagonal/offdiagonal basis blocks.

    Keys: ``rm`` (sum of G(R(A_t,A_s)A_t,A_s)), ``ss`` (sum of
    S(A_t,A_t) S(A_s,A_s)) and ``st`` (sum of S(A_t,A_s)^2), each a dict
    over the blocks 'dd', 'do', 'od', 'oo' (first letter: A_t diagonal or
    offdiagonal). Only meaningful for the canonical basis.
    """
    if basis is None:
        basis = metric_orthonormal_basis(ctx, submanifold=True)
    t = _sectional_sum_frame(ctx, basis.elements)
    s = _second_fundamental_matrix(ctx, basis.elements)
    sd = np.diag(s)
    parts = {"rm": t, "ss": np.outer(sd, sd), "st": s * s.T}
    nd = basis.n_diagonal
    blocks = {"dd": (slice(0, nd), slice(0, nd)), "do": (slice(0, nd), slice(nd, None)),
              "od": (slice(nd, None), slice(0, nd)), "oo": (slice(nd, None), slice(nd, None))}
    return {k: {b: float(np.sum(v[sl])) for b, sl in blocks.items()} for k, v in parts.items()}
