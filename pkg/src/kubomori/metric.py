"""Kubo-Mori metric, its inverse, its derivative and the Christoffel form.

Everything is evaluated in the eigenframe of the base point D, where D is
diagonal and the metric acts entrywise: (G X)_ij = m_ij X_ij. Tangent
vectors are rotated in with Q^T X Q and results rotated back.

The connection convention is nabla_xi eta = d eta . xi - Gamma(xi, eta), so
Gamma(X, Y) = -1/2 G^{-1} dG(D)(X)(Y).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .logmeans import MeanTable, build_table
from .matcore import DomainError, PosDefMatrix, SymMatrix, as_matrix

TRACE_TOL = 1e-12


@dataclass(frozen=True)
class TangentVector:
    """Symmetric matrix at a base point, optionally flagged as tangent to
    the trace-one slice (trace zero)."""

    ambient: SymMatrix
    traceless: bool = False

    def __post_init__(self):
        if not isinstance(self.ambient, SymMatrix):
            object.__setattr__(self, "ambient", SymMatrix(self.ambient))
        if self.traceless:
            m = self.ambient.entries
            if abs(np.trace(m)) > TRACE_TOL * max(1.0, np.linalg.norm(m)):
                raise DomainError(f"vector flagged traceless has trace {np.trace(m):.3g}")

    @property
    def matrix(self) -> np.ndarray:
        return self.ambient.entries

    @property
    def dim(self) -> int:
        return self.ambient.dim


@dataclass(frozen=True)
class MetricContext:
    """Base point together with its mean table and eigenframe."""

    point: PosDefMatrix
    means: MeanTable

    @classmethod
    def at(cls, d) -> "MetricContext":
        """Context at a matrix, a PosDefMatrix, or (for a 1-D input) a diagonal spectrum."""
        if isinstance(d, PosDefMatrix):
            p = d
        else:
            a = np.asarray(as_matrix(d), dtype=float)
            p = PosDefMatrix.from_spectrum(a) if a.ndim == 1 else PosDefMatrix.from_array(a)
        return cls(p, build_table(p.spectrum))

    @property
    def frame(self) -> np.ndarray:
        return self.point.frame

    @property
    def n(self) -> int:
        return self.point.dim

    @property
    def lam(self) -> np.ndarray:
        return self.point.spectrum.values

    def to_frame(self, x) -> np.ndarray:
        a = as_matrix(x)
        if a.shape != (self.n, self.n):
            raise DomainError(f"dimension mismatch: {a.shape} vs base point of size {self.n}")
        return self.point.to_frame(a)

    def from_frame(self, x) -> np.ndarray:
        return self.point.from_frame(x)

    def to_frame_batch(self, xs) -> np.ndarray:
        q = self.frame
        return np.einsum("ji,...jk,kl->...il", q, np.asarray(xs, dtype=float), q)

    def from_frame_batch(self, xs) -> np.ndarray:
        q = self.frame
        return np.einsum("ij,...jk,lk->...il", q, np.asarray(xs, dtype=float), q)


# -- eigenframe kernels; arrays may carry leading batch axes -------------------

def g_frame(m2, x, y):
    return np.einsum("ij,...ij,...ij->...", m2, x, y)


def g_op_frame(m2, x):
    return m2 * x


def g_inv_frame(m2, x):
    return x / m2


def dg_frame(m3, z, x):
    """(i,k) entry: -sum_j m_ijk (Z_ij X_jk + X_ij Z_jk)."""
    return -(np.einsum("ijk,...ij,...jk->...ik", m3, z, x)
             + np.einsum("ijk,...ij,...jk->...ik", m3, x, z))


def christoffel_frame(mt: MeanTable, x, y):
    return -0.5 * g_inv_frame(mt.m2, dg_frame(mt.m3, x, y))


# -- public operations in ambient coordinates ----------------------------------

def g(ctx: MetricContext, x, y) -> float:
    """G_D(X, Y)."""
    return float(g_frame(ctx.means.m2, ctx.to_frame(x), ctx.to_frame(y)))


def g_op(ctx: MetricContext, x) -> np.ndarray:
    """G_D as a map S -> S (Hilbert-Schmidt identification of S with its dual)."""
    return ctx.from_frame(g_op_frame(ctx.means.m2, ctx.to_frame(x)))


def g_inv(ctx: MetricContext, x) -> np.ndarray:
    """Inverse of :func:`g_op`."""
    return ctx.from_frame(g_inv_frame(ctx.means.m2, ctx.to_frame(x)))


def dg(ctx: MetricContext, z, x) -> np.ndarray:
    """dG(D)(Z)(X) as a symmetric matrix (a covector through tr(. Y))."""
    return ctx.from_frame(dg_frame(ctx.means.m3, ctx.to_frame(z), ctx.to_frame(x)))


def dg_form(ctx: MetricContext, z, x, y) -> float:
    """Trilinear scalar dG(D)(Z)(X, Y) = tr(dG(D)(Z)(X) Y); symmetric in Z, X, Y."""
    zf, xf, yf = ctx.to_frame(z), ctx.to_frame(x), ctx.to_frame(y)
    return float(np.sum(dg_frame(ctx.means.m3, zf, xf) * yf))


def christoffel(ctx: MetricContext, x, y) -> np.ndarray:
    """Gamma_D(X, Y) = -1/2 G_D^{-1} dG(D)(X)(Y)."""
    return ctx.from_frame(christoffel_frame(ctx.means, ctx.to_frame(x), ctx.to_frame(y)))
