"""Dense real symmetric matrix primitives: types, eigendecomposition,
matrix powers, symmetrized matrix units and the two quadrature rules used
by the rest of the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


class ConvergenceError(ArithmeticError):
    """An iterative numerical scheme did not converge."""

    def __init__(self, message: str, estimate: float | None = None, error: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def as_matrix(x) -> np.ndarray:
    """Return the dense array behind ``x`` (SymMatrix, TangentVector or array-like)."""
    if hasattr(x, "matrix"):
        return x.matrix
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class SymMatrix:
    """Real symmetric n x n matrix, symmetry exact by construction."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DomainError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("matrix has non-finite entries")
        object.__setattr__(self, "entries", _frozen(0.5 * (a + a.T)))

    @classmethod
    def strict(cls, a, rtol: float = 1e-12) -> "SymMatrix":
        """Build from ``a``, rejecting it unless already symmetric to ``rtol``."""
        a = np.asarray(a, dtype=float)
        if a.ndim == 2 and a.shape[0] == a.shape[1]:
            scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
            if np.max(np.abs(a - a.T), initial=0.0) > rtol * scale:
                raise DomainError("matrix is not symmetric")
        return cls(a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.entries


@dataclass(frozen=True)
class Spectrum:
    """Positive eigenvalues, sorted descending."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 1:
            raise DomainError("empty spectrum")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise DomainError("eigenvalues must be finite and strictly positive")
        object.__setattr__(self, "values", _frozen(np.sort(v)[::-1]))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def trace(self) -> float:
        return float(np.sum(self.values))

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self.values.tolist())


@dataclass(frozen=True)
class PosDefMatrix:
    """Positive definite matrix with its cached eigendecomposition.

    ``frame @ diag(spectrum.values) @ frame.T`` reconstructs ``base``.
    """

    base: SymMatrix
    spectrum: Spectrum
    frame: np.ndarray

    @classmethod
    def from_array(cls, a) -> "PosDefMatrix":
        base = a if isinstance(a, SymMatrix) else SymMatrix(a)
        vals, frame = eigh(base)
        if vals[-1] <= 0:
            raise DomainError(f"matrix is not positive definite (smallest eigenvalue {vals[-1]:.3g})")
        return cls(base, Spectrum(vals), _frozen(frame))

    @classmethod
    def from_spectrum(cls, values) -> "PosDefMatrix":
        """Diagonal matrix with the given eigenvalues (sorted descending)."""
        s = Spectrum(values)
        return cls(SymMatrix(np.diag(s.values)), s, _frozen(np.eye(s.n)))

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def matrix(self) -> np.ndarray:
        return self.base.entries

    @property
    def trace(self) -> float:
        return float(np.trace(self.base.entries))

    def to_frame(self, x) -> np.ndarray:
        """Rotate a matrix into the eigenframe: Q^T X Q."""
        q = self.frame
        return q.T @ as_matrix(x) @ q

    def from_frame(self, x) -> np.ndarray:
        q = self.frame
        return q @ np.asarray(x) @ q.T


def eigh(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthogonal eigenvector frame of a symmetric matrix.

    Backed by LAPACK ``syevd`` through numpy; the result is checked for
    orthogonality and reconstruction so a failed decomposition raises
    instead of returning garbage.
    """
    a = as_matrix(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    try:
        vals, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition failed: {exc}") from exc
    vals, vecs = vals[::-1].copy(), vecs[:, ::-1].copy()
    n = a.shape[0]
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    if (np.linalg.norm(vecs.T @ vecs - np.eye(n)) > 1e-12 * max(1, n)
            or np.linalg.norm(vecs @ np.diag(vals) @ vecs.T - a) > 1e-12 * n * scale):
        raise ConvergenceError("eigendecomposition failed its reconstruction check")
    return vals, vecs


def mat_power(d: PosDefMatrix, u: float) -> np.ndarray:
    """D**u through the eigenframe."""
    q = d.frame
    return (q * d.spectrum.values ** u) @ q.T


def matrix_unit(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((n, n))
    e[i, j] = 1.0
    return e


@dataclass(frozen=True)
class BasisElement:
    """Symmetrized matrix unit F_ij = E_ij + E_ji (so F_ii = 2 E_ii)."""

    i: int
    j: int
    dim: int

    def __post_init__(self):
        if not (0 <= self.i <= self.j < self.dim):
            raise DomainError(f"need 0 <= i <= j < n, got ({self.i}, {self.j}) for n={self.dim}")

    @property
    def diagonal(self) -> bool:
        return self.i == self.j

    @property
    def matrix(self) -> np.ndarray:
        return matrix_unit(self.dim, self.i, self.j) + matrix_unit(self.dim, self.j, self.i)


def F(n: int, i: int, j: int) -> np.ndarray:
    """Shorthand for the realized symmetrized matrix unit, any index order."""
    i, j = min(i, j), max(i, j)
    return BasisElement(i, j, n).matrix


def hs_basis(n: int) -> np.ndarray:
    """Hilbert-Schmidt orthonormal basis of symmetric n x n matrices.

    Diagonal units first, then (E_ij + E_ji)/sqrt(2) for i < j in
    row-major order. Shape (n(n+1)/2, n, n).
    """
    out = [matrix_unit(n, i, i) for i in range(n)]
    out += [F(n, i, j) / np.sqrt(2.0) for i in range(n) for j in range(i + 1, n)]
    return np.array(out)


# -- quadrature ---------------------------------------------------------------

_PANEL_ORDER = 15


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return _frozen(0.5 * (x + 1.0)), _frozen(0.5 * w)


def _panel_nodes(panels: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(order)
    a, b = panels[:, 0:1], panels[:, 1:2]
    return (a + (b - a) * x).ravel(), ((b - a) * w).ravel()


def _map_to_unit(f: Callable, scale: float) -> Callable:
    # t = scale*s/(1-s), dt = scale/(1-s)^2 ds; nodes never touch s = 1
    def g(s):
        s = np.asarray(s, dtype=float)
        t = scale * s / (1.0 - s)
        jac = scale / (1.0 - s) ** 2
        vals = np.asarray(f(t), dtype=float)
        return vals * jac.reshape((-1,) + (1,) * (vals.ndim - 1))
    return g


@dataclass
class Quadrature:
    """Result of an adaptive integration: value, error estimate and the
    final panel partition (reusable on nearby integrands)."""

    value: np.ndarray | float
    error: float
    panels: np.ndarray
    evaluations: int


def integrate_panels(g: Callable, panels: np.ndarray, order: int = _PANEL_ORDER):
    """Integrate a (vectorized) integrand over a fixed partition of [a, b] intervals."""
    nodes, weights = _panel_nodes(np.asarray(panels, dtype=float), order)
    vals = np.asarray(g(nodes), dtype=float)
    return np.tensordot(weights, vals, axes=(0, 0))


def adaptive_unit(g: Callable, tol: float = 1e-10, order: int = _PANEL_ORDER,
                  max_panels: int = 4000, initial: int = 4) -> Quadrature:
    """Adaptive Gauss-Legendre integration of a vectorized integrand over [0, 1).

    ``g`` takes a 1-D array of nodes and returns an array whose first axis
    runs over the nodes; vector/tensor valued integrands are integrated
    componentwise and the error is measured in the max norm. Each panel's
    error is estimated by comparing its rule against the two half-panel
    rules; the half-panel value is kept. The worst panels are bisected until
    the summed error estimate is at most ``tol * max(1, |value|)``.
    """
    edges = np.linspace(0.0, 1.0, initial + 1)
    work = np.column_stack([edges[:-1], edges[1:]])

    def coarse_fine(panels):
        mid = 0.5 * (panels[:, 0] + panels[:, 1])
        halves = np.empty((2 * len(panels), 2))
        halves[0::2, 0], halves[0::2, 1] = panels[:, 0], mid
        halves[1::2, 0], halves[1::2, 1] = mid, panels[:, 1]
        allp = np.vstack([panels, halves])
        nodes, weights = _panel_nodes(allp, order)
        vals = np.asarray(g(nodes), dtype=float)
        shape = vals.shape[1:]
        contrib = (weights.reshape((-1,) + (1,) * len(shape)) * vals).reshape((len(allp), order) + shape).sum(axis=1)
        k = len(panels)
        coarse = contrib[:k]
        fine = contrib[k::2] + contrib[k + 1::2]
        err = np.abs(fine - coarse).reshape(k, -1).max(axis=1)
        return fine, err, 3 * k * order

    vals, errs, evals = coarse_fine(work)
    panels = work
    while True:
        total = vals.sum(axis=0)
        mag = float(np.max(np.abs(total))) if np.ndim(total) else abs(float(total))
        target = tol * max(1.0, mag)
        err = float(errs.sum())
        if err <= target:
            break
        if len(panels) >= max_panels:
            raise ConvergenceError(
                f"adaptive quadrature did not converge: error estimate {err:.3g} > {target:.3g}",
                estimate=mag, error=err)
        # bisect every panel carrying more than its share of the budget, worst first
        share = target / (2 * len(panels))
        bad = np.flatnonzero(errs > share)
        bad = bad[np.argsort(errs[bad])[::-1][:64]]
        if bad.size == 0:
            bad = np.array([int(np.argmax(errs))])
        keep = np.setdiff1d(np.arange(len(panels)), bad)
        sub = panels[bad]
        mid = 0.5 * (sub[:, 0] + sub[:, 1])
        new = np.empty((2 * len(sub), 2))
        new[0::2, 0], new[0::2, 1] = sub[:, 0], mid
        new[1::2, 0], new[1::2, 1] = mid, sub[:, 1]
        nv, ne, ev = coarse_fine(new)
        evals += ev
        panels = np.vstack([panels[keep], new])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])
    order_idx = np.argsort(panels[:, 0])
    panels = panels[order_idx]
    # re-sum in left-to-right order so results do not depend on refinement history
    halves = np.empty((2 * len(panels), 2))
    mid = 0.5 * (panels[:, 0] + panels[:, 1])
    halves[0::2, 0], halves[0::2, 1] = panels[:, 0], mid
    halves[1::2, 0], halves[1::2, 1] = mid, panels[:, 1]
    value = integrate_panels(g, halves, order)
    return Quadrature(value=value if np.ndim(value) else float(value), error=err,
                      panels=halves, evaluations=evals)


def quad_semi_infinite(f: Callable, scale: float, tol: float = 1e-10,
                       full_output: bool = False):
    """Integrate ``f`` over [0, inf).

    ``f`` must accept an array of t values (and may return an array with a
    leading node axis). The half line is mapped to [0, 1) by
    t = scale*s/(1 - s); ``scale`` should sit inside the region where ``f``
    varies, e.g. the geometric mean of the extreme eigenvalues.
    """
    if not scale > 0:
        raise DomainError("scale must be positive")
    res = adaptive_unit(_map_to_unit(f, scale), tol=tol)
    return res if full_output else res.value


def quad_semi_infinite_fixed(f: Callable, scale: float, panels: np.ndarray):
    """Same mapping as :func:`quad_semi_infinite` on a frozen panel partition."""
    return integrate_panels(_map_to_unit(f, scale), panels)


QUAD_UNIT_ORDER = 40


def quad_unit(f: Callable, order: int = QUAD_UNIT_ORDER):
    """Fixed high-order Gauss-Legendre rule on [0, 1] for smooth integrands."""
    x, w = gauss_legendre(order)
    vals = np.asarray(f(x), dtype=float)
    out = np.tensordot(w, vals, axes=(0, 0))
    return out if np.ndim(out) else float(out)
