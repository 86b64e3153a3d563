"""Brute-force reference values for every closed-form quantity.

Only :mod:`kubomori.matcore` is used here: the metric is the literal
resolvent integral evaluated with dense inverses of (D + t), its inverse
is the integral of D^u X D^(1-u) over [0, 1], and derivatives come from
central finite differences with Richardson extrapolation. No mean table,
no eigenframe formula.

Two chart-level routes compute the scalar curvature of the trace-one
slice: the Gauss-equation route (ambient curvature on S corrected by the
second fundamental form) and an intrinsic route (curvature of the induced
metric in an affine chart of the slice). Neither needs the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import CurvatureValue, Method
from .matcore import (ConvergenceError, DomainError, PosDefMatrix, as_matrix, hs_basis,
                      quad_semi_infinite, quad_semi_infinite_fixed, quad_unit)

METRIC_TOL = 1e-8
CHRISTOFFEL_TOL = 1e-6
CURVATURE_TOL = 1e-5
DG_AGREEMENT_TOL = 1e-6


@dataclass(frozen=True)
class OracleConfig:
    fd_step_rel: float = 1e-5
    richardson_levels: int = 2
    quad_tol: float = 1e-10

    def __post_init__(self):
        if not (1e-9 < self.fd_step_rel < 1e-2):
            raise DomainError("fd_step_rel must lie in (1e-9, 1e-2)")
        if not (1 <= self.richardson_levels <= 4):
            raise DomainError("richardson_levels must lie in [1, 4]")
        if not self.quad_tol > 0:
            raise DomainError("quad_tol must be positive")


DEFAULT = OracleConfig()


def _pd(d) -> PosDefMatrix:
    return d if isinstance(d, PosDefMatrix) else PosDefMatrix.from_array(as_matrix(d))


def _scale(p: PosDefMatrix) -> float:
    lam = p.spectrum.values
    return float(np.sqrt(lam[0] * lam[-1]))


def _resolvents(dm: np.ndarray, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    n = dm.shape[0]
    return np.linalg.inv(dm[None] + t[:, None, None] * np.eye(n)[None])


def step_size(d, z, config: OracleConfig = DEFAULT) -> float:
    """min(fd_step_rel * rho(D), lambda_min(D) / (4 |Z|)), keeping D +- hZ positive definite."""
    p = _pd(d)
    lam = p.spectrum.values
    zn = np.linalg.norm(as_matrix(z), 2)
    h = config.fd_step_rel * lam[0]
    if zn > 0:
        h = min(h, 0.25 * lam[-1] / zn)
    if h <= 1e-14 * lam[0]:
        raise ConvergenceError("finite-difference step underflows: D is too close to singular along Z")
    return h


def richardson(f, h: float, levels: int):
    """Central difference of f at 0 with step h, extrapolated over steps h, h/2, ...

    Returns (value, error estimate); f may be array valued.
    """
    table = []
    for i in range(levels):
        hi = h / 2 ** i
        row = [(np.asarray(f(hi)) - np.asarray(f(-hi))) / (2 * hi)]
        for j in range(1, i + 1):
            fac = 4 ** j
            row.append((fac * row[j - 1] - table[i - 1][j - 1]) / (fac - 1))
        table.append(row)
    best = table[-1][-1]
    if levels == 1:
        err = np.nan
    else:
        err = float(np.max(np.abs(best - table[-2][-1])))
    return best, err


# -- metric, its inverse, its derivative ----------------------------------------------

def g_oracle(d, x, y, config: OracleConfig = DEFAULT) -> float:
    """Resolvent integral of tr((D+t)^-1 X (D+t)^-1 Y) over t >= 0."""
    p = _pd(d)
    dm, xm, ym = p.matrix, as_matrix(x), as_matrix(y)

    def f(t):
        r = _resolvents(dm, t)
        return np.einsum("tij,jk,tkl,li->t", r, xm, r, ym)

    return float(quad_semi_infinite(f, _scale(p), tol=config.quad_tol))


def ginv_oracle(d, x) -> np.ndarray:
    """Integral over u in [0, 1] of D^u X D^(1-u), entrywise in the eigenframe."""
    p = _pd(d)
    q, lam = p.frame, p.spectrum.values
    xf = q.T @ as_matrix(x) @ q

    def f(u):
        u = np.asarray(u)[:, None]
        a, b = lam[None, :] ** u, lam[None, :] ** (1.0 - u)
        return a[:, :, None] * xf[None] * b[:, None, :]

    return q @ quad_unit(f) @ q.T


def dg_quad(d, z, x, y, config: OracleConfig = DEFAULT) -> float:
    """dG(D)(Z)(X, Y) as the literal integral of
    -tr(R Z R X R Y) - tr(R X R Z R Y), R = (D + t)^-1."""
    p = _pd(d)
    dm = p.matrix
    zm, xm, ym = as_matrix(z), as_matrix(x), as_matrix(y)

    def f(t):
        r = _resolvents(dm, t)
        rz, rx, ry = r @ zm, r @ xm, r @ ym
        return -(np.einsum("tij,tjk,tki->t", rz, rx, ry) + np.einsum("tij,tjk,tki->t", rx, rz, ry))

    return float(quad_semi_infinite(f, _scale(p), tol=config.quad_tol))


def dg_fd(d, z, x, y, config: OracleConfig = DEFAULT, check: bool = True) -> float:
    """dG(D)(Z)(X, Y) by central differences of :func:`g_oracle` along Z.

    With ``check`` the literal derivative integral is evaluated too and the
    two must agree to 1e-6 (relative to max(1, |value|)).
    """
    p = _pd(d)
    zm = as_matrix(z)
    if not np.any(zm):
        return 0.0
    h = step_size(p, zm, config)
    tight = OracleConfig(config.fd_step_rel, config.richardson_levels, min(config.quad_tol, 1e-13))
    val, _ = richardson(lambda s: g_oracle(p.matrix + s * zm, x, y, tight), h, config.richardson_levels)
    val = float(val)
    if check:
        ref = dg_quad(p, zm, x, y, config)
        if abs(val - ref) > DG_AGREEMENT_TOL * max(1.0, abs(ref)):
            raise ConvergenceError(f"dG finite difference {val!r} disagrees with quadrature {ref!r}")
    return val


# -- chart jets: metric and its first derivative on a family of directions -------------

class Chart:
    """Affine chart D + sum_a c_a V_a on the span of the directions V_a.

    ``jet(point)`` integrates the Gram matrix G(V_a, V_b) and the derivative
    tensor dG(V_z)(V_a, V_b) at ``point`` in one quadrature. The panel
    partition is chosen adaptively at the base point and then frozen, so
    nearby evaluations used in finite differences see the same rule.
    """

    def __init__(self, base, directions, config: OracleConfig = DEFAULT):
        self.base = _pd(base)
        self.directions = np.asarray(directions, dtype=float)
        self.config = config
        self.scale = _scale(self.base)
        res = quad_semi_infinite(self._integrand(self.base.matrix), self.scale,
                                 tol=min(config.quad_tol, 1e-12), full_output=True)
        self.panels = res.panels
        self._base_jet = self._split(res.value)

    def _integrand(self, dm):
        v = self.directions
        k = len(v)

        def f(t):
            r = _resolvents(dm, t)
            pv = np.einsum("tij,ajk->taik", r, v)                  # R V_a
            gram = np.einsum("taij,tbji->tab", pv, pv)
            pp = np.einsum("tzij,tajk->tzaik", pv, pv)              # R V_z R V_a
            c = np.einsum("tzaij,tbji->tzab", pp, pv)
            dgt = -(c + np.swapaxes(c, 1, 2))
            return np.concatenate([gram.reshape(len(t), k * k), dgt.reshape(len(t), k ** 3)], axis=1)

        return f

    def _split(self, flat):
        k = len(self.directions)
        flat = np.asarray(flat)
        gram = flat[: k * k].reshape(k, k)
        dgt = flat[k * k:].reshape(k, k, k)
        return 0.5 * (gram + gram.T), dgt

    def jet(self, dm=None):
        if dm is None:
            return self._base_jet
        return self._split(quad_semi_infinite_fixed(self._integrand(dm), self.scale, self.panels))

    def christoffel_coeffs(self, dm=None, raise_index=None):
        """C[k, a, b]: Gamma(V_a, V_b) = sum_k C[k,a,b] V_k, from
        G(Gamma(X,Y),Z) = 1/2 dG(Z)(X,Y) - 1/2 dG(X)(Z,Y) - 1/2 dG(Y)(X,Z)."""
        gram, dgt = self.jet(dm)
        rhs = 0.5 * (dgt - np.transpose(dgt, (1, 0, 2)) - np.transpose(dgt, (2, 1, 0)))
        if raise_index is None:
            return np.linalg.solve(gram, rhs.reshape(len(gram), -1)).reshape(rhs.shape)
        return np.einsum("kc,cab->kab", raise_index(dm), rhs)

    def riemann_coeffs(self, raise_index=None):
        """R[k,a,b,c]: R(V_a,V_b)V_c = sum_k R[k,a,b,c] V_k, from
        R(X,Y)Z = -dGamma(X)(Y,Z) + dGamma(Y)(X,Z) + Gamma(X,Gamma(Y,Z)) - Gamma(Y,Gamma(X,Z)),
        with dGamma by Richardson-extrapolated central differences."""
        cfg = self.config
        base = self.base.matrix
        gam = self.christoffel_coeffs(None, raise_index)
        dgam = []
        for v in self.directions:
            h = step_size(self.base, v, cfg)
            val, _ = richardson(lambda s: self.christoffel_coeffs(base + s * v, raise_index),
                                h, cfg.richardson_levels)
            dgam.append(val)
        dgam = np.array(dgam)                                        # [c, k, a, b]
        return (-np.einsum("akbc->kabc", dgam) + np.einsum("bkac->kabc", dgam)
                + np.einsum("kam,mbc->kabc", gam, gam) - np.einsum("kbm,mac->kabc", gam, gam))


def _hs_raise(p: PosDefMatrix):
    """G^{-1} as a matrix on Hilbert-Schmidt basis coefficients, via ginv_oracle."""
    basis = hs_basis(p.dim)

    def op(dm=None):
        pt = p if dm is None else PosDefMatrix.from_array(dm)
        out = np.array([ginv_oracle(pt, b) for b in basis])        # [c] -> matrix
        return np.einsum("kij,cij->kc", basis, out)

    return op


def _coeffs(basis, x) -> np.ndarray:
    return np.einsum("aij,ij->a", basis, as_matrix(x))


def christoffel_fd(d, x, y, config: OracleConfig = DEFAULT) -> np.ndarray:
    """Gamma_D(X, Y) from finite-difference dG over a Hilbert-Schmidt basis,
    raised with :func:`ginv_oracle`."""
    p = _pd(d)
    basis = hs_basis(p.dim)
    xm, ym = as_matrix(x), as_matrix(y)
    rhs = np.array([0.5 * dg_fd(p, z, xm, ym, config, check=False)
                    - 0.5 * dg_fd(p, xm, z, ym, config, check=False)
                    - 0.5 * dg_fd(p, ym, xm, z, config, check=False) for z in basis])
    cov = np.einsum("c,cij->ij", rhs, basis)
    return ginv_oracle(p, cov)


def christoffel_tensor(d, config: OracleConfig = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """(Hilbert-Schmidt basis, C[k,a,b]) with Gamma(B_a,B_b) = sum_k C[k,a,b] B_k,
    from the derivative integral (no differencing)."""
    p = _pd(d)
    basis = hs_basis(p.dim)
    chart = Chart(p, basis, config)
    return basis, chart.christoffel_coeffs(None, _hs_raise(p))


def riemann_tensor_fd(d, config: OracleConfig = DEFAULT):
    """(Hilbert-Schmidt basis, R[k,a,b,c], Gram matrix) of the ambient curvature."""
    p = _pd(d)
    basis = hs_basis(p.dim)
    chart = Chart(p, basis, config)
    r = chart.riemann_coeffs(_hs_raise(p))
    return basis, r, chart.jet()[0]


def riemann_fd(d, x, y, z, config: OracleConfig = DEFAULT) -> np.ndarray:
    """R_D(X, Y) Z from differenced Christoffel forms."""
    basis, r, _ = riemann_tensor_fd(d, config)
    xc, yc, zc = (_coeffs(basis, v) for v in (x, y, z))
    return np.einsum("kabc,a,b,c,kij->ij", r, xc, yc, zc, basis)


def _traceless_basis(n: int) -> np.ndarray:
    out = []
    for i in range(n - 1):
        e = np.zeros((n, n))
        e[i, i], e[n - 1, n - 1] = 1.0, -1.0
        out.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n))
            e[i, j] = e[j, i] = 1.0
            out.append(e)
    return np.array(out).reshape(len(out), n, n)


def _require_unit_trace(p: PosDefMatrix):
    if abs(p.trace - 1.0) > 1e-12:
        raise DomainError(f"point must have trace 1, got {p.trace!r}")


def scal1_oracle(d, config: OracleConfig = DEFAULT, route: str = "gauss") -> CurvatureValue:
    """Scalar curvature of the trace-one slice, sum_{t,s} G(R1(A_t,A_s)A_t,A_s).

    route="gauss": ambient curvature from differenced Christoffel forms,
    corrected by S(X,Y) = tr Gamma(X,Y) through the Gauss equation
    G(R1(X,Y)Z,U) = G(R(X,Y)Z,U) - S(X,Z)S(Y,U) + S(Y,Z)S(X,U).
    route="intrinsic": curvature of the induced metric in the affine chart
    D + span(traceless basis), with no reference to the ambient space.
    """
    p = _pd(d)
    _require_unit_trace(p)
    n = p.dim
    if n == 1:
        return CurvatureValue(0.0, Method.ORACLE)
    if route == "intrinsic":
        v = _traceless_basis(n)
        chart = Chart(p, v, config)
        r = chart.riemann_coeffs()
        gram = chart.jet()[0]
        rm = np.einsum("kabc,kd->abcd", r, gram)
        gi = np.linalg.inv(gram)
        return CurvatureValue(float(np.einsum("ac,bd,abcd->", gi, gi, rm)), Method.ORACLE)
    if route != "gauss":
        raise ValueError(f"unknown route {route!r}")
    basis = hs_basis(n)
    chart = Chart(p, basis, config)
    raise_index = _hs_raise(p)
    gam = chart.christoffel_coeffs(None, raise_index)
    r = chart.riemann_coeffs(raise_index)
    gram = chart.jet()[0]
    # G-orthonormal basis of the traceless slice, in Hilbert-Schmidt coefficients
    tr = np.einsum("aii->a", basis)
    v = np.array([_coeffs(basis, e) for e in _traceless_basis(n)])
    a = np.linalg.cholesky(v @ gram @ v.T)
    onb = np.linalg.solve(a, v)                                      # rows A_t
    rm = np.einsum("kabc,kd->abcd", r, gram)
    sect = np.einsum("abcd,ta,sb,tc,sd->ts", rm, onb, onb, onb, onb)
    s = np.einsum("kab,k,ta,sb->ts", gam, tr, onb, onb)
    sd = np.diag(s)
    total = _pairwise_sum(sect.ravel()) - _pairwise_sum(np.outer(sd, sd).ravel()) + _pairwise_sum((s * s.T).ravel())
    return CurvatureValue(float(total), Method.ORACLE)


def _pairwise_sum(x: np.ndarray) -> float:
    """Fixed-order tree reduction, independent of how the terms were produced."""
    x = list(map(float, x))
    if not x:
        return 0.0
    while len(x) > 1:
        x = [x[i] + x[i + 1] if i + 1 < len(x) else x[i] for i in range(0, len(x), 2)]
    return x[0]
