"""Reciprocal logarithmic means.

``m_pair(a, b) = (log b - log a)/(b - a)`` and
``m_triple(a, b, c) = int_0^inf dt / ((a+t)(b+t)(c+t))`` are the first and
(negated) second divided differences of ``log``. Both stay accurate when
arguments coincide or nearly coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matcore import DomainError, Spectrum, _frozen

# relative gap below which m_pair switches to its series in r = (b-a)/(b+a)
PAIR_SERIES_GAP = 1e-8
# relative spread (max-min)/(max+min) below which m_triple uses the cluster series
TRIPLE_SERIES_SPREAD = 0.2
_SERIES_TERMS = 60


def _check_positive(*xs):
    for x in xs:
        if not (x > 0) or not math.isfinite(x):
            raise DomainError(f"arguments must be finite and positive, got {x!r}")


def m_pair(a: float, b: float) -> float:
    """Reciprocal logarithmic mean of ``a`` and ``b``; equals 1/a when a == b."""
    a, b = float(a), float(b)
    _check_positive(a, b)
    if a < b:
        a, b = b, a
    s = a + b
    r = (a - b) / s
    if r <= PAIR_SERIES_GAP:
        r2 = r * r
        return (2.0 / s) * (1.0 + r2 * (1.0 / 3 + r2 * (1.0 / 5 + r2 / 7)))
    if r < 0.5:
        return 2.0 * math.atanh(r) / (a - b)
    return (math.log(a) - math.log(b)) / (a - b)


def _cluster_series(lams: tuple[float, ...]) -> float:
    """Divided difference of log over 2 or 3 clustered points, by series.

    With lam_i = c(1 + e_i), the divided difference of log over k points is
    c^(1-k) * sum_{p>=k-1} (-1)^(p+1)/p * h_{p-k+1}(e). Returns the
    magnitude used by m_pair (k=2) or m_triple (k=3).
    """
    k = len(lams)
    hi, lo = max(lams), min(lams)
    c = 0.5 * (hi + lo)
    e = [(x - c) / c for x in lams]
    # h[j] for the current prefix of variables, updated one variable at a time
    h = [1.0] + [0.0] * _SERIES_TERMS
    for x in e:
        for j in range(1, _SERIES_TERMS + 1):
            h[j] = h[j] + x * h[j - 1]
    delta = max(abs(x) for x in e)
    total = 0.0
    for j in range(_SERIES_TERMS + 1):
        p = j + k - 1
        term = h[j] / p
        total += term if j % 2 == 0 else -term
        # |h_j| <= C(j+k-1, k-1) delta^j bounds the tail
        if math.comb(j + k, k - 1) * delta ** (j + 1) <= 1e-18:
            break
    return total / c ** (k - 1)


def m_triple(a: float, b: float, c: float) -> float:
    """Integral of 1/((a+t)(b+t)(c+t)) over t >= 0, fully symmetric."""
    x, y, z = sorted((float(a), float(b), float(c)), reverse=True)
    _check_positive(x, y, z)
    if x == z:
        return 0.5 / (x * x)
    if (x - z) / (x + z) <= TRIPLE_SERIES_SPREAD:
        return _cluster_series((x, y, z))
    if x == y:
        return _m_aab(x, z)
    if y == z:
        return _m_aab(z, x)
    return (m_pair(y, z) - m_pair(x, y)) / (x - z)


def _m_aab(a: float, b: float) -> float:
    # int (a+t)^-2 (b+t)^-1 dt = (z - log1p z)/(a z)^2, z = (b-a)/a; only used for well separated a, b
    zz = (b - a) / a
    # log1p(zz) loses digits as zz -> -1 (b << a); the log ratio does not
    lg = math.log1p(zz) if abs(zz) < 0.5 else math.log(b) - math.log(a)
    return (zz - lg) / (a * zz) ** 2


@dataclass(frozen=True)
class MeanTable:
    """All m_kl and m_ijk for a spectrum, stored in full."""

    spectrum: Spectrum
    m2: np.ndarray
    m3: np.ndarray

    @property
    def n(self) -> int:
        return self.spectrum.n

    @property
    def lam(self) -> np.ndarray:
        return self.spectrum.values

    def identity_residual(self) -> np.ndarray:
        """(1/m_kl)(m_kkl/m_kk + m_kll/m_ll) - 1 for all k, l."""
        m2, m3 = self.m2, self.m3
        d = np.diag(m2)
        kkl = np.einsum("kkl->kl", m3)
        kll = np.einsum("kll->kl", m3)
        return (kkl / d[:, None] + kll / d[None, :]) / m2 - 1.0


def build_table(s: Spectrum) -> MeanTable:
    """Eagerly compute every pair and triple coefficient of ``s``."""
    if not isinstance(s, Spectrum):
        s = Spectrum(s)
    lam = s.values.tolist()
    n = len(lam)
    m2 = np.empty((n, n))
    for k in range(n):
        m2[k, k] = 1.0 / lam[k]
        for l in range(k + 1, n):
            m2[k, l] = m2[l, k] = m_pair(lam[k], lam[l])
    m3 = np.empty((n, n, n))
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                v = m_triple(lam[i], lam[j], lam[k])
                for p in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
                    m3[p] = v
    return MeanTable(s, _frozen(m2), _frozen(m3))
