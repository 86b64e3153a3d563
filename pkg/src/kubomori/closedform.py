"""Eigenvalue-only scalar curvature of the trace-one slice.

The scalar curvature is split exactly as in the hand derivation: the
sectional double sum over a basis of diagonal and normalized offdiagonal
elements (offdiagonal-offdiagonal, the two mixed blocks Q, and the
vanishing diagonal-diagonal block), then the two second-fundamental-form
corrections, whose constants depend on n alone.

Three totals are reported:

* ``total_assembled``: the five published terms added up as derived.
* ``total_final_formula``: the published simplified closed formula, verbatim.
* ``total``: the value validated against the finite-difference oracle.

The mixed blocks and the diagonal block agree with the oracle as published.
The offdiagonal block and both constants do not; :func:`corrections` gives
the constant shifts, while the offdiagonal discrepancy depends on the
spectrum. :func:`scal1_formula` is the validated formula in simplified form.

Sign conventions follow :mod:`kubomori.curvature`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .logmeans import MeanTable, build_table
from .matcore import DomainError, Spectrum

TRACE_TOL = 1e-12


def _spectrum(s) -> Spectrum:
    return s if isinstance(s, Spectrum) else Spectrum(s)


def q_term(s: Spectrum, mt: MeanTable | None = None) -> float:
    """Basis-independent value of one mixed (diagonal/offdiagonal) block:

    -sum_{k,l} m_kkl^2 lam_k / (4 m_kl^2) - 1/16 sum_i 1/lam_i + sum_{k,l} (m_kkl + m_kll)/(8 m_kl)
    """
    s = _spectrum(s)
    mt = mt or build_table(s)
    lam, m2, m3 = s.values, mt.m2, mt.m3
    kkl = np.einsum("kkl->kl", m3)
    kll = np.einsum("kll->kl", m3)
    return float(-np.sum(kkl ** 2 * lam[:, None] / (4 * m2 ** 2))
                 - np.sum(1.0 / lam) / 16
                 + np.sum((kkl + kll) / (8 * m2)))


def q_term_basis(s: Spectrum, mt: MeanTable, coeffs: np.ndarray) -> float:
    """The same block written with explicit diagonal basis coefficients a^t_k
    (rows of ``coeffs``), summed over t and k < l."""
    lam, m2, m3 = _spectrum(s).values, mt.m2, mt.m3
    total = 0.0
    n = lam.size
    for a in np.atleast_2d(coeffs):
        for k, l in combinations(range(n), 2):
            lin = m3[k, k, l] * a[k] + m3[k, l, l] * a[l]
            total += -lin ** 2 / (4 * m2[k, l] ** 2)
            total += (m3[k, k, l] * a[k] ** 2 / lam[k] + m3[l, l, k] * a[l] ** 2 / lam[l]) / (4 * m2[k, l])
    return total


def k_operator(s: Spectrum, mt: MeanTable) -> np.ndarray:
    """Matrix of c -> sum_{k,l} (m_kkl sqrt(lam_k) c_k + m_kll sqrt(lam_l) c_l)/m_kl E_kl,
    shape (n*n, n), rows indexed by (k, l) in row-major order."""
    lam, m2, m3 = _spectrum(s).values, mt.m2, mt.m3
    n = lam.size
    out = np.zeros((n, n, n))
    root = np.sqrt(lam)
    for k in range(n):
        for l in range(n):
            out[k, l, k] += m3[k, k, l] * root[k] / m2[k, l]
            out[k, l, l] += m3[k, l, l] * root[l] / m2[k, l]
    return out.reshape(n * n, n)


def _triple_sums(mt: MeanTable) -> tuple[float, float]:
    """(sum_{u<v<w} m_uvw^2/(m_uv m_vw m_uw),
        sum_{u<v<w} of the three m_ppa m_ppb/(m_pa m_pb m_pp) terms)."""
    m2, m3 = mt.m2, mt.m3
    sq = mixed = 0.0
    for u, v, w in combinations(range(mt.n), 3):
        sq += m3[u, v, w] ** 2 / (m2[u, v] * m2[v, w] * m2[u, w])
        mixed += (m3[u, u, v] * m3[u, u, w] / (m2[u, v] * m2[u, w] * m2[u, u])
                  + m3[v, v, w] * m3[u, v, v] / (m2[v, w] * m2[u, v] * m2[v, v])
                  + m3[u, w, w] * m3[v, w, w] / (m2[u, w] * m2[v, w] * m2[w, w]))
    return sq, mixed


def _pair_sum(mt: MeanTable) -> float:
    m2, m3 = mt.m2, mt.m3
    return sum(m3[i, i, j] ** 2 / (m2[i, j] ** 2 * m2[i, i]) + m3[i, j, j] ** 2 / (m2[i, j] ** 2 * m2[j, j])
               for i, j in combinations(range(mt.n), 2))


def offdiag_offdiag_term(s: Spectrum, mt: MeanTable | None = None) -> float:
    """Published value of the offdiagonal-offdiagonal block:

    12/16 T + 2/16 P2 + 1/2 M + 1/4 P2, with T and M the triple sums of
    :func:`_triple_sums` and P2 the pair sum over i < j.
    """
    s = _spectrum(s)
    mt = mt or build_table(s)
    sq, mixed = _triple_sums(mt)
    pair = _pair_sum(mt)
    return 12 / 16 * sq + 2 / 16 * pair + 0.5 * mixed + 0.25 * pair


def offdiag_offdiag_term_validated(s: Spectrum, mt: MeanTable | None = None) -> float:
    """sum over ordered pairs of normalized offdiagonal basis elements of
    G(R(A_t,A_s)A_t,A_s) = -3/4 T + 1/2 M.

    Pairs sharing no index contribute nothing and equal pairs vanish by
    antisymmetry; a pair F_pa, F_pb sharing p gives
    (-m_pab^2/(2 m_ab) + m_ppa m_ppb lam_p) / (4 m_pa m_pb) in each order.
    """
    s = _spectrum(s)
    mt = mt or build_table(s)
    sq, mixed = _triple_sums(mt)
    return -0.75 * sq + 0.5 * mixed


def second_third_terms(n: int, exact: bool = False):
    """Published second-fundamental-form constants (second, third) for dimension n.

    second = -n^2(n-1)^2/16 - 2 n(n-1)^2/16 - (n-1)^2/4
    third  = -(n-1)/4 - n(n-1)/8
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    n = Fraction(n)
    second = -n ** 2 * (n - 1) ** 2 / 16 - 2 * n * (n - 1) ** 2 / 16 - (n - 1) ** 2 / 4
    third = -(n - 1) / 4 - n * (n - 1) / 8
    return (second, third) if exact else (float(second), float(third))


def second_third_terms_validated(n: int, exact: bool = False):
    """Oracle-validated constants: with d = n(n+1)/2 - 1 basis elements, each
    having S(A,A) = 1/2 and S(A_t,A_s) = 0 otherwise, the Gauss terms are
    -(d/2)^2 and +d/4."""
    if n < 1:
        raise DomainError("n must be at least 1")
    d = Fraction(n * (n + 1), 2) - 1
    second, third = -d * d / 4, d / 4
    return (second, third) if exact else (float(second), float(third))


def corrections(n: int, exact: bool = False) -> dict:
    """Validated minus published value for each constant term."""
    ps, pt = second_third_terms(n, exact=True)
    vs, vt = second_third_terms_validated(n, exact=True)
    out = {"second": vs - ps, "third": vt - pt}
    return out if exact else {k: float(v) for k, v in out.items()}


def _p_sum(s: Spectrum, mt: MeanTable) -> float:
    kkl = np.einsum("kkl->kl", mt.m3)
    return float(np.sum(kkl ** 2 * s.values[:, None] / mt.m2 ** 2))


def _mean_sum(mt: MeanTable) -> float:
    kkl = np.einsum("kkl->kl", mt.m3)
    kll = np.einsum("kll->kl", mt.m3)
    return float(np.sum((kkl + kll) / mt.m2))


def scal1_formula(s: Spectrum, mt: MeanTable | None = None) -> float:
    """Validated closed formula, with d = n(n+1)/2 - 1:

    -3/4 T + 1/2 M - 1/2 sum_{k,l} m_kkl^2 lam_k / m_kl^2 - 1/8 sum_i 1/lam_i
    + 1/4 sum_{k,l} (m_kkl + m_kll)/m_kl - d(d-1)/4
    """
    s = _spectrum(s)
    mt = mt or build_table(s)
    sq, mixed = _triple_sums(mt)
    d = s.n * (s.n + 1) / 2 - 1
    return (-0.75 * sq + 0.5 * mixed - 0.5 * _p_sum(s, mt) - np.sum(1.0 / s.values) / 8
            + 0.25 * _mean_sum(mt) - d * (d - 1) / 4)


def final_formula_deviation(s: Spectrum, mt: MeanTable | None = None) -> float:
    """Published final formula minus the validated value, in closed form:

    3/2 T + 3/8 sum_{k,l} m_kkl^2 lam_k / m_kl^2 - 51/8 sum_i 1/lam_i + c(n),
    c(n) = n(n-1)(n^2-n+1)/4 + d(d-1)/4. Spectrum dependent, so no constant
    shift repairs the published formula.
    """
    s = _spectrum(s)
    mt = mt or build_table(s)
    sq, _ = _triple_sums(mt)
    n = s.n
    d = n * (n + 1) / 2 - 1
    return (1.5 * sq + 3 / 8 * _p_sum(s, mt) - 51 / 8 * np.sum(1.0 / s.values)
            + n * (n - 1) * (n * n - n + 1) / 4 + d * (d - 1) / 4)


def final_formula(s: Spectrum, mt: MeanTable | None = None) -> float:
    """The published simplified closed formula, term by term as printed."""
    s = _spectrum(s)
    mt = mt or build_table(s)
    lam, m2, m3 = s.values, mt.m2, mt.m3
    n = s.n
    total = 0.0
    for u, v, w in combinations(range(n), 3):
        total += 0.75 * m3[u, v, w] ** 2 / (m2[u, v] * m2[v, w] * m2[w, u])
        total += 0.5 * m3[v, v, w] * m3[v, v, u] / (m2[v, u] * m2[v, v] * m2[v, w])
        total += 0.5 * m3[w, w, u] * m3[w, w, v] / (m2[w, u] * m2[w, v] * m2[w, w])
        total += 0.5 * m3[u, u, v] * m3[u, u, w] / (m2[u, u] * m2[u, v] * m2[u, w])
    kkl = np.einsum("kkl->kl", m3)
    kll = np.einsum("kll->kl", m3)
    total -= np.sum((kkl ** 2 * lam[:, None] + kll ** 2 * lam[None, :]) / m2 ** 2) / 16
    total -= 13 / 2 * np.sum(1.0 / lam)
    total += np.sum((kkl + kll) / (4 * m2))
    total += n * (n - 1) * (n * n - n + 1) / 4
    return float(total)


@dataclass(frozen=True)
class CurvatureReport:
    """Per-term breakdown of Scal1 at a trace-one spectrum.

    ``term_*`` hold the published derivation term by term and
    ``total_assembled`` their sum; ``total_final_formula`` is the published
    simplified formula. ``validated_*`` replace the published terms that
    disagree with the oracle, and ``total`` is the authoritative value.
    """

    spectrum: tuple
    term_offdiag_offdiag: float
    term_Q_twice: float
    term_diag_diag: float
    term_second: float
    term_third: float
    total_assembled: float
    total_final_formula: float
    validated_offdiag_offdiag: float
    validated_second: float
    validated_third: float
    total: float
    method: str = "closed_form"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spectrum"] = list(self.spectrum)
        return d


def scal1_closed(s) -> CurvatureReport:
    """Scalar curvature of the trace-one slice from eigenvalues alone."""
    s = _spectrum(s)
    if abs(s.trace - 1.0) > TRACE_TOL * s.n:
        raise DomainError(f"trace must be 1, got {s.trace!r}")
    mt = build_table(s)
    oo = offdiag_offdiag_term(s, mt)
    oo_valid = offdiag_offdiag_term_validated(s, mt)
    q2 = 2.0 * q_term(s, mt)
    dd = 0.0
    second, third = second_third_terms(s.n)
    v_second, v_third = second_third_terms_validated(s.n)
    return CurvatureReport(
        spectrum=tuple(s.values.tolist()),
        term_offdiag_offdiag=oo,
        term_Q_twice=q2,
        term_diag_diag=dd,
        term_second=second,
        term_third=third,
        total_assembled=oo + q2 + dd + second + third,
        total_final_formula=final_formula(s, mt),
        validated_offdiag_offdiag=oo_valid,
        validated_second=v_second,
        validated_third=v_third,
        total=oo_valid + q2 + dd + v_second + v_third,
    )
