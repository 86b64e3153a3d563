import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kubomori import oracle
from kubomori.logmeans import m_pair
from kubomori.matcore import DomainError, F, SymMatrix
from kubomori.metric import MetricContext, TangentVector, christoffel, dg, dg_form, g, g_inv, g_op

from conftest import random_spd, random_sym, rel


class TestTangentVector:
    def test_traceless_flag_checked(self):
        TangentVector(SymMatrix(np.diag([1.0, -1.0])), traceless=True)
        with pytest.raises(DomainError):
            TangentVector(SymMatrix(np.eye(2)), traceless=True)

    def test_usable_as_argument(self):
        ctx = MetricContext.at(np.diag([0.7, 0.3]))
        v = TangentVector(F(2, 0, 1))
        assert g(ctx, v, v) == pytest.approx(g(ctx, F(2, 0, 1), F(2, 0, 1)))

    def test_dimension_mismatch(self):
        ctx = MetricContext.at(np.eye(2))
        with pytest.raises(DomainError):
            g(ctx, np.eye(3), np.eye(3))


class TestMetric:
    def test_identity_is_trace_form(self, rng):
        ctx = MetricContext.at(np.eye(3))
        x, y = random_sym(rng, 3), random_sym(rng, 3)
        assert g(ctx, x, y) == pytest.approx(np.trace(x @ y), rel=1e-14)
        assert g(ctx, x, y) == pytest.approx(oracle.g_oracle(np.eye(3), x, y), rel=1e-10)

    def test_basis_table(self):
        lam = np.array([0.5, 0.3, 0.2])
        ctx = MetricContext.at(lam)
        m2 = ctx.means.m2
        pairs = [(i, j) for i in range(3) for j in range(i, 3)]
        for (i, j), (k, l) in itertools.product(pairs, pairs):
            val = g(ctx, F(3, i, j), F(3, k, l))
            if (i, j) != (k, l):
                assert val == 0.0
            elif i == j:
                assert val == pytest.approx(4 * m2[i, i], rel=1e-15)
            else:
                assert val == pytest.approx(2 * m2[i, j], rel=1e-15)

    def test_two_by_two_example(self):
        d = np.diag([0.7, 0.3])
        ctx = MetricContext.at(d)
        f = F(2, 0, 1)
        assert g(ctx, f, f) == pytest.approx(2 * m_pair(0.7, 0.3), rel=1e-15)
        assert g(ctx, f, f) == pytest.approx(oracle.g_oracle(d, f, f), rel=1e-10)

    def test_against_oracle_rotated(self, rng):
        for n in (2, 3, 5):
            d = random_spd(rng, n)
            x, y = random_sym(rng, n), random_sym(rng, n)
            got = g(MetricContext.at(d), x, y)
            assert abs(got - oracle.g_oracle(d, x, y)) <= 1e-8 * max(1, abs(got))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.05, 5.0), min_size=3, max_size=3), st.integers(0, 2 ** 31))
    def test_symmetric_positive(self, lam, seed):
        rng = np.random.default_rng(seed)
        ctx = MetricContext.at(np.array(lam))
        x, y = random_sym(rng, 3), random_sym(rng, 3)
        assert g(ctx, x, y) == pytest.approx(g(ctx, y, x), rel=1e-14)
        assert g(ctx, x, x) > 0


class TestInverse:
    def test_identity(self, rng):
        x = random_sym(rng, 3)
        assert np.allclose(g_inv(MetricContext.at(np.eye(3)), x), x, atol=1e-15)

    def test_matrix_units(self):
        ctx = MetricContext.at(np.array([0.6, 0.3, 0.1]))
        m2 = ctx.means.m2
        for i, j in [(0, 1), (0, 2), (1, 1)]:
            assert np.allclose(g_inv(ctx, F(3, i, j)), F(3, i, j) / m2[i, j], rtol=1e-15)

    def test_commuting(self):
        d = np.diag([0.6, 0.3, 0.1])
        x = np.diag([1.0, -2.0, 0.5])
        assert np.allclose(g_inv(MetricContext.at(d), x), d @ x, rtol=1e-14)
        assert np.allclose(oracle.ginv_oracle(d, x), d @ x, rtol=1e-12)

    def test_two_sided(self, rng):
        for n in (2, 4):
            ctx = MetricContext.at(random_spd(rng, n))
            x, y = random_sym(rng, n), random_sym(rng, n)
            assert rel(g_inv(ctx, g_op(ctx, x)), x) <= 1e-11
            assert rel(g_op(ctx, g_inv(ctx, x)), x) <= 1e-11
            assert g(ctx, g_inv(ctx, x), y) == pytest.approx(np.trace(x @ y), rel=1e-10, abs=1e-12)

    def test_against_integral(self, rng):
        for n in (2, 3, 5):
            d = random_spd(rng, n)
            x = random_sym(rng, n)
            assert rel(g_inv(MetricContext.at(d), x), oracle.ginv_oracle(d, x)) <= 1e-10


class TestDerivative:
    def test_basis_display(self):
        n = 4
        ctx = MetricContext.at(np.array([0.4, 0.3, 0.2, 0.1]))
        m3 = ctx.means.m3
        for (i, j), (k, l) in itertools.product(itertools.combinations_with_replacement(range(n), 2), repeat=2):
            want = np.zeros((n, n))
            if j == k:
                want -= m3[i, l, j] * F(n, i, l)
            if j == l:
                want -= m3[i, k, j] * F(n, i, k)
            if i == l:
                want -= m3[j, k, i] * F(n, j, k)
            if i == k:
                want -= m3[j, l, i] * F(n, j, l)
            assert np.allclose(dg(ctx, F(n, i, j), F(n, k, l)), want, atol=1e-14)

    def test_repeated_offdiagonal(self):
        ctx = MetricContext.at(np.array([0.5, 0.3, 0.2]))
        m3 = ctx.means.m3
        got = dg(ctx, F(3, 0, 2), F(3, 0, 2))
        assert np.allclose(got, -m3[0, 0, 2] * F(3, 0, 0) - m3[0, 2, 2] * F(3, 2, 2), atol=1e-15)

    def test_commuting(self):
        d = np.diag([0.5, 0.3, 0.2])
        a, b = np.diag([1.0, -1.0, 0.0]), np.diag([0.3, 0.2, -0.5])
        got = dg(MetricContext.at(d), a, b)
        assert np.allclose(got, -np.linalg.inv(d) @ np.linalg.inv(d) @ a @ b, rtol=1e-13)

    def test_trilinear_symmetry(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 6))
            ctx = MetricContext.at(random_spd(rng, n))
            xs = [random_sym(rng, n) for _ in range(3)]
            vals = [dg_form(ctx, *p) for p in itertools.permutations(xs)]
            assert max(vals) - min(vals) <= 1e-12 * max(1.0, max(abs(v) for v in vals))

    def test_against_central_difference(self, rng):
        for n in (2, 3):
            d = random_spd(rng, n)
            z, x, y = (random_sym(rng, n) for _ in range(3))
            h = 1e-5 * np.max(np.linalg.eigvalsh(d))
            fd = (g(MetricContext.at(d + h * z), x, y) - g(MetricContext.at(d - h * z), x, y)) / (2 * h)
            exact = dg_form(MetricContext.at(d), z, x, y)
            assert abs(fd - exact) <= 1e-6 * max(1, abs(exact))

    def test_zero_direction(self):
        ctx = MetricContext.at(np.array([0.6, 0.4]))
        assert np.array_equal(dg(ctx, np.zeros((2, 2)), F(2, 0, 1)), np.zeros((2, 2)))


class TestChristoffel:
    def test_symmetric(self, rng):
        ctx = MetricContext.at(random_spd(rng, 4))
        x, y = random_sym(rng, 4), random_sym(rng, 4)
        assert np.allclose(christoffel(ctx, x, y), christoffel(ctx, y, x), atol=1e-12, rtol=0)

    def test_disjoint_indices_vanish(self):
        ctx = MetricContext.at(np.array([0.4, 0.3, 0.2, 0.1]))
        assert np.array_equal(christoffel(ctx, F(4, 0, 1), F(4, 2, 3)), np.zeros((4, 4)))

    def test_chained_units(self):
        # Gamma(F_ij, F_jl) = 1/2 m_ilj / m_il F_il for distinct i, j, l
        ctx = MetricContext.at(np.array([0.5, 0.3, 0.2]))
        m2, m3 = ctx.means.m2, ctx.means.m3
        got = christoffel(ctx, F(3, 0, 1), F(3, 1, 2))
        assert np.allclose(got, 0.5 * m3[0, 2, 1] / m2[0, 2] * F(3, 0, 2), atol=1e-15)
        fd = oracle.christoffel_fd(np.diag([0.5, 0.3, 0.2]), F(3, 0, 1), F(3, 1, 2))
        assert rel(got, fd) <= 1e-6

    def test_is_minus_half_ginv_dg(self, rng):
        ctx = MetricContext.at(random_spd(rng, 3))
        x, y = random_sym(rng, 3), random_sym(rng, 3)
        assert np.allclose(christoffel(ctx, x, y), -0.5 * g_inv(ctx, dg(ctx, x, y)), atol=1e-13)

    def test_metric_compatibility(self, rng):
        # V.G(X,Y) = -G(Gamma(V,X),Y) - G(X,Gamma(V,Y)) for fields constant in the chart
        for n in (2, 3):
            d = random_spd(rng, n)
            v, x, y = (random_sym(rng, n) for _ in range(3))
            ctx = MetricContext.at(d)
            h = 1e-5 * np.max(np.linalg.eigvalsh(d))
            fd = (g(MetricContext.at(d + h * v), x, y) - g(MetricContext.at(d - h * v), x, y)) / (2 * h)
            conn = -g(ctx, christoffel(ctx, v, x), y) - g(ctx, x, christoffel(ctx, v, y))
            assert fd == pytest.approx(conn, rel=1e-6, abs=1e-6)
