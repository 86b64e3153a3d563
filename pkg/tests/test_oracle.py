import ast
import inspect
import itertools

import numpy as np
import pytest

from kubomori import curvature as cv
from kubomori import oracle
from kubomori.matcore import ConvergenceError, DomainError, F
from kubomori.metric import MetricContext, christoffel, dg_form, g, g_inv

from conftest import random_density, random_orthogonal, random_spd, random_sym, random_traceless, rel


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"fd_step_rel": 1e-10}, {"fd_step_rel": 0.02}, {"richardson_levels": 0},
        {"richardson_levels": 5}, {"quad_tol": 0.0},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(DomainError):
            oracle.OracleConfig(**kwargs)

    def test_defaults(self):
        c = oracle.OracleConfig()
        assert (c.fd_step_rel, c.richardson_levels, c.quad_tol) == (1e-5, 2, 1e-10)


class TestIndependence:
    def test_imports_only_primitives(self):
        tree = ast.parse(inspect.getsource(oracle))
        mods = {node.module for node in ast.walk(tree) if isinstance(node, ast.ImportFrom)}
        assert "logmeans" not in mods and "metric" not in mods
        names = {a.name for node in ast.walk(tree) if isinstance(node, ast.ImportFrom)
                 if node.module == "curvature" for a in node.names}
        assert names <= {"CurvatureValue", "Method"}


class TestMetricOracle:
    def test_identity(self, rng):
        x, y = random_sym(rng, 3), random_sym(rng, 3)
        assert oracle.g_oracle(np.eye(3), x, y) == pytest.approx(np.trace(x @ y), rel=1e-10)

    def test_units(self):
        d = np.diag([0.6, 0.3, 0.1])
        m2 = MetricContext.at(d).means.m2
        for i, j in itertools.combinations(range(3), 2):
            assert oracle.g_oracle(d, F(3, i, j), F(3, i, j)) == pytest.approx(2 * m2[i, j], rel=1e-10)

    def test_random_against_closed(self, rng):
        d = random_spd(rng, 4)
        x, y = random_sym(rng, 4), random_sym(rng, 4)
        assert oracle.g_oracle(d, x, y) == pytest.approx(g(MetricContext.at(d), x, y), rel=1e-8)


class TestInverseOracle:
    def test_identity(self, rng):
        x = random_sym(rng, 3)
        assert np.allclose(oracle.ginv_oracle(np.eye(3), x), x, atol=1e-14)

    def test_commuting(self):
        d = np.diag([0.5, 0.3, 0.2])
        x = np.diag([1.0, 2.0, -3.0])
        assert np.allclose(oracle.ginv_oracle(d, x), d @ x, rtol=1e-12)

    def test_inverse_property(self, rng):
        d = random_spd(rng, 3)
        x, y = random_sym(rng, 3), random_sym(rng, 3)
        assert oracle.g_oracle(d, oracle.ginv_oracle(d, x), y) == pytest.approx(np.trace(x @ y), rel=1e-8)

    def test_against_closed(self, rng):
        d = random_spd(rng, 4)
        x = random_sym(rng, 4)
        assert rel(oracle.ginv_oracle(d, x), g_inv(MetricContext.at(d), x)) <= 1e-10


class TestDerivativeOracle:
    def test_zero_direction(self, rng):
        x, y = random_sym(rng, 2), random_sym(rng, 2)
        assert oracle.dg_fd(np.eye(2), np.zeros((2, 2)), x, y) == 0.0

    def test_symmetry(self, rng):
        d = random_spd(rng, 3)
        xs = [random_sym(rng, 3) for _ in range(3)]
        vals = [oracle.dg_fd(d, *p) for p in itertools.permutations(xs)]
        assert max(vals) - min(vals) <= 1e-6 * max(1.0, max(map(abs, vals)))

    def test_unit_component(self):
        d = np.diag([0.5, 0.3, 0.2])
        m3 = MetricContext.at(d).means.m3
        f = F(3, 0, 1)
        # <dG(F_01)(F_01), E_00> = -2 m_001
        e00 = np.diag([1.0, 0.0, 0.0])
        assert oracle.dg_fd(d, f, f, e00) == pytest.approx(-2 * m3[0, 0, 1], rel=1e-6)

    def test_quadrature_and_difference_agree(self, rng):
        for n in (2, 4):
            d = random_spd(rng, n)
            z, x, y = (random_sym(rng, n) for _ in range(3))
            a = oracle.dg_quad(d, z, x, y)
            b = oracle.dg_fd(d, z, x, y, check=False)
            assert abs(a - b) <= 1e-6 * max(1, abs(a))
            assert a == pytest.approx(dg_form(MetricContext.at(d), z, x, y), rel=1e-8)

    def test_step_size(self):
        d = np.diag([2.0, 0.1])
        z = np.eye(2)
        assert oracle.step_size(d, z) == pytest.approx(2e-5)
        assert oracle.step_size(d, 1e4 * z) == pytest.approx(0.25 * 0.1 / 1e4)

    def test_step_underflow(self):
        with pytest.raises(ConvergenceError):
            oracle.step_size(np.diag([1.0, 1e-15]), np.eye(2))

    def test_richardson_exact_on_cubic(self):
        val, err = oracle.richardson(lambda h: (1 + h) ** 3, 0.1, 2)
        assert val == pytest.approx(3.0, abs=1e-13)
        # the estimate compares with the coarser row, so it bounds the true error
        assert err >= abs(val - 3.0)
        assert err == pytest.approx(0.01, rel=1e-9)


class TestChristoffelOracle:
    def test_against_closed(self, rng):
        for n in (2, 3, 4):
            d = random_spd(rng, n)
            x, y = random_sym(rng, n), random_sym(rng, n)
            assert rel(oracle.christoffel_fd(d, x, y), christoffel(MetricContext.at(d), x, y)) <= 1e-6

    def test_symmetric(self, rng):
        d = random_spd(rng, 3)
        x, y = random_sym(rng, 3), random_sym(rng, 3)
        assert rel(oracle.christoffel_fd(d, x, y), oracle.christoffel_fd(d, y, x)) <= 1e-9

    def test_disjoint_units(self):
        d = np.diag([0.4, 0.3, 0.2, 0.1])
        got = oracle.christoffel_fd(d, F(4, 0, 1), F(4, 2, 3))
        assert np.max(np.abs(got)) <= 1e-9

    def test_step_halving(self, rng):
        d = random_spd(rng, 3)
        x, y = random_sym(rng, 3), random_sym(rng, 3)
        a = oracle.christoffel_fd(d, x, y, oracle.OracleConfig(fd_step_rel=1e-4))
        b = oracle.christoffel_fd(d, x, y, oracle.OracleConfig(fd_step_rel=5e-5))
        assert rel(a, b) <= 4 * oracle.CHRISTOFFEL_TOL

    def test_tensor_route(self, rng):
        d = random_spd(rng, 3)
        basis, c = oracle.christoffel_tensor(d)
        ctx = MetricContext.at(d)
        want = christoffel(ctx, basis[0], basis[4])
        assert rel(np.einsum("k,kij->ij", c[:, 0, 4], basis), want) <= 1e-8


class TestRiemannOracle:
    def test_antisymmetry(self, rng):
        d = random_spd(rng, 2)
        x, y, z = (random_sym(rng, 2) for _ in range(3))
        a = oracle.riemann_fd(d, x, y, z)
        assert rel(oracle.riemann_fd(d, y, x, z), -a) <= 1e-9

    def test_against_closed(self, rng):
        for n in (2, 3):
            d = random_spd(rng, n)
            x, y, z = (random_sym(rng, n) for _ in range(3))
            got = oracle.riemann_fd(d, x, y, z)
            assert rel(got, cv.riemann(MetricContext.at(d), x, y, z)) <= 1e-5

    def test_bianchi(self, rng):
        d = random_spd(rng, 3)
        basis, r, _ = oracle.riemann_tensor_fd(d)
        cyc = r + np.transpose(r, (0, 2, 3, 1)) + np.transpose(r, (0, 3, 1, 2))
        assert np.max(np.abs(cyc)) <= 1e-5 * np.max(np.abs(r))


class TestScalOracle:
    def test_mixed_two_regression(self):
        assert oracle.scal1_oracle(np.eye(2) / 2).value == pytest.approx(0.0, abs=1e-8)

    def test_conjugation_invariance(self, rng):
        lam = random_density(rng, 3, rotate=False)
        a = oracle.scal1_oracle(lam).value
        o = random_orthogonal(rng, 3)
        b = oracle.scal1_oracle(o @ lam @ o.T).value
        assert b == pytest.approx(a, rel=1e-6)

    @pytest.mark.parametrize("n", [2, 3])
    def test_routes_agree(self, rng, n):
        d = random_density(rng, n)
        a = oracle.scal1_oracle(d, route="gauss").value
        b = oracle.scal1_oracle(d, route="intrinsic").value
        assert a == pytest.approx(b, rel=1e-6)

    def test_method_tag(self):
        assert oracle.scal1_oracle(np.eye(2) / 2).method is cv.Method.ORACLE

    def test_one_dimensional(self):
        assert oracle.scal1_oracle(np.ones((1, 1))).value == 0.0

    def test_trace_precondition(self):
        with pytest.raises(DomainError):
            oracle.scal1_oracle(np.eye(2))

    def test_unknown_route(self):
        with pytest.raises(ValueError):
            oracle.scal1_oracle(np.eye(2) / 2, route="nope")

    def test_pairwise_sum_fixed_order(self):
        x = np.array([1e16, 1.0, -1e16, 1.0])
        assert oracle._pairwise_sum(x) == oracle._pairwise_sum(x.copy())
        assert oracle._pairwise_sum([]) == 0.0
