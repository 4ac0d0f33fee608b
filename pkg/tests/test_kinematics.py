"""Jacobian bundle and the kinematic identity battery."""

import random
from fractions import Fraction

import numpy as np
import pytest

from vortlab import flows
from vortlab.errors import DegenerateMapError
from vortlab.fields import (
    Box,
    EulerianVectorField,
    PolynomialTrajectoryField,
    ScalarFieldLabel,
)
from vortlab.kinematics import (
    JacobianBundle,
    convective_gradient_residual,
    curl_cross_identity_residual,
    curl_pullback_residual,
    inverse_jacobian_rate_residual,
    jacobian,
    jacobian_rate_residual,
    pullback_gradient,
    run_identity_battery,
    transform_line,
    transform_surface,
    transform_volume,
)
from vortlab.poly import Poly, random_point, random_poly

BOX = Box((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0))


def shear_field(rate=1.0):
    return flows.make_fixture("shear", rate=rate, t0=0.0, t1=5.0).field


class TestBundle:
    def test_identity_bundle(self):
        b = jacobian(flows.make_fixture("identity").field, (0.1, 0.2, 0.3), 0.5)
        assert np.allclose(b.matrix, np.eye(3))
        assert b.det == pytest.approx(1.0)
        assert np.allclose(b.cof, np.eye(3))
        assert np.allclose(b.inv, np.eye(3))

    def test_dilation_scaling(self):
        # x = 2a: J = 8, cofactors 4 I
        b = JacobianBundle.from_matrix(2.0 * np.eye(3))
        assert b.det == pytest.approx(8.0)
        assert np.allclose(b.cof, 4.0 * np.eye(3))
        assert np.allclose(b.inv, 0.5 * np.eye(3))

    def test_shear_bundle(self):
        b = jacobian(shear_field(), (0.0, 0.0, 0.0), 3.0)
        assert b.det == pytest.approx(1.0)
        assert np.allclose(b.matrix, [[1.0, 3.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])

    def test_cof_equals_det_times_inv_transpose(self):
        rng = random.Random(5)
        for _ in range(30):
            deltas = [Fraction(1, 8) * random_poly(rng, 4) for _ in range(3)]
            fld = PolynomialTrajectoryField.identity_plus(deltas, BOX, -1.0, 1.0)
            a = random_point(rng, 3, 6)
            t = random_point(rng, 1, 6)[0]
            try:
                b = jacobian(fld, a, t)
            except DegenerateMapError:
                continue
            lhs = b.cof
            rhs = b.det * b.inv.T
            assert all(x == y for x, y in zip(lhs.flat, rhs.flat))
            prod = b.matrix @ b.inv
            assert all(prod[i, j] == (1 if i == j else 0) for i in range(3) for j in range(3))

    def test_degenerate_map_raises(self):
        a1, a2, a3, t = (Poly.variable(4, i) for i in range(4))
        collapsing = PolynomialTrajectoryField([a1, a2, t * a3], BOX, -1.0, 1.0)
        with pytest.raises(DegenerateMapError):
            jacobian(collapsing, (Fraction(0), Fraction(0), Fraction(1)), Fraction(0))


class TestVolumeTransport:
    def test_incompressible_fixtures_keep_their_jacobian(self):
        # rotation and the trochoidal wave have time-independent determinants
        for name in ("rigid-rotation", "gerstner"):
            fx = flows.make_fixture(name)
            rng = np.random.default_rng(2)
            box = fx.field.box
            for _ in range(15):
                a = np.array([rng.uniform(lo, hi) for lo, hi in zip(box.lo, box.hi)])
                j0 = jacobian(fx.field, a, fx.field.t0).det
                jt = jacobian(fx.field, a, rng.uniform(fx.field.t0, fx.field.t1)).det
                assert abs(jt - j0) < 1e-12 * max(1.0, abs(j0))

    def test_analytic_cofactor_consistency(self):
        fx = flows.make_fixture("gerstner")
        b = jacobian(fx.field, (2.2, 0.5, -1.1), 0.7)
        assert np.max(np.abs(b.cof - b.det * np.asarray(b.inv, float).T)) < 1e-12
        assert np.max(np.abs(b.matrix @ b.inv - np.eye(3))) < 1e-12


class TestPullbackAndTransport:
    def test_identity_pullback(self):
        b = JacobianBundle.from_matrix(np.eye(3))
        assert np.allclose(pullback_gradient(b, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_dilation_pullback(self):
        b = JacobianBundle.from_matrix(2.0 * np.eye(3))
        assert np.allclose(pullback_gradient(b, [1.0, 1.0, 1.0]), [2.0, 2.0, 2.0])

    def test_shear_pullback(self):
        b = jacobian(shear_field(), (0.0, 0.0, 0.0), 3.0)
        assert np.allclose(pullback_gradient(b, [1.0, 0.0, 0.0]), [1.0, 3.0, 0.0])

    def test_element_transport(self):
        ident = JacobianBundle.from_matrix(np.eye(3))
        assert np.allclose(transform_line(ident, [1.0, 2.0, 0.0]), [1.0, 2.0, 0.0])
        dil = JacobianBundle.from_matrix(2.0 * np.eye(3))
        assert np.allclose(transform_line(dil, [1.0, 0.0, 0.0]), [2.0, 0.0, 0.0])
        assert np.allclose(transform_surface(dil, [1.0, 0.0, 0.0]), [4.0, 0.0, 0.0])
        assert transform_volume(dil, 1.0) == pytest.approx(8.0)
        sh = jacobian(shear_field(), (0.0, 0.0, 0.0), 3.0)
        assert np.allclose(transform_line(sh, [0.0, 1.0, 0.0]), [3.0, 1.0, 0.0])

    def test_surface_transport_matches_transported_edge_cross(self):
        # cof(G)(u x v) = (G u) x (G v): the transported area element is the
        # cross product of the transported edges
        rng = np.random.default_rng(6)
        for _ in range(50):
            m = rng.normal(size=(3, 3))
            b = JacobianBundle.from_matrix(m)
            u, v = rng.normal(size=3), rng.normal(size=3)
            lhs = transform_surface(b, np.cross(u, v))
            rhs = np.cross(m @ u, m @ v)
            assert np.allclose(lhs, rhs, atol=1e-12)

    def test_pullback_gradient_matches_fd_composition(self):
        # grad_a of psi(x(a, t)) equals G^T grad_x psi
        fx = flows.make_fixture("gerstner")
        a, t = np.array([2.3, 0.5, -1.1]), 0.4
        b = jacobian(fx.field, a, t)
        x = fx.field.position(a, t)
        grad_x = np.array([np.cos(x[0]) * x[2], 0.0, np.sin(x[0])])
        want = pullback_gradient(b, grad_x)
        h = 1e-5
        got = np.empty(3)
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1.0
            xp = fx.field.position(a + h * e, t)
            xm = fx.field.position(a - h * e, t)
            got[j] = (np.sin(xp[0]) * xp[2] - np.sin(xm[0]) * xm[2]) / (2 * h)
        assert np.allclose(want, got, atol=1e-8)

    def test_eulerian_velocity_gradient_rotation(self):
        from vortlab.kinematics import eulerian_velocity_gradient

        fx = flows.make_fixture("rigid-rotation", omega0=1.3)
        du = eulerian_velocity_gradient(fx.field, (0.2, -0.4, 0.1), 3.7)
        assert np.allclose(du, 1.3 * np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]]), atol=1e-12)


class TestRateIdentities:
    def test_identity_map_zero(self):
        f = flows.make_fixture("identity").field
        assert np.allclose(jacobian_rate_residual(f, (0.1, 0.2, 0.3), 0.5), 0.0)
        assert np.allclose(inverse_jacobian_rate_residual(f, (0.1, 0.2, 0.3), 0.5), 0.0)
        assert np.allclose(convective_gradient_residual(f, (0.1, 0.2, 0.3), 0.5), 0.0)

    def test_translation_zero(self):
        f = flows.make_fixture("translation").field
        assert np.allclose(convective_gradient_residual(f, (0.1, 0.2, 0.3), 0.5, h=1e-3), 0.0,
                           atol=1e-12)

    def test_rotation_residuals_with_fd_in_time(self):
        f = flows.make_fixture("rigid-rotation", omega0=1.0).field
        a, t = np.array([0.4, -0.3, 0.2]), 2.1
        assert np.max(np.abs(jacobian_rate_residual(f, a, t, h=1e-3))) < 1e-10
        assert np.max(np.abs(inverse_jacobian_rate_residual(f, a, t, h=1e-3))) < 1e-10
        assert np.max(np.abs(convective_gradient_residual(f, a, t, h=1e-3))) < 1e-10

    def test_polynomial_shear_exactly_zero(self):
        a1, a2, a3, t = (Poly.variable(4, i) for i in range(4))
        fld = PolynomialTrajectoryField([a1 + t * a2, a2, a3], BOX, 0.0, 2.0)
        pt, tt = (Fraction(1, 3), Fraction(-1, 2), Fraction(1)), Fraction(3, 4)
        assert all(v == 0 for v in jacobian_rate_residual(fld, pt, tt).flat)
        assert all(v == 0 for v in inverse_jacobian_rate_residual(fld, pt, tt).flat)
        assert all(v == 0 for v in convective_gradient_residual(fld, pt, tt))


class TestCurlPullback:
    def test_zero_field_with_potential(self):
        # q = 0: the residual reduces to curl(grad F) = 0
        rng = random.Random(3)
        fld = PolynomialTrajectoryField.identity_plus(
            [Fraction(1, 8) * random_poly(rng, 4) for _ in range(3)], BOX, -1.0, 1.0
        )
        q = EulerianVectorField.from_polys([Poly(3, {}) for _ in range(3)])
        F = ScalarFieldLabel.from_poly(random_poly(rng, 4))
        r = curl_pullback_residual(fld, q, F, random_point(rng, 3, 4), Fraction(1, 2))
        assert all(v == 0 for v in r)

    def test_identity_map_any_polynomial_q(self):
        rng = random.Random(4)
        a_vars = [Poly.variable(4, i) for i in range(3)]
        fld = PolynomialTrajectoryField(a_vars, BOX, -1.0, 1.0)
        q = EulerianVectorField.from_polys([random_poly(rng, 3) for _ in range(3)])
        F = ScalarFieldLabel.from_poly(Poly(4, {}))
        r = curl_pullback_residual(fld, q, F, random_point(rng, 3, 4), Fraction(0))
        assert all(v == 0 for v in r)

    def test_shear_map_exact(self):
        a1, a2, a3, t = (Poly.variable(4, i) for i in range(4))
        fld = PolynomialTrajectoryField([a1 + t * a2, a2, a3], BOX, 0.0, 5.0)
        x2 = Poly.variable(3, 1)
        q = EulerianVectorField.from_polys([x2, Poly(3, {}), Poly(3, {})])
        F = ScalarFieldLabel.from_poly(Poly(4, {}))
        r = curl_pullback_residual(fld, q, F, (Fraction(1), Fraction(1), Fraction(0)), Fraction(3))
        assert all(v == 0 for v in r)


class TestBattery:
    def test_hundred_randomized_triples_exact(self):
        out = run_identity_battery(seed=1, trials=100)
        assert out["exact_zero_counts"] == {
            "rate": 100, "inverse_rate": 100, "convective": 100,
            "curl_pullback": 100, "curl_cross": 100,
        }

    def test_battery_is_deterministic(self):
        assert run_identity_battery(seed=9, trials=10) == run_identity_battery(seed=9, trials=10)

    def test_curl_cross_identity_floats(self):
        # also holds in float arithmetic to rounding
        rng = np.random.default_rng(0)
        v, w = rng.normal(size=3), rng.normal(size=3)
        dv, dw = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
        assert abs(curl_cross_identity_residual(v, w, dv, dw)) < 1e-12
