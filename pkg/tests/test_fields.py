"""Trajectory-field backends, label-space operators and grid file I/O."""

import math
from fractions import Fraction

import numpy as np
import pytest

from vortlab import flows
from vortlab.errors import GridFormatError, OutOfDomainError
from vortlab.fields import (
    AnalyticTrajectoryField,
    Box,
    LabelGrid,
    PolynomialTrajectoryField,
    SampledTrajectoryField,
    ScalarFieldLabel,
    VectorFieldLabel,
    curl_label,
    div_label,
    eval_state,
    grad_label,
    load_grid,
    save_grid,
)
from vortlab.poly import Poly

BOX = Box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))


def _fit_slope(hs, errs):
    hs, errs = np.asarray(hs, float), np.asarray(errs, float)
    return np.polyfit(np.log(hs), np.log(errs), 1)[0]


class TestEvalState:
    def test_identity_map(self):
        fx = flows.make_fixture("identity")
        x, v, acc = eval_state(fx.field, (1.0, 0.5, -0.5), 0.5)
        assert np.allclose(x, [1.0, 0.5, -0.5])
        assert np.allclose(v, 0.0) and np.allclose(acc, 0.0)

    def test_translation(self):
        fx = flows.make_fixture("translation", c=(1.0, 0.0, 0.0))
        _, v, acc = eval_state(fx.field, (0.0, 0.0, 0.0), 0.7)
        assert np.allclose(v, [1.0, 0.0, 0.0]) and np.allclose(acc, 0.0)

    def test_polynomial_map_exact(self):
        a1, a2, a3, t = (Poly.variable(4, i) for i in range(4))
        f = PolynomialTrajectoryField([a1 + t * t * a2, a2, a3], BOX, 0.0, 3.0)
        x, v, acc = eval_state(f, (Fraction(1), Fraction(1), Fraction(0)), Fraction(2))
        assert list(x) == [5, 1, 0]
        assert list(v) == [4, 0, 0]
        assert list(acc) == [2, 0, 0]

    def test_out_of_domain_raises(self):
        fx = flows.make_fixture("identity")
        with pytest.raises(OutOfDomainError):
            eval_state(fx.field, (5.0, 0.0, 0.0), 0.5)
        with pytest.raises(OutOfDomainError):
            eval_state(fx.field, (0.0, 0.0, 0.0), 99.0)


class TestLabelOperators:
    def test_gradient_of_coordinate(self):
        f = ScalarFieldLabel(value=lambda a, t: a[0])
        assert np.allclose(grad_label(f, (0.3, 0.1, 0.0), 0.0), [1.0, 0.0, 0.0])

    def test_gradient_example(self):
        f = ScalarFieldLabel(value=lambda a, t: a[0] * a[1] + a[2] ** 2)
        assert np.allclose(grad_label(f, (1.0, 2.0, 3.0), 0.0), [2.0, 1.0, 6.0], atol=1e-10)

    def test_gradient_of_constant(self):
        f = ScalarFieldLabel.constant(4.2)
        assert np.allclose(grad_label(f, (0.0, 0.0, 0.0), 0.0), 0.0)

    def test_curl_and_div_examples(self):
        v = VectorFieldLabel(value=lambda a, t: np.array([-a[1], a[0], 0.0]))
        assert np.allclose(curl_label(v, (0.2, 0.3, 0.4), 0.0), [0.0, 0.0, 2.0], atol=1e-10)
        assert abs(div_label(v, (0.2, 0.3, 0.4), 0.0)) < 1e-10
        r = VectorFieldLabel(value=lambda a, t: np.asarray(a, float))
        assert abs(div_label(r, (0.2, 0.3, 0.4), 0.0) - 3.0) < 1e-10
        assert np.allclose(curl_label(r, (0.2, 0.3, 0.4), 0.0), 0.0, atol=1e-10)

    def test_curl_of_gradient_exactly_zero_on_polynomials(self):
        # v = grad(a1 a2 a3): symbolic curl must be the zero polynomial
        a1, a2, a3 = (Poly.variable(4, i) for i in range(3))
        phi = a1 * a2 * a3
        grads = [phi.diff(j) for j in range(3)]
        curl = [
            grads[2].diff(1) - grads[1].diff(2),
            grads[0].diff(2) - grads[2].diff(0),
            grads[1].diff(0) - grads[0].diff(1),
        ]
        assert all(c.is_zero for c in curl)

    def test_div_of_curl_exactly_zero_on_polynomials(self):
        import random

        from vortlab.poly import random_poly

        rng = random.Random(31)
        for _ in range(10):
            v = [random_poly(rng, 4, degree=3, nterms=4) for _ in range(3)]
            curl = [
                v[2].diff(1) - v[1].diff(2),
                v[0].diff(2) - v[2].diff(0),
                v[1].diff(0) - v[0].diff(1),
            ]
            div = curl[0].diff(0) + curl[1].diff(1) + curl[2].diff(2)
            assert div.is_zero

    def test_fd_gradient_convergence_order(self):
        f4 = lambda h: ScalarFieldLabel(value=lambda a, t: math.sin(2 * a[0]) * math.cos(a[1]), h=h, order=4)
        f2 = lambda h: ScalarFieldLabel(value=lambda a, t: math.sin(2 * a[0]) * math.cos(a[1]), h=h, order=2)
        a = (0.3, -0.4, 0.2)
        exact = np.array([2 * math.cos(2 * a[0]) * math.cos(a[1]),
                          -math.sin(2 * a[0]) * math.sin(a[1]), 0.0])
        hs = [0.2, 0.1, 0.05]
        for make, order in ((f4, 4), (f2, 2)):
            errs = [np.max(np.abs(make(h).gradient(a, 0.0) - exact)) for h in hs]
            assert _fit_slope(hs, errs) >= order - 0.2


class TestAnalyticFallbacks:
    def test_fd_velocity_matches_analytic(self):
        fx = flows.make_fixture("rigid-rotation", omega0=1.0)
        bare = AnalyticTrajectoryField(
            position=lambda a, t: fx.field.position(a, t), box=fx.field.box, t0=0.0, t1=10.0
        )
        a, t = np.array([0.4, 0.2, 0.0]), 1.3
        assert np.allclose(bare.velocity(a, t), fx.field.velocity(a, t), atol=1e-9)
        assert np.allclose(bare.acceleration(a, t), fx.field.acceleration(a, t), atol=1e-7)
        assert np.allclose(
            bare.position_gradient(a, t), fx.field.position_gradient(a, t), atol=1e-10
        )


class TestSampledBackend:
    def test_reproduces_generating_field(self):
        fx = flows.make_fixture("gerstner")
        grid = LabelGrid.nodes_inclusive(fx.field.box, (17, 5, 17))
        times = np.linspace(fx.field.t0, fx.field.t1, 9)
        samp = SampledTrajectoryField.from_analytic(fx.field, grid, times)
        a = grid.nodes()[len(grid.nodes()) // 2]
        t = times[3]
        assert np.allclose(samp.position(a, t), fx.field.position(a, t), atol=1e-14)
        assert np.allclose(samp.velocity(a, t), fx.field.velocity(a, t), atol=1e-14)
        # spatial FD at h ~ 0.4: fourth-order truncation ~ h^4/30
        g_err = np.max(np.abs(samp.position_gradient(a, t) - fx.field.position_gradient(a, t)))
        assert g_err < 5e-4

    def test_time_fd_orders_when_derivatives_absent(self):
        fx = flows.make_fixture("rigid-rotation", omega0=1.0, t1=2.0)
        grid = LabelGrid.nodes_inclusive(fx.field.box, (5, 5, 5))
        errs = {}
        for nt in (21, 41):
            times = np.linspace(0.0, 2.0, nt)
            samp = SampledTrajectoryField.from_analytic(
                fx.field, grid, times, store_derivatives=False
            )
            a = grid.nodes()[31]
            t = times[nt // 2]
            errs[nt] = np.max(np.abs(samp.velocity(a, t) - fx.field.velocity(a, t)))
        # halving dt should shrink the 4th-order FD error ~16x
        assert errs[21] / errs[41] > 8.0

    def test_gradient_order_two_vs_four(self):
        # error measured at a point that is a grid node at every resolution,
        # so interpolation error cannot contaminate the stencil order
        fx = flows.make_fixture("gerstner")
        times = np.linspace(fx.field.t0, fx.field.t1, 5)
        errs = {2: [], 4: []}
        shapes = [(17, 5, 17), (33, 5, 33)]
        hs = []
        for shape in shapes:
            grid = LabelGrid.nodes_inclusive(fx.field.box, shape)
            hs.append(grid.spacings[0])
            k = (shape[0] - 1) // 4
            a = np.array([grid.axes[0][k], grid.axes[1][2], grid.axes[2][3 * k]])
            for order in (2, 4):
                samp = SampledTrajectoryField.from_analytic(fx.field, grid, times, order=order)
                g = samp.position_gradient(a, times[2])
                errs[order].append(
                    np.max(np.abs(g - fx.field.position_gradient(a, times[2])))
                )
        for order in (2, 4):
            slope = _fit_slope(hs, errs[order])
            assert slope >= order - 0.2, (order, slope, errs[order])

    def test_rejects_nonuniform_times(self):
        grid = LabelGrid.nodes_inclusive(BOX, (5, 5, 5))
        pos = np.zeros((3, 5, 5, 5, 3))
        with pytest.raises(ValueError):
            SampledTrajectoryField(grid, np.array([0.0, 0.1, 0.3]), pos)


class TestGridIO:
    def _small_field(self):
        fx = flows.make_fixture("translation", c=(0.5, 0.0, 0.0))
        grid = LabelGrid.nodes_inclusive(fx.field.box, (5, 4, 3))
        times = np.linspace(0.0, 1.0, 4)
        return SampledTrajectoryField.from_analytic(fx.field, grid, times)

    @pytest.mark.parametrize("suffix", [".npz", ".csv"])
    def test_roundtrip(self, tmp_path, suffix):
        field = self._small_field()
        path = str(tmp_path / f"grid{suffix}")
        save_grid(field, path)
        back = load_grid(path)
        assert back.grid.shape == field.grid.shape
        assert np.allclose(back.positions, field.positions)
        assert np.allclose(back.velocities, field.velocities)
        assert back.periodic == field.periodic
        assert back.order == field.order

    def test_rejects_foreign_npz(self, tmp_path):
        path = str(tmp_path / "junk.npz")
        np.savez(path, stuff=np.arange(3))
        with pytest.raises(GridFormatError):
            load_grid(path)

    def test_rejects_malformed_csv(self, tmp_path):
        path = tmp_path / "junk.csv"
        path.write_text("1.0,2.0,3.0\n")
        with pytest.raises(GridFormatError):
            load_grid(str(path))


class TestGrids:
    def test_cell_centers_cover_box(self):
        grid = LabelGrid.cell_centers(BOX, (4, 4, 4))
        nodes = grid.nodes()
        assert len(nodes) == 64
        assert abs(grid.cell_volume * 64 - BOX.volume) < 1e-12

    def test_rejects_decreasing_axes(self):
        with pytest.raises(ValueError):
            LabelGrid((np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([0.0, 1.0])),
                      (1.0, 1.0, 1.0))

    def test_rejects_nonpositive_spacing(self):
        with pytest.raises(ValueError):
            LabelGrid((np.array([0.0, 1.0]),) * 3, (1.0, 0.0, 1.0))

    def test_box_validation(self):
        with pytest.raises(ValueError):
            Box((0.0, 0.0, 0.0), (1.0, 0.0, 1.0))
