import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schatten_fields.base import ConvergenceReport, Grid, ScalarField, dini_monitor, sup_norm
from schatten_fields.errors import IndexOutOfRange, NonMonotone


class TestGrid:
    def test_interval_metric_and_adjacency(self):
        g = Grid.interval(0.0, 2.0, 5)
        assert g.size == 5
        assert g.metric(0, 4) == pytest.approx(2.0)
        assert g.adjacency.shape == (4, 2)
        assert g.diameter == pytest.approx(2.0)

    def test_adjacency_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            Grid(np.zeros((2, 1)) + [[0.0], [1.0]], [[0, 2]])

    def test_isolated_point_rejected(self):
        with pytest.raises(ValueError, match="no neighbor"):
            Grid([[0.0], [1.0], [2.0]], [[0, 1]])

    def test_metric_must_vanish_only_on_diagonal(self):
        d = np.array([[0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            Grid([[0.0], [1.0]], [[0, 1]], distances=d)

    def test_circle_arc_length(self):
        g = Grid.circle(8)
        assert g.metric(0, 4) == pytest.approx(np.pi)
        assert g.metric(0, 7) == pytest.approx(np.pi / 4)

    def test_sphere_grid(self):
        g = Grid.sphere(20)
        assert np.allclose(np.linalg.norm(g.points, axis=1), 1.0)
        assert g.diameter <= np.pi + 1e-12

    def test_product_grid(self):
        g = Grid.product(Grid.interval(0, 1, 3), Grid.interval(0, 1, 4))
        assert g.size == 12
        assert g.metric(0, 11) == pytest.approx(np.sqrt(2.0))

    def test_compactify(self):
        g = Grid.interval(-1, 1, 5).compactify([0, 4], [0.5, 1.0, 1.5, 1.0, 0.5])
        assert g.compactified and g.infinity_index == 5
        assert g.finite_mask.sum() == 5
        a = ScalarField(g, [1, 2, 3, 2, 1, 0.0])
        assert a.vanishes_at_infinity()
        b = ScalarField(g, [1, 2, 3, 2, 1, 1e-3])
        assert not b.vanishes_at_infinity()

    def test_check_index(self):
        g = Grid.interval(0, 1, 3)
        with pytest.raises(IndexOutOfRange):
            g.check_index(3)


class TestSupNorm:
    def test_constant_one(self, grid16):
        assert sup_norm(ScalarField.constant(grid16, 1.0)) == 1.0

    def test_zero(self, grid16):
        assert sup_norm(ScalarField.constant(grid16, 0.0)) == 0.0

    def test_identity_function(self, grid3):
        a = ScalarField.from_function(grid3, lambda x: x[:, 0])
        assert sup_norm(a) == 1.0

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4),
        st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4),
        st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False),
    )
    def test_norm_axioms(self, a, b, lam):
        g = Grid.interval(0, 1, 4)
        fa, fb = ScalarField(g, a), ScalarField(g, b)
        assert sup_norm(fa + fb) <= sup_norm(fa) + sup_norm(fb) + 1e-12 * (1 + sup_norm(fa) + sup_norm(fb))
        assert sup_norm(fa * lam) == pytest.approx(abs(lam) * sup_norm(fa), rel=1e-12, abs=1e-12)


class TestDiniMonitor:
    def test_geometric_series(self, grid16):
        incs = (ScalarField.constant(grid16, 2.0 ** -i) for i in range(0, 200))
        rep = dini_monitor(incs, 1e-6, 1000)
        assert rep.converged
        # oracle: first i with 2^-i < 1e-6 is i = 20, the 21st term
        first = next(i for i in range(100) if 2.0 ** -i < 1e-6)
        assert rep.terms_used == first + 1 == 21
        np.testing.assert_allclose(rep.partial_sum, sum(2.0 ** -i for i in range(21)))
        assert rep.final_increment_sup <= rep.tolerance

    def test_zero_series(self, grid16):
        rep = dini_monitor((ScalarField.constant(grid16, 0.0) for _ in range(10)), 1e-6)
        assert rep.converged and rep.terms_used == 1

    def test_harmonic_exhausts(self, grid16):
        incs = (ScalarField.constant(grid16, 1.0 / i) for i in range(1, 10_000))
        rep = dini_monitor(incs, 1e-6, max_terms=1000)
        assert not rep.converged
        assert rep.terms_used == 1000
        assert rep.final_increment_sup == pytest.approx(1e-3)

    def test_negative_increment(self, grid16):
        with pytest.raises(NonMonotone):
            dini_monitor([ScalarField.constant(grid16, -1e-6)], 1e-3)

    def test_roundoff_negativity_tolerated(self, grid16):
        rep = dini_monitor([ScalarField.constant(grid16, -1e-13)], 1e-3)
        assert rep.converged

    def test_tail_multiplier(self, grid16):
        incs = [ScalarField.constant(grid16, 2.0 ** -i) for i in range(60)]
        plain = dini_monitor(iter(incs), 1e-6)
        scaled = dini_monitor(iter(incs), 1e-6, tail_multiplier=2.0)
        assert scaled.terms_used == plain.terms_used + 1

    def test_exhausted_supply_converges(self, grid16):
        rep = dini_monitor([ScalarField.constant(grid16, 0.5)] * 3, 1e-9)
        assert rep.converged and rep.terms_used == 3
        np.testing.assert_allclose(rep.partial_sum, 1.5)

    def test_random_geometric_series_against_direct_sum(self, rng):
        g = Grid.interval(0, 1, 9)
        ratios = rng.uniform(0.1, 0.9, g.size)
        scale = rng.uniform(0.5, 2.0, g.size)
        incs = (ScalarField(g, scale * ratios ** k) for k in range(10_000))
        rep = dini_monitor(incs, 1e-10)
        exact = scale / (1 - ratios)
        # remaining tail after the last increment r^K is r^(K+1)/(1-r)
        assert rep.converged
        assert np.max(np.abs(rep.partial_sum - exact)) < 1e-10 / (1 - ratios.max())

    def test_report_type(self, grid16):
        assert isinstance(dini_monitor([ScalarField.constant(grid16, 0.0)], 1.0), ConvergenceReport)
