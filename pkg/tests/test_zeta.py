import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schatten_fields.base import Grid, ScalarField
from schatten_fields.errors import BadAngle, InsufficientSamples, NotContraction, NotPositive, OutOfHalfPlane
from schatten_fields.opfield import OperatorField, pos_power
from schatten_fields.sampling import make_rng, random_contraction
from schatten_fields.schatten import trace_field
from schatten_fields.zeta import (
    EigenvalueFields,
    default_residue_nodes,
    eigenvalue_fields,
    jensen_cahen_tail,
    morera_check,
    residue_estimate,
    sample_sector,
    tail_sum,
    zeta,
    zeta_uniform_continuity_probe,
)


class TestEigenvalueFields:
    def test_diagonal(self):
        g = Grid.from_points([[0.2], [0.7]])
        T = OperatorField.from_function(g, lambda x: np.diag([1.0, x[0], 0.0]))
        lam = eigenvalue_fields(T).lambdas
        np.testing.assert_allclose(lam[0].values, [1, 1])
        np.testing.assert_allclose(lam[1].values, [0.2, 0.7])
        np.testing.assert_allclose(lam[2].values, [0, 0], atol=1e-15)

    def test_crossing_branches_sorted(self):
        g = Grid.interval(0, 1, 33)
        b1 = lambda t: 0.9 * np.exp(-((t - 0.3) / 0.2) ** 2)
        b2 = lambda t: 0.9 * np.exp(-((t - 0.7) / 0.2) ** 2)
        T = OperatorField.from_function(g, lambda x: np.diag([b1(x[0]), b2(x[0])]))
        lam = eigenvalue_fields(T)
        t = g.points[:, 0]
        np.testing.assert_allclose(lam.values[:, 0], np.maximum(b1(t), b2(t)), atol=1e-14)
        np.testing.assert_allclose(lam.values[:, 1], np.minimum(b1(t), b2(t)), atol=1e-14)
        assert np.all(np.isfinite(lam.continuity_moduli()))

    def test_constant(self, grid16):
        lam = eigenvalue_fields(OperatorField.constant(grid16, np.array([[0.5, 0.1], [0.1, 0.3]])))
        assert np.ptp(lam.values, axis=0).max() < 1e-15
        assert np.all(lam.continuity_moduli() < 1e-13)

    def test_not_positive(self, grid16):
        with pytest.raises(NotPositive):
            eigenvalue_fields(OperatorField.diagonal(grid16, [1.0, -0.5]))


class TestZeta:
    def test_projection(self, grid16):
        T = OperatorField.diagonal(grid16, [1.0, 1.0, 0.0])
        for z in (2.0, 3 + 4j):
            np.testing.assert_allclose(zeta(T, z).value.values, 2.0)

    def test_scalar_power(self, grid16):
        assert zeta(OperatorField.diagonal(grid16, [0.5]), 3.0).value.values[0] == pytest.approx(0.125)

    def test_geometric_spectrum(self, grid16):
        T = OperatorField.diagonal(grid16, 2.0 ** -np.arange(1, 21))
        val = zeta(T, 2.0).value.values
        assert np.max(np.abs(val - 1 / 3)) < 4.0 ** -20

    def test_half_plane(self, grid16):
        with pytest.raises(OutOfHalfPlane):
            zeta(OperatorField.diagonal(grid16, [0.5]), 1.0 + 2j)

    def test_contraction(self, grid16):
        with pytest.raises(NotContraction):
            zeta(OperatorField.diagonal(grid16, [1.1]), 2.0)

    def test_matches_functional_calculus(self, grid16, rng):
        T = random_contraction(grid16, 5, rng)
        for z in (1.5, 2 + 3j, 4 - 1j):
            gap = np.max(np.abs(zeta(T, z).value.values - trace_field(pos_power(T, z)).values))
            assert gap < 1e-9

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1.01, 6.0), st.floats(0.01, 3.0))
    def test_monotone_in_real_z(self, seed, z1, dz):
        T = random_contraction(Grid.interval(0, 1, 5), 4, make_rng(seed))
        v1, v2 = zeta(T, z1).value.values.real, zeta(T, z1 + dz).value.values.real
        assert np.all(v2 <= v1 + 1e-12)


class TestJensenCahen:
    def test_empty_tail(self, grid16):
        lam = EigenvalueFields.constant(grid16, [0.5, 0.25, 0.0])
        assert jensen_cahen_tail(lam, 1.0, np.pi / 4, 3) == 0.0

    def test_geometric_tail(self, grid16):
        lam = EigenvalueFields.constant(grid16, 2.0 ** -np.arange(1, 60))
        assert jensen_cahen_tail(lam, 1.0, np.pi / 4, 5) == pytest.approx(np.sqrt(2) / 16, rel=1e-12)

    def test_sector_sweep(self, grid16, rng):
        lam = eigenvalue_fields(random_contraction(grid16, 8, rng))
        for alpha in (0.3, np.pi / 4, 1.2):
            bound = jensen_cahen_tail(lam, 1.0, alpha, 3)
            for z in sample_sector(1.0, alpha, 20, rng):
                assert np.max(np.abs(tail_sum(lam, z, 3))) <= bound + 1e-9

    @pytest.mark.parametrize("alpha", [0.0, np.pi / 2, -0.1])
    def test_bad_angle(self, grid16, alpha):
        with pytest.raises(BadAngle):
            jensen_cahen_tail(EigenvalueFields.constant(grid16, [0.5]), 1.0, alpha, 1)


class TestContinuityProbe:
    def test_constant_field(self, grid16):
        probe = zeta_uniform_continuity_probe(OperatorField.diagonal(grid16, [0.5, 0.2]), [2.0, 3 + 1j], 4, 1e-3)
        assert probe.radius == pytest.approx(grid16.diameter) and probe.witness is None

    def test_diagonal_coordinate(self):
        g = Grid.interval(0.1, 0.9, 81)
        T = OperatorField.from_function(g, lambda x: np.diag([x[0]]))
        x_index, eps = 40, 0.05
        probe = zeta_uniform_continuity_probe(T, [2.0, 3.0], x_index, eps)
        # scalar oracle: deviation sup_z |y^z - x^z|
        t = g.points[:, 0]
        dev = np.maximum(np.abs(t ** 2 - t[x_index] ** 2), np.abs(t ** 3 - t[x_index] ** 3))
        d = np.abs(t - t[x_index])
        first_bad = d[dev >= eps].min()
        assert probe.radius == pytest.approx(d[d < first_bad].max())
        # derivative estimate: 2 x at x = 0.5 gives radius near eps / 1
        assert 0.03 < probe.radius < 0.06
        assert probe.witness is not None

    def test_large_eps(self, grid16, rng):
        T = random_contraction(grid16, 3, rng)
        probe = zeta_uniform_continuity_probe(T, [2.0], 0, 100.0)
        assert probe.radius == pytest.approx(grid16.diameter)


class TestResidue:
    def test_simple_pole(self):
        c = 2.5
        samples = [(z, np.array([c / (z - 1)])) for z in default_residue_nodes()]
        assert residue_estimate(samples).values[0] == pytest.approx(c, rel=1e-12)

    def test_pole_plus_constant(self):
        c, b = 2.5, -7.0
        samples = [(z, np.array([c / (z - 1) + b])) for z in default_residue_nodes()]
        assert residue_estimate(samples).values[0] == pytest.approx(c, rel=1e-12)

    def test_field_samples(self, grid16):
        c = np.linspace(1, 2, 16)
        samples = [(z, ScalarField(grid16, c / (z - 1) + np.cos(z))) for z in default_residue_nodes(h=0.2)]
        np.testing.assert_allclose(residue_estimate(samples).values.real, c, rtol=1e-3)

    def test_needs_three_samples(self):
        with pytest.raises(InsufficientSamples):
            residue_estimate([(1.5, np.array([1.0])), (1.25, np.array([1.0]))])


def test_morera(grid16, rng):
    rep = morera_check(random_contraction(grid16, 4, rng), 3 + 0.5j, 1.0)
    assert rep.holds and rep.max_abs < 1e-6


def test_morera_rejects_contour_outside_half_plane(grid16, rng):
    with pytest.raises(OutOfHalfPlane):
        morera_check(random_contraction(grid16, 2, rng), 1.5, 1.0)
