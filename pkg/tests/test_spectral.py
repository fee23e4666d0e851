"""
Tests for spectral measures.
"""

import math

import numpy as np
import pytest

from sixvlab.correlation import PointQuad, cylinder_two_point_direct, cylinder_two_point_spectral
from sixvlab.spectral import (
    F_bound_check,
    F_discrete,
    aggregate_atoms,
    class_m_report,
    observable_measure,
    rescale,
    rescale_and_concentrate,
    spectral_measure,
    symmetrize,
)
from sixvlab.transfer import ModelParams, Side, SlabObservable, build_and_codiagonalize

SQRT3 = math.sqrt(3)


@pytest.fixture(scope="module")
def system_L6():
    return build_and_codiagonalize(6, ModelParams(SQRT3))


class TestAtoms:
    """Test atom bookkeeping."""

    def test_aggregate_merges_close_atoms(self):
        a = np.array([0.5, 0.5 + 1e-12, 1.0])
        b = np.array([0.1, 0.1, 0.1])
        w = np.array([1.0, 2.0, 4.0])
        a2, b2, w2 = aggregate_atoms(a, b, w)
        assert len(a2) == 2
        assert w2.tolist() == [3.0, 4.0]

    def test_symmetrize_splits_mass(self):
        """Mass at b moves half to -b; atoms at b = π stay put."""
        a2, b2, w2 = symmetrize(np.array([1.0, 1.5]), np.array([0.5, math.pi]), np.array([2.0, 1.0]))
        assert sorted(zip(b2.tolist(), w2.tolist(), strict=True)) == [(-0.5, 1.0), (0.5, 1.0), (math.pi, 1.0)]


class TestSpectralMeasure:
    """Test μ_L of the cylinder two-point function."""

    def test_L2_single_atom(self):
        """For L=2 the measure is one atom of weight 1/4 at (2c²/(2+c²), π)."""
        c = SQRT3
        measure = spectral_measure(build_and_codiagonalize(2, ModelParams(c)))
        assert len(measure) == 1
        (atom,) = measure.atoms
        assert atom.a == pytest.approx(2 * c * c / (2 + c * c))
        assert atom.b == pytest.approx(math.pi)
        assert atom.weight == pytest.approx(0.25)

    def test_support_and_positivity(self, system_L6):
        measure = spectral_measure(system_L6)
        assert np.all(measure.weight > 0)
        assert np.all((measure.a > 0) & (measure.a < 2))
        assert np.all((measure.b > -math.pi - 1e-12) & (measure.b <= math.pi + 1e-12))

    def test_b_symmetry(self, system_L6):
        """μ_L is invariant under b -> -b."""
        measure = spectral_measure(system_L6)
        for atom in measure.atoms:
            if abs(atom.b - math.pi) < 1e-9:
                continue
            mirror = np.flatnonzero((np.abs(measure.a - atom.a) < 1e-9) & (np.abs(measure.b + atom.b) < 1e-9))
            assert len(mirror) == 1
            assert measure.weight[mirror[0]] == pytest.approx(atom.weight)

    def test_b_lattice(self, system_L6):
        """b lies on the lattice 2πm/L."""
        measure = spectral_measure(system_L6)
        m = measure.b * 6 / (2 * math.pi)
        assert np.allclose(m, np.round(m))

    def test_spectral_matches_direct(self, system_L6):
        """The spectral integral reproduces operator chains."""
        measure = spectral_measure(system_L6)
        for points in [
            ((0, 0), (1, 0), (2, 0), (3, 0)),
            ((0, 0), (1, 1), (3, 1), (4, 0)),
            ((0, 0), (0, 2), (1, 2), (2, 3)),
        ]:
            quad = PointQuad.of(*points)
            spectral = cylinder_two_point_spectral(measure, quad)
            direct = cylinder_two_point_direct(system_L6, quad)
            assert spectral == pytest.approx(direct, abs=1e-10)

    def test_min_weight_drops_atoms(self, system_L6):
        """A threshold above every atom leaves an empty measure."""
        full = spectral_measure(system_L6)
        cut = spectral_measure(system_L6, min_weight=4 * full.total_mass)
        assert len(cut) == 0
        assert cut.total_mass == 0.0
        quad = PointQuad.of((0, 0), (1, 0), (2, 0), (3, 0))
        assert cylinder_two_point_spectral(cut, quad) == 0.0

    def test_to_rows(self):
        measure = spectral_measure(build_and_codiagonalize(2, ModelParams(1.0)))
        (row,) = measure.to_rows()
        assert set(row) == {"L", "c", "a", "b", "weight"}


class TestScaling:
    """Test rescaling and the diagnostic reports."""

    def test_rescale_moves_atoms(self, system_L6):
        measure = spectral_measure(system_L6)
        scaled = rescale(measure, 0.5)
        assert np.allclose(scaled.a, 2 * measure.a)
        assert np.allclose(scaled.b, 2 * measure.b)
        assert scaled.total_mass == pytest.approx(measure.total_mass)
        with pytest.raises(ValueError):
            rescale(measure, 0.0)

    def test_empty_window_is_flagged(self):
        measure = spectral_measure(build_and_codiagonalize(2, ModelParams(SQRT3)))
        report = rescale_and_concentrate(measure, delta=0.01, eps=0.2)
        assert report.empty
        assert report.window_mass == 0.0
        assert math.isnan(report.cone_fraction)

    def test_concentration_report(self, system_L6):
        report = rescale_and_concentrate(spectral_measure(system_L6), delta=4 / 6, eps=0.2)
        assert not report.empty
        assert 0.0 <= report.cone_fraction <= 1.0
        assert len(report.density) == 8
        assert len(report.bin_edges) == 9
        assert report.to_dict()["L"] == 6

    def test_class_m_report(self):
        measure = spectral_measure(build_and_codiagonalize(2, ModelParams(SQRT3)))
        report = class_m_report(measure)
        assert report.sup_family1 == pytest.approx(0.25)
        assert report.family2
        assert set(report.to_dict()) == {"c_probe", "sup_family1", "sup_family2", "family1", "family2"}

    def test_F_bound(self, system_L6):
        """|F(x, y)| <= F(Re x, 0) for a positive measure."""
        measure = spectral_measure(system_L6)
        worst = F_bound_check(measure, np.array([0.1, 0.5 + 1j, 2.0]), np.linspace(-3, 3, 13))
        assert worst <= 1e-12

    def test_F_requires_positive_real_part(self, system_L6):
        with pytest.raises(ValueError):
            F_discrete(spectral_measure(system_L6), 0.0, 1.0)


class TestObservableMeasure:
    """Test μ_{X,Y} of slab observables."""

    def test_constant_observables(self, system_L6):
        """Constants give a unit atom at a = 0."""
        X = SlabObservable.constant(Side.LEFT)
        Y = SlabObservable.constant(Side.RIGHT)
        measure = observable_measure(X, Y, system_L6)
        assert measure.moment(0) == pytest.approx(1.0)
        assert measure.moment(7) == pytest.approx(1.0)
        assert measure.total_variation == pytest.approx(1.0)

    def test_moments_match_chains(self, system_L6):
        """Moments equal translated direct expectations (checked internally)."""
        X = SlabObservable(pairs=(((-1, 0), (0, 2)),), side=Side.LEFT, width=1)
        Y = SlabObservable(pairs=(((0, 1), (1, 0)), ((1, 3), (0, 3))), side=Side.RIGHT, width=1)
        measure = observable_measure(X, Y, system_L6, check_moments=(0, 1, 2, 3))
        assert set(measure.moments_checked) == {0, 1, 2, 3}
        assert measure.cauchy_schwarz_slack >= -1e-9

    def test_reflection_positivity(self, system_L6):
        """μ_{X, X reflected} has nonnegative real weights."""
        X = SlabObservable(pairs=(((-1, 0), (0, 1)), ((-2, 2), (-1, 4))), side=Side.LEFT, width=2)
        measure = observable_measure(X, X.reflected(), system_L6)
        assert np.all(np.abs(measure.weight.imag) < 1e-10)
        assert np.all(measure.weight.real > -1e-10)

    def test_sides_are_checked(self, system_L6):
        X = SlabObservable.constant(Side.LEFT)
        with pytest.raises(ValueError):
            observable_measure(X, X, system_L6)


if __name__ == "__main__":
    pytest.main([__file__])
