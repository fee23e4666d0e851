"""
Tests for correlators, torus oracles and free-field references.
"""

import math

import pytest

from sixvlab.correlation import (
    CorrelatorValue,
    Method,
    PointQuad,
    cylinder_two_point_direct,
    cylinder_two_point_spectral,
    gff_k_point,
    green_function,
    pairings,
    regularity_envelope,
    regularity_families,
    scale_separation,
    sigma_squared,
    torus_brute_force,
    torus_height_difference,
    torus_partition_function,
    torus_trace_expectation,
)
from sixvlab.spectral import spectral_measure
from sixvlab.transfer import ModelParams, build_and_codiagonalize, build_operators
from sixvlab.utils.errors import CapExceededError

SQRT3 = math.sqrt(3)


@pytest.fixture(scope="module")
def system_L4():
    return build_and_codiagonalize(4, ModelParams(SQRT3))


class TestPointQuad:
    """Test quad geometry."""

    def test_steps_and_gaps(self):
        quad = PointQuad.of((0, 0), (1, 2), (3, 2), (4, 0))
        assert quad.k == 2
        assert quad.steps == [(1, 2), (1, -2)]
        assert quad.gaps == [(2, 0)]
        assert quad.is_integer
        assert quad.is_horizontally_ordered

    def test_unordered(self):
        quad = PointQuad.of((0, 0), (2, 0), (1, 0), (3, 0))
        assert not quad.is_horizontally_ordered

    def test_odd_point_count(self):
        with pytest.raises(ValueError):
            PointQuad.of((0, 0), (1, 0), (2, 0))

    def test_non_integer_face_pairs(self):
        quad = PointQuad.of((0, 0), (0.5, 0))
        assert not quad.is_integer
        with pytest.raises(ValueError):
            quad.face_pairs()

    def test_swapped_and_permuted(self):
        quad = PointQuad.of((0, 0), (1, 0), (2, 0), (3, 0))
        assert quad.swapped(1).points == ((0, 0), (1, 0), (3, 0), (2, 0))
        assert quad.permuted((1, 0)).points == ((2, 0), (3, 0), (0, 0), (1, 0))

    def test_correlator_row(self):
        quad = PointQuad.of((0, 0), (1, 0))
        row = CorrelatorValue(0.5, Method.MC, quad, None, 1.0, 0.01).to_row()
        assert row == {
            "method": "mc",
            "L": None,
            "c": 1.0,
            "x0": 0,
            "y0": 0,
            "x1": 1,
            "y1": 0,
            "value": 0.5,
            "stderr": 0.01,
        }


class TestCylinderCorrelators:
    """Test two-point correlators on the cylinder."""

    def test_swap_negates(self, system_L4):
        quad = PointQuad.of((0, 0), (1, 1), (2, 1), (3, 3))
        value = cylinder_two_point_direct(system_L4, quad)
        assert cylinder_two_point_direct(system_L4, quad.swapped(0)) == pytest.approx(-value)
        assert cylinder_two_point_direct(system_L4, quad.permuted((1, 0))) == pytest.approx(value)

    def test_spectral_rejects_unordered(self, system_L4):
        measure = spectral_measure(system_L4)
        with pytest.raises(ValueError):
            cylinder_two_point_spectral(measure, PointQuad.of((0, 0), (2, 0), (1, 0), (3, 0)))
        with pytest.raises(ValueError):
            cylinder_two_point_spectral(measure, PointQuad.of((0, 0), (1, 0)))

    @pytest.mark.parametrize("c", [1.0, SQRT3, 2.0])
    def test_spectral_equals_direct(self, c):
        system = build_and_codiagonalize(8, ModelParams(c))
        measure = spectral_measure(system)
        for points in [
            ((0, 0), (2, 1), (2, 5), (5, 6)),
            ((0, 3), (0, 0), (1, 1), (1, 7)),
        ]:
            quad = PointQuad.of(*points)
            assert cylinder_two_point_spectral(measure, quad) == pytest.approx(
                cylinder_two_point_direct(system, quad), abs=1e-10
            )

    def test_additivity(self, system_L4):
        """Φ(u, u', ·) + Φ(u', u'', ·) = Φ(u, u'', ·) by both methods."""
        measure = spectral_measure(system_L4)
        u, u1, u2 = (0, 0), (1, 1), (2, 0)
        rest = ((3, 2), (4, 1))
        for evaluate in (
            lambda q: cylinder_two_point_spectral(measure, q),
            lambda q: cylinder_two_point_direct(system_L4, q),
        ):
            left = evaluate(PointQuad.of(u, u1, *rest)) + evaluate(PointQuad.of(u1, u2, *rest))
            assert left == pytest.approx(evaluate(PointQuad.of(u, u2, *rest)), abs=1e-10)

    def test_regularity_families(self, system_L4):
        rows = regularity_families(spectral_measure(system_L4), ks=[1, 2, 3], ells=(1, 2))
        assert len(rows) == 9
        assert [r["family"] for r in rows[:3]] == ["collinear"] * 3
        rect = [r for r in rows if r["family"] == "rectangle"]
        assert all(r["in_range"] for r in rect)
        assert rect[0]["ell"] == 1


class TestTorus:
    """Test the brute-force and trace torus oracles."""

    def test_partition_function_L2(self):
        """Z = Tr t^M for the L=2 torus: 4 for M=1, 8 + 2c⁴ for M=2."""
        c = 1.4
        params = ModelParams(c)
        assert torus_partition_function(1, 2, params) == pytest.approx(4.0)
        assert torus_partition_function(2, 2, params) == pytest.approx(8 + 2 * c**4)

    @pytest.mark.parametrize("M,L", [(2, 4), (3, 4), (2, 6)])
    def test_partition_function_is_trace(self, M, L):
        import numpy as np

        params = ModelParams(SQRT3)
        t = build_operators(L, params).t
        trace = float(np.trace(np.linalg.matrix_power(t, M)))
        assert torus_partition_function(M, L, params) == pytest.approx(trace, rel=1e-12)

    def test_trace_expectation_matches_enumeration(self):
        params = ModelParams(1.2)
        pairs = [((0, 0), (1, 1)), ((1, 2), (2, 3))]
        brute = torus_brute_force(3, 4, params, pairs)
        trace = torus_trace_expectation(3, 4, params, pairs)
        assert trace == pytest.approx(brute, abs=1e-10)

    def test_constant_observable(self):
        params = ModelParams(SQRT3)
        assert torus_brute_force(2, 4, params) == pytest.approx(1.0)
        assert torus_brute_force(4, 4, params, zero_winding=True) == pytest.approx(1.0)

    def test_caps(self):
        with pytest.raises(CapExceededError):
            torus_brute_force(4, 8, ModelParams(1.0))

    def test_height_difference_along_column(self):
        """Vertical steps read off the horizontal arrows."""
        import numpy as np

        kappas = np.array([[1, -1, 1, -1]], dtype=np.int8)
        alphas = np.array([[1, 1, 1, 1]], dtype=np.int8)
        assert torus_height_difference((0, 0), (0, 1), kappas, alphas) == -1
        assert torus_height_difference((0, 0), (0, 2), kappas, alphas) == 0


class TestGFF:
    """Test the free-field references."""

    def test_sigma_squared_spot_values(self):
        assert sigma_squared(2.0) == pytest.approx(2 / math.pi, rel=1e-14)
        assert sigma_squared(SQRT3) == pytest.approx(3 / math.pi, rel=1e-14)
        assert sigma_squared(ModelParams(math.sqrt(2))) == pytest.approx(4 / math.pi, rel=1e-14)

    def test_sigma_squared_range(self):
        with pytest.raises(ValueError):
            sigma_squared(2.5)
        with pytest.raises(ValueError):
            sigma_squared(0.0)

    def test_pairings(self):
        assert len(list(pairings(range(4)))) == 3
        assert len(list(pairings(range(6)))) == 15
        assert list(pairings(range(3))) == []
        assert list(pairings([])) == [[]]

    def test_green_function(self):
        assert green_function((0, 0), (1, 0)) == 0.0
        assert green_function((0, 0), (0, math.e)) == pytest.approx(-1 / (2 * math.pi))
        with pytest.raises(ValueError):
            green_function((1, 1), (1, 1))

    def test_two_point_closed_form(self):
        """Collinear unit pairs at distance 1 give σ² log(3/4)/(2π)."""
        quad = PointQuad.of((0, 0), (1, 0), (2, 0), (3, 0))
        s2 = sigma_squared(SQRT3)
        assert gff_k_point(quad, s2) == pytest.approx(s2 * math.log(3 / 4) / (2 * math.pi))
        assert gff_k_point(quad.swapped(0), s2) == pytest.approx(-gff_k_point(quad, s2))

    def test_odd_k_vanishes(self):
        assert gff_k_point(PointQuad.of((0, 0), (1, 0)), 1.0) == 0.0

    def test_shared_points_rejected(self):
        with pytest.raises(ValueError):
            gff_k_point(PointQuad.of((0, 0), (1, 0), (1, 0), (2, 0)), 1.0)

    def test_scale_separation(self):
        s, s_prime = scale_separation(((0, 0), (1, 0)), ((10, 0), (11, 0)))
        assert s == pytest.approx(math.log(9))
        assert s_prime == pytest.approx(math.log(9))

    def test_regularity_envelope(self):
        quad = PointQuad.of((0, 0), (1, 0), (10, 0), (11, 0))
        assert regularity_envelope(quad) == pytest.approx(10.0)
        with pytest.raises(ValueError):
            regularity_envelope(quad, k=3)


if __name__ == "__main__":
    pytest.main([__file__])
