"""
Tests for the heat-bath sampler, spin representation, level-line trees and
alternating-crossing counts.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from sixvlab.correlation import Method, PointQuad, torus_brute_force
from sixvlab.montecarlo import (
    AlternatingMode,
    Annulus,
    HeightField,
    MCConfig,
    Rectangle,
    SpinConfig,
    arm_frequency,
    batch_means,
    build_level_line_tree,
    compare_histograms,
    conditional_covariance,
    count_alternating,
    enumerate_odd_resamplings,
    estimate_correlator,
    even_domain,
    exact_height_distribution,
    flip_domination_test,
    heat_bath_probability,
    heat_bath_sampler,
    histogram_check,
    merge_batch_means,
    odd_components,
    resample_odd_spins,
    resampled_pair,
    sample_observable,
    sample_spin_config,
    spins_from_heights,
    square_circuit,
    torus,
)
from sixvlab.montecarlo.percolation import _greedy_alternation
from sixvlab.transfer import ModelParams
from sixvlab.utils.errors import CapExceededError
from sixvlab.utils.limits import Limits


def philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def banded_spin(geometry, sign_of) -> SpinConfig:
    """σ_even from ``sign_of(x, y)`` with ω = A(σ_even)."""
    sigma_even = np.array(
        [sign_of(x, y) if (x + y) % 2 == 0 else 0 for x, y in geometry.faces.tolist()],
        dtype=np.int8,
    )
    spin = SpinConfig(
        geometry,
        sigma_even,
        np.zeros(geometry.n_faces, dtype=np.int8),
        np.zeros(geometry.n_edges, dtype=bool),
    )
    spin.omega = spin.agreement()
    return spin


class TestGeometry:
    """Test even domains and tori."""

    @pytest.mark.parametrize("width,height,free", [(4, 4, 5), (6, 4, 9), (6, 6, 17)])
    def test_free_face_counts(self, width, height, free):
        geo = even_domain(width, height)
        assert len(geo.free_faces) == free
        assert len(geo.circuit) == geo.n_faces - free

    def test_boundary_circuit_is_even(self):
        geo = even_domain(8, 6)
        pts = geo.faces[list(geo.circuit)]
        assert np.all(pts.sum(axis=1) % 2 == 0)
        assert geo.boundary_edges.sum() == len(geo.circuit)

    def test_invalid_sizes(self):
        with pytest.raises(ValueError):
            even_domain(5, 4)
        with pytest.raises(ValueError):
            even_domain(2, 4)
        with pytest.raises(ValueError):
            torus(3, 4)

    def test_torus_wraps(self):
        geo = torus(4, 4)
        assert geo.n_faces == 16
        assert not geo.fixed.any()
        assert geo.locate((5, -1)) == geo.locate((1, 3))
        assert math.isinf(geo.boundary_distance((0, 0)))

    def test_locate_outside(self):
        geo = even_domain(4, 4)
        with pytest.raises(ValueError):
            geo.locate((7, 7))
        assert geo.boundary_distance((2, 2)) == 1.0

    def test_sublattices_partition_free_faces(self):
        geo = even_domain(8, 8)
        classes = geo.sublattices()
        assert len(classes) == 4
        assert sorted(np.concatenate(classes).tolist()) == geo.free_faces.tolist()


class TestSampler:
    """Test the heat bath and the exact enumeration."""

    def test_probability_is_exact(self):
        assert heat_bath_probability(2, 1, Fraction(3, 2)) == Fraction(3, 5)
        assert heat_bath_probability(1, 1, 2) == Fraction(1, 2)
        assert heat_bath_probability(0, 2, 2) == Fraction(1, 5)

    def test_detailed_balance(self):
        """p / (1 - p) equals the weight ratio c^{n₊ - n₋}."""
        c = Fraction(7, 4)
        for n_plus in range(5):
            for n_minus in range(5 - n_plus):
                p = heat_bath_probability(n_plus, n_minus, c)
                assert p / (1 - p) == c ** (n_plus - n_minus)

    def test_flat_field_is_valid(self):
        hf = HeightField.flat(even_domain(6, 6))
        hf.validate()
        assert hf[(2, 2)] == 0
        assert hf.difference((2, 2), (2, 3)) == 1

    @pytest.mark.parametrize("geo", [even_domain(8, 6), torus(6, 4)])
    def test_sweeps_keep_a_height_function(self, geo):
        hf = heat_bath_sampler(geo, ModelParams(1.5), sweeps=30, seed=7)
        hf.validate()
        assert hf.sweeps == 30

    def test_seed_reproducibility(self):
        geo = even_domain(8, 8)
        a = heat_bath_sampler(geo, ModelParams(1.2), sweeps=20, seed=3)
        b = heat_bath_sampler(geo, ModelParams(1.2), sweeps=20, seed=3)
        assert np.array_equal(a.heights, b.heights)

    def test_exact_distribution_small_domain(self):
        """4x4: 16 odd assignments, two of which leave the centre two choices."""
        exact = exact_height_distribution(even_domain(4, 4), ModelParams(1.3))
        assert len(exact.configurations) == 18
        assert exact.probabilities.sum() == pytest.approx(1.0)
        centre = exact.marginal((2, 2))
        assert set(centre) == {-2, 0, 2}
        assert centre[2] == pytest.approx(centre[-2])
        assert exact.expectation([((1, 2), (2, 2))]) == pytest.approx(0.0, abs=1e-12)

    def test_exact_enumeration_cap(self):
        with pytest.raises(CapExceededError):
            exact_height_distribution(even_domain(6, 6), ModelParams(1.0))
        with pytest.raises(ValueError):
            exact_height_distribution(torus(4, 4), ModelParams(1.0))

    def test_histogram_matches_enumeration(self):
        """One row per face and signed height."""
        config = MCConfig(sweeps=4000, burn_in=100, chains=2, seed=11, n_batches=20)
        rows = histogram_check(even_domain(4, 4), ModelParams(1.6), config, n_sigma=5.0)
        assert len(rows) == 11
        assert {r["height"] for r in rows} == {-2, -1, 0, 1, 2}
        assert all(r["ok"] for r in rows)

    def test_histogram_separates_signs(self):
        """Heights folded onto h >= 0 fail every negative cell."""
        geo = even_domain(4, 4)
        exact = exact_height_distribution(geo, ModelParams(1.6))
        draws = philox(3).choice(len(exact.probabilities), size=(2, 2000), p=exact.probabilities)
        heights = exact.configurations[draws]

        rows = compare_histograms(geo, exact, heights, n_batches=20, n_sigma=5.0)
        assert all(r["ok"] for r in rows)

        folded = compare_histograms(geo, exact, np.abs(heights), n_batches=20, n_sigma=5.0)
        negative = [r for r in folded if r["height"] < 0]
        assert len(negative) == 5
        assert not any(r["ok"] for r in negative)
        assert all(r["estimate"] == 0.0 for r in negative)


class TestEstimators:
    """Test batch means and the chain driver."""

    def test_batch_means_of_a_ramp(self):
        summary = batch_means(np.arange(100.0), n_batches=10)
        assert summary.mean == pytest.approx(49.5)
        assert summary.batch_means[0] == pytest.approx(4.5)
        assert summary.n_samples == 100

    def test_constant_series(self):
        summary = batch_means(np.full(40, 2.0), n_batches=4)
        assert summary.stderr == 0.0
        assert summary.tau == 0.5

    def test_short_series(self):
        summary = batch_means(np.array([1.0, 2.0]), n_batches=20)
        assert summary.mean == 1.5
        assert math.isnan(summary.stderr)

    def test_merge_pools_batches(self):
        x = np.arange(40.0)
        parts = [batch_means(x[:20], 4), batch_means(x[20:], 4)]
        merged = merge_batch_means(parts, batch_size=5, variance=float(x.var(ddof=1)))
        assert merged.mean == pytest.approx(batch_means(x, 8).mean)
        assert merged.n_samples == 40

    def test_config_validation(self):
        with pytest.raises(ValueError):
            MCConfig(sweeps=0)
        with pytest.raises(ValueError):
            MCConfig(burn_in=-1)
        assert MCConfig(sweeps=100, thin=3).samples_per_chain == 33

    def test_independent_of_worker_count(self):
        """Chains draw from spawned streams, so threads do not change results."""
        geo = even_domain(6, 6)
        observable = lambda hf: float(hf[(3, 3)])  # noqa: E731
        runs = [
            sample_observable(
                geo,
                ModelParams(1.4),
                observable,
                MCConfig(sweeps=50, burn_in=10, chains=3, seed=5, workers=w, n_batches=5),
            )
            for w in (1, 3)
        ]
        for a, b in zip(runs[0].chains, runs[1].chains, strict=True):
            assert np.array_equal(a.series, b.series)
            assert a.spawn_key == b.spawn_key

    def test_sample_rows_and_nan_error(self):
        est = sample_observable(
            even_domain(6, 6),
            ModelParams(1.0),
            lambda hf: 1.0,
            MCConfig(sweeps=6, burn_in=4, thin=2, chains=1, n_batches=5),
            name="one",
        )
        assert math.isnan(est.stderr)
        assert est.mean == 1.0
        assert [r["sweep"] for r in est.sample_rows()] == [6, 8, 10]
        assert est.to_dict()["burn_in"] == [4]

    def test_estimate_correlator_checks_points(self):
        geo = even_domain(8, 8)
        config = MCConfig(sweeps=20, burn_in=5, chains=1, n_batches=2)
        with pytest.raises(ValueError):
            estimate_correlator(geo, ModelParams(1.0), PointQuad.of((0.5, 3), (3, 3)), config)
        with pytest.raises(ValueError):
            estimate_correlator(geo, ModelParams(1.0), PointQuad.of((0, 2), (3, 3)), config)

    def test_estimate_correlator_on_torus(self):
        """On a torus the squared unit step is exactly one."""
        quad = PointQuad.of((0, 0), (1, 0), (0, 0), (1, 0))
        value = estimate_correlator(
            torus(4, 4),
            ModelParams(1.2),
            quad,
            MCConfig(sweeps=40, burn_in=10, chains=2, n_batches=4),
        )
        assert value.method is Method.MC
        assert value.L == 4
        assert value.value == 1.0

    @pytest.mark.parametrize(
        "quad",
        [
            PointQuad.of((0, 0), (1, 0), (2, 0), (3, 0)),
            PointQuad.of((0, 0), (0, 1), (0, 2), (0, 3)),
        ],
    )
    def test_torus_ring_matches_enumeration(self, quad):
        """Around the L = 4 ring the sampler stays in the zero-winding sector."""
        params = ModelParams(math.sqrt(3))
        exact = torus_brute_force(4, 4, params, quad.face_pairs(), zero_winding=True)
        value = estimate_correlator(
            torus(4, 4),
            params,
            quad,
            MCConfig(sweeps=8000, burn_in=500, chains=4, seed=17, n_batches=20),
        )
        assert value.stderr > 0
        assert abs(value.value - exact) <= 4 * value.stderr + 1e-3


class TestSpins:
    """Test the spin representation."""

    def test_spins_from_heights(self):
        heights = np.array([0, 1, 2, -1, 4, -3])
        is_even = np.array([True, False, True, False, True, False])
        sigma_even, sigma_odd = spins_from_heights(heights, is_even)
        assert sigma_even.tolist() == [1, 0, -1, 0, 1, 0]
        assert sigma_odd.tolist() == [0, 1, 0, -1, 0, 1]

    def test_flat_field_at_c_one(self):
        """At c = 1 every agreement edge is open and odd faces are isolated."""
        hf = HeightField.flat(even_domain(4, 4))
        spin = sample_spin_config(hf, ModelParams(1.0), philox(0))
        assert spin.omega.all()
        spin.check_constraints()
        assert spin.reproduces(hf)
        groups = odd_components(spin)
        assert sorted(len(g) for g in groups.values()) == [1, 1, 1, 1]

    def test_weight_below_one_rejected(self):
        hf = HeightField.flat(even_domain(4, 4))
        with pytest.raises(ValueError):
            sample_spin_config(hf, ModelParams(0.8), philox(0))

    def test_resampled_spins_give_a_height_function(self):
        geo = even_domain(8, 8)
        params = ModelParams(1.5)
        hf = heat_bath_sampler(geo, params, sweeps=40, seed=2)
        rng = philox(9)
        spin = sample_spin_config(hf, params, rng)
        spin.check_constraints()
        assert spin.reproduces(hf)
        fresh = resample_odd_spins(spin, rng)
        fresh.check_constraints()
        HeightField(geo, fresh.heights()).validate()

    def test_odd_resampling_matches_enumeration(self):
        """Fair coins per component reproduce the enumerated height law."""
        geo = even_domain(6, 6)
        params = ModelParams(1.3)
        hf = heat_bath_sampler(geo, params, sweeps=60, seed=8)
        spin = sample_spin_config(hf, params, philox(2))
        i = geo.locate((3, 3))
        support, counts = np.unique(
            [h[i] for h in enumerate_odd_resamplings(spin)], return_counts=True
        )
        p = counts / counts.sum()

        rng = philox(6)
        n = 2000
        drawn = np.array([resample_odd_spins(spin, rng).heights()[i] for _ in range(n)])
        assert set(drawn.tolist()) <= set(support.tolist())
        observed = np.array([np.sum(drawn == v) for v in support])
        if len(support) > 1:
            assert stats.chisquare(observed, n * p).pvalue > 1e-3
        else:
            assert observed[0] == n


class TestTree:
    """Test level-line trees."""

    def test_flat_tree(self):
        """The flat field at c = 1 gives a root with one odd leaf per odd face."""
        spin = sample_spin_config(HeightField.flat(even_domain(4, 4)), ModelParams(1.0), philox(0))
        tree = build_level_line_tree(spin)
        assert len(tree.odd_vertices) == 4
        assert len(tree.even_vertices) == 1
        assert all(v.parent == 0 and v.depth == 1 for v in tree.odd_vertices)
        assert conditional_covariance(tree, (1, 2), (1, 2)) == 1
        assert conditional_covariance(tree, (1, 2), (2, 1)) == 0
        exact = resampled_pair(spin, (1, 2), (2, 1))
        assert exact.n_assignments == 16
        assert exact.covariance == 0.0
        assert resampled_pair(spin, (1, 2), (1, 2)).covariance == 1.0
        assert exact.max_u == tree.psi_star((1, 2)) == 1

    def test_tree_reproduces_sample(self):
        geo = even_domain(6, 6)
        params = ModelParams(1.5)
        hf = heat_bath_sampler(geo, params, sweeps=60, seed=4)
        spin = sample_spin_config(hf, params, philox(1))
        tree = build_level_line_tree(spin)
        tree.validate(hf.heights)
        coins = tree.coins_from_heights(hf.heights)
        assert set(coins.values()) <= {1, -1}
        assert np.array_equal(tree.face_heights(coins), hf.heights)

    @pytest.mark.parametrize("seed", [8, 21])
    def test_covariance_and_depth_match_odd_enumeration(self, seed):
        """Every face pair against the σ_odd enumeration, which never builds a tree."""
        geo = even_domain(6, 6)
        params = ModelParams(1.3)
        hf = heat_bath_sampler(geo, params, sweeps=60, seed=seed)
        spin = sample_spin_config(hf, params, philox(seed))
        tree = build_level_line_tree(spin)

        H = np.array(list(enumerate_odd_resamplings(spin)))
        assert len(H) == 2 ** len(odd_components(spin))
        second = H.T @ H / len(H)
        highest = H.max(axis=0)
        faces = [tuple(f) for f in geo.faces.tolist()]
        for i in geo.free_faces.tolist():
            assert tree.psi_star(faces[i]) == highest[i]
            for j in geo.free_faces.tolist():
                assert conditional_covariance(tree, faces[i], faces[j]) == second[i, j]

    def test_resampled_pair_agrees_with_enumeration(self):
        geo = even_domain(6, 6)
        params = ModelParams(1.3)
        hf = heat_bath_sampler(geo, params, sweeps=60, seed=8)
        spin = sample_spin_config(hf, params, philox(2))
        H = np.array(list(enumerate_odd_resamplings(spin)))
        i, j = geo.locate((3, 3)), geo.locate((2, 3))
        pair = resampled_pair(spin, (3, 3), (2, 3))
        assert pair.n_assignments == len(H)
        assert pair.covariance == pytest.approx(float(H[:, i] @ H[:, j]) / len(H))
        assert (pair.max_u, pair.max_v) == (H[:, i].max(), H[:, j].max())

    def test_tree_and_coin_resampling_agree(self):
        """Heights from tree coins and from σ_odd coins share one law."""
        geo = even_domain(6, 6)
        params = ModelParams(1.3)
        hf = heat_bath_sampler(geo, params, sweeps=60, seed=8)
        spin = sample_spin_config(hf, params, philox(2))
        tree = build_level_line_tree(spin)
        faces = [tuple(f) for f in geo.faces.tolist()]
        i = max(geo.free_faces.tolist(), key=lambda k: tree.psi_star(faces[k]))

        rng = philox(5)
        n = 2000
        from_tree = np.array([tree.resample(rng)[i] for _ in range(n)])
        from_spins = np.array([resample_odd_spins(spin, rng).heights()[i] for _ in range(n)])
        values = np.union1d(from_tree, from_spins)
        table = np.array([[np.sum(s == v) for v in values] for s in (from_tree, from_spins)])
        if len(values) > 1:
            assert stats.chi2_contingency(table).pvalue > 1e-3
        else:
            assert table[0, 0] == table[1, 0] == n

    def test_enumeration_cap(self, monkeypatch):
        spin = sample_spin_config(HeightField.flat(even_domain(4, 4)), ModelParams(1.0), philox(0))
        monkeypatch.setattr(Limits, "MAX_COIN_ENUMERATION", 3)
        with pytest.raises(CapExceededError):
            next(enumerate_odd_resamplings(spin))

    def test_torus_rejected(self):
        hf = HeightField.flat(torus(4, 4))
        spin = sample_spin_config(hf, ModelParams(1.0), philox(0))
        with pytest.raises(ValueError):
            build_level_line_tree(spin)


class TestAlternating:
    """Test crossing and arm counts."""

    def test_greedy_alternation(self):
        assert _greedy_alternation([1, 1, -1, 1, -1]) == 4
        assert _greedy_alternation([-1, 1, -1]) == 2
        assert _greedy_alternation([1]) == 0

    def test_flat_configuration_has_no_alternation(self):
        """Everything is one ω^+ cluster, so no alternating event holds."""
        spin = sample_spin_config(HeightField.flat(even_domain(16, 16)), ModelParams(1.0), philox(0))
        rect = Rectangle(4, 4, 12, 12)
        ann = Annulus((8, 8), 1, 6)
        assert count_alternating(spin, rect, "hori") == 0
        assert count_alternating(spin, rect, AlternatingMode.VERTI) == 0
        assert count_alternating(spin, ann, "circuit") == 0
        assert count_alternating(spin, ann, "arm") == 0

    def test_horizontal_bands_cross_left_to_right(self):
        """Bands of height two alternate + and - from the top of the box."""
        spin = banded_spin(even_domain(16, 16), lambda x, y: 1 if (y // 2) % 2 else -1)
        rect = Rectangle(4, 4, 12, 12)
        assert count_alternating(spin, rect, "hori") == 4
        assert count_alternating(spin, rect, "verti") == 0

    def test_vertical_bands_cross_top_to_bottom(self):
        spin = banded_spin(even_domain(16, 16), lambda x, y: 1 if (x // 2) % 2 == 0 else -1)
        rect = Rectangle(4, 4, 12, 12)
        assert count_alternating(spin, rect, "verti") == 4
        assert count_alternating(spin, rect, "hori") == 0

    def test_nested_square_rings(self):
        """Rings + at d in {5, 6}, {9, 10} and - at {3, 4}, {7, 8} around a + core."""

        def ring_sign(x, y):
            d = max(abs(x - 14), abs(y - 14))
            if d <= 2:
                return 1
            if d >= 11:
                return -1
            return 1 if ((d - 3) // 2) % 2 else -1

        spin = banded_spin(even_domain(28, 28), ring_sign)
        assert count_alternating(spin, Annulus((14, 14), 1, 12), "circuit") == 4
        assert count_alternating(spin, Annulus((14, 14), 1, 12), "arm") == 0

    def test_quadrant_arms(self):
        """Opposite quadrants share a sign, giving four alternating arms."""
        spin = banded_spin(even_domain(28, 28), lambda x, y: 1 if (x >= 14) == (y >= 14) else -1)
        ann = Annulus((14, 14), 1, 12)
        assert count_alternating(spin, ann, "arm") == 4
        assert count_alternating(spin, ann, "circuit") == 0

    def test_region_checks(self):
        spin = sample_spin_config(HeightField.flat(even_domain(8, 8)), ModelParams(1.0), philox(0))
        with pytest.raises(ValueError):
            count_alternating(spin, Annulus((4, 4), 1, 4), "hori")
        with pytest.raises(ValueError):
            count_alternating(spin, Rectangle(0, 0, 20, 20), "verti")
        with pytest.raises(ValueError):
            Rectangle(0, 0, 2, 8)

    def test_arm_frequency(self):
        assert arm_frequency([0, 2, 4, 1]) == 0.5
        assert math.isnan(arm_frequency([]))

    def test_square_circuit(self):
        ring = square_circuit((3, 3), 1)
        assert len(ring) == 8
        assert len(set(ring)) == 8
        with pytest.raises(ValueError):
            square_circuit((0, 0), 0)


class TestFlipDomination:
    """Test the one-sided comparison of h - m and m - h."""

    def test_flat_samples(self):
        geo = even_domain(6, 6)
        samples = [HeightField.flat(geo) for _ in range(40)]
        report = flip_domination_test(samples, square_circuit((3, 3), 1), (3, 3), n_permutations=19)
        assert not report.inconclusive
        assert report.violation == 0.0
        assert report.strict_margin == 1.0
        assert report.p_value == 1.0

    def test_shifted_level_dominates_strictly(self):
        """With m raised by 2 the centre never exceeds m, two steps inside γ."""
        geo = even_domain(10, 10)
        params = ModelParams(2.0)
        rng = philox(12)
        hf = heat_bath_sampler(geo, params, sweeps=100, rng=rng)
        samples = []
        for _ in range(100):
            hf = heat_bath_sampler(geo, params, sweeps=3, rng=rng, start=hf)
            samples.append(hf)
        report = flip_domination_test(samples, square_circuit((5, 5), 2), (5, 5), m_shift=2, n_permutations=99)
        assert report.m_shift == 2
        assert report.violation == 0.0
        assert report.p_value == 1.0
        assert report.strict_margin > 0.0

    def test_conditioned_on_outer_face(self):
        """At c = 2, conditioned on h <= 0 at a face outside γ."""
        geo = even_domain(10, 10)
        params = ModelParams(2.0)
        rng = philox(13)
        hf = heat_bath_sampler(geo, params, sweeps=100, rng=rng)
        samples = []
        for _ in range(300):
            hf = heat_bath_sampler(geo, params, sweeps=5, rng=rng, start=hf)
            samples.append(hf)
        report = flip_domination_test(
            samples,
            square_circuit((5, 5), 2),
            (5, 5),
            event=lambda f: f[(2, 2)] <= 0,
            n_permutations=199,
            rng=philox(1),
        )
        assert not report.inconclusive
        assert 0 < report.n_used < report.n_samples
        assert report.violation < 0.3

    def test_rare_event_is_inconclusive(self):
        geo = even_domain(6, 6)
        samples = [HeightField.flat(geo) for _ in range(40)]
        report = flip_domination_test(samples, square_circuit((3, 3), 1), (3, 3), event=lambda hf: False)
        assert report.inconclusive
        assert report.n_used == 0

    def test_face_on_circuit(self):
        geo = even_domain(6, 6)
        with pytest.raises(ValueError):
            flip_domination_test([HeightField.flat(geo)], square_circuit((3, 3), 1), (2, 2))


if __name__ == "__main__":
    pytest.main([__file__])
