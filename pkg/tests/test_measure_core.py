import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx

from strategies import hat_measures
from utils.errors import DistributionError, GridMismatchError, ParameterRangeError
from utils.measure_core import (
    GridSpec,
    HatMeasure,
    bec_measure,
    bhattacharyya,
    check_conv,
    delta0,
    delta_inf,
    entropy,
    entropy_distance,
    entropy_series,
    error_prob,
    from_magnitudes,
    is_degraded,
    mixture,
    moment,
    poly_check,
    poly_var,
    series_tail_bound,
    var_conv,
)


def _chord_gap(weights, bins: int, samples: int = 2001) -> float:
    # Máximo de f − cuerda sobre los intervalos entre nodos (f cóncava)
    nodes = GridSpec(bins).nodes
    t = np.linspace(0.0, 1.0, samples)
    gap = 0.0
    for lo, hi in zip(nodes[:-1], nodes[1:]):
        m = lo + (hi - lo) * t
        chord = weights(lo) + (weights(hi) - weights(lo)) * t
        gap = max(gap, float(np.max(weights(m) - chord)))
    return gap


def _searchsorted_deposit(grid: GridSpec, targets, weights) -> np.ndarray:
    nodes = grid.nodes
    out = np.zeros(grid.size)
    for m, w in zip(targets, weights):
        k = min(int(np.searchsorted(nodes, m, side="right")) - 1, grid.size - 2)
        frac = (m - nodes[k]) / (nodes[k + 1] - nodes[k])
        out[k] += w * (1.0 - frac)
        out[k + 1] += w * frac
    return out


def _hinge_oracle(x1: HatMeasure, x2: HatMeasure, slack: float = 1e-12) -> bool:
    # Fuerza bruta: E[(M − t)⁺] con bucles explícitos, nodo por nodo
    nodes = x1.grid.nodes
    for t in nodes:
        e1 = sum(p * max(m - t, 0.0) for m, p in zip(nodes, x1.masses))
        e2 = sum(p * max(m - t, 0.0) for m, p in zip(nodes, x2.masses))
        if e1 > e2 + slack:
            return False
    return True


class TestHatMeasure:
    def test_rejects_negative_mass(self):
        grid = GridSpec(4)
        with pytest.raises(DistributionError):
            HatMeasure(grid, [0.5, -0.1, 0.3, 0.2, 0.1, 0.0])

    def test_rejects_total_mass(self):
        grid = GridSpec(4)
        with pytest.raises(DistributionError):
            HatMeasure(grid, [0.5, 0.1, 0.1, 0.1, 0.1, 0.0])

    def test_rejects_wrong_length(self):
        with pytest.raises(GridMismatchError):
            HatMeasure(GridSpec(4), [1.0, 0.0])

    def test_masses_are_read_only(self, grid):
        x = delta0(grid)
        with pytest.raises(ValueError):
            x.masses[0] = 0.0

    def test_bins_must_be_at_least_two(self):
        with pytest.raises(ParameterRangeError):
            GridSpec(1)

    def test_atoms(self, grid):
        x = bec_measure(grid, 0.3)
        assert x.atom0 == approx(0.3)
        assert x.atom1 == approx(0.7)
        assert x.is_atomic


class TestFunctionals:
    def test_extremes(self, grid):
        assert entropy(delta0(grid)) == 1.0
        assert entropy(delta_inf(grid)) == 0.0
        assert bhattacharyya(delta0(grid)) == 1.0
        assert error_prob(delta0(grid)) == 0.5
        assert error_prob(delta_inf(grid)) == 0.0

    def test_bec_entropy_is_erasure(self, grid):
        for eps in (0.0, 0.25, 0.5, 1.0):
            assert entropy(bec_measure(grid, eps)) == approx(eps, abs=1e-15)

    def test_moment_order(self, grid):
        with pytest.raises(ParameterRangeError):
            moment(0, delta0(grid))
        assert moment(3, delta_inf(grid)) == 1.0

    @settings(deadline=None, max_examples=40)
    @given(hat_measures())
    def test_series_within_tail_bound(self, x):
        for order in (5, 50):
            assert abs(entropy_series(x, order) - entropy(x)) <= series_tail_bound(order) + 1e-12

    def test_from_magnitudes_preserves_mean(self, grid):
        x = from_magnitudes(grid, [0.3, 0.91], [0.25, 0.75])
        assert error_prob(x) == approx(0.25 * 0.35 + 0.75 * 0.045, abs=1e-14)

    def test_node_targets_stay_whole(self, grid):
        for index in (0, 1, 17, grid.size - 1):
            x = from_magnitudes(grid, [grid.nodes[index]], [1.0])
            assert x.masses[index] == 1.0

    @settings(deadline=None, max_examples=60)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=20))
    def test_deposit_matches_node_search(self, magnitudes):
        grid = GridSpec(12)
        weights = np.full(len(magnitudes), 1.0 / len(magnitudes))
        x = from_magnitudes(grid, magnitudes, weights)
        expected = _searchsorted_deposit(grid, magnitudes, weights)
        np.testing.assert_allclose(x.masses, expected / expected.sum(), atol=1e-12)


class TestOperators:
    @settings(deadline=None, max_examples=40)
    @given(hat_measures())
    def test_identities_and_absorbers(self, x):
        grid = x.grid
        np.testing.assert_allclose(var_conv(x, delta0(grid)).masses, x.masses, atol=1e-15)
        np.testing.assert_allclose(check_conv(x, delta_inf(grid)).masses, x.masses, atol=1e-15)
        assert var_conv(x, delta_inf(grid)).atom1 == approx(1.0)
        assert check_conv(x, delta0(grid)).atom0 == approx(1.0)

    @settings(deadline=None, max_examples=40)
    @given(hat_measures(), hat_measures())
    def test_commutative(self, x, y):
        np.testing.assert_allclose(var_conv(x, y).masses, var_conv(y, x).masses, atol=1e-12)
        np.testing.assert_allclose(check_conv(x, y).masses, check_conv(y, x).masses, atol=1e-12)

    @settings(deadline=None, max_examples=40)
    @given(hat_measures(), hat_measures())
    def test_check_conv_multiplies_mean_magnitude(self, x, y):
        mean = lambda z: 1.0 - 2.0 * error_prob(z)
        assert mean(check_conv(x, y)) == approx(mean(x) * mean(y), abs=1e-12)

    @settings(deadline=None, max_examples=40)
    @given(hat_measures())
    def test_var_conv_squares_bhattacharyya(self, x):
        # el depósito sólo puede bajar 𝔅, a lo sumo en la brecha de cuerda
        gap = _chord_gap(lambda m: np.sqrt(np.clip(1.0 - m * m, 0.0, None)), x.grid.bins)
        value, target = bhattacharyya(var_conv(x, x)), bhattacharyya(x) ** 2
        assert target - gap - 1e-12 <= value <= target + 1e-12

    @settings(deadline=None, max_examples=40)
    @given(hat_measures(), st.integers(min_value=1, max_value=30))
    def test_power_sandwich(self, x, n):
        power = poly_var([0.0] * n + [1.0], x)
        assert 2.0 * error_prob(power) <= entropy(power) + 1e-12
        assert entropy(power) <= bhattacharyya(x) ** n + 1e-12

    def test_bec_is_closed(self, bec_grid):
        x, y = bec_measure(bec_grid, 0.3), bec_measure(bec_grid, 0.6)
        assert var_conv(x, y).atom0 == approx(0.18, abs=1e-15)
        assert check_conv(x, y).atom0 == approx(1 - 0.7 * 0.4, abs=1e-15)
        assert var_conv(x, y).is_atomic and check_conv(x, y).is_atomic

    def test_poly_powers_on_bec(self, bec_grid):
        x = bec_measure(bec_grid, 0.2)
        assert poly_check([0, 0, 0, 0, 0, 1], x).atom0 == approx(1 - 0.8 ** 5, abs=1e-14)
        assert poly_var([0, 0.5, 0.5], x).atom0 == approx(0.5 * 0.2 + 0.5 * 0.04, abs=1e-14)

    def test_poly_rejects_non_distribution(self, grid):
        with pytest.raises(DistributionError):
            poly_var([0.5, 0.2], delta0(grid))

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            var_conv(delta0(GridSpec(8)), delta0(GridSpec(16)))

    def test_mixture(self, grid):
        x = mixture([0.25, 0.75], [delta0(grid), delta_inf(grid)])
        assert x.atom0 == approx(0.25)
        with pytest.raises(GridMismatchError):
            mixture([1.0], [delta0(grid), delta_inf(grid)])
        with pytest.raises(DistributionError):
            mixture([0.5, 0.6], [delta0(grid), delta_inf(grid)])


class TestDistanceAndOrder:
    @settings(deadline=None, max_examples=30)
    @given(hat_measures(), hat_measures(), hat_measures())
    def test_metric(self, x, y, z):
        assert entropy_distance(x, x).value == 0.0
        assert entropy_distance(x, y).value == approx(entropy_distance(y, x).value)
        assert entropy_distance(x, z).value <= (
            entropy_distance(x, y).value + entropy_distance(y, z).value + 1e-12
        )

    def test_distance_order_and_tail(self, grid):
        d = entropy_distance(delta0(grid), delta_inf(grid), order=200)
        assert d.tail_bound == approx(series_tail_bound(200))
        with pytest.raises(ParameterRangeError):
            entropy_distance(delta0(grid), delta0(grid), order=0)

    def test_extremes_of_order(self, grid):
        x = bec_measure(grid, 0.4)
        assert is_degraded(delta0(grid), x)
        assert is_degraded(x, delta_inf(grid))
        assert is_degraded(x, x)
        assert not is_degraded(delta_inf(grid), x)
        assert is_degraded(bec_measure(grid, 0.5), bec_measure(grid, 0.3))

    @settings(deadline=None, max_examples=30)
    @given(hat_measures(bins=6), hat_measures(bins=6))
    def test_matches_brute_force_hinges(self, x1, x2):
        assert is_degraded(x1, x2) == _hinge_oracle(x1, x2)

    @settings(deadline=None, max_examples=30)
    @given(hat_measures(), hat_measures())
    def test_operators_improve_or_degrade(self, x, y):
        better = var_conv(x, y)
        worse = check_conv(x, y)
        assert is_degraded(x, better, 1e-9)
        assert is_degraded(worse, x, 1e-9)
        # funcionales cóncavos no crecientes respetan el orden
        assert entropy(x) >= entropy(better) - 1e-9
        assert bhattacharyya(worse) >= bhattacharyya(x) - 1e-9
        assert error_prob(worse) >= error_prob(x) - 1e-12

    @settings(deadline=None, max_examples=30)
    @given(hat_measures(), hat_measures(), hat_measures())
    def test_operators_preserve_order(self, x2, y, x3):
        x1 = check_conv(x2, y)
        assert is_degraded(x1, x2, 1e-9)
        assert is_degraded(var_conv(x1, x3), var_conv(x2, x3), 1e-9)
        assert is_degraded(check_conv(x1, x3), check_conv(x2, x3), 1e-9)

    @settings(deadline=None, max_examples=30)
    @given(hat_measures(), hat_measures(), st.floats(min_value=0.0, max_value=1.0))
    def test_entropy_follows_degradation(self, x2, y, t):
        for x1 in (check_conv(x2, y), mixture([t, 1.0 - t], [delta0(x2.grid), x2])):
            assert is_degraded(x1, x2, 1e-9)
            assert entropy(x1) >= entropy(x2) - 1e-9


@pytest.mark.slow
class TestDenseGrid:
    @pytest.fixture(scope="class")
    def pairs(self):
        grid = GridSpec(4096)
        rng = np.random.default_rng(2024)
        draw = lambda: HatMeasure(grid, rng.dirichlet(np.full(grid.size, 0.2)))
        return [(draw(), draw()) for _ in range(100)]

    def test_duality(self, pairs):
        for x, y in pairs:
            residual = entropy(var_conv(x, y)) + entropy(check_conv(x, y)) - entropy(x) - entropy(y)
            assert abs(residual) <= 1e-4

    def test_moments_multiply(self, pairs):
        for x, y in pairs:
            z = check_conv(x, y)
            for k in range(1, 11):
                assert moment(k, z) == approx(moment(k, x) * moment(k, y), abs=1e-6)
