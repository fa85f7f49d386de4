import math

import numpy as np
import pytest
from pytest import approx

from utils.channels import (
    _SIGMA_BRACKET,
    ChannelFamily,
    ChannelKind,
    density_from_param,
    param_from_entropy,
)
from utils.errors import ParameterRangeError
from utils.measure_core import GridSpec, bhattacharyya, entropy, error_prob, is_degraded

FAMILY_BINS = {ChannelKind.BEC: 16, ChannelKind.BSC: 64, ChannelKind.BAWGN: 128}


@pytest.fixture(scope="module")
def bawgn():
    return ChannelFamily(ChannelKind.BAWGN, GridSpec(128))


class TestBec:
    def test_closed_form(self, bec):
        assert param_from_entropy(bec, 0.42).param == 0.42
        assert bec.density(0.42).atom0 == approx(0.42)

    def test_range(self, bec):
        with pytest.raises(ParameterRangeError):
            density_from_param(bec, -0.1)
        with pytest.raises(ParameterRangeError):
            param_from_entropy(bec, 1.2)


class TestBsc:
    def test_endpoints(self, bsc):
        assert bsc.density(0.0).atom1 == approx(1.0)
        assert bsc.density(1.0).atom0 == approx(1.0)

    def test_crossover_is_error_probability(self, bsc):
        for p in (0.01, 0.11, 0.3):
            assert error_prob(density_from_param(bsc, p)) == approx(p, abs=1e-14)

    @pytest.mark.parametrize("h", [0.1, 0.416, 0.469, 0.9])
    def test_inversion(self, bsc, h):
        solution = param_from_entropy(bsc, h)
        assert solution.residual < 1e-8
        assert entropy(bsc.density(h)) == approx(h, abs=1e-8)

    def test_family_is_ordered(self, bsc):
        assert is_degraded(bsc.density(0.6), bsc.density(0.3), 1e-9)
        assert not is_degraded(bsc.density(0.3), bsc.density(0.6), 1e-9)

    def test_range(self, bsc):
        with pytest.raises(ParameterRangeError):
            density_from_param(bsc, 0.6)


class TestBawgn:
    def test_limits(self, bawgn):
        assert density_from_param(bawgn, 0.0).atom1 == 1.0
        assert density_from_param(bawgn, math.inf).atom0 == 1.0
        with pytest.raises(ParameterRangeError):
            density_from_param(bawgn, -1.0)

    def test_entropy_grows_with_sigma(self, bawgn):
        values = [entropy(density_from_param(bawgn, s)) for s in (0.5, 0.8, 1.0, 1.5, 3.0)]
        assert values == sorted(values)

    @pytest.mark.parametrize("h", [0.2, 0.5, 0.8])
    def test_inversion(self, bawgn, h):
        assert entropy(bawgn.density(h)) == approx(h, abs=1e-8)

    def test_endpoints(self, bawgn):
        assert param_from_entropy(bawgn, 0.0).param == 0.0
        assert math.isinf(param_from_entropy(bawgn, 1.0).param)


@pytest.fixture(params=list(ChannelKind), ids=lambda kind: kind.value)
def family(request):
    return ChannelFamily(request.param, GridSpec(FAMILY_BINS[request.param]))


class TestFamilies:
    def test_entropy_round_trip(self, family):
        for h in np.linspace(0.0, 1.0, 50):
            solution = param_from_entropy(family, float(h))
            assert entropy(density_from_param(family, solution.param)) == approx(h, abs=1e-8)

    def test_ordered_pairs(self, family):
        rng = np.random.default_rng(11)
        for lo, hi in np.sort(rng.uniform(0.02, 0.98, size=(20, 2)), axis=1):
            worse, better = family.density(float(hi)), family.density(float(lo))
            assert is_degraded(worse, better, 1e-9)
            if hi - lo > 1e-3:
                assert not is_degraded(better, worse, 1e-9)

    def test_bhattacharyya_grows_with_entropy(self, family):
        values = [bhattacharyya(family.density(float(h))) for h in np.linspace(0.0, 1.0, 21)]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_bawgn_bracket_expands_past_initial_sigma(bawgn):
    # entropía objetivo por encima de la del σ más grande del intervalo inicial
    h = (entropy(density_from_param(bawgn, _SIGMA_BRACKET[1])) + 1.0) / 2.0
    solution = param_from_entropy(bawgn, h)
    assert solution.param > _SIGMA_BRACKET[1]
    assert solution.residual < 1e-8
