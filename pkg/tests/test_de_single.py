import pytest
from pytest import approx

from strategies import bec_scalar
from utils.channels import ChannelFamily, ChannelKind
from utils.de_single import (
    BasinVerdict,
    DeStatus,
    StopRule,
    ThresholdReport,
    bisect_predicate,
    bp_threshold,
    de_fixed_point,
    de_step,
    emergence_threshold,
    forward_fixed_point,
    in_basin,
    minimal_fixed_point,
    monotone_violations,
    stability_threshold,
)
from utils.errors import ParameterRangeError, PreconditionError
from utils.measure_core import (
    GridSpec,
    delta0,
    delta_inf,
    entropy,
    entropy_distance,
    error_prob,
    is_degraded,
)


class TestStep:
    @pytest.mark.parametrize("eps", [0.40, 0.42, 0.43])
    def test_bec_matches_scalar_recursion(self, ldpc36, bec, eps):
        c = bec.density(eps)
        trace = de_fixed_point(ldpc36, delta0(c.grid), c, StopRule(max_iter=200), keep_measures=True)
        scalar = bec_scalar(eps, ldpc36.lam, ldpc36.rho, steps=len(trace.measures) - 1)
        for x, expected in zip(trace.measures, scalar):
            assert x.atom0 == approx(expected, abs=1e-12)
            assert x.is_atomic

    def test_ldgm_step_from_perfect_is_channel_power(self, ldgm_t8, bsc):
        c = bsc.density(0.37)
        first = de_step(ldgm_t8, delta_inf(c.grid), c)
        assert entropy(first) < entropy(c)

    def test_stop_rule_validation(self):
        with pytest.raises(ParameterRangeError):
            StopRule(tol_dh=0.0)
        with pytest.raises(ParameterRangeError):
            StopRule(max_iter=0)


class TestFixedPoint:
    def test_below_bp_threshold_decodes(self, ldpc36):
        family = ChannelFamily(ChannelKind.BSC, GridSpec(128))
        trace = forward_fixed_point(ldpc36, family.density(0.40))
        assert trace.converged
        assert trace.iterates[-1].entropy < 1e-6

    def test_above_bp_threshold_gets_stuck(self, ldpc36):
        family = ChannelFamily(ChannelKind.BSC, GridSpec(128))
        trace = forward_fixed_point(ldpc36, family.density(0.44))
        assert trace.iterates[-1].entropy > 1e-2

    def test_forward_trajectory_is_monotone(self, ldpc36, bsc):
        trace = forward_fixed_point(ldpc36, bsc.density(0.44), keep_measures=True)
        assert monotone_violations(trace) == []
        for older, newer in zip(trace.measures[:10], trace.measures[1:11]):
            assert is_degraded(older, newer, 1e-9)

    def test_max_iter_status(self, ldpc36, bec):
        trace = de_fixed_point(ldpc36, delta0(bec.grid), bec.density(0.45), StopRule(max_iter=3))
        assert trace.status is DeStatus.MAX_ITER
        assert trace.iterations == 3
        assert len(trace.iterates) == 4

    def test_in_basin(self, ldpc36, bec):
        grid = bec.grid
        assert in_basin(ldpc36, delta0(grid), bec.density(0.40)) is BasinVerdict.YES
        assert in_basin(ldpc36, delta0(grid), bec.density(0.45)) is BasinVerdict.NO
        short = StopRule(max_iter=2)
        assert in_basin(ldpc36, delta0(grid), bec.density(0.45), stop=short) is BasinVerdict.UNKNOWN

    @pytest.mark.parametrize("lo, hi", [(0.30, 0.40), (0.40, 0.44), (0.44, 0.50)])
    def test_worse_channel_gives_worse_iterates(self, ldpc36, bsc, lo, hi):
        # mismo número de iteraciones para ambos canales
        stop = StopRule(tol_dh=1e-300, max_iter=40)
        better = de_fixed_point(ldpc36, delta0(bsc.grid), bsc.density(lo), stop).terminal
        worse = de_fixed_point(ldpc36, delta0(bsc.grid), bsc.density(hi), stop).terminal
        assert is_degraded(worse, better, 1e-9)

    def test_worse_channel_ldgm_from_perfect(self, ldgm_t8, bsc):
        stop = StopRule(tol_dh=1e-300, max_iter=40)
        better = de_fixed_point(ldgm_t8, delta_inf(bsc.grid), bsc.density(0.37), stop).terminal
        worse = de_fixed_point(ldgm_t8, delta_inf(bsc.grid), bsc.density(0.45), stop).terminal
        assert is_degraded(worse, better, 1e-9)

    def test_terminal_residual(self, ldpc36, bsc):
        stop = StopRule()
        c = bsc.density(0.44)
        x = forward_fixed_point(ldpc36, c, stop).terminal
        assert entropy_distance(de_step(ldpc36, x, c), x).value < 10 * stop.tol_dh


class TestMinimalFixedPoint:
    def test_error_floor_is_positive(self, ldgm_t8, bsc):
        f0 = minimal_fixed_point(ldgm_t8, bsc.density(0.37))
        assert error_prob(f0) > 0.0
        assert is_degraded(f0, delta_inf(bsc.grid))

    def test_residual(self, ldgm_t8, bsc):
        stop = StopRule()
        c = bsc.density(0.37)
        f0 = minimal_fixed_point(ldgm_t8, c, stop)
        assert entropy_distance(de_step(ldgm_t8, f0, c), f0).value < 10 * stop.tol_dh

    def test_only_for_ldgm(self, ldpc36, bsc):
        with pytest.raises(PreconditionError):
            minimal_fixed_point(ldpc36, bsc.density(0.3))


class TestBisection:
    def test_finds_step(self):
        bracket = bisect_predicate(lambda h: h < 0.3, tol=1e-4)
        assert bracket.lo <= 0.3 <= bracket.hi
        assert bracket.hi - bracket.lo <= 1e-4
        assert bracket.flags == []

    def test_flags(self):
        assert bisect_predicate(lambda h: True).flags == ["no-transition"]
        assert bisect_predicate(lambda h: h < 0.3 or h > 0.8, scan=10).flags == ["non-monotone"]
        reentrant = bisect_predicate(lambda h: h < 0.3 or h > 0.8, scan=10, first_transition=True)
        assert reentrant.flags == ["reentrant"]
        assert "unknown-verdict" in bisect_predicate(lambda h: None if h > 0.5 else True).flags

    def test_reentrant_is_informative(self):
        report = ThresholdReport("emergence", "bisection", 0.45, 0.46, 1e-2, 5, flags=("reentrant",))
        assert not report.flagged
        assert ThresholdReport("bp", "bisection", 0.4, 0.5, 0.1, 3, flags=("non-monotone",)).flagged

    def test_rejects_tolerance(self):
        with pytest.raises(ParameterRangeError):
            bisect_predicate(lambda h: True, tol=0.0)


class TestThresholds:
    def test_bp_threshold_bec(self, ldpc36, bec):
        report = bp_threshold(ldpc36, bec, tol_h=2e-4, stop=StopRule(tol_dh=1e-10, max_iter=20000))
        assert report.h_mid == approx(0.4294, abs=5e-4)
        assert report.h_hi - report.h_lo <= 2e-4
        assert report.as_dict()["kind"] == "bp"

    def test_stability_without_degree_two(self, ldpc36, bsc):
        report = stability_threshold(ldpc36, bsc)
        assert report.h_lo == report.h_hi == 1.0
        assert report.flags == ()

    def test_stability_with_degree_two(self, ldpc_irregular, bec):
        # 𝔅(BEC(ε)) = ε y λ′(0)ρ′(1) = 2
        report = stability_threshold(ldpc_irregular, bec, tol_h=1e-4)
        assert report.h_mid == approx(0.5, abs=1e-4)

    def test_kind_preconditions(self, ldpc36, ldgm_t8, bsc):
        with pytest.raises(PreconditionError):
            bp_threshold(ldgm_t8, bsc)
        with pytest.raises(PreconditionError):
            emergence_threshold(ldpc36, bsc)
        with pytest.raises(PreconditionError):
            stability_threshold(ldgm_t8, bsc)

    @pytest.mark.slow
    def test_bp_threshold_bsc(self, ldpc36):
        family = ChannelFamily(ChannelKind.BSC, GridSpec(1024))
        report = bp_threshold(ldpc36, family, tol_h=1e-3)
        assert report.h_mid == approx(0.416, abs=3e-3)

    @pytest.mark.slow
    def test_emergence_threshold_ldgm(self, ldgm_t8):
        family = ChannelFamily(ChannelKind.BSC, GridSpec(512))
        report = emergence_threshold(ldgm_t8, family, tol_h=1e-3, scan=16)
        assert report.h_mid == approx(0.4529, abs=5e-3)
