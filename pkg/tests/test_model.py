from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopfarm.model import (
    AccuracyModelParams,
    CostVector,
    Farm,
    PayoffParams,
    Strategy,
    StrategyProfile,
    coalition_accuracy,
    payoff_cp,
    payoff_df,
    profile_payoffs,
    singleton_accuracy,
    total_coop_cost,
)

from conftest import make_farm, uniform_costs

# Frozen closed-form values for quality 0.9, 10 devices under
# (a_min=0.5, a_max=0.99, volume_scale=10); see test_pair_beats_singletons.
SINGLE_09_DC10 = 0.7787651664433939
PAIR_09_DC10 = 0.8813171400926538

ACC_PARAMS = AccuracyModelParams(a_min=0.5, a_max=0.99, volume_scale=10.0)
PAYOFF_PARAMS = PayoffParams(benefit_coefficient=10.0, accuracy_model=ACC_PARAMS)


class TestTotalCoopCost:
    def test_zero(self):
        assert total_coop_cost(CostVector(0, 0, 0, 0, 0, 0)) == 0.0

    def test_five_term_sum_excludes_local_compute(self):
        costs = CostVector(membership=1, penalty=2, upload_comm=3,
                           download_comm=4, storage=5, local_compute=99)
        assert total_coop_cost(costs) == 15.0

    def test_fractional_sum(self):
        costs = uniform_costs(0.1, 123.0)
        assert total_coop_cost(costs) == pytest.approx(0.5, abs=1e-12)

    @given(scale=st.floats(min_value=1e-3, max_value=1e3),
           base=st.floats(min_value=0.0, max_value=100.0))
    def test_linearity_under_scaling(self, scale, base):
        costs = CostVector(base, 2 * base, 0.5 * base, base, 3 * base, 0.0)
        scaled = CostVector(*(scale * getattr(costs, f) for f in
                              ("membership", "penalty", "upload_comm",
                               "download_comm", "storage", "local_compute")))
        assert total_coop_cost(scaled) == pytest.approx(
            scale * total_coop_cost(costs), rel=1e-12)


class TestCoalitionAccuracy:
    def test_singleton_identity_is_exact(self, accuracy_params):
        for quality, device_count in [(0.9, 10), (0.3, 7), (0.123, 1), (1.0, 50)]:
            farm = make_farm(0, quality, device_count, accuracy_params)
            assert coalition_accuracy([farm], accuracy_params) == farm.local_accuracy

    def test_zero_quality_pins_to_floor(self, accuracy_params):
        farms = [make_farm(i, 0.0, 1000, accuracy_params) for i in range(3)]
        assert coalition_accuracy(farms, accuracy_params) == accuracy_params.a_min
        assert farms[0].local_accuracy == accuracy_params.a_min

    def test_pair_beats_singletons(self, accuracy_params):
        # expected values computed from the closed form before implementation
        a = make_farm(0, 0.9, 10, accuracy_params)
        b = make_farm(1, 0.9, 10, accuracy_params)
        assert a.local_accuracy == pytest.approx(SINGLE_09_DC10, abs=1e-15)
        pair = coalition_accuracy([a, b], accuracy_params)
        assert pair == pytest.approx(PAIR_09_DC10, abs=1e-15)
        assert pair > a.local_accuracy
        assert pair > b.local_accuracy

    def test_empty_coalition_rejected(self, accuracy_params):
        with pytest.raises(ValueError, match="empty coalition"):
            coalition_accuracy([], accuracy_params)

    def test_order_invariance_is_bitwise(self, accuracy_params):
        farms = [make_farm(i, q, dc, accuracy_params)
                 for i, (q, dc) in enumerate([(0.9, 3), (0.2, 17), (0.55, 8), (0.7, 1)])]
        reference = coalition_accuracy(farms, accuracy_params)
        assert coalition_accuracy(reversed(farms), accuracy_params) == reference
        assert coalition_accuracy([farms[2], farms[0], farms[3], farms[1]],
                                  accuracy_params) == reference

    @given(qualities=st.lists(st.floats(min_value=0.0, max_value=1.0),
                              min_size=1, max_size=6),
           device_counts=st.lists(st.integers(min_value=1, max_value=500),
                                  min_size=6, max_size=6))
    def test_bounded_by_accuracy_range(self, qualities, device_counts):
        params = AccuracyModelParams(a_min=0.4, a_max=0.95, volume_scale=25.0)
        farms = [make_farm(i, q, device_counts[i], params)
                 for i, q in enumerate(qualities)]
        value = coalition_accuracy(farms, params)
        assert params.a_min <= value <= params.a_max

    @given(bump=st.floats(min_value=0.01, max_value=0.5))
    def test_monotone_in_member_quality(self, bump):
        base = [make_farm(0, 0.4, 5, ACC_PARAMS),
                make_farm(1, 0.5, 9, ACC_PARAMS)]
        improved = [base[0],
                    make_farm(1, min(1.0, 0.5 + bump), 9, ACC_PARAMS)]
        assert coalition_accuracy(improved, ACC_PARAMS) \
            >= coalition_accuracy(base, ACC_PARAMS)

    def test_zero_quality_giant_drags_coalition_down(self, accuracy_params):
        # the free-rider effect: a huge zero-quality farm dilutes Q enough to
        # outweigh its volume contribution
        high = [make_farm(0, 0.9, 10, accuracy_params),
                make_farm(1, 0.9, 10, accuracy_params)]
        dragged = high + [make_farm(2, 0.0, 200, accuracy_params)]
        assert coalition_accuracy(dragged, accuracy_params) \
            < coalition_accuracy(high, accuracy_params)


class TestPayoffs:
    def test_payoff_cp_examples(self, accuracy_params):
        params1 = PayoffParams(benefit_coefficient=1.0, accuracy_model=accuracy_params)
        assert payoff_cp(0.8, uniform_costs(0.1, 0.0), params1) \
            == pytest.approx(0.3, abs=1e-12)
        params10 = PayoffParams(benefit_coefficient=10.0, accuracy_model=accuracy_params)
        assert payoff_cp(0.0, CostVector(0, 0, 0, 0, 0, 0), params10) == 0.0
        assert payoff_cp(0.9, uniform_costs(1.0, 0.0), params10) \
            == pytest.approx(4.0, abs=1e-12)

    def test_penalty_flag_drops_penalty_from_coop_cost(self, accuracy_params):
        params = PayoffParams(benefit_coefficient=1.0, accuracy_model=accuracy_params)
        costs = CostVector(membership=1, penalty=7, upload_comm=1,
                           download_comm=1, storage=1, local_compute=0)
        with_penalty = payoff_cp(0.5, costs, params, penalty_in_coop_cost=True)
        without = payoff_cp(0.5, costs, params, penalty_in_coop_cost=False)
        assert without - with_penalty == pytest.approx(7.0, abs=1e-12)

    def test_payoff_df_examples(self, accuracy_params):
        p1 = PayoffParams(benefit_coefficient=1.0, accuracy_model=accuracy_params)
        assert payoff_df(0.6, uniform_costs(9.0, 0.2), p1) == pytest.approx(0.4, abs=1e-12)
        assert payoff_df(0.0, CostVector(0, 0, 0, 0, 0, 0), p1) == 0.0
        p5 = PayoffParams(benefit_coefficient=5.0, accuracy_model=accuracy_params)
        assert payoff_df(0.5, uniform_costs(0.0, 1.5), p5) == pytest.approx(1.0, abs=1e-12)

    @given(low=st.floats(min_value=0.0, max_value=0.98),
           gap=st.floats(min_value=1e-6, max_value=0.02))
    def test_payoff_cp_strictly_increasing_in_accuracy(self, low, gap):
        costs = uniform_costs(0.1, 0.1)
        assert payoff_cp(low + gap, costs, PAYOFF_PARAMS) \
            > payoff_cp(low, costs, PAYOFF_PARAMS)

    def test_payoff_monotone_in_costs(self, payoff_params):
        cheap = uniform_costs(0.1, 0.1)
        expensive = uniform_costs(0.2, 0.1)
        assert payoff_cp(0.7, expensive, payoff_params) < payoff_cp(0.7, cheap, payoff_params)
        pricier_local = uniform_costs(0.1, 0.5)
        assert payoff_df(0.7, pricier_local, payoff_params) \
            < payoff_df(0.7, cheap, payoff_params)


class TestProfilePayoffs:
    def test_all_df_two_farms(self, accuracy_params):
        params = PayoffParams(benefit_coefficient=1.0, accuracy_model=accuracy_params)
        farms = [Farm(id=0, device_count=1, quality=0.5, local_accuracy=0.6),
                 Farm(id=1, device_count=1, quality=0.5, local_accuracy=0.6)]
        costs = uniform_costs(3.0, 0.2)
        payoffs = profile_payoffs(farms, StrategyProfile.all_df(2), costs, params)
        assert payoffs == pytest.approx((0.4, 0.4), abs=1e-12)

    def test_singleton_cooperator_earns_local_accuracy(self, accuracy_params):
        params = PayoffParams(benefit_coefficient=1.0, accuracy_model=accuracy_params)
        farm = make_farm(0, 0.8, 12, accuracy_params)
        payoffs = profile_payoffs([farm], StrategyProfile.all_cp(1),
                                  CostVector(0, 0, 0, 0, 0, 0), params)
        assert payoffs == (farm.local_accuracy,)

    def test_mixed_profile_from_equilibrium_fixture(self, accuracy_params):
        # farms with zero quality sit exactly at the accuracy floor, so the
        # cooperator's singleton coalition earns a_min
        params = PayoffParams(benefit_coefficient=10.0, accuracy_model=accuracy_params)
        farms = [make_farm(0, 0.0, 10, accuracy_params),
                 make_farm(1, 0.0, 10, accuracy_params)]
        costs = uniform_costs(1.0, 1.0)
        profile = StrategyProfile.from_strategies([Strategy.CP, Strategy.DF])
        payoffs = profile_payoffs(farms, profile, costs, params)
        assert payoffs[0] == 10.0 * farms[0].local_accuracy - 5.0
        assert payoffs[1] == 10.0 * farms[1].local_accuracy - 1.0

    def test_length_mismatch_rejected(self, accuracy_params, payoff_params):
        farms = [make_farm(0, 0.5, 1, accuracy_params)]
        with pytest.raises(ValueError, match="lengths differ"):
            profile_payoffs(farms, StrategyProfile.all_df(2),
                            uniform_costs(0.1, 0.1), payoff_params)

    @given(coop_each=st.floats(min_value=0.0, max_value=50.0))
    def test_all_df_ignores_cooperative_costs(self, coop_each, accuracy_params,
                                              payoff_params):
        farms = [make_farm(i, 0.6, 4, accuracy_params) for i in range(3)]
        profile = StrategyProfile.all_df(3)
        reference = profile_payoffs(farms, profile, uniform_costs(0.0, 0.7),
                                    payoff_params)
        varied = profile_payoffs(farms, profile, uniform_costs(coop_each, 0.7),
                                 payoff_params)
        assert varied == reference


class TestInvariantValidation:
    def test_farm_rejects_bad_values(self):
        with pytest.raises(ValueError, match="quality"):
            Farm(id=0, device_count=1, quality=1.5, local_accuracy=0.5)
        with pytest.raises(ValueError, match="device_count"):
            Farm(id=0, device_count=0, quality=0.5, local_accuracy=0.5)
        with pytest.raises(ValueError, match="local_accuracy"):
            Farm(id=0, device_count=1, quality=0.5, local_accuracy=-0.1)

    def test_cost_vector_rejects_negative_and_nonfinite(self):
        with pytest.raises(ValueError, match="storage"):
            CostVector(0, 0, 0, 0, -1.0, 0)
        with pytest.raises(ValueError, match="membership"):
            CostVector(math.inf, 0, 0, 0, 0, 0)

    def test_accuracy_params_require_ordered_range(self):
        with pytest.raises(ValueError):
            AccuracyModelParams(a_min=0.9, a_max=0.5, volume_scale=1.0)
        with pytest.raises(ValueError):
            AccuracyModelParams(a_min=0.1, a_max=0.9, volume_scale=0.0)

    def test_profile_counts_must_match(self):
        with pytest.raises(ValueError, match="cooperator_count"):
            StrategyProfile(strategies=(Strategy.CP, Strategy.DF),
                            cooperator_count=2, defector_count=0)

    def test_singleton_accuracy_matches_manual_formula(self, accuracy_params):
        manual = 0.5 + 0.49 * 0.9 * (1.0 - math.exp(-10.0 / 10.0))
        assert singleton_accuracy(10, 0.9, accuracy_params) \
            == pytest.approx(manual, abs=1e-15)
