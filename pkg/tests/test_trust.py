"""Trust signal combination, propagation, decay, and level mapping."""

import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from skillaudit.analyzer import analyze
from skillaudit.skillmodel import FieldKind, parse_claude
from skillaudit.trust import (
    DEFAULT_WEIGHTS,
    CycleError,
    TrustLevel,
    TrustSignals,
    TrustWeights,
    WeightSumError,
    decay,
    effective,
    half_life,
    intrinsic,
    level,
    signals_from_report,
    transitive_dependencies,
    update_signals,
)

from conftest import ENV_HELPER_MD

unit_st = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
signals_st = st.builds(TrustSignals, unit_st, unit_st, unit_st, unit_st)


def simplex_weights(rng: random.Random) -> TrustWeights:
    cuts = sorted(rng.random() for _ in range(3))
    parts = [cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1], 1.0 - cuts[2]]
    return TrustWeights(*parts)


class TestIntrinsic:
    def test_all_ones_and_all_zeros(self):
        assert intrinsic(TrustSignals(1, 1, 1, 1), DEFAULT_WEIGHTS) == pytest.approx(1.0)
        assert intrinsic(TrustSignals(0, 0, 0, 0), DEFAULT_WEIGHTS) == pytest.approx(0.0)

    def test_weighted_combination(self):
        # 0.3*0.5 + 0.3*1.0 + 0.2*0.25 + 0.2*0.75 = 0.15 + 0.30 + 0.05 + 0.15
        score = intrinsic(TrustSignals(0.5, 1.0, 0.25, 0.75), DEFAULT_WEIGHTS)
        assert score == pytest.approx(0.65)

    def test_weight_invariants_enforced(self):
        with pytest.raises(WeightSumError):
            TrustWeights(0.5, 0.5, 0.5, 0.5)
        with pytest.raises(WeightSumError):
            TrustWeights(-0.1, 0.5, 0.3, 0.3)

    def test_signal_range_enforced(self):
        with pytest.raises(ValueError):
            TrustSignals(1.2, 0, 0, 0)

    @given(signals_st)
    def test_bounded(self, signals):
        assert 0.0 <= intrinsic(signals, DEFAULT_WEIGHTS) <= 1.0


class TestSignalsFromReport:
    def test_clean_report_full_behavioral(self, make_skill):
        report = analyze(make_skill())
        assert signals_from_report(report) == TrustSignals(0.0, 1.0, 0.0, 0.0)

    def test_capability_violation_zeroes_behavioral(self):
        report = analyze(parse_claude(ENV_HELPER_MD.encode()))
        assert signals_from_report(report).behavioral == 0.0

    def test_warning_only_report_midpoint(self, make_skill):
        from skillaudit.capability import AccessLevel, CapabilitySet

        skill = make_skill(
            [(FieldKind.SHELL_COMMAND, "node poll.js http://plain.example/x")],
            declared=CapabilitySet.of(shell=AccessLevel.WRITE, network=AccessLevel.READ),
        )
        report = analyze(skill)
        assert report.status.value == "warning"
        assert signals_from_report(report).behavioral == 0.5

    def test_external_record_fills_other_signals(self, make_skill):
        report = analyze(make_skill())
        sig = signals_from_report(
            report, {"provenance": 0.8, "community": 0.6, "historical": 0.4}
        )
        assert sig == TrustSignals(0.8, 1.0, 0.6, 0.4)


class TestEffective:
    def test_leaf_equals_intrinsic(self):
        assert effective({}, {"leaf": 0.7}, "leaf") == pytest.approx(0.7)

    def test_weakest_link(self):
        deps = {"s": ["a", "b"]}
        scores = {"s": 0.9, "a": 0.8, "b": 0.6}
        assert effective(deps, scores, "s") == pytest.approx(0.54)

    def test_diamond_counted_once(self):
        deps = {"a": ["b", "c"], "b": ["d"], "c": ["d"]}
        scores = {"a": 1.0, "b": 1.0, "c": 1.0, "d": 0.5}
        assert effective(deps, scores, "a") == pytest.approx(0.5)

    def test_order_independent(self):
        rng = random.Random(11)
        deps = {"a": ["b", "c"], "b": ["d"], "c": ["d"], "d": []}
        scores = {"a": 0.9, "b": 0.8, "c": 0.7, "d": 0.6}
        reference = effective(deps, scores, "a")
        for _ in range(20):
            shuffled = {}
            for k, targets in deps.items():
                order = list(targets)
                rng.shuffle(order)
                shuffled[k] = order
            assert effective(shuffled, scores, "a") == reference

    def test_cycle_raises(self):
        deps = {"a": ["b"], "b": ["a"]}
        with pytest.raises(CycleError):
            effective(deps, {"a": 0.5, "b": 0.5}, "a")

    def test_transitive_set_deduplicated(self):
        deps = {"a": ["b", "c"], "b": ["d"], "c": ["d"]}
        assert transitive_dependencies(deps, "a") == {"b", "c", "d"}

    def test_propagation_bounds(self):
        rng = random.Random(3)
        for _ in range(100):
            node_count = rng.randint(1, 6)
            names = [f"n{i}" for i in range(node_count)]
            deps = {
                names[i]: [names[j] for j in range(i + 1, node_count) if rng.random() < 0.5]
                for i in range(node_count)
            }
            scores = {n: rng.random() for n in names}
            eff = effective(deps, scores, names[0])
            closure = transitive_dependencies(deps, names[0]) | {names[0]}
            t_min = min(scores[n] for n in closure)
            assert eff <= scores[names[0]] + 1e-12
            assert eff >= t_min * t_min - 1e-12


class TestDecay:
    def test_zero_elapsed_identity(self):
        assert decay(0.8, 0.01, 0) == pytest.approx(0.8)

    def test_half_life(self):
        for rate in (0.01, 0.005):
            assert decay(1.0, rate, half_life(rate)) == pytest.approx(0.5, abs=1e-9)

    def test_ninety_day_example(self):
        # 0.85 * exp(-0.005 * 90) = 0.85 * exp(-0.45)
        assert decay(0.85, 0.005, 90) == pytest.approx(0.85 * math.exp(-0.45))
        assert decay(0.85, 0.005, 90) == pytest.approx(0.541984, abs=1e-6)

    def test_semigroup_law(self):
        rng = random.Random(17)
        for _ in range(50):
            t0, rate = rng.random(), rng.uniform(0.001, 0.05)
            a, b = rng.uniform(0, 200), rng.uniform(0, 200)
            whole = decay(t0, rate, a + b)
            split = decay(decay(t0, rate, a), rate, b)
            assert abs(whole - split) < 1e-12

    def test_monotone_decreasing(self):
        values = [decay(1.0, 0.01, d) for d in range(0, 400, 10)]
        assert values == sorted(values, reverse=True)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            decay(0.5, 0.0, 10)
        with pytest.raises(ValueError):
            decay(0.5, 0.01, -1)


class TestLevels:
    @pytest.mark.parametrize(
        "score,expected",
        [
            (0.0, TrustLevel.L0_UNSIGNED),
            (0.24, TrustLevel.L0_UNSIGNED),
            (0.25, TrustLevel.L1_SIGNED),
            (0.49, TrustLevel.L1_SIGNED),
            (0.50, TrustLevel.L2_COMMUNITY_VERIFIED),
            (0.54, TrustLevel.L2_COMMUNITY_VERIFIED),
            (0.74, TrustLevel.L2_COMMUNITY_VERIFIED),
            (0.75, TrustLevel.L3_FORMALLY_VERIFIED),
            (1.0, TrustLevel.L3_FORMALLY_VERIFIED),
        ],
    )
    def test_thresholds(self, score, expected):
        assert level(score) is expected

    def test_codes(self):
        assert level(0.54).code == "L2"
        assert level(0.54).label == "community_verified"


class TestUpdates:
    def test_clamp_at_one(self):
        sig = update_signals(TrustSignals(0.9, 0.5, 0.5, 0.5), (0.3, 0, 0, 0))
        assert sig.provenance == 1.0

    def test_zero_delta_identity(self):
        sig = TrustSignals(0.3, 0.4, 0.5, 0.6)
        assert update_signals(sig, (0, 0, 0, 0)) == sig

    def test_uniform_delta_raises_score(self):
        before = TrustSignals(0.4, 0.4, 0.4, 0.4)
        after = update_signals(before, (0.1, 0.1, 0.1, 0.1))
        assert intrinsic(before, DEFAULT_WEIGHTS) == pytest.approx(0.4)
        assert intrinsic(after, DEFAULT_WEIGHTS) == pytest.approx(0.5)

    def test_monotone_under_nonnegative_updates(self):
        rng = random.Random(99)
        for _ in range(1000):
            signals = TrustSignals(*(rng.random() for _ in range(4)))
            delta = tuple(rng.uniform(0, 0.5) for _ in range(4))
            weights = simplex_weights(rng)
            before = intrinsic(signals, weights)
            after = intrinsic(update_signals(signals, delta), weights)
            assert after >= before - 1e-12
            assert 0.0 <= after <= 1.0

    @given(signals_st, st.tuples(unit_st, unit_st, unit_st, unit_st))
    def test_monotone_property(self, signals, delta):
        before = intrinsic(signals, DEFAULT_WEIGHTS)
        after = intrinsic(update_signals(signals, delta), DEFAULT_WEIGHTS)
        assert after >= before - 1e-12
