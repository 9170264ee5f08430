import numpy as np
import pytest

from adaselect.combiner import (
    AccumulationBuffer,
    AdaSelectConfig,
    CombinerState,
    combined_scores,
    curriculum_reward,
    init_state,
    select,
    subset_size,
    update_method_weights,
)
from adaselect.data import MiniBatch, PerSampleStats
from adaselect.rng import RngStream
from adaselect.scorers import ScorerKind, select_standalone

# exp(0.5) / (exp(0.5) + 1) and its complement, 25-digit evaluation
W_FAST = 0.6224593312018546
W_SLOW = 0.3775406687981454
EXP_NEG_HALF = 0.6065306597126334

BSU = (ScorerKind.BIG_LOSS, ScorerKind.SMALL_LOSS, ScorerKind.UNIFORM)


def make_batch(gen, b, n_features=3):
    return MiniBatch(
        features=gen.normal(size=(b, n_features)),
        targets=gen.normal(size=b),
        ids=np.arange(b),
    )


class TestConfig:
    def test_rejects_empty_candidates(self):
        with pytest.raises(ValueError, match="no candidates"):
            AdaSelectConfig(candidates=())

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="distinct"):
            AdaSelectConfig(candidates=(ScorerKind.UNIFORM, ScorerKind.UNIFORM))

    def test_rejects_beta_out_of_range(self):
        with pytest.raises(ValueError, match="beta"):
            AdaSelectConfig(candidates=BSU, beta=1.5)

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError, match="sampling_rate"):
            AdaSelectConfig(candidates=BSU, sampling_rate=0.0)


class TestInitState:
    @pytest.mark.parametrize("m", [1, 2, 4, 7])
    def test_uniform_weights(self, m):
        config = AdaSelectConfig(candidates=tuple(ScorerKind)[:m])
        state = init_state(config)
        np.testing.assert_allclose(state.weights, np.full(m, 1.0 / m))
        assert abs(state.weights.sum() - 1.0) < 1e-12
        assert state.prev_avg_loss is None
        assert state.t == 1


class TestCurriculumReward:
    def test_equal_losses_equal_rewards(self):
        reward = curriculum_reward(np.array([1.0, 1.0]), t=1, kappa=-0.5)
        np.testing.assert_allclose(reward, [EXP_NEG_HALF] * 2, atol=1e-12)

    def test_smaller_loss_larger_reward(self):
        reward = curriculum_reward(np.array([1.0, 2.0]), t=1, kappa=-0.5)
        assert reward[0] > reward[1]
        assert np.all(reward > 0) and np.all(reward <= 1)

    def test_decays_toward_fairness(self):
        reward = curriculum_reward(np.array([1.0, 2.0]), t=10**6, kappa=-0.5)
        np.testing.assert_allclose(reward, 1.0, atol=1e-3)

    def test_disabled_returns_ones(self):
        reward = curriculum_reward(np.array([1.0, 2.0]), t=1, kappa=-0.5, enabled=False)
        np.testing.assert_array_equal(reward, [1.0, 1.0])

    def test_all_zero_losses_return_ones(self):
        reward = curriculum_reward(np.zeros(3), t=5, kappa=-0.5)
        np.testing.assert_array_equal(reward, np.ones(3))


class TestUpdateMethodWeights:
    def test_first_update_records_without_changing_weights(self):
        state = CombinerState(weights=np.array([0.5, 0.5]), prev_avg_loss=None, t=1)
        new = update_method_weights(state, np.array([1.0, 2.0]), beta=1.0)
        np.testing.assert_array_equal(new.weights, state.weights)
        np.testing.assert_array_equal(new.prev_avg_loss, [1.0, 2.0])
        assert new.t == 2

    def test_beta_zero_keeps_weights_bit_identical(self):
        state = CombinerState(
            weights=np.array([0.5, 0.5]), prev_avg_loss=np.array([1.0, 3.0]), t=2
        )
        new = update_method_weights(state, np.array([5.0, 0.5]), beta=0.0)
        assert new.weights.tobytes() == state.weights.tobytes()

    def test_no_variation_keeps_weights(self):
        prev = np.array([1.0, 3.0])
        state = CombinerState(weights=np.array([0.7, 0.3]), prev_avg_loss=prev, t=2)
        new = update_method_weights(state, prev.copy(), beta=1.0)
        np.testing.assert_array_equal(new.weights, state.weights)

    def test_hand_constructed_trace(self):
        # relative variations [0.5, 0]: factors [e^0.5, 1] on uniform weights
        state = CombinerState(
            weights=np.array([0.5, 0.5]), prev_avg_loss=np.array([1.0, 1.0]), t=2
        )
        new = update_method_weights(state, np.array([1.5, 1.0]), beta=1.0)
        np.testing.assert_allclose(new.weights, [W_FAST, W_SLOW], atol=1e-12)

    def test_method_count_change_rejected(self):
        state = CombinerState(weights=np.array([0.5, 0.5]), prev_avg_loss=None, t=1)
        with pytest.raises(ValueError, match="method count changed"):
            update_method_weights(state, np.array([1.0, 2.0, 3.0]), beta=0.5)

    def test_simplex_invariant_under_random_updates(self):
        gen = np.random.Generator(np.random.Philox(31))
        state = CombinerState(weights=np.full(4, 0.25), prev_avg_loss=None, t=1)
        for _ in range(500):
            state = update_method_weights(state, gen.uniform(0, 5, 4), beta=0.9)
            assert np.all(state.weights > 0)
            assert abs(state.weights.sum() - 1.0) < 1e-9

    def test_positive_beta_rewards_variation(self):
        prev = np.array([1.0, 1.0, 1.0])
        state = CombinerState(weights=np.full(3, 1 / 3), prev_avg_loss=prev, t=2)
        new = update_method_weights(state, np.array([2.0, 1.2, 1.0]), beta=0.8)
        assert new.weights[0] > new.weights[1] > new.weights[2]

    def test_negative_beta_punishes_variation(self):
        prev = np.array([1.0, 1.0, 1.0])
        state = CombinerState(weights=np.full(3, 1 / 3), prev_avg_loss=prev, t=2)
        new = update_method_weights(state, np.array([2.0, 1.2, 1.0]), beta=-0.8)
        assert new.weights[0] < new.weights[1] < new.weights[2]

    def test_extreme_variation_stays_finite_and_positive(self):
        # a collapsed previous loss inflates the relative variation; the
        # update must survive where the naive product would overflow
        state = CombinerState(
            weights=np.array([0.5, 0.5]), prev_avg_loss=np.array([1e-13, 1.0]), t=2
        )
        new = update_method_weights(state, np.array([0.5, 1.0]), beta=1.0)
        assert np.all(np.isfinite(new.weights))
        assert np.all(new.weights > 0)
        assert abs(new.weights.sum() - 1.0) < 1e-9
        assert new.weights[0] > new.weights[1]


class TestCombinedScores:
    def test_single_method_identity(self):
        alpha = np.array([[0.2, 0.3, 0.5]])
        out = combined_scores(alpha, np.array([1.0]), np.ones(3))
        np.testing.assert_array_equal(out, alpha[0])

    def test_identical_alphas_any_weights(self):
        alpha = np.array([0.1, 0.4, 0.5])
        out = combined_scores(
            np.stack([alpha, alpha]), np.array([0.3, 0.7]), np.ones(3)
        )
        np.testing.assert_allclose(out, alpha, atol=1e-15)

    def test_symmetric_mixture(self):
        alphas = np.array([[1.0, 0.0], [0.0, 1.0]])
        out = combined_scores(alphas, np.array([0.5, 0.5]), np.ones(2))
        np.testing.assert_array_equal(out, [0.5, 0.5])

    def test_reward_scales(self):
        alphas = np.array([[0.5, 0.5]])
        out = combined_scores(alphas, np.array([1.0]), np.array([1.0, 0.5]))
        np.testing.assert_array_equal(out, [0.5, 0.25])


class TestSelect:
    def test_degenerate_single_candidate_matches_standalone(self):
        gen = np.random.Generator(np.random.Philox(37))
        config = AdaSelectConfig(
            candidates=(ScorerKind.BIG_LOSS,),
            sampling_rate=0.3,
            beta=0.0,
            curriculum_enabled=False,
        )
        state = init_state(config)
        for _ in range(100):
            b = int(gen.integers(2, 40))
            batch = make_batch(gen, b)
            stats = PerSampleStats(losses=gen.uniform(0, 1, b))
            k = subset_size(b, config.sampling_rate)
            result, state = select(state, batch, stats, config, RngStream(1))
            np.testing.assert_array_equal(
                result.chosen, select_standalone(ScorerKind.BIG_LOSS, stats, k)
            )

    def test_chosen_size_and_indicators(self):
        gen = np.random.Generator(np.random.Philox(41))
        config = AdaSelectConfig(candidates=BSU, sampling_rate=0.2)
        state = init_state(config)
        batch = make_batch(gen, 10)
        stats = PerSampleStats(losses=gen.uniform(0, 1, 10))
        result, _ = select(state, batch, stats, config, RngStream(2))
        assert len(result.chosen) == 2
        assert result.indicators.sum() == 2
        assert np.all(result.indicators[result.chosen] == 1)

    def test_minimum_one_sample(self):
        gen = np.random.Generator(np.random.Philox(43))
        config = AdaSelectConfig(candidates=BSU, sampling_rate=0.01)
        state = init_state(config)
        batch = make_batch(gen, 5)
        stats = PerSampleStats(losses=gen.uniform(0, 1, 5))
        result, _ = select(state, batch, stats, config, RngStream(3))
        assert len(result.chosen) == 1

    def test_state_advances_and_stays_on_simplex(self):
        gen = np.random.Generator(np.random.Philox(47))
        config = AdaSelectConfig(candidates=BSU, sampling_rate=0.5, beta=0.7)
        state = init_state(config)
        sel_gen = RngStream(5).generator()
        for step in range(50):
            batch = make_batch(gen, 20)
            stats = PerSampleStats(losses=gen.uniform(0, 1, 20))
            _, state = select(state, batch, stats, config, sel_gen)
            assert state.t == step + 2
            assert abs(state.weights.sum() - 1.0) < 1e-9
            assert np.all(state.weights > 0)

    def test_deterministic_given_stream(self):
        gen = np.random.Generator(np.random.Philox(53))
        config = AdaSelectConfig(candidates=BSU, sampling_rate=0.4)
        batch = make_batch(gen, 16)
        stats = PerSampleStats(losses=gen.uniform(0, 1, 16))
        r1, s1 = select(init_state(config), batch, stats, config, RngStream(9))
        r2, s2 = select(init_state(config), batch, stats, config, RngStream(9))
        np.testing.assert_array_equal(r1.chosen, r2.chosen)
        np.testing.assert_array_equal(r1.scores, r2.scores)
        np.testing.assert_array_equal(s1.weights, s2.weights)

    def test_missing_grad_norms_propagates(self):
        gen = np.random.Generator(np.random.Philox(59))
        config = AdaSelectConfig(
            candidates=(ScorerKind.BIG_LOSS, ScorerKind.GRAD_NORM), sampling_rate=0.5
        )
        batch = make_batch(gen, 8)
        stats = PerSampleStats(losses=gen.uniform(0, 1, 8))
        with pytest.raises(ValueError, match="gradient norms unavailable"):
            select(init_state(config), batch, stats, config, RngStream(11))

    def test_softmax_temperature_flows_into_importances(self):
        gen = np.random.Generator(np.random.Philox(67))
        batch = make_batch(gen, 10)
        stats = PerSampleStats(losses=gen.uniform(0, 1, 10))
        results = {}
        for temperature in (0.2, 5.0):
            config = AdaSelectConfig(
                candidates=(ScorerKind.BIG_LOSS,),
                sampling_rate=0.5,
                softmax_temperature=temperature,
            )
            result, _ = select(init_state(config), batch, stats, config, RngStream(8))
            results[temperature] = result.per_method_alpha[0]
        # colder temperature concentrates mass on the largest loss
        assert results[0.2].max() > results[5.0].max()
        np.testing.assert_array_equal(
            np.argsort(results[0.2]), np.argsort(results[5.0])
        )

    def test_curriculum_off_ranking_equals_blend_ranking(self):
        gen = np.random.Generator(np.random.Philox(61))
        config = AdaSelectConfig(
            candidates=BSU, sampling_rate=0.3, curriculum_enabled=False
        )
        batch = make_batch(gen, 12)
        stats = PerSampleStats(losses=gen.uniform(0, 1, 12))
        result, _ = select(init_state(config), batch, stats, config, RngStream(13))
        blend = result.per_method_alpha.T @ np.full(3, 1 / 3)
        np.testing.assert_array_equal(np.argsort(-result.scores), np.argsort(-blend))


class TestAccumulationBuffer:
    def test_flush_on_fifth_push(self):
        buffer = AccumulationBuffer(capacity=100)
        for push in range(1, 5):
            assert buffer.push(np.arange(20)) is None, push
        flushed = buffer.push(np.arange(20))
        assert flushed is not None
        assert len(flushed) == 100
        assert len(buffer) == 0

    def test_full_rate_flushes_every_push(self):
        buffer = AccumulationBuffer(capacity=10)
        for _ in range(3):
            assert buffer.push(np.arange(10)) is not None
            assert len(buffer) == 0

    def test_overflow_rejected(self):
        buffer = AccumulationBuffer(capacity=10)
        buffer.push(np.arange(8))
        with pytest.raises(ValueError, match="split the push"):
            buffer.push(np.arange(5))

    def test_preserves_push_order(self):
        buffer = AccumulationBuffer(capacity=6)
        buffer.push(np.array([5, 1]))
        buffer.push(np.array([9, 2]))
        flushed = buffer.push(np.array([7, 3]))
        np.testing.assert_array_equal(flushed, [5, 1, 9, 2, 7, 3])


def test_subset_size():
    assert subset_size(10, 0.2) == 2
    assert subset_size(10, 0.05) == 1
    assert subset_size(100, 1.0) == 100
    assert subset_size(7, 0.5) == 3
