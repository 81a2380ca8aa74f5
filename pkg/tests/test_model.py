import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from creatorgame.model import (
    ActionSpace,
    AttentionWeights,
    CostSpec,
    GameError,
    GameInstance,
    ScoreFunctionSpec,
    ScoreProfile,
    StrategyProfile,
    UserPopulation,
    dcg5,
    perturbed_attention_weights,
    score,
    score_profile,
)

E = np.eye(3)


class TestScore:
    def test_raw_identity(self):
        assert score(E[0], E[0], ScoreFunctionSpec.raw()) == 1.0

    def test_shifted_opposite_vectors(self):
        x = np.array([0.6, 0.8])
        assert score(-x, x, ScoreFunctionSpec.shifted()) == 0.0

    def test_clipped_saturates(self):
        spec = ScoreFunctionSpec.clipped()
        a = np.array([5.0, 0.0])
        assert score(a, np.array([1.0, 0.0]), spec) == 1.0
        # 12.5 / 2.5 - 1 = 4, clipped to 1
        assert score(np.array([12.5, 0.0]), np.array([1.0, 0.0]), spec) == 1.0
        assert score(np.array([3.0, 0.0]), np.array([1.0, 0.0]), spec) == pytest.approx(0.2)

    def test_dimension_mismatch(self):
        with pytest.raises(GameError):
            score(E[0], np.ones(2), ScoreFunctionSpec.raw())

    def test_unknown_kind(self):
        with pytest.raises(GameError):
            ScoreFunctionSpec("cosine")

    @given(a=arrays(np.float64, 4, elements=st.floats(-1, 1)),
           x=arrays(np.float64, 4, elements=st.floats(-1, 1)),
           kind=st.sampled_from(["raw", "shifted", "clipped"]))
    def test_output_in_unit_interval(self, a, x, kind):
        na, nx = np.linalg.norm(a), np.linalg.norm(x)
        if na < 1e-6 or nx < 1e-6:
            return
        spec = ScoreFunctionSpec.clipped() if kind == "clipped" else ScoreFunctionSpec(kind)
        assert 0.0 <= score(a / na, x / nx, spec) <= 1.0


class TestScoreProfile:
    def test_tie_group(self):
        sp = ScoreProfile.from_scores([1.0, 1.0])
        assert sp.order == (0, 1)
        assert sp.tie_groups == ((0, 1),)

    def test_order(self):
        sp = ScoreProfile.from_scores([0.2, 0.9, 0.6])
        assert sp.order == (1, 2, 0)
        assert sp.tie_groups == ((1,), (2,), (0,))

    def test_single(self):
        sp = ScoreProfile.from_scores([0.7])
        assert sp.order == (0,)
        assert sp.tie_groups == ((0,),)

    def test_rejects_nan(self):
        with pytest.raises(GameError):
            ScoreProfile.from_scores([0.1, np.nan])

    @given(arrays(np.float64, st.integers(1, 8), elements=st.sampled_from([0.0, 0.3, 0.5, 1.0]) | st.floats(0, 1)))
    def test_order_descending_and_groups_partition(self, s):
        sp = ScoreProfile.from_scores(s)
        ranked = s[list(sp.order)]
        assert np.all(np.diff(ranked) <= 0)
        flat = [i for g in sp.tie_groups for i in g]
        assert sorted(flat) == list(range(len(s)))
        for g in sp.tie_groups:
            assert len({s[i] for i in g}) == 1
        heads = [s[g[0]] for g in sp.tie_groups]
        assert len(set(heads)) == len(heads)

    def test_score_profile_from_game(self):
        game = GameInstance(UserPopulation([E[0]]), (ActionSpace.finite(E),) * 2,
                            (CostSpec.zero(),) * 2, ScoreFunctionSpec.raw(), AttentionWeights([1, 0]))
        sp = score_profile(StrategyProfile((0, 0)), E[0], game)
        np.testing.assert_array_equal(sp.scores, [1.0, 1.0])
        assert sp.tie_groups == ((0, 1),)


class TestAttention:
    def test_nonincreasing_required(self):
        with pytest.raises(GameError):
            AttentionWeights([0.5, 0.7])
        with pytest.raises(GameError):
            AttentionWeights([1.5, 0.7])

    def test_dcg5(self):
        r = dcg5(7).r
        np.testing.assert_allclose(r[:5], 1 / np.log2([2, 3, 4, 5, 6]))
        assert np.all(r[5:] == 0)
        assert dcg5(7).K == 5
        assert dcg5(3).K == 3

    def test_identity_mixture(self):
        att = dcg5(6)
        out = perturbed_attention_weights(att, [(range(6), 1.0)])
        np.testing.assert_array_equal(out.r, att.r)
        assert out.nonincreasing

    def test_promote_rank_six(self):
        r = dcg5(7).r
        p = 0.9
        promoted = [0, 5, 1, 2, 3, 4, 6]
        out = perturbed_attention_weights(AttentionWeights(r), [(range(7), 1 - p), (promoted, p)])
        want = [r[0], p * r[2] + (1 - p) * r[1], p * r[3] + (1 - p) * r[2],
                p * r[4] + (1 - p) * r[3], (1 - p) * r[4], p * r[1], 0.0]
        np.testing.assert_allclose(out.r, want, atol=1e-15)
        assert not out.nonincreasing

    def test_swap_mixture(self):
        r = np.array([1.0, 0.5, 0.2])
        out = perturbed_attention_weights(AttentionWeights(r), [([0, 1, 2], 0.5), ([1, 0, 2], 0.5)])
        assert out.r[0] == out.r[1] == 0.75

    def test_probability_sum(self):
        with pytest.raises(GameError):
            perturbed_attention_weights(dcg5(3), [(range(3), 0.9)])
        with pytest.raises(GameError):
            perturbed_attention_weights(dcg5(3), [([0, 0, 1], 1.0)])

    @given(st.lists(st.floats(0.01, 1), min_size=1, max_size=4), st.integers(0, 2**16))
    def test_total_attention_preserved(self, probs, seed):
        rng = np.random.Generator(np.random.Philox(seed))
        probs = np.array(probs) / np.sum(probs)
        probs[-1] = 1.0 - probs[:-1].sum()
        att = dcg5(6)
        mix = [(rng.permutation(6), float(p)) for p in probs]
        out = perturbed_attention_weights(att, mix)
        assert out.r.sum() == pytest.approx(att.r.sum(), abs=1e-12)


class TestSpacesAndCosts:
    def test_sphere_projection(self):
        sp = ActionSpace.sphere(3)
        np.testing.assert_allclose(sp.project([3.0, 0.0, 4.0]), [0.6, 0.0, 0.8])
        v = sp.project(np.zeros(3))
        assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_finite_projection_nearest_lowest_index(self):
        sp = ActionSpace.finite(E[:2])
        assert sp.project([0.9, 0.2, 0.0]) == 0
        assert sp.project([0.5, 0.5, 0.0]) == 0
        assert sp.project([0.1, 0.6, 0.0]) == 1

    def test_contains(self):
        assert ActionSpace.sphere(2).contains([0.6, 0.8])
        assert not ActionSpace.sphere(2).contains([0.6, 0.6])
        assert ActionSpace.finite(E).contains(2)
        assert not ActionSpace.finite(E).contains(3)

    def test_quadratic_cost(self):
        c = CostSpec.quadratic(0.5, E[0])
        assert c(E[1]) == pytest.approx(1.0)
        assert c(E[0]) == 0.0
        assert CostSpec.zero()(E[2]) == 0.0
        with pytest.raises(GameError):
            CostSpec.quadratic(-1.0, E[0])

    def test_population_weights(self):
        pop = UserPopulation(E)
        np.testing.assert_allclose(pop.weights, 1 / 3)
        with pytest.raises(GameError):
            UserPopulation(E, weights=[0.5, 0.5, 0.5])
        with pytest.raises(GameError):
            UserPopulation(E, group_labels=[0, 1])


class TestGame:
    def game(self, **kw):
        base = dict(population=UserPopulation(E), action_spaces=(ActionSpace.finite(E),) * 2,
                    costs=(CostSpec.zero(),) * 2, score_fn=ScoreFunctionSpec.raw(),
                    attention=AttentionWeights([1.0, 0.5]))
        base.update(kw)
        return GameInstance(**base)

    def test_score_matrix(self):
        g = self.game()
        np.testing.assert_array_equal(g.score_matrix(StrategyProfile((0, 2))), [[1, 0], [0, 0], [0, 1]])

    def test_inconsistent_dimensions(self):
        with pytest.raises(GameError):
            self.game(action_spaces=(ActionSpace.finite(np.eye(2)),) * 2)
        with pytest.raises(GameError):
            self.game(costs=(CostSpec.zero(),))
        with pytest.raises(GameError):
            self.game(attention=AttentionWeights([1.0]))

    def test_validate_profile(self):
        g = self.game()
        with pytest.raises(GameError):
            g.validate(StrategyProfile((0, 5)))
        with pytest.raises(GameError):
            g.validate(StrategyProfile((0,)))

    def test_profile_is_hashable_and_immutable(self):
        p = StrategyProfile((np.array([1.0, 0.0]), np.array([0.0, 1.0])))
        q = p.replace(0, np.array([0.0, 1.0]))
        assert p != q
        assert hash(p) == hash(StrategyProfile((np.array([1.0, 0.0]), np.array([0.0, 1.0]))))
        with pytest.raises(ValueError):
            p[0][0] = 2.0
