import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from creatorgame.environments import make_tvn
from creatorgame.mechanisms import MechanismError, MechanismSpec, shapley_mediator
from creatorgame.model import (
    ActionSpace,
    AttentionWeights,
    CostSpec,
    GameError,
    GameInstance,
    ScoreFunctionSpec,
    StrategyProfile,
    UserPopulation,
    dcg5,
)
from creatorgame.oracle import random_finite_game, random_profile
from creatorgame.welfare import (
    WelfareReport,
    creator_utilities,
    creator_utility,
    potential,
    social_welfare,
    user_welfare,
)

TVN2 = make_tvn(2, AttentionWeights([1.0, 0.0])).with_mechanism(MechanismSpec.brcm([1.0, 0.0]))


def single_user_game(score_vec, mechanism, costs=None, r=None):
    n = len(score_vec)
    pop = UserPopulation([[1.0]])
    spaces = tuple(ActionSpace.finite([[s]]) for s in score_vec)
    return GameInstance(pop, spaces, costs or (CostSpec.zero(),) * n, ScoreFunctionSpec.raw(),
                        AttentionWeights(r if r is not None else np.ones(n)), mechanism)


class TestCreatorUtility:
    def test_single_creator(self):
        g = single_user_game([0.7], MechanismSpec.m3_zero())
        assert creator_utility(0, StrategyProfile((0,)), g) == pytest.approx(0.7)

    def test_tvn_split(self):
        prof = StrategyProfile((0, 1))
        assert creator_utility(0, prof, TVN2) == pytest.approx(0.75)
        assert creator_utility(1, prof, TVN2) == pytest.approx(0.25)

    def test_quadratic_cost_only(self):
        g = GameInstance(UserPopulation([[0.0, 1.0]]), (ActionSpace.finite([[1.0, 0.0]]),),
                         (CostSpec.quadratic(0.5, [0.0, 0.0]),), ScoreFunctionSpec.raw(),
                         AttentionWeights([1.0]), MechanismSpec.m3_zero())
        assert creator_utility(0, StrategyProfile((0,)), g) == pytest.approx(-0.5)

    def test_index_range(self):
        with pytest.raises(GameError):
            creator_utility(2, StrategyProfile((0, 1)), TVN2)


class TestUserWelfare:
    def test_all_zero(self):
        g = single_user_game([0.0, 0.0], MechanismSpec.m3_zero())
        assert user_welfare(StrategyProfile((0, 0)), [1.0], g) == 0.0

    def test_top_one(self):
        g = single_user_game([0.4, 0.9], MechanismSpec.m3_zero(), r=[1.0, 0.0])
        assert user_welfare(StrategyProfile((0, 0)), [1.0], g) == pytest.approx(0.9)

    def test_dcg_second_slot(self):
        r = dcg5(3).r
        g = single_user_game([1.0, 1.0, 0.0], MechanismSpec.m3_zero(), r=r)
        assert user_welfare(StrategyProfile((0, 0, 0)), [1.0], g) == pytest.approx(1 + 1 / np.log2(3))
        assert 1 / np.log2(3) == pytest.approx(0.6309, abs=1e-4)


class TestSocialWelfare:
    def test_tvn_optimum(self):
        assert social_welfare(StrategyProfile((0, 1)), TVN2).total_welfare == pytest.approx(1.0)

    def test_tvn_herding(self):
        assert social_welfare(StrategyProfile((0, 0)), TVN2).total_welfare == pytest.approx(0.75)

    def test_zero_cost_identity(self):
        rep = social_welfare(StrategyProfile((0, 1)), TVN2)
        assert rep.total_cost == 0.0
        assert rep.total_welfare == rep.user_side

    def test_report_identity_and_row(self):
        g = random_finite_game(np.random.Generator(np.random.Philox(3)))
        rep = social_welfare(random_profile(np.random.Generator(np.random.Philox(4)), g), g)
        assert rep.total_welfare == pytest.approx(rep.user_side - rep.total_cost, abs=1e-15)
        assert isinstance(rep, WelfareReport)
        assert len(rep.csv_header()) == len(rep.csv_row())

    def test_group_means(self):
        game = make_tvn(3, AttentionWeights([1.0, 0.0, 0.0])).with_mechanism(MechanismSpec.m3_zero())
        labels = np.array([0, 0, 0, 0, 1, 2])
        rep = social_welfare(StrategyProfile((0, 0, 0)), game, groups=labels)
        assert rep.per_group_mean_user_utility == {0: 1.0, 1: 0.0, 2: 0.0}
        with pytest.raises(GameError):
            social_welfare(StrategyProfile((0, 0, 0)), game, groups=labels[:3])

    @given(st.integers(0, 2**16))
    def test_independent_of_mechanism(self, seed):
        rng = np.random.Generator(np.random.Philox(seed))
        g = random_finite_game(rng)
        prof = random_profile(rng, g)
        n = g.n
        vals = {social_welfare(prof, g.with_mechanism(m)).total_welfare
                for m in (MechanismSpec.m3_zero(), MechanismSpec.exposure(1, 0.05), shapley_mediator(n))}
        assert len(vals) == 1

    @given(st.integers(0, 2**16))
    def test_user_welfare_invariant_to_creator_order(self, seed):
        rng = np.random.Generator(np.random.Philox(seed))
        g = random_finite_game(rng, max_n=4)
        prof = random_profile(rng, g)
        x = g.population.users[0]
        vecs = [g.action_vector(i, a) for i, a in enumerate(prof.actions)]
        perm = rng.permutation(g.n)
        shuffled = GameInstance(g.population, tuple(ActionSpace.finite([vecs[p]]) for p in perm),
                                g.costs, g.score_fn, g.attention, g.mechanism)
        a = user_welfare(prof, x, g)
        b = user_welfare(StrategyProfile((0,) * g.n), x, shuffled)
        assert a == pytest.approx(b, abs=1e-15)


class TestPotential:
    def test_tvn_value(self):
        assert potential(StrategyProfile((0, 1)), TVN2) == pytest.approx(1.0)

    def test_zero_scores(self):
        g = single_user_game([0.0, 0.0], shapley_mediator(2))
        assert potential(StrategyProfile((0, 0)), g) == 0.0

    def test_requires_backward_mechanism(self):
        with pytest.raises(MechanismError):
            potential(StrategyProfile((0, 1)), TVN2.with_mechanism(MechanismSpec.m3_zero()))

    @given(st.integers(0, 2**16))
    def test_equals_welfare_when_densities_match_attention(self, seed):
        rng = np.random.Generator(np.random.Philox(seed))
        g = random_finite_game(rng)
        g = g.with_mechanism(MechanismSpec.brcm(g.attention.r))
        prof = random_profile(rng, g)
        assert abs(potential(prof, g) - social_welfare(prof, g).total_welfare) <= 1e-12

    @given(st.integers(0, 2**16))
    def test_exact_potential(self, seed):
        rng = np.random.Generator(np.random.Philox(seed))
        g = random_finite_game(rng)
        prof = random_profile(rng, g)
        i = int(rng.integers(g.n))
        alt = prof.replace(i, int(rng.integers(g.action_spaces[i].size)))
        du = creator_utilities(alt, g)[i] - creator_utilities(prof, g)[i]
        dp = potential(alt, g) - potential(prof, g)
        assert abs(du - dp) <= 1e-10
