"""Random continuous-action games shared by several test modules."""

from creatorgame.environments import unit_vectors
from creatorgame.model import (
    ActionSpace,
    CostSpec,
    GameInstance,
    ScoreFunctionSpec,
    StrategyProfile,
    UserPopulation,
)
from creatorgame.oracle import random_attention, random_brm


def random_sphere_game(rng, max_n=5, max_users=8, d=None):
    n = int(rng.integers(2, max_n + 1))
    d = int(rng.integers(2, 5)) if d is None else d
    m = int(rng.integers(2, max_users + 1))
    costs = tuple(CostSpec.quadratic(float(rng.random()), unit_vectors(rng, 1, d)[0])
                  if rng.random() < 0.5 else CostSpec.zero() for _ in range(n))
    game = GameInstance(
        population=UserPopulation(unit_vectors(rng, m, d)),
        action_spaces=(ActionSpace.sphere(d),) * n,
        costs=costs,
        score_fn=ScoreFunctionSpec.shifted(),
        attention=random_attention(rng, n),
        mechanism=random_brm(rng, n),
    )
    init = StrategyProfile(tuple(unit_vectors(rng, n, d)))
    return game, init
