import numpy as np
import pytest
from _games import random_sphere_game

from creatorgame.dynamics import DynamicsConfig, Trajectory, sim_stra
from creatorgame.environments import make_tvn
from creatorgame.mechanisms import MechanismSpec
from creatorgame.model import (
    ActionSpace,
    AttentionWeights,
    CostSpec,
    GameError,
    GameInstance,
    ScoreFunctionSpec,
    StrategyProfile,
    UserPopulation,
)
from creatorgame.welfare import potential, social_welfare

E = np.eye(2)


@pytest.fixture
def sphere_game():
    return random_sphere_game(np.random.Generator(np.random.Philox(7)))


def test_zero_horizon(sphere_game):
    game, init = sphere_game
    final, traj = sim_stra(game, init, DynamicsConfig(horizon=0))
    assert final == init
    assert traj.accepted_moves == 0
    assert len(traj.steps) == 1 and traj.steps[0].t == 0


def test_zero_step_keeps_profile(sphere_game):
    game, init = sphere_game
    final, traj = sim_stra(game, init, DynamicsConfig(horizon=200, step=0.0))
    assert final == init
    assert all(p.profile == init for p in traj.steps)


def test_single_creator_moves_to_users_and_stays():
    game = GameInstance(UserPopulation([E[0]] * 3), (ActionSpace.finite(E),), (CostSpec.zero(),),
                        ScoreFunctionSpec.raw(), AttentionWeights([1.0]), MechanismSpec.m3_zero())
    final, traj = sim_stra(game, StrategyProfile((1,)), DynamicsConfig(horizon=300, step=1.0, seed=1))
    assert final == StrategyProfile((0,))
    first = next(k for k, p in enumerate(traj.steps) if p.profile[0] == 0)
    assert all(p.profile[0] == 0 for p in traj.steps[first:])
    assert traj.welfare[-1] == 1.0


def test_deterministic(sphere_game):
    game, init = sphere_game
    cfg = DynamicsConfig(horizon=300, step=0.2, seed=11)
    a_final, a = sim_stra(game, init, cfg)
    b_final, b = sim_stra(game, init, cfg)
    assert a_final == b_final
    np.testing.assert_array_equal(a.welfare, b.welfare)
    np.testing.assert_array_equal(a.potential, b.potential)
    assert [p.profile for p in a.steps] == [p.profile for p in b.steps]


def test_seed_matters(sphere_game):
    game, init = sphere_game
    a, _ = sim_stra(game, init, DynamicsConfig(horizon=100, seed=1))
    b, _ = sim_stra(game, init, DynamicsConfig(horizon=100, seed=2))
    assert a != b


def test_rejections_leave_profile_untouched(sphere_game):
    game, init = sphere_game
    _, traj = sim_stra(game, init, DynamicsConfig(horizon=400, step=0.3, seed=5))
    for prev, cur in zip(traj.steps, traj.steps[1:]):
        if cur.accepted == prev.accepted:
            assert cur.profile == prev.profile
        else:
            assert cur.accepted == prev.accepted + 1
            changed = [i for i in range(game.n) if not np.array_equal(cur.profile[i], prev.profile[i])]
            assert len(changed) <= 1


@pytest.mark.parametrize("seed", range(5))
def test_potential_never_drops(seed):
    game, init = random_sphere_game(np.random.Generator(np.random.Philox(100 + seed)))
    _, traj = sim_stra(game, init, DynamicsConfig(horizon=500, step=0.3, seed=seed))
    assert np.all(np.diff(traj.potential) >= -1e-10)


def test_welfare_monotone_when_densities_match_attention(sphere_game):
    game, init = sphere_game
    game = game.with_mechanism(MechanismSpec.brcm(game.attention.r))
    _, traj = sim_stra(game, init, DynamicsConfig(horizon=500, step=0.3, seed=3))
    assert np.all(np.diff(traj.welfare) >= -1e-10)


def test_actions_stay_on_sphere(sphere_game):
    game, init = sphere_game
    final, _ = sim_stra(game, init, DynamicsConfig(horizon=300, step=0.5, seed=9))
    for a in final.actions:
        assert abs(np.linalg.norm(a) - 1.0) <= 1e-12


def test_snapshot_values(sphere_game):
    game, init = sphere_game
    _, traj = sim_stra(game, init, DynamicsConfig(horizon=20, seed=4))
    last = traj.steps[-1]
    assert last.welfare == pytest.approx(social_welfare(last.profile, game).total_welfare, abs=1e-14)
    assert last.potential == pytest.approx(potential(last.profile, game), abs=1e-14)


def test_non_backward_has_no_potential():
    game = make_tvn(2, AttentionWeights([1.0, 0.0])).with_mechanism(MechanismSpec.exposure(1, 0.05))
    _, traj = sim_stra(game, game.initial_profile, DynamicsConfig(horizon=5))
    assert np.all(np.isnan(traj.potential))


def test_record_every_keeps_first_and_last(sphere_game):
    game, init = sphere_game
    _, traj = sim_stra(game, init, DynamicsConfig(horizon=25, record_every=10, seed=2))
    assert traj.times.tolist() == [0, 10, 20, 25]


def test_pre_projection_flag_stays_feasible():
    game = make_tvn(2, AttentionWeights([1.0, 0.0])).with_mechanism(MechanismSpec.brcm([1.0, 0.0]))
    cfg = DynamicsConfig(horizon=50, step=1.0, seed=0, evaluate_before_projection=True)
    final, traj = sim_stra(game, game.initial_profile, cfg)
    assert game.action_spaces[0].contains(final[0]) and game.action_spaces[1].contains(final[1])
    assert traj.times[-1] == 50


def test_csv_export(sphere_game, tmp_path):
    game, init = sphere_game
    _, traj = sim_stra(game, init, DynamicsConfig(horizon=5, seed=0))
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == ["t", "welfare", "potential", "accepted"] + [f"u{i}" for i in range(game.n)]
    assert len(lines) == 7


def test_requires_mechanism(sphere_game):
    game, init = sphere_game
    with pytest.raises(GameError):
        sim_stra(GameInstance(game.population, game.action_spaces, game.costs, game.score_fn,
                              game.attention), init, DynamicsConfig())


def test_invalid_config():
    with pytest.raises(GameError):
        DynamicsConfig(horizon=-1)
    with pytest.raises(GameError):
        DynamicsConfig(record_every=0)


def test_empty_trajectory_header():
    assert Trajectory().header() == ["t", "welfare", "potential", "accepted"]
