"""Stochastic better-response dynamics among creators.

Each step draws a creator uniformly and a direction uniformly on the unit
sphere (normalized Gaussian), perturbs that creator's action by ``step``
along the direction, projects back onto its action space and keeps the move
if the creator's utility does not drop. Random draws come from one Philox
stream per run, in the order: creator index, then direction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from creatorgame.mechanisms import reward_matrix
from creatorgame.model import GameError, GameInstance, StrategyProfile
from creatorgame.welfare import potential_from_scores, welfare_from_scores


@dataclass(frozen=True)
class DynamicsConfig:
    horizon: int = 1000
    step: float = 0.1
    seed: int = 0
    record_every: int = 1
    # evaluate utility at the raw perturbed point instead of the projected one
    evaluate_before_projection: bool = False

    def __post_init__(self):
        if self.horizon < 0 or self.step < 0 or self.record_every < 1:
            raise GameError("need horizon >= 0, step >= 0, record_every >= 1")


@dataclass(frozen=True)
class TrajectoryPoint:
    t: int
    profile: StrategyProfile
    welfare: float
    potential: float | None
    utilities: np.ndarray
    accepted: int  # moves accepted up to and including step t


@dataclass
class Trajectory:
    steps: list[TrajectoryPoint] = field(default_factory=list)
    accepted_moves: int = 0

    @property
    def welfare(self) -> np.ndarray:
        return np.array([p.welfare for p in self.steps])

    @property
    def potential(self) -> np.ndarray:
        return np.array([np.nan if p.potential is None else p.potential for p in self.steps])

    @property
    def times(self) -> np.ndarray:
        return np.array([p.t for p in self.steps])

    def header(self) -> list[str]:
        n = len(self.steps[0].utilities) if self.steps else 0
        return ["t", "welfare", "potential", "accepted"] + [f"u{i}" for i in range(n)]

    def rows(self):
        for p in self.steps:
            pot = "" if p.potential is None else repr(p.potential)
            yield [p.t, repr(p.welfare), pot, p.accepted] + [repr(float(u)) for u in p.utilities]

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header())
            w.writerows(self.rows())


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator used by every simulation loop."""
    return np.random.Generator(np.random.Philox(seed))


def _snapshot(game, scores, rew, profile, t, accepted) -> TrajectoryPoint:
    costs = np.array([game.cost(i, a) for i, a in enumerate(profile.actions)])
    utils = game.population.weights @ rew - costs
    pot = potential_from_scores(game, scores, profile) if game.mechanism.is_backward else None
    return TrajectoryPoint(t, profile, welfare_from_scores(game, scores, profile), pot, utils, accepted)


def sim_stra(game: GameInstance, init: StrategyProfile, cfg: DynamicsConfig,
             rng: np.random.Generator | None = None) -> tuple[StrategyProfile, Trajectory]:
    """Run ``cfg.horizon`` better-response steps from ``init``.

    Pass ``rng`` to continue an existing stream (``cfg.seed`` is then ignored).
    Returns the final profile and the recorded trajectory; the first record is
    the initial profile at ``t = 0``.
    """
    if game.mechanism is None:
        raise GameError("game has no mechanism attached")
    game.validate(init)
    if rng is None:
        rng = make_rng(cfg.seed)
    n, d = game.n, game.d
    mech = game.mechanism
    mean = game.population.mean
    profile = init
    scores = game.score_matrix(profile)
    rew = reward_matrix(mech, scores)
    traj = Trajectory()
    traj.steps.append(_snapshot(game, scores, rew, profile, 0, 0))
    accepted = 0
    for t in range(1, cfg.horizon + 1):
        i = int(rng.integers(n))
        g = rng.standard_normal(d)
        g /= np.linalg.norm(g)
        space = game.action_spaces[i]
        current = game.action_vector(i, profile[i])
        raw = current + cfg.step * g
        # a zero step must not drift through renormalization
        candidate = profile[i] if cfg.step == 0 else space.project(raw)

        cur_u = mean(rew[:, i]) - game.costs[i](current)
        trial = scores.copy()
        if cfg.evaluate_before_projection:
            trial[:, i] = game.score_fn.from_inner(game.population.users @ raw)
            new_u = mean(reward_matrix(mech, trial)[:, i]) - game.costs[i](raw)
            trial[:, i] = game.score_column(i, candidate)
            trial_rew = None
        else:
            trial[:, i] = game.score_column(i, candidate)
            trial_rew = reward_matrix(mech, trial)
            new_u = mean(trial_rew[:, i]) - game.costs[i](space.vector(candidate))
        if new_u >= cur_u:
            profile = profile.replace(i, candidate)
            scores = trial
            rew = reward_matrix(mech, trial) if trial_rew is None else trial_rew
            accepted += 1
        if t % cfg.record_every == 0 or t == cfg.horizon:
            traj.steps.append(_snapshot(game, scores, rew, profile, t, accepted))
    traj.accepted_moves = accepted
    return profile, traj
