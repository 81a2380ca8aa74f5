"""Creator utilities, user welfare, social welfare and the BRM potential."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from creatorgame import kernels
from creatorgame.mechanisms import MechanismError, potential_terms, reward_matrix
from creatorgame.model import GameError, GameInstance, StrategyProfile

WELFARE_COLUMNS = ("total_welfare", "user_side", "total_cost")


def _mechanism(game: GameInstance):
    if game.mechanism is None:
        raise MechanismError("game has no mechanism attached")
    return game.mechanism


@dataclass(frozen=True)
class WelfareReport:
    total_welfare: float
    user_side: float
    total_cost: float
    per_creator_utility: tuple[float, ...] = ()
    per_group_mean_user_utility: dict = field(default_factory=dict)

    def csv_header(self) -> list[str]:
        head = list(WELFARE_COLUMNS)
        head += [f"u{i}" for i in range(len(self.per_creator_utility))]
        head += [f"group_{g}" for g in self.per_group_mean_user_utility]
        return head

    def csv_row(self) -> list[float]:
        row = [self.total_welfare, self.user_side, self.total_cost]
        row += list(self.per_creator_utility)
        row += list(self.per_group_mean_user_utility.values())
        return row


def utilities_from_scores(game: GameInstance, scores: np.ndarray, profile: StrategyProfile) -> np.ndarray:
    """Every creator's utility given a precomputed score matrix."""
    rew = reward_matrix(_mechanism(game), scores)
    costs = np.array([game.cost(i, a) for i, a in enumerate(profile.actions)])
    return game.population.weights @ rew - costs


def creator_utilities(profile: StrategyProfile, game: GameInstance) -> np.ndarray:
    return utilities_from_scores(game, game.score_matrix(profile), profile)


def creator_utility(i: int, profile: StrategyProfile, game: GameInstance) -> float:
    """Expected reward of creator ``i`` over users, minus its production cost."""
    if not 0 <= i < game.n:
        raise GameError(f"creator index {i} out of range for {game.n} creators")
    return float(creator_utilities(profile, game)[i])


def user_welfare(profile: StrategyProfile, user, game: GameInstance) -> float:
    """Attention-weighted sum of one user's ranked scores."""
    x = np.asarray(user, dtype=np.float64)
    s = np.array([game.score_fn.from_inner(float(game.action_vector(i, a) @ x))
                  for i, a in enumerate(profile.actions)])
    return float(kernels.ranked_weighted_sum(s[None, :], game.attention.r)[0])


def user_welfare_vector(game: GameInstance, scores: np.ndarray) -> np.ndarray:
    return kernels.ranked_weighted_sum(scores, game.attention.r)


def welfare_from_scores(game: GameInstance, scores: np.ndarray, profile: StrategyProfile) -> float:
    user_side = game.population.mean(user_welfare_vector(game, scores))
    return user_side - game.total_cost(profile)


def social_welfare(profile: StrategyProfile, game: GameInstance,
                   with_utilities: bool = True, groups=None) -> WelfareReport:
    """Expected user welfare minus total cost, with per-creator and per-group detail.

    Mechanism transfers cancel, so the total does not depend on the mechanism.
    ``per_creator_utility`` is only filled when a mechanism is attached.
    ``groups`` overrides the population's labels for the per-group means.
    """
    scores = game.score_matrix(profile)
    per_user = user_welfare_vector(game, scores)
    pop = game.population
    user_side = pop.mean(per_user)
    cost = game.total_cost(profile)
    utils: tuple[float, ...] = ()
    if with_utilities and game.mechanism is not None:
        utils = tuple(float(u) for u in utilities_from_scores(game, scores, profile))
    labels = pop.group_labels if groups is None else np.asarray(groups)
    means: dict = {}
    if labels is not None:
        if labels.shape != (pop.m,):
            raise GameError(f"{labels.shape[0]} group labels for {pop.m} users")
        for g in np.unique(labels):
            mask = labels == g
            means[g.item()] = float(pop.weights[mask] @ per_user[mask] / pop.weights[mask].sum())
    return WelfareReport(user_side - cost, user_side, cost, utils, means)


def potential_from_scores(game: GameInstance, scores: np.ndarray, profile: StrategyProfile) -> float:
    terms = potential_terms(_mechanism(game), scores)
    return game.population.mean(terms) - game.total_cost(profile)


def potential(profile: StrategyProfile, game: GameInstance) -> float:
    """Potential of a BRM game: expected sum of rank-wise antiderivatives minus costs."""
    spec = _mechanism(game)
    if not spec.is_backward:
        raise MechanismError(f"{spec.kind} does not induce a potential game")
    return potential_from_scores(game, game.score_matrix(profile), profile)
