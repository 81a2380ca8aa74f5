"""Zeroth-order coordinate search for constant-density backward mechanisms.

Each epoch nudges one coordinate of ``f`` by ``+-mechanism_step``, projects
onto ``{f_1 >= ... >= f_n >= 0}``, lets creators respond for ``inner_steps``
better-response steps under the nudged mechanism, and keeps the nudge only
if welfare strictly increased over the epoch. The creators' profile always
carries over to the next epoch.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from creatorgame.dynamics import DynamicsConfig, Trajectory, make_rng, sim_stra
from creatorgame.mechanisms import MechanismError, MechanismSpec
from creatorgame.model import GameInstance, StrategyProfile
from creatorgame.welfare import social_welfare


def _pool_adjacent_violators(y: np.ndarray) -> np.ndarray:
    """Least-squares nonincreasing fit with unit weights."""
    means: list[float] = []
    sizes: list[int] = []
    for v in y.tolist():
        means.append(v)
        sizes.append(1)
        while len(means) > 1 and means[-2] < means[-1]:
            m2, s2 = means.pop(), sizes.pop()
            m1, s1 = means.pop(), sizes.pop()
            means.append((m1 * s1 + m2 * s2) / (s1 + s2))
            sizes.append(s1 + s2)
    return np.repeat(means, sizes)


def project_to_polytope(f) -> np.ndarray:
    """Euclidean projection onto ``{f_1 >= ... >= f_n >= 0}``.

    Isotonic (nonincreasing) regression followed by clipping at zero; the
    clipped fit is still nonincreasing and is the exact projection.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or not np.all(np.isfinite(f)):
        raise MechanismError("projection needs a finite vector")
    return np.maximum(_pool_adjacent_violators(f), 0.0)


def in_polytope(f, tol: float = 0.0) -> bool:
    f = np.asarray(f, dtype=np.float64)
    return bool(np.all(f >= -tol) and np.all(np.diff(f) <= tol))


def initial_f(n: int, K: int = 5) -> np.ndarray:
    """``(1, ..., 1, 0, ..., 0)`` with ``K`` leading ones."""
    f = np.zeros(n)
    f[:K] = 1.0
    return f


@dataclass(frozen=True)
class OptimizerConfig:
    epochs: int = 200
    inner_steps: int = 5
    mechanism_step: float = 0.1
    creator_step: float = 0.1
    seed: int = 0
    f0: tuple[float, ...] | None = None
    record_every: int = 1

    def __post_init__(self):
        if self.epochs < 0 or self.inner_steps < 0:
            raise MechanismError("epochs and inner_steps must be nonnegative")
        if self.f0 is not None and not in_polytope(self.f0):
            raise MechanismError(f"initial f {list(self.f0)} is infeasible")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    coordinate: int
    sign: int
    accepted: bool
    welfare: float
    f: tuple[float, ...]


@dataclass
class OptimizerResult:
    f: np.ndarray
    profile: StrategyProfile
    log: list[EpochRecord] = field(default_factory=list)
    trajectory: Trajectory = field(default_factory=Trajectory)
    initial_welfare: float = 0.0
    best_f: np.ndarray | None = None
    best_welfare: float = -np.inf

    @property
    def welfare(self) -> float:
        return self.log[-1].welfare if self.log else self.initial_welfare

    def log_header(self) -> list[str]:
        return ["epoch", "coordinate", "sign", "accepted", "welfare"] + [f"f{i}" for i in range(self.f.size)]

    def log_rows(self):
        for r in self.log:
            yield [r.epoch, r.coordinate, r.sign, int(r.accepted), repr(r.welfare)] + [repr(x) for x in r.f]

    def log_to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.log_header())
            w.writerows(self.log_rows())


def optimize_brcm(game: GameInstance, init_profile: StrategyProfile,
                  cfg: OptimizerConfig) -> OptimizerResult:
    """Search the constant-density family for a welfare-improving mechanism.

    Uses ``cfg.f0`` as the start, or the game's attached ``brcm`` vector when
    ``f0`` is unset. Draw order per epoch: coordinate, sign, then the inner
    dynamics' draws, all from one stream seeded by ``cfg.seed``.
    """
    if cfg.f0 is not None:
        f = np.array(cfg.f0, dtype=np.float64)
    elif game.mechanism is not None and game.mechanism.kind == "brcm":
        f = np.array(game.mechanism.f)
    else:
        raise MechanismError("optimize_brcm needs f0 or a brcm mechanism on the game")
    if f.size != game.n:
        raise MechanismError(f"f has {f.size} entries for {game.n} creators")
    game.validate(init_profile)

    rng = make_rng(cfg.seed)
    inner = DynamicsConfig(horizon=cfg.inner_steps, step=cfg.creator_step,
                           record_every=1)
    profile = init_profile
    welfare = social_welfare(profile, game, with_utilities=False).total_welfare
    res = OptimizerResult(f=f.copy(), profile=profile, initial_welfare=welfare,
                          best_f=f.copy(), best_welfare=welfare)
    first = sim_stra(game.with_mechanism(MechanismSpec.brcm(f)), profile,
                     DynamicsConfig(horizon=0))[1].steps[0]
    res.trajectory.steps.append(first)
    clock = 0
    for epoch in range(cfg.epochs):
        i = int(rng.integers(game.n))
        sign = 1 if rng.random() < 0.5 else -1
        trial = f.copy()
        trial[i] += sign * cfg.mechanism_step
        trial = project_to_polytope(trial)
        g = game.with_mechanism(MechanismSpec.brcm(trial))
        profile, traj = sim_stra(g, profile, inner, rng=rng)
        new_welfare = traj.steps[-1].welfare
        accepted = new_welfare > welfare
        if accepted:
            f = trial
        welfare = new_welfare
        for p in traj.steps[1:]:
            t = clock + p.t
            if t % cfg.record_every == 0:
                res.trajectory.steps.append(type(p)(t, p.profile, p.welfare, p.potential,
                                                    p.utilities, res.trajectory.accepted_moves + p.accepted))
        clock += cfg.inner_steps
        res.trajectory.accepted_moves += traj.accepted_moves
        res.log.append(EpochRecord(epoch, i, sign, bool(accepted), welfare, tuple(f.tolist())))
        if welfare > res.best_welfare:
            res.best_welfare = welfare
            res.best_f = f.copy()
    res.f = f
    res.profile = profile
    return res
