"""Brute-force ground truth for games with finite action sets.

Every joint profile is evaluated once (all creators' utilities and the
welfare come out of one score matrix), then each profile is checked against
every unilateral deviation. Profiles are visited in lexicographic order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from creatorgame.environments import make_tvn, unit_vectors
from creatorgame.mechanisms import MechanismSpec, PiecewiseConstantFn, rewards
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
from creatorgame.welfare import (
    potential_from_scores,
    utilities_from_scores,
    welfare_from_scores,
)

DEFAULT_BUDGET = 10**7
EXACT_TOL = 1e-12
SOFTMAX_TOL = 1e-9


class BudgetExceeded(GameError):
    pass


@dataclass
class EquilibriumReport:
    pnes: list[StrategyProfile]
    max_welfare: float
    argmax: list[StrategyProfile]
    ne_welfares: list[float]
    checks: int
    profiles: list[tuple] = field(default_factory=list, repr=False)
    utilities: np.ndarray | None = field(default=None, repr=False)
    welfare: np.ndarray | None = field(default=None, repr=False)
    potential: np.ndarray | None = field(default=None, repr=False)

    @property
    def ratio(self) -> float:
        """Worst equilibrium welfare over the optimum (nan without equilibria)."""
        if not self.pnes:
            return float("nan")
        if self.max_welfare == 0:
            return 1.0
        return min(self.ne_welfares) / self.max_welfare


def default_tolerance(spec: MechanismSpec | None) -> float:
    if spec is not None and spec.kind in ("m3-exposure", "m3-engagement"):
        return SOFTMAX_TOL
    return EXACT_TOL


def enumerate_pne(game: GameInstance, budget: int = DEFAULT_BUDGET,
                  tol: float | None = None) -> EquilibriumReport:
    """All pure Nash equilibria and the welfare maximizers of a finite game.

    A profile is an equilibrium iff no creator gains more than ``tol`` by a
    unilateral switch. ``budget`` caps the number of profile-deviation checks.
    """
    if not game.all_finite:
        raise GameError("enumeration needs finite action spaces")
    if game.mechanism is None:
        raise GameError("game has no mechanism attached")
    tol = default_tolerance(game.mechanism) if tol is None else tol
    sizes = [sp.size for sp in game.action_spaces]
    total = int(np.prod(sizes, dtype=np.int64))
    checks = total * sum(sizes)
    if checks > budget:
        raise BudgetExceeded(f"{checks} deviation checks exceed the budget of {budget}")

    profiles = list(itertools.product(*[range(s) for s in sizes]))
    n = game.n
    util = np.empty((total, n))
    welfare = np.empty(total)
    pot = np.empty(total) if game.mechanism.is_backward else None
    for k, acts in enumerate(profiles):
        prof = StrategyProfile(acts)
        scores = game.score_matrix(prof)
        util[k] = utilities_from_scores(game, scores, prof)
        welfare[k] = welfare_from_scores(game, scores, prof)
        if pot is not None:
            pot[k] = potential_from_scores(game, scores, prof)

    # mixed-radix index of each profile for O(1) deviation lookup
    strides = np.ones(n, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        strides[i] = strides[i + 1] * sizes[i + 1]

    pnes, ne_w = [], []
    for k, acts in enumerate(profiles):
        stable = True
        for i in range(n):
            base = k - acts[i] * strides[i]
            dev = util[base + np.arange(sizes[i]) * strides[i], i]
            if np.max(dev) > util[k, i] + tol:
                stable = False
                break
        if stable:
            pnes.append(StrategyProfile(acts))
            ne_w.append(float(welfare[k]))
    best = float(np.max(welfare))
    argmax = [StrategyProfile(profiles[k]) for k in np.flatnonzero(welfare == best)]
    return EquilibriumReport(pnes, best, argmax, ne_w, checks, profiles, util, welfare, pot)


def is_pne(game: GameInstance, profile: StrategyProfile, tol: float | None = None) -> bool:
    """Replay every unilateral deviation from ``profile`` directly."""
    tol = default_tolerance(game.mechanism) if tol is None else tol
    base = utilities_from_scores(game, game.score_matrix(profile), profile)
    for i, sp in enumerate(game.action_spaces):
        for a in range(sp.size):
            alt = profile.replace(i, a)
            u = utilities_from_scores(game, game.score_matrix(alt), alt)[i]
            if u > base[i] + tol:
                return False
    return True


# ---------------------------------------------------------------------------
# Trend-vs-Niche closed forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedForms:
    ne_welfare: float
    max_welfare: float

    @property
    def ratio(self) -> float:
        return self.ne_welfare / self.max_welfare


def tvn_welfare(n: int, r, q: int) -> float:
    """Mean-user welfare with ``q`` creators on the trend and the rest on distinct niches."""
    r = np.asarray(r, dtype=np.float64)
    K = int(np.count_nonzero(r))
    return ((n + 1) * float(np.sum(r[:min(K, q)])) + (n - q) * float(r[0])) / (2 * n)


def tvn_closed_forms(n: int, attention: AttentionWeights) -> ClosedForms:
    r = attention.r
    K = attention.K
    if K > n or K < 1:
        raise GameError("need 1 <= K <= n")
    ne = (n + 1) * float(np.sum(r[:K])) / (2 * n)
    best = max(tvn_welfare(n, r, q) for q in range(1, K + 1))
    return ClosedForms(ne, best)


# ---------------------------------------------------------------------------
# theorem checks
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        out = f"[{status}] {self.name}: {info}"
        if self.failures:
            out += " | " + "; ".join(self.failures)
        return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def verify_theorem1(n: int, attention: AttentionWeights, spec: MechanismSpec,
                    budget: int = DEFAULT_BUDGET, tol: float = 1e-9) -> VerificationReport:
    """Unique all-trend equilibrium and closed-form welfare on a TvN game."""
    game = make_tvn(n, attention).with_mechanism(spec)
    rep = enumerate_pne(game, budget)
    cf = tvn_closed_forms(n, attention)
    fails = []
    trend = StrategyProfile((0,) * n)
    if len(rep.pnes) != 1:
        fails.append(f"{len(rep.pnes)} equilibria found")
    elif rep.pnes[0] != trend:
        fails.append(f"equilibrium is {rep.pnes[0]}, expected all-trend")
    if rep.pnes and abs(rep.ne_welfares[0] - cf.ne_welfare) > tol:
        fails.append(f"NE welfare {rep.ne_welfares[0]} != closed form {cf.ne_welfare}")
    if abs(rep.max_welfare - cf.max_welfare) > tol:
        fails.append(f"max welfare {rep.max_welfare} != closed form {cf.max_welfare}")
    if not rep.ratio < 1:
        fails.append(f"welfare ratio {rep.ratio} is not below 1")
    details = dict(n=n, K=attention.K, mechanism=spec.kind, pnes=len(rep.pnes),
                   ne_welfare=rep.ne_welfares[0] if rep.pnes else float("nan"),
                   max_welfare=rep.max_welfare, ratio=rep.ratio)
    return VerificationReport(f"theorem1 n={n} K={attention.K} {spec.kind}", not fails, details, fails)


def corollary_mechanism(attention: AttentionWeights) -> MechanismSpec:
    """BRCM whose densities equal the attention weights."""
    return MechanismSpec.brcm(attention.r)


def verify_corollary1(n: int, attention: AttentionWeights, budget: int = DEFAULT_BUDGET,
                      tol: float = EXACT_TOL) -> VerificationReport:
    """Every equilibrium under the attention-matched BRCM is welfare optimal."""
    game = make_tvn(n, attention).with_mechanism(corollary_mechanism(attention))
    rep = enumerate_pne(game, budget)
    fails = []
    if not rep.pnes:
        fails.append("no equilibrium found")
    for p, w in zip(rep.pnes, rep.ne_welfares):
        if abs(w - rep.max_welfare) > tol:
            fails.append(f"{p} has welfare {w} < max {rep.max_welfare}")
    details = dict(n=n, K=attention.K, pnes=len(rep.pnes), max_welfare=rep.max_welfare,
                   min_ne_welfare=min(rep.ne_welfares) if rep.pnes else float("nan"))
    return VerificationReport(f"corollary1 n={n} K={attention.K}", not fails, details, fails)


# ---------------------------------------------------------------------------
# random instances for fuzzing
# ---------------------------------------------------------------------------


def random_brm(rng: np.random.Generator, n: int, max_pieces: int = 4) -> MechanismSpec:
    """A valid BRM: ordered piecewise-constant densities on a shared random grid.

    About a quarter of the draws are constant densities (BRCM), some with
    trailing zeros.
    """
    if rng.random() < 0.25:
        f = np.sort(rng.random(n))[::-1]
        f[0] = max(f[0], 0.05)
        f[rng.integers(1, n + 1):] = 0.0
        return MechanismSpec.brcm(f)
    pieces = int(rng.integers(1, max_pieces + 1))
    inner = np.sort(rng.random(pieces - 1))
    grid = np.unique(np.concatenate([[0.0], inner, [1.0]]))
    vals = np.sort(rng.random((n, grid.size - 1)), axis=0)[::-1]
    vals[0] = np.maximum(vals[0], 0.05)
    return MechanismSpec.brm([PiecewiseConstantFn(grid, v) for v in vals])


def random_attention(rng: np.random.Generator, n: int) -> AttentionWeights:
    r = np.sort(rng.random(n))[::-1]
    r[rng.integers(1, n + 1):] = 0.0
    return AttentionWeights(r / r[0])


def random_finite_game(rng: np.random.Generator, max_n: int = 5, max_actions: int = 6,
                       max_users: int = 8, mechanism: MechanismSpec | None = None) -> GameInstance:
    """Small random game with finite per-creator action sets and a random BRM."""
    n = int(rng.integers(1, max_n + 1))
    d = int(rng.integers(2, 5))
    m = int(rng.integers(1, max_users + 1))
    users = unit_vectors(rng, m, d)
    weights = rng.dirichlet(np.ones(m))
    weights /= weights.sum()
    spaces, costs = [], []
    for _ in range(n):
        spaces.append(ActionSpace.finite(unit_vectors(rng, int(rng.integers(1, max_actions + 1)), d)))
        if rng.random() < 0.5:
            costs.append(CostSpec.zero())
        else:
            costs.append(CostSpec.quadratic(float(rng.random()), unit_vectors(rng, 1, d)[0]))
    score_fn = ScoreFunctionSpec.shifted() if rng.random() < 0.5 else ScoreFunctionSpec.clipped(0.8, 0.1)
    return GameInstance(
        population=UserPopulation(users, weights=weights),
        action_spaces=tuple(spaces),
        costs=tuple(costs),
        score_fn=score_fn,
        attention=random_attention(rng, n),
        mechanism=random_brm(rng, n) if mechanism is None else mechanism,
    )


def random_profile(rng: np.random.Generator, game: GameInstance) -> StrategyProfile:
    return StrategyProfile(tuple(int(rng.integers(sp.size)) for sp in game.action_spaces))


@dataclass
class PotentialFuzzReport:
    games: int = 0
    deviations: int = 0
    max_gap: float = 0.0
    worst: dict = field(default_factory=dict)

    def passed(self, tol: float = 1e-10) -> bool:
        return self.max_gap <= tol


def fuzz_potential_exactness(games: int = 200, deviations: int = 50, seed: int = 0) -> PotentialFuzzReport:
    """Largest ``|delta u_i - delta P|`` over random unilateral deviations."""
    rng = np.random.Generator(np.random.Philox(seed))
    rep = PotentialFuzzReport()
    for _ in range(games):
        game = random_finite_game(rng)
        rep.games += 1
        for _ in range(deviations):
            prof = random_profile(rng, game)
            i = int(rng.integers(game.n))
            alt = prof.replace(i, int(rng.integers(game.action_spaces[i].size)))
            s0, s1 = game.score_matrix(prof), game.score_matrix(alt)
            du = utilities_from_scores(game, s1, alt)[i] - utilities_from_scores(game, s0, prof)[i]
            dp = potential_from_scores(game, s1, alt) - potential_from_scores(game, s0, prof)
            gap = abs(du - dp)
            rep.deviations += 1
            if gap > rep.max_gap:
                rep.max_gap = gap
                rep.worst = dict(profile=prof, deviation=alt, creator=i, du=du, dp=dp)
    return rep


# total exposure is a sum of softmax shares, so it equals 1 up to rounding
EXPOSURE_TOL = 1e-12


def exposure_total_gap(spec: MechanismSpec, samples: int = 1000, seed: int = 0, n: int = 5) -> float:
    """Largest ``|sum of rewards - 1|`` over random score profiles, ties included."""
    rng = np.random.Generator(np.random.Philox(seed))
    worst = 0.0
    for _ in range(samples):
        s = rng.random(n)
        if rng.random() < 0.3:
            s = np.round(s * 4) / 4
        worst = max(worst, abs(float(np.sum(rewards(spec, s))) - 1.0))
    return worst
