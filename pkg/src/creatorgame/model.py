"""Game instances: users, creator action spaces, costs, scores and attention.

A game is a finite, weighted user population, one action space and one cost
per creator, a matching-score function, a reward mechanism and a vector of
attention weights over ranking positions. Everything here is immutable once
built; numpy arrays are stored read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np

if TYPE_CHECKING:
    from creatorgame.mechanisms import MechanismSpec


class GameError(ValueError):
    """Raised for inconsistent game data (shapes, domains, invalid profiles)."""


def _frozen(a: Any, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# users, actions, costs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class UserPopulation:
    """Discrete user distribution. ``weights`` default to uniform."""

    users: np.ndarray
    weights: np.ndarray | None = None
    group_labels: np.ndarray | None = None

    def __post_init__(self):
        users = np.atleast_2d(np.asarray(self.users, dtype=np.float64))
        if users.ndim != 2 or users.shape[0] == 0:
            raise GameError("population needs at least one d-dimensional user")
        m = users.shape[0]
        if self.weights is None:
            weights = np.full(m, 1.0 / m)
        else:
            weights = np.asarray(self.weights, dtype=np.float64)
            if weights.shape != (m,):
                raise GameError("one weight per user required")
            if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
                raise GameError("user weights must be nonnegative and sum to 1")
        object.__setattr__(self, "users", _frozen(users))
        object.__setattr__(self, "weights", _frozen(weights))
        if self.group_labels is not None:
            labels = np.asarray(self.group_labels)
            if labels.shape != (m,):
                raise GameError("one group label per user required")
            object.__setattr__(self, "group_labels", _frozen(labels, labels.dtype))

    @property
    def m(self) -> int:
        return self.users.shape[0]

    @property
    def d(self) -> int:
        return self.users.shape[1]

    def mean(self, values: np.ndarray) -> float:
        """Weighted mean over users."""
        return float(self.weights @ np.asarray(values, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class ActionSpace:
    """Either the unit sphere in R^d or a finite list of d-vectors."""

    kind: str
    d: int
    vectors: np.ndarray | None = None

    @classmethod
    def sphere(cls, d: int) -> "ActionSpace":
        if d < 1:
            raise GameError("dimension must be positive")
        return cls("sphere", int(d))

    @classmethod
    def finite(cls, vectors: Sequence[Sequence[float]]) -> "ActionSpace":
        vecs = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        if vecs.shape[0] == 0 or vecs.ndim != 2:
            raise GameError("finite action set must be non-empty")
        return cls("finite", vecs.shape[1], _frozen(vecs))

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def size(self) -> int:
        if not self.is_finite:
            raise GameError("continuous action space has no finite size")
        return self.vectors.shape[0]

    def vector(self, action) -> np.ndarray:
        if self.is_finite:
            return self.vectors[self._index(action)]
        return np.asarray(action, dtype=np.float64)

    def _index(self, action) -> int:
        if isinstance(action, (int, np.integer)) and 0 <= action < self.size:
            return int(action)
        raise GameError(f"{action!r} is not an index into a set of {self.size}")

    def contains(self, action, atol: float = 1e-9) -> bool:
        if self.is_finite:
            return isinstance(action, (int, np.integer)) and 0 <= action < self.size
        v = np.asarray(action, dtype=np.float64)
        return v.shape == (self.d,) and abs(np.linalg.norm(v) - 1.0) <= atol

    def project(self, point: np.ndarray):
        """Nearest feasible action: renormalize, or nearest member (lowest index on ties)."""
        point = np.asarray(point, dtype=np.float64)
        if self.is_finite:
            dist = np.sum((self.vectors - point) ** 2, axis=1)
            return int(np.argmin(dist))
        norm = np.linalg.norm(point)
        if norm == 0.0:
            point = point + np.finfo(float).eps
            norm = np.linalg.norm(point)
        return point / norm


@dataclass(frozen=True, eq=False)
class CostSpec:
    """Zero cost, or ``lam * ||s - center||^2``."""

    lam: float = 0.0
    center: np.ndarray | None = None

    @classmethod
    def zero(cls) -> "CostSpec":
        return cls()

    @classmethod
    def quadratic(cls, lam: float, center) -> "CostSpec":
        if lam < 0:
            raise GameError("cost weight must be nonnegative")
        return cls(float(lam), _frozen(center))

    @property
    def kind(self) -> str:
        return "zero" if self.center is None else "quadratic"

    def __call__(self, vector: np.ndarray) -> float:
        if self.center is None:
            return 0.0
        diff = np.asarray(vector, dtype=np.float64) - self.center
        return self.lam * float(diff @ diff)


# ---------------------------------------------------------------------------
# scores
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreFunctionSpec:
    """Maps the inner product of action and user to [0, 1].

    ``raw``: the inner product itself; ``shifted``: ``(ip + 1) / 2``;
    ``clipped``: ``ip * scale + offset``. Every result is clamped to [0, 1].
    """

    kind: str = "shifted"
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("raw", "shifted", "clipped"):
            raise GameError(f"unknown score function {self.kind!r}")

    @classmethod
    def raw(cls) -> "ScoreFunctionSpec":
        return cls("raw")

    @classmethod
    def shifted(cls) -> "ScoreFunctionSpec":
        return cls("shifted")

    @classmethod
    def clipped(cls, scale: float = 1 / 2.5, offset: float = -1.0) -> "ScoreFunctionSpec":
        return cls("clipped", float(scale), float(offset))

    def from_inner(self, ip):
        if self.kind == "raw":
            out = ip
        elif self.kind == "shifted":
            out = 0.5 * (ip + 1.0)
        else:
            out = ip * self.scale + self.offset
        return np.clip(out, 0.0, 1.0)


def score(action, user, spec: ScoreFunctionSpec) -> float:
    """Matching score of one action vector for one user."""
    a = np.asarray(action, dtype=np.float64)
    x = np.asarray(user, dtype=np.float64)
    if a.shape != x.shape or a.ndim != 1:
        raise GameError(f"dimension mismatch: action {a.shape} vs user {x.shape}")
    return float(spec.from_inner(float(a @ x)))


@dataclass(frozen=True, eq=False)
class ScoreProfile:
    """One user's scores with their descending order and tie groups."""

    scores: np.ndarray
    order: tuple[int, ...]
    tie_groups: tuple[tuple[int, ...], ...]

    @classmethod
    def from_scores(cls, scores) -> "ScoreProfile":
        s = np.asarray(scores, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise GameError("score profile needs a non-empty vector")
        if not np.all(np.isfinite(s)):
            raise GameError("scores must be finite")
        order = tuple(int(i) for i in np.argsort(-s, kind="stable"))
        groups: list[list[int]] = []
        for i in order:
            if groups and s[groups[-1][0]] == s[i]:
                groups[-1].append(i)
            else:
                groups.append([i])
        return cls(_frozen(s), order, tuple(tuple(g) for g in groups))

    @property
    def n(self) -> int:
        return self.scores.size


# ---------------------------------------------------------------------------
# attention weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AttentionWeights:
    """Nonincreasing user attention per ranking position, entries in [0, 1]."""

    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.float64)
        if r.ndim != 1 or r.size == 0:
            raise GameError("attention weights must be a non-empty vector")
        if np.any(r < 0) or np.any(r > 1) or np.any(np.diff(r) > 0):
            raise GameError("attention weights must be nonincreasing within [0, 1]")
        object.__setattr__(self, "r", _frozen(r))

    @property
    def n(self) -> int:
        return self.r.size

    @property
    def K(self) -> int:
        return int(np.count_nonzero(self.r))

    @classmethod
    def top_k(cls, n: int, K: int, values=None) -> "AttentionWeights":
        r = np.zeros(n)
        r[:K] = 1.0 if values is None else np.asarray(values, dtype=np.float64)[:K]
        return cls(r)

    @classmethod
    def dcg(cls, n: int, K: int = 5) -> "AttentionWeights":
        """``1 / log2(k + 1)`` on the first ``K`` positions, zero after."""
        r = np.zeros(n)
        k = min(K, n)
        r[:k] = 1.0 / np.log2(np.arange(2, k + 2))
        return cls(r)


def dcg5(n: int) -> AttentionWeights:
    return AttentionWeights.dcg(n, 5)


@dataclass(frozen=True, eq=False)
class PerturbedAttention:
    r: np.ndarray
    nonincreasing: bool


def perturbed_attention_weights(attention: AttentionWeights, mixture) -> PerturbedAttention:
    """Expected attention per relevance rank under random position swaps.

    ``mixture`` is a list of ``(perm, prob)`` where ``perm[p]`` is the
    relevance rank (0-based) displayed at position ``p``. The result is not
    validated as monotone since promotions can break that.
    """
    r = attention.r
    n = r.size
    total = sum(p for _, p in mixture)
    if any(p < 0 for _, p in mixture) or abs(total - 1.0) > 1e-12:
        raise GameError("mixture probabilities must be nonnegative and sum to 1")
    out = np.zeros(n)
    for perm, prob in mixture:
        perm = np.asarray(perm, dtype=int)
        if sorted(perm.tolist()) != list(range(n)):
            raise GameError(f"{perm.tolist()} is not a permutation of {n} ranks")
        out[perm] += prob * r
    return PerturbedAttention(_frozen(out), bool(np.all(np.diff(out) <= 0)))


# ---------------------------------------------------------------------------
# profiles and games
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    """One action per creator: an index (finite space) or a unit vector."""

    actions: tuple

    def __post_init__(self):
        acts = []
        for a in self.actions:
            if isinstance(a, (int, np.integer)):
                acts.append(int(a))
            else:
                acts.append(_frozen(a))
        object.__setattr__(self, "actions", tuple(acts))

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, i):
        return self.actions[i]

    def replace(self, i: int, action) -> "StrategyProfile":
        acts = list(self.actions)
        acts[i] = action
        return StrategyProfile(tuple(acts))

    def key(self) -> tuple:
        """Hashable form, exact for both action kinds."""
        return tuple(a if isinstance(a, int) else a.tobytes() for a in self.actions)

    def __eq__(self, other) -> bool:
        return isinstance(other, StrategyProfile) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        parts = [str(a) if isinstance(a, int) else np.array2string(a, precision=3)
                 for a in self.actions]
        return f"StrategyProfile({', '.join(parts)})"


@dataclass(frozen=True, eq=False)
class GameInstance:
    """The full game tuple; ``mechanism`` may be attached later."""

    population: UserPopulation
    action_spaces: tuple[ActionSpace, ...]
    costs: tuple[CostSpec, ...]
    score_fn: ScoreFunctionSpec
    attention: AttentionWeights
    mechanism: "MechanismSpec | None" = None
    initial_profile: StrategyProfile | None = None

    def __post_init__(self):
        object.__setattr__(self, "action_spaces", tuple(self.action_spaces))
        object.__setattr__(self, "costs", tuple(self.costs))
        n = len(self.action_spaces)
        d = self.population.d
        if n < 1:
            raise GameError("a game needs at least one creator")
        if len(self.costs) != n:
            raise GameError("one cost per creator required")
        if self.attention.n != n:
            raise GameError(f"attention has {self.attention.n} weights for {n} creators")
        for sp in self.action_spaces:
            if sp.d != d:
                raise GameError(f"action dimension {sp.d} != user dimension {d}")
        for c in self.costs:
            if c.center is not None and c.center.shape != (d,):
                raise GameError("cost center dimension mismatch")
        if self.initial_profile is not None:
            self.validate(self.initial_profile)

    @property
    def n(self) -> int:
        return len(self.action_spaces)

    @property
    def d(self) -> int:
        return self.population.d

    @property
    def m(self) -> int:
        return self.population.m

    def with_mechanism(self, mechanism: "MechanismSpec") -> "GameInstance":
        return replace(self, mechanism=mechanism)

    def with_initial_profile(self, profile: StrategyProfile) -> "GameInstance":
        return replace(self, initial_profile=profile)

    @property
    def all_finite(self) -> bool:
        return all(sp.is_finite for sp in self.action_spaces)

    def validate(self, profile: StrategyProfile) -> None:
        if len(profile) != self.n:
            raise GameError(f"profile has {len(profile)} actions for {self.n} creators")
        for i, (sp, a) in enumerate(zip(self.action_spaces, profile.actions)):
            if not sp.contains(a):
                raise GameError(f"action of creator {i} is outside its action space")

    # score tables for finite spaces, keyed by space identity
    @cached_property
    def _tables(self) -> dict[int, np.ndarray]:
        tables: dict[int, np.ndarray] = {}
        for sp in self.action_spaces:
            if sp.is_finite and id(sp) not in tables:
                t = self.score_fn.from_inner(sp.vectors @ self.population.users.T)
                t.setflags(write=False)
                tables[id(sp)] = t
        return tables

    def score_column(self, i: int, action) -> np.ndarray:
        """Scores of creator ``i`` playing ``action`` for every user."""
        sp = self.action_spaces[i]
        if sp.is_finite:
            return self._tables[id(sp)][sp._index(action)]
        return self.score_fn.from_inner(self.population.users @ np.asarray(action, dtype=np.float64))

    def score_matrix(self, profile: StrategyProfile) -> np.ndarray:
        """``(m, n)`` matrix of every user's score for every creator."""
        out = np.empty((self.m, self.n))
        for i, a in enumerate(profile.actions):
            out[:, i] = self.score_column(i, a)
        return out

    def action_vector(self, i: int, action) -> np.ndarray:
        return self.action_spaces[i].vector(action)

    def cost(self, i: int, action) -> float:
        return self.costs[i](self.action_vector(i, action))

    def total_cost(self, profile: StrategyProfile) -> float:
        return sum(self.cost(i, a) for i, a in enumerate(profile.actions))


def score_profile(profile: StrategyProfile, user, game: GameInstance) -> ScoreProfile:
    """Scores of every creator for one user, ranked."""
    x = np.asarray(user, dtype=np.float64)
    s = [score(game.action_vector(i, a), x, game.score_fn) for i, a in enumerate(profile.actions)]
    return ScoreProfile.from_scores(s)
