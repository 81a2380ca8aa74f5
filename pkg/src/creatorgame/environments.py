"""Game constructors: Trend-vs-Niche, clustered synthetic users, embedding files."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

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

# cluster index -> reporting group, for the default synthetic sizes
SYNTHETIC_GROUPS = {1: (0,), 2: (1, 2), 3: (3, 4, 5, 6, 7)}
SYNTHETIC_SIZES = (20, 10, 8, 5, 3, 3, 2, 1)


def env_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def unit_vectors(rng: np.random.Generator, k: int, d: int) -> np.ndarray:
    v = rng.standard_normal((k, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class ScenarioVariant:
    """``G1``: zero cost, everyone starts on the most popular action.
    ``G2``: quadratic cost around random centers, everyone starts at its center."""

    kind: str = "G1"
    lam: float | None = None

    def __post_init__(self):
        if self.kind not in ("G1", "G2"):
            raise GameError(f"unknown variant {self.kind!r}")
        if self.kind == "G2" and self.lam is not None and not self.lam > 0:
            raise GameError("G2 needs a positive cost weight")


# ---------------------------------------------------------------------------
# Trend vs Niche
# ---------------------------------------------------------------------------


def make_tvn(n: int, attention: AttentionWeights) -> GameInstance:
    """Trend-vs-Niche game in R^n with ``2n`` equally weighted users.

    Users: ``n + 1`` copies of ``e_1`` and one of each ``e_2 .. e_n``. Every
    creator picks a basis vector (index ``k`` means ``e_{k+1}``), has zero
    cost and is scored by the raw inner product. No mechanism is attached.
    """
    if n < 2:
        raise GameError("TvN needs at least two creators")
    if attention.n != n:
        raise GameError(f"attention has {attention.n} entries for {n} creators")
    basis = np.eye(n)
    users = np.vstack([np.repeat(basis[:1], n + 1, axis=0), basis[1:]])
    space = ActionSpace.finite(basis)
    return GameInstance(
        population=UserPopulation(users),
        action_spaces=(space,) * n,
        costs=(CostSpec.zero(),) * n,
        score_fn=ScoreFunctionSpec.raw(),
        attention=attention,
        initial_profile=StrategyProfile((0,) * n),
    )


# ---------------------------------------------------------------------------
# synthetic clusters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    d: int = 10
    v: float = 0.3
    sizes: tuple[int, ...] = SYNTHETIC_SIZES
    n: int = 10
    seed: int = 0
    m: int | None = None  # optional declared total, checked against sizes

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(z) for z in self.sizes))
        if self.d < 2:
            raise GameError("synthetic games need d >= 2")
        if not self.sizes or any(z <= 0 for z in self.sizes):
            raise GameError("every cluster needs at least one user")
        if self.m is not None and self.m != sum(self.sizes):
            raise GameError(f"cluster sizes sum to {sum(self.sizes)}, declared m={self.m}")
        if self.v < 0 or self.n < 1:
            raise GameError("need v >= 0 and n >= 1")

    @property
    def Y(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True, eq=False)
class SyntheticPopulation:
    centers: np.ndarray
    users: np.ndarray
    labels: np.ndarray


def sample_population(spec: SyntheticSpec, rng: np.random.Generator) -> SyntheticPopulation:
    centers = unit_vectors(rng, spec.Y, spec.d)
    users, labels = [], []
    for y, (c, z) in enumerate(zip(centers, spec.sizes)):
        raw = c + spec.v * rng.standard_normal((z, spec.d))
        users.append(raw / np.linalg.norm(raw, axis=1, keepdims=True))
        labels.extend([y] * z)
    return SyntheticPopulation(centers, np.vstack(users), np.array(labels))


def make_synthetic(spec: SyntheticSpec, variant: ScenarioVariant = ScenarioVariant()) -> GameInstance:
    """Clustered users on the sphere, creators on the sphere, shifted scores.

    All randomness (centers, users, then G2 cost centers) comes from one
    stream seeded by ``spec.seed``.
    """
    rng = env_rng(spec.seed)
    pop = sample_population(spec, rng)
    n = spec.n
    space = ActionSpace.sphere(spec.d)
    if variant.kind == "G1":
        largest = int(np.argmax(spec.sizes))
        start = pop.centers[largest]
        costs = (CostSpec.zero(),) * n
        init = StrategyProfile(tuple(start.copy() for _ in range(n)))
    else:
        lam = 0.5 if variant.lam is None else variant.lam
        centers = unit_vectors(rng, n, spec.d)
        costs = tuple(CostSpec.quadratic(lam, c) for c in centers)
        init = StrategyProfile(tuple(c.copy() for c in centers))
    return GameInstance(
        population=UserPopulation(pop.users, group_labels=pop.labels),
        action_spaces=(space,) * n,
        costs=costs,
        score_fn=ScoreFunctionSpec.shifted(),
        attention=dcg5(n),
        initial_profile=init,
    )


def synthetic_centers(spec: SyntheticSpec) -> np.ndarray:
    """Cluster centers for ``spec`` (same draws as :func:`make_synthetic`)."""
    return sample_population(spec, env_rng(spec.seed)).centers


def reporting_groups(labels: np.ndarray, mapping: dict = SYNTHETIC_GROUPS) -> np.ndarray:
    """Map per-cluster labels onto reporting groups (majority, minority, niche)."""
    out = np.zeros(len(labels), dtype=int)
    for g, clusters in mapping.items():
        out[np.isin(labels, clusters)] = g
    return out


# ---------------------------------------------------------------------------
# embedding files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingIngestSpec:
    user_file: str
    item_file: str
    d: int | None = None
    scale: float = 1 / 2.5
    offset: float = -1.0
    max_high_ratings: float = 500
    rating_cutoff: float = 4.0
    n: int = 10
    seed: int = 0


def read_embeddings(path, d: int | None = None) -> tuple[list[str], np.ndarray]:
    """CSV rows of ``id, v_1, ..., v_d``; a non-numeric first row is a header."""
    ids, rows = [], []
    with Path(path).open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vec = [float(c) for c in row[1:]]
            except ValueError:
                if lineno == 1 and not rows:
                    continue
                raise GameError(f"{path}:{lineno}: malformed embedding row")
            if not vec:
                raise GameError(f"{path}:{lineno}: row has no embedding values")
            ids.append(row[0].strip())
            rows.append(vec)
    if not rows:
        raise GameError(f"{path}: no embeddings found")
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise GameError(f"{path}: rows have differing dimensions {sorted(width)}")
    arr = np.array(rows)
    if d is not None and arr.shape[1] != d:
        raise GameError(f"{path}: dimension {arr.shape[1]} != declared {d}")
    return ids, arr


def ingest_embeddings(spec: EmbeddingIngestSpec, variant: ScenarioVariant = ScenarioVariant(),
                      n: int | None = None) -> GameInstance:
    """Build a finite-action game from user and item embedding files.

    Users and items whose number of predicted ratings (raw inner products)
    strictly above ``rating_cutoff`` exceeds ``max_high_ratings`` are dropped;
    both counts are taken on the unfiltered matrix.
    """
    n = spec.n if n is None else n
    _, users = read_embeddings(spec.user_file, spec.d)
    _, items = read_embeddings(spec.item_file, spec.d)
    if users.shape[1] != items.shape[1]:
        raise GameError(f"user dimension {users.shape[1]} != item dimension {items.shape[1]}")
    high = (users @ items.T) > spec.rating_cutoff
    keep_u = high.sum(axis=1) <= spec.max_high_ratings
    keep_i = high.sum(axis=0) <= spec.max_high_ratings
    users, items = users[keep_u], items[keep_i]
    if users.shape[0] == 0 or items.shape[0] == 0:
        raise GameError("filter removed every user or every item")

    score_fn = ScoreFunctionSpec.clipped(spec.scale, spec.offset)
    space = ActionSpace.finite(items)
    if variant.kind == "G1":
        popular = int(np.argmax(score_fn.from_inner(items @ users.T).mean(axis=1)))
        costs = (CostSpec.zero(),) * n
        init = StrategyProfile((popular,) * n)
    else:
        lam = 10.0 if variant.lam is None else variant.lam
        picks = env_rng(spec.seed).integers(items.shape[0], size=n)
        costs = tuple(CostSpec.quadratic(lam, items[k]) for k in picks)
        init = StrategyProfile(tuple(int(k) for k in picks))
    return GameInstance(
        population=UserPopulation(users),
        action_spaces=(space,) * n,
        costs=costs,
        score_fn=score_fn,
        attention=dcg5(n),
        initial_profile=init,
    )
