"""Reward mechanisms: how a user's score profile becomes creator rewards.

Five kinds are supported:

``m3-zero``
    every creator is paid its own score.
``m3-exposure``
    softmax (temperature ``beta``) over the top ``K`` ranks.
``m3-engagement``
    exposure share times ``beta * log sum_{top K} exp(score / beta)``.
``brm``
    backward rewards from ordered piecewise-constant densities: the creator
    at rank ``k`` collects ``sum_{j >= k} integral_{s_(j+1)}^{s_(j)} f_j``.
``brcm``
    the constant-density special case, parameterized by ``f_1 >= ... >= f_n >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from creatorgame import kernels
from creatorgame.model import GameError, ScoreProfile

KINDS = ("m3-zero", "m3-exposure", "m3-engagement", "brm", "brcm")

_ORDER_TOL = 1e-12


class MechanismError(GameError):
    pass


@dataclass(frozen=True, eq=False)
class PiecewiseConstantFn:
    """Nonnegative step function on [0, 1].

    ``breakpoints`` run strictly increasing from 0 to 1; ``values[j]`` holds on
    ``[breakpoints[j], breakpoints[j + 1])``.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if b.ndim != 1 or b.size < 2 or b[0] != 0.0 or b[-1] != 1.0:
            raise MechanismError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(b) <= 0):
            raise MechanismError("breakpoints must be strictly increasing")
        if v.shape != (b.size - 1,):
            raise MechanismError("one value per interval required")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise MechanismError("density values must be finite and nonnegative")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, c: float) -> "PiecewiseConstantFn":
        return cls([0.0, 1.0], [c])

    def __call__(self, t: float) -> float:
        j = int(np.clip(np.searchsorted(self.breakpoints, t, side="right") - 1,
                        0, self.values.size - 1))
        return float(self.values[j])

    def on_grid(self, grid: np.ndarray) -> np.ndarray:
        """Values on every interval of a refinement ``grid`` of the breakpoints."""
        mids = 0.5 * (grid[:-1] + grid[1:])
        j = np.searchsorted(self.breakpoints, mids, side="right") - 1
        return self.values[j]

    def integral(self, a: float, b: float) -> float:
        """Exact integral over ``[a, b]`` (signed if ``b < a``)."""
        if b < a:
            return -self.integral(b, a)
        lo = np.clip(self.breakpoints[:-1], a, b)
        hi = np.clip(self.breakpoints[1:], a, b)
        return float(np.sum(self.values * (hi - lo)))

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class MechanismSpec:
    """A reward mechanism. Build with the classmethods, not directly."""

    kind: str
    K: int | None = None
    beta: float | None = None
    densities: tuple[PiecewiseConstantFn, ...] = ()
    f: np.ndarray | None = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def m3_zero(cls) -> "MechanismSpec":
        return cls("m3-zero")

    @classmethod
    def exposure(cls, K: int, beta: float) -> "MechanismSpec":
        _check_softmax(K, beta)
        return cls("m3-exposure", K=int(K), beta=float(beta))

    @classmethod
    def engagement(cls, K: int, beta: float) -> "MechanismSpec":
        _check_softmax(K, beta)
        return cls("m3-engagement", K=int(K), beta=float(beta))

    @classmethod
    def brm(cls, densities: Sequence[PiecewiseConstantFn], validate: bool = True) -> "MechanismSpec":
        """BRM from one density per rank.

        ``validate=False`` skips the ordering checks, which is only useful for
        building deliberately broken mechanisms in tests.
        """
        dens = tuple(densities)
        if not dens:
            raise MechanismError("a BRM needs at least one density")
        spec = cls("brm", densities=dens)
        if validate:
            grid, values = spec.grid_values
            if np.any(values[0] <= 0):
                raise MechanismError("the top-rank density must be positive everywhere")
            if np.any(np.diff(values, axis=0) > 0):
                raise MechanismError("densities must be ordered f_1 >= f_2 >= ... >= f_n")
        return spec

    @classmethod
    def brcm(cls, f: Sequence[float], validate: bool = True) -> "MechanismSpec":
        arr = np.array(f, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise MechanismError("brcm needs a non-empty vector")
        if validate and (np.any(arr < 0) or np.any(np.diff(arr) > 0) or not np.all(np.isfinite(arr))):
            raise MechanismError(f"{arr.tolist()} is outside {{f_1 >= ... >= f_n >= 0}}")
        arr.setflags(write=False)
        return cls("brcm", f=arr)

    # -- views --------------------------------------------------------------

    @property
    def is_backward(self) -> bool:
        return self.kind in ("brm", "brcm")

    @property
    def n(self) -> int | None:
        if self.kind == "brm":
            return len(self.densities)
        if self.kind == "brcm":
            return self.f.size
        return None

    @cached_property
    def grid_values(self) -> tuple[np.ndarray, np.ndarray]:
        """Common breakpoint grid and the ``(n, p)`` density table on it."""
        if self.kind == "brcm":
            return np.array([0.0, 1.0]), self.f.reshape(-1, 1).copy()
        if self.kind != "brm":
            raise MechanismError(f"{self.kind} has no densities")
        grid = np.unique(np.concatenate([fn.breakpoints for fn in self.densities]))
        values = np.vstack([fn.on_grid(grid) for fn in self.densities])
        return grid, values

    def density(self, k: int) -> PiecewiseConstantFn:
        """Density of rank ``k`` (0-based)."""
        if self.kind == "brcm":
            return PiecewiseConstantFn.constant(float(self.f[k]))
        return self.densities[k]

    def check_size(self, n: int) -> None:
        if self.is_backward and self.n != n:
            raise MechanismError(f"mechanism is defined for {self.n} creators, game has {n}")
        if self.K is not None and self.K > n:
            raise MechanismError(f"K={self.K} exceeds the {n} creators")

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        if self.kind in ("m3-exposure", "m3-engagement"):
            d.update(K=self.K, beta=self.beta)
        elif self.kind == "brcm":
            d["f"] = self.f.tolist()
        elif self.kind == "brm":
            d["densities"] = [fn.to_dict() for fn in self.densities]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MechanismSpec":
        kind = d.get("kind")
        if kind == "m3-zero":
            return cls.m3_zero()
        if kind == "m3-exposure":
            return cls.exposure(d["K"], d["beta"])
        if kind == "m3-engagement":
            return cls.engagement(d["K"], d["beta"])
        if kind == "brcm":
            return cls.brcm(d["f"])
        if kind == "brm":
            return cls.brm([PiecewiseConstantFn(x["breakpoints"], x["values"]) for x in d["densities"]])
        raise MechanismError(f"unknown mechanism kind {kind!r}")

    def __repr__(self) -> str:
        return f"MechanismSpec({self.to_dict()})"


def _check_softmax(K, beta):
    if int(K) < 1:
        raise MechanismError("K must be at least 1")
    if not beta > 0:
        raise MechanismError("beta must be positive")


def shapley_mediator(n: int) -> MechanismSpec:
    """BRCM with ``f = (1, 1/2, ..., 1/n)``; total reward equals the top score."""
    if n < 1:
        raise MechanismError("n must be at least 1")
    return MechanismSpec.brcm(1.0 / np.arange(1, n + 1))


# ---------------------------------------------------------------------------
# reward evaluation
# ---------------------------------------------------------------------------


def reward_matrix(spec: MechanismSpec, scores: np.ndarray) -> np.ndarray:
    """Rewards for an ``(m, n)`` score matrix, one row per user."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise MechanismError("score matrix must be 2-D")
    if not np.all(np.isfinite(scores)):
        raise MechanismError("non-finite score")
    spec.check_size(scores.shape[1])
    if spec.kind == "m3-zero":
        return scores.copy()
    if spec.kind in ("m3-exposure", "m3-engagement"):
        return kernels.topk_softmax_rewards(scores, spec.K, spec.beta, spec.kind == "m3-engagement")
    grid, values = spec.grid_values
    return kernels.brm_rewards(scores, grid, values)


def rewards(spec: MechanismSpec, sp: ScoreProfile | Sequence[float]) -> np.ndarray:
    """Reward of every creator for one user's scores."""
    s = sp.scores if isinstance(sp, ScoreProfile) else np.asarray(sp, dtype=np.float64)
    return reward_matrix(spec, s[None, :])[0]


def potential_terms(spec: MechanismSpec, scores: np.ndarray) -> np.ndarray:
    """Per-user ``sum_k F_k(s_(k))`` with ``F_k`` the antiderivative of ``f_k``."""
    if not spec.is_backward:
        raise MechanismError(f"{spec.kind} has no potential function")
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    spec.check_size(scores.shape[1])
    grid, values = spec.grid_values
    return kernels.brm_potential(scores, grid, values)


# ---------------------------------------------------------------------------
# axiom checks
# ---------------------------------------------------------------------------


@dataclass
class PropertyResult:
    passed: bool = True
    checked: int = 0
    counterexample: dict | None = None
    failures: int = 0

    def fail(self, **info) -> None:
        self.failures += 1
        if self.passed:
            self.passed = False
            self.counterexample = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                                   for k, v in info.items()}


@dataclass
class MeritReport:
    normality: PropertyResult = field(default_factory=PropertyResult)
    fairness: PropertyResult = field(default_factory=PropertyResult)
    negative_externality: PropertyResult = field(default_factory=PropertyResult)

    @property
    def passed(self) -> bool:
        return self.normality.passed and self.fairness.passed and self.negative_externality.passed


def _size(spec: MechanismSpec, n: int | None) -> int:
    if spec.n is not None:
        return spec.n
    if n is None:
        n = max(spec.K or 1, 5)
    return n


def _random_descending(rng: np.random.Generator, n: int) -> np.ndarray:
    s = rng.random(n)
    if rng.random() < 0.3:
        # coarse grid to produce ties
        s = np.round(s * 4) / 4
    return np.sort(s)[::-1].copy()


def _violation_probes(spec: MechanismSpec):
    """Score pairs that straddle an interval where ``f_k > f_(k-1)``."""
    if not spec.is_backward:
        return
    grid, values = spec.grid_values
    n = values.shape[0]
    for k in range(1, n):
        for j in np.flatnonzero(values[k] > values[k - 1] + _ORDER_TOL):
            lo, hi = grid[j], grid[j + 1]
            before = np.zeros(n)
            before[:k] = 1.0
            before[k] = lo
            after = before.copy()
            after[k] = hi
            yield 0, k, before, after


def check_merit_based(spec: MechanismSpec, samples: int = 1000, seed: int = 0,
                      n: int | None = None, tol: float = _ORDER_TOL) -> MeritReport:
    """Randomized test of normality, fairness and negative externality.

    Negative externality uses the two elementary perturbations: raising a
    competitor without changing the order, and raising a lower-ranked
    competitor past the observed creator.
    """
    if samples < 1:
        raise MechanismError("samples must be at least 1")
    n = _size(spec, n)
    rng = np.random.Generator(np.random.Philox(seed))
    rep = MeritReport()

    top = np.zeros(n)
    top[0] = 1.0
    if not rewards(spec, top)[0] > 0:
        rep.normality.fail(scores=top, reason="M(1; 0,...,0) is not positive")

    for i, k, before, after in _violation_probes(spec):
        r0, r1 = rewards(spec, before)[i], rewards(spec, after)[i]
        rep.negative_externality.checked += 1
        if r1 > r0 + tol:
            rep.negative_externality.fail(creator=i, before=before, after=after,
                                          reward_before=r0, reward_after=r1)

    for _ in range(samples):
        s = _random_descending(rng, n)

        # normality: a zero score earns nothing
        z = s.copy()
        i = int(rng.integers(n))
        z[i] = 0.0
        r = rewards(spec, z)
        rep.normality.checked += 1
        if abs(r[i]) > tol:
            rep.normality.fail(scores=z, creator=i, reward=float(r[i]))

        # fairness: rewards nonincreasing down the ranking
        r = rewards(spec, s)
        rep.fairness.checked += 1
        if np.any(np.diff(r) > tol):
            rep.fairness.fail(scores=s, rewards=r)

        if n < 2:
            continue
        i = int(rng.integers(n))
        others = [j for j in range(n) if j != i]
        # same-order raise
        j = int(rng.choice(others))
        ceiling = s[j - 1] if j > 0 else 1.0
        t = s.copy()
        t[j] = s[j] + rng.random() * (ceiling - s[j])
        _externality(spec, rep.negative_externality, s, t, i, tol)
        # order-crossing raise of someone ranked below i
        below = [j for j in others if j > i]
        if below:
            j = int(rng.choice(below))
            t = s.copy()
            t[j] = s[i] + rng.random() * (1.0 - s[i])
            _externality(spec, rep.negative_externality, s, t, i, tol)
    return rep


def _externality(spec, res: PropertyResult, before, after, i, tol):
    r0 = rewards(spec, before)[i]
    r1 = rewards(spec, after)[i]
    res.checked += 1
    if r1 > r0 + tol:
        res.fail(creator=i, before=before, after=after, reward_before=r0, reward_after=r1)


def check_monotone(spec: MechanismSpec, samples: int = 1000, seed: int = 0,
                   n: int | None = None, tol: float = _ORDER_TOL) -> PropertyResult:
    """Total reward must not drop when one score increases."""
    if samples < 1:
        raise MechanismError("samples must be at least 1")
    n = _size(spec, n)
    rng = np.random.Generator(np.random.Philox(seed))
    res = PropertyResult()
    probes = []
    if n >= 2:
        a = np.zeros(n)
        a[0] = 1.0
        b = a.copy()
        b[1] = 1.0
        probes.append((a, b))
    for _ in range(samples):
        s = _random_descending(rng, n)
        i = int(rng.integers(n))
        t = s.copy()
        t[i] = s[i] + rng.random() * (1.0 - s[i])
        probes.append((s, t))
    for before, after in probes:
        t0 = float(np.sum(rewards(spec, before)))
        t1 = float(np.sum(rewards(spec, after)))
        res.checked += 1
        if t1 < t0 - tol:
            res.fail(before=before, after=after, total_before=t0, total_after=t1)
    return res
