"""Experiment configs, named mechanism presets and per-(mechanism, seed) runs."""

from __future__ import annotations

import copy
import csv
import io
import os
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from creatorgame.dynamics import DynamicsConfig, sim_stra
from creatorgame.environments import (
    EmbeddingIngestSpec,
    ScenarioVariant,
    SyntheticSpec,
    ingest_embeddings,
    make_synthetic,
    make_tvn,
)
from creatorgame.mechanisms import MechanismSpec
from creatorgame.model import AttentionWeights, GameError, GameInstance
from creatorgame.optimizer import OptimizerConfig, initial_f, optimize_brcm
from creatorgame.welfare import social_welfare

PRESET_MECHANISMS = ("brcm-star", "brcm-1", "m3-zero", "m3-exposure", "m3-engagement", "brcm-opt")
OPTIMIZED = "brcm-opt"

DEFAULT_DYNAMICS = dict(horizon=1000, step=0.1, record_every=1, evaluate_before_projection=False)
DEFAULT_OPTIMIZER = dict(epochs=200, inner_steps=5, mechanism_step=0.1, creator_step=0.1,
                         record_every=1, f0=None)


class ConfigError(GameError):
    pass


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def preset_names() -> list[str]:
    files = resources.files("creatorgame").joinpath("presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".yaml"))


def load_config(ref: str) -> tuple[dict, Path]:
    """Load a config file, or a bundled preset by name.

    Returns the parsed config and the directory that relative data paths in
    it are resolved against (the file's directory, or the working directory
    for presets).
    """
    path = Path(ref)
    if path.is_file():
        text, base = path.read_text(), path.resolve().parent
    elif ref in preset_names():
        text = resources.files("creatorgame").joinpath("presets", f"{ref}.yaml").read_text()
        base = Path.cwd()
    else:
        raise ConfigError(f"{ref!r} is neither a file nor a preset ({', '.join(preset_names())})")
    cfg = yaml.safe_load(text)
    if not isinstance(cfg, dict):
        raise ConfigError(f"{ref}: top level must be a mapping")
    return normalize_config(cfg), base


def normalize_config(cfg: dict) -> dict:
    cfg = copy.deepcopy(cfg)
    env = cfg.get("environment")
    if not isinstance(env, dict) or env.get("kind") not in ("synthetic", "embeddings", "tvn"):
        raise ConfigError("environment.kind must be synthetic, embeddings or tvn")
    cfg["dynamics"] = {**DEFAULT_DYNAMICS, **(cfg.get("dynamics") or {})}
    cfg["optimizer"] = {**DEFAULT_OPTIMIZER, **(cfg.get("optimizer") or {})}
    unknown = set(cfg["dynamics"]) - set(DEFAULT_DYNAMICS)
    unknown |= set(cfg["optimizer"]) - set(DEFAULT_OPTIMIZER)
    if unknown:
        raise ConfigError(f"unknown settings: {sorted(unknown)}")
    mechs = cfg.get("mechanisms") or []
    cfg["mechanisms"] = [m if isinstance(m, dict) else {"name": m} for m in mechs]
    for m in cfg["mechanisms"]:
        if "name" not in m and "kind" not in m:
            raise ConfigError(f"mechanism entry {m} needs a name or a kind")
        m.setdefault("name", m.get("kind"))
    names = [m["name"] for m in cfg["mechanisms"]]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate mechanism names in {names}")
    cfg["seeds"] = [int(s) for s in cfg.get("seeds", [0])]
    if not cfg["mechanisms"] or not cfg["seeds"]:
        raise ConfigError("need at least one mechanism and one seed")
    variant = cfg.get("variant", "G1")
    cfg["variant"] = {"kind": variant} if isinstance(variant, str) else dict(variant)
    ScenarioVariant(**cfg["variant"])
    return cfg


# ---------------------------------------------------------------------------
# building
# ---------------------------------------------------------------------------


def cell_seeds(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Independent environment and dynamics streams derived from one seed."""
    env, dyn = np.random.SeedSequence(seed).spawn(2)
    return env, dyn


def synthetic_spec(cfg: dict, seed: int) -> SyntheticSpec:
    env = dict(cfg["environment"])
    env.pop("kind")
    env_seed, _ = cell_seeds(seed)
    return SyntheticSpec(**env, seed=env_seed)


def build_environment(cfg: dict, seed: int, base: Path = Path(".")) -> GameInstance:
    env = dict(cfg["environment"])
    kind = env.pop("kind")
    variant = ScenarioVariant(**cfg["variant"])
    if kind == "synthetic":
        return make_synthetic(synthetic_spec(cfg, seed), variant)
    if kind == "tvn":
        n = int(env["n"])
        r = env.get("r")
        attention = AttentionWeights(r) if r is not None else AttentionWeights.dcg(n)
        game = make_tvn(n, attention)
        return game
    for key in ("user_file", "item_file"):
        if key not in env:
            raise ConfigError(f"embeddings environment needs {key}")
        env[key] = str((base / env[key]).resolve())
    env_seed, _ = cell_seeds(seed)
    return ingest_embeddings(EmbeddingIngestSpec(**env, seed=env_seed), variant)


def reporting_labels(cfg: dict, game: GameInstance):
    """Per-user reporting group, from the ``groups`` cluster mapping if given."""
    labels = game.population.group_labels
    mapping = cfg.get("groups")
    if labels is None or not mapping:
        return labels
    out = np.full(labels.shape, -1)
    for g, clusters in mapping.items():
        out[np.isin(labels, list(clusters))] = int(g)
    if np.any(out < 0):
        raise ConfigError("groups mapping leaves some clusters unassigned")
    return out


def brcm_one(n: int) -> np.ndarray:
    """``(1, 1/2, 1/3, 1/4, 1/5, 0, ...)`` truncated to ``n`` creators."""
    f = np.zeros(n)
    k = min(5, n)
    f[:k] = 1.0 / np.arange(1, k + 1)
    return f


def resolve_mechanism(entry: dict, game: GameInstance) -> MechanismSpec | None:
    """The mechanism for a config entry; ``None`` marks the optimized BRCM."""
    name = entry["name"]
    kind = entry.get("kind", name)
    n = game.n
    K = int(entry.get("K", min(5, n)))
    beta = float(entry.get("beta", 0.05))
    if kind == OPTIMIZED:
        return None
    if kind == "brcm-star":
        return MechanismSpec.brcm(game.attention.r)
    if kind == "brcm-1":
        return MechanismSpec.brcm(brcm_one(n))
    if kind == "brcm":
        return MechanismSpec.brcm(entry["f"])
    if kind == "m3-zero":
        return MechanismSpec.m3_zero()
    if kind == "m3-exposure":
        return MechanismSpec.exposure(K, beta)
    if kind == "m3-engagement":
        return MechanismSpec.engagement(K, beta)
    raise ConfigError(f"unknown mechanism {kind!r}")


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


@dataclass
class CellResult:
    mechanism: str
    seed: int
    welfare: float
    user_side: float
    total_cost: float
    groups: dict
    trajectory: object
    optimizer: object = None


def run_cell(cfg: dict, entry: dict, seed: int, base: Path = Path(".")) -> CellResult:
    """One mechanism under one seed, from the variant's initial profile."""
    game = build_environment(cfg, seed, base)
    _, dyn_seed = cell_seeds(seed)
    spec = resolve_mechanism(entry, game)
    opt = None
    if spec is None:
        o = dict(cfg["optimizer"])
        f0 = o.pop("f0")
        f0 = tuple(initial_f(game.n, min(5, game.n))) if f0 is None else tuple(float(x) for x in f0)
        if len(f0) != game.n:
            raise ConfigError(f"optimizer f0 has {len(f0)} entries for {game.n} creators")
        ocfg = OptimizerConfig(**o, f0=f0, seed=dyn_seed)
        opt = optimize_brcm(game, game.initial_profile, ocfg)
        final, traj = opt.profile, opt.trajectory
        played = game.with_mechanism(MechanismSpec.brcm(opt.f))
    else:
        played = game.with_mechanism(spec)
        final, traj = sim_stra(played, game.initial_profile,
                               DynamicsConfig(**cfg["dynamics"], seed=dyn_seed))
    rep = social_welfare(final, played, with_utilities=False, groups=reporting_labels(cfg, game))
    return CellResult(entry["name"], seed, rep.total_welfare, rep.user_side, rep.total_cost,
                      rep.per_group_mean_user_utility, traj, opt)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a temporary sibling and rename, so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def fmt(x) -> str:
    return repr(float(x))


def summary_header(results: list[CellResult]) -> list[str]:
    groups = sorted({g for r in results for g in r.groups})
    metrics = ["final_welfare", "user_side", "total_cost"] + [f"group_{g}" for g in groups]
    return ["mechanism", "seed"] + metrics + [f"{m}_std" for m in metrics]


def summary_rows(results: list[CellResult], mechanisms: list[str]) -> list[list[str]]:
    """Per-seed rows, then one aggregate row per mechanism (mean and population std)."""
    groups = sorted({g for r in results for g in r.groups})
    rows = []
    for name in mechanisms:
        cells = sorted((r for r in results if r.mechanism == name), key=lambda r: r.seed)
        if not cells:
            continue
        table = np.array([[r.welfare, r.user_side, r.total_cost]
                          + [r.groups.get(g, np.nan) for g in groups] for r in cells])
        for r, vals in zip(cells, table):
            rows.append([name, str(r.seed)] + [fmt(v) for v in vals] + [""] * table.shape[1])
        rows.append([name, "aggregate"] + [fmt(v) for v in table.mean(axis=0)]
                    + [fmt(v) for v in table.std(axis=0)])
    return rows


def cell_stem(name: str, seed: int) -> str:
    return f"{name}__seed{seed}"


def write_cell(result: CellResult, out: Path) -> None:
    stem = cell_stem(result.mechanism, result.seed)
    traj = result.trajectory
    atomic_write_text(out / "trajectories" / f"{stem}.csv", csv_text(traj.header(), traj.rows()))
    if result.optimizer is not None:
        o = result.optimizer
        atomic_write_text(out / "optimizer" / f"{stem}.csv", csv_text(o.log_header(), o.log_rows()))


def run_and_write(cfg: dict, entry: dict, seed: int, base: Path, out: Path) -> CellResult:
    res = run_cell(cfg, entry, seed, base)
    write_cell(res, out)
    # trajectories are on disk; keep the returned object small for process pools
    res.trajectory = None
    if res.optimizer is not None:
        res.optimizer = (tuple(res.optimizer.f.tolist()), res.optimizer.best_welfare)
    return res
