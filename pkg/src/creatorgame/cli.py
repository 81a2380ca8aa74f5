"""``creatorgame`` command line: gen-synth, simulate, optimize, verify, report."""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from creatorgame.environments import ScenarioVariant, env_rng, make_synthetic, sample_population
from creatorgame.experiment import (
    OPTIMIZED,
    ConfigError,
    atomic_write_text,
    csv_text,
    fmt,
    load_config,
    reporting_labels,
    run_and_write,
    summary_header,
    summary_rows,
    synthetic_spec,
)
from creatorgame.mechanisms import (
    MechanismSpec,
    check_merit_based,
    check_monotone,
    rewards,
)
from creatorgame.model import AttentionWeights, GameError, dcg5
from creatorgame.oracle import (
    DEFAULT_BUDGET,
    EXPOSURE_TOL,
    VerificationReport,
    exposure_total_gap,
    fuzz_potential_exactness,
    random_brm,
    verify_corollary1,
    verify_theorem1,
)


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    out = []
    for part in text.split(","):
        if "-" in part.strip()[1:]:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


# ---------------------------------------------------------------------------
# gen-synth
# ---------------------------------------------------------------------------


def cmd_gen_synth(args) -> int:
    cfg, _ = load_config(args.config)
    if cfg["environment"]["kind"] != "synthetic":
        raise ConfigError("gen-synth needs a synthetic environment")
    seeds = args.seed if args.seed is not None else cfg["seeds"]
    out = Path(args.out)
    for seed in seeds:
        spec = synthetic_spec(cfg, seed)
        game = make_synthetic(spec, ScenarioVariant(**cfg["variant"]))
        pop = game.population
        groups = reporting_labels(cfg, game)
        d = pop.d
        header = ["user", "cluster", "group"] + [f"x{k}" for k in range(d)]
        rows = [[j, int(pop.group_labels[j]), int(groups[j])] + [fmt(v) for v in x]
                for j, x in enumerate(pop.users)]
        atomic_write_text(out / f"synthetic_seed{seed}_users.csv", csv_text(header, rows))
        centers = sample_population(spec, env_rng(spec.seed)).centers
        instance = {
            "seed": seed,
            "d": spec.d, "v": spec.v, "sizes": list(spec.sizes), "m": sum(spec.sizes), "n": spec.n,
            "variant": cfg["variant"],
            "cluster_centers": [[float(v) for v in c] for c in centers],
            "initial_profile": [[float(v) for v in game.action_vector(i, a)]
                                for i, a in enumerate(game.initial_profile.actions)],
            "cost_centers": [None if c.center is None else [float(v) for v in c.center]
                             for c in game.costs],
            "cost_weights": [float(c.lam) for c in game.costs],
        }
        atomic_write_text(out / f"synthetic_seed{seed}_instance.yaml",
                          yaml.safe_dump(instance, sort_keys=False))
        print(f"seed {seed}: {pop.m} users in {spec.Y} clusters -> {out}")
    return 0


# ---------------------------------------------------------------------------
# simulate / optimize
# ---------------------------------------------------------------------------


def _run_cells(cfg, base, out, entries, seeds, jobs):
    cells = [(e, s) for e in entries for s in seeds]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_and_write, cfg, e, s, base, out) for e, s in cells]
            return [f.result() for f in futures]
    return [run_and_write(cfg, e, s, base, out) for e, s in cells]


def cmd_simulate(args) -> int:
    cfg, base = load_config(args.config)
    seeds = args.seed if args.seed is not None else cfg["seeds"]
    if not seeds:
        raise ConfigError("need at least one seed")
    out = Path(args.out)
    results = _run_cells(cfg, base, out, cfg["mechanisms"], seeds, args.jobs)
    names = [e["name"] for e in cfg["mechanisms"]]
    atomic_write_text(out / "summary.csv", csv_text(summary_header(results), summary_rows(results, names)))
    for name in names:
        w = [r.welfare for r in results if r.mechanism == name]
        print(f"{name:>16}  welfare {np.mean(w):.6f} +- {np.std(w):.6f}  ({len(w)} seeds)")
    return 0


def cmd_optimize(args) -> int:
    cfg, base = load_config(args.config)
    seeds = args.seed if args.seed is not None else cfg["seeds"]
    if not seeds:
        raise ConfigError("need at least one seed")
    out = Path(args.out)
    entry = {"name": OPTIMIZED}
    results = _run_cells(cfg, base, out, [entry], seeds, args.jobs)
    n = len(results[0].optimizer[0])
    header = ["seed", "final_welfare", "best_welfare"] + [f"f{i}" for i in range(n)]
    rows = [[r.seed, fmt(r.welfare), fmt(r.optimizer[1])] + [fmt(v) for v in r.optimizer[0]]
            for r in results]
    atomic_write_text(out / "optimize_summary.csv", csv_text(header, rows))
    atomic_write_text(out / "summary.csv", csv_text(summary_header(results), summary_rows(results, [OPTIMIZED])))
    for r in results:
        f = ", ".join(f"{v:.3f}" for v in r.optimizer[0])
        print(f"seed {r.seed}: welfare {r.welfare:.6f}  f = ({f})")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def truncated_dcg(n: int, K: int) -> AttentionWeights:
    r = np.zeros(n)
    r[:K] = dcg5(n).r[:K]
    return AttentionWeights(r)


def _merit_line(name: str, spec: MechanismSpec, samples: int, seed: int, n: int | None = None,
                membership: bool = False) -> VerificationReport:
    """Merit-based checks; ``membership`` adds monotonicity and, for the
    softmax mechanisms, reports zero-score payouts instead of failing on them."""
    rep = check_merit_based(spec, samples=samples, seed=seed, n=n)
    parts = [("fairness", rep.fairness), ("negative externality", rep.negative_externality)]
    softmax = spec.kind in ("m3-exposure", "m3-engagement")
    if not (membership and softmax):
        parts.insert(0, ("normality", rep.normality))
    fails = [f"{label} violated: {res.counterexample}" for label, res in parts if not res.passed]
    details = dict(checked=rep.normality.checked + rep.fairness.checked + rep.negative_externality.checked)
    if membership:
        if softmax:
            details["zero_score_paid"] = rep.normality.failures
        mono = check_monotone(spec, samples=samples, seed=seed, n=n)
        details["monotone_checked"] = mono.checked
        if not mono.passed:
            fails.append(f"monotonicity violated: {mono.counterexample}")
        if spec.kind == "m3-exposure":
            gap = exposure_total_gap(spec, samples, seed, max(spec.K, 5))
            details["max_total_gap"] = gap
            if gap > EXPOSURE_TOL:
                fails.append(f"total exposure off by {gap}")
    return VerificationReport(name, not fails, details, fails)


def run_verify(ns, Ks, budget=DEFAULT_BUDGET, samples=1000, random_specs=10, fuzz_games=50,
               seed=0, injected=()) -> list[VerificationReport]:
    reports = []
    grid = [(n, K) for n in ns for K in Ks if 1 <= K <= n and n >= 2]
    if not grid:
        warnings.warn("empty (n, K) sweep: no equilibrium checks were run", stacklevel=2)
    for n, K in grid:
        att = truncated_dcg(n, K)
        for spec in (MechanismSpec.m3_zero(), MechanismSpec.exposure(K, 0.05),
                     MechanismSpec.engagement(K, 0.05)):
            reports.append(verify_theorem1(n, att, spec, budget))
        reports.append(verify_corollary1(n, att, budget))

    rng = np.random.Generator(np.random.Philox(seed))
    for k in range(random_specs):
        n = int(rng.integers(2, 7))
        reports.append(_merit_line(f"merit random-brm #{k} n={n}", random_brm(rng, n), samples, seed + k))

    # a merit-based BRM that is not monotone
    n = 5
    bad = MechanismSpec.brcm(np.eye(n)[0])
    before, after = np.eye(n)[0], np.eye(n)[0] + np.eye(n)[1]
    t0, t1 = float(np.sum(rewards(bad, before))), float(np.sum(rewards(bad, after)))
    fails = [] if (t0, t1) == (1.0, 0.0) else [f"totals {t0} -> {t1}, expected 1 -> 0"]
    if check_monotone(bad, samples=samples, seed=seed).passed:
        fails.append("monotonicity check did not flag f=(1,0,...,0)")
    reports.append(VerificationReport("non-monotone brm f=(1,0,...,0)", not fails,
                                      dict(total_before=t0, total_after=t1), fails))

    for spec in (MechanismSpec.exposure(2, 0.05), MechanismSpec.exposure(5, 0.05),
                 MechanismSpec.engagement(2, 0.05), MechanismSpec.engagement(5, 0.05)):
        reports.append(_merit_line(f"membership {spec.kind} K={spec.K}", spec, samples, seed,
                                   n=max(spec.K, 5), membership=True))

    if fuzz_games > 0:
        fz = fuzz_potential_exactness(games=fuzz_games, deviations=50, seed=seed)
        fails = [] if fz.passed() else [f"worst deviation {fz.worst}"]
        reports.append(VerificationReport("potential exactness", not fails,
                                          dict(games=fz.games, deviations=fz.deviations,
                                               max_gap=fz.max_gap), fails))

    for f in injected:
        spec = MechanismSpec.brcm(f, validate=False)
        reports.append(_merit_line(f"injected brcm f={list(f)}", spec, samples, seed))
    return reports


def cmd_verify(args) -> int:
    reports = run_verify(args.n, args.K, args.budget, args.samples, args.random_specs,
                         args.fuzz_games, args.seed[0] if args.seed else 0, args.brcm or ())
    lines = [r.line() for r in reports]
    failed = sum(not r.passed for r in reports)
    lines.append(f"{len(reports) - failed}/{len(reports)} checks passed")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        atomic_write_text(Path(args.out) / "verify.txt", text)
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def read_summary(path: Path) -> tuple[list[str], list[dict]]:
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        return reader.fieldnames, list(reader)


def cmd_report(args) -> int:
    path = Path(args.out) / "summary.csv" if Path(args.out).is_dir() else Path(args.out)
    header, rows = read_summary(path)
    metrics = [h for h in header[2:] if not h.endswith("_std")]
    ok = True
    table = []
    for name in dict.fromkeys(r["mechanism"] for r in rows):
        per_seed = [r for r in rows if r["mechanism"] == name and r["seed"] != "aggregate"]
        agg = [r for r in rows if r["mechanism"] == name and r["seed"] == "aggregate"]
        vals = np.array([[float(r[m]) for m in metrics] for r in per_seed])
        mean, std = vals.mean(axis=0), vals.std(axis=0)
        if agg:
            stored = np.array([float(agg[0][m]) for m in metrics])
            stored_std = np.array([float(agg[0][f"{m}_std"]) for m in metrics])
            if not (np.allclose(stored, mean, rtol=0, atol=1e-12, equal_nan=True)
                    and np.allclose(stored_std, std, rtol=0, atol=1e-12, equal_nan=True)):
                print(f"warning: stored aggregate for {name} does not match its seeds", file=sys.stderr)
                ok = False
        table.append((name, len(per_seed), mean, std))
    table.sort(key=lambda t: -t[2][0])
    width = max(len(t[0]) for t in table)
    print(f"{'mechanism':<{width}}  seeds  " + "  ".join(f"{m:>22}" for m in metrics))
    for name, k, mean, std in table:
        cells = "  ".join(f"{m:>11.6f} +- {s:<8.6f}" for m, s in zip(mean, std))
        print(f"{name:<{width}}  {k:>5}  {cells}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="creatorgame", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True, out_default="runs"):
        if config:
            sp.add_argument("--config", required=True, help="config file or preset name")
        sp.add_argument("--seed", type=_int_list, help="seed list override, e.g. 0,1,2 or 0-9")
        sp.add_argument("--out", default=out_default, help="output directory")

    sp = sub.add_parser("gen-synth", help="write a synthetic population and instance to disk")
    common(sp)
    sp.set_defaults(func=cmd_gen_synth)

    for name, func, text in (("simulate", cmd_simulate, "run every mechanism under every seed"),
                             ("optimize", cmd_optimize, "run the BRCM optimizer under every seed")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.set_defaults(func=func)

    sp = sub.add_parser("verify", help="equilibrium, merit and potential checks")
    common(sp, config=False, out_default=None)
    sp.add_argument("--n", type=_int_list, default=[3, 4, 5], help="creator counts")
    sp.add_argument("--K", type=_int_list, default=[1, 2], help="attention depths")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max deviation checks per game")
    sp.add_argument("--samples", type=int, default=1000, help="samples per property check")
    sp.add_argument("--random-specs", type=int, default=10, help="random BRMs for the merit checks")
    sp.add_argument("--fuzz-games", type=int, default=50, help="random games for potential exactness")
    sp.add_argument("--brcm", type=_float_list, action="append",
                    help="extra constant-density vector to check (may be invalid)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("report", help="summarize a summary.csv")
    sp.add_argument("--out", default="runs", help="run directory or summary.csv path")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GameError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
