"""Compiled kernels vs the numpy fallback.

Times each kernel on score matrices shaped like the synthetic experiments
(52 users x 10 creators) and a larger one, then runs the same better-response
dynamics end to end under each backend in a subprocess.

    python benchmarks/bench_kernels.py [--repeat 200] [--steps 1000]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from creatorgame import _kernels_py
from creatorgame.mechanisms import MechanismSpec, PiecewiseConstantFn
from creatorgame.model import dcg5

try:
    from creatorgame import _kernels as _compiled
except ImportError:
    _compiled = None


END_TO_END = """
import time
from creatorgame import BACKEND, DynamicsConfig, MechanismSpec, SyntheticSpec, make_synthetic, sim_stra, dcg5
game = make_synthetic(SyntheticSpec(seed=0))
spec = MechanismSpec.{mech}
start = time.perf_counter()
sim_stra(game.with_mechanism(spec), game.initial_profile, DynamicsConfig(horizon={steps}, record_every={steps}))
print(BACKEND, time.perf_counter() - start)
"""


def cases(m: int, n: int, rng: np.random.Generator):
    scores = rng.random((m, n))
    scores[:, : n // 3] = np.round(scores[:, : n // 3] * 4) / 4  # some ties
    brcm = MechanismSpec.brcm(dcg5(n).r)
    grid = np.array([0.0, 0.3, 0.7, 1.0])
    vals = np.sort(rng.random((n, 3)), axis=0)[::-1] + 0.01
    brm = MechanismSpec.brm([PiecewiseConstantFn(grid, v) for v in vals])
    r = dcg5(n).r
    return {
        "brcm rewards": lambda k: k.brm_rewards(scores, *brcm.grid_values),
        "brm rewards": lambda k: k.brm_rewards(scores, *brm.grid_values),
        "brm potential": lambda k: k.brm_potential(scores, *brm.grid_values),
        "exposure": lambda k: k.topk_softmax_rewards(scores, 5, 0.05, False),
        "engagement": lambda k: k.topk_softmax_rewards(scores, 5, 0.05, True),
        "ranked sum": lambda k: k.ranked_weighted_sum(scores, r),
    }


def bench_kernels(repeat: int) -> None:
    rng = np.random.Generator(np.random.Philox(0))
    for m, n in ((52, 10), (2000, 20)):
        print(f"\nkernels, {m} users x {n} creators (per call, best of 5)")
        print(f"{'kernel':<16}{'python':>12}{'compiled':>12}{'speedup':>10}")
        for name, fn in cases(m, n, rng).items():
            t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=repeat, repeat=5)) / repeat
            if _compiled is None:
                print(f"{name:<16}{t_py * 1e6:>10.1f}us{'n/a':>12}")
                continue
            t_c = min(timeit.repeat(lambda: fn(_compiled), number=repeat, repeat=5)) / repeat
            print(f"{name:<16}{t_py * 1e6:>10.1f}us{t_c * 1e6:>10.1f}us{t_py / t_c:>9.1f}x")


def bench_end_to_end(steps: int) -> None:
    print(f"\nsim_stra, synthetic preset, {steps} steps")
    for mech in ("brcm(dcg5(10).r)", "exposure(5, 0.05)"):
        for pure in ("1", "0"):
            env = dict(os.environ, CREATORGAME_PURE_PYTHON=pure)
            out = subprocess.run([sys.executable, "-c", END_TO_END.format(mech=mech, steps=steps)],
                                 env=env, capture_output=True, text=True, check=True).stdout.split()
            print(f"  {mech:<20} {out[0]:<9} {float(out[1]):.3f}s")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--repeat", type=int, default=200)
    p.add_argument("--steps", type=int, default=1000)
    args = p.parse_args()
    if _compiled is None:
        print("compiled extension not built; timing the fallback only")
    bench_kernels(args.repeat)
    bench_end_to_end(args.steps)


if __name__ == "__main__":
    main()
