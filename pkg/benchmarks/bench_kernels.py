"""Compare the compiled and numpy kernels on the two hot paths.

    python benchmarks/bench_kernels.py [--n 40] [--l 20] [--m 2] [--repeats 20]

For each backend this times one full CAVI detection (10 sweeps) and the
exhaustive ML-GA search at a few K, and checks that both backends return
the same decisions on the timed instances.
"""
import argparse
import statistics
import time

import numpy as np

from rcsm import kernels
from rcsm.detectors import cavi_detect
from rcsm.harness import ExperimentConfig, draw_trial


def timeit(fn, repeats):
    fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    return statistics.median(samples) / 1e3


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--l", type=int, default=20)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--ks", default="1,2,3,4")
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args(argv)

    try:
        backends = {"python": kernels.get_backend("python"),
                    "cython": kernels.get_backend("cython")}
    except ImportError:
        backends = {"python": kernels.get_backend("python")}
        print("compiled extension not built; timing the numpy kernels only")

    print(f"N={args.n} L={args.l} M={args.m}, median of {args.repeats} runs, microseconds")
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for K in (int(k) for k in args.ks.split(",")):
        cfg = ExperimentConfig(N=args.n, L=args.l, K=K, M=args.m, seed=K)
        trial = draw_trial(cfg, 0)
        H = np.ascontiguousarray(trial.H)
        Y = trial.received.observations
        n0 = cfg.noise.noise_variance
        rows = {
            f"cavi K={K}": lambda b: cavi_detect(H, Y, K, cfg.noise, backend=b).estimate,
            f"mlga K={K}": lambda b: backends[b].mlga_search(H, Y, n0, K)[1],
            f"mlga-gram K={K}": lambda b: backends[b].mlga_search_gram(H, Y, n0, K)[1],
        }
        for name, fn in rows.items():
            decisions = {b: fn(b) for b in backends}
            if len(set(map(str, decisions.values()))) != 1:
                print(f"  warning: backends disagree on {name}: {decisions}")
            reps = args.repeats if "mlga K" not in name or K <= 3 else max(3, args.repeats // 5)
            t = {b: timeit(lambda b=b: fn(b), reps) for b in backends}
            speed = t["python"] / t["cython"] if "cython" in t else float("nan")
            print(f"{name:<22}" + "".join(f"{t[b]:>12.1f}" for b in backends) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
