"""Time the compiled and pure-Python kernels on the same workloads.

Each workload runs once per backend from identical generator states; the
outputs are compared for exact equality before timings are reported.

    python benchmarks/bench_kernels.py [--scale 0.2]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from brwkit._kernels import backends
from brwkit.env import DistSpec, sample_environment
from brwkit.rng import stream


def workloads(scale: float):
    env = sample_environment(DistSpec("two_point", 1.0, 2.0), (-100, 100), 7)
    n = lambda k: max(1, int(k * scale))  # noqa: E731
    kappa = np.where(stream(3, "bench").random(201) < 0.5, 1.0, 2.0)[None, :]
    lam = 1.5 + stream(4, "bench").random(10_000)
    p3 = np.stack([np.full(2101, 0.6), np.full(2101, 0.7), np.full(2101, 0.8)])
    l3 = np.stack([np.full(2101, 1.5), np.full(2101, 2.0), np.full(2101, 2.5)])
    pos0 = stream(5, "bench").integers(-3, 4, size=n(2000)).astype(np.int64)
    sign0 = np.where(pos0 >= 0, 1, -1).astype(np.int8)
    return {
        "brw_batch t=3": lambda c, g: c.brw_batch(env.rates, env.window_lo, 0, 3.0, n(2000), 10**6,
                                                  np.zeros(201), 0, g),
        "srw_integral_batch": lambda c, g: c.srw_integral_batch(np.empty(0), env.rates[None, :].copy(),
                                                                env.window_lo, 0, 2.0, n(100_000), g),
        "killed_batch": lambda c, g: c.killed_batch(np.empty(0), kappa, -100, 2.0, 0, 1.0, n(100_000), g),
        "annihilate": lambda c, g: c.annihilate(np.empty(0), kappa, -100, 2.0, pos0, sign0, 1.0, g),
        "tilt_recursion": lambda c, g: c.tilt_recursion(lam, 0.3, 0.5),
        "coupled_steps": lambda c, g: c.coupled_steps(p3, l3, -1050, 0, n(1000), g),
    }


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.dtype == b.dtype and np.array_equal(a, b, equal_nan=a.dtype.kind == "f")
    return a == b


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=1.0, help="workload size multiplier")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    bk = backends()
    if "cython" not in bk:
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation`")
    print(f"{'kernel':22s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}  identical")
    for name, fn in workloads(args.scale).items():
        res, secs = {}, {}
        for b in ("python", "cython"):
            g = stream(args.seed, "bench", name)
            t0 = time.perf_counter()
            res[b] = fn(bk[b], g)
            secs[b] = time.perf_counter() - t0
        ok = same(res["python"], res["cython"])
        print(f"{name:22s} {secs['python']:10.3f} {secs['cython']:10.4f} "
              f"{secs['python'] / secs['cython']:8.1f}  {ok}")


if __name__ == "__main__":
    main()
