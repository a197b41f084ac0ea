"""Time the compiled and pure-Python kernels on identical inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from bepdyn import _pycore
from bepdyn.finite_pop import _symmetric_tables
from bepdyn.game import make_coordination, make_prisoners_dilemma, make_public_goods
from bepdyn.kernel import SamplingKernel

try:
    from bepdyn import _core
except ImportError:
    _core = None


def weight_case(game, k):
    kern = SamplingKernel(game, k)
    t = kern._tables[0]
    x = np.full(game.m, 1.0 / game.m)
    return (x, t.opp_counts, t.coef, t.pay, k, 0, t.rank, 1e7)


def event_case(game, k, events, N=10000, seed=0):
    slot_pop, strides, pay, pay_off = _symmetric_tables(game)
    m = game.m
    counts = np.full(m, N // m, dtype=np.int64)
    counts[0] += N - counts.sum()
    width = 3 + m * k * slot_pop.shape[1]
    u = np.random.default_rng(seed).random((events, width))
    fixed = (np.zeros(1, np.int64), np.array([m], np.int64), np.array([N], np.int64),
             slot_pop, strides, pay, pay_off, k, 0, np.zeros(m, np.int64), u)
    return counts, fixed


def bench(label, fn, repeat):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<10s} {best * 1e3:10.3f} ms")
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _pycore)] + ([("compiled", _core)] if _core else [])
    if _core is None:
        print("compiled extension not built; timing the Python kernels only")

    cases = [
        ("population_weights PD k=4", make_prisoners_dilemma("1/2", "1/2"), 4),
        ("population_weights coord m=3 k=3", make_coordination(2, [3, 2, 1]), 3),
        ("population_weights public goods n=4 k=3", make_public_goods(4, [0, "1/2", "9/5", 2, "5/2"]), 3),
    ]
    for name, game, k in cases:
        print(name)
        argv = weight_case(game, k)
        times = {b: bench(b, lambda mod=mod: mod.population_weights(*argv), args.repeat)
                 for b, mod in backends}
        ref = _pycore.population_weights(*argv)[0]
        for b, mod in backends:
            assert np.allclose(mod.population_weights(*argv)[0], ref, atol=1e-14, rtol=0)
        _speedup(times)

    for name, game, k, events in [
        ("run_events PD k=2, 20000 events", make_prisoners_dilemma("1/2", "1/2"), 2, 20000),
        ("run_events public goods n=3 k=3, 5000 events", make_public_goods(3, [0, "1/2", "9/5", 2]), 3, 5000),
    ]:
        print(name)
        counts0, fixed = event_case(game, k, events)
        results = {}
        times = {}
        for b, mod in backends:
            def run(mod=mod):
                c = counts0.copy()
                mod.run_events(c, *fixed)
                return c
            times[b] = bench(b, run, args.repeat)
            results[b] = run()
        first = next(iter(results.values()))
        assert all(np.array_equal(first, r) for r in results.values()), "backends disagree"
        _speedup(times)


def _speedup(times):
    if "compiled" in times:
        print(f"  speedup    {times['python'] / times['compiled']:10.1f}x")


if __name__ == "__main__":
    main()
