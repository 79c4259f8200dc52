"""Time the compiled and numpy simulation kernels on the bundled scenarios.

    python benchmarks/bench_kernels.py --steps 7000 --repeats 5

Both kernels receive identical inputs; the script also confirms that their
outputs are bit-identical before reporting timings.
"""

import argparse
import statistics
import time

import numpy as np

from weaksocial import load_fixture
from weaksocial.kernels import available_backends, get_kernel
from weaksocial.sim import SimulationConfig, _gamma_table, child_rng, draw_signals


def inputs(name, steps, seed):
    s = load_fixture(name)
    cfg = SimulationConfig(model=s.default_model, steps=steps, base_seed=seed)
    signals = draw_signals(s.models, np.asarray(s.agent_truth), steps, child_rng(seed, 0))
    return (np.ascontiguousarray(s.matrix.weights), np.ascontiguousarray(s.models.padded()),
            signals, _gamma_table(s, cfg), np.ascontiguousarray(s.priors, dtype=float), 1)


def timed(fn, args, repeats):
    times, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=7000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--scenarios", nargs="+",
                    default=["three_agent_violated", "fig6_caseA", "fig6_caseB"])
    args = ap.parse_args(argv)

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; only the numpy kernel is available")
    print(f"{'scenario':<22}{'backend':<10}{'median s':>10}{'steps/s':>12}{'speedup':>9}")
    for name in args.scenarios:
        data = inputs(name, args.steps, args.seed)
        results = {b: timed(get_kernel(b), data, args.repeats) for b in backends}
        base = results["python"][0]
        for b, (t, _) in results.items():
            print(f"{name:<22}{b:<10}{t:>10.4f}{args.steps / t:>12.0f}{base / t:>8.1f}x")
        if "compiled" in results:
            same = np.array_equal(results["python"][1][0], results["compiled"][1][0])
            print(f"{'':<22}outputs bit-identical: {same}")


if __name__ == "__main__":
    main()
