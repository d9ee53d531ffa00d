"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on the same seeded inputs in both backends; results are
checked for equality before timings are reported.
"""

from __future__ import annotations

import argparse
import random
import sys
import timeit

from teamcomm import _fallback, kernels
from teamcomm.synth import SynthConfig, generate_session


def workloads(rng: random.Random):
    s, _ = generate_session(SynthConfig(seed=1))
    starts = [u.start_ms for u in s.utterances]
    speakers = [u.speaker for u in s.utterances]
    ranks2 = [2 * r for r in range(1, 21)]
    pooled2 = [2 * r for r in range(1, 41)]
    weights = [[rng.randint(0, 20) if i != j else 0 for j in range(5)] for i in range(5)]
    times = sorted(rng.randrange(0, 180_000_000) for _ in range(1_500))
    centers = [p * 1_800_000 for p in range(1, 101)]
    return {
        "adjacent_pair_indices (650 utt)": ("adjacent_pair_indices", (starts, speakers, 5_000)),
        "signed_rank_counts (n=20)": ("signed_rank_counts", (ranks2,)),
        "rank_sum_counts (20+20)": ("rank_sum_counts", (pooled2, 20)),
        "degree_spread (5x5)": ("degree_spread", (weights, True)),
        "window_counts (1500 x 100)": ("window_counts", (times, centers, 1_500_000, 1_500_000)),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    compiled = kernels.compiled_module()
    if compiled is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    print(f"{'kernel':34} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for label, (name, call_args) in workloads(random.Random(0)).items():
        slow, fast = getattr(_fallback, name), getattr(compiled, name)
        if list(slow(*call_args)) != list(fast(*call_args)):
            print(f"{label}: backends disagree", file=sys.stderr)
            return 1
        times = []
        for fn in (slow, fast):
            number = 1
            while timeit.timeit(lambda: fn(*call_args), number=number) < 0.05:
                number *= 2
            best = min(timeit.repeat(lambda: fn(*call_args), number=number, repeat=args.repeat))
            times.append(best / number * 1e3)
        print(f"{label:34} {times[0]:10.4f} {times[1]:12.4f} {times[0] / times[1]:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
