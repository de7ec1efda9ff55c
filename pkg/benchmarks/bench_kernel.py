"""Time the stepping loop: compiled kernel against the pure-Python one.

    python3 benchmarks/bench_kernel.py [--repeat N] [--dt SECONDS]

Each curated scenario is encoded once; both kernels then run the same tables
with the quiescence stop disabled, so every run covers the full horizon
(or until an actor leaves the road).
"""

from __future__ import annotations

import argparse
import statistics
import time
from pathlib import Path

import numpy as np

from scenario_forge.checker import _kernel_py, encode
from scenario_forge.pipeline import compile_file

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--dt", type=float, default=0.02)
    args = ap.parse_args()
    try:
        from scenario_forge.checker import _kernel as compiled
    except ImportError:
        compiled = None
        print("compiled kernel not built; timing the Python loop only")

    paths = sorted((SCENARIOS / "curated").glob("*.fscn")) + [SCENARIOS / "fig6.fscn"]
    rows, ratios = [], []
    for p in paths:
        c = compile_file(p)
        _, tables, _ = encode(c.storyboard)
        call = (args.dt, c.storyboard.t_end, c.road.length, False, *tables)
        py = best_of(lambda: _kernel_py.run(*call), args.repeat)
        steps = _kernel_py.run(*call)[0]
        if compiled is not None:
            cy = best_of(lambda: compiled.run(*call), args.repeat)
            same = all(np.array_equal(np.asarray(a), np.asarray(b))
                       for a, b in zip(_kernel_py.run(*call)[1:], compiled.run(*call)[1:]))
            ratios.append(py / cy)
            rows.append(f"{p.stem:32s} {steps:6d} {py * 1e3:9.2f} {cy * 1e3:9.3f} {py / cy:8.1f}x"
                        f"  {'identical' if same else 'DIFFERENT'}")
        else:
            rows.append(f"{p.stem:32s} {steps:6d} {py * 1e3:9.2f}")
    print(f"{'scenario':32s} {'steps':>6s} {'py [ms]':>9s} {'cy [ms]':>9s} {'speedup':>9s}")
    print("\n".join(rows))
    if ratios:
        print(f"median speedup {statistics.median(ratios):.1f}x over {len(ratios)} scenarios")


if __name__ == "__main__":
    main()
