"""Compare the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

Both backends are loaded directly (bypassing the import-time selector) so
one process can time them side by side; outputs are also checked for bit
parity while we are at it.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from brickforge import _kernels_py

try:
    from brickforge import _kernels as native
except ImportError:
    native = None


def time_call(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_mean_shift(repeats: int):
    print("mean_shift_filter (spatial radius 10, color radius 25, 4 iterations)")
    rng = np.random.default_rng(0)
    for h, w in ((128, 128), (255, 300), (510, 600)):
        base = np.zeros((h, w, 3), dtype=np.float32)
        base[:, w // 3 :] = 120.0
        base[h // 2 :, :] += 60.0
        img = base + rng.normal(0, 4, base.shape).astype(np.float32)
        t_py = time_call(_kernels_py.mean_shift_filter, img, 10, 25.0, 4, repeats=repeats)
        row = f"  {w:>4}x{h:<4}  python {t_py * 1e3:8.1f} ms"
        if native is not None:
            t_c = time_call(native.mean_shift_filter, img, 10, 25.0, 4, repeats=repeats)
            same = np.array_equal(
                native.mean_shift_filter(img, 10, 25.0, 4),
                _kernels_py.mean_shift_filter(img, 10, 25.0, 4),
            )
            row += f"   native {t_c * 1e3:8.1f} ms   speedup {t_py / t_c:5.1f}x   parity {'ok' if same else 'MISMATCH'}"
        print(row)


def bench_hysteresis(repeats: int):
    print("hysteresis_closure (8-connected flood)")
    rng = np.random.default_rng(1)
    for h, w in ((255, 300), (510, 600)):
        weak = (rng.random((h, w)) < 0.4).astype(np.uint8)
        strong = (weak & (rng.random((h, w)) < 0.1)).astype(np.uint8)
        t_py = time_call(_kernels_py.hysteresis_closure, strong, weak, repeats=repeats)
        row = f"  {w:>4}x{h:<4}  python {t_py * 1e3:8.1f} ms"
        if native is not None:
            t_c = time_call(native.hysteresis_closure, strong, weak, repeats=repeats)
            same = np.array_equal(
                native.hysteresis_closure(strong, weak),
                _kernels_py.hysteresis_closure(strong, weak),
            )
            row += f"   native {t_c * 1e3:8.1f} ms   speedup {t_py / t_c:5.1f}x   parity {'ok' if same else 'MISMATCH'}"
        print(row)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    if native is None:
        print("note: compiled kernels not built; timing the fallback only\n")
    bench_mean_shift(args.repeats)
    print()
    bench_hysteresis(args.repeats)


if __name__ == "__main__":
    main()
