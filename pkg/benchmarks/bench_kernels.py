"""Time the compiled convolution kernels against the numpy fallback.

Runs the forward and both backward passes on training-size workloads, checks
the two backends agree to float32 tolerance, and prints a timing table.

    python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from ssyn.ndtensor.kernels import available_backends, get_backend


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(rng):
    # the encoder's two layers on a batch of two 10-second 32x32 segments,
    # the exact shapes a training step spends its time in
    x1 = rng.standard_normal((2, 3, 40, 32, 32)).astype(np.float32)
    w1 = rng.standard_normal((4, 3, 4, 4, 4)).astype(np.float32)
    gy1 = rng.standard_normal((2, 4, 20, 16, 16)).astype(np.float32)
    x2 = rng.standard_normal((2, 4, 20, 16, 16)).astype(np.float32)
    w2 = rng.standard_normal((8, 4, 4, 4, 4)).astype(np.float32)
    gy2 = rng.standard_normal((2, 8, 10, 8, 8)).astype(np.float32)

    stride, pad = (2, 2, 2), (1, 1, 1)
    return [
        ("layer1 fwd 3->4", "conv3d_forward", (x1, w1, stride, pad)),
        ("layer1 bwd input", "conv3d_backward_input", (gy1, w1, x1.shape, stride, pad)),
        ("layer1 bwd kernel", "conv3d_backward_kernel", (gy1, x1, w1.shape, stride, pad)),
        ("layer2 fwd 4->8", "conv3d_forward", (x2, w2, stride, pad)),
        ("layer2 bwd input", "conv3d_backward_input", (gy2, w2, x2.shape, stride, pad)),
        ("layer2 bwd kernel", "conv3d_backward_kernel", (gy2, x2, w2.shape, stride, pad)),
    ]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed runs per case; the best is reported")
    args = parser.parse_args(argv)

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled extension not built; nothing to compare")
        return 1

    numpy_be = get_backend("numpy")
    cython_be = get_backend("cython")
    rng = np.random.default_rng(0)

    header = f"{'case':<20} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}  agree"
    print(header)
    print("-" * len(header))
    for label, fn_name, call_args in _cases(rng):
        ref = getattr(numpy_be, fn_name)(*call_args)
        out = getattr(cython_be, fn_name)(*call_args)
        agree = np.allclose(ref, out, rtol=1e-4, atol=1e-5)
        t_np = _best_of(lambda: getattr(numpy_be, fn_name)(*call_args), args.repeats)
        t_cy = _best_of(lambda: getattr(cython_be, fn_name)(*call_args), args.repeats)
        print(f"{label:<20} {t_np * 1e3:>10.2f} {t_cy * 1e3:>10.2f} "
              f"{t_np / t_cy:>7.1f}x  {'yes' if agree else 'NO'}")
        if not agree:
            print(f"  max abs difference: {np.max(np.abs(ref - out)):.3e}")
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
