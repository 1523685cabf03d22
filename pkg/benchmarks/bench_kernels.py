"""Benchmark the compiled LSTM kernels against the numpy fallback.

Measures the two hot paths: a training-style forward+backward chunk
(batched) and a single-sequence inference forward (the serving path).

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from pycc.kernels import get_backend


def bench(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best * 1000.0


def training_chunk_case(backend, t=100, B=128, H=64):
    rng = np.random.default_rng(0)
    xp = rng.normal(size=(t, B, 4 * H)).astype(np.float32)
    U = rng.normal(size=(H, 4 * H)).astype(np.float32)
    h0 = np.zeros((B, H), np.float32)
    c0 = np.zeros((B, H), np.float32)
    dh = rng.normal(size=(t, B, H)).astype(np.float32)

    def run():
        fwd = backend.lstm_forward(xp, U, h0, c0)
        backend.lstm_backward(dh, U, h0, c0, *fwd)
    return run


def inference_case(backend, t=1000, H=100):
    rng = np.random.default_rng(0)
    xp = rng.normal(size=(t, 1, 4 * H)).astype(np.float32)
    U = rng.normal(size=(H, 4 * H)).astype(np.float32)
    h0 = np.zeros((1, H), np.float32)
    c0 = np.zeros((1, H), np.float32)

    def run():
        backend.lstm_forward(xp, U, h0, c0)
    return run


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = {"python": get_backend("python")}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("compiled backend not built; benchmarking fallback only")

    cases = {
        "train chunk (t=100, B=128, H=64) fwd+bwd": training_chunk_case,
        "inference (t=1000, B=1, H=100) fwd": inference_case,
    }
    results = {}
    for case_name, make in cases.items():
        for backend_name, backend in backends.items():
            ms = bench(make(backend), args.repeat)
            results[(case_name, backend_name)] = ms

    width = max(len(c) for c in cases)
    print(f"{'case'.ljust(width)}  backend   best ms")
    for case_name in cases:
        base = results.get((case_name, "python"))
        for backend_name in backends:
            ms = results[(case_name, backend_name)]
            speedup = f"  ({base / ms:.2f}x vs python)" if backend_name != "python" else ""
            print(f"{case_name.ljust(width)}  {backend_name:<8} {ms:8.2f}{speedup}")


if __name__ == "__main__":
    main()
