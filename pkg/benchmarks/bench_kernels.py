"""Benchmark the GRU recurrence kernels: numba-jitted vs pure numpy.

The recurrence is the only sequential loop in the model; everything else is
BLAS-bound and identical across backends. Shapes mirror realistic use: batch
12, hidden 25 per direction (width 50 model), sequence lengths from short
text (50) to raw audio frames (375).

Run:  python benchmarks/bench_kernels.py [--repeats 5]

The full-model path follows the SAFRLM_BACKEND env flag instead; time one
training step under each backend with --model-step:

    SAFRLM_BACKEND=numpy python benchmarks/bench_kernels.py --model-step
    SAFRLM_BACKEND=numba python benchmarks/bench_kernels.py --model-step
"""

import argparse
import time

import numpy as np

from safrlm.kernels import HAS_NUMBA, gru_numpy

CASES = [
    # (length, batch, hidden, dtype)
    (50, 12, 25, np.float32),
    (375, 12, 25, np.float32),
    (375, 12, 25, np.float64),
    (50, 1, 25, np.float32),
]


def make_case(length, batch, hidden, dtype, seed=0):
    rng = np.random.default_rng(seed)
    xg = rng.standard_normal((length, batch, 3 * hidden)).astype(dtype)
    wh = (0.3 * rng.standard_normal((hidden, 3 * hidden))).astype(dtype)
    bh = (0.1 * rng.standard_normal(3 * hidden)).astype(dtype)
    dh = rng.standard_normal((length, batch, hidden)).astype(dtype)
    return xg, wh, bh, dh


def time_backend(impl, xg, wh, bh, dh, repeats):
    seqs = impl.gru_recurrence_forward(xg, wh, bh)  # warmup / JIT compile
    impl.gru_recurrence_backward(dh, *seqs, wh)
    best_f = best_b = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        seqs = impl.gru_recurrence_forward(xg, wh, bh)
        best_f = min(best_f, time.perf_counter() - t0)
        t0 = time.perf_counter()
        impl.gru_recurrence_backward(dh, *seqs, wh)
        best_b = min(best_b, time.perf_counter() - t0)
    return best_f, best_b


def bench_kernels(repeats):
    if not HAS_NUMBA:
        print("numba not importable; only the numpy backend can be timed")
    else:
        from safrlm.kernels import gru_numba
    header = f"{'case':>24} {'numpy fwd':>11} {'numpy bwd':>11}"
    if HAS_NUMBA:
        header += f" {'numba fwd':>11} {'numba bwd':>11} {'speedup':>8}"
    print(header)
    for length, batch, hidden, dtype in CASES:
        xg, wh, bh, dh = make_case(length, batch, hidden, dtype)
        np_f, np_b = time_backend(gru_numpy, xg, wh, bh, dh, repeats)
        label = f"L={length} B={batch} H={hidden} {np.dtype(dtype).name}"
        line = f"{label:>24} {1e3 * np_f:>9.3f}ms {1e3 * np_b:>9.3f}ms"
        if HAS_NUMBA:
            nb_f, nb_b = time_backend(gru_numba, xg, wh, bh, dh, repeats)
            speedup = (np_f + np_b) / (nb_f + nb_b)
            line += f" {1e3 * nb_f:>9.3f}ms {1e3 * nb_b:>9.3f}ms {speedup:>7.1f}x"
        print(line)


def bench_model_step(repeats):
    from safrlm import kernels
    from safrlm.config import RunConfig
    from safrlm.model import SentimentModel

    cfg = RunConfig.from_dict({
        "data": {"d_text": 300, "d_audio": 74},
        "conv": {"kernel_audio": 30, "stride_audio": 7},  # 375 audio frames -> 50
        "xadjust": {"blocks_per_stage": 5},
        "heads": {"self_blocks": 3},
    })
    model = SentimentModel(cfg, dtype=np.float32)
    rng = np.random.default_rng(0)
    text = rng.standard_normal((12, 50, 300)).astype(np.float32)
    audio = rng.standard_normal((12, 375, 74)).astype(np.float32)
    labels = rng.uniform(-3, 3, size=12)
    model.loss_and_backward(text, audio, labels, train=False)  # warmup
    best = float("inf")
    for _ in range(repeats):
        model.zero_grad()
        t0 = time.perf_counter()
        model.loss_and_backward(text, audio, labels, train=False)
        best = min(best, time.perf_counter() - t0)
    print(f"backend={kernels.BACKEND}: one fwd+bwd step "
          f"(B=12, text 50x300, audio 375x74, d=50, N=5): {best:.3f}s")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--model-step", action="store_true",
                        help="time one full model step under the active backend")
    args = parser.parse_args()
    if args.model_step:
        bench_model_step(args.repeats)
    else:
        bench_kernels(args.repeats)
