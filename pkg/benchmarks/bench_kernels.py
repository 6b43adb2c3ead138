#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times each convolution kernel at the shapes the networks actually use, plus
end-to-end training steps for both networks. Select what the library itself
uses via POSECAST_BACKEND=numpy|numba.
"""

import argparse
import time

import numpy as np

from posecast import kernels
from posecast import pose_data as pd
from posecast import pose_forecaster as pf
from posecast import video_generator as vg

# (op, kwargs) at real layer shapes: 1D forecaster layers are float64,
# 2D frame-synthesis layers are float32
SHAPES = [
    ("conv1d", dict(b=8, t=144, c_in=28, c_out=48, k=4, s=2, p=1, dtype=np.float64)),
    ("conv1d", dict(b=8, t=36, c_in=96, c_out=192, k=4, s=2, p=1, dtype=np.float64)),
    ("convt1d", dict(b=8, t=32, c_in=64, c_out=48, k=4, s=2, p=1, dtype=np.float64)),
    ("convt1d", dict(b=8, t=64, c_in=48, c_out=32, k=4, s=2, p=1, dtype=np.float64)),
    ("conv2d", dict(b=3, t=128, c_in=17, c_out=8, k=3, s=1, p=1, dtype=np.float32)),
    ("conv2d", dict(b=3, t=64, c_in=8, c_out=16, k=4, s=2, p=1, dtype=np.float32)),
    ("conv2d", dict(b=2, t=128, c_in=20, c_out=16, k=4, s=2, p=1, dtype=np.float32)),
    ("convt2d", dict(b=3, t=64, c_in=32, c_out=12, k=4, s=2, p=1, dtype=np.float32)),
]


def make_arrays(op, spec, rng):
    k, ci, co = spec["k"], spec["c_in"], spec["c_out"]
    if op.endswith("1d"):
        x = rng.standard_normal((spec["b"], spec["t"], ci)).astype(spec["dtype"])
        w = rng.standard_normal((k, ci, co)).astype(spec["dtype"])
    else:
        x = rng.standard_normal((spec["b"], spec["t"], spec["t"], ci)).astype(spec["dtype"])
        w = rng.standard_normal((k, k, ci, co)).astype(spec["dtype"])
    bias = np.zeros(co, dtype=spec["dtype"])
    return x, w, bias


def timeit(fn, repeats):
    fn()  # warmup (and JIT compile)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_kernels(repeats):
    rng = np.random.default_rng(0)
    print(f"{'kernel':44s} {'numpy':>10s} {'numba':>10s} {'numba/numpy':>12s}")
    for op, spec in SHAPES:
        x, w, bias = make_arrays(op, spec, rng)
        fwd = getattr(kernels, op + "_fwd")
        bwd = getattr(kernels, op + "_bwd")
        gy = None
        results = {}
        for backend in ("numpy", "numba"):
            kernels.use_backend(backend)
            if gy is None:
                gy = rng.standard_normal(fwd(x, w, bias, spec["s"], spec["p"]).shape).astype(
                    spec["dtype"]
                )
            tf = timeit(lambda: fwd(x, w, bias, spec["s"], spec["p"]), repeats)
            tb = timeit(lambda: bwd(x, w, gy, spec["s"], spec["p"]), repeats)
            results[backend] = (tf, tb)
        desc = f"{op} B{spec['b']} T{spec['t']} {spec['c_in']}->{spec['c_out']} k{spec['k']}s{spec['s']}"
        for phase, idx in (("fwd", 0), ("bwd", 1)):
            tn, tj = results["numpy"][idx], results["numba"][idx]
            print(f"{desc + ' ' + phase:44s} {tn * 1e3:8.2f}ms {tj * 1e3:8.2f}ms {tj / tn:11.2f}x")


def bench_training(repeats):
    specs = [
        pd.SynthSpec(
            category=i % 15,
            trajectory=pd.LineTrajectory((0.3, 0.4), (0.7, 0.55)),
            length=160,
            seed=i,
        )
        for i in range(8)
    ]
    seqs = pd.synth_dataset(specs)
    f_pairs = [w for s in seqs for w in pd.make_windows(s, hop=16)]
    v_pairs = vg.skeleton_video_pairs(seqs[:3], seed=0)
    print()
    print(f"{'training step':44s} {'numpy':>10s} {'numba':>10s}")
    rows = {}
    for backend in ("numpy", "numba"):
        kernels.use_backend(backend)
        ft = pf.ForecastTrainer(f_pairs, pf.ForecastConfig())
        rows.setdefault("pose forecaster (batch 8)", {})[backend] = timeit(
            ft.train_step, repeats
        )
        vt = vg.VideoTrainer(v_pairs, vg.VideoGenConfig())
        rows.setdefault("frame synthesis (128x128)", {})[backend] = timeit(
            vt.train_step, max(1, repeats // 4)
        )
    for name, r in rows.items():
        print(f"{name:44s} {r['numpy'] * 1e3:8.1f}ms {r['numba'] * 1e3:8.1f}ms")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--skip-training", action="store_true")
    args = parser.parse_args()
    print(f"available backends: {kernels.available_backends()}")
    bench_kernels(args.repeats)
    if not args.skip_training:
        bench_training(args.repeats)


if __name__ == "__main__":
    main()
