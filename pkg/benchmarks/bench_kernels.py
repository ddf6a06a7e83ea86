"""Benchmark the compiled kernel core against the NumPy fallback.

Usage:
    python benchmarks/bench_kernels.py          # kernel micro-benchmarks
    python benchmarks/bench_kernels.py --full   # adds the full-size forward

Each kernel runs on both backends with identical inputs; the table reports
per-call wall time and the worst relative difference between the outputs
(scaled by the fallback's max magnitude).
"""

import argparse
import time

import numpy as np

from lamplan._kernels import available_backends

CONV3_CASES = [
    ("enc1 full-res", (16, 72, 128, 128), 16),
    ("enc2 half-res", (32, 36, 64, 64), 32),
    ("bottleneck", (128, 9, 16, 16), 128),
    ("dec1 concat", (48, 72, 128, 128), 16),
]
CONV1_CASES = [
    ("merge1 8C->C", (128, 36, 64, 64), 16),
    ("dec3 expand", (128, 9, 16, 16), 1024),
    ("pyramid expand S=8", (8, 9, 16, 16), 4096),
]
TRILINEAR_CASES = [
    ("downsample", (144, 192, 192), (72, 128, 128)),
    ("upsample", (48, 64, 64), (72, 128, 128)),
]


def timed(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return np.asarray(out), best


def rel_diff(a, b):
    scale = max(float(np.abs(b).max()), 1e-30)
    return float(np.max(np.abs(a.astype(np.float64) - b.astype(np.float64)))) / scale


def print_row(label, t_numpy, t_compiled, diff):
    speedup = t_numpy / t_compiled if t_compiled else float("nan")
    print(
        f"{label:<22} numpy {t_numpy * 1e3:9.2f} ms   compiled {t_compiled * 1e3:9.2f} ms"
        f"   speedup {speedup:5.2f}x   max rel diff {diff:.2e}"
    )


def bench_kernels(backends):
    rng = np.random.default_rng(0)
    print("== conv3d 3x3x3 ==")
    for label, (ci, z, y, x), co in CONV3_CASES:
        xin = rng.standard_normal((ci, z, y, x)).astype(np.float32)
        w = rng.standard_normal((co, ci, 3, 3, 3)).astype(np.float32)
        b = rng.standard_normal(co).astype(np.float32)
        out_n, t_n = timed(backends["numpy"].conv3d_k3, xin, w, b)
        out_c, t_c = timed(backends["compiled"].conv3d_k3, xin, w, b)
        print_row(label, t_n, t_c, rel_diff(out_c, out_n))

    print("== conv3d 1x1x1 ==")
    for label, (ci, z, y, x), co in CONV1_CASES:
        xin = rng.standard_normal((ci, z, y, x)).astype(np.float32)
        w = rng.standard_normal((co, ci, 1, 1, 1)).astype(np.float32)
        b = rng.standard_normal(co).astype(np.float32)
        out_n, t_n = timed(backends["numpy"].conv3d_k1, xin, w, b)
        out_c, t_c = timed(backends["compiled"].conv3d_k1, xin, w, b)
        print_row(label, t_n, t_c, rel_diff(out_c, out_n))

    print("== trilinear resample ==")
    for label, src_dims, dst_dims in TRILINEAR_CASES:
        vox = rng.standard_normal(src_dims).astype(np.float32)
        out_n, t_n = timed(backends["numpy"].trilinear_resample, vox, dst_dims)
        out_c, t_c = timed(backends["compiled"].trilinear_resample, vox, dst_dims)
        print_row(label, t_n, t_c, rel_diff(out_c, out_n))


def bench_forward(full: bool):
    import os
    import subprocess
    import sys

    script = (
        "import sys, time\n"
        "import numpy as np\n"
        "from lamplan import net\n"
        "from lamplan.volume import Volume\n"
        f"cfg = net.{'STANDARD' if full else 'SMOKE'}\n"
        "store = net.init_weights(cfg, seed=1)\n"
        "vox = np.random.default_rng(0).normal(size=cfg.input_dims).astype(np.float32)\n"
        "vol = Volume(vox, (1, 1, 1), (0, 0, 0))\n"
        "t0 = time.perf_counter()\n"
        "net.forward(vol, store)\n"
        "sys.stdout.write(f'{time.perf_counter() - t0:.3f}')\n"
    )
    label = "standard (72,128,128)" if full else "smoke (24,32,32)"
    print(f"== forward pass, {label} ==")
    for backend in ("numpy", "compiled"):
        env = dict(os.environ, LAMPLAN_KERNELS=backend)
        proc = subprocess.run(
            [sys.executable, "-c", script], capture_output=True, text=True, env=env
        )
        if proc.returncode:
            print(f"{backend:<10} failed: {proc.stderr.strip().splitlines()[-1]}")
        else:
            print(f"{backend:<10} {float(proc.stdout):8.3f} s")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--full", action="store_true",
                        help="benchmark the full-size forward pass as well")
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        raise SystemExit(
            "compiled extension not built; install with the Cython extension "
            "to compare backends"
        )
    bench_kernels(backends)
    bench_forward(full=False)
    if args.full:
        bench_forward(full=True)


if __name__ == "__main__":
    main()
