"""Compare the accelerated and pure-numpy kernel backends.

Backend selection happens at import time via FLASHVID_BACKEND, so each
backend is timed in its own subprocess and the parent prints the table.

Usage: python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _time_best(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def worker(repeats):
    import numpy as np

    from flashvid import CompressionConfig, SynthSpec, flashvid_compress, generate
    from flashvid import _kernels

    rng = np.random.default_rng(0)
    rows = {}

    for n in (64, 196, 512):
        dist = rng.random((n, n))
        dist = (dist + dist.T) / 2
        np.fill_diagonal(dist, 0.0)
        dist = np.ascontiguousarray(dist)
        quota = n // 4
        _kernels.mmdp_greedy(dist, quota)  # warm (jit compile)
        rows[f"mmdp_greedy n={n} quota={quota}"] = _time_best(
            lambda: _kernels.mmdp_greedy(dist, quota), repeats
        )

    for n in (256, 1024, 2048):
        pts = rng.standard_normal((n, 32))
        sq = np.sum(pts * pts, axis=1)
        dist2 = np.ascontiguousarray(
            np.maximum(sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T), 0.0)
        )
        _kernels.knn_density(dist2, 5)
        rows[f"knn_density n={n} k=5"] = _time_best(
            lambda: _kernels.knn_density(dist2, 5), repeats
        )

    feats, attn = generate(
        SynthSpec(frames=32, tokens_per_frame=196, dim=128, num_entities=6, seed=7)
    )
    cfg = CompressionConfig(retention_ratio=0.1)
    flashvid_compress(feats, attn, cfg)  # warm
    rows["compress 32x196x128"] = _time_best(
        lambda: flashvid_compress(feats, attn, cfg), repeats
    )

    print(json.dumps({"backend": _kernels.BACKEND, "rows": rows}))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.worker:
        worker(args.repeats)
        return

    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, FLASHVID_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, __file__, "--worker", "--repeats", str(args.repeats)],
            capture_output=True,
            text=True,
            env=env,
        )
        if proc.returncode != 0:
            sys.stderr.write(proc.stderr)
            raise SystemExit(f"{backend} worker failed")
        payload = json.loads(proc.stdout.strip().splitlines()[-1])
        results[payload["backend"]] = payload["rows"]

    names = list(next(iter(results.values())))
    width = max(len(n) for n in names)
    print(f"{'kernel':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name in names:
        nb = results["numba"][name]
        np_ = results["numpy"][name]
        print(
            f"{name:<{width}}  {nb * 1e3:>8.2f}ms  {np_ * 1e3:>8.2f}ms  "
            f"{np_ / nb:>7.2f}x"
        )


if __name__ == "__main__":
    main()
