"""Time the characteristic integrator under the numba and numpy backends.

    python benchmarks/bench_kernels.py [--particles 2048] [--steps 100]
"""
import argparse
import time

import numpy as np

from wlab import _accel
from wlab.kernels import advance
from wlab.potential import PotentialField


def cloud(n, seed=0):
    rng = np.random.default_rng(seed)
    x = np.column_stack([rng.uniform(-0.3, 0.3, n), rng.uniform(-2.2, -1.8, n)])
    k = np.column_stack([rng.normal(0.0, 0.05, n), rng.uniform(0.9, 1.1, n)])
    return x, k


def timed(name, V, x, k, dt, steps, repeat):
    _accel.set_backend(name)
    xx, kk = x.copy(), k.copy()
    advance(V, xx, kk, dt, 1)  # compile / warm up
    best = np.inf
    for _ in range(repeat):
        xx, kk = x.copy(), k.copy()
        t0 = time.perf_counter()
        advance(V, xx, kk, dt, steps)
        best = min(best, time.perf_counter() - t0)
    return best, xx


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--particles", type=int, default=2048)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    x, k = cloud(a.particles)
    print(f"{'potential':<16}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |dx|':>12}")
    for theta, variant in ((0.0, "line"), (0.5, "line"), (0.0, "smooth")):
        V = PotentialField(theta, variant)
        rows = {}
        for name in ("numba", "numpy"):
            if name == "numba" and not _accel.HAVE_NUMBA:
                continue
            rows[name] = timed(name, V, x, k, 1e-3, a.steps, a.repeat)
        label = f"{variant} theta={theta:g}"
        if len(rows) == 2:
            diff = float(np.abs(rows["numba"][1] - rows["numpy"][1]).max())
            print(f"{label:<16}{rows['numba'][0]:>12.4f}{rows['numpy'][0]:>12.4f}"
                  f"{rows['numpy'][0] / rows['numba'][0]:>10.1f}{diff:>12.2e}")
        else:
            print(f"{label:<16}{'-':>12}{rows['numpy'][0]:>12.4f}")


if __name__ == "__main__":
    main()
