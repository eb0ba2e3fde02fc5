"""Time the numba and numpy backends on the same workloads.

    python3 benchmarks/bench_backends.py [--repeat 3]

Both backends must give bit-identical band sums; the script checks that
before printing timings.
"""
import argparse
import time

import numpy as np

from levelquad import accel
from levelquad.geometry import make_circle_quadratic, make_cusp_star_sdf, make_l1_ball
from levelquad.grid import GridSpec
from levelquad.kernels import named_kernel
from levelquad.quadrature import QuadratureJob, integrate
from levelquad.redistance import redistance, sample_field


def _jobs():
    yield "star N=1600", QuadratureJob(make_cusp_star_sdf(0.75), named_kernel("bump:1"), "0.05",
                                       GridSpec(2, 1600))
    yield "circle N=3200", QuadratureJob(make_circle_quadratic(0.501), named_kernel("bump:2"),
                                         "2*h^0.5", GridSpec(2, 3200))
    yield "l1 3D N=200", QuadratureJob(make_l1_ball(3, 0.65), named_kernel("bump:2"), "0.1",
                                       GridSpec(3, 200))


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sweep-n", type=int, default=100, help="grid size for the redistancing case")
    args = ap.parse_args()
    if accel.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'workload':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, job in _jobs():
        res = {}
        for b in ("numba", "numpy"):
            accel.set_backend(b)
            integrate(job)  # warm-up / compile
            res[b] = _best(lambda: integrate(job), args.repeat)
        assert res["numba"][1] == res["numpy"][1], f"{name}: backends disagree"
        print(f"{name:<22}{res['numba'][0]:12.4f}{res['numpy'][0]:12.4f}{res['numpy'][0] / res['numba'][0]:10.1f}")

    grid = GridSpec(2, args.sweep_n)
    phi = sample_field(grid, make_circle_quadratic(0.501))
    res = {}
    for b in ("numba", "numpy"):
        accel.set_backend(b)
        redistance(grid, phi)
        res[b] = _best(lambda: redistance(grid, phi).values, 1 if b == "numpy" else args.repeat)
    assert np.array_equal(res["numba"][1], res["numpy"][1]), "sweep backends disagree"
    name = f"sweep N={args.sweep_n}"
    print(f"{name:<22}{res['numba'][0]:12.4f}{res['numpy'][0]:12.4f}{res['numpy'][0] / res['numba'][0]:10.1f}")


if __name__ == "__main__":
    main()
