"""Benchmark the compiled extension core against the pure-numpy fallback.

Run as:  python benchmarks/bench_core.py
(imports both backends directly; the package-level selection is untouched).
"""

import time

import numpy as np

import fpalign._core_np as core_np

try:
    import fpalign._core as core_c
except ImportError:
    core_c = None


def bench(fn, *args, repeat=200):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def kinetic_step_timer(backend_mod):
    """One full Strang step at the desk scale (128 x 128)."""
    from fpalign.grids import make_grids
    from fpalign.kernels import KernelSpec, build_kernel
    from fpalign import kinetic, _backend

    _backend.core = backend_mod
    kinetic.core = backend_mod
    import fpalign.kernels as kmod
    kmod.core = backend_mod

    g = make_grids(2 * np.pi, 128, 8.0, 128)
    kern = build_kernel(KernelSpec("global_uniform"), g.x)
    st = kinetic.init_state(kinetic.InitAnsatz("modulated", amplitude=0.3),
                            g, 1.0, 2 * np.pi)

    def one_step():
        kinetic.step(st, 1e-3, kern)

    return bench(one_step, repeat=100)


def main():
    rng = np.random.default_rng(7)
    nx, nv = 128, 128
    f = np.abs(rng.normal(size=(nx, nv))) + 0.1
    k = rng.integers(-3, 3, size=nv)
    nu = rng.uniform(0.0, 1.0, size=nv)
    sub = 0.1 * rng.normal(size=(nx, nv))
    sup = 0.1 * rng.normal(size=(nx, nv))
    diag = 2.0 + np.abs(rng.normal(size=(nx, nv)))
    rhs = rng.normal(size=(nx, nv))
    g1 = rng.normal(size=nx)
    phi = np.abs(rng.normal(size=nx))

    backends = [("numpy", core_np)]
    if core_c is not None:
        backends.append(("compiled", core_c))

    rows = []
    for name, mod in backends:
        rows.append((name,
                     bench(mod.advect_rows, f, k, nu) * 1e6,
                     bench(mod.thomas_columns, sub, diag, sup, rhs) * 1e6,
                     bench(mod.convolve_circ, g1, phi, 0.05) * 1e6,
                     kinetic_step_timer(mod) * 1e3))

    print(f"{'backend':<10} {'advect_rows us':>15} {'thomas us':>12} "
          f"{'convolve us':>12} {'full step ms':>13}")
    for name, a, t, c, s in rows:
        print(f"{name:<10} {a:>15.1f} {t:>12.1f} {c:>12.1f} {s:>13.3f}")
    if core_c is not None:
        print(f"\nfull-step speedup: {rows[0][4] / rows[1][4]:.2f}x")


if __name__ == "__main__":
    main()
