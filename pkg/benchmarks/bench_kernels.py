"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints the best wall time of each kernel per backend and the speedup.
"""

import argparse
import timeit

import numpy as np

from confspheres.kernels import backends
from confspheres.viscosity import lattice_stencil


def cases():
    rng = np.random.default_rng(0)
    mats = [a + a.T for a in rng.normal(size=(500, 3, 3))]
    lams = rng.normal(size=(2000, 6))
    shape = (21, 21, 21)
    st = lattice_stencil(shape)
    grid = np.zeros(shape)
    grid.ravel()[st.boundary] = rng.uniform(0.5, 2.0, len(st.boundary))

    return {
        "jacobi_eigh 500x(3x3)": lambda k: [k.jacobi_eigh(m) for m in mats],
        "elementary_symmetric 2000x6": lambda k: [k.elementary_symmetric(v) for v in lams],
        "stencil_residual 21^3": lambda k: k.stencil_residual(grid, st.interior, st.offsets),
        "jacobi_relax 21^3 tol 1e-6": lambda k: k.jacobi_relax(grid, st.interior, st.offsets, 1e-6),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    mods = backends()
    names = sorted(mods)
    print(f"{'kernel':<30}" + "".join(f"{n:>12}" for n in names) + ("  speedup" if len(names) > 1 else ""))
    for label, fn in cases().items():
        times = {
            n: min(timeit.repeat(lambda: fn(mods[n]), number=1, repeat=args.repeat)) for n in names
        }
        row = f"{label:<30}" + "".join(f"{times[n]:>11.4f}s" for n in names)
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:7.1f}x"
        print(row)
    if "cython" not in mods:
        print("compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
