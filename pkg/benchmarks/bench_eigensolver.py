"""Compare the compiled Jacobi eigensolver with the pure-Python fallback.

Times single 12x12 diagonalizations, a batched sweep and a small theta map on
each available backend, and checks eigenvalues against LAPACK.

    python3 benchmarks/bench_eigensolver.py --repeat 200
"""
import argparse
import json
import timeit

import numpy as np

from vsic import eigen
from vsic.hamiltonian import CenterParams, StrainTensor, build_hamiltonian
from vsic.optics import theta_map


def _matrices(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        p = CenterParams(*rng.uniform(-10, 10, 5))
        u = StrainTensor(*rng.uniform(-0.5, 0.5, 6))
        out.append(build_hamiltonian(p, u))
    return np.array(out)


def bench(backend, mats, repeat):
    single = mats[0]
    t_single = min(timeit.repeat(lambda: eigen.eigh(single, backend=backend),
                                 number=repeat, repeat=3)) / repeat
    t_batch = min(timeit.repeat(lambda: eigen.eigh_batch(mats, backend=backend),
                                number=1, repeat=3)) / len(mats)
    lam = np.linspace(0, 0.3, 11)
    t_map = min(timeit.repeat(lambda: theta_map(lam, lam, backend=backend), number=1, repeat=3))
    w, _ = eigen.eigh_batch(mats, backend=backend)
    err = float(np.max(np.abs(w - np.linalg.eigvalsh(mats))))
    return {"single_ms": 1e3 * t_single, "batch_ms_per_matrix": 1e3 * t_batch,
            "theta_map_11x11_s": t_map, "max_abs_error_vs_lapack": err}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=100, help="calls per single-matrix timing")
    ap.add_argument("--batch", type=int, default=200, help="matrices in the batched timing")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)

    mats = _matrices(args.batch, args.seed)
    results = {name: bench(name, mats, args.repeat) for name in eigen.available_backends()}
    if args.json:
        print(json.dumps(results, indent=2))
        return
    print(f"default backend: {eigen.BACKEND}")
    print(f"{'backend':>9} {'single ms':>10} {'batch ms/mat':>13} {'map s':>8} {'err':>9}")
    for name, r in results.items():
        print(f"{name:>9} {r['single_ms']:10.4f} {r['batch_ms_per_matrix']:13.4f} "
              f"{r['theta_map_11x11_s']:8.3f} {r['max_abs_error_vs_lapack']:9.1e}")
    if "compiled" in results:
        ratio = results["python"]["single_ms"] / results["compiled"]["single_ms"]
        print(f"compiled speed-up (single matrix): {ratio:.0f}x")


if __name__ == "__main__":
    main()
