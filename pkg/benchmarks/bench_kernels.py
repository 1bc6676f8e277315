"""Chain-kernel throughput: compiled (numba) vs vectorized numpy.

    python3 benchmarks/bench_kernels.py --steps 20000 --chains 1 64 1024

Both backends run the same configuration and seed; the script reports
chain-steps per second, the speedup, and the largest absolute difference
between the two sets of final states.  Run with ``STULA_DISABLE_NUMBA=1`` to
time the numpy path alone.
"""

import argparse
import time

import numpy as np

from stula import ChainConfig, InitialLaw, get_potential, run_chains
from stula._accel import NUMBA_ENABLED


def timed(p, cfg, backend, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = run_chains(p, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--potential", default="double_well")
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--chains", type=int, nargs="+", default=[1, 64, 1024])
    ap.add_argument("--lam", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    p = get_potential(args.potential)
    backends = ["numba", "numpy"] if NUMBA_ENABLED else ["numpy"]
    if NUMBA_ENABLED:
        # compile outside the timed region
        run_chains(p, ChainConfig(beta=1.0, lam=args.lam, n_steps=2, seed=1), backend="numba")

    print(f"potential={p.name} dim={p.dim} steps={args.steps} lam={args.lam}")
    print(f"{'chains':>7} {'backend':>8} {'seconds':>9} {'chain-steps/s':>14} {'speedup':>8} {'max|diff|':>10}")
    for n in args.chains:
        cfg = ChainConfig(beta=1.0, lam=args.lam, n_steps=args.steps, n_chains=n, seed=7,
                          burn_in=args.steps, init=InitialLaw.gaussian(0.0, 1.0))
        res = {b: timed(p, cfg, b, args.repeat) for b in backends}
        ref_t = res["numpy"][0]
        for b in backends:
            t, batch = res[b]
            diff = np.max(np.abs(batch.final_states - res["numpy"][1].final_states))
            print(f"{n:>7} {b:>8} {t:>9.3f} {n * args.steps / t:>14.3e} {ref_t / t:>8.1f} {diff:>10.1e}")


if __name__ == "__main__":
    main()
