"""Head-to-head timing of the compiled and pure-Python tableau engines.

Runs the same workloads through both backends by toggling
TEMPENT_FORCE_PY in-process (the engine is selected per call, so no
re-import is needed).  Two tiers:

* micro: one dense gate column plus a prefix-entropy sweep on a raw
  tableau, isolating the kernel loops from trajectory bookkeeping;
* trajectory: full monitored trajectories through tempent.sim, which is
  what actually dominates production runs.

Usage:  python3 benchmarks/bench_kernels.py [--repeats N] [--full]

--full adds the production-scale trajectory size; expect the pure lane
to need a couple of minutes there.
"""

import argparse
import os
import statistics
import sys
from time import perf_counter

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from tempent import gates, kernels, sim  # noqa: E402


def _checked(result, reference):
    if reference is not None and not np.array_equal(result, reference):
        raise AssertionError("backends disagree on the checksum workload")
    return result


def micro_workload(n_qubits: int, n_columns: int, seed: int) -> np.ndarray:
    """Dense gate columns plus entropy sweeps on a Bell-pair chain."""
    pairs = [(2 * i, 2 * i + 1) for i in range(n_qubits // 2)]
    eng = kernels.tableau_class().bell_chain(n_qubits, pairs)
    matrix = gates.sdki_r_from_indices(seed % 24, (5 * seed) % 24)
    images, signs = gates.conjugation_table(gates.spacetime_rotate(matrix))
    total = np.zeros(n_qubits, dtype=np.int64)
    for col in range(n_columns):
        lo = col % 2
        for a in range(lo, n_qubits - 1, 2):
            eng.apply_table(a, a + 1, images, signs)
        total += eng.prefix_entropies()
    return total


def trajectory_workload(T: int, L_max: int, p: float, n_traj: int) -> np.ndarray:
    cfg = sim.ExperimentConfig(T=T, L_max=L_max, p=p, family="sdki-r",
                               n_traj=n_traj, master_seed=7)
    out = np.zeros(T - 1, dtype=np.int64)
    for k in range(n_traj):
        out += sim.run_trajectory(cfg, k).per_cut[-1]
    return out


def time_both(label, fn, repeats):
    rows = []
    reference = None
    for backend in ("compiled", "python"):
        if backend == "python":
            os.environ["TEMPENT_FORCE_PY"] = "1"
        else:
            os.environ.pop("TEMPENT_FORCE_PY", None)
        if kernels.backend_name() != backend:
            rows.append((backend, None))
            continue
        samples = []
        for _ in range(repeats):
            t0 = perf_counter()
            result = fn()
            samples.append(perf_counter() - t0)
        reference = _checked(result, reference)
        rows.append((backend, samples))
    os.environ.pop("TEMPENT_FORCE_PY", None)

    print(f"\n{label}")
    best = {}
    for backend, samples in rows:
        if samples is None:
            print(f"  {backend:>8}: not available")
            continue
        best[backend] = min(samples)
        spread = statistics.pstdev(samples) if len(samples) > 1 else 0.0
        print(f"  {backend:>8}: best {min(samples):8.4f} s   "
              f"mean {statistics.mean(samples):8.4f} s   +/- {spread:.4f}")
    if len(best) == 2:
        print(f"  speedup : {best['python'] / best['compiled']:.1f}x "
              f"(pure / compiled, best of {repeats})")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repetitions per backend (default 3)")
    ap.add_argument("--full", action="store_true",
                    help="include the production-scale trajectory size")
    args = ap.parse_args()

    print(f"numpy {np.__version__}, default backend: {kernels.backend_name()}")

    time_both("micro: 64 qubits, 64 gate columns + entropy sweeps",
              lambda: micro_workload(64, 64, seed=1), args.repeats)
    time_both("micro: 192 qubits, 32 gate columns + entropy sweeps",
              lambda: micro_workload(192, 32, seed=2), args.repeats)
    time_both("trajectory: T=64, L_max=96, p=0.3, 4 trajectories",
              lambda: trajectory_workload(64, 96, 0.3, 4), args.repeats)
    if args.full:
        time_both("trajectory: T=216, L_max=324, p=0.5, 1 trajectory",
                  lambda: trajectory_workload(216, 324, 0.5, 1),
                  max(1, args.repeats - 1))


if __name__ == "__main__":
    main()
