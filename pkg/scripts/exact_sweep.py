"""Exact compilation on the two-label family G_1 -> G_b over the boundary.

For each point of the adversary boundary w0 * w1 = bound**2, compile an exact
algorithm and report how far its measured profile sits from the target.
"""

import argparse
import numpy as np

from lasvegas import problems, synth
from lasvegas.sim import check_state_conversion


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b", type=complex, default=1j)
    ap.add_argument("--delta", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    ap.add_argument("--points", type=int, default=5)
    args = ap.parse_args()
    tl = problems.two_label(1, args.b, np.array([[1.0]]), np.array([[-1.0]]))
    print(f"# bound={tl.bound:.6f}")
    print("delta,w0,w1,L0,L1,T,sum_minus_2bound,max_error")
    for delta in args.delta:
        for w0 in np.geomspace(tl.bound / 2, tl.bound * 2, args.points):
            sol = tl.boundary_solution(w0)
            algo = synth.compile_exact(tl.problem, sol, delta)
            rep = check_state_conversion(algo, tl.problem, 1e-8)
            l0, l1 = rep.profile.values.ravel()
            w1 = tl.bound ** 2 / w0
            print(f"{delta},{w0:.4f},{w1:.4f},{l0:.4f},{l1:.4f},{algo.T},{l0 + l1 - 2 * tl.bound:.4f},"
                  f"{max(rep.errors.values()):.1e}")


if __name__ == "__main__":
    main()
