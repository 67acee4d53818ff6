"""Catalyst compilation of the two-label instance for growing T.

The Las Vegas profile stays fixed while the catalyst shrinks as sqrt(L/T).
"""

import argparse

import numpy as np

from lasvegas import problems, synth
from lasvegas.sim import check_state_conversion


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=int, nargs="+", default=[1, 4, 16, 64, 256, 1024])
    ap.add_argument("--w0", type=float, default=0.5, help="first label's share on the boundary")
    args = ap.parse_args()
    tl = problems.two_label(1, 0, np.array([[1.0]]), np.array([[-1.0]]))
    sol = tl.boundary_solution(args.w0)
    print("T,L0,L1,catalyst_norm,max_error")
    for T in args.T:
        res = synth.compile_approx(tl.problem, sol, T)
        rep = check_state_conversion(res.algo, res.problem(tl.problem.oracles), 1e-9)
        shift = np.linalg.norm(res.xi_plus[0] - np.pad(tl.problem.xi[0], (0, res.xi_plus.shape[1] - 2)))
        l0, l1 = rep.profile.values.ravel()
        print(f"{T},{l0:.12f},{l1:.12f},{shift:.3e},{max(rep.errors.values()):.2e}")


if __name__ == "__main__":
    main()
