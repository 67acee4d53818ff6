"""Spectral quantities of the permutation-inversion adversary matrix for small n."""

import argparse
import time

from lasvegas import problems


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[3, 4, 5, 6])
    args = ap.parse_args()
    cols = ["lambda_gamma", "lambda_neg_gamma", "lambda_gamma_delta", "norm_gamma_delta_prime",
            "lambda_gamma_delta_dblprime", "spalek_bound", "ratio_exact"]
    print("n,cycles," + ",".join(cols) + ",seconds")
    for n in args.n:
        t0 = time.perf_counter()
        r = problems.perm_inversion(n).report
        dt = time.perf_counter() - t0
        print(f"{n},{r['cycles']}," + ",".join(f"{r[c]:.6f}" for c in cols) + f",{dt:.2f}")


if __name__ == "__main__":
    main()
