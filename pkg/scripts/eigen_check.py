"""Spectral triangle: FD derivative of H at constants against -V(lambda k)/lambda.

    python scripts/eigen_check.py --k-max 5
"""
import argparse
import time

from exdomains.dispersion import dispersion_V, find_lambda_star
from exdomains.linearized import eigen_check_fd


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-max", type=int, default=5)
    ap.add_argument("--lambdas", type=float, nargs="*", default=[0.3, 0.7, 1.3])
    args = ap.parse_args()

    lams = sorted(args.lambdas + [find_lambda_star().lambda_star])
    print(f"{'lambda':>10} {'k':>3} {'FD estimate':>16} {'-V(lk)/l':>16} {'err/tol':>9}")
    t0 = time.perf_counter()
    worst = 0.0
    for lam in lams:
        for k in range(1, args.k_max + 1):
            ref = -dispersion_V(lam * k) / lam
            est = eigen_check_fd(lam, k)
            ratio = abs(est - ref) / max(1e-4, 1e-3 * abs(ref))
            worst = max(worst, ratio)
            print(f"{lam:10.6f} {k:3d} {est:16.10f} {ref:16.10f} {ratio:9.2e}")
    print(f"worst error / tolerance = {worst:.2e}  ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
