"""Trace the first two bifurcating branches and report their shape.

For each branch prints lambda(s), the verification residuals, the
extrapolated lambda(0), the fitted curvature lambda''(0) and the effect
of doubling the Galerkin truncation at s = 0.03. Branches are saved as
JSON under --out.

    python scripts/trace_branches.py --out branches/
"""
import argparse
import json
import time
from pathlib import Path

import numpy as np

from exdomains.dispersion import find_lambda_star
from exdomains.solver import SolverConfig, limit_at_zero, refine_point, trace_branch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=int, default=32)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="branches")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lam_star = find_lambda_star().lambda_star
    for k, s_max in ((1, 0.05), (2, 0.03)):
        cfg = SolverConfig(N=args.modes, s_max=s_max, workers=args.threads)
        t0 = time.perf_counter()
        res = trace_branch(k, cfg, lam_star)
        dt = time.perf_counter() - t0
        print(f"branch k={k}: {len(res.points)} points in {dt:.1f} s, stop reasons {res.stop_reason}")
        for p in res.points:
            print(f"  s={p.s:+.4f} lambda={p.lam:.15f} sup={p.residual_grid_sup:.1e} "
                  f"mode0={p.mode0_residual:+.1e} it={p.iterations}")
        s, lam = res.amplitudes(), res.lambdas()
        curv = 2 * np.polynomial.polynomial.polyfit(s[s != 0], lam[s != 0], 4)[2]
        print(f"  lambda*/k = {lam_star / k:.15f}, extrapolated lambda(0) = {limit_at_zero(res):.15f}")
        print(f"  lambda''(0) ~ {curv:.4f}")
        pt = [p for p in res.points if np.isclose(p.s, 0.03)]
        if pt:
            fine = refine_point(pt[0], 2 * cfg.N, cfg)
            print(f"  N -> {2 * cfg.N}: |delta lambda(0.03)| = {abs(fine.lam - pt[0].lam):.2e}")
        doc = {"k": k, "stop_reason": res.stop_reason, "points": [p.to_dict() for p in res.points]}
        (out / f"branch_k{k}.json").write_text(json.dumps(doc, indent=2))
    print(f"wrote {out}/")


if __name__ == "__main__":
    main()
