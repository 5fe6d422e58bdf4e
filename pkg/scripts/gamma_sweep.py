"""Phase-field minima against the limit energy on 1D bars, plus the large-displacement bar."""

import argparse

import numpy as np

from sbd_approx import phase_field as pf


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--psi", default="linear", choices=("linear", "quadratic", "power"))
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--delta", type=float, default=3.0, help="end displacement of the cohesive bar")
    args = ap.parse_args()
    psi = pf.psi_family(args.psi)
    c = pf.constants(psi, args.p)
    print(f"a = {c.a:.12g}  b = {c.b:.12g}")
    for target, delta in (("jump", 1.0), ("elastic", 0.3)):
        print(f"\n{target} target, delta = {delta}")
        print(f"{'eps':>10} {'min F_eps':>12} {'F':>10} {'rel err':>9} {'iters':>6}")
        for r in pf.gamma_check(target, psi=psi, p=args.p, delta=delta):
            print(f"{r.eps:10.5f} {r.energy:12.6f} {r.F_limit:10.6f} {r.rel_error:9.4f} {r.iterations:6d}")
    oracle = pf.cohesive_bar_oracle(1.0, args.delta, c)
    print(f"\nbar with end displacement {args.delta}: limit minimum {oracle:.5f}")
    for eps in (2 ** -4, 2 ** -5, 2 ** -6):
        grid, u0, fixed, _ = pf._bar_problem("elastic", eps, 1.0, args.delta, 2.0, 8.0)
        v0 = np.clip(1 - np.exp(-np.abs(grid.nodes() - 0.5) / eps), eps, 1)
        r = pf.minimize_F_eps(grid, u0, eps, psi, args.p, fixed, v0)
        print(f"  eps={eps:.5f} min F_eps={r.energy:.5f} min v={r.state.v.min():.3f} "
              f"outer iterations={r.iterations}")


if __name__ == "__main__":
    main()
