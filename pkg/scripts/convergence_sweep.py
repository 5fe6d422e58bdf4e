"""k-sweep of a density construction on one corpus field; prints the report CSV."""

import argparse
import sys
import time

from sbd_approx import density_pipeline as dp
from sbd_approx.cli import CORPUS_IDS, corpus_field


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--field", default="curved-crack-strained", choices=CORPUS_IDS)
    ap.add_argument("--k", default="16,32,64,128")
    ap.add_argument("--thm", default="11", choices=("11", "12", "13"))
    ap.add_argument("--eps", type=float, default=0.1)
    args = ap.parse_args()
    f = corpus_field(args.field)
    rep = dp.ConvergenceReport("thm" + args.thm)
    for k in (int(x) for x in args.k.split(",")):
        t = time.perf_counter()
        res = dp.APPROXIMATORS[args.thm](f, k, eps=args.eps)
        rep.rows.append(res.row)
        audit = dp.seam_audit(res)
        print(f"k={k} bd_error={res.row.bd_error:.4g} strips={res.row.n_strips} "
              f"seam length {audit.seam_length:.3g} <= {audit.bound:.3g}  ({time.perf_counter() - t:.1f}s)",
              file=sys.stderr)
    sys.stdout.write(rep.to_csv())
    bd = rep.column("bd_error")
    if len(bd) > 1 and bd[-1] > 0:
        print(f"bd_error end-to-start ratio {bd[0] / bd[-1]:.2f}", file=sys.stderr)


if __name__ == "__main__":
    main()
