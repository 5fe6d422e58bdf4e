"""Good/bad rough approximation of the curved-crack field: excluded set, errors, jump length."""

import numpy as np

from sbd_approx.cli import corpus_field
from sbd_approx.extension import ReflectExtended
from sbd_approx.geometry import Rect, h1_length
from sbd_approx.rough_approx import build_rough
from sbd_approx.sbd_field import frob

THETA = 0.1


def main():
    f = corpus_field("curved-crack-strained")
    F = ReflectExtended(f, pad=3.0)
    omega = Rect.from_bounds(0, 0, 1, 1)
    L = h1_length(f.segs)
    print(f"{'k':>4} {'#bad':>5} {'excl area':>10} {'L1 off E':>10} {'L2 strain off E':>16} {'L1 total':>10} {'C':>6}")
    for k in (8, 16, 32, 64):
        r = build_rough(F, omega, k, THETA)
        ni, nj = r.U.shape[:2]
        X = r.engine.cell_centers(0, ni, 0, nj).reshape(-1, 2)
        keep = ~r.block.excluded.ravel()
        a = r.engine.hg ** 2
        d = np.linalg.norm(r.U.reshape(-1, 2) - f.eval(X), axis=1)
        de = frob(r.E.reshape(-1, 2, 2) - f.strain(X))
        C = r.jump_length() * THETA / L
        print(f"{k:4d} {len(r.classification.bad):5d} {r.excluded_area:10.4f} {d[keep].sum() * a:10.3e} "
              f"{np.sqrt((de[keep] ** 2).sum() * a):16.3e} {d.sum() * a:10.3e} {C:6.2f}")


if __name__ == "__main__":
    main()
