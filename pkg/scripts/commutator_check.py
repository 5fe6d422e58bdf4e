"""Mollifier commutator estimate on jump fields for several radii and exponents."""

from sbd_approx.cli import corpus_field
from sbd_approx.geometry import Rect
from sbd_approx.mollify import Mollifier, commutator_bound


def main():
    fields = {name: corpus_field(name) for name in ("pure-jump", "piecewise-rigid-flat", "curved-crack-strained")}
    print(f"{'field':>24} {'r':>7} {'p':>4} {'lhs':>11} {'rhs':>11} {'ratio':>7}")
    for name, f in fields.items():
        for r in (1 / 8, 1 / 16, 1 / 32):
            Q = Rect((0.5, 0.5), (2 * r, 2 * r))
            for p in (1.5, 2.0, 3.0):
                c = commutator_bound(f, Mollifier(1 / r), Q, p)
                print(f"{name:>24} {r:7.4f} {p:4.1f} {c.lhs:11.4e} {c.rhs:11.4e} {c.ratio:7.3f}"
                      + ("" if c.holds else "  VIOLATED"))


if __name__ == "__main__":
    main()
