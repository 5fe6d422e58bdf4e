"""Command-line front end and the named field corpus."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass
from dataclasses import field as dataclass_field
from pathlib import Path

import numpy as np

from .sbd_field import PolyField

CORPUS_IDS = ("piecewise-rigid-flat", "curved-crack-strained", "pure-jump", "smooth-poly",
              "boundary-trace")
UNIT = [0.0, 0.0, 1.0, 1.0]


def _flat_crack(components, amplitude=None):
    seg = {"p0": [0.0, 0.5], "p1": [1.0, 0.5], "normal": [0.0, 1.0]}
    if amplitude is not None:
        seg["amplitude_expr"] = amplitude
    return {"domain": UNIT, "components": components, "label_expr": "Piecewise((1, y > 0.5), (0, True))",
            "jump_segments": [seg], "h": 1 / 64}


def _curved_crack(n_seg: int = 32):
    a, b, c = 0.25, 0.75, 0.06
    xs = np.linspace(a, b, n_seg + 1)
    ys = 0.5 + c * (xs - 0.5) ** 2
    segs = []
    for i in range(n_seg):
        p0, p1 = [float(xs[i]), float(ys[i])], [float(xs[i + 1]), float(ys[i + 1])]
        d = np.array(p1) - np.array(p0)
        nrm = np.array([-d[1], d[0]]) / np.linalg.norm(d)
        segs.append({"p0": p0, "p1": p1, "normal": [float(nrm[0]), float(nrm[1])]})
    # chord height of the uniform polyline: one floor instead of one branch per segment
    dx = (b - a) / n_seg
    xi = f"({a!r} + {dx!r}*floor((x - {a!r})/{dx!r}))"
    chord = f"(0.5 + {c!r}*(({xi} - 0.5)**2 + (x - {xi})*(2*{xi} + {dx!r} - 1)))"
    label = f"Heaviside(x - {a!r}, 1)*Heaviside({b!r} - x, 0)*Heaviside(y - {chord}, 0)"
    u0 = ["0.3*x*y + 0.1*y**2", "0.2*x + 0.1*(y - 0.5)**3"]
    bump = "(x - 0.25)**2*(0.75 - x)**2"
    u1 = [f"{u0[0]} + 64*{bump}", f"{u0[1]} + 32*{bump}"]
    return {"domain": UNIT, "components": [u0, u1], "label_expr": label, "jump_segments": segs,
            "h": 1 / 64}


def corpus_spec(name: str) -> dict:
    """Deterministic JSON-ready field spec for a corpus id."""
    if name == "piecewise-rigid-flat":
        lo = ["0.1 + 0.2*y", "-0.05 - 0.2*x"]
        hi = ["1.1 + 0.2*y", "-0.05 - 0.2*x"]
        return _flat_crack([lo, hi], ["1", "0"])
    if name == "pure-jump":
        return _flat_crack([["0", "0"], ["1", "0"]], ["1", "0"])
    if name == "curved-crack-strained":
        return _curved_crack()
    if name == "smooth-poly":
        return {"domain": UNIT,
                "components": [["0.3*x**2*y + 0.1*y**4 - 0.2*x*y", "0.25*x**3 - 0.15*x*y**2 + 0.1*y"]],
                "label_expr": "0", "jump_segments": [], "h": 1 / 64}
    if name == "boundary-trace":
        return {"domain": UNIT, "components": [["1 + 0.2*x", "0.5 - 0.1*y + 0.05*x**2"]],
                "label_expr": "0", "jump_segments": [], "h": 1 / 64}
    raise ValueError(f"unknown corpus id {name!r}; known: {', '.join(CORPUS_IDS)}")


def corpus_field(name: str) -> PolyField:
    return PolyField.from_spec(corpus_spec(name))


# ---------------------------------------------------------------------- commands
HELP_COLUMNS = """\
approx CSV columns (one row per k, floats with 17 significant digits):
  k, bd_error, strain_lp_error, jump_symmdiff, jump_amp_error, excluded_area,
  excluded_lp_error, jump_creation, l1_error, strain_l1_error, jump_strain_error,
  seam_length, seam_energy, eta_eps, n_cubes, n_strips
gamma CSV columns: eps, energy, F_limit, rel_error, iterations

exit codes: 0 ok, 2 invariant assertion failed, 3 precondition rejected
"""

EXIT_OK, EXIT_ASSERT, EXIT_REJECT = 0, 2, 3


class Rejected(Exception):
    pass


def _log(msg: str):
    if not os.environ.get("SBD_APPROX_QUIET"):
        print(msg, file=sys.stderr, flush=True)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_field(ref: str) -> PolyField:
    if ref in CORPUS_IDS:
        return corpus_field(ref)
    p = Path(ref)
    if not p.exists():
        raise Rejected(f"unknown field {ref!r}: neither a corpus id nor a file")
    return PolyField.from_spec(json.loads(p.read_text()))


def _k_list(s: str) -> list:
    ks = [int(x) for x in s.split(",") if x.strip()]
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
        raise Rejected("k list must be nonempty and strictly increasing")
    return ks


@dataclass
class RunConfig:
    command: str
    field: str | None = None
    k_list: list = dataclass_field(default_factory=list)
    theta: float = 0.1
    eps: float = 0.1
    p: float = 2.0
    thm: str = "11"
    out: str | None = None
    seed: int = 0
    threads: int = 1

    def validate(self):
        if not 0 < self.theta < 1:
            raise Rejected("theta must lie in (0, 1)")
        if self.p <= 1:
            raise Rejected("p must exceed 1")
        if self.threads < 1:
            raise Rejected("threads must be positive")


def cmd_gen(name: str, out: str | None = None) -> str:
    if name not in CORPUS_IDS:
        raise Rejected(f"unknown corpus id {name!r}; known: {', '.join(CORPUS_IDS)}")
    text = json.dumps(corpus_spec(name), indent=1, sort_keys=True) + "\n"
    _emit(text, out)
    return text


def _check_row(row, thm: str):
    vals = np.array([v for v in asdict(row).values()], float)
    assert np.all(np.isfinite(vals)), "non-finite metric"
    assert np.all(vals >= 0), "negative metric"


def cmd_approx(cfg: RunConfig) -> str:
    from . import density_pipeline as dp

    cfg.validate()
    f = _load_field(cfg.field)
    rep = dp.ConvergenceReport("thm" + cfg.thm)
    kw = {"eps": cfg.eps, "p": cfg.p}
    if cfg.thm == "11":
        kw["theta"] = cfg.theta
    for k in cfg.k_list:
        _log(f"thm{cfg.thm} k={k}")
        try:
            res = dp.APPROXIMATORS[cfg.thm](f, k, **kw)
        except ValueError as e:
            raise Rejected(str(e)) from e
        _check_row(res.row, cfg.thm)
        rep.rows.append(res.row)
    text = rep.to_csv()
    _emit(text, cfg.out)
    return text


def _gamma_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eps", "energy", "F_limit", "rel_error", "iterations"])
    for r in rows:
        w.writerow([f"{r.eps:.17g}", f"{r.energy:.17g}", f"{r.F_limit:.17g}", f"{r.rel_error:.17g}",
                    r.iterations])
    return buf.getvalue()


def cmd_gamma(config: dict, out: str | None = None, constants_only: bool = False) -> str:
    from . import phase_field as pf

    if int(config.get("dimension", 1)) != 1:
        raise Rejected("the Gamma check runs on 1D bars only")
    ps = config.get("psi", {"family": "linear"})
    psi = pf.psi_family(ps.get("family", "linear"), **ps.get("params", {}))
    p = float(config.get("p", 2.0))
    if p <= 1:
        raise Rejected("p must exceed 1")
    if constants_only:
        c = pf.constants(psi, p)
        text = f"a,b\n{c.a:.17g},{c.b:.17g}\n"
        _emit(text, out)
        return text
    eps_list = [float(e) for e in config.get("eps_list", [2 ** -3, 2 ** -4, 2 ** -5, 2 ** -6])]
    rows = pf.gamma_check(config.get("target", "jump"), eps_list, psi, p, L=float(config.get("L", 1.0)),
                          delta=float(config.get("delta", 1.0)),
                          h_ratio=float(config.get("h_rule", 8.0)))
    for r in rows:
        _log(f"eps={r.eps:g} energy={r.energy:.6g} rel={r.rel_error:.3g}")
    if rows and rows[0].F_limit > 0:
        errs = [r.rel_error for r in rows]
        assert all(b <= a for a, b in zip(errs, errs[1:])), "relative error not decreasing along the sweep"
    text = _gamma_csv(rows)
    _emit(text, out)
    return text


def cmd_verify(out: str | None = None) -> str:
    """Quick self-check: fixed-point corpus and the cohesive constants."""
    from . import density_pipeline as dp
    from . import phase_field as pf

    lines = []
    c = pf.constants(pf.psi_family("linear"), 2.0)
    ok = c.b == 2.0 and abs(c.a - 8 / 3) <= 1e-9
    lines.append(f"constants a={c.a:.17g} b={c.b:.17g} {'ok' if ok else 'FAIL'}")
    worst = 0.0
    for k in (16, 32):
        row = dp.approximate_thm11(corpus_field("piecewise-rigid-flat"), k).row
        worst = max(worst, max(float(v) for n, v in asdict(row).items()
                               if n not in ("k", "eta_eps", "n_cubes", "n_strips")))
    lines.append(f"fixed-point corpus max metric {worst:.3g} {'ok' if worst <= 1e-6 else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    _emit(text, out)
    assert ok and worst <= 1e-6, "verification failed"
    return text


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sbd-approx", description="Density constructions for SBD fields.",
                                 epilog=HELP_COLUMNS, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed (corpus is deterministic)")
    common.add_argument("--threads", type=int, default=1, help="worker threads")

    g = sub.add_parser("gen", parents=[common], help="write a corpus field spec as JSON")
    g.add_argument("--field", required=True, choices=CORPUS_IDS)

    a = sub.add_parser("approx", parents=[common], help="run a density construction over k values")
    a.add_argument("--field", required=True, help="corpus id or field-spec JSON path")
    a.add_argument("--k", default="16,32", help="comma-separated, strictly increasing")
    a.add_argument("--thm", default="11", choices=sorted(("11", "12", "13")))
    a.add_argument("--theta", type=float, default=0.1)
    a.add_argument("--eps", type=float, default=0.1)
    a.add_argument("--p", type=float, default=2.0)

    m = sub.add_parser("gamma", parents=[common], help="phase-field energy sweep against the limit")
    m.add_argument("--config", help="JSON experiment config")
    m.add_argument("--target", choices=("jump", "elastic", "zero"))
    m.add_argument("--eps", help="comma-separated eps list")
    m.add_argument("--p", type=float)
    m.add_argument("--constants-only", action="store_true", help="print a and b and exit")

    sub.add_parser("verify", parents=[common], help="quick self-check")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise Rejected("threads must be positive")
        if args.command == "gen":
            cmd_gen(args.field, args.out)
        elif args.command == "approx":
            cfg = RunConfig("approx", args.field, _k_list(args.k), args.theta, args.eps, args.p, args.thm,
                            args.out, args.seed, args.threads)
            cmd_approx(cfg)
        elif args.command == "gamma":
            config = json.loads(Path(args.config).read_text()) if args.config else {}
            if args.target:
                config["target"] = args.target
            if args.eps:
                config["eps_list"] = [float(x) for x in args.eps.split(",")]
            if args.p is not None:
                config["p"] = args.p
            cmd_gamma(config, args.out, args.constants_only)
        else:
            cmd_verify(args.out)
    except Rejected as e:
        print(f"rejected: {e}", file=sys.stderr)
        return EXIT_REJECT
    except AssertionError as e:
        print(f"assertion failed: {e}", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
