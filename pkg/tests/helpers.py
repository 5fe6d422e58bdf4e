"""Small field factories shared by the test modules."""

from sbd_approx.sbd_field import PolyField

UNIT = [0.0, 0.0, 1.0, 1.0]


def poly(components, label="0", segs=(), domain=UNIT, h=1 / 64):
    return PolyField.from_spec({"domain": list(domain), "components": components, "label_expr": label,
                                "jump_segments": list(segs), "h": h})


def smooth(u1, u2, **kw):
    return poly([[u1, u2]], **kw)


def flat_jump(lo, hi, y=0.5, x0=0.0, x1=1.0, amplitude=None, **kw):
    """Two components across a horizontal segment, upper one labelled 1."""
    seg = {"p0": [x0, y], "p1": [x1, y], "normal": [0.0, 1.0]}
    if amplitude is not None:
        seg["amplitude_expr"] = amplitude
    if x0 <= 0 and x1 >= 1:
        label = f"Piecewise((1, y > {y}), (0, True))"
    else:
        label = f"Piecewise((1, (y > {y}) & (x > {x0}) & (x < {x1})), (0, True))"
    return poly([lo, hi], label, [seg], **kw)


def pure_jump(amp=(1.0, 0.0), **kw):
    return flat_jump(["0", "0"], [repr(float(amp[0])), repr(float(amp[1]))],
                     amplitude=[repr(float(amp[0])), repr(float(amp[1]))], **kw)


def rigid_exprs(b1, b2, om):
    """b + W x with W = [[0, om], [-om, 0]]."""
    return [f"{b1!r} + {om!r}*y", f"{b2!r} - {om!r}*x"]


# criterion number -> list of (ok, detail); printed by the terminal-summary hook in conftest
ACCEPTANCE: dict = {}


def record(n: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(n, []).append((bool(ok), detail))
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok
