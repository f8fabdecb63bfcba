"""The four orderings between vectors and their exact verdicts.

* ``preceq_K``: ``K(g, .) <= C K(f, .)`` on ``(0, inf)``;
* ``ll_K``: ``preceq_K`` for the positive parts and for the negative parts;
* ``preceq_HLP``: ``g** <= C f**`` (no couple needed);
* ``ll_BC``: ``preceq_HLP`` for both parts.

All curves involved are piecewise linear and concave, so comparing them at
the union of their breakpoints together with the slopes at the origin and
the limits at infinity decides the inequality everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, SpecError
from .kfunctional import KCurve, k_curve
from .lattice import TOL, LatticeVector, rearrange

__all__ = ["KINDS", "RelationReport", "check_relation", "relation_constant",
           "compare_curves", "hlp_curve"]

KINDS = ("preceq_K", "ll_K", "preceq_HLP", "ll_BC")


@dataclass
class RelationReport:
    """Verdict of a relation check; ``witness`` is set iff ``holds`` is false.

    ``witness`` holds ``t``, ``lhs`` (the curve of ``g``), ``rhs`` (``C``
    times the curve of ``f``) and ``part`` (``"+"``, ``"-"`` or ``""``).
    For the HLP kinds ``lhs`` and ``rhs`` are values of ``g**`` and ``C f**``.
    """

    kind: str
    holds: bool
    witness: dict | None = None
    margin: float = 0.0
    constant: float = 1.0
    approximate: bool = False
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.holds

    def to_json(self):
        return {"kind": self.kind, "holds": self.holds, "witness": self.witness,
                "margin": self.margin, "constant": self.constant,
                "approximate": self.approximate}


def hlp_curve(f):
    """``t -> t f**(t)`` as a :class:`KCurve` built straight from ``f*``."""
    r = rearrange(f)
    if r.levels.size == 0:
        return KCurve(np.zeros(0), np.zeros(0), 0.0, 0.0)
    ts = r.edges[1:]
    ks = np.array([r.integral(t) for t in ts])
    return KCurve.from_points(ts, ks, float(r.levels[0]), float(ks[-1]))


def _probe_points(a, b):
    pts = np.union1d(a.breakpoints, b.breakpoints)
    if pts.size == 0:
        return pts
    mids = 0.5 * (pts[1:] + pts[:-1])
    return np.union1d(np.concatenate([pts, mids]), [0.5 * pts[0], 2.0 * pts[-1]])


def compare_curves(Kg, Kf, constant=1.0, tol=TOL):
    """Decide ``Kg <= constant * Kf`` everywhere on ``(0, inf)``.

    Returns ``(holds, witness, margin)``; ``margin`` is the smallest slack
    over the probe points (negative when the inequality fails).
    """
    C = float(constant)
    pts = _probe_points(Kg, Kf)
    if pts.size == 0:
        return True, None, 0.0
    lhs = Kg(pts)
    rhs = C * Kf(pts)
    slack = rhs - lhs
    allow = tol * np.maximum(1.0, np.abs(rhs))
    k = int(np.argmin(slack + allow))
    margin = float(slack.min())
    bad_slope = C * Kf.initial_slope - Kg.initial_slope < -tol * max(1.0, Kf.initial_slope)
    bad_sat = C * Kf.saturation - Kg.saturation < -tol * max(1.0, Kf.saturation)
    if slack[k] < -allow[k]:
        return False, {"t": float(pts[k]), "lhs": float(lhs[k]), "rhs": float(rhs[k])}, margin
    if bad_slope or bad_sat:
        t = float(pts[0] if bad_slope else pts[-1])
        return False, {"t": t, "lhs": float(Kg(t)), "rhs": float(C * Kf(t))}, margin
    return True, None, margin


def _parts(kind, g, f):
    if kind in ("preceq_K", "preceq_HLP"):
        return [("", g, f)]
    return [("+", g.pos, f.pos), ("-", g.neg, f.neg)]


def _curve_fn(kind, couple):
    if kind in ("preceq_HLP", "ll_BC"):
        return hlp_curve
    if couple is None:
        raise SpecError(f"{kind} needs a couple")
    return lambda v: k_curve(couple, v)


def _coerce(g, f, couple):
    space = couple.space if couple is not None else None
    if not isinstance(f, LatticeVector):
        if space is None:
            raise SpecError("pass LatticeVectors when no couple is given")
        f = LatticeVector(space, f)
    if not isinstance(g, LatticeVector):
        g = LatticeVector(f.space, g)
    if g.space != f.space or (space is not None and f.space != space):
        raise DimensionError("relation between vectors on different spaces")
    return g, f


def check_relation(kind, g, f, couple=None, constant=1.0, tol=TOL):
    """Exact verdict of ``g R (constant * f)`` for the relation ``kind``."""
    if kind not in KINDS:
        raise SpecError(f"unknown relation {kind!r}")
    g, f = _coerce(g, f, couple)
    curve = _curve_fn(kind, couple)
    margin = np.inf
    for part, gp, fp in _parts(kind, g, f):
        Kg, Kf = curve(gp), curve(fp)
        holds, wit, m = compare_curves(Kg, Kf, constant, tol)
        margin = min(margin, m)
        if not holds:
            wit["part"] = part
            if kind in ("preceq_HLP", "ll_BC"):
                wit["lhs"] /= wit["t"]
                wit["rhs"] /= wit["t"]
            return RelationReport(kind, False, wit, float(m), float(constant))
    return RelationReport(kind, True, None, float(0.0 if margin == np.inf else margin),
                          float(constant))


def _sup_ratio(Kg, Kf):
    if Kg.is_zero:
        return 0.0
    pts = _probe_points(Kg, Kf)
    num = np.concatenate([Kg(pts), [Kg.initial_slope, Kg.saturation]])
    den = np.concatenate([Kf(pts), [Kf.initial_slope, Kf.saturation]])
    if np.any((den <= 0) & (num > 0)):
        return np.inf
    ok = den > 0
    return float(np.max(num[ok] / den[ok]))


def relation_constant(kind, g, f, couple=None):
    """Least ``C >= 0`` with ``g R (C f)``; ``inf`` when no constant works.

    The ratio of two piecewise linear functions is monotone on every
    common linear piece, so the supremum is attained at a breakpoint or in
    one of the two limits.
    """
    if kind not in KINDS:
        raise SpecError(f"unknown relation {kind!r}")
    g, f = _coerce(g, f, couple)
    curve = _curve_fn(kind, couple)
    return max(_sup_ratio(curve(gp), curve(fp)) for _, gp, fp in _parts(kind, g, f))
