"""Operators on finite lattices and certification of their interpolation classes.

Linear operators are matrices and get exact endpoint norms from unit-ball
vertices.  Black-box operators are plain callables with a domain
descriptor; they are certified on samples, so a certificate for them is a
statement about the sample set and a refutation is a genuine counterexample.

Two relation characterisations drive the checks: a map ``S`` is positive
Gagliardo-Peetre with constant ``C`` iff ``Sf ll_K C f`` for all ``f`` in
its domain, and Gagliardo-Peetre iff ``Sf preceq_K C f``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .exceptions import DomainError, SpecError, UnsupportedError
from .lattice import TOL, Couple, LatticeVector, MeasureSpace, as_values, unit_ball_vertices
from .relations import check_relation, relation_constant

__all__ = [
    "DomainDescriptor", "OperatorSpec", "GPCertificate", "BridgeReport",
    "StructureReport", "operator_endpoint_norm", "operator_couple_norm",
    "certify_gp", "gp_constant_bridge", "renormalize", "structure_checks",
    "builtin_operator", "BUILTINS",
]

BISECTION_RESOLUTION = 1e-6
BISECTION_STEPS = 64


@dataclass(frozen=True)
class DomainDescriptor:
    """Where a black-box operator is defined.

    ``All``; ``FiniteSet`` with ``members``; ``OrderInterval`` between
    ``lower`` and ``upper``; ``SolidLatticeHull`` of ``generators``, which in
    finite dimensions is the order interval between their meet and join.
    """

    kind: str = "All"
    members: tuple = ()
    lower: tuple | None = None
    upper: tuple | None = None
    generators: tuple = ()

    def __post_init__(self):
        if self.kind not in ("All", "FiniteSet", "OrderInterval", "SolidLatticeHull"):
            raise SpecError(f"unknown domain kind {self.kind!r}")
        if self.kind == "SolidLatticeHull":
            G = np.atleast_2d(np.asarray(self.generators, dtype=float))
            if G.size == 0:
                raise SpecError("SolidLatticeHull needs generators")
            object.__setattr__(self, "lower", tuple(G.min(axis=0)))
            object.__setattr__(self, "upper", tuple(G.max(axis=0)))
            object.__setattr__(self, "generators", tuple(map(tuple, G.tolist())))
        if self.kind == "OrderInterval":
            lo = np.asarray(self.lower, dtype=float)
            hi = np.asarray(self.upper, dtype=float)
            if lo.shape != hi.shape or np.any(lo > hi):
                raise SpecError("OrderInterval needs lower <= upper")
            object.__setattr__(self, "lower", tuple(lo.tolist()))
            object.__setattr__(self, "upper", tuple(hi.tolist()))
        if self.kind == "FiniteSet":
            object.__setattr__(self, "members", tuple(tuple(map(float, m)) for m in self.members))

    @classmethod
    def interval(cls, lower, upper):
        return cls("OrderInterval", lower=tuple(lower), upper=tuple(upper))

    @property
    def is_solid_lattice(self):
        return self.kind in ("All", "OrderInterval", "SolidLatticeHull")

    @property
    def contains_zero(self):
        return self.contains(np.zeros(self._dim())) if self._dim() else True

    def _dim(self):
        if self.lower is not None:
            return len(self.lower)
        if self.members:
            return len(self.members[0])
        return 0

    def contains(self, v, tol=1e-12):
        v = as_values(v)
        if self.kind == "All":
            return True
        if self.kind == "FiniteSet":
            return any(np.allclose(v, m, atol=tol, rtol=0) for m in self.members)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return bool(np.all(v >= lo - tol) and np.all(v <= hi + tol))

    def shifted(self, c):
        """Domain of ``f -> S(f + c)``."""
        c = as_values(c)
        if self.kind == "All":
            return self
        if self.kind == "FiniteSet":
            return DomainDescriptor("FiniteSet", members=tuple(tuple(np.asarray(m) - c)
                                                               for m in self.members))
        return DomainDescriptor.interval(np.asarray(self.lower) - c, np.asarray(self.upper) - c)

    def project(self, v):
        """Clip ``v`` into an interval domain (identity otherwise)."""
        v = as_values(v)
        if self.lower is None:
            return v
        return np.clip(v, self.lower, self.upper)

    def to_json(self):
        d = {"kind": self.kind}
        if self.kind == "FiniteSet":
            d["members"] = [list(m) for m in self.members]
        elif self.kind == "SolidLatticeHull":
            d["generators"] = [list(m) for m in self.generators]
        elif self.kind == "OrderInterval":
            d["lower"], d["upper"] = list(self.lower), list(self.upper)
        return d

    @classmethod
    def from_json(cls, d):
        kind = d.get("kind", "All")
        if kind == "FiniteSet":
            return cls(kind, members=tuple(map(tuple, d["members"])))
        if kind == "SolidLatticeHull":
            return cls(kind, generators=tuple(map(tuple, d["generators"])))
        if kind == "OrderInterval":
            return cls.interval(d["lower"], d["upper"])
        return cls(kind)


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """A linear (``matrix``) or black-box (``fn``) operator.

    ``flags`` may declare ``orderPreserving``, ``subadditive``,
    ``lipschitzConstant`` and ``normalized``; they are claims to be checked
    by :func:`structure_checks`, never trusted by certification.
    """

    variant: str
    matrix: np.ndarray | None = None
    fn: Callable | None = None
    domain: DomainDescriptor = field(default_factory=DomainDescriptor)
    flags: dict = field(default_factory=dict)
    name: str = ""
    params: dict = field(default_factory=dict)
    serial: bool = False

    def __post_init__(self):
        if self.variant == "Linear":
            M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
            if M.shape[0] != M.shape[1]:
                raise SpecError(f"operators act on one space, got shape {M.shape}")
            M.setflags(write=False)
            object.__setattr__(self, "matrix", M)
        elif self.variant == "BlackBox":
            if not callable(self.fn):
                raise SpecError("BlackBox operator needs a callable")
        else:
            raise SpecError(f"unknown operator variant {self.variant!r}")

    @classmethod
    def linear(cls, matrix, name="matrix"):
        M = np.atleast_2d(np.asarray(matrix, dtype=float))
        flags = {"orderPreserving": bool(np.all(M >= 0)), "subadditive": bool(np.all(M >= 0)),
                 "normalized": True}
        return cls("Linear", matrix=M, flags=flags, name=name)

    @classmethod
    def black_box(cls, fn, domain=None, name="black-box", params=None, **flags):
        return cls("BlackBox", fn=fn, domain=domain or DomainDescriptor(), flags=flags,
                   name=name, params=dict(params or {}))

    @property
    def is_linear(self):
        return self.variant == "Linear"

    def apply_values(self, v):
        v = np.asarray(v, dtype=float)
        if self.is_linear:
            return self.matrix @ v
        if not self.domain.contains(v):
            raise DomainError(f"{self.name} is undefined at {v.tolist()}")
        return np.asarray(self.fn(v), dtype=float).reshape(v.shape)

    def __call__(self, f):
        if isinstance(f, LatticeVector):
            return LatticeVector(f.space, self.apply_values(f.values))
        return self.apply_values(as_values(f))

    def to_json(self):
        if self.is_linear:
            return {"variant": "Linear", "matrix": self.matrix.tolist(), "name": self.name}
        if self.name not in BUILTINS:
            raise UnsupportedError(f"black box {self.name!r} is not a registered built-in")
        return {"variant": "BlackBox", "name": self.name, "params": self.params,
                "domain": self.domain.to_json()}

    @classmethod
    def from_json(cls, d):
        if d.get("variant") == "Linear":
            return cls.linear(d["matrix"], d.get("name", "matrix"))
        if d.get("variant") == "BlackBox":
            op = builtin_operator(d["name"], **(d.get("params") or {}))
            if "domain" in d:
                op = replace(op, domain=DomainDescriptor.from_json(d["domain"]))
            return op
        raise SpecError(f"unknown operator variant {d.get('variant')!r}")


# ---------------------------------------------------------------------------
# built-in black boxes


def _phi(kind, a):
    if kind == "tanh":
        return np.tanh
    if kind == "arctan":
        return np.arctan
    if kind == "shrink":
        return lambda x: np.sign(x) * np.maximum(np.abs(x) - a, 0.0)
    if kind == "clip":
        return lambda x: np.clip(x, -a, a)
    raise SpecError(f"unknown componentwise map {kind!r}")


def _builtin_clamp(c=1.0):
    c = float(c)
    if c <= 0:
        raise SpecError("clamp level must be positive")
    return OperatorSpec.black_box(lambda v: np.clip(v, 0.0, c), name="clamp", params={"c": c},
                                  orderPreserving=True, subadditive=True,
                                  lipschitzConstant=1.0, normalized=True)


def _builtin_positive_part():
    return OperatorSpec.black_box(lambda v: np.maximum(v, 0.0), name="positive-part",
                                  orderPreserving=True, subadditive=True,
                                  lipschitzConstant=1.0, normalized=True)


def _builtin_phi(kind="tanh", a=1.0):
    phi = _phi(kind, float(a))
    return OperatorSpec.black_box(lambda v: phi(v), name="componentwise-phi",
                                  params={"kind": kind, "a": float(a)},
                                  orderPreserving=True, lipschitzConstant=1.0, normalized=True)


def _builtin_shift(c=0.0):
    c = np.asarray(c, dtype=float)
    return OperatorSpec.black_box(lambda v: v + c, name="shift",
                                  params={"c": c.tolist() if c.ndim else float(c)},
                                  orderPreserving=True, lipschitzConstant=1.0,
                                  normalized=bool(not np.any(c)))


def _builtin_floor(m=1.0):
    m = float(m)
    return OperatorSpec.black_box(lambda v: np.maximum(v, m), name="floor", params={"m": m},
                                  orderPreserving=True, lipschitzConstant=1.0,
                                  normalized=m == 0.0)


def _builtin_scale(a=0.5):
    a = float(a)
    return OperatorSpec.black_box(lambda v: a * v, name="scale", params={"a": a},
                                  orderPreserving=a >= 0, subadditive=a >= 0,
                                  lipschitzConstant=abs(a), normalized=True)


def _builtin_negate():
    return OperatorSpec.black_box(lambda v: -v, name="negate", orderPreserving=False,
                                  lipschitzConstant=1.0, normalized=True)


def _builtin_identity():
    return OperatorSpec.black_box(lambda v: v.copy(), name="identity", orderPreserving=True,
                                  subadditive=True, lipschitzConstant=1.0, normalized=True)


BUILTINS = {
    "clamp": _builtin_clamp,
    "positive-part": _builtin_positive_part,
    "componentwise-phi": _builtin_phi,
    "shift": _builtin_shift,
    "floor": _builtin_floor,
    "scale": _builtin_scale,
    "negate": _builtin_negate,
    "identity": _builtin_identity,
}


def builtin_operator(name, **params):
    """Instantiate a registered black-box operator by name."""
    if name not in BUILTINS:
        raise SpecError(f"unknown built-in operator {name!r}; known: {sorted(BUILTINS)}")
    return BUILTINS[name](**params)


# ---------------------------------------------------------------------------
# operator norms


def operator_endpoint_norm(T, N, space):
    """Exact ``||T||_{X -> X}`` for a polyhedral norm ``N``: max of ``N(Tv)`` over vertices."""
    M = T.matrix if isinstance(T, OperatorSpec) else np.asarray(T, dtype=float)
    if not np.any(M):
        return 0.0
    V = unit_ball_vertices(N, space)
    return float(np.max(N.evaluate(V @ M.T, space.weights)))


def operator_couple_norm(T, couple):
    """``max(||T||_{X0 -> X0}, ||T||_{X1 -> X1})``."""
    if not couple.is_polyhedral:
        raise UnsupportedError("exact operator norms need polyhedral endpoint norms")
    return max(operator_endpoint_norm(T, couple.x0, couple.space),
               operator_endpoint_norm(T, couple.x1, couple.space))


# ---------------------------------------------------------------------------
# Gagliardo-Peetre classes


@dataclass
class GPCertificate:
    cls: str
    constant: float
    verdict: str
    witness: dict | None = None
    samples_checked: int = 0
    seed: int | None = None

    @property
    def certified(self):
        return self.verdict == "certified"

    def to_json(self):
        return {"class": self.cls, "constant": self.constant, "verdict": self.verdict,
                "witness": self.witness, "samplesChecked": self.samples_checked,
                "seed": self.seed}


_GP_RELATION = {"GP": "preceq_K", "GPplus": "ll_K"}


def _as_vectors(samples, space):
    return [s if isinstance(s, LatticeVector) else LatticeVector(space, s) for s in samples]


def certify_gp(S, C, variant, samples, couple, seed=None):
    """Check ``Sf ll_K C f`` (``GPplus``) or ``Sf preceq_K C f`` (``GP``) per sample."""
    if variant not in _GP_RELATION:
        raise SpecError(f"unknown Gagliardo-Peetre class {variant!r}")
    kind = _GP_RELATION[variant]
    vecs = _as_vectors(samples, couple.space)
    for k, f in enumerate(vecs):
        Sf = S(f)
        rep = check_relation(kind, Sf, f, couple, constant=C)
        if not rep.holds:
            wit = {"f": f.values.tolist(), "Sf": Sf.values.tolist(), "index": k, **rep.witness}
            return GPCertificate(variant, float(C), "refuted", wit, k + 1, seed)
    return GPCertificate(variant, float(C), "certified", None, len(vecs), seed)


def _bisect_constant(S, variant, samples, couple, upper):
    lo, hi = 0.0, upper
    if certify_gp(S, 0.0, variant, samples, couple).certified:
        return 0.0
    while not certify_gp(S, hi, variant, samples, couple).certified:
        lo, hi = hi, 2.0 * hi + 1.0
        if hi > 1e12:
            return np.inf
    for _ in range(BISECTION_STEPS):
        if hi - lo <= BISECTION_RESOLUTION * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if certify_gp(S, mid, variant, samples, couple).certified:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class BridgeReport:
    gp_plus: float
    gp: float
    exact_gp_plus: float
    exact_gp: float
    assertions: dict

    @property
    def consistent(self):
        return all(self.assertions.values())


def gp_constant_bridge(S, samples, couple, bisect=True):
    """Least certified GP and GP+ constants over ``samples`` and their bridges.

    The sample set is closed under ``f -> f+`` and ``f -> -f-`` where the
    domain allows it.  The asserted bridges are ``gp <= 2 gp+`` always,
    ``gp+ <= gp`` for order-preserving maps on a solid lattice domain with
    ``0`` in it, and ``gp <= gp+`` on couples where ``ll_K`` implies
    ``preceq_K``.
    """
    vecs = _as_vectors(samples, couple.space)
    closed = list(vecs)
    for f in vecs:
        for h in (f.pos, -f.neg):
            if S.is_linear or S.domain.contains(h.values):
                closed.append(h)
    exact_plus = max([relation_constant("ll_K", S(f), f, couple) for f in closed], default=0.0)
    exact = max([relation_constant("preceq_K", S(f), f, couple) for f in closed], default=0.0)
    if bisect:
        upper = max(1.0, exact_plus if np.isfinite(exact_plus) else 1.0)
        gp_plus = _bisect_constant(S, "GPplus", closed, couple, upper)
        gp = _bisect_constant(S, "GP", closed, couple, max(1.0, exact if np.isfinite(exact) else 1.0))
    else:
        gp_plus, gp = exact_plus, exact
    slack = 2 * BISECTION_RESOLUTION * max(1.0, gp, gp_plus)
    assertions = {"gp<=2gp+": gp <= 2 * gp_plus + slack}
    order_lattice = (S.flags.get("orderPreserving", False) if not S.is_linear
                     else bool(np.all(S.matrix >= 0)))
    domain_ok = S.is_linear or (S.domain.is_solid_lattice and S.domain.contains_zero)
    if order_lattice and domain_ok:
        if structure_checks(S, [(f, h) for f in closed for h in closed[:8]],
                            couple=couple).verdicts.get("orderPreserving", True):
            assertions["gp+<=gp"] = gp_plus <= gp + slack
    if couple.positive_cm:
        assertions["gp<=gp+"] = gp <= gp_plus + slack
    return BridgeReport(gp_plus, gp, exact_plus, exact, assertions)


def renormalize(S, fhat):
    """``f -> S(f + fhat) - S(fhat)``, which maps ``0`` to ``0``."""
    fv = as_values(fhat)
    if not S.is_linear and not S.domain.contains(fv):
        raise DomainError(f"{fv.tolist()} lies outside the domain of {S.name}")
    base = S.apply_values(fv)
    if S.is_linear:
        return S
    flags = dict(S.flags, normalized=True)
    return OperatorSpec.black_box(lambda v: S.apply_values(v + fv) - base,
                                  S.domain.shifted(fv), name=f"renormalized-{S.name}",
                                  params={"base": S.name, "fhat": fv.tolist()}, **flags)


# ---------------------------------------------------------------------------
# structural flags


@dataclass
class StructureReport:
    verdicts: dict
    witnesses: dict
    lipschitz: dict
    pairs_checked: int

    def to_json(self):
        return {"verdicts": self.verdicts, "witnesses": self.witnesses,
                "lipschitz": self.lipschitz, "pairsChecked": self.pairs_checked}


def structure_checks(S, pairs, couple=None, tol=TOL):
    """Empirical check of order preservation, subadditivity and Lipschitz bounds.

    For matrices positivity is decided exactly from the entries; for black
    boxes every pair ``(f, g)`` is tested in both orders.  Lipschitz
    estimates are the largest observed ratios for each endpoint norm of
    ``couple`` (default ``(L1, L-inf)``).
    """
    verdicts, witnesses = {}, {}
    pairs = [(as_values(a), as_values(b)) for a, b in pairs]
    n = pairs[0][0].shape[0] if pairs else (S.matrix.shape[0] if S.is_linear else 0)
    if couple is None and n:
        couple = Couple.l1_linf(MeasureSpace.uniform(n))
    if S.is_linear:
        neg = np.argwhere(S.matrix < 0)
        verdicts["positive"] = neg.size == 0
        verdicts["orderPreserving"] = neg.size == 0
        if neg.size:
            i, j = map(int, neg[0])
            e = np.zeros(S.matrix.shape[1])
            e[j] = 1.0
            witnesses["positive"] = {"f": e.tolist(), "Sf": (S.matrix @ e).tolist(), "atom": i}
            witnesses["orderPreserving"] = {"g": [0.0] * e.size, "f": e.tolist()}
    order_ok, sub_ok = True, True
    lip = {"x0": 0.0, "x1": 0.0}
    for f, g in pairs:
        Sf, Sg = S.apply_values(f), S.apply_values(g)
        if not S.is_linear:
            for lo, hi, Slo, Shi in ((f, g, Sf, Sg), (g, f, Sg, Sf)):
                if order_ok and np.all(lo <= hi) and np.any(Slo > Shi + tol):
                    order_ok = False
                    witnesses["orderPreserving"] = {"g": lo.tolist(), "f": hi.tolist(),
                                                    "Sg": Slo.tolist(), "Sf": Shi.tolist()}
            s = f + g
            if sub_ok and (S.is_linear or S.domain.contains(s)):
                Ss = S.apply_values(s)
                if np.any(Ss > Sf + Sg + tol * max(1.0, float(np.abs(Ss).max()))):
                    sub_ok = False
                    witnesses["subadditive"] = {"f": f.tolist(), "g": g.tolist(),
                                                "S(f+g)": Ss.tolist(), "Sf+Sg": (Sf + Sg).tolist()}
        d = f - g
        if np.any(d) and couple is not None:
            for key, norm in (("x0", couple.norm0), ("x1", couple.norm1)):
                lip[key] = max(lip[key], norm(Sf - Sg) / norm(d))
    if not S.is_linear:
        verdicts["orderPreserving"] = order_ok
        verdicts["subadditive"] = sub_ok
    declared = S.flags.get("lipschitzConstant")
    if declared is not None:
        bound = float(declared) * (1 + 1e-9) + tol
        verdicts["lipschitz"] = max(lip.values()) <= bound
        if not verdicts["lipschitz"]:
            witnesses["lipschitz"] = {"estimate": max(lip.values()), "declared": declared}
    return StructureReport(verdicts, witnesses, lip, len(pairs))
