"""Falsification-driven certification of intermediate norms.

A norm ``X`` on the couple's space is *monotone* for a relation ``R`` with
constant ``C`` when ``g R f`` implies ``||g||_X <= C ||f||_X``.  Pairs with
``g R f`` are produced by several independent routes and every one is
re-checked with the exact relation test before use, so a refutation is a
proof and a pass is a statement about the pairs actually examined.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InconsistencyError, SpecError
from .lattice import TOL, LatticeVector, NormSpec, check_lattice_norm
from .operators import OperatorSpec, certify_gp
from .relations import check_relation
from .sampling import (integer_grid, probe_vectors, random_positive_contraction,
                       related_pair, sample_vectors)

__all__ = ["MODES", "Budget", "MonotonicityReport", "ConstantEstimate", "TrichotomyReport",
           "SuiteReport", "related_pairs", "certify_intermediate", "equivalence_report",
           "trichotomy_check", "theorem_suite"]

MODES = {
    "K_monotone": "preceq_K",
    "partially_K_monotone": "ll_K",
    "HLP_monotone": "preceq_HLP",
    "BC_partially_monotone": "ll_BC",
}


@dataclass(frozen=True)
class Budget:
    """Pair budget for certification runs.

    ``pairs`` random pairs per generator route; the exhaustive integer grid
    (entries ``-grid..grid``) runs on top of that when ``n <= max_grid_n``.
    """

    pairs: int = 300
    seed: int = 0
    grid: int = 2
    max_grid_n: int = 3

    def to_json(self):
        return {"pairs": self.pairs, "seed": self.seed, "grid": self.grid,
                "maxGridN": self.max_grid_n}


@dataclass
class MonotonicityReport:
    mode: str
    constant: float
    verdict: str
    witness: dict | None
    pairs_checked: int
    seed: int
    best_constant: float = 0.0
    norm: str = ""

    @property
    def passed(self):
        return self.verdict == "passed"

    def to_json(self):
        return {"mode": self.mode, "constant": self.constant, "verdict": self.verdict,
                "witness": self.witness, "pairsChecked": self.pairs_checked,
                "seed": self.seed, "bestConstant": self.best_constant, "norm": self.norm}


def related_pairs(couple, mode, budget):
    """Yield ``(f, g, source)`` with ``g R f`` verified exactly.

    Routes: designated probes, the exhaustive integer grid, images under
    random positive contractions (``g = T f`` for the part-wise kinds and
    ``g = s * T|f|`` otherwise) and random pairs rescaled onto the boundary.
    """
    kind = MODES[mode]
    n = couple.n
    rng = np.random.default_rng(budget.seed)
    space = couple.space

    def accept(f, g):
        return check_relation(kind, LatticeVector(space, g), LatticeVector(space, f),
                              couple).holds

    probes = probe_vectors(n)
    for f in probes:
        for g in probes:
            if accept(f, g):
                yield f, g, "probe"
    if n <= budget.max_grid_n:
        grid = integer_grid(n, budget.grid)
        for f in grid:
            for g in grid:
                if accept(f, g):
                    yield f, g, "grid"
    fs = sample_vectors(n, budget.pairs, rng)
    for f in fs:
        T = random_positive_contraction(couple, rng)
        if kind in ("ll_K", "ll_BC"):
            g = T @ f
        else:
            g = rng.choice([-1.0, 1.0], size=n) * (T @ np.abs(f))
        if accept(f, g):
            yield f, g, "contraction"
    for _ in range(budget.pairs):
        f, g = related_pair(couple, kind, rng, tight=rng.uniform() < 0.5)
        if accept(f, g):
            yield f, g, "rescaled"


def _norm(X, space):
    return lambda v: float(X.evaluate(np.asarray(v, dtype=float), space.weights))


def certify_intermediate(X, couple, mode="partially_K_monotone", budget=None, constant=1.0):
    """Check ``g R f => ||g||_X <= constant * ||f||_X`` over generated pairs."""
    if mode not in MODES:
        raise SpecError(f"unknown mode {mode!r}")
    budget = budget or Budget()
    nx = _norm(X, couple.space)
    for e in np.eye(couple.n):
        if not nx(e) > 0 or not np.isfinite(nx(e)):
            raise SpecError(f"{X.label} is not a norm on the couple's space")
    checked, best = 0, 0.0
    for f, g, source in related_pairs(couple, mode, budget):
        checked += 1
        a, b = nx(g), nx(f)
        if b > 0:
            best = max(best, a / b)
        elif a > 0:
            best = np.inf
        if a > constant * b + TOL * max(1.0, b):
            wit = {"f": f.tolist(), "g": g.tolist(), "normF": b, "normG": a, "source": source}
            return MonotonicityReport(mode, float(constant), "refuted", wit, checked,
                                      budget.seed, best, X.label)
    verdict = "passed" if checked else "inconclusive"
    return MonotonicityReport(mode, float(constant), verdict, None, checked, budget.seed,
                              best, X.label)


@dataclass
class ConstantEstimate:
    """Extremes of ``||f|| / || |f| ||``.

    ``lower_ratio`` is ``max || |f| || / ||f||`` (how far ``||f||`` falls below
    ``|| |f| ||``) and ``upper_ratio`` is ``max ||f|| / || |f| ||``.
    """

    lower_ratio: float
    upper_ratio: float
    lower_vector: list
    upper_vector: list
    star_report: MonotonicityReport | None = None

    def to_json(self):
        return {"lowerRatio": self.lower_ratio, "upperRatio": self.upper_ratio,
                "lowerVector": self.lower_vector, "upperVector": self.upper_vector,
                "star": self.star_report.to_json() if self.star_report else None}


def equivalence_report(X, space, samples=(), couple=None, budget=None):
    """Extremal ratios between ``X`` and its lattice renorming ``f -> X(|f|)``.

    With a couple, the renormed norm is also re-certified as exactly
    K-monotone at the given budget.
    """
    nx = _norm(X, space)
    vecs = list(probe_vectors(space.n)) + [np.asarray(s, dtype=float) for s in samples]
    lo, hi = (1.0, None), (1.0, None)
    for v in vecs:
        a, b = nx(v), nx(np.abs(v))
        if a <= 0 or b <= 0:
            continue
        if b / a > lo[0] + 1e-15:
            lo = (b / a, v.tolist())
        if a / b > hi[0] + 1e-15:
            hi = (a / b, v.tolist())
    star = None
    if couple is not None:
        star = certify_intermediate(NormSpec.star(X), couple, "K_monotone", budget)
    return ConstantEstimate(lo[0], hi[0], lo[1], hi[1], star)


@dataclass
class TrichotomyReport:
    norm: str
    conditions: dict
    witnesses: dict
    consistent: bool

    @property
    def verdict(self):
        return "all-hold" if all(self.conditions.values()) else "all-refuted"

    def to_json(self):
        return {"norm": self.norm, "conditions": self.conditions, "witnesses": self.witnesses,
                "consistent": self.consistent, "verdict": self.verdict}


def trichotomy_check(X, couple, budget=None, strict=True):
    """Evaluate the three equivalent conditions for an exact partially K-monotone norm.

    (i) exact K-monotone, (ii) lattice norm, (iii) ``||f|| = || |f| ||``.
    A mixed outcome raises :class:`InconsistencyError` when ``strict``.
    """
    budget = budget or Budget()
    space = couple.space
    nx = _norm(X, space)
    rep = certify_intermediate(X, couple, "K_monotone", budget)
    lat, lat_wit = check_lattice_norm(X, space, samples=200, seed=budget.seed)
    abs_wit = None
    rng = np.random.default_rng(budget.seed)
    for v in probe_vectors(space.n) + sample_vectors(space.n, 200, rng):
        a, b = nx(v), nx(np.abs(v))
        if abs(a - b) > TOL * max(1.0, b):
            abs_wit = {"f": v.tolist(), "norm": a, "normAbs": b}
            break
    conds = {"K_monotone": rep.passed, "lattice": lat, "absolute": abs_wit is None}
    wits = {"K_monotone": rep.witness,
            "lattice": None if lat_wit is None else {"g": lat_wit[0].values.tolist(),
                                                     "f": lat_wit[1].values.tolist()},
            "absolute": abs_wit}
    consistent = len(set(conds.values())) == 1
    out = TrichotomyReport(X.label, conds, wits, consistent)
    if strict and not consistent:
        raise InconsistencyError(f"mixed trichotomy verdict for {X.label}: {conds}")
    return out


@dataclass
class SuiteReport:
    norm: str
    checks: int = 0
    violations: list = field(default_factory=list)
    by_class: dict = field(default_factory=dict)

    @property
    def passed(self):
        return not self.violations

    def record(self, cls, ok, info):
        self.checks += 1
        self.by_class[cls] = self.by_class.get(cls, 0) + 1
        if not ok:
            self.violations.append({"class": cls, **info})

    def to_json(self):
        return {"norm": self.norm, "checks": self.checks, "violations": self.violations,
                "byClass": self.by_class, "passed": self.passed}


def theorem_suite(couple, X, operators, vectors, tol=1e-8, relation_bridge=True):
    """Audit the downstream contraction statements for ``X``.

    ``operators`` is a list of ``(cls, S, C)`` with ``cls`` one of

    * ``"GPplus"``: ``||Sf||_X <= C ||f||_X`` where ``C`` is a GP+ constant
      certified on ``vectors``;
    * ``"Lipschitz"``: ``||Sf - Sh||_X <= C ||f - h||_X`` over consecutive
      pairs of ``vectors`` inside the domain;
    * ``"positive"``: a positive matrix with couple norm ``C``.

    On ``(L1, L-inf)`` the relation pairs ``preceq_K``/``preceq_HLP`` and
    ``ll_K``/``ll_BC`` are additionally compared on all vector pairs.
    """
    space = couple.space
    nx = _norm(X, space)
    rep = SuiteReport(X.label)
    V = [np.asarray(v, dtype=float) for v in vectors]
    for idx, (cls, S, C) in enumerate(operators):
        if cls == "GPplus":
            cert = certify_gp(S, C, "GPplus", [v for v in V if _inside(S, v)], couple)
            if not cert.certified:
                continue
        for k, f in enumerate(V):
            if not _inside(S, f):
                continue
            if cls == "Lipschitz":
                h = V[(k + 1) % len(V)]
                if not _inside(S, h):
                    continue
                lhs, rhs = nx(S.apply_values(f) - S.apply_values(h)), C * nx(f - h)
            else:
                lhs, rhs = nx(S.apply_values(f)), C * nx(f)
            ok = lhs <= rhs * (1 + tol) + tol
            rep.record(cls, ok, {"operator": idx, "name": S.name, "f": f.tolist(),
                                 "lhs": lhs, "rhs": rhs})
    if relation_bridge and couple.is_l1_linf:
        for f in V[:25]:
            for g in V[:25]:
                gv, fv = LatticeVector(space, g), LatticeVector(space, f)
                for a, b in (("preceq_K", "preceq_HLP"), ("ll_K", "ll_BC")):
                    ra = check_relation(a, gv, fv, couple).holds
                    rb = check_relation(b, gv, fv, couple).holds
                    rep.record("relation-bridge", ra == rb,
                               {"f": f.tolist(), "g": g.tolist(), "kinds": [a, b]})
    return rep


def _inside(S, v):
    return isinstance(S, OperatorSpec) and (S.is_linear or S.domain.contains(v))
