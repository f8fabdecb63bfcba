"""Synthesis of contractions ``T`` with ``Tf = g`` and its failure certificates.

The unknowns are the matrix entries ``T[i, j]``.  ``||T||_{X -> X} <= 1``
for a polyhedral norm is the finite family of linear constraints
``<y, T v> <= 1`` over unit-ball vertices ``v`` and supporting functionals
``y``.  For positive ``T`` on ``(L1(mu), L-inf)`` the family collapses to
row sums ``<= 1`` and weighted column sums ``<= mu_j``.

When the program is infeasible the simplex returns a Farkas vector that is
stored with the inputs, so the certificate can be rebuilt and re-checked
offline without trusting the solver.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import PrecisionError, UnsupportedError, VerificationError
from .lattice import Couple, LatticeVector, as_values, dual_functionals, unit_ball_vertices
from .lp import LinearProgram, lp_solve, verify_farkas
from .operators import operator_endpoint_norm
from .relations import check_relation, relation_constant

__all__ = [
    "SynthesisResult", "InfeasibilityCertificate", "BandProjection", "SearchBudget",
    "CMWitness", "synthesis_program", "synthesize_contraction", "band_projection",
    "diagonal_compose", "synthesize_ll", "cm_witness_search",
]

RESIDUAL_TOL = 1e-8
NORM_TOL = 1e-8


@dataclass
class SynthesisResult:
    """A verified operator ``T`` with ``Tf = g`` and couple norm at most one."""

    matrix: np.ndarray
    couple: Couple
    f: np.ndarray
    g: np.ndarray
    positive: bool = True
    endpoint_norms: tuple = (0.0, 0.0)
    residual: float = 0.0
    feasible: bool = field(default=True, init=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        self.f = as_values(self.f).astype(float)
        self.g = as_values(self.g).astype(float)

    def recheck(self):
        """Recompute the verification data; returns a list of failures."""
        T = self.matrix
        problems = []
        n = self.couple.n
        if T.shape != (n, n) or not np.all(np.isfinite(T)):
            return ["matrix has the wrong shape or non-finite entries"]
        if self.positive and np.any(T < 0):
            problems.append(f"negative entry {T.min():.3g}")
        res = float(np.abs(T @ self.f - self.g).max(initial=0.0))
        if res >= RESIDUAL_TOL * max(1.0, float(np.abs(self.g).max(initial=0.0))):
            problems.append(f"residual |Tf - g| = {res:.3g}")
        norms = (operator_endpoint_norm(T, self.couple.x0, self.couple.space),
                 operator_endpoint_norm(T, self.couple.x1, self.couple.space))
        if max(norms) > 1 + NORM_TOL:
            problems.append(f"endpoint norms {norms} exceed 1")
        self.endpoint_norms, self.residual = norms, res
        return problems

    def verify(self):
        problems = self.recheck()
        if problems:
            raise VerificationError("; ".join(problems))
        return self

    def to_json(self):
        return {"type": "SynthesisResult", "couple": self.couple.to_json(),
                "f": self.f.tolist(), "g": self.g.tolist(), "positive": self.positive,
                "matrix": self.matrix.tolist(), "endpointNorms": list(self.endpoint_norms),
                "residual": self.residual}

    @classmethod
    def from_json(cls, d):
        r = cls(np.array(d["matrix"], dtype=float), Couple.from_json(d["couple"]),
                np.array(d["f"]), np.array(d["g"]), bool(d.get("positive", True)))
        r.endpoint_norms = tuple(d.get("endpointNorms", (0.0, 0.0)))
        r.residual = float(d.get("residual", 0.0))
        return r


@dataclass
class InfeasibilityCertificate:
    """Farkas proof that no admissible contraction maps ``f`` to ``g``."""

    couple: Couple
    f: np.ndarray
    g: np.ndarray
    positive: bool
    farkas: np.ndarray
    feasible: bool = field(default=False, init=False)

    def verify(self):
        prog = synthesis_program(self.couple, self.f, self.g, self.positive)
        if not verify_farkas(prog, self.farkas):
            raise VerificationError("Farkas vector does not certify infeasibility")
        return self

    def to_json(self):
        return {"type": "InfeasibilityCertificate", "couple": self.couple.to_json(),
                "f": np.asarray(self.f).tolist(), "g": np.asarray(self.g).tolist(),
                "positive": self.positive, "farkas": np.asarray(self.farkas).tolist()}

    @classmethod
    def from_json(cls, d):
        return cls(Couple.from_json(d["couple"]), np.array(d["f"], dtype=float),
                   np.array(d["g"], dtype=float), bool(d["positive"]),
                   np.array(d["farkas"], dtype=float))


def _norm_rows(N, space):
    """Rows ``a`` (over flattened ``T``) with ``a @ vec(T) <= 1`` iff ``||T|| <= 1``."""
    V = unit_ball_vertices(N, space)
    D = dual_functionals(N, space)
    rows = np.einsum("ki,lj->klij", D, V).reshape(D.shape[0] * V.shape[0], -1)
    rows = rows[np.abs(rows).max(axis=1) > 0]
    _, idx = np.unique(np.round(rows, 12), axis=0, return_index=True)
    return rows[np.sort(idx)]


def synthesis_program(couple, f, g, positive=True):
    """LP feasibility problem ``{T : Tf = g, ||T|| <= 1 on both endpoints}``."""
    if not couple.is_polyhedral:
        raise UnsupportedError("synthesis needs polyhedral endpoint norms")
    n = couple.n
    f, g = as_values(f, n), as_values(g, n)
    A_eq = np.kron(np.eye(n), f[None, :])
    if positive and couple.is_l1_linf:
        mu = couple.space.w
        rows = np.kron(np.eye(n), np.ones((1, n)))
        cols = np.kron(mu[None, :], np.eye(n))
        A_ub = np.vstack([rows, cols])
        b_ub = np.concatenate([np.ones(n), mu])
    else:
        A_ub = np.vstack([_norm_rows(couple.x0, couple.space),
                          _norm_rows(couple.x1, couple.space)])
        b_ub = np.ones(A_ub.shape[0])
    return LinearProgram(n * n, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=g,
                         free=np.full(n * n, not positive))


def synthesize_contraction(couple, f, g, positive=True):
    """A verified contraction with ``Tf = g`` or a verified infeasibility proof."""
    n = couple.n
    fv, gv = as_values(f, n).copy(), as_values(g, n).copy()
    res = lp_solve(synthesis_program(couple, fv, gv, positive))
    if res.status == "infeasible":
        return InfeasibilityCertificate(couple, fv, gv, positive, res.farkas).verify()
    if res.status != "optimal":
        raise PrecisionError(f"synthesis LP ended as {res.status}: {res.message}")
    T = res.x.reshape(n, n)
    if positive:
        T = np.maximum(T, 0.0)
    return SynthesisResult(T, couple, fv, gv, positive).verify()


@dataclass(frozen=True, eq=False)
class BandProjection:
    """Diagonal 0/1 projection onto the atoms in a support set."""

    indicator: np.ndarray

    @property
    def matrix(self):
        return np.diag(self.indicator.astype(float))

    @property
    def complement(self):
        return BandProjection(1 - self.indicator)

    def __call__(self, h):
        if isinstance(h, LatticeVector):
            return LatticeVector(h.space, self.indicator * h.values)
        return self.indicator * as_values(h)


def band_projection(f, tol=1e-12):
    """Projection onto the band generated by ``f``: the indicator of ``supp f``."""
    v = as_values(f)
    return BandProjection((np.abs(v) > tol).astype(int))


def _psum_check(couple, P, samples=64, seed=0):
    """Check ``||h|| = N(||Ph||, ||(I-P)h||)`` with ``N`` the matching p-norm on R^2."""
    rng = np.random.default_rng(seed)
    for N, norm in ((couple.x0, couple.norm0), (couple.x1, couple.norm1)):
        if N.kind == "WeightedL1":
            p = 1.0
        elif N.kind == "LInfinity":
            p = np.inf
        elif N.kind == "WeightedLp":
            p = float(N.p)
        else:
            continue
        for h in rng.normal(size=(samples, couple.n)):
            a, b = norm(P(h)), norm(P.complement(h))
            if abs(norm(h) - np.linalg.norm([a, b], p)) > 1e-9 * max(1.0, norm(h)):
                return h
    return None


def diagonal_compose(P, Q, Tplus, Tminus, couple, f=None, g=None):
    """Assemble ``T = Q T+ P + (I - Q) T- (I - P)`` and verify it."""
    n = couple.n
    Pm, Qm = P.matrix, Q.matrix
    I = np.eye(n)
    Tp = Tplus.matrix if isinstance(Tplus, SynthesisResult) else np.asarray(Tplus, float)
    Tm = Tminus.matrix if isinstance(Tminus, SynthesisResult) else np.asarray(Tminus, float)
    T = Qm @ Tp @ Pm + (I - Qm) @ Tm @ (I - Pm)
    bad = _psum_check(couple, P)
    if bad is not None:
        raise VerificationError(f"band decomposition is not a p-sum at {bad.tolist()}")
    fv = np.zeros(n) if f is None else as_values(f, n)
    gv = T @ fv if g is None else as_values(g, n)
    out = SynthesisResult(T, couple, fv, gv, positive=True)
    problems = out.recheck()
    if problems:
        for N in (couple.x0, couple.x1):
            V = unit_ball_vertices(N, couple.space)
            vals = N.evaluate(V @ T.T, couple.space.weights)
            if vals.max() > 1 + NORM_TOL:
                problems.append(f"violating vertex {V[int(np.argmax(vals))].tolist()}")
        raise VerificationError("diagonal assembly failed: " + "; ".join(problems))
    return out


def synthesize_ll(couple, f, g):
    """Positive contraction with ``Tf = g`` for ``g ll_K f``, built part by part.

    ``T+`` maps ``f+`` to ``g+`` and ``T-`` maps ``f-`` to ``g-``; the bands of
    ``f+`` and ``g+`` glue them into one operator.  Returns the certificate
    of the failing part when a part is not realisable.
    """
    n = couple.n
    fv, gv = as_values(f, n), as_values(g, n)
    fp, fm = np.maximum(fv, 0), np.maximum(-fv, 0)
    gp, gm = np.maximum(gv, 0), np.maximum(-gv, 0)
    Tp = synthesize_contraction(couple, fp, gp, positive=True)
    if not Tp.feasible:
        return Tp
    Tm = synthesize_contraction(couple, fm, gm, positive=True)
    if not Tm.feasible:
        return Tm
    return diagonal_compose(band_projection(fp), band_projection(gp), Tp, Tm, couple, fv, gv)


# ---------------------------------------------------------------------------
# search for pairs that no contraction realises


@dataclass
class SearchBudget:
    """``pairs``: LP solves allowed; ``grid``: integer box radius; ``seed``."""

    pairs: int = 2000
    grid: int = 3
    seed: int = 0
    random_pairs: int | None = None


@dataclass
class CMWitness:
    f: np.ndarray
    g: np.ndarray
    certificate: InfeasibilityCertificate
    pairs_tried: int

    def verify(self):
        couple = self.certificate.couple
        if not check_relation("preceq_K", self.g, self.f, couple).holds:
            raise VerificationError("witness pair is not K-related")
        self.certificate.verify()
        return self

    def to_json(self):
        return {"type": "CMWitness", "f": self.f.tolist(), "g": self.g.tolist(),
                "pairsTried": self.pairs_tried, "certificate": self.certificate.to_json()}


def _symmetric(couple):
    """Whether signed permutations are isometries of both endpoints."""
    uniform = len(set(couple.space.weights)) == 1

    def sym(N):
        if N.kind in ("LInfinity", "Lorentz"):
            return True
        if N.kind in ("WeightedL1", "WeightedLp"):
            return uniform and (N.weights is None or len(set(N.weights)) == 1)
        return False

    return sym(couple.x0) and sym(couple.x1)


def _grid(n, radius, symmetric):
    if symmetric:
        # up to signed permutations every vector is nonnegative and nonincreasing
        for c in itertools.combinations_with_replacement(range(radius, -1, -1), n):
            yield np.array(c, dtype=float)
    else:
        for c in itertools.product(range(-radius, radius + 1), repeat=n):
            yield np.array(c, dtype=float)


def _candidate_pairs(couple, budget):
    n = couple.n
    sym = _symmetric(couple)
    vecs = [v for v in _grid(n, budget.grid, sym) if np.any(v)]
    for f in vecs:
        for g in vecs:
            yield f, g
    rng = np.random.default_rng(budget.seed)
    count = budget.random_pairs if budget.random_pairs is not None else 10 * budget.pairs
    for _ in range(count):
        f = rng.uniform(-1, 1, n) if not sym else np.sort(rng.uniform(0, 1, n))[::-1]
        g = rng.uniform(-1, 1, n) if not sym else np.sort(rng.uniform(0, 1, n))[::-1]
        c = relation_constant("preceq_K", g, f, couple)
        if np.isfinite(c) and c > 0:
            yield f, g / c


def cm_witness_search(couple, budget=None):
    """Look for ``g preceq_K f`` that no contraction ``T`` with ``Tf = g`` realises.

    Integer vectors in the box of radius ``budget.grid`` come first, then
    random real pairs rescaled onto the boundary of the relation.  Each
    related pair costs one LP solve with unrestricted signs; an infeasible
    one is a witness of a failure of the Calderon-Mityagin property.
    Returns ``None`` when the budget runs out.
    """
    budget = budget or SearchBudget()
    tried = 0
    for f, g in _candidate_pairs(couple, budget):
        if tried >= budget.pairs:
            break
        if not check_relation("preceq_K", g, f, couple).holds:
            continue
        tried += 1
        out = synthesize_contraction(couple, f, g, positive=False)
        if not out.feasible:
            return CMWitness(f, g, out, tried).verify()
    return None
