"""Finite atomic measure spaces, lattice vectors, norms and rearrangements.

Everything lives on a finite set of atoms ``0..n-1`` with strictly positive
masses.  Functions on the space are real vectors; the lattice operations are
componentwise.  Norms are described by :class:`NormSpec`, which knows how to
evaluate itself, how to list a finite sign-symmetric set of supporting
functionals when the unit ball is a polytope, and how to list the vertices
of that polytope.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import HalfspaceIntersection

from .exceptions import DimensionError, DomainError, SpecError, UnsupportedError

__all__ = [
    "TOL", "MeasureSpace", "LatticeVector", "StepFunction", "NormSpec",
    "Couple", "lattice_eval", "rearrange", "double_star", "norm_eval",
    "dual_functionals", "unit_ball_vertices", "as_values",
    "check_lattice_norm",
]

#: absolute tolerance for comparisons of computed quantities
TOL = 1e-9


@dataclass(frozen=True)
class MeasureSpace:
    """Finite atomic measure space with atom masses ``weights``."""

    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in np.ravel(np.asarray(self.weights, dtype=float)))
        if len(w) == 0:
            raise SpecError("a measure space needs at least one atom")
        if not all(np.isfinite(x) and x > 0 for x in w):
            raise SpecError(f"atom masses must be finite and > 0, got {w}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n, mass=1.0):
        return cls((float(mass),) * int(n))

    @property
    def n(self):
        return len(self.weights)

    @property
    def w(self):
        return np.array(self.weights)

    @property
    def total(self):
        return float(sum(self.weights))

    def vector(self, values):
        return LatticeVector(self, values)

    def zeros(self):
        return LatticeVector(self, np.zeros(self.n))

    def to_json(self):
        return {"weights": list(self.weights)}

    @classmethod
    def from_json(cls, data):
        return cls(tuple(data["weights"]))


@dataclass(frozen=True, eq=False)
class LatticeVector:
    """A real function on the atoms of ``space``.

    Supports ``+``, ``-``, scalar ``*``, ``&`` (meet) and ``|`` (join).
    """

    space: MeasureSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape[0] != self.space.n:
            raise DimensionError(
                f"vector has {v.shape[0]} entries, space has {self.space.n} atoms")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _check(self, other):
        if not isinstance(other, LatticeVector):
            return LatticeVector(self.space, other)
        if other.space != self.space:
            raise DimensionError("vectors live on different measure spaces")
        return other

    def __add__(self, other):
        other = self._check(other)
        return LatticeVector(self.space, self.values + other.values)

    def __sub__(self, other):
        other = self._check(other)
        return LatticeVector(self.space, self.values - other.values)

    def __mul__(self, c):
        return LatticeVector(self.space, float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return LatticeVector(self.space, -self.values)

    def __and__(self, other):
        other = self._check(other)
        return LatticeVector(self.space, np.minimum(self.values, other.values))

    def __or__(self, other):
        other = self._check(other)
        return LatticeVector(self.space, np.maximum(self.values, other.values))

    def __abs__(self):
        return LatticeVector(self.space, np.abs(self.values))

    def __len__(self):
        return self.space.n

    def __iter__(self):
        return iter(self.values.tolist())

    def __repr__(self):
        return f"LatticeVector({self.values.tolist()})"

    @property
    def pos(self):
        return LatticeVector(self.space, np.maximum(self.values, 0.0))

    @property
    def neg(self):
        return LatticeVector(self.space, np.maximum(-self.values, 0.0))

    def allclose(self, other, atol=1e-12):
        other = self._check(other)
        return bool(np.allclose(self.values, other.values, rtol=0.0, atol=atol))

    def is_nonneg(self, atol=0.0):
        return bool(np.all(self.values >= -atol))

    def to_json(self):
        return {"weights": list(self.space.weights), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, data, space=None):
        if space is None:
            space = MeasureSpace(tuple(data["weights"]))
        return cls(space, data["values"])


def as_values(f, n=None):
    """Return the raw numpy values of a vector or array-like."""
    v = f.values if isinstance(f, LatticeVector) else np.asarray(f, dtype=float).reshape(-1)
    if n is not None and v.shape[0] != n:
        raise DimensionError(f"expected {n} entries, got {v.shape[0]}")
    return v


_BINARY = {
    "meet": np.minimum,
    "join": np.maximum,
    "plus": np.add,
    "minus": np.subtract,
}
_UNARY = {
    "pos": lambda x: np.maximum(x, 0.0),
    "neg": lambda x: np.maximum(-x, 0.0),
    "abs": np.abs,
}


def lattice_eval(f, g, op, scalar=1.0):
    """Evaluate a componentwise lattice or vector operation.

    ``pos``, ``neg`` and ``abs`` ignore ``g``; ``scale`` multiplies ``f`` by
    ``scalar``.
    """
    if op in _UNARY:
        return LatticeVector(f.space, _UNARY[op](f.values))
    if op == "scale":
        return f * scalar
    if op not in _BINARY:
        raise SpecError(f"unknown lattice operation {op!r}")
    if g is None or g.space != f.space:
        raise DimensionError(f"{op} needs two vectors on the same space")
    return LatticeVector(f.space, _BINARY[op](f.values, g.values))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Nonincreasing step function on ``[0, edges[-1])``.

    ``levels[k]`` is the value on ``[edges[k], edges[k+1])``; the function is
    zero beyond the last edge.  ``order`` records which atom produced each
    step.
    """

    edges: np.ndarray
    levels: np.ndarray
    order: tuple = ()

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float).reshape(-1)
        lv = np.asarray(self.levels, dtype=float).reshape(-1)
        if e.shape[0] != lv.shape[0] + 1:
            raise SpecError("need exactly one more edge than levels")
        if np.any(np.diff(e) < 0) or np.any(np.diff(lv) > 0) or np.any(lv < 0):
            raise SpecError("step function must have increasing edges and "
                            "nonincreasing nonnegative levels")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "levels", lv)

    @property
    def support(self):
        return float(self.edges[-1])

    def __call__(self, s):
        """Right-continuous evaluation, ``f*(s)``."""
        if s < 0:
            raise DomainError("rearrangement is defined on [0, inf)")
        k = int(np.searchsorted(self.edges, s, side="right")) - 1
        if k >= len(self.levels):
            return 0.0
        return float(self.levels[k])

    def integral(self, t):
        """Exact value of the integral of the step function over ``[0, t]``."""
        if t <= 0:
            return 0.0
        lengths = np.clip(np.minimum(self.edges[1:], t) - self.edges[:-1], 0.0, None)
        return float(np.dot(lengths, self.levels))


def rearrange(f):
    """Decreasing rearrangement ``f*`` of a lattice vector.

    Atoms are sorted by ``|f|`` descending, ties by ascending atom index;
    atoms where ``f`` vanishes are dropped.
    """
    a = np.abs(f.values)
    order = sorted((i for i in range(a.shape[0]) if a[i] > 0), key=lambda i: (-a[i], i))
    w = f.space.w
    edges = np.concatenate([[0.0], np.cumsum(w[order])]) if order else np.zeros(1)
    return StepFunction(edges, a[order], tuple(order))


def double_star(f, t):
    """Second rearrangement ``f**(t) = (1/t) * integral of f* over [0, t]``."""
    if not t > 0:
        raise DomainError(f"f**(t) needs t > 0, got {t}")
    return rearrange(f).integral(t) / t


def _sign_vectors(n):
    return np.array(list(itertools.product((1.0, -1.0), repeat=n)))


@dataclass(frozen=True)
class NormSpec:
    """A norm on a finite measure space.

    Use the classmethod constructors; ``kind`` is one of :data:`NormSpec.KINDS`.
    Weighted kinds fall back to the atom masses of the space when ``weights``
    is left unset.
    """

    kind: str
    p: float | None = None
    v: tuple | None = None
    weights: tuple | None = None
    functionals: tuple | None = None
    base: "NormSpec | None" = None
    lattice: bool | None = None

    KINDS = ("WeightedL1", "LInfinity", "WeightedLp", "Lorentz", "PartitionedN1",
             "PartitionedN2", "SumOfPartsLInf", "MaxOfPartsL1", "Polyhedral", "Star")
    _LATTICE = {"WeightedL1": True, "LInfinity": True, "WeightedLp": True,
                "Lorentz": True, "PartitionedN1": False, "PartitionedN2": False,
                "SumOfPartsLInf": False, "MaxOfPartsL1": False, "Star": True}

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise SpecError(f"unknown norm kind {self.kind!r}")
        if self.kind == "WeightedLp":
            if self.p is None or not 1.0 <= float(self.p) <= np.inf:
                raise SpecError("WeightedLp needs p >= 1")
        if self.kind == "Lorentz":
            v = tuple(float(x) for x in self.v or ())
            if not v or any(x < 0 for x in v) or any(a < b for a, b in zip(v, v[1:])):
                raise SpecError(f"Lorentz weights must be nonincreasing and >= 0, got {v}")
            if v[0] <= 0:
                raise SpecError("Lorentz weights must not vanish identically")
            object.__setattr__(self, "v", v)
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(x) for x in self.weights))
        if self.kind == "Polyhedral":
            D = np.atleast_2d(np.asarray(self.functionals, dtype=float))
            if D.size == 0:
                raise SpecError("Polyhedral norm needs at least one functional")
            object.__setattr__(self, "functionals", tuple(map(tuple, D.tolist())))
        if self.kind == "Star" and self.base is None:
            raise SpecError("Star norm needs a base norm")

    # constructors -------------------------------------------------------
    @classmethod
    def l1(cls, weights=None):
        return cls("WeightedL1", weights=weights)

    @classmethod
    def linf(cls):
        return cls("LInfinity")

    @classmethod
    def lp(cls, p, weights=None):
        p = float(p)
        if p == 1.0:
            return cls.l1(weights)
        if p == np.inf:
            return cls.linf()
        return cls("WeightedLp", p=p, weights=weights)

    @classmethod
    def lorentz(cls, v):
        return cls("Lorentz", v=tuple(v))

    @classmethod
    def n1(cls):
        return cls("PartitionedN1")

    @classmethod
    def n2(cls):
        return cls("PartitionedN2")

    @classmethod
    def sum_of_parts_linf(cls):
        return cls("SumOfPartsLInf")

    @classmethod
    def max_of_parts_l1(cls, weights=None):
        return cls("MaxOfPartsL1", weights=weights)

    @classmethod
    def polyhedral(cls, functionals, lattice=False):
        return cls("Polyhedral", functionals=functionals, lattice=bool(lattice))

    @classmethod
    def star(cls, base):
        """``f -> base(|f|)``, the lattice renorming of ``base``."""
        if base.is_lattice_norm:
            return base
        return cls("Star", base=base)

    # properties -----------------------------------------------------------
    @property
    def is_lattice_norm(self):
        if self.kind == "Polyhedral":
            return bool(self.lattice)
        return self._LATTICE[self.kind]

    @property
    def is_polyhedral(self):
        if self.kind == "WeightedLp":
            return False
        if self.kind == "Star":
            return self.base.is_polyhedral
        return True

    @property
    def label(self):
        if self.kind == "WeightedLp":
            return f"L{self.p:g}"
        if self.kind == "Lorentz":
            return "Lorentz(" + ",".join(f"{x:g}" for x in self.v) + ")"
        if self.kind == "Star":
            return f"Star({self.base.label})"
        return self.kind

    def _w(self, space_weights, n):
        if self.weights is not None:
            w = np.asarray(self.weights)
        elif space_weights is not None:
            w = np.asarray(space_weights, dtype=float)
        else:
            w = np.ones(n)
        if w.shape[0] != n:
            raise DimensionError(f"norm weights have {w.shape[0]} entries, need {n}")
        return w

    def evaluate(self, X, space_weights=None):
        """Evaluate the norm on a vector or on each row of a 2-d array."""
        X = np.asarray(X, dtype=float)
        n = X.shape[-1]
        A = np.abs(X)
        k = self.kind
        if k == "WeightedL1":
            return A @ self._w(space_weights, n)
        if k == "LInfinity":
            return A.max(axis=-1)
        if k == "WeightedLp":
            w = self._w(space_weights, n)
            m = A.max(axis=-1, keepdims=True)
            m = np.where(m > 0, m, 1.0)
            return m[..., 0] * (((A / m) ** self.p) @ w) ** (1.0 / self.p)
        if k == "Lorentz":
            if len(self.v) != n:
                raise DimensionError(f"Lorentz weights have length {len(self.v)}, need {n}")
            return -np.sort(-A, axis=-1) @ np.asarray(self.v)
        P, N = np.maximum(X, 0.0), np.maximum(-X, 0.0)
        if k == "PartitionedN1":
            return np.maximum(P.sum(axis=-1), N.sum(axis=-1))
        if k in ("PartitionedN2", "SumOfPartsLInf"):
            return P.max(axis=-1) + N.max(axis=-1)
        if k == "MaxOfPartsL1":
            w = self._w(space_weights, n)
            return np.maximum(P @ w, N @ w)
        if k == "Polyhedral":
            D = self._functional_array(n)
            return (X @ D.T).max(axis=-1)
        if k == "Star":
            return self.base.evaluate(A, space_weights)
        raise SpecError(k)  # pragma: no cover

    def _functional_array(self, n):
        D = np.asarray(self.functionals, dtype=float)
        if D.shape[1] != n:
            raise DimensionError(f"functionals have length {D.shape[1]}, need {n}")
        return np.vstack([D, -D])

    def __call__(self, f):
        return norm_eval(self, f)

    # serialization --------------------------------------------------------
    def to_json(self):
        params = {}
        if self.p is not None:
            params["p"] = self.p
        if self.v is not None:
            params["v"] = list(self.v)
        if self.weights is not None:
            params["weights"] = list(self.weights)
        if self.functionals is not None:
            params["functionals"] = [list(r) for r in self.functionals]
            params["lattice"] = bool(self.lattice)
        if self.base is not None:
            params["base"] = self.base.to_json()
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            return cls.from_name(data)
        kind = data.get("kind")
        params = dict(data.get("params") or {})
        if kind not in cls.KINDS:
            raise SpecError(f"unknown norm kind {kind!r}")
        if "base" in params:
            params["base"] = cls.from_json(params["base"])
        if "v" in params:
            params["v"] = tuple(params["v"])
        if "functionals" in params:
            params["functionals"] = tuple(map(tuple, params["functionals"]))
        unknown = set(params) - {"p", "v", "weights", "functionals", "base", "lattice"}
        if unknown:
            raise SpecError(f"unknown norm parameters {sorted(unknown)}")
        return cls(kind, **params)

    @classmethod
    def from_name(cls, name):
        """Parse short names such as ``l1``, ``linf``, ``l2``, ``N1``."""
        key = name.strip()
        low = key.lower()
        table = {"l1": cls.l1(), "linf": cls.linf(), "n1": cls.n1(), "n2": cls.n2(),
                 "maxofpartsl1": cls.max_of_parts_l1(),
                 "sumofpartslinf": cls.sum_of_parts_linf()}
        if low in table:
            return table[low]
        if low.startswith("l") and low[1:].replace(".", "", 1).isdigit():
            return cls.lp(float(low[1:]))
        if low.startswith("lorentz(") and low.endswith(")"):
            return cls.lorentz([float(x) for x in low[8:-1].split(",")])
        raise SpecError(f"unknown norm name {name!r}")


def norm_eval(N, f):
    """Evaluate ``N`` at ``f``; plain arrays are taken on counting measure."""
    if isinstance(f, LatticeVector):
        return float(N.evaluate(f.values, f.space.weights))
    return float(N.evaluate(as_values(f)))


def _dedupe_rows(D, decimals=12):
    D = np.asarray(D, dtype=float)
    D = D[np.abs(D).max(axis=1) > 0]
    _, idx = np.unique(np.round(D, decimals), axis=0, return_index=True)
    return D[np.sort(idx)]


@functools.lru_cache(maxsize=256)
def _dual_functionals_cached(N, space):
    n = space.n
    k = N.kind
    if not N.is_polyhedral:
        raise UnsupportedError(f"{N.label} has no finite dual description")
    if k == "WeightedL1":
        return _dedupe_rows(_sign_vectors(n) * N._w(space.weights, n))
    if k == "LInfinity":
        E = np.eye(n)
        return np.vstack([E, -E])
    if k == "Lorentz":
        if len(N.v) != n:
            raise DimensionError(f"Lorentz weights have length {len(N.v)}, need {n}")
        perms = np.array(sorted(set(itertools.permutations(N.v))))
        rows = [s * P for P in perms for s in _sign_vectors(n)]
        return _dedupe_rows(rows)
    if k in ("PartitionedN1", "MaxOfPartsL1"):
        w = N._w(space.weights, n) if k == "MaxOfPartsL1" else np.ones(n)
        subsets = np.array(list(itertools.product((0.0, 1.0), repeat=n)))[1:]
        S = subsets * w
        return _dedupe_rows(np.vstack([S, -S]))
    if k in ("PartitionedN2", "SumOfPartsLInf"):
        E = np.eye(n)
        rows = [E[i] - E[j] for i in range(n) for j in range(n) if i != j]
        return _dedupe_rows(np.vstack([E, -E] + ([np.array(rows)] if rows else [])))
    if k == "Polyhedral":
        return _dedupe_rows(N._functional_array(n))
    if k == "Star":
        D = np.maximum(_dual_functionals_cached(N.base, space), 0.0)
        return _dedupe_rows([s * y for y in D for s in _sign_vectors(n)])
    raise SpecError(k)  # pragma: no cover


def dual_functionals(N, space):
    """Finite sign-symmetric set ``D`` with ``N(f) = max_{y in D} <y, f>``.

    For ``Star`` norms the set is ``{s * y^+}`` over sign patterns ``s``; it
    represents ``f -> base(|f|)`` whenever that map is monotone on the
    positive cone, which is the case for exact partially K-monotone bases.
    """
    D = _dual_functionals_cached(N, space).copy()
    D.setflags(write=False)
    return D


@functools.lru_cache(maxsize=256)
def _vertices_cached(N, space):
    n = space.n
    if N.kind == "WeightedL1":
        w = N._w(space.weights, n)
        E = np.diag(1.0 / w)
        return np.vstack([E, -E])
    if N.kind == "LInfinity":
        return _sign_vectors(n)
    D = _dual_functionals_cached(N, space)
    if n == 1:
        r = 1.0 / float(np.max(D))
        return np.array([[r], [-r]])
    halfspaces = np.hstack([D, -np.ones((D.shape[0], 1))])
    hs = HalfspaceIntersection(halfspaces, np.zeros(n))
    V = _dedupe_rows(hs.intersections, decimals=9)
    # snap onto the exact polytope: each vertex is pinned by its active facets
    out = []
    for x in V:
        act = D[np.abs(D @ x - 1.0) < 1e-7]
        sol, *_ = np.linalg.lstsq(act, np.ones(act.shape[0]), rcond=None)
        out.append(sol)
    return _dedupe_rows(out, decimals=10)


def unit_ball_vertices(N, space):
    """Vertices of ``{x : N(x) <= 1}``; closed form for L1 and L-infinity."""
    if not N.is_polyhedral:
        raise UnsupportedError(f"{N.label} has no finite vertex set")
    V = _vertices_cached(N, space).copy()
    V.setflags(write=False)
    return V


def check_lattice_norm(N, space, samples=200, seed=0):
    """Sample-based check of ``N(f) = N(|f|)`` and monotonicity in ``|f|``.

    Returns ``(holds, witness)`` where ``witness`` is ``None`` or a pair
    ``(g, f)`` with ``|g| <= |f|`` and ``N(g) > N(f)``.
    """
    rng = np.random.default_rng(seed)
    n = space.n
    F = np.vstack([rng.integers(-2, 3, size=(samples // 2, n)).astype(float),
                   rng.normal(size=(samples - samples // 2, n))])
    if n == 2:
        F = np.vstack([[[1.0, -1.0], [-1.0, 1.0]], F])
    for f in F:
        for g in (np.abs(f), f, rng.uniform(0, 1, n) * f * rng.choice([-1, 1], n)):
            a = float(N.evaluate(g, space.weights))
            b = float(N.evaluate(f, space.weights))
            if a > b + TOL * max(1.0, b):
                return False, (LatticeVector(space, g), LatticeVector(space, f))
            if abs(b - float(N.evaluate(np.abs(f), space.weights))) > TOL * max(1.0, b):
                return False, (LatticeVector(space, np.abs(f)), LatticeVector(space, f))
    return True, None


@dataclass(frozen=True)
class Couple:
    """Interpolation couple ``(X0, X1)`` of lattice norms on one space."""

    space: MeasureSpace
    x0: NormSpec
    x1: NormSpec
    name: str = field(default="", compare=False)

    def __post_init__(self):
        for N in (self.x0, self.x1):
            if not N.is_lattice_norm:
                raise SpecError(f"couple endpoints must be lattice norms, {N.label} is not")

    @classmethod
    def l1_linf(cls, space):
        if not isinstance(space, MeasureSpace):
            space = MeasureSpace.uniform(space)
        return cls(space, NormSpec.l1(), NormSpec.linf(), "L1-Linf")

    @property
    def n(self):
        return self.space.n

    @property
    def is_l1_linf(self):
        return (self.x0.kind == "WeightedL1" and self.x1.kind == "LInfinity"
                and (self.x0.weights is None or self.x0.weights == self.space.weights))

    @property
    def is_polyhedral(self):
        return self.x0.is_polyhedral and self.x1.is_polyhedral

    @property
    def positive_cm(self):
        """Known exact Calderon-Mityagin couple w.r.t. positive operators."""
        return self.is_l1_linf

    def vector(self, values):
        return LatticeVector(self.space, values)

    def norm0(self, f):
        return float(self.x0.evaluate(as_values(f, self.n), self.space.weights))

    def norm1(self, f):
        return float(self.x1.evaluate(as_values(f, self.n), self.space.weights))

    def intersection_norm(self, f):
        return self.norm0(f) + self.norm1(f)

    def sum_norm(self, f):
        from .kfunctional import k_value
        return k_value(self, f, 1.0)

    def to_json(self):
        return {"space": self.space.to_json(), "x0": self.x0.to_json(),
                "x1": self.x1.to_json()}

    @classmethod
    def from_json(cls, data):
        space = MeasureSpace.from_json(data["space"])
        return cls(space, NormSpec.from_json(data["x0"]), NormSpec.from_json(data["x1"]))
