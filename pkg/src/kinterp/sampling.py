"""Seeded generators of test vectors, related pairs and random operators."""
from __future__ import annotations

import itertools

import numpy as np

from .lattice import as_values
from .relations import relation_constant

__all__ = ["sample_vectors", "probe_vectors", "integer_grid", "random_positive_contraction",
           "related_pair"]


def probe_vectors(n):
    """Small designated vectors that separate lattice from non-lattice norms."""
    out = []
    if n >= 2:
        base = [(1, -1), (1, 1), (-1, 1), (2, 0), (0, 2), (1, 0), (-1, -1), (2, -1), (1, -2)]
        out = [np.array(b + (0,) * (n - 2), dtype=float) for b in base]
    out += [np.eye(n)[i] for i in range(n)] + [-np.eye(n)[i] for i in range(n)]
    return out


def integer_grid(n, radius=2):
    """All vectors with integer entries in ``[-radius, radius]``."""
    return [np.array(c, dtype=float)
            for c in itertools.product(range(-radius, radius + 1), repeat=n)]


def sample_vectors(n, count, rng):
    """Mixture of sparse, signed-integer, two-level and Gaussian vectors."""
    rng = np.random.default_rng(rng)
    out = []
    for k in range(count):
        kind = k % 4
        if kind == 0:
            v = np.zeros(n)
            m = rng.integers(1, n + 1)
            idx = rng.choice(n, size=m, replace=False)
            v[idx] = rng.normal(size=m) * 2.0
        elif kind == 1:
            v = rng.integers(-3, 4, size=n).astype(float)
        elif kind == 2:
            # equimeasurable extremes: equal magnitudes with random signs
            m = rng.integers(1, n + 1)
            v = np.zeros(n)
            v[:m] = rng.uniform(0.5, 2.0)
            v = rng.permutation(v * rng.choice([-1.0, 1.0], size=n))
        else:
            v = rng.normal(size=n)
        out.append(v)
    return out


def random_positive_contraction(couple, rng, density=0.7):
    """Random entrywise nonnegative matrix scaled to couple norm exactly one."""
    from .operators import operator_couple_norm

    rng = np.random.default_rng(rng)
    n = couple.n
    while True:
        T = rng.uniform(0, 1, (n, n)) * (rng.uniform(size=(n, n)) < density)
        if np.any(T):
            return T / operator_couple_norm(T, couple)


def _scale_into(kind, g, f, couple, rng, tight):
    if not np.any(g):
        return g
    c = relation_constant(kind, g, f, couple)
    if not np.isfinite(c) or c <= 0:
        return np.zeros_like(g)
    return g / c * (1.0 if tight else rng.uniform(0.5, 1.0))


def related_pair(couple, kind, rng, nonneg=False, tight=False):
    """Random ``(f, g)`` with ``g kind f`` by exact rescaling of ``g``.

    For the part-wise kinds the positive and negative parts of ``g`` are
    rescaled separately.  ``tight=True`` puts ``g`` on the boundary of the
    relation.
    """
    rng = np.random.default_rng(rng)
    n = couple.n
    f = rng.normal(size=n)
    g = rng.normal(size=n)
    if nonneg:
        f, g = np.abs(f), np.abs(g)
    if rng.uniform() < 0.3:
        f[rng.uniform(size=n) < 0.3] = 0.0
    if kind in ("preceq_K", "preceq_HLP"):
        return f, _scale_into(kind, g, f, couple, rng, tight)
    base = "preceq_K" if kind == "ll_K" else "preceq_HLP"
    gp = _scale_into(base, np.maximum(g, 0), np.maximum(f, 0), couple, rng, tight)
    gm = _scale_into(base, np.maximum(-g, 0), np.maximum(-f, 0), couple, rng, tight)
    return f, gp - gm


def as_pairs(vectors):
    """Consecutive pairs of a vector list, wrapping around."""
    vs = [as_values(v) for v in vectors]
    return [(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]
