"""K-functionals, exact K-curves and sign-compatible splittings.

``K(f, t) = inf { ||f0||_X0 + t ||f1||_X1 : f = f0 + f1 }``.

Three evaluation routes exist:

* the closed form for ``(L1(mu), L-infinity)``, where ``K(f, t)`` is the
  integral of the decreasing rearrangement over ``[0, t]``;
* a linear program over the splitting ``f0`` with epigraph variables for
  both endpoint norms (any polyhedral couple);
* projected subgradient descent for non-polyhedral endpoints (approximate).

For polyhedral couples ``t -> K(f, t)`` is concave and piecewise linear;
:func:`k_curve` recovers it exactly from finitely many LP solves.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InputError, PrecisionError, UnsupportedError, VerificationError
from .lattice import TOL, LatticeVector, as_values, dual_functionals, rearrange
from .lp import LinearProgram, lp_solve

__all__ = [
    "KCurve", "Decomposition", "k_l1linf_curve", "k_value", "k_inf_value",
    "k_curve", "optimal_decomposition", "refine_decomposition",
    "lift_decomposition", "encode_norm_bound",
]

LINEARITY_TOL = 1e-11
MAX_DEPTH = 60


@dataclass(frozen=True, eq=False)
class KCurve:
    """Exact piecewise-linear concave curve ``t -> K(f, t)`` on ``(0, inf)``.

    The curve is ``initial_slope * t`` up to the first breakpoint, linear
    between breakpoints and equal to ``saturation`` after the last one.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    initial_slope: float
    saturation: float
    approximate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", np.asarray(self.breakpoints, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def is_zero(self):
        return self.breakpoints.size == 0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            return np.zeros_like(t) if t.ndim else 0.0
        ts = np.concatenate([[0.0], self.breakpoints])
        ks = np.concatenate([[0.0], self.values])
        out = np.interp(t, ts, ks, right=self.saturation)
        return out if t.ndim else float(out)

    def slopes(self):
        """Slopes of the pieces, starting with the initial one and ending with 0."""
        if self.is_zero:
            return np.zeros(1)
        ts = np.concatenate([[0.0], self.breakpoints])
        ks = np.concatenate([[0.0], self.values])
        return np.concatenate([np.diff(ks) / np.diff(ts), [0.0]])

    def to_csv(self, digits=12):
        rows = ["t,K"]
        rows += [f"{t:.{digits}g},{k:.{digits}g}" for t, k in zip(self.breakpoints, self.values)]
        return "\n".join(rows) + "\n"

    def to_json(self):
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist(),
                "initialSlope": self.initial_slope, "saturation": self.saturation,
                "approximate": self.approximate}

    @classmethod
    def from_points(cls, ts, ks, initial_slope, saturation, approximate=False):
        """Build a canonical curve keeping only genuine kinks."""
        ts = np.asarray(ts, dtype=float)
        ks = np.asarray(ks, dtype=float)
        if saturation <= 0 and initial_slope <= 0:
            return cls(np.zeros(0), np.zeros(0), 0.0, 0.0, approximate)
        order = np.argsort(ts)
        ts, ks = ts[order], ks[order]
        keep_t, keep_k = [], []
        prev_t, prev_k, prev_slope = 0.0, 0.0, float(initial_slope)
        for i in range(ts.size):
            if ts[i] - prev_t <= 1e-14 * max(1.0, ts[i]):
                continue
            nxt_t = ts[i + 1] if i + 1 < ts.size else None
            right = ((ks[i + 1] - ks[i]) / (nxt_t - ts[i])
                     if nxt_t is not None and nxt_t - ts[i] > 1e-14 * max(1.0, nxt_t) else 0.0)
            if nxt_t is None:
                right = 0.0
            left = (ks[i] - prev_k) / (ts[i] - prev_t)
            if abs(left - right) > 1e-9 * max(1.0, abs(left), abs(right)):
                keep_t.append(ts[i])
                keep_k.append(ks[i])
                prev_t, prev_k, prev_slope = ts[i], ks[i], right
        if not keep_t:
            # a single kink at saturation / initial_slope
            keep_t = [saturation / initial_slope]
            keep_k = [saturation]
        return cls(np.array(keep_t), np.array(keep_k), float(initial_slope),
                   float(saturation), approximate)


@dataclass(frozen=True, eq=False)
class Decomposition:
    """A splitting ``f = f0 + f1``."""

    f0: LatticeVector
    f1: LatticeVector

    def __iter__(self):
        return iter((self.f0, self.f1))

    @property
    def f(self):
        return self.f0 + self.f1


# ---------------------------------------------------------------------------
# (L1, L-infinity) closed form


def k_l1linf_curve(f, space=None):
    """Exact K-curve of ``f`` for the couple ``(L1(mu), L-infinity)``.

    ``K(f, t)`` equals the integral of ``f*`` over ``[0, t]``, so the
    breakpoints are the cumulative masses of the rearrangement.
    """
    if space is not None and not isinstance(f, LatticeVector):
        f = LatticeVector(space, f)
    r = rearrange(f)
    if r.levels.size == 0:
        return KCurve(np.zeros(0), np.zeros(0), 0.0, 0.0)
    ts = r.edges[1:]
    ks = np.cumsum(np.diff(r.edges) * r.levels)
    return KCurve.from_points(ts, ks, float(r.levels[0]), float(ks[-1]))


def _clamp_decomposition(f, t):
    lam = rearrange(f)(t)
    v = f.values
    f1 = np.clip(v, -lam, lam)
    return LatticeVector(f.space, v - f1), LatticeVector(f.space, f1)


# ---------------------------------------------------------------------------
# LP route


class _Builder:
    """Incremental dense LP assembly."""

    def __init__(self):
        self.nvar = 0
        self.free = []
        self.ub = []
        self.eq = []

    def var(self, k=1, free=False):
        idx = np.arange(self.nvar, self.nvar + k)
        self.nvar += k
        self.free += [free] * k
        return idx

    def le(self, terms, rhs):
        self.ub.append((terms, float(rhs)))

    def equal(self, terms, rhs):
        self.eq.append((terms, float(rhs)))

    def _dense(self, rows):
        A = np.zeros((len(rows), self.nvar))
        b = np.zeros(len(rows))
        for r, (terms, rhs) in enumerate(rows):
            for idx, coef in terms:
                np.add.at(A[r], np.atleast_1d(idx), coef)
            b[r] = rhs
        return A, b

    def program(self, c_terms=()):
        c = np.zeros(self.nvar)
        for idx, coef in c_terms:
            np.add.at(c, np.atleast_1d(idx), coef)
        A_ub, b_ub = self._dense(self.ub)
        A_eq, b_eq = self._dense(self.eq)
        return LinearProgram(self.nvar, c=c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq,
                             b_eq=b_eq, free=np.array(self.free, bool))


def encode_norm_bound(B, N, space, idx, M, c, s):
    """Add rows encoding ``N(M @ x[idx] + c) <= x[s]`` to builder ``B``.

    L1, MaxOfParts/PartitionedN1, SumOfParts/PartitionedN2, L-infinity and
    Lorentz norms get compact encodings with auxiliary variables; the
    remaining polyhedral norms use their dual functionals.
    """
    n = space.n
    M = np.asarray(M, dtype=float)
    c = np.asarray(c, dtype=float)
    k = N.kind
    if not N.is_polyhedral:
        raise UnsupportedError(f"{N.label} is not polyhedral")
    if k == "LInfinity":
        for i in range(n):
            B.le([(idx, M[i]), (s, -1.0)], -c[i])
            B.le([(idx, -M[i]), (s, -1.0)], c[i])
        return
    if k == "WeightedL1":
        w = N._w(space.weights, n)
        u = B.var(n)
        for i in range(n):
            B.le([(idx, M[i]), (u[i], -1.0)], -c[i])
            B.le([(idx, -M[i]), (u[i], -1.0)], c[i])
        B.le([(u, w), (s, -1.0)], 0.0)
        return
    if k in ("MaxOfPartsL1", "PartitionedN1"):
        w = N._w(space.weights, n) if k == "MaxOfPartsL1" else np.ones(n)
        p, q = B.var(n), B.var(n)
        for i in range(n):
            B.le([(idx, M[i]), (p[i], -1.0)], -c[i])
            B.le([(idx, -M[i]), (q[i], -1.0)], c[i])
        B.le([(p, w), (s, -1.0)], 0.0)
        B.le([(q, w), (s, -1.0)], 0.0)
        return
    if k in ("SumOfPartsLInf", "PartitionedN2"):
        a, b = B.var(), B.var()
        for i in range(n):
            B.le([(idx, M[i]), (a, -1.0)], -c[i])
            B.le([(idx, -M[i]), (b, -1.0)], c[i])
        B.le([(a, 1.0), (b, 1.0), (s, -1.0)], 0.0)
        return
    if k == "Lorentz":
        v = np.append(np.asarray(N.v), 0.0)
        terms = [(s, -1.0)]
        for j in range(1, n + 1):
            d = v[j - 1] - v[j]
            if d <= 0:
                continue
            # sum of the j largest |x_i| <= j*tau + sum w_i,  w_i >= |x_i| - tau
            tau, wv = B.var(free=True), B.var(n)
            for i in range(n):
                B.le([(idx, M[i]), (tau, -1.0), (wv[i], -1.0)], -c[i])
                B.le([(idx, -M[i]), (tau, -1.0), (wv[i], -1.0)], c[i])
            terms += [(tau, d * j), (wv, d * np.ones(n))]
        B.le(terms, 0.0)
        return
    D = dual_functionals(N, space)
    for y in D:
        B.le([(idx, y @ M), (s, -1.0)], -float(y @ c))


def _k_lp(couple, v, t, mode="sum"):
    """Solve the K (``mode='sum'``) or K-infinity (``'max'``) program."""
    n = couple.n
    B = _Builder()
    f0 = B.var(n, free=True)
    s0, s1 = B.var(), B.var()
    encode_norm_bound(B, couple.x0, couple.space, f0, np.eye(n), np.zeros(n), s0)
    encode_norm_bound(B, couple.x1, couple.space, f0, -np.eye(n), v, s1)
    if mode == "sum":
        prog = B.program([(s0, 1.0), (s1, float(t))])
    else:
        m = B.var()
        B.le([(s0, 1.0), (m, -1.0)], 0.0)
        B.le([(s1, float(t)), (m, -1.0)], 0.0)
        prog = B.program([(m, 1.0)])
    res = lp_solve(prog)
    if res.status != "optimal":
        raise PrecisionError(f"K-functional LP ended with status {res.status}: {res.message}")
    return res.x[f0]


def _objective(couple, f0, v, t, mode="sum"):
    a = couple.norm0(f0)
    b = couple.norm1(v - f0)
    return (a + t * b) if mode == "sum" else max(a, t * b), a, b


# ---------------------------------------------------------------------------
# subgradient route for non-polyhedral endpoints


def _norm_subgradient(N, x, w):
    if not np.any(x):
        return np.zeros_like(x)
    if N.kind == "WeightedLp":
        wt = N._w(w, x.size)
        val = float(N.evaluate(x, w))
        return wt * np.sign(x) * (np.abs(x) / val) ** (N.p - 1.0)
    D = dual_functionals(N, _SpaceProxy(w))
    return D[int(np.argmax(D @ x))]


@dataclass(frozen=True)
class _SpaceProxy:
    weights: tuple

    @property
    def n(self):
        return len(self.weights)


def _k_descent(couple, v, t, mode="sum", iters=10_000):
    from scipy.optimize import minimize

    a = np.abs(v)
    w = couple.space.weights

    def phi(g0):
        x = float(couple.x0.evaluate(g0, w))
        y = float(couple.x1.evaluate(a - g0, w))
        return x + t * y if mode == "sum" else max(x, t * y)

    g = a / 2.0
    best, best_val = g.copy(), phi(g)
    radius = max(float(np.abs(a).max()), 1e-300)
    for k in range(iters):
        x0, x1 = g, a - g
        s0 = _norm_subgradient(couple.x0, x0, w)
        s1 = _norm_subgradient(couple.x1, x1, w)
        if mode == "sum":
            sub = s0 - t * s1
        else:
            sub = s0 if couple.x0.evaluate(x0, w) >= t * couple.x1.evaluate(x1, w) else -t * s1
        nrm = np.linalg.norm(sub)
        if nrm == 0:
            break
        g = np.clip(g - radius / np.sqrt(k + 1.0) * sub / nrm, 0.0, a)
        val = phi(g)
        if val < best_val:
            best, best_val = g.copy(), val
    res = minimize(phi, best, method="Powell", bounds=list(zip(np.zeros_like(a), a)),
                   options={"xtol": 1e-12, "ftol": 1e-14, "maxfev": 20_000})
    if res.fun < best_val:
        best = np.clip(res.x, 0.0, a)
    # lift the nonnegative splitting of |f| back to a splitting of f
    f0 = np.minimum(best, np.maximum(v, 0)) - np.minimum(best, np.maximum(-v, 0))
    return f0


# ---------------------------------------------------------------------------
# public API


def _positive_t(t):
    t = float(t)
    if not t > 0:
        raise DomainError(f"K-functional needs t > 0, got {t}")
    return t


def _route(couple, method, descent):
    if method == "auto":
        if couple.is_l1_linf:
            return "exact"
        if couple.is_polyhedral:
            return "lp"
        method = "descent"
    if method == "exact" and not couple.is_l1_linf:
        raise UnsupportedError("closed form only exists for (L1, L-infinity)")
    if method == "lp" and not couple.is_polyhedral:
        raise UnsupportedError("LP route needs polyhedral endpoint norms")
    if method == "descent" and not descent:
        raise UnsupportedError("non-polyhedral endpoints need descent=True")
    return method


def k_value(couple, f, t, method="auto", descent=False):
    """``K(f, t)`` for the couple.

    ``method`` is ``"auto"``, ``"exact"`` (``(L1, L-inf)`` closed form),
    ``"lp"`` or ``"descent"``.  The descent route is approximate (about
    ``1e-6``) and must be enabled with ``descent=True``.
    """
    t = _positive_t(t)
    v = as_values(f, couple.n)
    if not np.any(v):
        return 0.0
    route = _route(couple, method, descent)
    if route == "exact":
        return k_l1linf_curve(LatticeVector(couple.space, v))(t)
    f0 = _k_lp(couple, v, t) if route == "lp" else _k_descent(couple, v, t)
    return _objective(couple, f0, v, t)[0]


def k_inf_value(couple, f, t, method="auto", descent=False):
    """``K_inf(f, t) = inf max(||f0||_X0, t ||f1||_X1)`` over splittings."""
    t = _positive_t(t)
    v = as_values(f, couple.n)
    if not np.any(v):
        return 0.0
    route = _route(couple, "lp" if method in ("auto", "exact") and couple.is_polyhedral
                   else method, descent)
    f0 = _k_lp(couple, v, t, "max") if route == "lp" else _k_descent(couple, v, t, "max")
    return _objective(couple, f0, v, t, "max")[0]


def optimal_decomposition(couple, f, t, slack=0.0, method="auto"):
    """A splitting attaining ``K(f, t)`` up to ``slack``.

    On ``(L1, L-inf)`` this is the clamp ``f1 = (f ^ lam) v (-lam)`` with
    ``lam = f*(t)``.
    """
    t = _positive_t(t)
    if not isinstance(f, LatticeVector):
        f = LatticeVector(couple.space, f)
    v = f.values
    if not np.any(v):
        return Decomposition(f, f.space.zeros())
    route = _route(couple, method, True)
    if route == "exact":
        f0, f1 = _clamp_decomposition(f, t)
    else:
        g0 = _k_lp(couple, v, t) if route == "lp" else _k_descent(couple, v, t)
        f0, f1 = LatticeVector(f.space, g0), LatticeVector(f.space, v - g0)
    obj = couple.norm0(f0) + t * couple.norm1(f1)
    if route == "exact":
        ref = k_l1linf_curve(f)(t)
        if obj > ref + slack + TOL * max(1.0, ref):
            raise VerificationError(f"clamp splitting misses K by {obj - ref:.3g}")
    return Decomposition(f0, f1)


@functools.lru_cache(maxsize=8192)
def _cached_curve(couple, key, method):
    v = np.frombuffer(key, dtype=float)
    return _k_curve(couple, v, method)


def k_curve(couple, f, method="auto", max_depth=MAX_DEPTH):
    """Exact K-curve of ``f`` for a polyhedral couple.

    The curve is bracketed by the two asymptotic lines ``t ||f||_X1`` and
    ``||f||_X0``.  Each LP solve at ``t`` returns a splitting whose line
    ``||f0||_X0 + s ||f1||_X1`` is tangent to ``K`` at ``t``; an interval is
    split at the intersection of its two tangents unless ``K`` already
    meets them there within ``1e-11``, in which case that intersection is
    a kink (concavity makes this test exact).
    """
    v = as_values(f, couple.n)
    if max_depth != MAX_DEPTH:
        return _k_curve(couple, v.copy(), method, max_depth)
    return _cached_curve(couple, np.ascontiguousarray(v, dtype=float).tobytes(), method)


def _k_curve(couple, v, method, max_depth=MAX_DEPTH):
    if not np.any(v):
        return KCurve(np.zeros(0), np.zeros(0), 0.0, 0.0)
    if method == "auto" and couple.is_l1_linf:
        return k_l1linf_curve(LatticeVector(couple.space, v))
    if not couple.is_polyhedral:
        raise UnsupportedError("exact K-curves need polyhedral endpoint norms")
    slope0 = couple.norm1(v)
    sat = couple.norm0(v)
    tol = LINEARITY_TOL * max(1.0, sat)
    pts = {}

    def tangent(t):
        f0 = _k_lp(couple, v, t)
        _, a, b = _objective(couple, f0, v, t)
        pts[t] = a + b * t
        return a, b

    # lines are (intercept, slope); the left end is the line through 0
    # and the right end the saturation level
    stack = [((0.0, slope0), (sat, 0.0), 0)]
    while stack:
        (a1, s1), (a2, s2), depth = stack.pop()
        if s1 - s2 <= 1e-12 * max(1.0, s1):
            continue
        tstar = (a2 - a1) / (s1 - s2)
        if not tstar > 0:
            continue
        if any(abs(tstar - t) <= 1e-13 * max(1.0, t) for t in pts):
            continue
        if depth >= max_depth:
            partial = KCurve.from_points(list(pts), list(pts.values()), slope0, sat)
            raise PrecisionError(f"K-curve bisection exceeded depth {max_depth}", partial)
        line = a1 + s1 * tstar
        a, s = tangent(tstar)
        if line - pts[tstar] <= tol:
            continue
        stack.append(((a, s), (a2, s2), depth + 1))
        stack.append(((a1, s1), (a, s), depth + 1))
    return KCurve.from_points(list(pts), list(pts.values()), slope0, sat)


# ---------------------------------------------------------------------------
# sign-compatible splittings


def _check_split(f, f0, f1, tol=1e-12):
    scale = max(1.0, float(np.abs(f.values).max(initial=0.0)))
    res = float(np.abs(f0.values + f1.values - f.values).max(initial=0.0))
    if res > tol * scale:
        raise InputError(f"f0 + f1 differs from f by {res:.3g}")


def refine_decomposition(f, f0, f1, tol=1e-10):
    """Make a splitting ``f = f0 + f1`` sign-compatible.

    With ``h = (f0+ ^ f1-) - (f0- ^ f1+)`` the refined parts
    ``f0 - h`` and ``f1 + h`` satisfy ``0 <= fi^+- <= original fi^+-`` and
    ``f^+- = f0^+- + f1^+-``.
    """
    _check_split(f, f0, f1)
    h = (f0.pos & f1.neg) - (f0.neg & f1.pos)
    g0, g1 = f0 - h, f1 + h
    checks = [
        np.all(g0.pos.values <= f0.pos.values + tol),
        np.all(g0.neg.values <= f0.neg.values + tol),
        np.all(g1.pos.values <= f1.pos.values + tol),
        np.all(g1.neg.values <= f1.neg.values + tol),
        np.allclose(f.pos.values, g0.pos.values + g1.pos.values, atol=tol, rtol=0),
        np.allclose(f.neg.values, g0.neg.values + g1.neg.values, atol=tol, rtol=0),
        np.allclose(np.abs(f.values), np.abs(g0.values) + np.abs(g1.values), atol=tol, rtol=0),
    ]
    if not all(checks):
        raise VerificationError("refined splitting violates its postconditions")
    return g0, g1


def lift_decomposition(f, g0, g1, tol=1e-10):
    """Split ``f`` as ``f0 + f1`` with ``|fi| = gi`` given ``|f| = g0 + g1``."""
    if not (g0.is_nonneg() and g1.is_nonneg()):
        raise InputError("g0 and g1 must be nonnegative")
    scale = max(1.0, float(np.abs(f.values).max(initial=0.0)))
    gap = float(np.abs(np.abs(f.values) - g0.values - g1.values).max(initial=0.0))
    if gap > 1e-12 * scale:
        raise InputError(f"|f| differs from g0 + g1 by {gap:.3g}")
    f0 = (g0 & f.pos) - (g0 & f.neg)
    f1 = (g1 & f.pos) - (g1 & f.neg)
    if not (np.allclose(f0.values + f1.values, f.values, atol=tol, rtol=0)
            and np.allclose(np.abs(f0.values), g0.values, atol=tol, rtol=0)
            and np.allclose(np.abs(f1.values), g1.values, atol=tol, rtol=0)):
        raise VerificationError("lifted splitting violates its postconditions")
    return Decomposition(f0, f1)
