"""Dense two-phase simplex with Bland's rule and verified certificates.

Problems are stated as::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x[j] >= 0  unless free[j]

Every verdict is re-checked by substitution before it is returned: optimal
points are checked for primal feasibility and against a dual certificate,
infeasibility is reported together with a Farkas vector ``y`` (rows ordered
``ub`` then ``eq``) satisfying ``b @ y = 1``, ``y_ub <= 0``,
``(A.T @ y)[j] <= 0`` for sign-restricted and ``== 0`` for free variables.
A verdict that fails its check is downgraded to ``"indeterminate"``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LinearProgram", "LPResult", "lp_solve", "verify_farkas", "verify_point"]

PIVOT_TOL = 1e-9
COST_TOL = 1e-10
CERT_TOL = 1e-8


@dataclass
class LinearProgram:
    """Linear program in inequality/equality form; ``c=None`` means feasibility."""

    nvar: int
    c: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    free: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.nvar)

        def block(A, b):
            if A is None or len(A) == 0:
                return np.zeros((0, n)), np.zeros(0)
            A = np.atleast_2d(np.asarray(A, dtype=float))
            b = np.asarray(b, dtype=float).reshape(-1)
            if A.shape != (b.shape[0], n):
                raise ValueError(f"constraint block has shape {A.shape}, rhs {b.shape}")
            return A, b

        self.A_ub, self.b_ub = block(self.A_ub, self.b_ub)
        self.A_eq, self.b_eq = block(self.A_eq, self.b_eq)
        self.c = np.zeros(n) if self.c is None else np.asarray(self.c, dtype=float).reshape(-1)
        self.free = (np.zeros(n, bool) if self.free is None
                     else np.asarray(self.free, dtype=bool).reshape(-1))

    @property
    def A(self):
        return np.vstack([self.A_ub, self.A_eq])

    @property
    def b(self):
        return np.concatenate([self.b_ub, self.b_eq])


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None = None
    value: float | None = None
    farkas: np.ndarray | None = None
    duals: np.ndarray | None = None
    pivots: int = 0
    message: str = ""
    checks: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return self.status in ("optimal", "unbounded")


def _scale(A, b):
    return max(1.0, float(np.max(np.abs(b), initial=0.0)), float(np.max(np.abs(A), initial=0.0)))


def verify_point(prog, x, tol=CERT_TOL):
    """Max constraint violation of ``x``; feasible when below ``tol * scale``."""
    x = np.asarray(x, dtype=float)
    viol = 0.0
    if prog.A_ub.shape[0]:
        viol = max(viol, float(np.max(prog.A_ub @ x - prog.b_ub)))
    if prog.A_eq.shape[0]:
        viol = max(viol, float(np.max(np.abs(prog.A_eq @ x - prog.b_eq))))
    if np.any(~prog.free):
        viol = max(viol, float(np.max(-x[~prog.free])))
    return viol <= tol * _scale(prog.A, prog.b), viol


def verify_farkas(prog, y, tol=CERT_TOL):
    """Check that ``y`` certifies infeasibility of ``prog``.

    ``y`` is rescaled so that ``b @ y = 1``; the sign conditions are then
    checked with a tolerance proportional to ``|y|_1 * max|A|``.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    A, b = prog.A, prog.b
    if y.shape[0] != A.shape[0]:
        return False
    by = float(b @ y)
    if not by > 0:
        return False
    y = y / by
    slack = tol * max(1.0, float(np.abs(y).sum()) * float(np.max(np.abs(A), initial=1.0)))
    m_ub = prog.A_ub.shape[0]
    if np.any(y[:m_ub] > slack):
        return False
    r = A.T @ y
    if np.any(r[~prog.free] > slack):
        return False
    if np.any(np.abs(r[prog.free]) > slack):
        return False
    return True


def _pivot(T, rhs, r, j):
    piv = T[r, j]
    T[r] /= piv
    rhs[r] /= piv
    col = T[:, j].copy()
    col[r] = 0.0
    nz = np.nonzero(np.abs(col) > 0)[0]
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])
        rhs[nz] -= col[nz] * rhs[r]


def _bland(T, rhs, basis, cost, allowed, max_pivots):
    """Run the simplex method in place; returns ``(status, pivots)``."""
    pivots = 0
    while True:
        cb = cost[basis]
        reduced = cost - cb @ T
        cand = np.nonzero((reduced < -COST_TOL) & allowed)[0]
        if cand.size == 0:
            return "optimal", pivots
        j = int(cand[0])
        col = T[:, j]
        rows = np.nonzero(col > PIVOT_TOL)[0]
        if rows.size == 0:
            return "unbounded", pivots
        ratios = rhs[rows] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, rhs, r, j)
        basis[r] = j
        pivots += 1
        if pivots >= max_pivots:
            return "stalled", pivots


def lp_solve(prog, max_pivots=None):
    """Solve ``prog`` by the two-phase simplex method with Bland's rule."""
    n = prog.nvar
    A = prog.A
    b = prog.b.copy()
    m = A.shape[0]
    m_ub = prog.A_ub.shape[0]
    free = prog.free

    # standard form columns: x (nonneg parts), x- for free vars, ub slacks
    free_idx = np.nonzero(free)[0]
    cols = [A, -A[:, free_idx]]
    S = np.zeros((m, m_ub))
    S[np.arange(m_ub), np.arange(m_ub)] = 1.0
    cols.append(S)
    As = np.hstack(cols)
    cs = np.concatenate([prog.c, -prog.c[free_idx], np.zeros(m_ub)])
    nstd = As.shape[1]

    sigma = np.where(b < 0, -1.0, 1.0)
    As = As * sigma[:, None]
    bs = b * sigma

    # initial basis: ub slacks with +1 coefficient, artificials elsewhere
    basis = [-1] * m
    for i in range(m_ub):
        if sigma[i] > 0:
            basis[i] = n + len(free_idx) + i
    art_rows = [i for i in range(m) if basis[i] < 0]
    Art = np.zeros((m, len(art_rows)))
    for k, i in enumerate(art_rows):
        Art[i, k] = 1.0
        basis[i] = nstd + k
    Tfull = np.hstack([As, Art])
    ntot = Tfull.shape[1]
    if max_pivots is None:
        max_pivots = 50 * (m + ntot) + 1000

    T = Tfull.copy()
    rhs = bs.copy()
    basis = np.array(basis, dtype=int)
    total_pivots = 0

    if art_rows:
        cost1 = np.concatenate([np.zeros(nstd), np.ones(len(art_rows))])
        status, piv = _bland(T, rhs, basis, cost1, np.ones(ntot, bool), max_pivots)
        total_pivots += piv
        if status != "optimal":
            return LPResult("indeterminate", pivots=total_pivots,
                            message=f"phase 1 ended with status {status}")
        w = float(cost1[basis] @ rhs)
        if w > 1e-9 * _scale(A, b):
            B = Tfull[:, basis]
            try:
                ys = np.linalg.solve(B.T, cost1[basis])
            except np.linalg.LinAlgError:
                ys = np.linalg.lstsq(B.T, cost1[basis], rcond=None)[0]
            y = sigma * ys
            ok = verify_farkas(prog, y)
            if ok:
                y = y / float(prog.b @ y)
                return LPResult("infeasible", farkas=y, pivots=total_pivots,
                                checks={"farkas": True})
            return LPResult("indeterminate", pivots=total_pivots,
                            message="phase 1 infeasibility could not be certified")
        # drive remaining artificials out of the basis
        keep = np.ones(m, bool)
        for r in range(m):
            if basis[r] >= nstd:
                nz = np.nonzero(np.abs(T[r, :nstd]) > PIVOT_TOL)[0]
                if nz.size:
                    _pivot(T, rhs, r, int(nz[0]))
                    basis[r] = int(nz[0])
                else:
                    keep[r] = False
        T, rhs, basis = T[keep][:, :nstd], rhs[keep], basis[keep]
        rows_kept = np.nonzero(keep)[0]
    else:
        T = T[:, :nstd]
        rows_kept = np.arange(m)

    allowed = np.ones(nstd, bool)
    status, piv = _bland(T, rhs, basis, cs, allowed, max_pivots)
    total_pivots += piv
    if status == "stalled":
        return LPResult("indeterminate", pivots=total_pivots, message="pivot limit reached")

    Ak, bk = As[rows_kept], bs[rows_kept]
    B = Ak[:, basis]
    try:
        xb = np.linalg.solve(B, bk)
    except np.linalg.LinAlgError:
        xb = rhs
    xs = np.zeros(nstd)
    xs[basis] = xb
    xs = np.maximum(xs, 0.0)
    x = xs[:n].copy()
    x[free_idx] -= xs[n:n + len(free_idx)]
    ok, viol = verify_point(prog, x)
    if not ok:
        return LPResult("indeterminate", pivots=total_pivots,
                        message=f"basic solution violates constraints by {viol:.3g}")
    if status == "unbounded":
        return LPResult("unbounded", x=x, pivots=total_pivots, checks={"primal": True})

    # dual certificate of optimality
    try:
        ys = np.linalg.solve(B.T, cs[basis])
    except np.linalg.LinAlgError:
        ys = np.linalg.lstsq(B.T, cs[basis], rcond=None)[0]
    red = cs - Ak.T @ ys
    value = float(prog.c @ x)
    scale = max(1.0, float(np.abs(cs).max(initial=0.0))) * _scale(A, b)
    dual_ok = bool(np.all(red >= -CERT_TOL * scale))
    gap = abs(value - float(bk @ ys))
    gap_ok = gap <= CERT_TOL * scale * max(1.0, abs(value))
    if not (dual_ok and gap_ok):
        return LPResult("indeterminate", x=x, value=value, pivots=total_pivots,
                        message="optimality certificate failed")
    duals = np.zeros(m)
    duals[rows_kept] = ys
    duals *= sigma
    return LPResult("optimal", x=x, value=value, duals=duals, pivots=total_pivots,
                    checks={"primal": True, "dual": True, "gap": gap})
