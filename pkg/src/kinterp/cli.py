"""``kinterp`` command line.

Exit codes: 0 success or certified, 1 refuted with a witness, 2 inconclusive
or out of budget, 3 input error.  JSON goes out with sorted keys and full
precision; CSV and SVG numbers use 12 significant digits.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .exceptions import InconsistencyError, KInterpError, PrecisionError
from .lattice import Couple, LatticeVector, MeasureSpace, NormSpec, double_star, rearrange
from .serialize import dumps, envelope, loads, verify_envelope

OK, REFUTED, INCONCLUSIVE, INPUT_ERROR = 0, 1, 2, 3
DIGITS = 12


class CLIInputError(Exception):
    pass


def fmt(x):
    return f"{float(x):.{DIGITS}g}"


# ---------------------------------------------------------------------------
# argument parsing helpers


def _vector(text):
    """Comma separated numbers, a JSON list, or ``@path`` to a JSON file."""
    if text is None:
        return None
    if text.startswith("@"):
        with open(text[1:]) as fh:
            data = loads(fh.read())
        if isinstance(data, dict):
            data = data.get("values")
        return np.asarray(data, dtype=float)
    text = text.strip()
    if text.startswith("["):
        return np.asarray(loads(text), dtype=float)
    try:
        return np.array([float(x) for x in text.split(",") if x.strip()], dtype=float)
    except ValueError as exc:
        raise CLIInputError(f"cannot parse vector {text!r}") from exc


def _norm(text):
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return NormSpec.from_json(loads(fh.read()))
    if text.lstrip().startswith("{"):
        return NormSpec.from_json(loads(text))
    return NormSpec.from_name(text)


def _space(args, n):
    w = _vector(getattr(args, "weights", None))
    if w is None:
        return MeasureSpace.uniform(n)
    if w.shape[0] != n:
        raise CLIInputError(f"--weights has {w.shape[0]} entries, vectors have {n}")
    return MeasureSpace(tuple(w))


def _couple(args, n):
    if getattr(args, "couple", None):
        with open(args.couple) as fh:
            return Couple.from_json(loads(fh.read()))
    return Couple(_space(args, n), _norm(args.x0), _norm(args.x1))


def _add_couple(p):
    p.add_argument("--x0", default="l1", help="first endpoint norm (name or JSON)")
    p.add_argument("--x1", default="linf", help="second endpoint norm (name or JSON)")
    p.add_argument("--weights", help="atom masses, comma separated")
    p.add_argument("--couple", help="couple JSON file (overrides --x0/--x1/--weights)")


def _emit(args, text):
    if getattr(args, "out", None):
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_rearrange(args):
    f = _vector(args.f)
    v = LatticeVector(_space(args, f.shape[0]), f)
    r = rearrange(v)
    rows = ["t_start,t_end,fstar,fdoublestar_end"]
    for k, lev in enumerate(r.levels):
        rows.append(",".join([fmt(r.edges[k]), fmt(r.edges[k + 1]), fmt(lev),
                              fmt(double_star(v, r.edges[k + 1]))]))
    _emit(args, "\n".join(rows) + "\n")
    return OK


def cmd_kcurve(args):
    from .kfunctional import k_curve
    f = _vector(args.f)
    couple = _couple(args, f.shape[0])
    curve = k_curve(couple, f)
    if args.json:
        payload = {"type": "KCurve", "couple": couple.to_json(), "f": f.tolist(),
                   **curve.to_json()}
        _emit(args, dumps(envelope("KCurve", payload, args.seed)))
    else:
        _emit(args, curve.to_csv(DIGITS))
    return OK


def cmd_relate(args):
    from .relations import check_relation
    f, g = _vector(args.f), _vector(args.g)
    couple = _couple(args, f.shape[0])
    space = couple.space
    rep = check_relation(args.kind, LatticeVector(space, g), LatticeVector(space, f),
                         couple, constant=args.constant)
    payload = {**rep.to_json(), "f": f.tolist(), "g": g.tolist(), "couple": couple.to_json()}
    _emit(args, dumps(envelope("RelationReport", payload, args.seed)))
    return OK if rep.holds else REFUTED


def cmd_decompose(args):
    from .kfunctional import lift_decomposition, optimal_decomposition, refine_decomposition
    f = _vector(args.f)
    couple = _couple(args, f.shape[0])
    sp = couple.space
    fv = LatticeVector(sp, f)
    if args.f0 is not None:
        a, b = refine_decomposition(fv, LatticeVector(sp, _vector(args.f0)),
                                    LatticeVector(sp, _vector(args.f1)))
        mode = "refine"
    elif args.g0 is not None:
        a, b = lift_decomposition(fv, LatticeVector(sp, _vector(args.g0)),
                                  LatticeVector(sp, _vector(args.g1)))
        mode = "lift"
    else:
        if args.t is None:
            raise CLIInputError("decompose needs --t, --f0/--f1 or --g0/--g1")
        a, b = optimal_decomposition(couple, fv, args.t)
        mode = "optimal"
    out = {"mode": mode, "f": f.tolist(), "f0": a.values.tolist(), "f1": b.values.tolist()}
    if mode == "optimal":
        out["t"] = args.t
        out["objective"] = couple.norm0(a) + args.t * couple.norm1(b)
    _emit(args, dumps(out))
    return OK


def cmd_synthesize(args):
    from .synthesis import synthesize_contraction, synthesize_ll
    f, g = _vector(args.f), _vector(args.g)
    couple = _couple(args, f.shape[0])
    if args.ll:
        res = synthesize_ll(couple, f, g)
    else:
        res = synthesize_contraction(couple, f, g, positive=not args.signed)
    kind = "SynthesisResult" if res.feasible else "InfeasibilityCertificate"
    _emit(args, dumps(envelope(kind, res.to_json(), args.seed)))
    return OK if res.feasible else REFUTED


def cmd_cm_search(args):
    from .synthesis import SearchBudget, cm_witness_search
    couple = _couple(args, args.n)
    w = cm_witness_search(couple, SearchBudget(pairs=args.pairs, grid=args.grid, seed=args.seed))
    if w is None:
        _emit(args, dumps({"type": "CMSearch", "witness": None, "pairs": args.pairs,
                           "seed": args.seed, "verdict": "inconclusive"}))
        return INCONCLUSIVE
    _emit(args, dumps(envelope("CMWitness", w.to_json(), args.seed)))
    return REFUTED


def cmd_certify_norm(args):
    from .certify import Budget, certify_intermediate
    X = _norm(args.norm)
    couple = _couple(args, args.n)
    budget = Budget(pairs=args.pairs, seed=args.seed)
    rep = certify_intermediate(X, couple, args.mode, budget, args.constant)
    payload = {**rep.to_json(), "norm": X.to_json(), "couple": couple.to_json(),
               "budget": budget.to_json()}
    _emit(args, dumps(envelope("MonotonicityReport", payload, args.seed)))
    return {"passed": OK, "refuted": REFUTED}.get(rep.verdict, INCONCLUSIVE)


def cmd_certify_operator(args):
    from .operators import OperatorSpec, builtin_operator, certify_gp
    from .sampling import sample_vectors
    if args.matrix:
        M = np.asarray(loads(args.matrix) if not args.matrix.startswith("@")
                       else loads(open(args.matrix[1:]).read()), dtype=float)
        S = OperatorSpec.linear(M)
        n = M.shape[0]
    else:
        params = loads(args.params) if args.params else {}
        S = builtin_operator(args.operator, **params)
        n = args.n
    couple = _couple(args, n)
    samples = [v for v in sample_vectors(n, args.samples, args.seed)
               if S.is_linear or S.domain.contains(v)]
    cert = certify_gp(S, args.constant, args.cls, samples, couple, seed=args.seed)
    payload = {**cert.to_json(), "operator": S.to_json(), "couple": couple.to_json(),
               "samples": [s.tolist() for s in samples]}
    _emit(args, dumps(envelope("GPCertificate", payload, args.seed)))
    return OK if cert.certified else REFUTED


def cmd_trichotomy(args):
    from .certify import Budget, trichotomy_check
    X = _norm(args.norm)
    couple = _couple(args, args.n)
    try:
        rep = trichotomy_check(X, couple, Budget(pairs=args.pairs, seed=args.seed))
    except InconsistencyError as exc:
        sys.stderr.write(f"inconsistent: {exc}\n")
        return INCONCLUSIVE
    _emit(args, dumps({"type": "Trichotomy", "seed": args.seed, **rep.to_json()}))
    return OK if rep.verdict == "all-hold" else REFUTED


def cmd_evolve(args):
    from .evolve import GraphDirichletForm, run_and_audit
    make = GraphDirichletForm.path if args.graph == "path" else GraphDirichletForm.cycle
    form = make(args.n, args.p)
    rng = np.random.default_rng(args.seed)
    u0 = [rng.normal(size=args.n) for _ in range(args.data)]
    norms = [_norm(x) for x in args.norms.split(";") if x] if args.norms else []
    trace = run_and_audit(form, u0, args.lam, args.steps, norms=norms, strict=False)
    if args.csv:
        with open(args.csv, "w", newline="\n") as fh:
            fh.write(trace.to_csv(DIGITS))
    report = {"type": "EvolutionAudit", "seed": args.seed, "graph": form.to_json(),
              "lam": args.lam, "steps": args.steps, "norms": list(trace.norms),
              "violations": trace.violations, "passed": trace.passed,
              "finalEnergies": trace.energies[:, -1].tolist()}
    _emit(args, dumps(report))
    return OK if trace.passed else REFUTED


def unit_ball_svg(N, points=1440, size=400.0):
    """SVG polygon of ``{x in R^2 : N(x) <= 1}`` traced radially."""
    theta = np.linspace(0.0, 2 * np.pi, points, endpoint=False)
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    r = 1.0 / N.evaluate(dirs)
    xy = dirs * r[:, None]
    R = float(np.abs(xy).max()) * 1.1
    s = size / (2 * R)
    px = size / 2 + s * xy[:, 0]
    py = size / 2 - s * xy[:, 1]
    pts = " ".join(f"{fmt(a)},{fmt(b)}" for a, b in zip(px, py))
    h = fmt(size / 2)
    return (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{fmt(size)}" '
            f'height="{fmt(size)}" viewBox="0 0 {fmt(size)} {fmt(size)}">\n'
            f'  <title>unit ball of {N.label}</title>\n'
            f'  <line x1="0" y1="{h}" x2="{fmt(size)}" y2="{h}" stroke="#999"/>\n'
            f'  <line x1="{h}" y1="0" x2="{h}" y2="{fmt(size)}" stroke="#999"/>\n'
            f'  <polygon points="{pts}" fill="none" stroke="black"/>\n'
            f'</svg>\n')


def cmd_figure_unitball(args):
    _emit(args, unit_ball_svg(_norm(args.norm), args.points))
    return OK


def cmd_verify(args):
    with open(args.file) as fh:
        env = loads(fh.read())
    out = verify_envelope(env)
    sys.stdout.write(json.dumps({"ok": out.ok, "type": out.kind, "reason": out.reason},
                                sort_keys=True) + "\n")
    return OK if out.ok else REFUTED


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="kinterp", description="K-functionals, relations, "
                                "contraction synthesis and monotonicity certificates")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--seed", type=int, default=int(os.environ.get("KINTERP_SEED", 0)))
        return sp

    sp = add("rearrange", cmd_rearrange, "decreasing rearrangement and f** as CSV")
    sp.add_argument("--f", required=True)
    sp.add_argument("--weights")

    sp = add("kcurve", cmd_kcurve, "exact K-curve as CSV (or --json envelope)")
    sp.add_argument("--f", required=True)
    sp.add_argument("--json", action="store_true")
    _add_couple(sp)

    sp = add("relate", cmd_relate, "decide a relation between g and f")
    sp.add_argument("--kind", required=True,
                    choices=["preceq_K", "ll_K", "preceq_HLP", "ll_BC"])
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--constant", type=float, default=1.0)
    _add_couple(sp)

    sp = add("decompose", cmd_decompose, "optimal, refined or lifted splittings")
    sp.add_argument("--f", required=True)
    sp.add_argument("--t", type=float)
    for k in ("f0", "f1", "g0", "g1"):
        sp.add_argument(f"--{k}")
    _add_couple(sp)

    sp = add("synthesize", cmd_synthesize, "contraction T with Tf = g or Farkas certificate")
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--signed", action="store_true", help="drop the positivity constraint")
    sp.add_argument("--ll", action="store_true", help="part-wise diagonal assembly")
    _add_couple(sp)

    sp = add("cm-search", cmd_cm_search, "search for a failure of the Calderon-Mityagin property")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--pairs", type=int, default=2000)
    sp.add_argument("--grid", type=int, default=3)
    _add_couple(sp)

    sp = add("certify-norm", cmd_certify_norm, "monotonicity certification of a norm")
    sp.add_argument("--norm", required=True)
    sp.add_argument("--mode", default="partially_K_monotone",
                    choices=["K_monotone", "partially_K_monotone", "HLP_monotone",
                             "BC_partially_monotone"])
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--pairs", type=int, default=300)
    sp.add_argument("--constant", type=float, default=1.0)
    _add_couple(sp)

    sp = add("certify-operator", cmd_certify_operator, "GP / GP+ certification of an operator")
    sp.add_argument("--operator", default="clamp")
    sp.add_argument("--params", help="JSON object of built-in parameters")
    sp.add_argument("--matrix", help="JSON matrix or @file")
    sp.add_argument("--class", dest="cls", default="GPplus", choices=["GP", "GPplus"])
    sp.add_argument("--constant", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--samples", type=int, default=100)
    _add_couple(sp)

    sp = add("trichotomy", cmd_trichotomy, "lattice trichotomy for a norm")
    sp.add_argument("--norm", required=True)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--pairs", type=int, default=300)
    _add_couple(sp)

    sp = add("evolve", cmd_evolve, "graph p-Laplace flow with contraction audits")
    sp.add_argument("--graph", choices=["path", "cycle"], default="path")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--lam", type=float, default=0.1)
    sp.add_argument("--steps", type=int, default=20)
    sp.add_argument("--data", type=int, default=4)
    sp.add_argument("--norms", default="l2;n1;n2", help="semicolon separated norm names")
    sp.add_argument("--csv", help="write the trace as CSV here")

    sp = add("figure-unitball", cmd_figure_unitball, "SVG of a planar unit ball")
    sp.add_argument("norm")
    sp.add_argument("--points", type=int, default=1440)

    sp = add("verify", cmd_verify, "re-verify a serialized certificate")
    sp.add_argument("file")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    try:
        return args.func(args)
    except PrecisionError as exc:
        sys.stderr.write(f"kinterp: {exc}\n")
        return INCONCLUSIVE
    except (CLIInputError, KInterpError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"kinterp: {type(exc).__name__}: {exc}\n")
        return INPUT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
