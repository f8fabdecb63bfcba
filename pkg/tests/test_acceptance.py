"""Acceptance criteria 1-10, each at its stated tolerance and time limit.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line.  Run directly with
``python3 tests/test_acceptance.py`` for just those lines.
"""
import itertools
import json
import struct
import time

import numpy as np
import pytest

from kinterp import (Budget, Couple, LatticeVector, MeasureSpace, NormSpec, OperatorSpec,
                     builtin_operator, certify_gp, certify_intermediate, check_relation,
                     cm_witness_search, double_star, equivalence_report, k_value,
                     lift_decomposition, refine_decomposition, renormalize, run_and_audit,
                     synthesize_contraction, synthesize_ll, theorem_suite, trichotomy_check)
from kinterp.evolve import GraphDirichletForm
from kinterp.sampling import random_positive_contraction, related_pair, sample_vectors
from kinterp.serialize import dumps, envelope, loads, verify_envelope
from kinterp.synthesis import SearchBudget


@pytest.fixture
def report(capsys):
    def emit(n, ok, elapsed, limit, detail=""):
        with capsys.disabled():
            status = "PASS" if ok and elapsed < limit else "FAIL"
            print(f"\nACCEPTANCE {n} {status} ({elapsed:.2f}s < {limit:g}s) {detail}")
        assert ok, detail
        assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
    return emit


def _l1linf(n, weights=None):
    sp = MeasureSpace(tuple(weights)) if weights is not None else MeasureSpace.uniform(n)
    return Couple.l1_linf(sp)


def test_1_norm_constants(report):
    t0 = time.perf_counter()
    sp = MeasureSpace.uniform(2)
    n1, n2 = NormSpec.n1(), NormSpec.n2()
    vals = [n1(np.array([1.0, -1.0])), n1(np.array([1.0, 1.0])),
            n2(np.array([1.0, -1.0])), n2(np.array([1.0, 1.0]))]
    ok = vals == [1.0, 2.0, 2.0, 1.0]
    e1 = equivalence_report(n1, sp)
    e2 = equivalence_report(n2, sp)
    # N1 falls to half of N1(|f|) at (1,-1); N2 doubles it there
    ok &= e1.lower_ratio == 2.0 and e1.lower_vector == [1.0, -1.0] and e1.upper_ratio == 1.0
    ok &= e2.upper_ratio == 2.0 and e2.upper_vector == [1.0, -1.0] and e2.lower_ratio == 1.0
    rng = np.random.default_rng(1)
    for v in sample_vectors(2, 400, rng):
        for N in (n1, n2):
            a, b = N(v), N(np.abs(v))
            ok &= 0.5 * b <= a + 1e-12 and a <= 2 * b + 1e-12
    report(1, ok, time.perf_counter() - t0, 1.0, f"values={vals}")


def test_2_rearrangement_identity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for k in range(1000):
        n = int(rng.integers(1, 9))
        w = rng.choice([0.5, 1.0, 2.0, 3.0], size=n) * rng.uniform(0.5, 1.5, size=n)
        C = _l1linf(n, w)
        f = rng.normal(size=n) * rng.choice([0.1, 1.0, 10.0])
        t = float(rng.uniform(0.01, 1.3 * w.sum()))
        lhs = k_value(C, f, t)
        rhs = t * double_star(LatticeVector(C.space, f), t)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
        if k % 5 == 0:
            lp = k_value(C, f, t, method="lp")
            worst = max(worst, abs(lp - rhs) / max(1.0, abs(rhs)))
    report(2, worst <= 1e-9, time.perf_counter() - t0, 10.0, f"max rel err {worst:.2e}")


def test_3_splitting_identities(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    tol, worst = 1e-10, 0.0
    for _ in range(10_000):
        n = int(rng.integers(1, 7))
        sp = MeasureSpace.uniform(n)
        f0 = LatticeVector(sp, rng.normal(size=n))
        f1 = LatticeVector(sp, rng.normal(size=n))
        f = f0 + f1
        g0, g1 = refine_decomposition(f, f0, f1, tol=tol)
        worst = max(worst,
                    np.abs(f.pos.values - g0.pos.values - g1.pos.values).max(),
                    np.abs(f.neg.values - g0.neg.values - g1.neg.values).max(),
                    np.abs(np.abs(f.values) - np.abs(g0.values) - np.abs(g1.values)).max())
        theta = rng.uniform(size=n)
        a = np.abs(f.values)
        h0, h1 = LatticeVector(sp, theta * a), LatticeVector(sp, a - theta * a)
        d = lift_decomposition(f, h0, h1, tol=tol)
        worst = max(worst,
                    np.abs(d.f0.values + d.f1.values - f.values).max(),
                    np.abs(np.abs(d.f0.values) - h0.values).max(),
                    np.abs(np.abs(d.f1.values) - h1.values).max())
    report(3, worst <= tol, time.perf_counter() - t0, 10.0, f"max residual {worst:.2e}")


def test_4_relation_structure(report):
    t0 = time.perf_counter()
    ok, strict_pairs, detail = True, 0, ""
    for n in (2, 3):
        C = _l1linf(n)
        grid = [np.array(c, float) for c in itertools.product(range(-2, 3), repeat=n)]
        for f in grid:
            for g in grid:
                pk = check_relation("preceq_K", g, f, C).holds
                lk = check_relation("ll_K", g, f, C).holds
                if np.all(f >= 0) and np.all(g >= 0) and pk != lk:
                    ok, detail = False, f"cone mismatch f={f} g={g}"
                if lk and not check_relation("preceq_K", g, f, C, constant=2.0).holds:
                    ok, detail = False, f"factor-2 bound fails f={f} g={g}"
                strict_pairs += pk and not lk
    C = _l1linf(2)
    fam = (check_relation("preceq_K", [1, -1], [2, 0], C).holds
           and not check_relation("ll_K", [1, -1], [2, 0], C).holds)
    ok &= fam and strict_pairs > 0
    report(4, ok, time.perf_counter() - t0, 30.0,
           detail or f"{strict_pairs} pairs related by preceq_K but not ll_K")


def test_5_synthesis(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    bad, worst = [], 0.0
    for _ in range(500):
        n = int(rng.integers(1, 7))
        C = _l1linf(n)
        f, g = related_pair(C, "preceq_K", rng, nonneg=True, tight=rng.uniform() < 0.5)
        assert check_relation("preceq_K", g, f, C).holds
        r = synthesize_contraction(C, f, g, positive=True)
        if not r.feasible:
            bad.append(("cm", f.tolist(), g.tolist()))
            continue
        worst = max(worst, r.residual)
    for _ in range(500):
        n = int(rng.integers(1, 7))
        C = _l1linf(n)
        f, g = related_pair(C, "ll_K", rng, tight=rng.uniform() < 0.5)
        assert check_relation("ll_K", g, f, C).holds
        r = synthesize_ll(C, f, g)
        if not r.feasible or np.any(r.matrix < 0):
            bad.append(("ll", f.tolist(), g.tolist()))
            continue
        worst = max(worst, float(np.abs(r.matrix @ f - g).max()))
    report(5, not bad and worst < 1e-8, time.perf_counter() - t0, 120.0,
           f"failures={len(bad)} max residual {worst:.2e}")


def test_6_non_cm_witness(report):
    t0 = time.perf_counter()
    sp = MeasureSpace.uniform(3)
    budget = SearchBudget()
    lor = Couple(sp, NormSpec.lorentz((1, 1, 0)), NormSpec.linf())
    w = cm_witness_search(lor, budget)
    ok = w is not None
    if ok:
        w.verify()
        ok = check_relation("preceq_K", w.g, w.f, lor).holds and not w.certificate.feasible
    none_l1 = all(cm_witness_search(_l1linf(n), budget) is None for n in (2, 3, 4))
    detail = f"lorentz witness f={w.f.tolist()} g={w.g.tolist()}" if w else "no witness"
    report(6, ok and none_l1, time.perf_counter() - t0, 300.0,
           f"{detail}; l1/linf witness-free={none_l1}")


def _operator_family(C, rng):
    n = C.n
    ops = []
    while len(ops) < 200:
        f, g = related_pair(C, "preceq_K", rng, nonneg=True)
        r = synthesize_contraction(C, f, g, positive=True)
        ops.append(("positive", OperatorSpec.linear(r.matrix), 1.0))
    for _ in range(100):
        ops.append(("positive", OperatorSpec.linear(random_positive_contraction(C, rng)), 1.0))
    for k in range(150):
        kind = k % 3
        if kind == 0:
            S = builtin_operator("clamp", c=float(rng.uniform(0.2, 3.0)))
        elif kind == 1:
            c = rng.normal(size=n)
            S = renormalize(builtin_operator("shift", c=c), rng.normal(size=n))
        else:
            S = builtin_operator("componentwise-phi",
                                 kind=["tanh", "arctan", "shrink", "clip"][k % 4],
                                 a=float(rng.uniform(0.1, 2.0)))
        ops.append(("Lipschitz", S, 1.0))
    for k in range(50):
        a = float(rng.uniform(0, 1))
        S, c = [(builtin_operator("positive-part"), 1.0),
                (builtin_operator("scale", a=a), a),
                (builtin_operator("clamp", c=1 + a), 1.0)][k % 3]
        ops.append(("GPplus", S, c))
    return ops


def test_7_chain_audit(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    C = _l1linf(3)
    norms = [NormSpec.l1(), NormSpec.lp(2), NormSpec.linf(), NormSpec.n1(), NormSpec.n2(),
             NormSpec.max_of_parts_l1()]
    vectors = sample_vectors(3, 100, rng)
    ops = _operator_family(C, rng)
    assert len(ops) == 500
    gp_refused = certify_gp(builtin_operator("negate"), 1.0, "GPplus", vectors, C)
    violations, checks, certified = 0, 0, []
    for X in norms:
        cert = certify_intermediate(X, C, "partially_K_monotone", Budget(pairs=200))
        if not cert.passed:
            continue
        certified.append(X.label)
        rep = theorem_suite(C, X, ops, vectors, tol=1e-8)
        violations += len(rep.violations)
        checks += rep.checks
    ok = violations == 0 and len(certified) == len(norms) and not gp_refused.certified
    report(7, ok, time.perf_counter() - t0, 300.0,
           f"norms={certified} checks={checks} violations={violations}")


def test_8_trichotomy(report):
    t0 = time.perf_counter()
    C = _l1linf(2)
    ok, lines = True, []
    budget = Budget(pairs=150)
    for X in (NormSpec.l1(), NormSpec.lp(2), NormSpec.lp(3), NormSpec.linf()):
        r = trichotomy_check(X, C, budget)
        ok &= r.consistent and all(r.conditions.values())
        lines.append(f"{r.norm}:{r.verdict}")
    for X in (NormSpec.n1(), NormSpec.n2(), NormSpec.max_of_parts_l1(),
              NormSpec.sum_of_parts_linf()):
        r = trichotomy_check(X, C, budget)
        ok &= r.consistent and not any(r.conditions.values())
        ok &= all(r.witnesses[k] is not None for k in r.conditions)
        lines.append(f"{r.norm}:{r.verdict}")
    report(8, ok, time.perf_counter() - t0, 30.0, " ".join(lines))


def test_9_semigroup_audit(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    norms = (NormSpec.lp(2), NormSpec.n1(), NormSpec.n2(), NormSpec.max_of_parts_l1(),
             NormSpec.sum_of_parts_linf())
    C = _l1linf(6)
    for X in norms:
        assert certify_intermediate(X, C, "partially_K_monotone", Budget(pairs=60)).passed
    runs, fails = 0, []
    for p in (1.5, 2.0, 3.0):
        for graph in ("path", "cycle"):
            n = 6 if graph == "path" else 5
            form = getattr(GraphDirichletForm, graph)(n, p)
            base = [rng.normal(size=n) for _ in range(6)]
            data = base + [b + np.abs(rng.normal(size=n)) for b in base[:5]]
            pairs = [(a, b) for a in range(11) for b in range(a + 1, 11)][:50]
            tr = run_and_audit(form, data, 0.1, 20, norms=norms, pairs=pairs, strict=False)
            runs += 1
            if not tr.passed:
                fails.append((p, graph, tr.violations[:1]))
    report(9, not fails, time.perf_counter() - t0, 120.0, f"runs={runs} failures={fails}")


def _flip_bit(x, bit):
    (i,) = struct.unpack("<Q", struct.pack("<d", x))
    return struct.unpack("<d", struct.pack("<Q", i ^ (1 << bit)))[0]


def test_10_certificate_integrity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    C = _l1linf(3)
    envs = []
    for _ in range(10):
        f, g = related_pair(C, "preceq_K", rng, nonneg=True)
        envs.append(envelope("SynthesisResult", synthesize_contraction(C, f, g).to_json(), 10))
        f, g = related_pair(C, "ll_K", rng)
        envs.append(envelope("SynthesisResult", synthesize_ll(C, f, g).to_json(), 10))
    lor = Couple(MeasureSpace.uniform(3), NormSpec.lorentz((1, 1, 0)), NormSpec.linf())
    w = cm_witness_search(lor)
    envs.append(envelope("CMWitness", w.to_json()))
    envs.append(envelope("InfeasibilityCertificate", w.certificate.to_json()))
    S = builtin_operator("clamp", c=1.0)
    samples = sample_vectors(3, 20, rng)
    gp = certify_gp(S, 1.0, "GPplus", samples, C)
    envs.append(envelope("GPCertificate", {**gp.to_json(), "couple": C.to_json(),
                                           "operator": S.to_json(),
                                           "samples": [v.tolist() for v in samples]}))
    accepted = sum(verify_envelope(loads(dumps(e))).ok for e in envs)
    tampers = missed = 0
    for e in envs:
        if e["type"] != "SynthesisResult":
            continue
        M = e["payload"]["matrix"]
        for i, j in itertools.product(range(len(M)), repeat=2):
            if abs(M[i][j]) < 1e-6:
                continue
            for bit in (0, 17, 40, 51, 52, 60, 63):
                bad = json.loads(json.dumps(e))
                bad["payload"]["matrix"][i][j] = _flip_bit(M[i][j], bit)
                tampers += 1
                missed += verify_envelope(loads(dumps(bad))).ok
    ok = accepted == len(envs) and tampers > 0 and missed == 0
    report(10, ok, time.perf_counter() - t0, 30.0,
           f"verified {accepted}/{len(envs)}; tampers detected {tampers - missed}/{tampers}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
