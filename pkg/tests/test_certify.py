import numpy as np
import pytest

from kinterp import (Budget, InconsistencyError, NormSpec, SpecError, certify_intermediate,
                     equivalence_report, theorem_suite, trichotomy_check, builtin_operator,
                     OperatorSpec)
from kinterp.certify import related_pairs
from kinterp.relations import check_relation
from kinterp import LatticeVector

SMALL = Budget(pairs=80)


def test_l2_passes(l1linf):
    r = certify_intermediate(NormSpec.lp(2), l1linf(2), "partially_K_monotone", SMALL)
    assert r.passed and r.pairs_checked > 100 and r.best_constant <= 1 + 1e-9


def test_n1_refuted_for_k_monotone(l1linf):
    r = certify_intermediate(NormSpec.n1(), l1linf(2), "K_monotone", SMALL)
    assert r.verdict == "refuted"
    assert r.witness["f"] == [1.0, -1.0] and r.witness["g"] == [1.0, 1.0]
    assert (r.witness["normG"], r.witness["normF"]) == (2.0, 1.0)


@pytest.mark.parametrize("N", [NormSpec.n1(), NormSpec.n2()])
def test_parts_norms_pass_partial(l1linf, N):
    assert certify_intermediate(N, l1linf(2), "partially_K_monotone", SMALL).passed
    assert certify_intermediate(N, l1linf(3), "partially_K_monotone", SMALL).passed


def test_refutation_is_checkable(l1linf):
    C = l1linf(2)
    r = certify_intermediate(NormSpec.n2(), C, "K_monotone", SMALL)
    g = LatticeVector(C.space, r.witness["g"])
    f = LatticeVector(C.space, r.witness["f"])
    assert check_relation("preceq_K", g, f, C).holds
    assert NormSpec.n2()(g) > NormSpec.n2()(f)


def test_pairs_are_related(l1linf):
    C = l1linf(3)
    for f, g, _ in related_pairs(C, "partially_K_monotone", Budget(pairs=20, max_grid_n=0)):
        assert check_relation("ll_K", g, f, C).holds


def test_unknown_mode(l1linf):
    with pytest.raises(SpecError):
        certify_intermediate(NormSpec.l1(), l1linf(2), "weird")


def test_equivalence_and_star(l1linf):
    C = l1linf(2)
    e = equivalence_report(NormSpec.max_of_parts_l1(), C.space, couple=C, budget=SMALL)
    assert e.lower_ratio == 2.0 and e.lower_vector == [1.0, -1.0]
    assert e.star_report.passed
    e = equivalence_report(NormSpec.sum_of_parts_linf(), C.space)
    assert e.upper_ratio == 2.0


def test_trichotomy(l1linf):
    C = l1linf(2)
    assert trichotomy_check(NormSpec.l1(), C, SMALL).verdict == "all-hold"
    r = trichotomy_check(NormSpec.n1(), C, SMALL)
    assert r.verdict == "all-refuted" and r.consistent
    assert r.witnesses["absolute"]["f"] == [1.0, -1.0]
    assert trichotomy_check(NormSpec.max_of_parts_l1(), C, SMALL).verdict == "all-refuted"


def test_mixed_trichotomy_raises(l1linf):
    # a lattice norm that is not K-monotone: weighted l1 with unequal weights
    C = l1linf(2)
    N = NormSpec.l1(weights=(1.0, 3.0))
    with pytest.raises(InconsistencyError):
        trichotomy_check(N, C, SMALL)
    assert not trichotomy_check(N, C, SMALL, strict=False).consistent


def test_suite_identity_equality(l1linf, rng):
    C = l1linf(3)
    vecs = list(rng.normal(size=(20, 3)))
    ops = [("positive", OperatorSpec.linear(np.eye(3)), 1.0),
           ("Lipschitz", builtin_operator("identity"), 1.0),
           ("GPplus", builtin_operator("clamp", c=1.0), 1.0)]
    for N in (NormSpec.lp(2), NormSpec.n1()):
        rep = theorem_suite(C, N, ops, vecs)
        assert rep.passed and rep.by_class["positive"] == 20


def test_suite_catches_non_contraction(l1linf, rng):
    C = l1linf(2)
    ops = [("positive", OperatorSpec.linear(2 * np.eye(2)), 1.0)]
    rep = theorem_suite(C, NormSpec.l1(), ops, list(rng.normal(size=(5, 2))),
                        relation_bridge=False)
    assert not rep.passed
