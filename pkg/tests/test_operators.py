import numpy as np
import pytest

from kinterp import (Couple, DomainDescriptor, DomainError, MeasureSpace, NormSpec,
                     OperatorSpec, SpecError, builtin_operator, certify_gp,
                     gp_constant_bridge, operator_couple_norm, renormalize, structure_checks)
from kinterp.operators import operator_endpoint_norm
from kinterp.sampling import sample_vectors


def test_norm_examples(l1linf):
    C = l1linf(2)
    assert operator_couple_norm(np.array([[0, 1], [1, 0]]), C) == 1
    T = np.array([[1.0, 1.0], [0.0, 0.0]])
    assert operator_endpoint_norm(T, NormSpec.linf(), C.space) == 2
    assert operator_endpoint_norm(T, NormSpec.l1(), C.space) == 1
    assert operator_couple_norm(T, C) == 2
    assert operator_couple_norm(np.zeros((2, 2)), C) == 0


def test_norm_lower_bound_by_sampling(rng):
    C = Couple(MeasureSpace.uniform(3), NormSpec.lorentz((1, 1, 0)), NormSpec.linf())
    T = rng.normal(size=(3, 3))
    exact = operator_endpoint_norm(T, C.x0, C.space)
    for v in rng.normal(size=(300, 3)):
        assert C.x0(T @ v) <= exact * C.x0(v) + 1e-9


def test_gp_examples(l1linf, rng):
    C = l1linf(3)
    samples = sample_vectors(3, 60, rng)
    clamp = builtin_operator("clamp", c=1.0)
    assert certify_gp(clamp, 1.0, "GPplus", samples, C).certified
    neg = certify_gp(builtin_operator("negate"), 1.0, "GPplus", [np.array([1.0, 0, 0])], C)
    assert not neg.certified and neg.witness["part"] == "-"
    zero = OperatorSpec.linear(np.zeros((3, 3)))
    for variant in ("GP", "GPplus"):
        assert certify_gp(zero, 0.0, variant, samples, C).certified
    with pytest.raises(SpecError):
        certify_gp(zero, 1.0, "GPminus", samples, C)


def test_domain_error(l1linf):
    box = DomainDescriptor.interval([0, 0], [1, 1])
    S = OperatorSpec.black_box(lambda v: v, box, name="id-on-box")
    with pytest.raises(DomainError):
        S.apply_values(np.array([2.0, 0.0]))
    with pytest.raises(DomainError):
        certify_gp(S, 1.0, "GP", [np.array([2.0, 0.0])], l1linf(2))


def test_bridge_assertions(l1linf, rng):
    C = l1linf(3)
    samples = sample_vectors(3, 30, rng)
    for S in (builtin_operator("clamp", c=0.7), builtin_operator("scale", a=0.4),
              builtin_operator("componentwise-phi", kind="tanh"),
              OperatorSpec.linear(np.abs(rng.normal(size=(3, 3))))):
        rep = gp_constant_bridge(S, samples, C)
        assert rep.consistent, rep.assertions
        assert rep.gp <= rep.gp_plus + 1e-5


def test_renormalize():
    S = builtin_operator("shift", c=[1.0, -2.0])
    R = renormalize(S, np.zeros(2))
    assert np.array_equal(R.apply_values(np.array([3.0, 4.0])), [3.0, 4.0])
    box = DomainDescriptor.interval([0, 0], [1, 1])
    B = OperatorSpec.black_box(lambda v: v, box, name="id-on-box")
    with pytest.raises(DomainError):
        renormalize(B, [5.0, 5.0])


def test_structure_negative_entry():
    T = np.eye(2)
    T[0, 1] = -0.1
    rep = structure_checks(OperatorSpec.linear(T), [])
    assert not rep.verdicts["positive"]
    assert rep.witnesses["positive"]["f"] == [0.0, 1.0]


def test_structure_phi(rng):
    S = builtin_operator("componentwise-phi", kind="arctan")
    pairs = [(a, b) for a, b in zip(rng.normal(size=(100, 3)), rng.normal(size=(100, 3)))]
    pairs += [(a, a + np.abs(rng.normal(size=3))) for a in rng.normal(size=(50, 3))]
    rep = structure_checks(S, pairs)
    assert rep.verdicts["orderPreserving"] and rep.verdicts["lipschitz"]
    assert max(rep.lipschitz.values()) <= 1.0


def test_operator_json_roundtrip():
    for S in (builtin_operator("clamp", c=2.0), OperatorSpec.linear(np.eye(2))):
        R = OperatorSpec.from_json(S.to_json())
        v = np.array([3.0, -1.0])
        assert np.array_equal(R.apply_values(v), S.apply_values(v))


def test_order_preserving_lipschitz_differences_are_ll_related(l1linf, rng):
    from kinterp import check_relation
    C = l1linf(3)
    ops = [builtin_operator("clamp", c=0.8), builtin_operator("positive-part"),
           builtin_operator("componentwise-phi", kind="shrink", a=0.3),
           renormalize(builtin_operator("floor", m=-0.5), np.zeros(3))]
    for S in ops:
        L = S.flags["lipschitzConstant"]
        for f, h in zip(rng.normal(size=(40, 3)), rng.normal(size=(40, 3))):
            d = S.apply_values(f) - S.apply_values(h)
            assert check_relation("ll_K", d, L * (f - h), C).holds
