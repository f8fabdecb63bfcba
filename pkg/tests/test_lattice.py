import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinterp import (DimensionError, DomainError, LatticeVector, MeasureSpace, NormSpec,
                     SpecError, double_star, lattice_eval, rearrange)
from kinterp.lattice import check_lattice_norm, dual_functionals, unit_ball_vertices

U2, U3 = MeasureSpace.uniform(2), MeasureSpace.uniform(3)


def vec(space, *v):
    return LatticeVector(space, np.array(v, dtype=float))


def test_parts_meet_abs():
    f = vec(U2, 1, -2)
    assert f.pos.values.tolist() == [1, 0]
    assert f.neg.values.tolist() == [0, 2]
    assert (vec(U3, 2, 0, 3) & vec(U3, 1, 5, 0)).values.tolist() == [1, 0, 0]
    assert abs(vec(U3, 3, -1, 2)).values.tolist() == [3, 1, 2]
    assert lattice_eval(vec(U3, 2, 0, 3), vec(U3, 1, 5, 0), "meet").values.tolist() == [1, 0, 0]


def test_mismatched_spaces():
    with pytest.raises(DimensionError):
        vec(U2, 1, 2) + vec(U3, 1, 2, 3)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=6))
def test_riesz_identities(v):
    f = LatticeVector(MeasureSpace.uniform(len(v)), np.array(v))
    assert np.allclose(f.pos.values - f.neg.values, f.values)
    assert np.allclose(abs(f).values, f.pos.values + f.neg.values)
    assert np.all(np.minimum(f.pos.values, f.neg.values) == 0)


def test_rearrange_examples():
    r = rearrange(vec(U3, 3, -1, 2))
    assert r.levels.tolist() == [3, 2, 1]
    assert r.edges.tolist() == [0, 1, 2, 3]
    r = rearrange(vec(MeasureSpace((2.0, 1.0)), 1, 5))
    assert r.levels.tolist() == [5, 1] and r.edges.tolist() == [0, 1, 3]
    assert r(0.5) == 5 and r(1.0) == 1 and r(3.5) == 0
    assert rearrange(vec(U3, 0, 0, 0)).levels.size == 0


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=7),
       st.lists(st.floats(0.1, 5), min_size=7, max_size=7))
def test_rearrangement_is_equimeasurable(v, w):
    sp = MeasureSpace(tuple(w[:len(v)]))
    f = LatticeVector(sp, np.array(v))
    r = rearrange(f)
    assert r.integral(sp.total + 1) == pytest.approx(float(sp.w @ np.abs(f.values)),
                                                     rel=1e-12, abs=1e-12)


def test_double_star_examples():
    f = vec(U3, 3, -1, 2)
    assert double_star(f, 2) == 2.5
    assert double_star(f, 3) == 2.0
    c = vec(U3, 4, 4, 4)
    assert all(double_star(c, t) == 4 for t in (0.3, 1, 2.9, 3))
    with pytest.raises(DomainError):
        double_star(f, 0)


def test_norm_examples():
    n1, n2 = NormSpec.n1(), NormSpec.n2()
    assert (n1([1, -1]), n1([1, 1]), n2([1, -1]), n2([1, 1])) == (1, 2, 2, 1)
    assert NormSpec.lorentz((1, 1, 0))([3, -1, 2]) == 5
    with pytest.raises(SpecError):
        NormSpec.lorentz((1, 2, 0))


def test_dual_functionals_linf_and_weighted_l1():
    D = dual_functionals(NormSpec.linf(), U2)
    assert {tuple(r) for r in D} == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    sp = MeasureSpace((2.0, 1.0))
    D = dual_functionals(NormSpec.l1(), sp)
    assert {tuple(r) for r in D} == {(a, b) for a in (2, -2) for b in (1, -1)}


def test_lorentz_functionals_and_vertices(rng):
    N = NormSpec.lorentz((1, 1, 0))
    D = dual_functionals(N, U3)
    assert D.shape[0] == 12
    assert all(sorted(np.abs(r)) == [0, 1, 1] for r in D)
    for f in rng.normal(size=(50, 3)):
        assert (D @ f).max() == pytest.approx(N(f), abs=1e-12)
    V = unit_ball_vertices(N, U3)
    assert np.allclose(N.evaluate(V), 1.0)


@pytest.mark.parametrize("N", [NormSpec.l1(), NormSpec.lp(2), NormSpec.linf(),
                               NormSpec.lorentz((2, 1, 1))])
def test_lattice_norms(N):
    assert check_lattice_norm(N, U3)[0]


@pytest.mark.parametrize("N", [NormSpec.n1(), NormSpec.n2(), NormSpec.max_of_parts_l1(),
                               NormSpec.sum_of_parts_linf()])
def test_non_lattice_norms(N):
    ok, (g, f) = check_lattice_norm(N, U2)
    assert not ok
    assert np.all(np.abs(g.values) <= np.abs(f.values))
    assert N(g) > N(f) or np.array_equal(g.values, np.abs(f.values))
    assert N(g) != N(f)


def test_norm_json_roundtrip():
    for N in (NormSpec.lp(3), NormSpec.lorentz((1, 1, 0)), NormSpec.star(NormSpec.n1()),
              NormSpec.max_of_parts_l1()):
        assert NormSpec.from_json(N.to_json()) == N
