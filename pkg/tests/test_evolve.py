import numpy as np
import pytest

from kinterp import (DomainError, GraphDirichletForm, MeasureSpace, NormSpec,
                     VerificationError, dirichlet_form_check, energy_eval, prox_step,
                     run_and_audit)


def test_energy_examples():
    assert energy_eval(GraphDirichletForm.path(2, 2.0), [1, 0]) == 0.5
    assert energy_eval(GraphDirichletForm.cycle(4, 3.0), [2, 2, 2, 2]) == 0
    assert energy_eval(GraphDirichletForm.path(2, 3.0), [1, -1]) == pytest.approx(8 / 3)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_p_laplace_is_dirichlet(p, rng):
    form = GraphDirichletForm.cycle(5, p)
    samples = [(rng.normal(size=5), rng.normal(size=5)) for _ in range(100)]
    samples.append((samples[0][0], samples[0][0]))
    assert dirichlet_form_check(form, samples).passed


def test_nonconvex_refuted(rng):
    rep = dirichlet_form_check(lambda u: -float(u @ u),
                               [(rng.normal(size=3), rng.normal(size=3)) for _ in range(20)])
    assert not rep.passed


def test_prox_examples():
    form = GraphDirichletForm.path(2, 2.0)
    assert np.allclose(prox_step(form, np.array([1.0, 0.0]), 0.5), [0.75, 0.25])
    for p in (1.5, 3.0):
        c = np.full(4, 1.7)
        assert np.allclose(prox_step(GraphDirichletForm.path(4, p), c, 0.3), c)
    with pytest.raises(DomainError):
        prox_step(form, np.array([1.0, 0.0]), 0.0)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_prox_optimality(p, rng):
    # v minimises E(v) + |v - u|^2 / (2 lam): compare against perturbations
    form = GraphDirichletForm.path(4, p)
    u, lam = rng.normal(size=4), 0.4
    v = prox_step(form, u, lam)
    obj = lambda x: form.energy(x) + float((x - u) @ (x - u)) / (2 * lam)
    for d in rng.normal(size=(50, 4)) * 1e-3:
        assert obj(v + d) >= obj(v) - 1e-12


def test_weighted_measure_prox_p2():
    sp = MeasureSpace((1.0, 2.0, 0.5))
    form = GraphDirichletForm.path(3, 2.0, space=sp)
    u = np.array([1.0, -1.0, 2.0])
    v = prox_step(form, u, 0.2)
    assert float(sp.w @ v) == pytest.approx(float(sp.w @ u))


def test_audit_path_p2_and_p3(rng):
    norms = (NormSpec.lp(2), NormSpec.n1())
    for p in (2.0, 3.0):
        form = GraphDirichletForm.path(4, p)
        base = rng.normal(size=4)
        data = [base, base + np.abs(rng.normal(size=4)), rng.normal(size=4), base]
        tr = run_and_audit(form, data, 0.1, 20, norms=norms)
        assert tr.passed
        assert np.allclose(tr.states[0], tr.states[3])
        assert np.all(np.diff(tr.energies, axis=1) <= 1e-12)
        assert tr.to_csv().startswith("datum,step,time,u0")


def test_audit_controls_are_soft(rng):
    # control norms are recorded, never counted as violations
    form = GraphDirichletForm.path(3, 2.0)
    data = [np.array([3.0, 0.0, 0.0]), np.array([0.0, 0.0, 3.0])]
    tr = run_and_audit(form, data, 0.5, 3, controls=(NormSpec.l1(weights=(1.0, 5.0, 1.0)),))
    assert tr.passed


def test_form_json_roundtrip():
    form = GraphDirichletForm.cycle(4, 1.5)
    assert GraphDirichletForm.from_json(form.to_json()) == form
