"""Smoke tests for the python module: each core operation exercised once."""

import math
import os
from pathlib import Path

import pytest

import supergeo as sg

MODELS = Path(os.environ.get("SUPERGEO_MODELS", Path(__file__).resolve().parents[2] / "models"))

L = 4


def scalar(v):
    return sg.GrassmannNumber.scalar(L, v)


def gen(k):
    return sg.GrassmannNumber.generator(L, k)


def test_grassmann_arithmetic():
    t1, t2 = gen(1), gen(2)
    assert t2 * t1 == -(t1 * t2)
    assert (t1 * t1).is_zero()

    a = scalar(1) + t1 * t2
    assert (a * a.inverse() - scalar(1)).norm_max() <= 1e-14
    assert a.body() == 1.0
    assert a.parity() == sg.Parity.EVEN

    text = repr(scalar(0.1) - 2.0 * t1)
    assert sg.GrassmannNumber.parse(text, L) == scalar(0.1) - 2.0 * t1


def test_expressions():
    cs = sg.CoordinateSystem(["x1"], ["xi1", "xi2"])
    e = sg.parse_expr("x1*x1 + xi1*xi2", cs)
    p = sg.SuperPoint(cs, [scalar(2), gen(1), gen(2)], L)
    value = sg.evaluate(e, p)
    assert value.coefficient(0) == 4.0
    assert value.coefficient(0b11) == 1.0

    de = e.diff(cs, "x1")
    assert sg.evaluate(de, p).body() == 4.0

    d_odd = sg.parse_expr("xi1*xi2", cs).diff(cs, "xi2")
    assert sg.evaluate(d_odd, p) == -gen(1)

    with pytest.raises(ValueError):
        sg.parse_expr("sin(xi1)", cs)


def test_model_geodesic_endpoint():
    model = sg.load_model(str(MODELS / "log1d.model"))
    gl = model.settings.generators
    field = sg.GeodesicField(model.connection())
    x = sg.SuperPoint(model.coords, [sg.GrassmannNumber.zero(gl)], gl)
    traj = field.integrate(x, [1.0], t_end=1.0, step=1e-3)
    end = field.point_of_state(traj.states[-1])
    assert abs(end[0].body() - math.log(2.0)) <= 1e-8


def test_levi_civita_classical_entries():
    model = sg.load_model(str(MODELS / "surface.model"))
    gl = model.settings.generators
    gamma = model.connection()
    p = sg.SuperPoint(model.coords, [scalar2(gl, 2.0), scalar2(gl, 0.0)], gl)
    assert abs(sg.evaluate(gamma.entry(1, 0, 1), p).body() - 0.5) <= 1e-12
    assert abs(sg.evaluate(gamma.entry(0, 1, 1), p).body() + 2.0) <= 1e-12


def scalar2(gl, v):
    return sg.GrassmannNumber.scalar(gl, v)


def test_torsion_check():
    good = sg.load_model(str(MODELS / "super22.model"))
    pts = sg.sample_points(good, 10, 1)
    ok, residual = sg.torsion_residual(good.connection(), pts)
    assert ok and residual <= 1e-10

    bad = sg.load_model(str(MODELS / "nontf22.model"))
    pts = sg.sample_points(bad, 10, 1)
    ok, residual = sg.torsion_residual(bad.connection(), pts)
    assert not ok and residual > 0.5


def test_metric_operations():
    model = sg.load_model(str(MODELS / "super22.model"))
    gl = model.settings.generators
    g = model.metric()
    pts = sg.sample_points(model, 5, 3)
    assert g.inverse_residual(pts) <= 1e-10

    cot = sg.sample_cotangent_points(model, 10, 3)
    assert sg.intertwine_check(g, cot) <= 1e-10


def test_projective_pipeline():
    cs = sg.CoordinateSystem(["x1"], [])
    flat = sg.ChristoffelField(cs)
    alpha = sg.OneForm(cs, [sg.SuperExpr(0.5)])
    shifted = sg.shift_connection(flat, alpha)

    x0 = sg.SuperPoint(cs, [0.0], L)
    samples = [sg.SuperPoint(cs, [v], L) for v in (0.0, 0.25, 0.5)]
    report = sg.same_geodesics_check(flat, shifted, [(x0, [1.0])], t_end=1.0, step=1e-3,
                                     tol=1e-6, samples=samples)
    assert report.equivalent
    assert "EQUIVALENT" in report.render()

    s = sg.difference_tensor(flat, shifted)
    projective, recovered, residual = sg.recover_oneform(s, samples)
    assert projective and residual <= 1e-12
    assert sg.evaluate(recovered.component(0), x0).body() == 0.5


def test_reparametrization_closed_form():
    cs = sg.CoordinateSystem(["x1"], [])
    flat = sg.ChristoffelField(cs)
    alpha = sg.OneForm(cs, [sg.SuperExpr(0.5)])
    x0 = sg.SuperPoint(cs, [0.0], L)
    rep = sg.solve_reparametrization(flat, alpha, x0, [1.0], t_end=1.0, step=1e-3)
    assert abs(rep.r[-1].body() - math.log(2.0)) <= 1e-6
