import csv

import numpy as np
import pytest

from octobundle import octonion as oc
from octobundle.connection import full_torsion, reference_torsion, torsion_of_gauge, zero_torsion
from octobundle.flow import (
    TRACE_COLUMNS,
    StiffFlow,
    energy,
    energy_from_gauge_torsion,
    energy_from_torsion,
    euler_gradient,
    evaluate,
    flow_step,
    gauge_divergence,
    run_flow,
    write_trace,
)
from octobundle.lattice import Grid, make_unit_field

D1 = np.ones(7) / np.sqrt(7)
D2 = np.arange(1, 8) / np.linalg.norm(np.arange(1, 8))
E = np.eye(7)


def ones(g):
    out = np.zeros(g.shape + (8,))
    out[..., 0] = 1
    return out


def ref(n, axes, profile):
    g = Grid(n, axes)
    return g, reference_torsion(g, make_unit_field(g, profile))


def test_energy_of_one_is_half_torsion_norm():
    g, tf = ref(16, (0, 1), [(0, 1, 0.3, D1), (1, 1, 0.3, D2)])
    V = ones(g)
    expected = 0.5 * g.integrate(np.sum(tf.T**2, axis=(-2, -1)))
    assert energy(V, tf) == pytest.approx(expected, rel=1e-13)
    assert energy_from_torsion(V, tf) == pytest.approx(expected, rel=1e-13)
    assert energy(V, zero_torsion(g)) == 0


def test_energy_forms_agree():
    g, tf = ref(16, (0, 1), [(0, 1, 0.3, D1), (1, 1, 0.3, D2)])
    V = make_unit_field(g, [(0, 1, 0.4, E[3]), (1, 2, 0.2, D2)])
    e = energy(V, tf)
    assert energy_from_gauge_torsion(V, tf) == pytest.approx(e, rel=1e-12)
    # only the imaginary part is torsion; the real part is a lattice artifact
    assert energy_from_torsion(V, tf) == pytest.approx(e, rel=1e-2)


def test_gradient_vanishes_trivially(rng):
    g = Grid(8, (0, 1))
    tf = zero_torsion(g)
    W = oc.exp_im(rng.normal(size=7))
    V = np.broadcast_to(W, g.shape + (8,)).copy()
    assert np.max(np.abs(euler_gradient(V, tf))) < 1e-15
    assert np.max(np.abs(gauge_divergence(V, tf))) < 1e-15


def test_gradient_nearly_tangent():
    g, tf = ref(16, (0, 1), [(0, 1, 0.3, D1), (1, 1, 0.3, D2)])
    V = make_unit_field(g, [(0, 1, 0.4, E[3])])
    G = euler_gradient(V, tf)
    normal = oc.inner(G, V)
    assert np.max(np.abs(normal)) < 0.05 * np.max(oc.norm(G))


def test_gauge_field_is_a_critical_point():
    # V = W^-1 undoes the reference gauge, so its torsion is O(h^2)
    g = Grid(16, (0, 1))
    W = make_unit_field(g, [(0, 1, 0.3, D1), (1, 1, 0.3, D2)])
    tf = reference_torsion(g, W)
    V = oc.inverse(W)
    st = evaluate(V, tf)
    assert st.energy < 1e-3 * energy(ones(g), tf)


def test_flow_step_monotone_and_unit():
    g, tf = ref(16, (0,), [(0, 1, 0.3, D1)])
    st = evaluate(ones(g), tf)
    new, dt = flow_step(st, tf, 0.05, 1e-14)
    assert new.energy <= st.energy
    assert 0 < dt <= 0.05
    assert np.max(np.abs(oc.norm(new.V) - 1)) < 1e-14
    with pytest.raises(ValueError):
        flow_step(st, tf, 0.0, 1e-14)


def test_flow_step_stiff():
    g, tf = ref(16, (0,), [(0, 1, 0.3, D1)])
    st = evaluate(ones(g), tf)
    with pytest.raises(StiffFlow):
        flow_step(st, tf, 1e3, 1e3)


def test_flow_at_zero_torsion_converges_immediately():
    g = Grid(8, (0, 1))
    res = run_flow(ones(g), zero_torsion(g))
    assert res.status == "converged"
    assert len(res.trace) == 1


def test_flow_tol_zero_hits_max_steps():
    g, tf = ref(8, (0,), [(0, 1, 0.1, D1)])
    res = run_flow(ones(g), tf, tol=0.0, max_steps=5)
    assert res.status == "max_steps"
    assert len(res.trace) == 6
    assert [r["step"] for r in res.trace] == list(range(6))


@pytest.mark.parametrize("axes,profile", [((0,), [(0, 1, 1e-5, D1)]), ((0, 1), [(0, 1, 1e-5, D1), (1, 1, 1e-5, D2)])])
def test_flow_converges_to_divergence_free_gauge(axes, profile):
    g, tf = ref(16, axes, profile)
    res = run_flow(ones(g), tf, dt0=0.05, tol=1e-6, max_steps=1000)
    assert res.status == "converged"
    en = [r["energy"] for r in res.trace]
    assert all(b <= a for a, b in zip(en, en[1:]))
    V = res.state.V
    G = np.sqrt(oc.norm2(euler_gradient(V, tf)))
    div = gauge_divergence(V, tf)
    dn = np.sqrt(np.sum(div * div, axis=-1))
    assert dn.max() < 1e-6
    assert np.max(np.abs(G - dn)) < 1e-10


def test_gauge_consistency_along_flow():
    g, tf = ref(16, (0,), [(0, 1, 0.3, D1)])
    res = run_flow(ones(g), tf, max_steps=3, tol=0.0)
    tv, gap = torsion_of_gauge(res.state.V, tf, return_both=True)
    direct = full_torsion(g, tv.phi)
    assert gap < 1e-2
    assert np.max(np.abs(tv.T - direct.T)) < 1e-2


def test_write_trace(tmp_path):
    g, tf = ref(8, (0,), [(0, 1, 0.1, D1)])
    res = run_flow(ones(g), tf, tol=0.0, max_steps=3)
    p = tmp_path / "trace.csv"
    write_trace(p, res.trace)
    rows = list(csv.DictReader(p.open()))
    assert tuple(rows[0].keys()) == TRACE_COLUMNS
    assert len(rows) == 4
    assert float(rows[-1]["energy"]) == res.trace[-1]["energy"]
