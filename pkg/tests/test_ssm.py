from dataclasses import replace

import numpy as np
import pytest

from ssmred import workflows as wf
from ssmred.plants import SdofPlant, steady_state
from ssmred.reduction import (
    Embedding,
    SsmFitError,
    build_assm,
    fit_local_ssm,
    predict_assm,
    principal_angle,
)
from ssmred.signals import TimeSeries


def exp_decay(lams, amps, dt=0.01, t_end=6.0):
    t = np.arange(0.0, t_end, dt)
    return TimeSeries(0.0, dt, sum(a * np.exp(l * t) for l, a in zip(lams, amps)))


@pytest.fixture(scope="module")
def sdof_family():
    setup = wf.AssmSetup(u_range=(0.0, 3.0), grid_size=7, jump_duration=4.0, transient=0.3)
    return wf.identify_assm(SdofPlant(), setup, 0.005)


# ---------------------------------------------------------------- local fits


def test_linear_decay_oracle():
    lam = -2.0
    m = fit_local_ssm([exp_decay([lam], [1.0]), exp_decay([lam], [-0.7])], 0.0, Embedding(2, 1))
    lin = m.r.block(1)[0, 0]
    assert lin == pytest.approx(lam, rel=0.01)
    assert np.all(np.abs(m.r.coeffs[:, 1:]) < 1e-3 * abs(lam))


def test_data_on_linear_manifold_has_no_residual():
    m = fit_local_ssm([exp_decay([-2.0], [1.0])], 0.0, Embedding(4, 1))
    assert m.diagnostics["parametrization_residual"] < 1e-10


def test_tangent_spans_data_plane():
    dt = 0.01
    lams = (-1.0, -3.0)
    decays = [exp_decay(lams, (1.0, 0.5), dt, 12.0), exp_decay(lams, (-0.4, 1.0), dt, 12.0)]
    m = fit_local_ssm(decays, 0.0, Embedding(3, 1), d=2)
    plane = np.column_stack([np.exp(l * dt * np.arange(3)) for l in lams])
    q, _ = np.linalg.qr(plane)
    assert principal_angle(m.V, q) < 1e-8
    assert np.allclose(m.V.T @ m.V, np.eye(2), atol=1e-10)


def test_local_model_invariants():
    plant = SdofPlant()
    decays = [wf.forced_response(plant, wf.constant_input(0.5, 4.0, 0.005), None, steady_state(plant, u)) for u in (0.0, 1.0)]
    m = fit_local_ssm(decays, 0.5, transient=0.3)
    assert np.allclose(m.V.T @ m.V, np.eye(1), atol=1e-10)
    assert np.array_equal(m.h0.block(1), m.V)
    assert m.h0.min_order == 1 and m.r.min_order == 1
    assert m.x0[0] == pytest.approx(steady_state(plant, 0.5)[0], rel=1e-3)


def test_sdof_slow_eigenvalue_matches_quadratic_root():
    plant = SdofPlant()
    p = plant.params
    roots = np.roots([p.m, p.c_tilde, p.k])
    slow = roots[np.argmin(np.abs(roots.real))].real
    decays = [
        wf.forced_response(plant, wf.constant_input(0.0, 6.0, 0.005), None, steady_state(plant, u))
        for u in (0.5, 1.0, 1.5)
    ]
    m = fit_local_ssm(decays, 0.0, transient=1.0)
    assert m.r.block(1)[0, 0] == pytest.approx(slow, rel=0.05)


def test_unsettled_decay_is_rejected():
    t = np.arange(0, 1.0, 0.01)
    with pytest.raises(SsmFitError):
        fit_local_ssm([TimeSeries(0.0, 0.01, np.exp(-t))], 0.0)


def test_transient_cannot_eat_the_data():
    with pytest.raises(SsmFitError):
        fit_local_ssm([exp_decay([-2.0], [1.0])], 0.0, transient=5.99)


def test_reduced_dimension_bounded_by_embedding():
    with pytest.raises(ValueError):
        fit_local_ssm([exp_decay([-2.0], [1.0])], 0.0, Embedding(2, 1), d=3)


# ---------------------------------------------------------------- families


def test_constant_family_interpolates_to_same_coefficients():
    m = fit_local_ssm([exp_decay([-2.0], [1.0])], 0.0, Embedding(3, 1))
    fam = build_assm([m, replace(m, u_bar=1.0)])
    mid = fam.local_at(0.5)
    assert np.allclose(mid.h0.coeffs, m.h0.coeffs, rtol=1e-14, atol=1e-300)
    assert np.allclose(mid.r.coeffs, m.r.coeffs, rtol=1e-14, atol=1e-300)
    assert np.allclose(mid.x0, m.x0, rtol=1e-14, atol=1e-300)


def test_grid_node_returns_node_model(sdof_family):
    for node in sdof_family.locals:
        assert sdof_family.local_at(node.u_bar) is node
        assert np.allclose(sdof_family.x0(node.u_bar), node.x0, rtol=1e-14, atol=1e-14)


def test_family_is_sorted_and_complete(sdof_family):
    assert np.array_equal(sdof_family.u_grid, np.linspace(0, 3, 7))
    shuffled = build_assm(sdof_family.locals[::-1])
    assert np.array_equal(shuffled.u_grid, sdof_family.u_grid)


def test_off_grid_fixed_point_matches_steady_state(sdof_family):
    x_true = steady_state(SdofPlant(), 0.75)[0]
    assert sdof_family.x0(0.75)[0] == pytest.approx(x_true, rel=0.02)


def test_principal_angle_examples():
    e1, e2 = np.eye(3)[:, :1], np.eye(3)[:, 1:2]
    assert principal_angle(e1, e1) == 0.0
    assert principal_angle(e1, e2) == pytest.approx(np.pi / 2)
    tilt = np.array([[np.cos(1e-9)], [np.sin(1e-9)], [0.0]])
    assert principal_angle(e1, tilt) == pytest.approx(1e-9, rel=1e-6)


def test_shared_tangent_family(sdof_family):
    shared = build_assm(sdof_family.locals, shared_tangent=True)
    V = shared.locals[len(shared.locals) // 2].V
    assert all(np.array_equal(m.V, V) for m in shared.locals)


def test_shared_tangent_transversality_guard():
    m = fit_local_ssm([exp_decay([-2.0], [1.0])], 0.0, Embedding(2, 1))
    V_perp = np.array([[m.V[1, 0]], [-m.V[0, 0]]])
    other = replace(m, u_bar=1.0, V=V_perp)
    with pytest.raises(SsmFitError):
        build_assm([m, other, replace(m, u_bar=2.0)], shared_tangent=True)


def test_family_construction_errors():
    m = fit_local_ssm([exp_decay([-2.0], [1.0])], 0.0, Embedding(3, 1))
    with pytest.raises(ValueError):
        build_assm([m])
    with pytest.raises(ValueError):
        build_assm([m, replace(m)])
    other = fit_local_ssm([exp_decay([-2.0], [1.0])], 1.0, Embedding(4, 1))
    with pytest.raises(ValueError):
        build_assm([m, other])


# ---------------------------------------------------------------- prediction


def test_prediction_at_fixed_point_is_constant(sdof_family):
    node = sdof_family.locals[2]
    window = TimeSeries(0.0, node.dt, node.x0)
    u = wf.constant_input(node.u_bar, 2.0, node.dt)
    pred = predict_assm(sdof_family, u, window)
    assert np.all(pred.scalar() == node.x0[0])


def test_prediction_outside_grid_is_rejected(sdof_family):
    node = sdof_family.locals[0]
    window = TimeSeries(0.0, node.dt, node.x0)
    with pytest.raises(ValueError):
        predict_assm(sdof_family, wf.constant_input(3.5, 1.0, node.dt), window)


def test_assm_beats_sm_at_moderate_slowness(sdof_sweep):
    row = sdof_sweep["rows"][0.5]
    assert row.nmte_assm <= row.nmte_sm
