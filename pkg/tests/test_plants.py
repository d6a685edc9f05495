import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import checks
from ssmred import workflows as wf
from ssmred.plants import (
    EPS0,
    HaselPlant,
    JointParams,
    JointPlant,
    PouchParams,
    SdofParams,
    SdofPlant,
    Side,
    SimulationFault,
    hasel_rhs,
    joint_rhs,
    load_plant_params,
    make_plant,
    pouch_geometry,
    sdof_rhs,
    segment_area,
    simulate,
    steady_state,
)
from ssmred.plants.integrate import rk4_step
from ssmred.reduction import predict_sm
from ssmred.signals import TimeSeries, gen_slow_input, nmte


def bisect_cubic(k, alpha, rhs, tol=1e-15):
    """Root of k x + alpha x^3 = rhs on [0, rhs/k] by plain bisection."""
    lo, hi = 0.0, rhs / k
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if k * mid + alpha * mid**3 > rhs:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- geometry


def test_geometry_at_alpha0_is_unzipped():
    p = PouchParams()
    g = pouch_geometry(p.alpha0, p)
    assert (g.l_p, g.l_e, g.stroke, g.capacitance) == (p.L_p, 0.0, 0.0, 0.0)


def test_geometry_full_zip_end_of_range():
    p = PouchParams()
    g = pouch_geometry(np.pi / 2, p)
    l_p = np.sqrt(np.pi * p.area)
    assert g.l_p == pytest.approx(l_p, rel=1e-14)
    assert g.capacitance == pytest.approx(p.eps_r * EPS0 * p.w * (p.L_p - l_p) / (2 * p.t_film), rel=1e-13)


def test_geometry_matches_extended_precision_oracle():
    p = PouchParams(L_p=0.02, alpha0=0.6)
    for alpha in (0.7, 0.5 * (0.6 + np.pi / 2), 1.5):
        ref, g = checks.mp_geometry(alpha, p), pouch_geometry(alpha, p)
        for key, val in ref.items():
            assert getattr(g, key) == pytest.approx(val, rel=1e-12)


def test_geometry_rejects_out_of_range():
    p = PouchParams()
    for alpha in (p.alpha0 - 1e-3, np.pi / 2 + 1e-3, 0.0):
        with pytest.raises(ValueError):
            pouch_geometry(alpha, p)


def test_geometry_identities_and_monotonicity():
    checks.check_geometry()


@settings(max_examples=200, deadline=None)
@given(st.floats(0.6, np.pi / 2))
def test_geometry_fill_area_conserved(alpha):
    p = PouchParams()
    g = pouch_geometry(alpha, p)
    assert abs(g.l_p + g.l_e - p.L_p) <= 1e-15
    assert segment_area(g.l_p, alpha) == pytest.approx(p.area, rel=1e-12)
    assert g.l_e >= 0 and g.stroke >= 0


def test_capacitance_slope_matches_finite_difference():
    p = PouchParams()
    a, b = 1.0, 1.0 + 1e-6
    ga, gb = pouch_geometry(a, p), pouch_geometry(b, p)
    fd = (gb.capacitance - ga.capacitance) / (gb.stroke - ga.stroke)
    assert ga.dC_dx == pytest.approx(fd, rel=1e-4)


@pytest.mark.parametrize("field", ["alpha0", "L_p", "k", "N_pouches", "u_threshold"])
def test_pouch_params_validation(field):
    bad = {"alpha0": 2.0, "L_p": -1.0, "k": 0.0, "N_pouches": 0, "u_threshold": -1.0}[field]
    with pytest.raises(ValueError):
        PouchParams(**{field: bad})


# ---------------------------------------------------------------- SDOF


def test_sdof_defaults():
    p = SdofParams()
    assert (p.m, p.k, p.c_tilde, p.alpha, p.beta, p.gamma) == (0.022, 1.0, 0.3, 0.7, 5e-3, 0.5)


def test_sdof_rhs_examples():
    p = SdofParams()
    assert np.array_equal(sdof_rhs(np.zeros(2), 0.0, p), [0.0, 0.0])
    assert np.allclose(sdof_rhs(np.zeros(2), 1.0, p), [0.0, 0.5 / 0.022], rtol=1e-15, atol=0)


def test_sdof_equilibrium_matches_cubic_bisection():
    p = SdofParams()
    x_ref = bisect_cubic(1.0, 0.7, 0.5)
    # the quoted 0.4404 is a rounded value; the root is 0.440264
    assert x_ref == pytest.approx(0.4404, abs=2e-4)
    x = steady_state(SdofPlant(), 1.0)
    assert abs(x[0] - x_ref) < 1e-8 and x[1] == 0.0
    assert np.max(np.abs(sdof_rhs(x, 1.0, p))) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 3.0))
def test_sdof_equilibria_over_range(u):
    p = SdofParams()
    x = steady_state(SdofPlant(), u)
    assert abs(x[0] - bisect_cubic(p.k, p.alpha, p.gamma * u * u)) < 1e-8
    assert np.linalg.norm(sdof_rhs(x, u, p)) < 1e-10


def test_sdof_rest_at_zero():
    assert np.array_equal(steady_state(SdofPlant(), 0.0), [0.0, 0.0])


def test_sdof_damping_guard():
    with pytest.raises(ValueError):
        SdofParams(u_max=10.0)
    with pytest.raises(ValueError):
        SdofPlant().check_input(8.0)


# ---------------------------------------------------------------- HASEL


def test_hasel_uncharged_rest_is_fixed_point():
    plant = HaselPlant()
    p = plant.params
    n = p.N_pouches
    state = np.concatenate([np.full(n, p.m * p.g_accel / p.k), np.zeros(2 * n)])
    assert np.max(np.abs(plant.rhs(state, 0.0))) < 1e-12
    rest = steady_state(plant, 0.0)
    assert np.allclose(rest[:n], p.m * p.g_accel / p.k, rtol=1e-12)
    assert np.all(rest[2 * n :] == 0.0)


def test_hasel_zero_charge_has_no_electrostatic_force():
    plant = HaselPlant()
    p = plant.params
    n = p.N_pouches
    rng = np.random.default_rng(3)
    x = rng.uniform(0.0, 0.8 * plant.table.x_max, n)
    v = rng.normal(size=n) * 1e-3
    d = hasel_rhs(np.concatenate([x, v, np.zeros(n)]), 5000.0, p)
    assert np.array_equal(d[n : 2 * n], (p.m * p.g_accel - p.c * v - p.k * x) / p.m)


@pytest.mark.parametrize("u", [1000.0, 4000.0, 8000.0])
def test_hasel_steady_state_force_balance(u):
    plant = HaselPlant()
    p = plant.params
    n = p.N_pouches
    y = steady_state(plant, u)
    x, q = y[:n], y[2 * n :]
    c = plant.table.effective(x)
    force = p.m * p.g_accel + 0.5 * u * u * plant.table.dC(x)
    assert np.max(np.abs(p.k * x - force)) / (p.k * plant.table.x_max) < 1e-8
    assert np.allclose(q, c * u, rtol=1e-10)
    assert plant.normalized_residual(y, u) < 1e-10


def test_hasel_charge_relaxation_matches_exponential():
    plant = HaselPlant(PouchParams(N_pouches=1))
    p = plant.params
    x = 0.4 * plant.table.x_max
    cap = float(plant.table.effective(x))
    tau = p.R * cap
    u = 6000.0

    def charge_only(y, uu):
        full = plant.rhs(np.array([x, 0.0, y[0]]), uu)
        return np.array([full[2]])

    h = tau / 200
    q = np.zeros(1)
    ts, qs = [0.0], [0.0]
    for k in range(1000):
        q = rk4_step(charge_only, q, u, u, u, h)
        ts.append((k + 1) * h)
        qs.append(q[0])
    ts, qs = np.array(ts), np.array(qs)
    analytic = cap * u * (1 - np.exp(-ts / tau))
    assert np.max(np.abs(qs - analytic)) / (cap * u) < 0.01
    # time constant read off the 63% crossing
    t63 = np.interp(1 - np.exp(-1), qs / (cap * u), ts)
    assert t63 == pytest.approx(tau, rel=0.01)


def test_hasel_threshold_disables_charging():
    plant = HaselPlant(PouchParams(N_pouches=1, u_threshold=500.0))
    x = 0.2 * plant.table.x_max
    q = 1e-9
    d = plant.rhs(np.array([x, 0.0, q]), 400.0)
    assert d[2] == pytest.approx(-q / (plant.params.R * plant.table.effective(x)), rel=1e-14)
    assert plant.rhs(np.array([x, 0.0, 0.0]), 400.0)[2] == 0.0


def test_hasel_stroke_out_of_range_is_a_fault():
    plant = HaselPlant(PouchParams(N_pouches=1))
    with pytest.raises(SimulationFault):
        plant.check_state(np.array([plant.table.x_max, 0.0, 0.0]))
    with pytest.raises(SimulationFault):
        plant.check_state(np.array([-1e-6, 0.0, 0.0]))


def test_hasel_stiffness_guard():
    plant = HaselPlant()
    u = TimeSeries(0.0, 1e-2, np.full(11, 1000.0))
    with pytest.raises(SimulationFault):
        simulate(plant, u, steady_state(plant, 0.0), dt_integration=1e-2)


# ---------------------------------------------------------------- joint


def test_joint_at_rest_without_clutch():
    assert np.array_equal(joint_rhs(np.zeros(6), 3.0, Side.NONE, JointParams()), np.zeros(6))


def test_joint_sign_convention():
    p = JointParams()
    y = np.array([0.0, 0.0, 0.1, 0.0, 0.1, 0.0])
    assert joint_rhs(y, 2.0, Side.RIGHT, p)[1] > 0
    assert joint_rhs(y, -2.0, Side.LEFT, p)[1] < 0
    assert JointPlant().rhs(np.zeros(6), 2.0)[3] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 1), st.floats(-5, 5), st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 5))
def test_joint_free_lever_is_unforced_oscillator(theta, omega, xl, xr, u):
    p = JointParams()
    d = joint_rhs(np.array([theta, omega, xl, 0.0, xr, 0.0]), u, Side.NONE, p)
    assert d[1] == pytest.approx((-p.b * omega - p.k_theta * theta) / p.J, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("u", [-4.0, -1.5, 2.0, 5.0])
def test_joint_settles_to_static_angle(u):
    plant = JointPlant()
    p = plant.params
    muscle = p.right if u > 0 else p.left
    x = bisect_cubic(muscle.k, muscle.alpha, muscle.gamma * u * u)
    theta_star = np.sign(u) * (muscle.k * x + muscle.alpha * x**3) * p.r * p.efficiency / p.k_theta
    traj = simulate(plant, wf.constant_input(u, 10.0, 1e-3), np.zeros(6))
    assert traj.values[-1, 0] == pytest.approx(theta_star, rel=1e-3)


# ---------------------------------------------------------------- simulate / steady_state


def test_simulate_sdof_decays_to_origin():
    traj = simulate(SdofPlant(), wf.constant_input(0.0, 50.0, 0.01), np.array([0.1, 0.0]))
    assert abs(traj.values[-1, 0]) < 1e-4
    assert traj.names == ("x", "v", "observable")
    assert np.array_equal(traj.values[:, 0], traj.values[:, 2])


def test_simulate_step_halving_converges():
    plant = SdofPlant()
    t = np.arange(0, 5.0 + 1e-9, 0.02)
    u = TimeSeries(0.0, 0.02, 1.0 + 0.3 * np.sin(2 * t))
    a = simulate(plant, u, np.zeros(2), dt_integration=0.005).values[-1, :2]
    b = simulate(plant, u, np.zeros(2), dt_integration=0.0025).values[-1, :2]
    assert np.linalg.norm(a - b) / np.linalg.norm(b) < 1e-6


def test_simulate_rk4_order():
    checks.check_rk4_order()


def test_simulate_rejects_non_dividing_step():
    with pytest.raises(ValueError):
        simulate(SdofPlant(), wf.constant_input(0.0, 1.0, 0.01), np.zeros(2), dt_integration=0.003)


def test_steady_state_residuals():
    checks.check_steady_state_residuals()


@pytest.mark.xfail(strict=True, reason="SM error at rho=0.1 is about 4% on this plant; see decisions ledger")
def test_sdof_slow_input_matches_sm_within_3_percent(sdof_sweep):
    plant = SdofPlant()
    decay = sdof_sweep["decay"]
    u = gen_slow_input(21, 20.0, 0.005, (0.0, 1.2), 0.1, decay)
    truth = wf.forced_response(plant, u)
    pred, _ = predict_sm(sdof_sweep["sm"], u)
    assert nmte(truth, pred) < 0.03


def test_sdof_slow_input_matches_sm_within_5_percent(sdof_sweep):
    plant = SdofPlant()
    u = gen_slow_input(21, 20.0, 0.005, (0.0, 1.2), 0.1, sdof_sweep["decay"])
    truth = wf.forced_response(plant, u)
    pred, _ = predict_sm(sdof_sweep["sm"], u)
    assert nmte(truth, pred) < 0.05


# ---------------------------------------------------------------- configuration


def test_plant_params_from_json(tmp_path):
    path = tmp_path / "plants.json"
    path.write_text(json.dumps({"sdof": {"m": 0.03}, "hasel": {"N_pouches": 3}, "joint": {"left": {"gamma": 0.3}}}))
    params = load_plant_params(path)
    assert params["sdof"].m == 0.03 and params["sdof"].k == 1.0
    assert params["hasel"].N_pouches == 3
    assert params["joint"].left.gamma == 0.3 and params["joint"].right.gamma == 0.2


@pytest.mark.parametrize("doc", [{"sdof": {"mass": 1.0}}, {"rocket": {}}, {"joint": {"left": {"zz": 1}}}])
def test_plant_params_reject_unknown_keys(doc):
    with pytest.raises(ValueError):
        load_plant_params(doc)


def test_make_plant():
    assert isinstance(make_plant("hasel", {"N_pouches": 2}), HaselPlant)
    with pytest.raises(ValueError):
        make_plant("rocket")
