import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssmred import workflows as wf
from ssmred.plants import JointPlant, SdofPlant
from ssmred.reduction import (
    NonMonotoneError,
    PolynomialMap,
    SlowManifoldModel,
    fit_slow_manifold,
    invert_sm,
    predict_sm,
)
from ssmred.reduction.polynomial import multi_indices
from ssmred.signals import LinearDecay, TimeSeries, gen_slow_input, nmte


def series(v, dt=0.01):
    return TimeSeries(0.0, dt, np.asarray(v, dtype=float))


def model_from(S, lo, hi):
    S = np.asarray(S, dtype=float)
    return SlowManifoldModel(PolynomialMap(multi_indices(1, 0, len(S) - 1), S[None, :]), lo, hi)


def horner(S, x):
    out = 0.0
    for c in reversed(list(S)):
        out = out * x + c
    return out


def joint_static_map_fit(order=7):
    plant = JointPlant()
    u = np.linspace(-5.0, 5.0, 2001)
    theta = np.degrees([plant.static_angle(v) for v in u])
    return fit_slow_manifold([(series(u, 1e-3), series(theta, 1e-3))], order)


def test_linear_map_recovered_to_six_digits():
    u = gen_slow_input(0, 30.0, 0.01, (0.0, 8000.0), 0.1, LinearDecay(-1.0))
    y = 1.12e-7 + 1.56e-3 * u.scalar()
    S = fit_slow_manifold([(u, series(y))], 1).coefficients
    assert S[0] == pytest.approx(1.12e-7, rel=5e-7)
    assert S[1] == pytest.approx(1.56e-3, rel=5e-7)


@pytest.mark.parametrize("order", [1, 3, 7])
def test_constant_observable(order):
    u = series(np.linspace(-2, 3, 500))
    S = fit_slow_manifold([(u, series(np.full(500, 4.2)))], order).coefficients
    assert S[0] == pytest.approx(4.2, abs=1e-10)
    assert np.all(np.abs(S[1:]) < 1e-10)


def test_fit_reports_range_and_diagnostics():
    u1, u2 = series(np.linspace(0, 1, 50)), series(np.linspace(-1, 2, 50))
    m = fit_slow_manifold([(u1, series(2 * u1.scalar())), (u2, series(2 * u2.scalar()))], 2)
    assert (m.u_lo, m.u_hi) == (-1.0, 2.0)
    assert m.diagnostics["n_samples"] == 100 and m.diagnostics["rms_residual"] < 1e-12
    assert len(m.table_u) == 4096 and m.monotone


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_slow_manifold([(series([1.0, 1.0, 1.0]), series([1.0, 2.0, 3.0]))], 1)
    with pytest.raises(ValueError):
        fit_slow_manifold([(series([1.0, 2.0]), series([1.0, 2.0]))], 0)


@pytest.mark.xfail(strict=True, reason="held-out SM error at rho=0.1 is about 4% on this plant; see decisions ledger")
def test_sdof_held_out_sm_within_3_percent(sdof_sweep):
    plant = SdofPlant()
    u = gen_slow_input(99, 20.0, 0.005, (0.0, 1.2), 0.1, sdof_sweep["decay"])
    pred, _ = predict_sm(sdof_sweep["sm"], u)
    assert nmte(wf.forced_response(plant, u), pred) < 0.03


def test_sdof_held_out_sm_within_5_percent(sdof_sweep):
    plant = SdofPlant()
    u = gen_slow_input(99, 20.0, 0.005, (0.0, 1.2), 0.1, sdof_sweep["decay"])
    pred, _ = predict_sm(sdof_sweep["sm"], u)
    assert nmte(wf.forced_response(plant, u), pred) < 0.05


# ---------------------------------------------------------------- prediction


def test_predict_constant_and_linear():
    m = model_from([0.0, 2.0], 0.0, 5.0)
    pred, clipped = predict_sm(m, series([1.0, 2.0, 3.0]))
    assert np.array_equal(pred.scalar(), [2.0, 4.0, 6.0]) and clipped == 0
    m3 = model_from([0.5, -1.0, 0.3, 0.1], -2.0, 2.0)
    pred, _ = predict_sm(m3, series(np.full(10, 1.3)))
    assert np.all(pred.scalar() == m3(1.3))


def test_predict_clips_and_counts():
    m = model_from([0.0, 2.0], 0.0, 5.0)
    pred, clipped = predict_sm(m, series([-1.0, 2.0, 7.0]))
    assert np.array_equal(pred.scalar(), [0.0, 4.0, 10.0]) and clipped == 2


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=8), st.integers(0, 10**6))
def test_evaluation_matches_horner(S, seed):
    m = model_from(S, -4.0, 4.0)
    x = np.random.default_rng(seed).uniform(-4.0, 4.0, 200)
    ref = np.array([horner(S, float(v)) for v in x])
    scale = np.array([horner(np.abs(S), abs(float(v))) for v in x])
    # relative to the magnitude of the summed terms, which bounds any cancellation
    assert np.all(np.abs(m(x) - ref) <= 1e-14 * np.maximum(scale, 1e-300) * 4)


def test_evaluation_matches_horner_on_joint_fit():
    m = joint_static_map_fit()
    x = np.random.default_rng(0).uniform(-5, 5, 1000)
    ref = np.array([horner(m.coefficients, float(v)) for v in x])
    assert np.max(np.abs(m(x) - ref) / np.abs(ref)) < 1e-14


# ---------------------------------------------------------------- inversion


def test_invert_examples():
    m = model_from([0.0, 2.0], 0.0, 5.0)
    assert invert_sm(m, 4.0) == pytest.approx(2.0, rel=1e-12)
    assert invert_sm(m, 100.0) == 5.0
    assert invert_sm(m, -3.0) == 0.0


def test_invert_decreasing_map():
    m = model_from([1.0, -2.0], 0.0, 5.0)
    assert not m.increasing
    assert invert_sm(m, -3.0) == pytest.approx(2.0, rel=1e-12)
    assert invert_sm(m, 10.0) == 0.0


def test_invert_refuses_non_monotone():
    m = model_from([0.0, 0.0, 1.0], -1.0, 1.0)
    assert not m.monotone
    with pytest.raises(NonMonotoneError):
        invert_sm(m, 0.5)


def test_joint_round_trip_within_image_span():
    m = joint_static_map_fit()
    assert m.order == 7 and m.monotone
    lo, hi = m.image
    theta = np.random.default_rng(1).uniform(lo, hi, 10000)
    err = np.abs(m(invert_sm(m, theta)) - theta)
    assert err.max() < 1e-3 * (hi - lo)
    assert err.max() <= m.roundtrip_bound


def test_joint_bench_model_round_trip(joint_bench):
    m = joint_bench["sm"]
    assert m.order == 7 and m.monotone
    lo, hi = m.image
    theta = np.random.default_rng(2).uniform(lo, hi, 10000)
    assert np.max(np.abs(m(invert_sm(m, theta)) - theta)) < 1e-3 * (hi - lo)
