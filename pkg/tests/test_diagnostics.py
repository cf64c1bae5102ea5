import numpy as np
import pytest

from foliate.diagnostics import (
    bundle_drift,
    circle_ics,
    co_leaf_bundle,
    convergence_order,
    convergence_study,
    euler_reduced_map,
    figure1_fields,
    figure2_experiment,
    integrate,
    leaf_drift,
    midpoint_coefficient,
    midpoint_coefficient_series,
    planar_lie_euler_reduced_map,
)
from foliate.errors import DivergenceError, DomainError, PrecisionFloorError
from foliate.foliation import PlainSystem
from foliate.integrators import make_stepper
from foliate.systems import build_eq1, build_lorenz, builtin_system


def reduced_euler_r(r0, tau, steps):
    out = [r0]
    for _ in range(steps):
        r = out[-1]
        out.append(r + tau * r * (1 - r * r))
    return np.array(out)


def test_integrate_eq1_lie_euler_radius_sequence():
    traj = integrate(build_eq1(), make_stepper("lie-euler"), np.array([2.0, 0.0]), 0.1, 4)
    r = np.sqrt(traj.leaf_values[:, 0])
    np.testing.assert_allclose(r, reduced_euler_r(2.0, 0.1, 4), atol=1e-12)
    np.testing.assert_allclose(r[:3], [2.0, 1.4, 1.4 + 0.1 * 1.4 * (1 - 1.96)], atol=1e-12)
    assert len(traj) == 5 and traj.states.shape == (5, 2)
    np.testing.assert_allclose(traj.times, 0.1 * np.arange(5), atol=1e-12)


def test_integrate_one_step_equals_call():
    sys, step = build_eq1(), make_stepper("rk4")
    x0 = np.array([0.3, 0.9])
    np.testing.assert_array_equal(integrate(sys, step, x0, 0.1, 1).states[1], step(sys, x0, 0.1))


def test_integrate_rejects_zero_steps():
    with pytest.raises(DomainError, match="steps"):
        integrate(build_eq1(), make_stepper("euler"), np.ones(2), 0.1, 0)


def test_integrate_reports_step_index():
    sys = PlainSystem("fast", lambda u: u * u, (1,))
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(DivergenceError) as info:
        integrate(sys, make_stepper("euler"), np.array([10.0]), 1.0, 50)
    assert info.value.step_index is not None and 1 <= info.value.step_index <= 50


@pytest.mark.parametrize("method", ["lie-euler", "rkmk4", "projection", "split"])
def test_integral_system_constant_leaf(method):
    traj = integrate(builtin_system("fig1-middle"), make_stepper(method), np.array([1.0, 0.5]), 0.05, 40)
    assert np.ptp(traj.leaf_values) <= 1e-13


def test_leaf_drift_lie_euler_exact():
    sys = build_eq1()
    traj = integrate(sys, make_stepper("lie-euler"), np.array([2.0, 0.0]), 0.1, 20)
    report = leaf_drift(traj, planar_lie_euler_reduced_map(sys, 0.1))
    assert report.max_drift <= 1e-12
    assert report.max_drift == report.per_step_drift.max()
    assert np.all(report.per_step_drift >= 0)


def test_leaf_drift_euler_detects_drift():
    sys = build_eq1()
    traj = integrate(sys, make_stepper("euler"), np.array([2.0, 0.0]), 0.1, 4)
    assert leaf_drift(traj, planar_lie_euler_reduced_map(sys, 0.1)).max_drift > 1e-4


def test_leaf_drift_empty():
    sys = build_eq1()
    traj = integrate(sys, make_stepper("euler"), np.array([2.0, 0.0]), 0.1, 1)
    traj.leaf_values = traj.leaf_values[:1]
    report = leaf_drift(traj, euler_reduced_map(sys, 0.1))
    assert report.max_drift == 0.0 and report.per_step_drift.size == 0


def test_lorenz_split_drift():
    sys = build_lorenz()
    traj = integrate(sys, make_stepper("split"), np.array([1.0, 1.0, 1.0]), 0.01, 200)
    rel = leaf_drift(traj, lambda I: np.exp(-0.2) * I).per_step_drift / (1 + np.abs(traj.leaf_values[:-1, 0]))
    assert rel.max() <= 1e-10


def test_bundle_drift_spread():
    sys = build_eq1()
    ics = circle_ics(2.0, 8)
    trajs = [integrate(sys, make_stepper("lie-euler"), x, 0.1, 4) for x in ics]
    report = bundle_drift(trajs, planar_lie_euler_reduced_map(sys, 0.1))
    assert report.max_drift <= 1e-12 and report.spread_across_leaf <= 1e-12


def test_circle_ics():
    ics = circle_ics(2.0, 4)
    np.testing.assert_allclose(ics, [[2, 0], [0, 2], [-2, 0], [0, -2]], atol=1e-15)


def test_co_leaf_bundle_same_leaf():
    sys = builtin_system("isospectral")
    L = np.diag([1.0, 2.0, 3.0]) + 0.1
    for M in co_leaf_bundle(sys, L, 5, seed=4):
        np.testing.assert_allclose(sys.invariant(M), sys.invariant(L), rtol=1e-12)


def test_convergence_study_fields():
    study = convergence_study(build_eq1(), make_stepper("rk4"), np.array([1.0, 0.5]), 1.0, [0.1, 0.05, 0.025])
    assert study.errors.shape == (3,) and np.isnan(study.local_slopes[0])
    assert abs(study.slope - 4.0) <= 0.2


def test_convergence_rk4_reference():
    slope = convergence_order(build_eq1(), make_stepper("lie-euler"), np.array([1.0, 0.5]), 1.0, [0.1, 0.05, 0.025, 0.0125], reference="rk4")
    assert abs(slope - 1.0) <= 0.1


def test_convergence_metric_scale_invariance():
    sys, step, x0 = build_eq1(), make_stepper("midpoint"), np.array([1.0, 0.5])
    taus = [0.1, 0.05, 0.025]
    base = convergence_order(sys, step, x0, 1.0, taus)
    scaled = convergence_order(sys, step, x0, 1.0, taus, metric=lambda d: 37.0 * float(np.max(np.abs(d))))
    assert abs(base - scaled) <= 1e-12


def test_convergence_precision_floor():
    lam = np.array([[-1.0, 0.5], [0.0, -2.0]])
    sys = PlainSystem("linear", lambda u: lam @ u, (2,), linear_matrix=lam)
    with pytest.raises(PrecisionFloorError):
        convergence_order(sys, make_stepper("exact-linear"), np.array([1.0, 1.0]), 1.0, [0.1, 0.05, 0.025])


def test_convergence_input_checks():
    sys, step = build_eq1(), make_stepper("euler")
    with pytest.raises(DomainError):
        convergence_order(sys, step, np.ones(2), 1.0, [0.1, 0.05])
    with pytest.raises(DomainError):
        convergence_order(sys, step, np.ones(2), 1.0, [0.3, 0.07, 0.01])


@pytest.mark.parametrize("x0,expected,tol", [((0.0, 1.0), 1.0, 0.01), ((1.0, 0.0), 1.5, 0.015), ((0.0, np.sqrt(3.0)), 0.0, 0.01)])
def test_midpoint_coefficient(x0, expected, tol):
    assert abs(midpoint_coefficient(np.array(x0)) - expected) <= tol


def test_midpoint_coefficient_refinement():
    x0 = np.array([0.3, 0.8])
    target = (3 - 0.8**2) / 2
    coarse = abs(midpoint_coefficient(x0, (4e-2, 2e-2)) - target)
    fine = abs(midpoint_coefficient(x0, (1e-2, 5e-3)) - target)
    assert fine <= coarse + 1e-3


def test_midpoint_coefficient_series_trend():
    c = midpoint_coefficient_series(np.array([0.0, 1.0]), [0.02, 0.01, 0.005])
    assert np.all(np.abs(np.diff(c)) > 0)
    assert np.all(np.abs(c - 1.0) < 0.2)


def test_midpoint_coefficient_origin():
    with pytest.raises(DomainError):
        midpoint_coefficient(np.zeros(2))


def test_figure2():
    res = figure2_experiment()
    assert len(res.ics) == 20 and len(res.foliate) == 20
    assert res.foliate_spread.max() <= 1e-12
    assert res.nonfoliate_spread[4] >= 1e-3


def test_figure2_methods_agree_on_axis():
    res = figure2_experiment()
    for k, x0 in enumerate(res.ics):
        if abs(x0[0]) < 1e-12:
            np.testing.assert_allclose(res.foliate[k].states[1], res.nonfoliate[k].states[1], atol=1e-14)
    # with 20 points at angles 2 pi j / 20 the axis x = 0 is hit at j = 5 and 15
    assert sum(abs(x[0]) < 1e-12 for x in res.ics) == 2


def test_figure1_fields():
    fields = figure1_fields(grid=5, seeds=3)
    assert set(fields) == {"eq1", "fig1-middle", "fig1-bottom"}
    eq1 = fields["eq1"]
    k = np.flatnonzero((eq1.points[:, 0] == 2.0) & (eq1.points[:, 1] == 0.0))[0]
    np.testing.assert_allclose(eq1.vectors[k], [-6, -4])
    mid = fields["fig1-middle"]
    k = np.flatnonzero((mid.points[:, 0] == 0.0) & (mid.points[:, 1] == 1.0))[0]
    np.testing.assert_array_equal(mid.vectors[k], [0, 0])
    for fs in fields.values():
        assert fs.leaf_residual <= 1e-10
        assert fs.dots.shape == (3, 9, 2)
        np.testing.assert_array_equal(fs.dots[0], np.array([[x, y] for y in np.linspace(-1.5, 1.5, 3) for x in np.linspace(-1.5, 1.5, 3)]))
