"""Experiment harness: trajectories, leaf drift, convergence order and figure data."""
from dataclasses import dataclass, field

import numpy as np

from foliate.errors import DomainError, PrecisionFloorError, StepError
from foliate.integrators import SolveConfig, implicit_midpoint_step, make_stepper
from foliate.systems import builtin_system


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    leaf_values: np.ndarray
    method: str
    system: str
    tau: float

    def __len__(self):
        return len(self.times)


@dataclass
class DriftReport:
    per_step_drift: np.ndarray
    max_drift: float
    spread_across_leaf: float = 0.0


def _leaf_values(sys, x):
    if getattr(sys, "leaf_invariant", None) is None:
        return np.zeros(0)
    return sys.invariant(x)


def integrate(sys, stepper, x0, tau, steps, t0=0.0):
    """Apply ``stepper`` ``steps`` times from ``x0`` and record states and leaf values.

    A :class:`~foliate.errors.StepError` raised by the stepper propagates
    with ``step_index`` set to the failing step (1-based).
    """
    steps = int(steps)
    if steps < 1:
        raise DomainError("steps must be >= 1")
    x = np.array(x0, dtype=float)
    states = [x]
    leaves = [_leaf_values(sys, x)]
    for n in range(1, steps + 1):
        try:
            x = stepper(sys, x, tau)
        except StepError as err:
            err.step_index = n
            raise
        states.append(x)
        leaves.append(_leaf_values(sys, x))
    return Trajectory(
        times=t0 + tau * np.arange(steps + 1),
        states=np.array(states),
        leaf_values=np.array(leaves),
        method=getattr(stepper, "method", "custom"),
        system=sys.name,
        tau=float(tau),
    )


def integrate_bundle(sys, stepper, ics, tau, steps):
    return [integrate(sys, stepper, x0, tau, steps) for x0 in ics]


def leaf_drift(traj, reduced_update):
    """Per-step ``|I(x_{n+1}) - reduced_update(I(x_n))|`` (max norm over components)."""
    I = np.asarray(traj.leaf_values, dtype=float)
    if len(I) < 2:
        return DriftReport(np.zeros(0), 0.0)
    drift = np.array(
        [np.max(np.abs(I[n + 1] - np.atleast_1d(reduced_update(I[n])))) for n in range(len(I) - 1)]
    )
    return DriftReport(drift, float(drift.max()))


def leaf_spread(trajectories):
    """Per-step spread ``max - min`` of the leaf values across a bundle (max over components)."""
    leaves = np.array([t.leaf_values for t in trajectories])
    if leaves.size == 0:
        return np.zeros(0)
    return np.max(leaves.max(axis=0) - leaves.min(axis=0), axis=-1)


def bundle_drift(trajectories, reduced_update):
    """Worst drift over a bundle, with the across-leaf spread filled in."""
    reports = [leaf_drift(t, reduced_update) for t in trajectories]
    per_step = np.max([r.per_step_drift for r in reports], axis=0)
    spread = leaf_spread(trajectories)
    return DriftReport(per_step, float(per_step.max(initial=0.0)), float(spread.max(initial=0.0)))


def euler_reduced_map(sys, tau):
    """``I -> I + tau h(I)``."""
    return lambda I: np.asarray(I, dtype=float) + tau * sys.reduced(I)


def planar_lie_euler_reduced_map(sys, tau):
    """Leaf map of Lie-Euler on a planar system with radial field ``f(x) = rho(r^2) x``.

    The update is explicit Euler for ``r' = r rho``; on ``I = r^2`` this is
    ``I (1 + tau h(I) / (2I))^2``.
    """

    def update(I):
        I = np.asarray(I, dtype=float)
        return I * (1.0 + tau * sys.reduced(I) / (2.0 * I)) ** 2

    return update


def co_leaf_bundle(sys, x0, count, seed=0):
    """``count`` points on the leaf through ``x0``: ``x0`` itself plus random group images."""
    rng = np.random.default_rng(seed)
    x0 = np.asarray(x0, dtype=float)
    return [x0] + [sys.sample_co_leaf(x0, rng) for _ in range(count - 1)]


def circle_ics(radius, count):
    angles = 2.0 * np.pi * np.arange(count) / count
    return [radius * np.array([np.cos(a), np.sin(a)]) for a in angles]


@dataclass
class OrderStudy:
    taus: np.ndarray
    errors: np.ndarray
    local_slopes: np.ndarray
    slope: float
    reference: str


def _steps_for(T, tau):
    n = T / tau
    steps = int(round(n))
    if steps < 1 or abs(n - steps) > 1e-9 * max(1.0, n):
        raise DomainError(f"final time {T} is not an integer multiple of step {tau}")
    return steps


def _endpoint(sys, stepper, x0, tau, steps):
    x = np.array(x0, dtype=float)
    for _ in range(steps):
        x = stepper(sys, x, tau)
    return x


def convergence_study(sys, stepper, x0, T, taus, reference="self", metric=None):
    """Global error at time ``T`` for each step size, plus the fitted log-log slope.

    The reference solution is the same stepper (``reference="self"``) or
    classical RK4 (``reference="rk4"``) at ``min(taus)/16``. ``metric``
    maps the state difference to a scalar error (default max norm).
    """
    taus = np.asarray(taus, dtype=float)
    if taus.size < 3:
        raise DomainError("need at least three step sizes")
    if metric is None:
        metric = lambda d: float(np.max(np.abs(d)))  # noqa: E731
    ref_stepper = stepper if reference == "self" else make_stepper(reference)
    tau_ref = taus.min() / 16.0
    x_ref = _endpoint(sys, ref_stepper, x0, tau_ref, _steps_for(T, tau_ref))
    errors = np.array([metric(_endpoint(sys, stepper, x0, tau, _steps_for(T, tau)) - x_ref) for tau in taus])
    if errors[np.argmax(taus)] < 1e-13:
        raise PrecisionFloorError(
            f"error {errors[np.argmax(taus)]:.3e} at the largest step is below 1e-13; order cannot be measured"
        )
    logt, loge = np.log(taus), np.log(errors)
    slope = float(np.polyfit(logt, loge, 1)[0])
    local = np.full(taus.size, np.nan)
    local[1:] = np.diff(loge) / np.diff(logt)
    return OrderStudy(taus, errors, local, slope, str(reference))


def convergence_order(sys, stepper, x0, T, taus, reference="self", metric=None):
    return convergence_study(sys, stepper, x0, T, taus, reference, metric).slope


def midpoint_coefficient_series(x0, taus, cfg=None):
    """``c(tau) = (r'^2 - r^2 (1 + 2 tau + 2 tau^2)) / (r^2 tau^3)`` for one midpoint step on eq2."""
    cfg = cfg or SolveConfig(tol=1e-15, max_iter=200)
    sys = builtin_system("eq2")
    x0 = np.asarray(x0, dtype=float)
    r2 = float(x0 @ x0)
    if r2 == 0.0:
        raise DomainError("midpoint coefficient needs a nonzero initial point")
    out = []
    for tau in taus:
        x1 = implicit_midpoint_step(sys, x0, tau, cfg)
        out.append((float(x1 @ x1) - r2 * (1.0 + 2.0 * tau + 2.0 * tau * tau)) / (r2 * tau**3))
    return np.array(out)


def midpoint_coefficient(x0, taus=(1e-2, 5e-3, 2.5e-3), cfg=None):
    """Limit of :func:`midpoint_coefficient_series` as ``tau -> 0``.

    The two smallest steps are combined by first-order Richardson
    extrapolation, since ``c(tau) = c0 + c1 tau + O(tau^2)``.
    """
    taus = np.sort(np.asarray(taus, dtype=float))
    if taus.size < 2:
        raise DomainError("need at least two step sizes")
    c = midpoint_coefficient_series(x0, taus[:2], cfg)
    t1, t2 = taus[0], taus[1]
    return float((t2 * c[0] - t1 * c[1]) / (t2 - t1))


@dataclass
class Figure2Result:
    ics: list
    foliate: list
    nonfoliate: list
    foliate_spread: np.ndarray
    nonfoliate_spread: np.ndarray
    methods: tuple = ("lie-euler", "euler")


def figure2_experiment(tau=0.1, steps=4, n_ics=20, radius=2.0):
    """Eq1 from ``n_ics`` equally spaced points on a circle, Lie-Euler against explicit Euler."""
    sys = builtin_system("eq1")
    ics = circle_ics(radius, n_ics)
    fol = integrate_bundle(sys, make_stepper("lie-euler"), ics, tau, steps)
    non = integrate_bundle(sys, make_stepper("euler"), ics, tau, steps)
    return Figure2Result(ics, fol, non, leaf_spread(fol), leaf_spread(non))


@dataclass
class FieldSample:
    name: str
    points: np.ndarray
    vectors: np.ndarray
    leaf_residual: float
    dot_times: tuple
    dots: np.ndarray = field(repr=False)


def figure1_fields(grid=9, seeds=5, dot_times=(0.0, 0.5, 1.0), ref_tau=1e-2):
    """Sample the three planar fields on ``[-2, 2]^2`` and mark flow positions.

    ``grid`` is the number of points per axis for the arrows; ``seeds`` per
    axis for the flow dots, which come from RK4 at step ``ref_tau``. The
    ``leaf_residual`` is the largest ``|dI X - h(I)|`` over the grid.
    """
    axis = np.linspace(-2.0, 2.0, grid)
    pts = np.array([[x, y] for y in axis for x in axis])
    seed_axis = np.linspace(-1.5, 1.5, seeds)
    seed_pts = np.array([[x, y] for y in seed_axis for x in seed_axis])
    rk4 = make_stepper("rk4")
    out = {}
    for name in ("eq1", "fig1-middle", "fig1-bottom"):
        sys = builtin_system(name)
        vecs = np.array([sys.rhs(p) for p in pts])
        resid = max(
            float(np.max(np.abs(sys.leaf_derivative(p, v) - sys.reduced(sys.invariant(p))))) for p, v in zip(pts, vecs)
        )
        dots = np.empty((len(dot_times), len(seed_pts), 2))
        for j, p in enumerate(seed_pts):
            x, t = p.copy(), 0.0
            for i, target in enumerate(dot_times):
                n = int(round((target - t) / ref_tau))
                for _ in range(n):
                    x = rk4(sys, x, ref_tau)
                t = target
                dots[i, j] = x
        out[name] = FieldSample(name, pts, vecs, resid, tuple(dot_times), dots)
    return out
