"""One-step integrators, foliate and otherwise.

Every step function takes the state as a numpy array of the system's shape
and returns a new array; nothing is modified in place. :func:`make_stepper`
wraps them into :class:`Stepper` objects with a uniform
``stepper(system, x, tau)`` call signature.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from foliate import matgroup
from foliate.errors import (
    CatalogueError,
    DivergenceError,
    DomainError,
    NonConvergenceError,
    SingularLeafError,
)
from foliate.foliation import FoliateSystem, GradientForm, PlainSystem, RANK_TOL, leaf_jacobian


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    name: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        s = b.size
        if a.shape != (s, s) or c.shape != (s,):
            raise DomainError(f"tableau {self.name}: inconsistent shapes a{a.shape} b{b.shape} c{c.shape}")
        if abs(b.sum() - 1.0) > 1e-14:
            raise DomainError(f"tableau {self.name}: weights sum to {b.sum()}, not 1")
        if np.max(np.abs(a.sum(axis=1) - c)) > 1e-14:
            raise DomainError(f"tableau {self.name}: nodes are not the row sums of a")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self):
        return self.b.size

    @property
    def explicit(self):
        return bool(np.all(np.triu(self.a) == 0.0))


TABLEAUS = {
    "euler": ButcherTableau("euler", [[0.0]], [1.0], [0.0], 1),
    "rk2": ButcherTableau("rk2", [[0, 0], [0.5, 0]], [0, 1], [0, 0.5], 2),
    "heun": ButcherTableau("heun", [[0, 0], [1, 0]], [0.5, 0.5], [0, 1], 2),
    "rk3": ButcherTableau(
        "rk3", [[0, 0, 0], [0.5, 0, 0], [-1, 2, 0]], [1 / 6, 2 / 3, 1 / 6], [0, 0.5, 1], 3
    ),
    "rk4": ButcherTableau(
        "rk4",
        [[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]],
        [1 / 6, 1 / 3, 1 / 3, 1 / 6],
        [0, 0.5, 0.5, 1],
        4,
    ),
    "rk38": ButcherTableau(
        "rk38",
        [[0, 0, 0, 0], [1 / 3, 0, 0, 0], [-1 / 3, 1, 0, 0], [1, -1, 1, 0]],
        [1 / 8, 3 / 8, 3 / 8, 1 / 8],
        [0, 1 / 3, 2 / 3, 1],
        4,
    ),
}


def get_tableau(name):
    if isinstance(name, ButcherTableau):
        return name
    try:
        return TABLEAUS[name]
    except KeyError:
        raise CatalogueError(f"unknown tableau {name!r}; valid: {', '.join(sorted(TABLEAUS))}") from None


@dataclass(frozen=True)
class SolveConfig:
    tol: float = 1e-12
    max_iter: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


DEFAULT_SOLVE = SolveConfig()


def _check_finite(value, what):
    if not np.all(np.isfinite(value)):
        raise DivergenceError(f"non-finite value in {what}")
    return value


def rk_step(tab, sys, x, tau):
    """One step of an explicit Runge-Kutta method on ``sys.rhs``."""
    tab = get_tableau(tab)
    if not tab.explicit:
        raise DomainError(f"tableau {tab.name} is not explicit")
    x = np.asarray(x, dtype=float)
    k = []
    for i in range(tab.stages):
        xi = x
        for j in range(i):
            if tab.a[i, j] != 0.0:
                xi = xi + (tau * tab.a[i, j]) * k[j]
        k.append(_check_finite(sys.rhs(xi), f"stage {i}"))
    out = x
    for i in range(tab.stages):
        if tab.b[i] != 0.0:
            out = out + (tau * tab.b[i]) * k[i]
    return _check_finite(out, "RK update")


def implicit_midpoint_step(sys, x, tau, cfg=DEFAULT_SOLVE):
    """Implicit midpoint rule ``x' = x + tau X((x + x')/2)`` by fixed-point iteration.

    Iterates until successive iterates differ by at most ``cfg.tol`` in the
    max norm. Preserves every quadratic invariant of ``sys`` up to that
    tolerance.
    """
    x = np.asarray(x, dtype=float)
    xn = x + tau * sys.rhs(x)
    residual = np.inf
    for _ in range(cfg.max_iter):
        _check_finite(xn, "midpoint iterate")
        new = x + tau * sys.rhs(0.5 * (x + xn))
        residual = float(np.max(np.abs(new - xn)))
        xn = new
        if residual <= cfg.tol:
            return _check_finite(xn, "midpoint iterate")
    raise NonConvergenceError(
        f"implicit midpoint did not converge in {cfg.max_iter} iterations (residual {residual:.3e})", residual
    )


def lie_euler_step(sys, x, tau):
    """``x' = lambda(exp(tau a(x)), x + tau f(x))``; first order and foliate."""
    x = np.asarray(x, dtype=float)
    act = sys.action
    g = act.exp(tau * sys.tangent_gen(x))
    m = x + tau * np.asarray(sys.invariant_field(x), dtype=float)
    return _check_finite(act.evaluate(g, m), "Lie-Euler update")


def rkmk_step(sys, tab, x, tau):
    """Runge-Kutta-Munthe-Kaas step on the lifted system on ``G x M``.

    The invariant part ``m' = f(m)`` is advanced by the classical method
    ``tab``; the group part ``g' = a(lambda(g, m)) g`` is advanced by the
    associated RKMK method with the same stage structure, using ``m`` stage
    values. The step starts from ``g = e``, ``m = x`` and returns
    ``lambda(g_1, m_1)``.
    """
    tab = get_tableau(tab)
    if not tab.explicit:
        raise DomainError(f"tableau {tab.name} is not explicit")
    x = np.asarray(x, dtype=float)
    act = sys.action
    q = min(tab.order, matgroup.MAX_DEXPINV_ORDER)
    km, kg = [], []
    for i in range(tab.stages):
        m_i = x
        omega = None
        for j in range(i):
            aij = tab.a[i, j]
            if aij != 0.0:
                m_i = m_i + (tau * aij) * km[j]
                omega = (tau * aij) * kg[j] if omega is None else omega + (tau * aij) * kg[j]
        if omega is None:
            point = m_i
            xi = sys.tangent_gen(point)
            kg.append(np.asarray(xi, dtype=float))
        else:
            point = act.evaluate(act.exp(omega), m_i)
            kg.append(act.dexpinv(omega, sys.tangent_gen(point), q))
        _check_finite(point, f"stage {i}")
        km.append(_check_finite(np.asarray(sys.invariant_field(m_i), dtype=float), f"stage {i}"))
    m1 = x
    omega = None
    for i in range(tab.stages):
        bi = tab.b[i]
        if bi != 0.0:
            m1 = m1 + (tau * bi) * km[i]
            omega = (tau * bi) * kg[i] if omega is None else omega + (tau * bi) * kg[i]
    return _check_finite(act.evaluate(act.exp(omega), m1), "RKMK update")


def reduced_system(sys):
    """The reduced field ``I' = h(I)`` as a :class:`PlainSystem` on leaf values."""
    return PlainSystem(name=f"{sys.name}/reduced", vector_field=sys.reduced, state_shape=(None,))


def project_to_leaf(sys, x_tilde, target, cfg=DEFAULT_SOLVE):
    """Orthogonal projection of ``x_tilde`` onto ``{I = target}``.

    Newton iteration on ``mu`` for ``I(x_tilde + dI(x_tilde)^T mu) = target``.
    """
    x_tilde = np.asarray(x_tilde, dtype=float)
    shape = x_tilde.shape
    J = leaf_jacobian(sys, x_tilde)
    sv = np.linalg.svd(J, compute_uv=False)
    if sv.size == 0 or sv.min() <= RANK_TOL * max(1.0, sv.max()):
        raise SingularLeafError("leaf-invariant Jacobian is rank deficient at the projection point")
    target = np.atleast_1d(np.asarray(target, dtype=float))
    mu = np.zeros(J.shape[0])
    xn = x_tilde
    residual = sys.invariant(xn) - target
    for _ in range(cfg.max_iter):
        if np.max(np.abs(residual)) <= cfg.tol:
            return xn
        Jx = leaf_jacobian(sys, xn)
        mu = mu - np.linalg.solve(Jx @ J.T, residual)
        xn = x_tilde + (J.T @ mu).reshape(shape)
        _check_finite(xn, "projection iterate")
        residual = sys.invariant(xn) - target
    if np.max(np.abs(residual)) <= cfg.tol:
        return xn
    res = float(np.max(np.abs(residual)))
    raise NonConvergenceError(f"projection Newton did not converge (residual {res:.3e})", res)


def projection_step(sys, inner, reduced, x, I_n, tau, cfg=DEFAULT_SOLVE):
    """Projection method: advance the leaf value, step the full field, project.

    ``inner`` and ``reduced`` are steppers ``(system, state, tau) -> state``;
    ``reduced`` is applied to :func:`reduced_system` starting from ``I_n``.
    Returns ``(x_next, I_next)``.
    """
    I_next = np.atleast_1d(reduced(reduced_system(sys), np.atleast_1d(np.asarray(I_n, dtype=float)), tau))
    x_tilde = inner(sys, x, tau)
    return project_to_leaf(sys, x_tilde, I_next, cfg), I_next


def discrete_gradient(form, x, xp):
    """Midpoint discrete gradient of ``form.invariant``.

    ``grad I(xbar) + [(I(x') - I(x) - grad I(xbar).d) / |d|^2] d`` with
    ``d = x' - x``. The correction is dropped when ``|d|`` is at round-off
    level relative to ``x``, where it would only amplify cancellation.
    """
    d = xp - x
    g = form.gradient(0.5 * (x + xp))
    dd = float(d @ d)
    if dd <= (1e-8 * (1.0 + float(np.abs(x).max(initial=0.0)))) ** 2:
        return g
    return g + ((form.invariant(xp) - form.invariant(x) - g @ d) / dd) * d


def discrete_gradient_step(form, x, tau, cfg=DEFAULT_SOLVE):
    """Discrete-gradient step for ``x' = (A(x) + h(I)/|grad I|^2) grad I``.

    Solves ``(x'-x)/tau = (A(xbar) + hbar/|dg|^2) dg`` by fixed-point iteration
    where ``dg`` is the discrete gradient and ``hbar = h((I(x)+I(x'))/2)``.
    The result satisfies ``I(x') - I(x) = tau hbar`` up to the solve residual.
    """
    if not isinstance(form, GradientForm):
        form = getattr(form, "gradient_form", None)
        if form is None:
            raise DomainError("system has no gradient form for the discrete-gradient method")
    x = np.asarray(x, dtype=float)
    Ix = form.invariant(x)

    def update(xp):
        dg = discrete_gradient(form, x, xp)
        nrm = float(dg @ dg)
        if nrm <= RANK_TOL ** 2:
            raise SingularLeafError("discrete gradient vanishes")
        hbar = form.reduced(0.5 * (Ix + form.invariant(xp)))
        return x + tau * (form.skew(0.5 * (x + xp)) @ dg + (hbar / nrm) * dg)

    xn = update(x)
    residual = np.inf
    for _ in range(cfg.max_iter):
        _check_finite(xn, "discrete-gradient iterate")
        new = update(xn)
        residual = float(np.max(np.abs(new - xn)))
        xn = new
        if residual <= cfg.tol:
            return _check_finite(xn, "discrete-gradient iterate")
    raise NonConvergenceError(
        f"discrete gradient did not converge in {cfg.max_iter} iterations (residual {residual:.3e})", residual
    )


def splitting_step(parts, x, tau, strang=False):
    """Compose sub-steps ``part(x, tau)`` in order.

    With ``strang=True`` each part runs at ``tau/2`` in order and then again
    at ``tau/2`` in reverse order, giving a symmetric composition.
    """
    if strang:
        h = 0.5 * tau
        for part in parts:
            x = part(x, h)
        for part in reversed(parts):
            x = part(x, h)
        return x
    for part in parts:
        x = part(x, tau)
    return x


def exact_linear_step(Lam, x, tau):
    """Exact flow ``exp(tau Lam) x`` of the linear field ``x' = Lam x``."""
    return matgroup.mat_exp(tau * np.asarray(Lam, dtype=float)) @ np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class Stepper:
    """A one-step map ``(system, x, tau) -> x'``."""

    method: str
    step: Callable
    order: int
    foliate: bool
    options: dict = field(default_factory=dict)

    def __call__(self, sys, x, tau):
        return self.step(sys, np.asarray(x, dtype=float), tau)

    def bind(self, sys):
        """``(x, tau) -> x'`` for a fixed system; the form used by :func:`splitting_step`."""
        return lambda x, tau: self.step(sys, np.asarray(x, dtype=float), tau)


def _tangent_part(sys):
    return FoliateSystem(
        name=f"{sys.name}/tangent",
        action=sys.action,
        tangent_gen=sys.tangent_gen,
        invariant_field=lambda x: np.zeros_like(x),
        leaf_invariant=sys.leaf_invariant,
        reduced_rhs=lambda I: np.zeros_like(np.atleast_1d(I)),
        state_shape=sys.state_shape,
        leaf_jvp=sys.leaf_jvp,
    )


def _invariant_part(sys):
    return PlainSystem(name=f"{sys.name}/invariant", vector_field=sys.invariant_field, state_shape=sys.state_shape)


def split_parts(sys):
    """Sub-steps for the splitting stepper.

    Systems may register their own ``splitting`` (a list of ``(stepper,
    subsystem)`` pairs). Otherwise a :class:`FoliateSystem` is split into its
    tangent part, advanced by RKMK4, and its invariant part, advanced by RK4;
    both sub-steps are foliate.
    """
    if sys.splitting is not None:
        return [stepper.bind(sub) for stepper, sub in sys.splitting]
    if isinstance(sys, FoliateSystem):
        return [make_stepper("rkmk4").bind(_tangent_part(sys)), make_stepper("rk4").bind(_invariant_part(sys))]
    raise DomainError(f"{sys.name} has no registered splitting")


def _require_foliate(sys, method):
    if not isinstance(sys, FoliateSystem):
        raise DomainError(f"method {method!r} needs a system with a tangent/invariant split; {sys.name} has none")


METHODS = (
    "euler",
    "rk2",
    "heun",
    "rk3",
    "rk4",
    "rk38",
    "rk",
    "midpoint",
    "lie-euler",
    "rkmk",
    "rkmk4",
    "projection",
    "discrete-gradient",
    "split",
    "exact-linear",
)


def make_stepper(method, tableau=None, cfg=DEFAULT_SOLVE, strang=True):
    """Build a :class:`Stepper` by name.

    ``tableau`` selects the RK tableau for ``rk`` and ``rkmk`` and the inner
    (and reduced) method for ``projection``; it defaults to ``rk4``.
    """
    if method in TABLEAUS:
        tab = TABLEAUS[method]
        return Stepper(method, lambda s, x, t: rk_step(tab, s, x, t), tab.order, False, {"tableau": tab.name})
    if method == "rk":
        tab = get_tableau(tableau or "rk4")
        return Stepper(method, lambda s, x, t: rk_step(tab, s, x, t), tab.order, False, {"tableau": tab.name})
    if method == "midpoint":
        return Stepper(method, lambda s, x, t: implicit_midpoint_step(s, x, t, cfg), 2, False)
    if method == "lie-euler":

        def step(s, x, t):
            _require_foliate(s, method)
            return lie_euler_step(s, x, t)

        return Stepper(method, step, 1, True)
    if method in ("rkmk", "rkmk4"):
        tab = get_tableau("rk4" if method == "rkmk4" else (tableau or "rk4"))

        def step(s, x, t):
            _require_foliate(s, method)
            return rkmk_step(s, tab, x, t)

        return Stepper(method, step, tab.order, True, {"tableau": tab.name})
    if method == "projection":
        tab = get_tableau(tableau or "rk4")
        inner = make_stepper("rk", tab.name)

        def step(s, x, t):
            return projection_step(s, inner, inner, x, s.invariant(x), t, cfg)[0]

        return Stepper(method, step, tab.order, True, {"tableau": tab.name})
    if method == "discrete-gradient":
        return Stepper(method, lambda s, x, t: discrete_gradient_step(s, x, t, cfg), 2, True)
    if method == "split":
        return Stepper(method, lambda s, x, t: splitting_step(split_parts(s), x, t, strang), 2 if strang else 1, True)
    if method == "exact-linear":

        def step(s, x, t):
            if getattr(s, "linear_matrix", None) is None:
                raise DomainError(f"{s.name} is not registered as a linear system")
            return exact_linear_step(s.linear_matrix, x, t)

        return Stepper(method, step, 0, True)
    raise CatalogueError(f"unknown method {method!r}; valid: {', '.join(METHODS)}")
