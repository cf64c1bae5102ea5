"""Catalogue of built-in example systems.

Each entry builds either a :class:`~foliate.foliation.FoliateSystem` (with
its tangent/invariant split) or a :class:`~foliate.foliation.PlainSystem`,
together with leaf invariants, reduced dynamics and a co-leaf sampler.

Planar systems use the rotation action of SO(2) with generator
``J = [[0, -1], [1, 0]]`` and leaf invariant ``I = x^2 + y^2``.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from foliate import matgroup
from foliate.errors import CatalogueError, DomainError
from foliate.foliation import (
    AdjointConjugation,
    FiberTranslation,
    FoliateSystem,
    GradientForm,
    LeftMultiplication,
    PlainSystem,
    RotationAction,
)
from foliate.integrators import make_stepper

J = np.array([[0.0, -1.0], [1.0, 0.0]])


def _r2(x):
    return x[0] * x[0] + x[1] * x[1]


def _planar_invariant(x):
    return np.array([_r2(x)])


def _planar_jvp(x, v):
    return np.array([2.0 * (x[0] * v[0] + x[1] * v[1])])


def _planar(name, tangent_rate, radial_rate, reduced, **extra):
    """Planar foliate field with ``theta' = tangent_rate(x)`` and ``x' += radial_rate(x) x``."""
    return FoliateSystem(
        name=name,
        action=RotationAction(),
        tangent_gen=lambda x: tangent_rate(x) * J,
        invariant_field=lambda x: radial_rate(x) * np.asarray(x, dtype=float),
        leaf_invariant=_planar_invariant,
        reduced_rhs=reduced,
        state_shape=(2,),
        leaf_jvp=_planar_jvp,
        **extra,
    )


def _eq1_gradient_form():
    # I = (x^2 + y^2)/2, h(I) = 2I(1 - 2I), tangent part A(x) grad I with A = [[0, x], [-x, 0]]
    return GradientForm(
        skew=lambda x: np.array([[0.0, x[0]], [-x[0], 0.0]]),
        invariant=lambda x: 0.5 * float(x @ x),
        gradient=lambda x: np.asarray(x, dtype=float),
        reduced=lambda I: 2.0 * I * (1.0 - 2.0 * I),
    )


def build_eq1():
    return _planar(
        "eq1",
        lambda x: -x[0],
        lambda x: 1.0 - _r2(x),
        lambda I: 2.0 * I * (1.0 - I),
        gradient_form=_eq1_gradient_form(),
    )


def build_eq1_perturbed(shift=0.1):
    """Eq1 plus a constant push along x; the radial rate then depends on the angle."""
    base = build_eq1()
    offset = np.array([float(shift), 0.0])
    return PlainSystem(
        name="eq1-perturbed",
        vector_field=lambda x: base.rhs(x) + offset,
        state_shape=(2,),
        leaf_invariant=_planar_invariant,
        reduced_rhs=base.reduced_rhs,
        leaf_jvp=_planar_jvp,
        co_leaf=base.sample_co_leaf,
    )


def build_eq2():
    # r' = r, theta' = r sin(theta) = y
    return _planar("eq2", lambda x: x[1], lambda x: 1.0, lambda I: 2.0 * np.asarray(I))


def build_fig1_middle():
    return _planar("fig1-middle", lambda x: -x[0], lambda x: 0.0, lambda I: np.zeros_like(np.atleast_1d(I)))


def build_fig1_bottom():
    return _planar("fig1-bottom", lambda x: -(1.0 + _r2(x) / 5.0), lambda x: 1.0 - _r2(x), lambda I: 2.0 * I * (1.0 - I))


def build_lorenz(sigma=10.0, r=28.0):
    """Lorenz system with ``b = 2 sigma``; ``x^2 - 2 sigma z`` decays like ``exp(-2 sigma t)``.

    Uses ``y' = -y - xz - rx`` and ``z' = xy - bz``; the leaf identity does
    not involve ``y'``. Split into a part tangent to the leaves (advanced
    by the implicit midpoint rule, which keeps the quadratic leaf function)
    and a linear part solved exactly.
    """
    sigma = float(sigma)
    r = float(r)
    b = 2.0 * sigma

    def rhs(u):
        x, y, z = u
        return np.array([sigma * (y - x), -y - x * z - r * x, x * y - b * z])

    def tangent(u):
        x, y, z = u
        return np.array([sigma * y, -x * z - r * x, x * y])

    Lam = np.diag([-sigma, -1.0, -b])

    def co_leaf(u, rng):
        level = u[0] ** 2 - 2.0 * sigma * u[2]
        x2, y2 = u[0] + rng.standard_normal(), u[1] + rng.standard_normal()
        return np.array([x2, y2, (x2**2 - level) / (2.0 * sigma)])

    tangent_sys = PlainSystem(name="lorenz/X1", vector_field=tangent, state_shape=(3,))
    linear_sys = PlainSystem(name="lorenz/X2", vector_field=lambda u: Lam @ u, state_shape=(3,), linear_matrix=Lam)
    return PlainSystem(
        name="lorenz",
        vector_field=rhs,
        state_shape=(3,),
        leaf_invariant=lambda u: np.array([u[0] ** 2 - 2.0 * sigma * u[2]]),
        reduced_rhs=lambda I: -2.0 * sigma * np.asarray(I),
        leaf_jvp=lambda u, v: np.array([2.0 * u[0] * v[0] - 2.0 * sigma * v[2]]),
        co_leaf=co_leaf,
        splitting=[(make_stepper("midpoint"), tangent_sys), (make_stepper("exact-linear"), linear_sys)],
        meta={"sigma": sigma, "r": r, "b": b, "linear_part": Lam},
    )


def build_isospectral(n=3, alpha=1.0, A_map=None, g_map=None):
    """``L' = [A(L), L] + L g(tr L, tr L^2)`` under conjugation by SO(n).

    Defaults: ``A(L)`` is the skew part of ``L`` and
    ``g = alpha (1 - (tr L^2 / n)^2)``, which pulls ``tr L^2`` towards ``n``
    or ``-n`` from either side; ``alpha = 0`` gives a pure isospectral
    flow. Leaf invariants are ``tr L^k`` for ``k = 1..n``, which evolve by
    ``d/dt tr L^k = k g tr L^k``.
    """
    n = int(n)
    if not 1 <= n <= 4:
        raise DomainError("isospectral systems are limited to 1 <= n <= 4")
    alpha = float(alpha)
    if A_map is None:
        A_map = matgroup.skew
    if g_map is None:

        def g_map(t1, t2):
            return alpha * (1.0 - (t2 / n) ** 2)

    def invariant_field(L):
        t = matgroup.power_traces(L, 2)
        return L * g_map(t[0], t[1])

    def leaf_invariant(L):
        return matgroup.power_traces(L, n)

    def leaf_jvp(L, V):
        out = np.empty(n)
        P = np.eye(n)
        for k in range(1, n + 1):
            out[k - 1] = k * np.trace(P @ V)
            P = P @ L
        return out

    def reduced(t):
        t = np.asarray(t, dtype=float)
        t2 = t[1] if n > 1 else t[0] ** 2
        return np.arange(1, n + 1) * g_map(t[0], t2) * t

    return FoliateSystem(
        name="isospectral",
        action=AdjointConjugation(n, "SO"),
        tangent_gen=lambda L: matgroup.project_algebra(A_map(L), "so"),
        invariant_field=invariant_field,
        leaf_invariant=leaf_invariant,
        reduced_rhs=reduced,
        state_shape=(n, n),
        leaf_jvp=leaf_jvp,
        meta={"n": n, "alpha": alpha},
    )


def build_left_mult(n=3, p=2, group="SO", beta=0.5, omega=1.0, g_map=None, V_map=None):
    """``A' = g(A) A + f(A)`` on ``n x p`` matrices under left multiplication.

    SO(n): ``f(A) = A V(A^T A)`` with default ``V(S) = beta (I - S)`` and leaf
    invariant the upper triangle of ``A^T A``. SL(n) (needs ``p = n``):
    ``f(A) = A V(det A)`` with default ``V(d) = beta (1 - d) I`` and leaf
    invariant ``det A``. The default tangent generator is the algebra
    projection of ``A K A^T + omega E``, with ``K`` upper-triangular ones and
    ``E = e_1 e_2^T - e_2 e_1^T``.
    """
    n, p = int(n), int(p)
    if n < 1 or p < 1:
        raise DomainError("left-mult needs n >= 1 and p >= 1")
    if group not in ("SO", "SL"):
        raise DomainError(f"left-mult supports group SO or SL, got {group!r}")
    beta, omega = float(beta), float(omega)
    algebra = matgroup.algebra_of(group)
    K = np.triu(np.ones((p, p)))
    E = np.zeros((n, n))
    if n >= 2:
        E[0, 1], E[1, 0] = 1.0, -1.0
    if g_map is None:

        def g_map(A):
            return A @ K @ A.T + omega * E

    tangent_gen = lambda A: matgroup.project_algebra(g_map(A), algebra)  # noqa: E731
    action = LeftMultiplication(n, p, group)
    iu = np.triu_indices(p)

    if group == "SO":
        if V_map is None:

            def V_map(S):
                return beta * (np.eye(p) - S)

        def invariant_field(A):
            return A @ V_map(A.T @ A)

        def leaf_invariant(A):
            return (A.T @ A)[iu]

        def leaf_jvp(A, W):
            return (W.T @ A + A.T @ W)[iu]

        def reduced(s):
            S = np.zeros((p, p))
            S[iu] = s
            S = S + np.triu(S, 1).T
            V = V_map(S)
            return (V.T @ S + S @ V)[iu]

    else:
        if p != n:
            raise DomainError("left-mult with SL(n) needs square states (p = n)")
        if V_map is None:

            def V_map(d):
                return beta * (1.0 - d) * np.eye(p)

        def invariant_field(A):
            return A @ V_map(np.linalg.det(A))

        def leaf_invariant(A):
            return np.array([np.linalg.det(A)])

        def leaf_jvp(A, W):
            d = np.linalg.det(A)
            return np.array([d * np.trace(np.linalg.solve(A, W))])

        def reduced(d):
            d = float(np.atleast_1d(d)[0])
            return np.array([d * np.trace(V_map(d))])

    return FoliateSystem(
        name="left-mult",
        action=action,
        tangent_gen=tangent_gen,
        invariant_field=invariant_field,
        leaf_invariant=leaf_invariant,
        reduced_rhs=reduced,
        state_shape=(n, p),
        leaf_jvp=leaf_jvp,
        meta={"n": n, "p": p, "group": group},
    )


def build_skew_product(f_map=None, g_map=None):
    """``x' = f(x), y' = g(x, y)`` foliated by ``x = const``; defaults ``f = x``, ``g = xy``.

    Written as a foliate system for translations of ``y``: the tangent
    generator is ``g(x, y)`` and the invariant field is ``(f(x), 0)``.
    """
    if f_map is None:
        f_map = lambda x: x  # noqa: E731
    if g_map is None:
        g_map = lambda x, y: x * y  # noqa: E731

    return FoliateSystem(
        name="skew-product",
        action=FiberTranslation(1, 1),
        tangent_gen=lambda u: np.array([g_map(u[0], u[1])], dtype=float),
        invariant_field=lambda u: np.array([f_map(u[0]), 0.0]),
        leaf_invariant=lambda u: np.array([u[0]]),
        reduced_rhs=lambda I: np.array([f_map(np.atleast_1d(I)[0])], dtype=float),
        state_shape=(2,),
        leaf_jvp=lambda u, v: np.array([v[0]]),
    )


@dataclass(frozen=True)
class SystemCatalogEntry:
    name: str
    builder: Callable
    default_params: dict
    default_ic: Callable
    description: str
    baseline: bool = False


def _iso_ic():
    return np.array([[0.9, 0.3, -0.2], [0.1, -0.4, 0.5], [-0.3, 0.2, 0.6]])


def _left_ic():
    return np.array([[1.0, 0.2], [0.3, 0.8], [-0.1, 0.4]])


CATALOGUE = {
    e.name: e
    for e in [
        SystemCatalogEntry(
            "eq1", build_eq1, {}, lambda: np.array([1.0, 0.5]),
            "planar field x' = xy + x(1-r^2), y' = -x^2 + y(1-r^2); r' = r(1-r^2), theta' = -r cos(theta)",
        ),
        SystemCatalogEntry(
            "eq1-perturbed", build_eq1_perturbed, {"shift": 0.1}, lambda: np.array([2.0, 0.0]),
            "eq1 plus a constant x-push; not foliate", baseline=True,
        ),
        SystemCatalogEntry(
            "eq2", build_eq2, {}, lambda: np.array([1.0, 0.0]),
            "planar field x' = -y^2 + x, y' = xy + y; r' = r, theta' = r sin(theta)",
        ),
        SystemCatalogEntry(
            "fig1-middle", build_fig1_middle, {}, lambda: np.array([1.0, 0.5]),
            "system with an integral: r' = 0, theta' = -r cos(theta)",
        ),
        SystemCatalogEntry(
            "fig1-bottom", build_fig1_bottom, {}, lambda: np.array([1.0, 0.5]),
            "system with rotational symmetry: r' = r(1-r^2), theta' = -(1 + r^2/5)",
        ),
        SystemCatalogEntry(
            "lorenz", build_lorenz, {"sigma": 10.0, "r": 28.0}, lambda: np.array([1.0, 1.0, 1.0]),
            "Lorenz system with b = 2 sigma; leaves x^2 - 2 sigma z = const",
        ),
        SystemCatalogEntry(
            "isospectral", build_isospectral, {"n": 3, "alpha": 1.0}, _iso_ic,
            "L' = [A(L), L] + f(L) under orthogonal conjugation",
        ),
        SystemCatalogEntry(
            "left-mult", build_left_mult, {"n": 3, "p": 2, "group": "SO", "beta": 0.5, "omega": 1.0}, _left_ic,
            "A' = g(A) A + f(A) under left multiplication; SO(n) leaves A^T A = const",
        ),
        SystemCatalogEntry(
            "skew-product", build_skew_product, {}, lambda: np.array([1.0, 1.0]),
            "skew product x' = f(x), y' = g(x, y) foliated by x = const",
        ),
    ]
}


def _resolve_params(entry, params):
    resolved = dict(entry.default_params)
    for key, value in (params or {}).items():
        if key not in entry.default_params:
            valid = ", ".join(sorted(entry.default_params)) or "(none)"
            raise DomainError(f"system {entry.name!r} has no parameter {key!r}; valid: {valid}")
        resolved[key] = value
    return resolved


def builtin_system(name, params=None, **callables):
    """Build a catalogue system by name.

    ``params`` is a flat mapping of parameter names to values and is
    validated against the entry's defaults. Extra keyword arguments pass
    callables (``A_map``, ``g_map``, ``V_map``, ``f_map``) straight to the
    builder.
    """
    try:
        entry = CATALOGUE[name]
    except KeyError:
        raise CatalogueError(f"unknown system {name!r}; valid: {', '.join(CATALOGUE)}") from None
    resolved = _resolve_params(entry, params)
    if name in ("isospectral", "left-mult"):
        for key in ("n", "p"):
            if key in resolved:
                value = resolved[key]
                if float(value) != int(float(value)) or int(float(value)) < 1:
                    raise DomainError(f"parameter {key} must be a positive integer, got {value}")
                resolved[key] = int(float(value))
    return entry.builder(**resolved, **callables)


def default_ic(name, params=None):
    """Default initial condition, reshaped when ``n``/``p`` parameters change the state shape."""
    entry = CATALOGUE[name]
    ic = entry.default_ic()
    sys = builtin_system(name, params)
    if ic.shape != tuple(sys.state_shape):
        rng = np.random.default_rng(0)
        ic = 0.5 * rng.standard_normal(sys.state_shape)
        if name == "left-mult" and sys.meta["group"] == "SL":
            ic = np.eye(sys.state_shape[0]) + 0.2 * ic
    return ic
