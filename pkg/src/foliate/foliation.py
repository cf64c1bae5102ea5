"""Group actions, foliate vector fields and numerical foliateness checks.

A Lie group foliation is described by a :class:`GroupAction`; its leaves are
the group orbits. A :class:`FoliateSystem` is a vector field written as

    X(x) = a(x)_M(x) + f(x)

with ``a: M -> g`` generating the part tangent to the orbits and ``f`` an
equivariant field. Leaf invariants ``I`` and the reduced right-hand side
``h`` (with ``dI(x) X(x) = h(I(x))``) travel with the system so that the
integrators and diagnostics can measure leaf drift.

All metrics are Euclidean on vectors and Frobenius on matrices.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from foliate import matgroup
from foliate.errors import DimensionError, DomainError

RANK_TOL = 1e-10


class GroupAction:
    """Base class for the supported actions ``lambda: G x M -> M``.

    Subclasses provide ``evaluate``, ``generator``, ``exp``, ``random_element``
    and ``basis``. All actions implemented here are linear in ``x``, so the
    induced action on tangent vectors is ``evaluate`` itself.
    """

    kind = "abstract"
    algebra = "gl"
    linear = True

    def evaluate(self, g, x):
        raise NotImplementedError

    def generator(self, xi, x):
        raise NotImplementedError

    def exp(self, xi):
        return matgroup.mat_exp(xi)

    def dexpinv(self, X, Y, order):
        return matgroup.dexpinv(X, Y, order)

    def compose(self, g1, g2):
        return g1 @ g2

    def identity(self):
        return np.eye(self.n)

    def tangent(self, g, v):
        return self.evaluate(g, v)

    def random_element(self, rng, scale=1.0):
        raise NotImplementedError

    def basis(self):
        return matgroup.algebra_basis(self.algebra, self.n)

    @property
    def group_dim(self):
        return len(self.basis())

    def check_algebra(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.n, self.n):
            raise DimensionError(f"{self.kind}: algebra element must be {self.n}x{self.n}, got {xi.shape}")
        if not matgroup.is_in_algebra(xi, self.algebra):
            raise DomainError(f"{self.kind}: element is not in {self.algebra}({self.n})")
        return xi

    def _random_group(self, rng, scale):
        if self.group == "SO":
            return matgroup.random_orthogonal(self.n, rng)
        if self.group == "SL":
            Z = matgroup.project_algebra(rng.standard_normal((self.n, self.n)), "sl")
            return matgroup.mat_exp(0.5 * scale * Z)
        return np.eye(self.n) + 0.3 * scale * rng.standard_normal((self.n, self.n))

    def __repr__(self):
        return f"{type(self).__name__}({self.kind})"


class LeftMultiplication(GroupAction):
    """``G subset GL(n)`` acting on ``n x p`` matrices by ``(U, A) -> U A``.

    With ``p = None`` the state is a length-``n`` vector.
    """

    kind = "left-mult"

    def __init__(self, n, p=None, group="SO"):
        if group not in matgroup.GROUPS:
            raise DomainError(f"unknown group {group!r}; expected one of {matgroup.GROUPS}")
        self.n = int(n)
        self.p = p
        self.group = group
        self.algebra = matgroup.algebra_of(group)
        self.state_shape = (self.n,) if p is None else (self.n, int(p))

    def evaluate(self, g, x):
        return g @ x

    def generator(self, xi, x):
        return xi @ x

    def random_element(self, rng, scale=1.0):
        return self._random_group(rng, scale)


class RotationAction(LeftMultiplication):
    """Standard action of SO(2) on the plane; leaves are circles about the origin."""

    kind = "rotation"

    def __init__(self):
        super().__init__(2, None, "SO")

    @staticmethod
    def rotation(theta):
        c, s = np.cos(theta), np.sin(theta)
        return np.array([[c, -s], [s, c]])


class AdjointConjugation(GroupAction):
    """``G subset GL(n)`` acting on ``n x n`` matrices by ``(U, L) -> U L U^{-1}``."""

    kind = "adjoint"

    def __init__(self, n, group="SO"):
        if group not in matgroup.GROUPS:
            raise DomainError(f"unknown group {group!r}; expected one of {matgroup.GROUPS}")
        self.n = int(n)
        self.group = group
        self.algebra = matgroup.algebra_of(group)
        self.state_shape = (self.n, self.n)

    def evaluate(self, g, x):
        if self.group == "SO":
            return g @ x @ g.T
        return g @ np.linalg.solve(g.T, x.T).T

    def generator(self, xi, x):
        return matgroup.commutator(xi, x)

    def random_element(self, rng, scale=1.0):
        return self._random_group(rng, scale)


class FiberTranslation(GroupAction):
    """The additive group R^k translating the last ``k`` coordinates of a vector.

    Leaves are the fibres ``{base} x R^k`` of a skew-product system. Group
    and algebra elements are both length-``k`` vectors, so ``exp`` is the
    identity map and the algebra is abelian.
    """

    kind = "fiber-translation"
    algebra = "translation"

    def __init__(self, base_dim, fiber_dim):
        self.base_dim = int(base_dim)
        self.fiber_dim = int(fiber_dim)
        self.n = self.fiber_dim
        self.state_shape = (self.base_dim + self.fiber_dim,)

    def evaluate(self, g, x):
        out = np.array(x, dtype=float, copy=True)
        out[self.base_dim:] += g
        return out

    def tangent(self, g, v):
        return np.array(v, dtype=float, copy=True)

    def generator(self, xi, x):
        out = np.zeros(self.state_shape)
        out[self.base_dim:] = xi
        return out

    def exp(self, xi):
        return np.array(xi, dtype=float, copy=True)

    def dexpinv(self, X, Y, order):
        return np.array(Y, dtype=float, copy=True)

    def compose(self, g1, g2):
        return g1 + g2

    def identity(self):
        return np.zeros(self.fiber_dim)

    def random_element(self, rng, scale=1.0):
        return scale * rng.standard_normal(self.fiber_dim)

    def basis(self):
        return list(np.eye(self.fiber_dim))

    def check_algebra(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.fiber_dim,):
            raise DimensionError(f"translation element must have length {self.fiber_dim}, got {xi.shape}")
        return xi


FD_STEP = 1e-3


def fd_jvp(func, x, v):
    """Finite-difference directional derivative ``dfunc(x)[v]``.

    Five-point centered stencil (fourth order) with step
    ``FD_STEP (1 + |x|)`` along the unit direction.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return np.zeros_like(np.atleast_1d(func(x)), dtype=float)
    h = FD_STEP * (1.0 + np.linalg.norm(x))
    u = v / nv

    def at(s):
        return np.atleast_1d(np.asarray(func(x + s * h * u), dtype=float))

    return nv * (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h)


@dataclass(frozen=True, eq=False)
class FoliateSystem:
    """A vector field ``X(x) = a(x)_M(x) + f(x)`` foliate for ``action``.

    ``leaf_jvp(x, v)`` is the closed-form ``dI(x)[v]`` when known; otherwise
    centered finite differences are used. ``co_leaf(x, rng)`` returns another
    point on the leaf through ``x``; by default a random group element is
    applied. ``splitting`` and ``gradient_form`` are optional structures
    consumed by the splitting and discrete-gradient steppers.
    """

    name: str
    action: GroupAction
    tangent_gen: Callable
    invariant_field: Callable
    leaf_invariant: Callable
    reduced_rhs: Callable
    state_shape: tuple
    leaf_jvp: Optional[Callable] = None
    co_leaf: Optional[Callable] = None
    splitting: Optional[list] = None
    gradient_form: Optional[object] = None
    meta: dict = field(default_factory=dict)

    def rhs(self, x):
        return eval_field(self, x)

    def invariant(self, x):
        return np.atleast_1d(np.asarray(self.leaf_invariant(x), dtype=float))

    def leaf_derivative(self, x, v):
        if self.leaf_jvp is not None:
            return np.atleast_1d(np.asarray(self.leaf_jvp(x, v), dtype=float))
        return fd_jvp(self.leaf_invariant, x, v)

    def reduced(self, I):
        return np.atleast_1d(np.asarray(self.reduced_rhs(I), dtype=float))

    def sample_co_leaf(self, x, rng):
        if self.co_leaf is not None:
            return self.co_leaf(x, rng)
        return self.action.evaluate(self.action.random_element(rng), x)


@dataclass(frozen=True, eq=False)
class PlainSystem:
    """A vector field given only by its right-hand side.

    Used for baselines (Euler, midpoint) and for systems whose foliation is
    not a group orbit foliation of one of the built-in actions.
    """

    name: str
    vector_field: Callable
    state_shape: tuple
    leaf_invariant: Optional[Callable] = None
    reduced_rhs: Optional[Callable] = None
    leaf_jvp: Optional[Callable] = None
    co_leaf: Optional[Callable] = None
    splitting: Optional[list] = None
    gradient_form: Optional[object] = None
    linear_matrix: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def rhs(self, x):
        out = np.asarray(self.vector_field(x), dtype=float)
        if out.shape != np.shape(x):
            raise DimensionError(f"{self.name}: rhs returned shape {out.shape} for state of shape {np.shape(x)}")
        return out

    def invariant(self, x):
        if self.leaf_invariant is None:
            raise DomainError(f"{self.name} has no leaf invariant")
        return np.atleast_1d(np.asarray(self.leaf_invariant(x), dtype=float))

    def leaf_derivative(self, x, v):
        if self.leaf_jvp is not None:
            return np.atleast_1d(np.asarray(self.leaf_jvp(x, v), dtype=float))
        return fd_jvp(self.leaf_invariant, x, v)

    def reduced(self, I):
        if self.reduced_rhs is None:
            raise DomainError(f"{self.name} has no reduced dynamics")
        return np.atleast_1d(np.asarray(self.reduced_rhs(I), dtype=float))

    def sample_co_leaf(self, x, rng):
        if self.co_leaf is None:
            raise DomainError(f"{self.name} has no co-leaf sampler")
        return self.co_leaf(x, rng)


@dataclass(frozen=True)
class GradientForm:
    """Codimension-one system written as ``x' = (A(x) + h(I)/|grad I|^2) grad I``.

    ``skew(x)`` must return an antisymmetric matrix; ``invariant`` is scalar.
    """

    skew: Callable
    invariant: Callable
    gradient: Callable
    reduced: Callable

    def rhs(self, x):
        g = self.gradient(x)
        return self.skew(x) @ g + self.reduced(self.invariant(x)) / (g @ g) * g


def generator_field(action, xi, x):
    """Infinitesimal generator ``xi_M(x)`` of the action."""
    x = np.asarray(x, dtype=float)
    if x.shape != tuple(action.state_shape):
        raise DomainError(f"{action.kind}: state must have shape {action.state_shape}, got {x.shape}")
    xi = action.check_algebra(xi)
    return action.generator(xi, x)


def eval_field(sys, x):
    x = np.asarray(x, dtype=float)
    return sys.action.generator(sys.tangent_gen(x), x) + np.asarray(sys.invariant_field(x), dtype=float)


def _generator_matrix(action, x):
    cols = [np.ravel(action.generator(b, x)) for b in action.basis()]
    return np.column_stack(cols)


def tangent_coefficients(action, v, x):
    """Minimal-norm algebra coordinates ``c`` with ``sum c_i (e_i)_M(x)`` closest to ``v``.

    Solved through the normal equations with a pseudo-inverse of rank
    tolerance 1e-10, so singular leaves (e.g. the origin under rotations)
    give ``c = 0``.
    """
    x = np.asarray(x, dtype=float)
    G = _generator_matrix(action, x)
    gram = G.T @ G
    coeffs = np.linalg.pinv(gram, rcond=RANK_TOL, hermitian=True) @ (G.T @ np.ravel(v))
    return coeffs


def algebra_element(action, coeffs):
    return sum(c * b for c, b in zip(coeffs, action.basis()))


def decompose_orthogonal(rhs, action, x):
    """Split ``rhs(x)`` into parts tangent and perpendicular to the orbit through ``x``."""
    x = np.asarray(x, dtype=float)
    X = np.asarray(rhs(x), dtype=float)
    G = _generator_matrix(action, x)
    coeffs = tangent_coefficients(action, X, x)
    par = (G @ coeffs).reshape(X.shape)
    return par, X - par


def foliate_from_rhs(name, rhs, action, leaf_invariant, reduced_rhs, leaf_jvp=None):
    """Build a :class:`FoliateSystem` from a plain field by orthogonal decomposition.

    The tangent generator is the minimal-norm preimage of the tangential
    part; the perpendicular part becomes the invariant field. This is only a
    valid split when ``rhs`` is foliate for ``action`` and the action is
    isometric.
    """

    def tangent_gen(x):
        par, _ = decompose_orthogonal(rhs, action, x)
        return algebra_element(action, tangent_coefficients(action, par, x))

    def invariant_field(x):
        return decompose_orthogonal(rhs, action, x)[1]

    return FoliateSystem(
        name=name,
        action=action,
        tangent_gen=tangent_gen,
        invariant_field=invariant_field,
        leaf_invariant=leaf_invariant,
        reduced_rhs=reduced_rhs,
        state_shape=tuple(action.state_shape),
        leaf_jvp=leaf_jvp,
    )


def check_foliate_numeric(rhs, leaf_invariant, samples=100, seed=0, *, sample_point, co_leaf, leaf_jvp=None):
    """Largest mismatch of ``dI(x) X(x)`` between pairs of points on one leaf.

    ``sample_point(rng)`` draws base points; ``co_leaf`` is either a
    :class:`GroupAction` or a callable ``(x, rng) -> x2`` returning a point
    on the same leaf. A small result is evidence of foliateness, not proof.
    """
    rng = np.random.default_rng(seed)
    if isinstance(co_leaf, GroupAction):
        action = co_leaf

        def partner(x, rng):
            return action.evaluate(action.random_element(rng), x)

    else:
        partner = co_leaf

    def rate(x):
        v = np.asarray(rhs(x), dtype=float)
        if leaf_jvp is not None:
            return np.atleast_1d(leaf_jvp(x, v))
        return fd_jvp(leaf_invariant, x, v)

    worst = 0.0
    for _ in range(samples):
        x1 = sample_point(rng)
        x2 = partner(x1, rng)
        worst = max(worst, float(np.max(np.abs(rate(x1) - rate(x2)))))
    return worst


def check_system_foliate(sys, samples=100, seed=0, sample_point=None):
    """:func:`check_foliate_numeric` using the pieces registered on ``sys``."""
    if sample_point is None:
        shape = tuple(sys.state_shape)

        def sample_point(rng):
            return rng.standard_normal(shape)

    return check_foliate_numeric(
        sys.rhs,
        sys.invariant,
        samples,
        seed,
        sample_point=sample_point,
        co_leaf=sys.sample_co_leaf,
        leaf_jvp=sys.leaf_derivative,
    )


def chain_rule_residual(sys, x):
    """``|dI(x) X(x) - h(I(x))|``: zero when ``h`` is the correct reduced field."""
    x = np.asarray(x, dtype=float)
    lhs = sys.leaf_derivative(x, sys.rhs(x))
    return float(np.max(np.abs(lhs - sys.reduced(sys.invariant(x)))))


def leaf_jacobian(sys, x):
    """Full ``k x m`` Jacobian of the leaf invariant at ``x`` (state flattened)."""
    x = np.asarray(x, dtype=float)
    m = x.size
    cols = []
    for j in range(m):
        e = np.zeros(m)
        e[j] = 1.0
        cols.append(sys.leaf_derivative(x, e.reshape(x.shape)))
    return np.column_stack(cols)
