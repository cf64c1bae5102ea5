import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foliate import matgroup as mg
from foliate.errors import CatalogueError, DomainError
from foliate.foliation import FoliateSystem, PlainSystem, check_system_foliate, fd_jvp
from foliate.systems import CATALOGUE, build_eq1, build_left_mult, builtin_system, default_ic

angles = st.floats(0, 2 * np.pi)
radii = st.floats(0.1, 2.5)


def polar_rates(u, v):
    x, y = u
    r2 = x * x + y * y
    return (x * v[0] + y * v[1]) / np.sqrt(r2), (x * v[1] - y * v[0]) / r2


def test_catalogue_names():
    expected = {"eq1", "eq2", "fig1-middle", "fig1-bottom", "lorenz", "isospectral", "left-mult", "skew-product"}
    assert expected <= set(CATALOGUE)


@pytest.mark.parametrize("name", list(CATALOGUE))
def test_default_ic_shape(name):
    sys = builtin_system(name)
    assert default_ic(name).shape == tuple(sys.state_shape)
    assert sys.rhs(default_ic(name)).shape == tuple(sys.state_shape)


def test_unknown_system_lists_names():
    with pytest.raises(CatalogueError) as info:
        builtin_system("duffing")
    assert "eq1" in str(info.value) and "lorenz" in str(info.value)


def test_bad_parameters():
    with pytest.raises(DomainError):
        builtin_system("eq1", {"sigma": 1})
    with pytest.raises(DomainError):
        builtin_system("isospectral", {"n": 2.5})
    with pytest.raises(DomainError):
        builtin_system("isospectral", {"n": 6})
    with pytest.raises(DomainError):
        builtin_system("left-mult", {"group": "SL", "p": 2})


def test_eq1_value():
    np.testing.assert_allclose(builtin_system("eq1").rhs(np.array([2.0, 0.0])), [-6, -4])


@settings(max_examples=50, deadline=None)
@given(radii, angles)
def test_eq1_polar_form(r, th):
    u = r * np.array([np.cos(th), np.sin(th)])
    rd, thd = polar_rates(u, build_eq1().rhs(u))
    assert abs(rd - r * (1 - r * r)) <= 1e-12 * (1 + r**3)
    assert abs(thd + r * np.cos(th)) <= 1e-12 * (1 + r)


@settings(max_examples=50, deadline=None)
@given(radii, angles)
def test_eq2_polar_form(r, th):
    u = r * np.array([np.cos(th), np.sin(th)])
    sys = builtin_system("eq2")
    rd, thd = polar_rates(u, sys.rhs(u))
    assert abs(rd - r) <= 1e-12 * (1 + r * r)
    assert abs(thd - r * np.sin(th)) <= 1e-12 * (1 + r)
    x, y = u
    np.testing.assert_allclose(sys.rhs(u), [-y * y + x, x * y + y], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(radii, angles)
def test_fig1_polar_forms(r, th):
    u = r * np.array([np.cos(th), np.sin(th)])
    rd, thd = polar_rates(u, builtin_system("fig1-middle").rhs(u))
    assert abs(rd) <= 1e-12 and abs(thd + r * np.cos(th)) <= 1e-12
    rd, thd = polar_rates(u, builtin_system("fig1-bottom").rhs(u))
    assert abs(rd - r * (1 - r * r)) <= 1e-12 * (1 + r**3)
    assert abs(thd + (1 + r * r / 5)) <= 1e-12 * (1 + r * r)


def test_fig1_middle_integral():
    sys = builtin_system("fig1-middle")
    np.testing.assert_array_equal(sys.reduced(np.array([1.7])), [0.0])
    np.testing.assert_array_equal(sys.rhs(np.array([0.0, 1.0])), [0.0, 0.0])


def test_lorenz_rhs_and_identity(rng):
    sys = builtin_system("lorenz")
    u = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(sys.rhs(u), [10 * (2 - 1), -2 - 3 - 28, 2 - 20 * 3])
    worst = 0.0
    for _ in range(100):
        u = 10 * rng.standard_normal(3)
        I = sys.invariant(u)[0]
        worst = max(worst, abs(sys.leaf_derivative(u, sys.rhs(u))[0] + 20 * I) / (1 + abs(I)))
    assert worst <= 1e-10


def test_lorenz_split_sums_to_field(rng):
    sys = builtin_system("lorenz", {"sigma": 3.0, "r": 15.0})
    (_, a), (_, b) = sys.splitting
    u = rng.standard_normal(3)
    np.testing.assert_allclose(a.rhs(u) + b.rhs(u), sys.rhs(u), atol=1e-14)
    # the first piece is tangent to the leaves
    assert abs(sys.leaf_derivative(u, a.rhs(u))[0]) <= 1e-13


def test_lorenz_co_leaf(rng):
    sys = builtin_system("lorenz")
    u = np.array([1.0, 1.0, 1.0])
    for _ in range(5):
        np.testing.assert_allclose(sys.invariant(sys.sample_co_leaf(u, rng)), sys.invariant(u), atol=1e-12)


def test_isospectral_tangent_part_keeps_traces(rng):
    sys = builtin_system("isospectral", {"alpha": 0.0})
    for _ in range(20):
        L = rng.standard_normal((3, 3))
        assert np.max(np.abs(sys.leaf_derivative(L, sys.rhs(L)))) <= 1e-12 * (1 + np.abs(L).max() ** 3)


def test_isospectral_reduced_rates(rng):
    sys = builtin_system("isospectral", {"n": 4, "alpha": 0.7})
    L = rng.standard_normal((4, 4))
    np.testing.assert_allclose(sys.leaf_derivative(L, sys.rhs(L)), sys.reduced(sys.invariant(L)), atol=1e-10)


def test_isospectral_custom_maps():
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    sys = builtin_system("isospectral", {"n": 2}, A_map=lambda L: J, g_map=lambda a, b: 0.0)
    np.testing.assert_allclose(sys.rhs(np.diag([1.0, -1.0])), [[0, 2], [2, 0]])


def test_left_mult_p1_recovers_planar_leaves(rng):
    sys = build_left_mult(2, 1, "SO")
    A = rng.standard_normal((2, 1))
    np.testing.assert_allclose(sys.invariant(A), [np.sum(A * A)])
    assert check_system_foliate(sys, 50) <= 1e-10


def test_left_mult_tangent_in_algebra(rng):
    for group, shape in (("SO", (3, 2)), ("SL", (3, 3))):
        sys = builtin_system("left-mult", {"group": group, "p": shape[1]})
        A = rng.standard_normal(shape)
        assert mg.is_in_algebra(sys.tangent_gen(A), mg.algebra_of(group))


def test_left_mult_sl_foliate():
    sys = builtin_system("left-mult", {"group": "SL", "p": 3})
    sample = lambda rng: np.eye(3) + 0.3 * rng.standard_normal((3, 3))  # noqa: E731
    assert check_system_foliate(sys, 100, sample_point=sample) <= 1e-10


def test_skew_product_x_independent_of_y(rng):
    sys = builtin_system("skew-product")
    for _ in range(20):
        u = rng.standard_normal(2)
        d = fd_jvp(lambda w: sys.rhs(w)[0], u, np.array([0.0, 1.0]))
        assert abs(d[0]) <= 1e-10


def test_skew_product_custom_maps():
    sys = builtin_system("skew-product", f_map=lambda x: -x, g_map=lambda x, y: np.sin(y))
    np.testing.assert_allclose(sys.rhs(np.array([2.0, 0.5])), [-2.0, np.sin(0.5)])


def test_perturbed_baseline_fails_check():
    assert CATALOGUE["eq1-perturbed"].baseline
    assert check_system_foliate(builtin_system("eq1-perturbed"), 100) >= 1e-3


def test_system_kinds():
    assert isinstance(builtin_system("lorenz"), PlainSystem)
    for name in ("eq1", "isospectral", "left-mult", "skew-product"):
        assert isinstance(builtin_system(name), FoliateSystem)


def test_parameters_change_system():
    a = builtin_system("lorenz", {"sigma": 5.0}).rhs(np.ones(3))
    b = builtin_system("lorenz").rhs(np.ones(3))
    assert not np.allclose(a, b)
