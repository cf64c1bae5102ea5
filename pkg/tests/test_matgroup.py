import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from foliate import matgroup as mg
from foliate.errors import DimensionError, DomainError

from conftest import random_unit_norm, taylor_exp

J = np.array([[0.0, -1.0], [1.0, 0.0]])

finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)
mat3 = arrays(np.float64, (3, 3), elements=finite)


# -- mat_exp ---------------------------------------------------------------


def test_exp_zero_is_identity(backend):
    np.testing.assert_array_equal(backend.expm(np.zeros((2, 2))), np.eye(2))


def test_exp_rotation_closed_form(backend):
    th = 0.3
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    np.testing.assert_allclose(backend.expm(th * J), R, atol=1e-15)


def test_exp_nilpotent(backend):
    np.testing.assert_allclose(backend.expm(np.array([[0.0, 1.0], [0.0, 0.0]])), [[1, 1], [0, 1]], atol=1e-15)


def test_exp_matches_taylor_oracle(backend, rng):
    worst = 0.0
    for _ in range(100):
        X = random_unit_norm(rng, 3, rng.uniform(0.0, 1.0))
        E = backend.expm(X)
        T = taylor_exp(X)
        worst = max(worst, np.max(np.abs(E - T)) / np.max(np.abs(T)))
    assert worst <= 1e-13


@pytest.mark.parametrize("scale", [2.0, 5.0, 10.0])
def test_exp_large_norm_against_eigendecomposition(backend, rng, scale):
    # symmetric input: exact exponential via the spectral decomposition
    S = rng.standard_normal((4, 4))
    S = S + S.T
    S *= scale / np.linalg.norm(S, 2)
    w, V = np.linalg.eigh(S)
    ref = (V * np.exp(w)) @ V.T
    np.testing.assert_allclose(backend.expm(S), ref, rtol=1e-13, atol=1e-13 * np.abs(ref).max())


def test_backends_agree(rng):
    from foliate import _pykernels

    X = random_unit_norm(rng, 4, 3.0)
    np.testing.assert_allclose(mg.mat_exp(X), _pykernels.expm(X), rtol=1e-14, atol=1e-14)


def test_exp_rejects_non_square():
    with pytest.raises(DimensionError):
        mg.mat_exp(np.zeros((2, 3)))


def test_exp_rejects_nonfinite():
    X = np.zeros((2, 2))
    X[0, 1] = np.nan
    with pytest.raises(DomainError):
        mg.mat_exp(X)
    X[0, 1] = np.inf
    with pytest.raises(DomainError):
        mg.mat_exp(X)


@settings(max_examples=60, deadline=None)
@given(mat3)
def test_exp_inverse_property(X):
    # skew input: orthogonal exponentials, absolute bound
    S = 5.0 * mg.skew(X) / max(1.0, np.linalg.norm(mg.skew(X), 2))
    np.testing.assert_allclose(mg.mat_exp(S) @ mg.mat_exp(-S), np.eye(3), atol=1e-12)
    # general input: rounding in the product scales with |e^X| |e^-X|
    X = 5.0 * X / max(1.0, np.linalg.norm(X, 2))
    E, F = mg.mat_exp(X), mg.mat_exp(-X)
    cond = np.linalg.norm(E, np.inf) * np.linalg.norm(F, np.inf)
    assert np.max(np.abs(E @ F - np.eye(3))) <= 1e-12 * cond


@settings(max_examples=60, deadline=None)
@given(mat3)
def test_exp_skew_in_so(X):
    assert mg.is_in_group(mg.mat_exp(4.0 * mg.skew(X)), "SO")


@settings(max_examples=60, deadline=None)
@given(mat3)
def test_exp_traceless_in_sl(X):
    assert mg.is_in_group(mg.mat_exp(mg.project_algebra(X, "sl")), "SL")


# -- commutator ------------------------------------------------------------


def test_commutator_self_zero(backend, rng):
    A = rng.standard_normal((3, 3))
    np.testing.assert_array_equal(backend.commutator(A, A), np.zeros((3, 3)))


def test_commutator_hand_oracle(backend):
    np.testing.assert_array_equal(backend.commutator(J, np.diag([1.0, -1.0])), [[0, 2], [2, 0]])


def test_commutator_dimension_mismatch():
    with pytest.raises(DimensionError):
        mg.commutator(np.eye(2), np.eye(3))
    with pytest.raises(DimensionError):
        mg.commutator(np.zeros((2, 3)), np.zeros((2, 3)))


@settings(max_examples=60, deadline=None)
@given(mat3, mat3, mat3, finite, finite)
def test_commutator_bilinear_antisymmetric_jacobi(A, B, C, a, b):
    c = mg.commutator
    np.testing.assert_allclose(c(A, B), -c(B, A), atol=1e-14)
    np.testing.assert_allclose(c(a * A + b * C, B), a * c(A, B) + b * c(C, B), atol=1e-13)
    jac = c(A, c(B, C)) + c(B, c(C, A)) + c(C, c(A, B))
    np.testing.assert_allclose(jac, 0.0, atol=1e-13)


# -- dexpinv -----------------------------------------------------------------


@pytest.mark.parametrize("order", range(1, 7))
def test_dexpinv_at_zero(backend, rng, order):
    Y = rng.standard_normal((3, 3))
    np.testing.assert_allclose(backend.dexpinv(np.zeros((3, 3)), Y, order), Y, atol=0)


def test_dexpinv_order_truncation(rng):
    X, Y = rng.standard_normal((2, 3, 3))
    c = mg.commutator
    np.testing.assert_array_equal(mg.dexpinv(X, Y, 1), Y)
    np.testing.assert_allclose(mg.dexpinv(X, Y, 2), Y - 0.5 * c(X, Y), atol=1e-14)
    ad2 = c(X, c(X, Y))
    np.testing.assert_allclose(mg.dexpinv(X, Y, 3), Y - 0.5 * c(X, Y) + ad2 / 12, atol=1e-14)
    np.testing.assert_allclose(mg.dexpinv(X, Y, 4), mg.dexpinv(X, Y, 3), atol=1e-14)


def test_dexpinv_backends_agree(rng):
    from foliate import _pykernels

    X, Y = rng.standard_normal((2, 4, 4))
    for q in range(1, 7):
        np.testing.assert_allclose(mg.dexpinv(X, Y, q), _pykernels.dexpinv(X, Y, q), atol=1e-13)


@pytest.mark.parametrize("order", [0, 7])
def test_dexpinv_order_range(order):
    with pytest.raises(DomainError):
        mg.dexpinv(np.eye(2), np.eye(2), order)


def test_dexpinv_dimension_mismatch():
    with pytest.raises(DimensionError):
        mg.dexpinv(np.eye(2), np.eye(3), 2)


def test_dexp_derivative_identity_finite_differences(rng):
    # Omega(t) = t P + t^2 Q: d/dt exp(Omega) = dexp_Omega(Omega') exp(Omega)
    P, Q = 0.5 * rng.standard_normal((2, 3, 3))
    t, h = 0.4, 1e-5
    om = lambda s: s * P + s * s * Q  # noqa: E731
    fd = (mg.mat_exp(om(t + h)) - mg.mat_exp(om(t - h))) / (2 * h)
    exact = mg.dexp(om(t), P + 2 * t * Q) @ mg.mat_exp(om(t))
    assert np.max(np.abs(fd - exact)) <= 1e-6


def test_dexpinv_inverts_dexp(rng):
    X = 0.1 * rng.standard_normal((3, 3))
    Y = rng.standard_normal((3, 3))
    # truncation error decays with the commutator grade
    errs = [np.max(np.abs(mg.dexpinv(X, mg.dexp(X, Y), q) - Y)) for q in (1, 2, 3, 5)]
    assert errs == sorted(errs, reverse=True)
    assert errs[-1] < 1e-6


# -- algebras and groups ---------------------------------------------------


def test_project_so_hand_oracle():
    np.testing.assert_array_equal(mg.project_algebra(np.array([[1.0, 2.0], [0.0, 1.0]]), "so"), [[0, 1], [-1, 0]])


def test_project_sl_identity():
    np.testing.assert_allclose(mg.project_algebra(np.eye(2), "sl"), 0.0, atol=0)


def test_project_diag():
    M = np.arange(9.0).reshape(3, 3)
    P = mg.project_algebra(M, "diag")
    assert mg.is_in_algebra(P, "diag")
    np.testing.assert_array_equal(np.diag(P), [0, 4, 8])


def test_project_unknown_tag():
    with pytest.raises(DomainError):
        mg.project_algebra(np.eye(2), "su")


@settings(max_examples=60, deadline=None)
@given(mat3, st.sampled_from(mg.ALGEBRAS))
def test_project_idempotent_and_member(M, tag):
    P = mg.project_algebra(M, tag)
    assert mg.is_in_algebra(P, tag)
    np.testing.assert_allclose(mg.project_algebra(P, tag), P, atol=1e-15)


def test_membership_tests():
    assert mg.is_in_group(np.eye(3), "SO")
    assert not mg.is_in_group(np.diag([1.0, 1.0, -1.0]), "SO")
    assert mg.is_in_group(np.diag([2.0, 0.5]), "SL")
    assert not mg.is_in_group(np.diag([2.0, 2.0]), "SL")
    assert mg.is_in_group(np.diag([2.0, 2.0]), "GL")
    assert not mg.is_in_group(np.zeros((2, 2)), "GL")
    assert not mg.is_in_algebra(np.eye(2), "so")
    assert mg.is_in_algebra(J, "so")


def test_algebra_basis_dimensions():
    assert len(mg.algebra_basis("so", 3)) == 3
    assert len(mg.algebra_basis("sl", 3)) == 8
    assert len(mg.algebra_basis("gl", 3)) == 9
    for B in mg.algebra_basis("sl", 3):
        assert mg.is_in_algebra(B, "sl")


def test_charpoly_known():
    np.testing.assert_allclose(mg.charpoly(np.diag([1.0, 2.0, 3.0])), [1, -6, 11, -6], atol=1e-13)


def test_similarity_preserves_charpoly(rng):
    for _ in range(20):
        L = random_unit_norm(rng, 3)
        U = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        c0 = mg.charpoly(L)
        c1 = mg.charpoly(U @ L @ np.linalg.inv(U))
        assert np.max(np.abs(c1 - c0)) <= 1e-10 * max(1.0, np.max(np.abs(c0)))


def test_random_orthogonal(rng):
    U = mg.random_orthogonal(4, rng)
    assert mg.is_in_group(U, "SO")


def test_backend_flag():
    assert mg.BACKEND in ("cython", "python")


def test_fallback_selected_by_environment():
    import os
    import subprocess
    import sys

    env = dict(os.environ, FOLIATE_PURE_PYTHON="1")
    code = "from foliate import matgroup; print(matgroup.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_benchmark_smoke(capsys):
    import importlib.util
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    mod_spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(mod_spec)
    mod_spec.loader.exec_module(bench)
    bench.main(["--repeat", "1", "--number", "1", "--steps", "2"])
    out = capsys.readouterr().out
    assert "expm n=3" in out and "rkmk4 eq1 x2" in out
