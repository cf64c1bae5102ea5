"""Small dense matrix Lie group and Lie algebra kernel.

Matrices are plain ``float64`` numpy arrays. The hot kernels (``mat_exp``,
``commutator``, ``dexpinv``) come from the compiled ``_kernels`` extension
when it is importable and from ``_pykernels`` otherwise; set
``FOLIATE_PURE_PYTHON=1`` to force the numpy path.

Algebra tags are ``"gl"``, ``"so"``, ``"sl"``, ``"diag"``; group tags are
``"GL"``, ``"SO"``, ``"SL"``.
"""
import os

import numpy as np

from foliate import _pykernels
from foliate.errors import DimensionError, DomainError

if os.environ.get("FOLIATE_PURE_PYTHON") == "1":
    _backend = _pykernels
    BACKEND = "python"
else:
    try:
        from foliate import _kernels as _backend

        BACKEND = "cython"
    except ImportError:
        _backend = _pykernels
        BACKEND = "python"

ALGEBRAS = ("gl", "so", "sl", "diag")
GROUPS = ("GL", "SO", "SL")

ALGEBRA_TOL = 1e-12
GROUP_TOL = 1e-10

MAX_DEXPINV_ORDER = 6


def _square(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {X.shape}")
    return X


def _finite(X, name="X"):
    if not np.all(np.isfinite(X)):
        raise DomainError(f"{name} has non-finite entries")
    return X


def _same_shape(A, B):
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch: {A.shape} vs {B.shape}")


def mat_exp(X):
    """Matrix exponential by scaling and squaring with a [8/8] Pade approximant.

    The number of squarings is chosen so the scaled 1-norm is at most 0.5.
    """
    X = _finite(_square(X))
    return _backend.expm(X)


def commutator(A, B):
    """Return ``AB - BA``."""
    A = _square(A, "A")
    B = _square(B, "B")
    _same_shape(A, B)
    return _backend.commutator(A, B)


def dexpinv(X, Y, order):
    """Truncated inverse differential of the exponential map.

    Sums ``B_k/k! ad_X^k(Y)`` for commutator grades ``k < order``, which is
    what an RKMK stepper of classical order ``order`` needs::

        Y - 1/2 [X,Y] + 1/12 [X,[X,Y]] - 1/720 ad_X^4 Y + ...
    """
    X = _square(X, "X")
    Y = _square(Y, "Y")
    _same_shape(X, Y)
    order = int(order)
    if not 1 <= order <= MAX_DEXPINV_ORDER:
        raise DomainError(f"dexpinv order must be in 1..{MAX_DEXPINV_ORDER}, got {order}")
    return _backend.dexpinv(X, Y, order)


def dexp(X, Y, terms=20):
    """Differential of exp (right trivialised): ``sum ad_X^k(Y) / (k+1)!``.

    Not used by the steppers; it is the forward map that ``dexpinv`` inverts.
    """
    X = _square(X, "X")
    Y = _square(Y, "Y")
    _same_shape(X, Y)
    result = Y.copy()
    term = Y
    fact = 1.0
    for k in range(1, terms):
        term = X @ term - term @ X
        fact *= k + 1
        result = result + term / fact
    return result


def skew(M):
    M = np.asarray(M, dtype=float)
    return 0.5 * (M - M.T)


def project_algebra(M, algebra):
    """Project a square matrix onto one of the supported subalgebras of gl(n)."""
    M = _square(M, "M")
    if algebra == "gl":
        return M.copy()
    if algebra == "so":
        return skew(M)
    if algebra == "sl":
        n = M.shape[0]
        return M - (np.trace(M) / n) * np.eye(n)
    if algebra == "diag":
        return np.diag(np.diag(M))
    raise DomainError(f"unknown algebra {algebra!r}; expected one of {ALGEBRAS}")


def is_in_algebra(M, algebra, tol=ALGEBRA_TOL):
    M = _square(M, "M")
    scale = 1.0 + np.abs(M).max(initial=0.0)
    if algebra == "gl":
        return bool(np.all(np.isfinite(M)))
    if algebra == "so":
        return bool(np.abs(M + M.T).max(initial=0.0) <= tol * scale)
    if algebra == "sl":
        return bool(abs(np.trace(M)) <= tol * scale)
    if algebra == "diag":
        return bool(np.all(M[~np.eye(M.shape[0], dtype=bool)] == 0.0))
    raise DomainError(f"unknown algebra {algebra!r}; expected one of {ALGEBRAS}")


def is_in_group(M, group, tol=GROUP_TOL):
    M = _square(M, "M")
    n = M.shape[0]
    if group == "SO":
        return bool(np.abs(M.T @ M - np.eye(n)).max(initial=0.0) <= tol and np.linalg.det(M) > 0)
    if group == "SL":
        return bool(abs(np.linalg.det(M) - 1.0) <= tol)
    if group == "GL":
        return bool(abs(np.linalg.det(M)) > 0.0)
    raise DomainError(f"unknown group {group!r}; expected one of {GROUPS}")


def algebra_of(group):
    try:
        return {"GL": "gl", "SO": "so", "SL": "sl"}[group]
    except KeyError:
        raise DomainError(f"unknown group {group!r}; expected one of {GROUPS}") from None


def algebra_basis(algebra, n):
    """A basis of the algebra as a list of ``n x n`` matrices.

    so(n): ``E_ij - E_ji`` for i<j; sl(n): off-diagonal ``E_ij`` plus
    ``E_ii - E_nn``; gl(n): all ``E_ij``; diag(n): all ``E_ii``.
    """
    basis = []

    def unit(i, j):
        E = np.zeros((n, n))
        E[i, j] = 1.0
        return E

    if algebra == "so":
        for i in range(n):
            for j in range(i + 1, n):
                basis.append(unit(i, j) - unit(j, i))
    elif algebra == "gl":
        basis = [unit(i, j) for i in range(n) for j in range(n)]
    elif algebra == "sl":
        basis = [unit(i, j) for i in range(n) for j in range(n) if i != j]
        basis += [unit(i, i) - unit(n - 1, n - 1) for i in range(n - 1)]
    elif algebra == "diag":
        basis = [unit(i, i) for i in range(n)]
    else:
        raise DomainError(f"unknown algebra {algebra!r}; expected one of {ALGEBRAS}")
    return basis


def charpoly(L):
    """Characteristic polynomial coefficients by Faddeev-LeVerrier.

    Returns ``[1, c_1, ..., c_n]`` with ``det(tI - L) = t^n + c_1 t^{n-1} + ... + c_n``.
    Intended for the n <= 4 matrices used here; no eigensolver involved.
    """
    L = _square(L, "L")
    n = L.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(L)
    ident = np.eye(n)
    c = 1.0
    for k in range(1, n + 1):
        M = L @ M + c * ident
        c = -np.trace(L @ M) / k
        coeffs.append(c)
    return np.array(coeffs)


def power_traces(L, kmax):
    """``[tr L, tr L^2, ..., tr L^kmax]``."""
    L = _square(L, "L")
    out = np.empty(kmax)
    P = np.eye(L.shape[0])
    for k in range(kmax):
        P = P @ L
        out[k] = np.trace(P)
    return out


def random_orthogonal(n, rng, special=True):
    """Haar-distributed orthogonal matrix (QR with sign fix); det +1 when ``special``."""
    Z = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    Q = Q * np.sign(np.diag(R))
    if special and np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q
