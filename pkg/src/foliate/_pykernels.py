"""Pure numpy implementations of the matrix kernels.

Used when the compiled ``_kernels`` extension is unavailable, or when
``FOLIATE_PURE_PYTHON=1`` is set. Both backends expose the same three
functions with identical semantics.
"""
import math

import numpy as np

PADE_DEGREE = 8
SCALED_NORM_MAX = 0.5

# diagonal Pade numerator coefficients, c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
PADE_COEFFS = tuple(
    math.factorial(2 * PADE_DEGREE - k) * math.factorial(PADE_DEGREE)
    / (math.factorial(2 * PADE_DEGREE) * math.factorial(k) * math.factorial(PADE_DEGREE - k))
    for k in range(PADE_DEGREE + 1)
)

# B_k / k! for k = 0..5 (B_1 = -1/2 convention)
DEXPINV_COEFFS = (1.0, -0.5, 1.0 / 12.0, 0.0, -1.0 / 720.0, 0.0)


def expm(X):
    n = X.shape[0]
    norm = np.abs(X).sum(axis=0).max() if n else 0.0
    squarings = 0
    if norm > SCALED_NORM_MAX:
        squarings = int(math.ceil(math.log2(norm / SCALED_NORM_MAX)))
    A = X / (2.0 ** squarings)

    ident = np.eye(n)
    num = PADE_COEFFS[0] * ident
    den = PADE_COEFFS[0] * ident
    power = ident
    sign = 1.0
    for k in range(1, PADE_DEGREE + 1):
        power = power @ A
        sign = -sign
        num = num + PADE_COEFFS[k] * power
        den = den + sign * PADE_COEFFS[k] * power
    E = np.linalg.solve(den, num)
    for _ in range(squarings):
        E = E @ E
    return E


def commutator(A, B):
    return A @ B - B @ A


def dexpinv(X, Y, order):
    top = order - 1
    while top > 0 and DEXPINV_COEFFS[top] == 0.0:
        top -= 1
    result = Y.copy()
    term = Y
    for grade in range(1, top + 1):
        term = X @ term - term @ X
        c = DEXPINV_COEFFS[grade]
        if c != 0.0:
            result = result + c * term
    return result
