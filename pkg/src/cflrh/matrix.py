"""3x3 complex matrix algebra shared by every other module.

All functions accept a single matrix of shape (3, 3) or a stack (..., 3, 3).
Indices in the public API are 1-based, as in the mathematical notation.
"""
from dataclasses import dataclass

import numpy as np

SIGMA_DIAG = np.array([-1.0, 1.0, 1.0])
SIGMA = np.diag(SIGMA_DIAG).astype(complex)

# exp(709) is the largest finite double
_EXP_LIMIT = 700.0


class NonFiniteError(FloatingPointError):
    """Raised when an operation would produce NaN or Inf entries."""


def check_finite(a, what="result"):
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{what} contains non-finite entries")
    return a


def as_matrix(b):
    b = np.asarray(b, dtype=complex)
    if b.shape[-2:] != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {b.shape}")
    return b


@dataclass(frozen=True)
class Involution:
    epsilon: float = 1.0

    def __post_init__(self):
        if self.epsilon not in (1.0, -1.0):
            raise ValueError("epsilon must be +1 or -1")

    @property
    def matrix(self):
        return np.diag([-1.0, self.epsilon, self.epsilon]).astype(complex)


def minor(b, i, j):
    """Determinant of b with row i and column j (1-based) deleted."""
    if i not in (1, 2, 3) or j not in (1, 2, 3):
        raise IndexError(f"minor index ({i}, {j}) out of range")
    b = as_matrix(b)
    rows = [r for r in range(3) if r != i - 1]
    cols = [c for c in range(3) if c != j - 1]
    sub = b[..., rows, :][..., :, cols]
    return sub[..., 0, 0] * sub[..., 1, 1] - sub[..., 0, 1] * sub[..., 1, 0]


def cofactor_matrix(b):
    """Signed-minor matrix B^A with (B^A)_ij = (-1)^(i+j) m_ij(B).

    Satisfies B (B^A)^T = det(B) I, so for unimodular B the transpose of B^A
    is the inverse.
    """
    b = as_matrix(b)
    out = np.empty_like(b)
    for i in range(1, 4):
        for j in range(1, 4):
            out[..., i - 1, j - 1] = (-1) ** (i + j) * minor(b, i, j)
    return out


def det3(b):
    """Direct (rule of Sarrus) determinant, independent of the minor code."""
    b = as_matrix(b)
    return (b[..., 0, 0] * b[..., 1, 1] * b[..., 2, 2]
            + b[..., 0, 1] * b[..., 1, 2] * b[..., 2, 0]
            + b[..., 0, 2] * b[..., 1, 0] * b[..., 2, 1]
            - b[..., 0, 2] * b[..., 1, 1] * b[..., 2, 0]
            - b[..., 0, 0] * b[..., 1, 2] * b[..., 2, 1]
            - b[..., 0, 1] * b[..., 1, 0] * b[..., 2, 2])


def sigma_factors(c):
    """The 3x3 array of factors exp(c (sigma_i - sigma_j)).

    Raises NonFiniteError instead of saturating when |Re c| is too large.
    """
    c = np.asarray(c, dtype=complex)
    if np.any(2.0 * np.abs(c.real) > _EXP_LIMIT):
        raise NonFiniteError(f"exp(+-2 Re c) overflows for Re c = {np.max(np.abs(c.real)):.3g}")
    diff = SIGMA_DIAG[:, None] - SIGMA_DIAG[None, :]
    return np.exp(c[..., None, None] * diff)


def sigma_conjugate(c, a):
    """e^{c sigma-hat} A = e^{c sigma} A e^{-c sigma}, computed entry-wise."""
    a = as_matrix(a)
    return check_finite(sigma_factors(c) * a, "sigma_conjugate")


def symmetry_image(m, inv=Involution()):
    """A conj(M)^T A with A = diag(-1, eps, eps)."""
    m = as_matrix(m)
    a = inv.matrix
    return a @ np.conj(np.swapaxes(m, -1, -2)) @ a


def _matmul_real(a, b):
    """a @ b from real products, so that a @ b and b @ a agree bitwise for commuting diagonals."""
    ar, ai = a.real[..., :, :, None], a.imag[..., :, :, None]
    br, bi = b.real[..., None, :, :], b.imag[..., None, :, :]
    return (ar * br - ai * bi).sum(axis=-2) + 1j * (ar * bi + ai * br).sum(axis=-2)


def commutator(a, b):
    # BLAS and SIMD complex products are not bitwise commutative; [D1, D2] must be exactly 0
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    return _matmul_real(a, b) - _matmul_real(b, a)
