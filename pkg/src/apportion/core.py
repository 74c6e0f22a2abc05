"""Dense complex-matrix primitives: uniformity checking, similarity images, and
the two unconditional lower bounds on achievable moduli.

A matrix B is *uniform* when all its entries share one modulus kappa.  A square
matrix A is *apportionable* when some nonsingular M makes M A M^-1 uniform; the
common modulus is then an *apportionment constant* of A.  Everything here is a
pure function of its inputs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from .errors import InvalidInputError, SingularMatrixError

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "UniformityReport",
    "as_matrix",
    "is_uniform",
    "similarity_image",
    "similarity_residual",
    "reciprocal_condition",
    "trace_lower_bound",
    "hadamard_lower_bound",
]

#: rcond threshold below which a transforming matrix is treated as singular.
RCOND_THRESHOLD = 1e-12

#: max-norm threshold (scaled by order) for accepting a claimed inverse.
INVERSE_PAIR_TOL = 1e-10


@dataclass(frozen=True)
class Tolerance:
    """Relative/absolute tolerance pair used by uniformity and residual checks."""

    rel: float = 1e-9
    abs: float = 1e-12

    def __post_init__(self):
        if not (self.rel >= 0 and self.abs >= 0):
            raise InvalidInputError("tolerances must be nonnegative")
        if self.rel == 0 and self.abs == 0:
            raise InvalidInputError("rel and abs tolerance cannot both be zero")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class UniformityReport:
    """Outcome of a uniformity check.

    ``kappa`` is the mean entry modulus, ``defect`` the largest deviation
    ``| |b_ij| - kappa |``.  ``is_uniform`` holds when the defect is within
    ``max(tol.abs, tol.rel * kappa)``.
    """

    is_uniform: bool
    kappa: float
    defect: float


def as_matrix(a, *, square=False, name="matrix"):
    """Validate and coerce array-like input to a complex128 2-D ndarray.

    Rejects empty matrices and non-finite entries; demands squareness when
    ``square`` is set.
    """
    try:
        m = np.asarray(a, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name}: cannot interpret as a complex matrix: {exc}") from exc
    if m.ndim != 2 or m.size == 0:
        raise InvalidInputError(f"{name}: expected a nonempty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise InvalidInputError(f"{name}: entries must be finite")
    if square and m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"{name}: expected a square matrix, got shape {m.shape}")
    return m


def is_uniform(B, tol: Tolerance = DEFAULT_TOL) -> UniformityReport:
    """Check whether all entries of B (rectangular allowed) share one modulus."""
    B = as_matrix(B, name="B")
    mods = np.abs(B)
    kappa = float(mods.mean())
    defect = float(np.abs(mods - kappa).max())
    return UniformityReport(defect <= max(tol.abs, tol.rel * kappa), kappa, defect)


def reciprocal_condition(M) -> float:
    """LAPACK 1-norm reciprocal condition estimate from an LU factorization."""
    M = as_matrix(M, square=True, name="M")
    anorm = float(np.linalg.norm(M, 1))
    if anorm == 0.0:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # scipy warns on exactly singular input
        lu, _ = lu_factor(M)
    gecon = get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0:
        raise SingularMatrixError("condition estimation failed", rcond=0.0)
    return float(rcond)


def similarity_residual(B, M, A) -> float:
    """Max-norm of B@M - M@A, the defining residual of B = M A M^-1."""
    return float(np.abs(B @ M - M @ A).max())


def _residual_scale(B, M, A) -> float:
    n = M.shape[0]
    mmax = float(np.abs(M).max())
    return n * max(1.0, mmax * max(float(np.abs(A).max()), float(np.abs(B).max())))


def similarity_image(M, A, Minv=None, tol: Tolerance = DEFAULT_TOL):
    """Compute B = M A M^-1 by a factorized linear solve.

    The inverse is never formed unless the caller supplies ``Minv``, in which
    case it is trusted after a product check.  Without ``Minv`` the matrix M
    must have a reciprocal condition estimate above ``RCOND_THRESHOLD``.
    """
    M = as_matrix(M, square=True, name="M")
    A = as_matrix(A, square=True, name="A")
    if M.shape != A.shape:
        raise InvalidInputError(f"order mismatch: M is {M.shape}, A is {A.shape}")
    n = M.shape[0]
    if Minv is not None:
        Minv = as_matrix(Minv, square=True, name="Minv")
        if Minv.shape != M.shape:
            raise InvalidInputError("Minv order mismatch")
        err = float(np.abs(M @ Minv - np.eye(n)).max())
        if err > n * INVERSE_PAIR_TOL:
            raise SingularMatrixError(
                f"supplied inverse fails the product check: max|M Minv - I| = {err:.3e}"
            )
        B = (M @ A) @ Minv
    else:
        rcond = reciprocal_condition(M)
        if rcond < RCOND_THRESHOLD:
            raise SingularMatrixError(
                f"M is singular or near-singular (rcond = {rcond:.3e})", rcond=rcond
            )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lu_piv = lu_factor(M)
        # solve B M = M A for B, i.e. M^T B^T = (M A)^T
        B = lu_solve(lu_piv, (M @ A).T, trans=1).T
    res = similarity_residual(B, M, A)
    if res > tol.rel * _residual_scale(B, M, A) + tol.abs:
        raise SingularMatrixError(f"similarity residual too large: {res:.3e}")
    return B


def trace_lower_bound(A) -> float:
    """|tr(A)| / n: every achievable modulus of A is at least this."""
    A = as_matrix(A, square=True, name="A")
    n = A.shape[0]
    return float(abs(np.trace(A))) / n


def hadamard_lower_bound(A) -> float:
    """n^(-1/2) |det(A)|^(1/n), computed in log space; 0 for singular A."""
    A = as_matrix(A, square=True, name="A")
    n = A.shape[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, _ = lu_factor(A)
    diag = np.abs(np.diag(lu))
    if np.any(diag == 0.0):
        return 0.0
    logdet = float(np.sum(np.log(diag)))
    return math.exp(logdet / n) / math.sqrt(n)
