"""Real symmetric linear algebra: Jacobi eigensolver, positive-eigenspace
projectors and trace functionals.

The cyclic Jacobi solver is the reference path. ``positive_projectors``
handles whole threshold sweeps at once through LAPACK (``numpy.linalg.eigh``)
because the detector evaluates hundreds of thresholds per density pair.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NumericalError, PreconditionError

SYMMETRY_TOL = 1e-12
ZERO_TOL = 1e-10
OFF_DIAGONAL_TOL = 1e-12
MAX_SWEEPS = 100


class EigenPairs(NamedTuple):
    """Eigenvalues sorted descending and matching orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray


def as_symmetric(m, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Return ``m`` as a float square array, checking symmetry.

    The tolerance is absolute for entries of order one and scales with the
    largest entry otherwise, so ``rho1 - 1e4 * rho0`` is not rejected over
    rounding noise.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise PreconditionError(f"expected a non-empty square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > tol * scale:
        raise PreconditionError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")
    return a


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def spectral_decompose(m, tol: float = OFF_DIAGONAL_TOL, max_sweeps: int = MAX_SWEEPS) -> EigenPairs:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm drops
    below ``tol * ||A||_F``.

    Raises
    ------
    PreconditionError
        If ``m`` is not symmetric.
    NumericalError
        If ``max_sweeps`` sweeps do not reach the tolerance.
    """
    a = as_symmetric(m).copy()
    # Remove rounding asymmetry so rotations act on an exactly symmetric matrix.
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    threshold = tol * float(np.linalg.norm(a))
    negligible = max(1e-6 * threshold / n, 1e-300)

    sweeps = 0
    while _off_norm(a) > threshold:
        if sweeps >= max_sweeps:
            raise NumericalError(
                f"Jacobi eigensolver did not converge after {sweeps} sweeps "
                f"(off-diagonal norm {_off_norm(a):.3e})",
                iterations=sweeps,
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= negligible:
                    # Far below the stopping threshold; rotating would only overflow theta.
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) Givens rotation.
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweeps += 1

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return EigenPairs(values[order], v[:, order])


def positive_projector(m, zero_tol: float = ZERO_TOL) -> np.ndarray:
    """Projector onto the span of eigenvectors with eigenvalue > ``zero_tol``.

    Eigenvalues inside ``[-zero_tol, zero_tol]`` count as zero and are left
    out, so the result is the projector for a strict ``eta > 0`` test.
    """
    values, vectors = spectral_decompose(m)
    keep = vectors[:, values > zero_tol]
    p = keep @ keep.T
    return 0.5 * (p + p.T)


def positive_projectors(stack, zero_tol: float = ZERO_TOL) -> np.ndarray:
    """Batched ``positive_projector`` over a ``(n, dim, dim)`` stack (LAPACK)."""
    mats = np.asarray(stack, dtype=float)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise PreconditionError(f"expected a (n, dim, dim) stack, got shape {mats.shape}")
    mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    values, vectors = np.linalg.eigh(mats)
    kept = vectors * (values > zero_tol)[:, None, :]
    p = kept @ np.swapaxes(vectors, 1, 2)
    return 0.5 * (p + np.swapaxes(p, 1, 2))


def trace_product(a, b) -> float:
    """``Tr(A B)`` for square matrices of equal size."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise PreconditionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(a * b.T))
