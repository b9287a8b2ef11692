"""Dense symmetric linear algebra.

Eigendecomposition, the symmetric inverse square root and orthogonal joint
diagonalization of a set of symmetric matrices by Jacobi (Givens) sweeps.

Everything except the public single-matrix wrappers works on stacks of
matrices, i.e. arrays whose last two axes are ``(p, p)``, so that a whole
batch of bootstrap replicates is processed by one sequence of numpy calls.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        return lambda f: f

from .errors import ConvergenceFailure, InvalidInputError, SingularCovarianceError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_SWEEPS = 10_000
DEFAULT_EPS = 1e-10

# relative size below which a pair is treated as already diagonal
_PAIR_NEGLIGIBLE = 1e-13


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _as_symmetric(s):
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
        raise InvalidInputError(f"expected a square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InvalidInputError("matrix has non-finite entries")
    return symmetrize(s)


def fix_signs(v):
    """Flip columns so that the largest-magnitude entry of each is positive.

    Works on a single matrix or a stack. Entries within a relative 1e-9 of
    the column maximum count as tied; the first of them decides, so that
    vectors like ``(1, -1) / sqrt(2)`` get a reproducible sign.
    """
    v = np.asarray(v, dtype=float)
    mag = np.abs(v)
    top = mag.max(axis=-2, keepdims=True)
    idx = np.argmax(mag >= top * (1.0 - 1e-9), axis=-2)
    pivot = np.take_along_axis(v, idx[..., None, :], axis=-2)
    sign = np.where(pivot < 0, -1.0, 1.0)
    return v * sign


def sym_eig(s):
    """Eigendecomposition of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues in descending
    order and eigenvector signs fixed by :func:`fix_signs`.
    """
    s = _as_symmetric(s)
    w, v = np.linalg.eigh(s)
    w = w[::-1].copy()
    v = fix_signs(v[:, ::-1])
    return w, v


def sqrt_pair_unchecked(s, eps=DEFAULT_EPS):
    """Like :func:`sqrt_pair_batch` but flags bad matrices instead of raising.

    Returns ``(inv_sqrt, sqrt, bad)``; entries of the stack where ``bad`` is
    true hold identity matrices.
    """
    s = symmetrize(s)
    w, v = np.linalg.eigh(s)
    bad = ~(w[..., 0] > eps * w[..., -1]) | ~(w[..., -1] > 0)
    if np.any(bad):
        w = np.where(bad[..., None], 1.0, w)
        v = np.where(bad[..., None, None], np.eye(s.shape[-1]), v)
    root = np.sqrt(w)
    vt = np.swapaxes(v, -1, -2)
    inv_sqrt = symmetrize((v / root[..., None, :]) @ vt)
    sqrt = symmetrize((v * root[..., None, :]) @ vt)
    return inv_sqrt, sqrt, bad


def sqrt_pair_batch(s, eps=DEFAULT_EPS):
    """Symmetric inverse square root and square root of a stack of SPD matrices.

    Raises
    ------
    SingularCovarianceError
        If some matrix has smallest eigenvalue <= eps * largest eigenvalue.
    """
    inv_sqrt, sqrt, bad = sqrt_pair_unchecked(s, eps)
    if np.any(bad):
        raise SingularCovarianceError(
            "covariance matrix is singular or not positive definite "
            f"(eigenvalue ratio <= {eps:g})"
        )
    return inv_sqrt, sqrt


def inv_sqrt_sym(s, eps=DEFAULT_EPS):
    """Unique symmetric inverse square root ``R`` with ``R @ S @ R = I``."""
    s = _as_symmetric(s)
    return sqrt_pair_batch(s, eps)[0]


@njit(cache=True)
def _jacobi_kernel(a, v, tol, max_sweeps, floor, sweeps, converged):
    # a has shape (B, p, p, L): the lag axis is innermost so that the
    # per-pair updates run over contiguous vectors; a stays exactly symmetric
    nb, p, _, nl = a.shape
    for b in range(nb):
        for sweep in range(max_sweeps):
            rotated = False
            for i in range(p - 1):
                for j in range(i + 1, p):
                    ton = 0.0
                    toff = 0.0
                    gmax = 0.0
                    for l in range(nl):
                        g1 = a[b, i, i, l] - a[b, j, j, l]
                        g2 = 2.0 * a[b, i, j, l]
                        ton += g1 * g1 - g2 * g2
                        toff += 2.0 * g1 * g2
                        gmax = max(gmax, abs(g2))
                    theta = 0.5 * math.atan2(toff, ton + math.hypot(ton, toff))
                    c = math.cos(theta)
                    s = math.sin(theta)
                    if abs(s) <= tol or gmax <= floor[b]:
                        continue
                    rotated = True
                    cc = c * c
                    ss = s * s
                    cs = c * s
                    for l in range(nl):
                        aii = a[b, i, i, l]
                        ajj = a[b, j, j, l]
                        aij = a[b, i, j, l]
                        a[b, i, i, l] = cc * aii + 2.0 * cs * aij + ss * ajj
                        a[b, j, j, l] = ss * aii - 2.0 * cs * aij + cc * ajj
                        off = cs * (ajj - aii) + (cc - ss) * aij
                        a[b, i, j, l] = off
                        a[b, j, i, l] = off
                    for k in range(p):
                        if k == i or k == j:
                            continue
                        for l in range(nl):
                            x = a[b, k, i, l]
                            y = a[b, k, j, l]
                            nx = c * x + s * y
                            ny = c * y - s * x
                            a[b, k, i, l] = nx
                            a[b, i, k, l] = nx
                            a[b, k, j, l] = ny
                            a[b, j, k, l] = ny
                    for k in range(p):
                        x = v[b, k, i]
                        y = v[b, k, j]
                        v[b, k, i] = c * x + s * y
                        v[b, k, j] = c * y - s * x
            sweeps[b] = sweep + 1
            if not rotated:
                converged[b] = True
                break


def jacobi_batch(a, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS):
    """Joint diagonalization of a stack of symmetric matrix sets.

    Parameters
    ----------
    a : ndarray, shape (B, L, p, p)
        ``B`` independent problems, each a set of ``L`` symmetric matrices.
    tol : float
        A sweep in which every Givens rotation has ``|sin| <= tol`` ends the
        iteration for that problem.
    max_sweeps : int
        Upper bound on the number of cyclic sweeps.

    Returns
    -------
    v : ndarray, shape (B, p, p)
        Orthogonal matrices maximizing ``sum_l ||diag(v.T a[l] v)||^2``.
    rotated : ndarray, shape (B, L, p, p)
        ``v.T a[l] v`` for every problem and matrix.
    converged : ndarray of bool, shape (B,)
    sweeps : ndarray of int, shape (B,)

    Notes
    -----
    The angle for pair (i, j) is the closed-form maximizer of the summed
    squared diagonals over all ``L`` matrices (Cardoso & Souloumiac, 1996).
    Pairs whose off-diagonal entries are already at rounding level relative
    to the largest entry are skipped.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 4 or a.shape[-1] != a.shape[-2]:
        raise InvalidInputError(f"expected shape (B, L, p, p), got {a.shape}")
    nb, _, p, _ = a.shape
    work = np.ascontiguousarray(np.moveaxis(symmetrize(a), 1, -1))
    v = np.broadcast_to(np.eye(p), (nb, p, p)).copy()
    scale = np.abs(a).max(axis=(1, 2, 3)) if a.size else np.zeros(nb)
    floor = _PAIR_NEGLIGIBLE * np.where(scale > 0, scale, 1.0)
    sweeps = np.zeros(nb, dtype=np.int64)
    converged = np.zeros(nb, dtype=np.bool_)
    _jacobi_kernel(work, v, float(tol), int(max_sweeps), floor, sweeps, converged)
    return v, np.moveaxis(work, -1, 1), converged, sweeps


def off_diagonal_mass(a):
    """Squared Frobenius norm of the off-diagonal part, summed over leading axes."""
    a = np.asarray(a, dtype=float)
    diag = np.diagonal(a, axis1=-2, axis2=-1)
    return float(np.sum(a * a) - np.sum(diag * diag))


def joint_diagonalize(matrices, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS):
    """Orthogonal joint diagonalization of symmetric matrices.

    Parameters
    ----------
    matrices : sequence of (p, p) array_like
    tol, max_sweeps
        Stopping rule, see :func:`jacobi_batch`.

    Returns
    -------
    v : ndarray, shape (p, p)
        Orthogonal, columns sign-fixed.
    diagonals : list of ndarray
        ``diag(v.T @ m @ v)`` for every input matrix.

    Raises
    ------
    ConvergenceFailure
        If ``max_sweeps`` sweeps were not enough.
    """
    mats = [_as_symmetric(m) for m in matrices]
    if not mats:
        raise InvalidInputError("need at least one matrix")
    if len({m.shape for m in mats}) != 1:
        raise InvalidInputError("matrices differ in dimension")
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    v, rot, converged, sweeps = jacobi_batch(np.stack(mats)[None], tol, max_sweeps)
    v = fix_signs(v[0])
    if not converged[0]:
        raise ConvergenceFailure(
            f"joint diagonalization did not converge in {max_sweeps} sweeps",
            off_diagonal=off_diagonal_mass(rot[0]),
            rotation=v,
            sweeps=int(sweeps[0]),
        )
    return v, [np.diagonal(r).copy() for r in rot[0]]
