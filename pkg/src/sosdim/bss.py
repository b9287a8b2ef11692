"""AMUSE and SOBI unmixing estimators and the running-mean noise statistic."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceFailure,
    InvalidDimensionError,
    InvalidInputError,
    SingularCovarianceError,
)
from .linalg import (
    DEFAULT_EPS,
    DEFAULT_MAX_SWEEPS,
    DEFAULT_TOL,
    fix_signs,
    jacobi_batch,
    off_diagonal_mass,
    sqrt_pair_unchecked,
)
from .series import WhiteningResult, as_series, autocov_centered, check_lag, center

DEFAULT_LAGS = tuple(range(1, 13))
DEFAULT_AMUSE_LAG = 1


@dataclass(frozen=True)
class BssMethod:
    """An SOS estimator together with its lag set.

    ``amuse`` uses exactly one lag; ``sobi`` any non-empty set of distinct
    positive lags.
    """

    name: str
    lags: tuple = DEFAULT_LAGS

    def __post_init__(self):
        if self.name not in ("amuse", "sobi"):
            raise InvalidInputError(f"unknown method {self.name!r}")
        lags = tuple(int(t) for t in self.lags)
        if not lags:
            raise InvalidInputError("lag set must not be empty")
        if any(t < 1 for t in lags):
            raise InvalidInputError(f"lags must be positive, got {lags}")
        if len(set(lags)) != len(lags):
            raise InvalidInputError(f"lags must be distinct, got {lags}")
        if self.name == "amuse" and len(lags) != 1:
            raise InvalidInputError("AMUSE takes exactly one lag")
        object.__setattr__(self, "lags", lags)

    @classmethod
    def amuse(cls, lag=DEFAULT_AMUSE_LAG):
        return cls("amuse", (lag,))

    @classmethod
    def sobi(cls, lags=DEFAULT_LAGS):
        return cls("sobi", tuple(lags))

    @property
    def label(self):
        if self.name == "amuse":
            return f"AMUSE({self.lags[0]})"
        lags = self.lags
        if lags == tuple(range(lags[0], lags[-1] + 1)) and len(lags) > 1:
            return f"SOBI({lags[0]}..{lags[-1]})"
        return "SOBI(" + ",".join(map(str, lags)) + ")"

    def fit(self, x, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS, eps=DEFAULT_EPS):
        if self.name == "amuse":
            return amuse(x, self.lags[0], eps=eps)
        return sobi(x, self.lags, tol=tol, max_sweeps=max_sweeps, eps=eps)


@dataclass(frozen=True)
class BssSolution:
    method: BssMethod
    unmixing: np.ndarray
    whitening: WhiteningResult
    rotation: np.ndarray
    lags: tuple
    pseudo_eigenvalues: np.ndarray  # (p, n_lags)
    diagnostics: np.ndarray
    sources: np.ndarray
    sweeps: int = 0

    @property
    def p(self):
        return self.unmixing.shape[0]

    @property
    def mixing(self):
        """Estimated mixing matrix ``cov_sqrt @ rotation``; inverse of ``unmixing``."""
        return self.whitening.cov_sqrt @ self.rotation


@dataclass(frozen=True)
class NoiseStatistic:
    d: int
    value: float


@dataclass
class BatchFit:
    """Separation of a stack of centered series (internal workhorse)."""

    inv_sqrt: np.ndarray
    sqrt: np.ndarray
    rotation: np.ndarray
    pseudo_eigenvalues: np.ndarray  # (B, p, L)
    diagnostics: np.ndarray  # (B, p)
    singular: np.ndarray
    converged: np.ndarray
    sweeps: np.ndarray = None
    rotated: np.ndarray = field(default=None, repr=False)

    @property
    def ok(self):
        return self.converged & ~self.singular


def whitened_lag_covariances(xc, lags, eps=DEFAULT_EPS):
    """Lagged autocovariances of the whitened series for a stack of centered data.

    Returns ``(S, inv_sqrt, sqrt, singular)`` with ``S`` of shape ``(B, L, p, p)``.
    """
    inv_sqrt, sqrt, singular = sqrt_pair_unchecked(autocov_centered(xc, 0), eps)
    s = np.stack([inv_sqrt @ autocov_centered(xc, tau) @ inv_sqrt for tau in lags], axis=1)
    return s, inv_sqrt, sqrt, singular


def rotate_batch(s, method, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS):
    """Diagonalize whitened lag covariances and order components.

    Components are sorted by descending ``sum_tau lambda_tau**2``; ties keep
    the original column order.
    """
    nb = s.shape[0]
    if method.name == "amuse":
        w, u = np.linalg.eigh(s[:, 0])
        lam = w[:, :, None]
        converged = np.ones(nb, dtype=bool)
        sweeps = np.zeros(nb, dtype=np.int64)
        rotated = None
    else:
        u, rotated, converged, sweeps = jacobi_batch(s, tol, max_sweeps)
        lam = np.swapaxes(np.diagonal(rotated, axis1=-2, axis2=-1), 1, 2)
    diag = np.sum(lam * lam, axis=-1)
    order = np.argsort(-diag, axis=1, kind="stable")
    diag = np.take_along_axis(diag, order, axis=1)
    lam = np.take_along_axis(lam, order[:, :, None], axis=1)
    u = fix_signs(np.take_along_axis(u, order[:, None, :], axis=2))
    return u, lam, diag, converged, sweeps, rotated


def fit_batch(xc, method, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS, eps=DEFAULT_EPS):
    """Fit ``method`` to every series of a ``(B, T, p)`` stack of centered data."""
    s, inv_sqrt, sqrt, singular = whitened_lag_covariances(xc, method.lags, eps)
    u, lam, diag, converged, sweeps, rotated = rotate_batch(s, method, tol, max_sweeps)
    return BatchFit(inv_sqrt, sqrt, u, lam, diag, singular, converged, sweeps, rotated)


def _check_lags(lags, t):
    for tau in lags:
        check_lag(tau, t)


def _solve(x, method, tol, max_sweeps, eps):
    x = as_series(x)
    _check_lags(method.lags, x.shape[0])
    xc, mean = center(x)
    fit = fit_batch(xc[None], method, tol, max_sweeps, eps)
    if fit.singular[0]:
        raise SingularCovarianceError(
            f"sample covariance is singular (eigenvalue ratio <= {eps:g})"
        )
    rotation = fit.rotation[0]
    if not fit.converged[0]:
        raise ConvergenceFailure(
            f"SOBI joint diagonalization did not converge in {max_sweeps} sweeps",
            off_diagonal=off_diagonal_mass(fit.rotated[0]),
            rotation=rotation,
            sweeps=int(fit.sweeps[0]),
        )
    inv_sqrt, sqrt = fit.inv_sqrt[0], fit.sqrt[0]
    unmixing = rotation.T @ inv_sqrt
    whitening = WhiteningResult(xc @ inv_sqrt, mean, inv_sqrt, sqrt)
    return BssSolution(
        method=method,
        unmixing=unmixing,
        whitening=whitening,
        rotation=rotation,
        lags=method.lags,
        pseudo_eigenvalues=fit.pseudo_eigenvalues[0],
        diagnostics=fit.diagnostics[0],
        sources=xc @ unmixing.T,
        sweeps=int(fit.sweeps[0]),
    )


def amuse(x, tau0=DEFAULT_AMUSE_LAG, eps=DEFAULT_EPS):
    """AMUSE: eigendecomposition of one lagged autocovariance of the whitened data.

    Parameters
    ----------
    x : array_like, shape (T, p)
    tau0 : int
        The lag, ``1 <= tau0 <= T - 2``.

    Returns
    -------
    BssSolution
        Components ordered by decreasing squared eigenvalue.
    """
    return _solve(x, BssMethod.amuse(tau0), DEFAULT_TOL, DEFAULT_MAX_SWEEPS, eps)


def sobi(x, lags=DEFAULT_LAGS, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS, eps=DEFAULT_EPS):
    """SOBI: joint diagonalization of several whitened lag autocovariances.

    Components are ordered by decreasing sum over lags of squared
    pseudo-eigenvalues. Raises ConvergenceFailure if the Jacobi sweeps do
    not converge.
    """
    return _solve(x, BssMethod.sobi(lags), tol, max_sweeps, eps)


def running_means(diagnostics):
    """``m[d]`` = mean of ``diagnostics[d:]`` for ``d = 0, ..., p - 1``."""
    diag = np.asarray(diagnostics, dtype=float)
    tail = np.cumsum(diag[::-1])[::-1]
    return tail / np.arange(diag.size, 0, -1)


def noise_statistic(solution, d):
    """Mean of the last ``p - d`` component diagnostics.

    ``solution`` is a BssSolution or a descending diagnostics vector.
    """
    diag = solution.diagnostics if isinstance(solution, BssSolution) else solution
    diag = np.asarray(diag, dtype=float)
    p = diag.size
    if int(d) != d or not 0 <= d <= p - 1:
        raise InvalidDimensionError(f"d must be in [0, {p - 1}], got {d}")
    d = int(d)
    return NoiseStatistic(d=d, value=float(np.mean(diag[d:])))
