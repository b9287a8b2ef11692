"""Centering, sample autocovariances and whitening of multivariate series.

A series is a ``(T, p)`` float array: rows are time points, columns are
channels. Batched helpers take ``(B, T, p)`` stacks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidLagError
from .linalg import DEFAULT_EPS, sqrt_pair_batch, symmetrize


def as_series(x, name="X"):
    """Validate and convert to a ``(T, p)`` float array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InvalidInputError(f"{name} must be a (T, p) matrix, got shape {x.shape}")
    t, p = x.shape
    if t < 2 or p < 1:
        raise InvalidInputError(f"{name} needs T >= 2 and p >= 1, got {x.shape}")
    if t <= p:
        raise InvalidInputError(f"{name} needs more time points than channels (T={t}, p={p})")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} has non-finite values")
    return x


def center(x):
    """Subtract column means. Returns ``(centered, mean)``."""
    x = as_series(x)
    mean = x.mean(axis=0)
    return x - mean, mean


def check_lag(tau, t):
    if int(tau) != tau or tau < 0:
        raise InvalidLagError(f"lag must be a non-negative integer, got {tau!r}")
    if tau > t - 2:
        raise InvalidLagError(f"lag {tau} too large for series of length {t}")
    return int(tau)


def autocov_centered(xc, tau):
    """Symmetrized lag-``tau`` autocovariance of already centered data.

    Accepts ``(T, p)`` or a ``(B, T, p)`` stack. The divisor is ``T - tau``.
    """
    t = xc.shape[-2]
    head = np.swapaxes(xc[..., : t - tau, :], -1, -2)
    a = head @ xc[..., tau:, :]
    return symmetrize(a / (t - tau))


def autocov(x, tau):
    """Sample lag-``tau`` autocovariance matrix, ``tau = 0`` is the covariance."""
    x = as_series(x)
    tau = check_lag(tau, x.shape[0])
    xc, _ = center(x)
    return autocov_centered(xc, tau)


@dataclass(frozen=True)
class WhiteningResult:
    standardized: np.ndarray
    mean: np.ndarray
    cov_inv_sqrt: np.ndarray
    cov_sqrt: np.ndarray


def whiten(x, eps=DEFAULT_EPS):
    """Standardize ``x`` by the symmetric inverse root of its sample covariance.

    Raises SingularCovarianceError if the covariance is (numerically) singular.
    """
    xc, mean = center(x)
    inv_sqrt, sqrt = sqrt_pair_batch(autocov_centered(xc, 0), eps)
    return WhiteningResult(
        standardized=xc @ inv_sqrt,
        mean=mean,
        cov_inv_sqrt=inv_sqrt,
        cov_sqrt=sqrt,
    )
