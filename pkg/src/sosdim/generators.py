"""Random generators for ARMA signals, noise models and mixing matrices.

Every generator draws only from the ``numpy.random.Generator`` it is given,
so output is a pure function of the generator state.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidModelError

# the two signals of the simulation settings
ARMA21_PHI = (0.5, 0.2)
ARMA21_THETA = (0.5,)
MA5_THETA = (-0.4, 0.6, -0.3, 0.1, -0.3)

DEFAULT_BURNIN = 1000
N_SIGNALS = 2
N_NOISE = 3
SETTINGS = (1, 2, 3)


def _ar_poly_roots(phi):
    phi = np.asarray(phi, dtype=float)
    if phi.size == 0 or not np.any(phi):
        return np.array([])
    # 1 - phi_1 z - ... - phi_p z^p, highest degree first for np.roots
    coeffs = np.concatenate([-phi[::-1], [1.0]])
    coeffs = np.trim_zeros(coeffs, "f")
    return np.roots(coeffs)


def check_stationary(phi):
    roots = _ar_poly_roots(phi)
    if roots.size and np.min(np.abs(roots)) <= 1.0 + 1e-12:
        raise InvalidModelError(f"AR polynomial with coefficients {tuple(phi)} is not stationary")
    return roots


def arma_acovf(phi, theta, nlags=0, sigma2=1.0):
    """Theoretical autocovariances ``gamma(0..nlags)`` of a stationary ARMA process.

    Uses the MA(infinity) weights ``psi_j``, truncated once the AR part has
    decayed below double precision: ``gamma(h) = sigma2 * sum_j psi_j psi_{j+h}``.
    """
    roots = check_stationary(phi)
    theta = np.asarray(theta, dtype=float)
    q = theta.size
    if roots.size:
        decay = 1.0 / np.min(np.abs(roots))
        n_tail = int(math.ceil(math.log(1e-18) / math.log(decay))) if decay > 0 else 0
    else:
        n_tail = 0
    n = q + 1 + nlags + min(n_tail, 10**6)
    impulse = np.zeros(n)
    impulse[0] = 1.0
    psi = lfilter(np.r_[1.0, theta], np.r_[1.0, -np.asarray(phi, dtype=float)], impulse)
    return sigma2 * np.array([psi[: n - h] @ psi[h:] for h in range(nlags + 1)])


def gen_arma(T, phi=(), theta=(), rng=None, burnin=DEFAULT_BURNIN, unit_variance=True):
    """Simulate an ARMA(p, q) series with standard normal innovations.

    ``x_t = sum_i phi_i x_{t-i} + e_t + sum_j theta_j e_{t-j}``. The first
    ``burnin`` values are discarded. With ``unit_variance`` the series is
    divided by its theoretical standard deviation.
    """
    if rng is None:
        rng = np.random.default_rng()
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    check_stationary(phi)
    if burnin < 0:
        raise InvalidModelError("burnin must be non-negative")
    e = rng.standard_normal(T + burnin)
    x = lfilter(np.r_[1.0, theta], np.r_[1.0, -phi], e)[burnin:]
    if unit_variance:
        x = x / math.sqrt(arma_acovf(phi, theta)[0])
    return x


def gen_noise(setting_id, T, rng, t_unit_variance=True):
    """Three serially independent noise channels of simulation setting 1, 2 or 3.

    1: iid N(0, 1). 2: iid rows of a spherical 3-variate t_5.
    3: independent N(0, 1), t_5 and U(-sqrt 3, sqrt 3) columns.
    t_5 variables are scaled by sqrt(3/5) to unit variance unless
    ``t_unit_variance`` is False.
    """
    t_scale = math.sqrt(3.0 / 5.0) if t_unit_variance else 1.0
    if setting_id == 1:
        return rng.standard_normal((T, N_NOISE))
    if setting_id == 2:
        g = rng.standard_normal((T, N_NOISE))
        w = rng.chisquare(5, size=T)
        return t_scale * g / np.sqrt(w / 5.0)[:, None]
    if setting_id == 3:
        out = np.empty((T, N_NOISE))
        out[:, 0] = rng.standard_normal(T)
        out[:, 1] = t_scale * rng.standard_t(5, size=T)
        out[:, 2] = rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=T)
        return out
    raise InvalidModelError(f"unknown simulation setting {setting_id!r}")


def gen_mixing(p, rng, max_cond=1e8):
    """Random ``p x p`` mixing matrix with iid N(0, 1) entries.

    Draws with condition number above ``max_cond`` are rejected and redrawn.
    """
    while True:
        omega = rng.standard_normal((p, p))
        if np.linalg.cond(omega) <= max_cond:
            return omega


def gen_latent(setting_id, T, rng, burnin=DEFAULT_BURNIN, t_unit_variance=True):
    """Latent ``(T, 5)`` series: ARMA(2,1), MA(5), then three noise channels."""
    if setting_id not in SETTINGS:
        raise InvalidModelError(f"unknown simulation setting {setting_id!r}")
    z1 = gen_arma(T, ARMA21_PHI, ARMA21_THETA, rng, burnin)
    z2 = gen_arma(T, (), MA5_THETA, rng, burnin)
    noise = gen_noise(setting_id, T, rng, t_unit_variance)
    return np.column_stack([z1, z2, noise])


def gen_setting(setting_id, T, rng, burnin=DEFAULT_BURNIN, t_unit_variance=True):
    """Observed data ``x_t = Omega z_t`` of a simulation setting.

    Returns ``(x, z, omega)``; the true signal dimension is 2.
    """
    z = gen_latent(setting_id, T, rng, burnin, t_unit_variance)
    omega = gen_mixing(z.shape[1], rng)
    return z @ omega.T, z, omega


# three ARMA sources used when no recorded sound is at hand
SYNTHETIC_SOUND_SIGNALS = (
    ((0.8,), ()),
    ((-0.6,), ()),
    ((), (0.5, 0.5)),
)


def gen_synthetic_signals(T, rng, burnin=DEFAULT_BURNIN):
    """Three unit-variance ARMA series standing in for the sound recordings."""
    return np.column_stack(
        [gen_arma(T, phi, theta, rng, burnin) for phi, theta in SYNTHETIC_SOUND_SIGNALS]
    )
