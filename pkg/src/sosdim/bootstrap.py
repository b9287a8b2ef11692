"""Bootstrap tests for the dimension of the white-noise subspace.

Under ``H_{0,d}`` the last ``p - d`` estimated sources are white noise.
The signal block is kept fixed, the noise block is resampled by one of four
strategies, the data are mapped back to the observed scale and the whole
estimator is refitted; the p-value compares the refitted running-mean
statistics with the observed one.

Seeding
-------
Replicate ``r`` (retry ``a``) draws from
``default_rng(SeedSequence(seed, spawn_key=(r, a)))``, so every replicate
depends only on ``(seed, r)`` and the data, never on scheduling.
"""

from __future__ import annotations

import enum
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bss import BssMethod, BssSolution, fit_batch, noise_statistic, rotate_batch, whitened_lag_covariances
from .errors import ConvergenceFailure, InvalidDimensionError, InvalidInputError
from .linalg import DEFAULT_EPS, DEFAULT_MAX_SWEEPS, DEFAULT_TOL
from .series import as_series, check_lag

log = logging.getLogger(__name__)

MAX_RETRIES = 3
# floats per chunk of replicate data held in memory at once
_CHUNK_FLOATS = 4_000_000


class BootstrapStrategy(enum.Enum):
    PARAMETRIC = "parametric"
    NONPAR_POOLED = "np1"
    NONPAR_COMPONENTWISE = "np2"
    NONPAR_JOINT_ROWS = "np3"

    @property
    def label(self):
        return _LABELS[self]

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-").replace(" ", "-")
        try:
            return _ALIASES[key]
        except KeyError:
            raise InvalidInputError(f"unknown bootstrap strategy {value!r}") from None


_LABELS = {
    BootstrapStrategy.PARAMETRIC: "parametric",
    BootstrapStrategy.NONPAR_POOLED: "non-parametric I",
    BootstrapStrategy.NONPAR_COMPONENTWISE: "non-parametric II",
    BootstrapStrategy.NONPAR_JOINT_ROWS: "non-parametric III",
}
_ALIASES = {}
for _s in BootstrapStrategy:
    _ALIASES[_s.value] = _s
    _ALIASES[_s.name.lower().replace("_", "-")] = _s
    _ALIASES[_s.label.lower().replace(" ", "-")] = _s
_ALIASES.update({"p": BootstrapStrategy.PARAMETRIC, "np-i": BootstrapStrategy.NONPAR_POOLED,
                 "np-ii": BootstrapStrategy.NONPAR_COMPONENTWISE,
                 "np-iii": BootstrapStrategy.NONPAR_JOINT_ROWS})


def replicate_rng(seed, r, attempt=0):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(r), int(attempt))))


def derive_seed(seed, *keys):
    """Child 63-bit seed of ``seed`` for the integer path ``keys``."""
    state = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)).generate_state(
        2, np.uint32
    )
    return (int(state[0]) << 31) ^ int(state[1])


def resample_noise(z_noise, strategy, rng):
    """Draw a bootstrap sample of the hypothetical noise block.

    Parameters
    ----------
    z_noise : ndarray, shape (T, k)
        The last ``k = p - d`` estimated sources.
    strategy : BootstrapStrategy
    rng : numpy.random.Generator

    Returns
    -------
    ndarray, shape (T, k)
        parametric: iid N(0, 1); np1: iid draws from all ``T k`` entries;
        np2: column ``i`` drawn from column ``i``; np3: whole rows drawn.
    """
    z_noise = np.asarray(z_noise, dtype=float)
    if z_noise.ndim != 2 or z_noise.shape[1] < 1:
        raise InvalidDimensionError("noise block is empty")
    t, k = z_noise.shape
    if t < 2:
        raise InvalidInputError("noise block needs at least two time points")
    strategy = BootstrapStrategy.parse(strategy)
    if strategy is BootstrapStrategy.PARAMETRIC:
        return rng.standard_normal((t, k))
    if strategy is BootstrapStrategy.NONPAR_POOLED:
        # with k == 1 this consumes the generator exactly like np2
        return z_noise.ravel()[rng.integers(0, t * k, size=(t, k))]
    if strategy is BootstrapStrategy.NONPAR_COMPONENTWISE:
        return z_noise[rng.integers(0, t, size=(t, k)), np.arange(k)]
    return z_noise[rng.integers(0, t, size=t)]


def bootstrap_sources(sources, d, strategy, rng):
    """Sources with the first ``d`` columns kept and the rest resampled."""
    out = np.empty_like(sources)
    out[:, :d] = sources[:, :d]
    out[:, d:] = resample_noise(sources[:, d:], strategy, rng)
    return out


@dataclass(frozen=True)
class NoiseTest:
    d: int
    method: BssMethod
    strategy: BootstrapStrategy
    R: int
    m_observed: float
    m_star: np.ndarray
    p_value: float
    seed: int
    warnings: int = 0

    @property
    def exceed_count(self):
        return int(np.count_nonzero(self.m_star >= self.m_observed))

    def rejects(self, alpha):
        return self.p_value <= alpha

    def to_dict(self):
        return {
            "type": "NoiseTest",
            "d": self.d,
            "method": self.method.name,
            "lags": list(self.method.lags),
            "strategy": self.strategy.value,
            "R": self.R,
            "seed": self.seed,
            "m_observed": self.m_observed,
            "m_star": [float(v) for v in self.m_star],
            "exceed_count": self.exceed_count,
            "p_value": self.p_value,
            "warnings": self.warnings,
        }


def p_value(m_star, m_observed):
    m_star = np.asarray(m_star, dtype=float)
    return (int(np.count_nonzero(m_star >= m_observed)) + 1) / (m_star.size + 1)


def _chunk_size(t, p, R):
    return max(1, min(R, _CHUNK_FLOATS // (t * p)))


def _resolve_threads(threads):
    if threads is None or threads < 1:
        return os.cpu_count() or 1
    return int(threads)


def test_dimension(
    x,
    d,
    strategy=BootstrapStrategy.NONPAR_JOINT_ROWS,
    R=200,
    method=None,
    seed=0,
    threads=1,
    solution=None,
    tol=DEFAULT_TOL,
    max_sweeps=DEFAULT_MAX_SWEEPS,
    eps=DEFAULT_EPS,
):
    """Bootstrap test of ``H_{0,d}``: the last ``p - d`` latent series are white noise.

    Parameters
    ----------
    x : array_like, shape (T, p)
        Observed series.
    d : int
        Hypothetical signal dimension, ``0 <= d <= p - 1``.
    strategy : BootstrapStrategy or str
    R : int
        Number of bootstrap replicates.
    method : BssMethod, optional
        Defaults to SOBI with lags 1..12.
    seed : int
        Master seed; replicate streams are derived from ``(seed, r)``.
    threads : int
        Worker threads for building replicates. Output does not depend on it.
    solution : BssSolution, optional
        Precomputed fit of ``method`` on ``x`` (saves one fit when several
        hypotheses are tested on the same data).

    Returns
    -------
    NoiseTest
    """
    x = as_series(x)
    t, p = x.shape
    method = BssMethod.sobi() if method is None else method
    strategy = BootstrapStrategy.parse(strategy)
    if int(d) != d or not 0 <= d <= p - 1:
        raise InvalidDimensionError(f"d must be in [0, {p - 1}], got {d}")
    d = int(d)
    if int(R) != R or R < 1:
        raise InvalidInputError(f"R must be a positive integer, got {R}")
    R = int(R)
    for tau in method.lags:
        check_lag(tau, t)
    if solution is None:
        solution = method.fit(x, tol=tol, max_sweeps=max_sweeps, eps=eps)
    elif not isinstance(solution, BssSolution) or solution.method != method:
        raise InvalidInputError("solution was not produced by the requested method")
    m_observed = noise_statistic(solution, d).value

    sources = solution.sources
    back = solution.mixing.T

    def replicate_data(r, attempt=0):
        xs = bootstrap_sources(sources, d, strategy, replicate_rng(seed, r, attempt)) @ back
        return xs - xs.mean(axis=0)

    def build_chunk(bounds):
        lo, hi = bounds
        xc = np.stack([replicate_data(r) for r in range(lo, hi)])
        s, _, _, singular = whitened_lag_covariances(xc, method.lags, eps)
        return s, singular

    step = _chunk_size(t, p, R)
    chunks = [(lo, min(lo + step, R)) for lo in range(0, R, step)]
    n_threads = min(_resolve_threads(threads), len(chunks))
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            parts = list(pool.map(build_chunk, chunks))
    else:
        parts = [build_chunk(c) for c in chunks]
    s = np.concatenate([part[0] for part in parts])
    singular = np.concatenate([part[1] for part in parts])
    _, _, diag, converged, _, _ = rotate_batch(s, method, tol, max_sweeps)
    m_star = diag[:, d:].mean(axis=1)

    warnings = 0
    for r in np.flatnonzero(singular | ~converged):
        warnings += 1
        for attempt in range(1, MAX_RETRIES + 1):
            fit = fit_batch(replicate_data(r, attempt)[None], method, tol, max_sweeps, eps)
            if fit.ok[0]:
                m_star[r] = fit.diagnostics[0, d:].mean()
                break
            warnings += 1
        else:
            raise ConvergenceFailure(
                f"bootstrap replicate {r} failed after {MAX_RETRIES} retries"
            )
        log.warning("replicate %d refit failed; recomputed with a fresh stream", r)

    return NoiseTest(
        d=d,
        method=method,
        strategy=strategy,
        R=R,
        m_observed=m_observed,
        m_star=m_star,
        p_value=p_value(m_star, m_observed),
        seed=int(seed),
        warnings=warnings,
    )


test_dimension.__test__ = False
