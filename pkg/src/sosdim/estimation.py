"""Sequential estimation of the signal dimension from bootstrap tests.

The decision rules (``forward_rule``, ``backward_rule``, ``bisect_rule``)
only see a callable ``d -> p-value`` and can be used with any test. No
multiple-testing correction is applied: ``alpha`` is the per-test level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bootstrap import BootstrapStrategy, derive_seed, test_dimension
from .bss import BssMethod
from .errors import InvalidInputError
from .linalg import DEFAULT_EPS, DEFAULT_MAX_SWEEPS, DEFAULT_TOL
from .series import as_series

ESTIMATORS = ("forward", "backward", "divide-conquer")
_ESTIMATOR_ALIASES = {"bisect": "divide-conquer", "divide_conquer": "divide-conquer",
                      "forwards": "forward", "backwards": "backward"}


@dataclass
class DimensionEstimate:
    d_hat: int
    alpha: float
    trace: list  # (d, p_value) in the order the tests were run
    strategy_name: str
    tests: list = field(default_factory=list, repr=False)

    def to_dict(self):
        out = {
            "type": "DimensionEstimate",
            "d_hat": self.d_hat,
            "alpha": self.alpha,
            "estimator": self.strategy_name,
            "trace": [{"d": d, "p_value": pv} for d, pv in self.trace],
        }
        if self.tests:
            out["tests"] = [t.to_dict() for t in self.tests]
        return out


def forward_rule(pvalue, p, alpha):
    """First ``d`` in 0, 1, ... whose test is not rejected; ``p`` if all are."""
    trace = []
    for d in range(p):
        pv = pvalue(d)
        trace.append((d, pv))
        if pv > alpha:
            return d, trace
    return p, trace


def backward_rule(pvalue, p, alpha):
    """Scan ``d = p-1, p-2, ...``; the first rejection at ``k`` gives ``k + 1``."""
    trace = []
    for d in range(p - 1, -1, -1):
        pv = pvalue(d)
        trace.append((d, pv))
        if pv <= alpha:
            return d + 1, trace
    return 0, trace


def bisect_rule(pvalue, p, alpha):
    """Bisection for the smallest non-rejected ``d``.

    Assumes rejection is monotone: a rejected ``H_{0,d}`` implies all smaller
    ``d`` are rejected too. Runs at most ``ceil(log2(p + 1))`` tests.
    """
    trace = []
    lo, hi = 0, p
    while lo < hi:
        mid = (lo + hi) // 2
        pv = pvalue(mid)
        trace.append((mid, pv))
        if pv <= alpha:
            lo = mid + 1
        else:
            hi = mid
    return lo, trace


_RULES = {"forward": forward_rule, "backward": backward_rule, "divide-conquer": bisect_rule}


def parse_estimator(name):
    key = str(name).strip().lower()
    key = _ESTIMATOR_ALIASES.get(key, key)
    if key not in _RULES:
        raise InvalidInputError(f"unknown estimator {name!r}")
    return key


def estimate_dimension(
    x,
    estimator="forward",
    strategy=BootstrapStrategy.NONPAR_JOINT_ROWS,
    R=200,
    alpha=0.05,
    method=None,
    seed=0,
    threads=1,
    solution=None,
    tol=DEFAULT_TOL,
    max_sweeps=DEFAULT_MAX_SWEEPS,
    eps=DEFAULT_EPS,
):
    """Estimate the signal dimension with one of the sequential rules.

    The test of ``H_{0,d}`` uses the seed ``derive_seed(seed, d)``, so a
    hypothesis gets the same bootstrap draws whichever rule asks for it.
    """
    estimator = parse_estimator(estimator)
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must be in (0, 1), got {alpha}")
    x = as_series(x)
    p = x.shape[1]
    method = BssMethod.sobi() if method is None else method
    if solution is None:
        solution = method.fit(x, tol=tol, max_sweeps=max_sweeps, eps=eps)
    tests = []

    def pvalue(d):
        result = test_dimension(
            x, d, strategy, R, method, seed=derive_seed(seed, d), threads=threads,
            solution=solution, tol=tol, max_sweeps=max_sweeps, eps=eps,
        )
        tests.append(result)
        return result.p_value

    d_hat, trace = _RULES[estimator](pvalue, p, alpha)
    return DimensionEstimate(d_hat, alpha, trace, estimator, tests)


def estimate_forward(x, strategy=BootstrapStrategy.NONPAR_JOINT_ROWS, R=200, alpha=0.05,
                     method=None, seed=0, **kwargs):
    return estimate_dimension(x, "forward", strategy, R, alpha, method, seed, **kwargs)


def estimate_backward(x, strategy=BootstrapStrategy.NONPAR_JOINT_ROWS, R=200, alpha=0.05,
                      method=None, seed=0, **kwargs):
    return estimate_dimension(x, "backward", strategy, R, alpha, method, seed, **kwargs)


def estimate_divide_conquer(x, strategy=BootstrapStrategy.NONPAR_JOINT_ROWS, R=200, alpha=0.05,
                            method=None, seed=0, **kwargs):
    return estimate_dimension(x, "divide-conquer", strategy, R, alpha, method, seed, **kwargs)
