"""Monte-Carlo rejection-rate studies and the sound-separation experiment.

Each repetition of a study cell owns its data seed
``derive_seed(seed, setting, T, rep)`` and each test its own seed
``derive_seed(seed, setting, T, rep, method_index, strategy_index, d)``;
the reported numbers therefore do not depend on how repetitions are
scheduled across threads.
"""

from __future__ import annotations

import configparser
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bootstrap import BootstrapStrategy, _resolve_threads, derive_seed, test_dimension
from .bss import DEFAULT_LAGS, BssMethod
from .errors import InvalidDimensionError, InvalidInputError, NumericalError
from .estimation import backward_rule, bisect_rule, forward_rule, parse_estimator
from .generators import DEFAULT_BURNIN, SETTINGS, gen_mixing, gen_setting, gen_synthetic_signals
from .series import as_series

log = logging.getLogger(__name__)

ALL_STRATEGIES = tuple(BootstrapStrategy)
DEFAULT_METHODS = (BssMethod.amuse(1), BssMethod.sobi(DEFAULT_LAGS))


@dataclass(frozen=True)
class StudyConfig:
    settings: tuple = (1,)
    T_values: tuple = (200, 500)
    methods: tuple = DEFAULT_METHODS
    strategies: tuple = ALL_STRATEGIES
    R: int = 200
    repetitions: int = 500
    alpha: float = 0.05
    hypotheses: tuple = (1, 2, 3)
    seed: int = 0
    burnin: int = DEFAULT_BURNIN
    t_unit_variance: bool = True

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(int(s) for s in self.settings))
        object.__setattr__(self, "T_values", tuple(int(t) for t in self.T_values))
        object.__setattr__(self, "hypotheses", tuple(int(h) for h in self.hypotheses))
        object.__setattr__(
            self, "strategies", tuple(BootstrapStrategy.parse(s) for s in self.strategies)
        )
        if self.repetitions < 1 or self.R < 1:
            raise InvalidInputError("repetitions and R must be at least 1")
        if not 0 < self.alpha < 1:
            raise InvalidInputError("alpha must be in (0, 1)")
        if any(s not in SETTINGS for s in self.settings):
            raise InvalidInputError(f"settings must be among {SETTINGS}")
        if any(not 0 <= h <= 4 for h in self.hypotheses):
            raise InvalidInputError("hypotheses must be in 0..4 (p = 5)")
        if any(t <= 5 + max(max(m.lags) for m in self.methods) for t in self.T_values):
            raise InvalidInputError("series length too short for the lag sets")
        if not (self.settings and self.T_values and self.methods and self.strategies
                and self.hypotheses):
            raise InvalidInputError("study needs at least one value per factor")

    @classmethod
    def full_scale(cls, **overrides):
        """Full-size study: 2000 repetitions, T up to 5000, all settings."""
        base = dict(settings=SETTINGS, T_values=(200, 500, 2000, 5000), repetitions=2000)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_file(cls, path):
        """Read a config from a JSON file or an INI file with a ``[study]`` section.

        Keys: settings, T, methods, lags, strategies, R, repetitions, alpha,
        hypotheses, seed, burnin, t_unit_variance, full_scale. List values
        are comma separated in INI files; ranges like ``1..12`` are allowed.
        """
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            parser = configparser.ConfigParser()
            parser.read_string(text)
            if not parser.has_section("study"):
                raise InvalidInputError(f"{path}: missing [study] section")
            raw = dict(parser["study"])
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw):
        raw = {str(k).lower(): v for k, v in raw.items()}
        kwargs = {}
        if "settings" in raw:
            kwargs["settings"] = parse_int_list(raw["settings"])
        if "t" in raw:
            kwargs["T_values"] = parse_int_list(raw["t"])
        lags = parse_int_list(raw["lags"]) if "lags" in raw else DEFAULT_LAGS
        amuse_lag = int(raw.get("amuse_lag", 1))
        if "methods" in raw:
            names = _split(raw["methods"])
            methods = []
            for name in names:
                name = name.lower()
                if name == "amuse":
                    methods.append(BssMethod.amuse(amuse_lag))
                elif name == "sobi":
                    methods.append(BssMethod.sobi(lags))
                else:
                    raise InvalidInputError(f"unknown method {name!r}")
            kwargs["methods"] = tuple(methods)
        elif "lags" in raw or "amuse_lag" in raw:
            kwargs["methods"] = (BssMethod.amuse(amuse_lag), BssMethod.sobi(lags))
        if "strategies" in raw:
            kwargs["strategies"] = tuple(_split(raw["strategies"]))
        for key, conv in (("r", int), ("repetitions", int), ("alpha", float), ("seed", int),
                          ("burnin", int)):
            if key in raw:
                kwargs["R" if key == "r" else key] = conv(raw[key])
        if "hypotheses" in raw:
            kwargs["hypotheses"] = parse_int_list(raw["hypotheses"])
        if "t_unit_variance" in raw:
            kwargs["t_unit_variance"] = _as_bool(raw["t_unit_variance"])
        if _as_bool(raw.get("full_scale", False)):
            return cls.full_scale(**kwargs)
        return cls(**kwargs)


def _split(value):
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _as_bool(value):
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def parse_int_list(value):
    """Parse ``"1..3,7"`` or ``[1, 2]`` into a tuple of ints."""
    if isinstance(value, int):
        return (value,)
    out = []
    for part in _split(value):
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise InvalidInputError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return tuple(out)


@dataclass
class StudyCell:
    setting: int
    T: int
    strategy: BootstrapStrategy
    method: BssMethod
    d: int
    p_values: list = field(default_factory=list)
    warnings: int = 0
    aborted: int = 0
    alpha: float = 0.05

    @property
    def n(self):
        return len(self.p_values)

    @property
    def rejections(self):
        return sum(pv <= self.alpha for pv in self.p_values)

    @property
    def rate(self):
        return self.rejections / self.n if self.n else math.nan

    @property
    def std_error(self):
        r = self.rate
        return math.sqrt(r * (1 - r) / self.n) if self.n else math.nan

    def to_dict(self):
        return {
            "setting": self.setting,
            "T": self.T,
            "strategy": self.strategy.value,
            "method": self.method.label,
            "hypothesis": self.d,
            "rate": self.rate,
            "std_error": self.std_error,
            "rejections": self.rejections,
            "repetitions": self.n,
            "aborted": self.aborted,
            "warnings": self.warnings,
            "p_values": list(self.p_values),
        }


@dataclass
class StudyResult:
    config: StudyConfig
    cells: dict  # (setting, T, strategy, method_index, d) -> StudyCell

    def cell(self, setting, T, strategy, method, d):
        strategy = BootstrapStrategy.parse(strategy)
        index = method if isinstance(method, int) else self.config.methods.index(method)
        return self.cells[(setting, T, strategy, index, d)]

    def rate(self, setting, T, strategy, method, d):
        return self.cell(setting, T, strategy, method, d).rate


def _run_repetition(config, setting, T, rep):
    rng = np.random.default_rng(derive_seed(config.seed, setting, T, rep))
    x, _, _ = gen_setting(setting, T, rng, config.burnin, config.t_unit_variance)
    out = {}
    for mi, method in enumerate(config.methods):
        try:
            solution = method.fit(x)
        except NumericalError as exc:
            log.warning("setting %d T=%d rep %d: %s fit failed: %s", setting, T, rep,
                        method.label, exc)
            for si in range(len(config.strategies)):
                for d in config.hypotheses:
                    out[(mi, si, d)] = None
            continue
        for si, strategy in enumerate(config.strategies):
            for d in config.hypotheses:
                seed = derive_seed(config.seed, setting, T, rep, mi, si, d)
                try:
                    result = test_dimension(x, d, strategy, config.R, method, seed=seed,
                                            solution=solution)
                except NumericalError as exc:
                    log.warning("setting %d T=%d rep %d aborted: %s", setting, T, rep, exc)
                    out[(mi, si, d)] = None
                else:
                    out[(mi, si, d)] = (result.p_value, result.warnings)
    return out


def run_rejection_study(config, threads=1, progress=None):
    """Rejection rates of ``H_{0,d}`` at level ``alpha`` for every study cell.

    Parameters
    ----------
    config : StudyConfig
    threads : int
        Repetitions run concurrently on this many threads; results do not
        depend on it.
    progress : callable, optional
        Called with ``(done, total)`` after each repetition.

    Returns
    -------
    StudyResult
    """
    cells = {}
    for setting in config.settings:
        for T in config.T_values:
            for si, strategy in enumerate(config.strategies):
                for mi, method in enumerate(config.methods):
                    for d in config.hypotheses:
                        cells[(setting, T, strategy, mi, d)] = StudyCell(
                            setting, T, strategy, method, d, alpha=config.alpha
                        )
    jobs = [(s, T, rep) for s in config.settings for T in config.T_values
            for rep in range(config.repetitions)]

    def work(job):
        return job, _run_repetition(config, *job)

    n_threads = min(_resolve_threads(threads), len(jobs))
    pool = ThreadPoolExecutor(n_threads) if n_threads > 1 else None
    try:
        results = pool.map(work, jobs) if pool else map(work, jobs)
        for done, ((setting, T, _), out) in enumerate(results, 1):
            for (mi, si, d), value in out.items():
                cell = cells[(setting, T, config.strategies[si], mi, d)]
                if value is None:
                    cell.aborted += 1
                else:
                    cell.p_values.append(value[0])
                    cell.warnings += value[1]
            if progress is not None:
                progress(done, len(jobs))
    finally:
        if pool is not None:
            pool.shutdown()
    return StudyResult(config, cells)


@dataclass
class SoundResult:
    estimates: dict  # (estimator, method label, strategy value) -> d_hat
    traces: dict  # same keys -> [(d, p_value), ...]
    mixing: np.ndarray = field(repr=False, default=None)

    def all_equal(self, value):
        return all(v == value for v in self.estimates.values())


def sound_experiment(
    signals=None,
    noise_channels=17,
    seed=0,
    R=200,
    alpha=0.05,
    strategies=ALL_STRATEGIES,
    methods=DEFAULT_METHODS,
    estimators=("forward", "backward"),
    T=10_000,
    threads=1,
):
    """Dimension estimates for signals hidden among Gaussian noise channels.

    The latent series ``(signals, noise)`` are mixed by a random Gaussian
    square matrix and every estimator/method/strategy combination is run.
    Without ``signals``, three synthetic ARMA series of length ``T`` are used.
    A hypothesis is tested once per method and strategy and shared between
    the estimators.
    """
    rng = np.random.default_rng(derive_seed(seed, 0))
    if signals is None:
        signals = gen_synthetic_signals(T, rng)
    signals = as_series(signals, "signals")
    if noise_channels < 1:
        raise InvalidDimensionError("need at least one noise channel (p - d >= 1)")
    signals = (signals - signals.mean(axis=0)) / signals.std(axis=0)
    t, k = signals.shape
    z = np.column_stack([signals, rng.standard_normal((t, noise_channels))])
    p = z.shape[1]
    omega = gen_mixing(p, rng)
    x = z @ omega.T
    rules = {"forward": forward_rule, "backward": backward_rule, "divide-conquer": bisect_rule}
    estimators = [parse_estimator(e) for e in estimators]
    estimates, traces = {}, {}
    for mi, method in enumerate(methods):
        solution = method.fit(x)
        for si, strategy in enumerate(strategies):
            strategy = BootstrapStrategy.parse(strategy)
            cache = {}

            def pvalue(d):
                if d not in cache:
                    cache[d] = test_dimension(
                        x, d, strategy, R, method, seed=derive_seed(seed, 1, mi, si, d),
                        threads=threads, solution=solution,
                    ).p_value
                return cache[d]

            for name in estimators:
                d_hat, trace = rules[name](pvalue, p, alpha)
                key = (name, method.label, strategy.value)
                estimates[key] = d_hat
                traces[key] = trace
                log.info("%s %s %s: d_hat=%d", *key, d_hat)
    return SoundResult(estimates, traces, omega)


def with_overrides(config, **kwargs):
    return replace(config, **{k: v for k, v in kwargs.items() if v is not None})
