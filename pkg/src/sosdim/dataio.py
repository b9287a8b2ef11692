"""Reading CSV/WAV data and serializing results as TSV or JSON."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .bootstrap import BootstrapStrategy, NoiseTest
from .bss import BssSolution
from .errors import InvalidInputError, ParseError, ReportIOError, UnsupportedFormatError
from .estimation import DimensionEstimate
from .series import as_series
from .study import SoundResult, StudyResult

FORMATS = ("tsv", "json")


def _parse_float(cell):
    try:
        value = float(cell)
    except ValueError:
        return None
    return value


def read_csv(path):
    """Read a comma separated numeric table as a ``(T, p)`` array.

    A first row with any non-numeric cell is taken as a header and skipped.
    Blank lines are ignored.

    Raises
    ------
    ParseError
        Ragged rows, non-numeric cells or ``T <= p``; the message names the line.
    """
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}") from exc
    rows = []
    width = None
    with handle:
        for lineno, row in enumerate(csv.reader(handle), 1):
            if not row or all(not cell.strip() for cell in row):
                continue
            values = [_parse_float(cell) for cell in row]
            if width is None and not rows and any(v is None for v in values):
                width = len(row)
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise ParseError(f"expected {width} columns, found {len(row)}", line=lineno)
            bad = [cell for cell, v in zip(row, values) if v is None]
            if bad:
                raise ParseError(f"non-numeric value {bad[0]!r}", line=lineno)
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no numeric rows")
    data = np.array(rows, dtype=float)
    t, p = data.shape
    if t <= p:
        raise ParseError(f"{path}: need more rows than columns (T={t}, p={p})")
    if not np.all(np.isfinite(data)):
        raise ParseError(f"{path}: non-finite values")
    return data


def write_csv(path, data, header=None):
    """Write a matrix with full double precision (round-trips exactly)."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    buf = io.StringIO()
    if header:
        buf.write(",".join(header) + "\n")
    for row in data:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    _write_text(path, buf.getvalue())


def read_wav(paths):
    """Read PCM WAV audio into a ``(T, p)`` array with values in [-1, 1].

    ``paths`` is one (possibly multichannel) file or a list of files whose
    channels are concatenated. Supports 16-bit integer PCM (scaled by
    1/32768) and 32-bit float.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    columns = []
    rate = None
    length = None
    for path in paths:
        try:
            sr, data = wavfile.read(str(path))
        except FileNotFoundError as exc:
            raise ReportIOError(f"cannot read {path}: {exc}") from exc
        except ValueError as exc:
            raise UnsupportedFormatError(f"{path}: {exc}") from exc
        if data.dtype == np.int16:
            data = data.astype(float) / 32768.0
        elif data.dtype == np.float32:
            data = data.astype(float)
        else:
            raise UnsupportedFormatError(
                f"{path}: only 16-bit PCM and 32-bit float are supported, got {data.dtype}"
            )
        data = data.reshape(data.shape[0], -1)
        if rate is not None and sr != rate:
            raise UnsupportedFormatError(f"{path}: sample rate {sr} differs from {rate}")
        if length is not None and data.shape[0] != length:
            raise UnsupportedFormatError(
                f"{path}: {data.shape[0]} samples, expected {length}"
            )
        rate, length = sr, data.shape[0]
        columns.append(data)
    if not columns:
        raise InvalidInputError("no WAV files given")
    return as_series(np.hstack(columns), "audio")


def read_series(paths):
    """Dispatch on file extension: one CSV file or one or more WAV files."""
    paths = [Path(p) for p in ([paths] if isinstance(paths, (str, Path)) else paths)]
    suffixes = {p.suffix.lower() for p in paths}
    if suffixes == {".wav"}:
        return read_wav(paths)
    if len(paths) == 1:
        return read_csv(paths[0])
    raise InvalidInputError("give either one CSV file or one or more WAV files")


def _write_text(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def _fmt3(value):
    return "NA" if value != value else f"{value:.3f}"


def _solution_dict(sol):
    return {
        "type": "BssSolution",
        "method": sol.method.name,
        "lags": list(sol.lags),
        "diagnostics": sol.diagnostics.tolist(),
        "pseudo_eigenvalues": sol.pseudo_eigenvalues.tolist(),
        "unmixing": sol.unmixing.tolist(),
        "rotation": sol.rotation.tolist(),
        "mean": sol.whitening.mean.tolist(),
        "cov_inv_sqrt": sol.whitening.cov_inv_sqrt.tolist(),
        "sweeps": sol.sweeps,
    }


def _study_dict(result):
    cfg = result.config
    return {
        "type": "StudyResult",
        "config": {
            "settings": list(cfg.settings),
            "T": list(cfg.T_values),
            "methods": [{"name": m.name, "lags": list(m.lags)} for m in cfg.methods],
            "strategies": [s.value for s in cfg.strategies],
            "R": cfg.R,
            "repetitions": cfg.repetitions,
            "alpha": cfg.alpha,
            "hypotheses": list(cfg.hypotheses),
            "seed": cfg.seed,
            "burnin": cfg.burnin,
            "t_unit_variance": cfg.t_unit_variance,
        },
        "cells": [cell.to_dict() for cell in result.cells.values()],
    }


def _study_tsv(result):
    cfg = result.config
    header = ["setting", "T", "strategy"]
    for method in cfg.methods:
        header += [f"{method.label}:H0,{d}" for d in cfg.hypotheses]
    lines = ["\t".join(header)]
    for setting in cfg.settings:
        for T in cfg.T_values:
            for strategy in cfg.strategies:
                row = [str(setting), str(T), strategy.label]
                for mi in range(len(cfg.methods)):
                    for d in cfg.hypotheses:
                        row.append(_fmt3(result.cells[(setting, T, strategy, mi, d)].rate))
                lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def _sound_tsv(result):
    strategies = sorted({k[2] for k in result.estimates}, key=lambda v: list(
        s.value for s in BootstrapStrategy).index(v))
    lines = ["\t".join(["estimator", "method"] + [BootstrapStrategy(s).label for s in strategies])]
    for estimator in dict.fromkeys(k[0] for k in result.estimates):
        for method in dict.fromkeys(k[1] for k in result.estimates):
            row = [estimator, method]
            row += [str(result.estimates.get((estimator, method, s), "NA")) for s in strategies]
            lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def format_report(result, fmt="json"):
    """Serialize a NoiseTest, DimensionEstimate, BssSolution, StudyResult or SoundResult."""
    if fmt not in FORMATS:
        raise InvalidInputError(f"unknown format {fmt!r}")
    if isinstance(result, NoiseTest):
        if fmt == "json":
            return json.dumps(result.to_dict(), indent=2) + "\n"
        row = result.to_dict()
        keys = ["d", "method", "lags", "strategy", "R", "seed", "m_observed", "exceed_count",
                "p_value", "warnings"]
        row["lags"] = ",".join(map(str, row["lags"]))
        return "\t".join(keys) + "\n" + "\t".join(repr(row[k]) if isinstance(row[k], float)
                                                   else str(row[k]) for k in keys) + "\n"
    if isinstance(result, DimensionEstimate):
        if fmt == "json":
            return json.dumps(result.to_dict(), indent=2) + "\n"
        lines = [f"# estimator={result.strategy_name} alpha={result.alpha} d_hat={result.d_hat}",
                 "d\tp_value\trejected"]
        lines += [f"{d}\t{pv!r}\t{int(pv <= result.alpha)}" for d, pv in result.trace]
        return "\n".join(lines) + "\n"
    if isinstance(result, BssSolution):
        if fmt == "json":
            return json.dumps(_solution_dict(result), indent=2) + "\n"
        lines = ["component\tdiagnostic\t" + "\t".join(f"lambda_{t}" for t in result.lags)]
        for i, (dg, lam) in enumerate(zip(result.diagnostics, result.pseudo_eigenvalues), 1):
            lines.append(f"{i}\t{dg!r}\t" + "\t".join(repr(float(v)) for v in lam))
        return "\n".join(lines) + "\n"
    if isinstance(result, StudyResult):
        if fmt == "json":
            return json.dumps(_study_dict(result), indent=2) + "\n"
        return _study_tsv(result)
    if isinstance(result, SoundResult):
        if fmt == "json":
            payload = {
                "type": "SoundResult",
                "estimates": [
                    {"estimator": k[0], "method": k[1], "strategy": k[2], "d_hat": v,
                     "trace": [{"d": d, "p_value": pv} for d, pv in result.traces[k]]}
                    for k, v in result.estimates.items()
                ],
            }
            return json.dumps(payload, indent=2) + "\n"
        return _sound_tsv(result)
    raise InvalidInputError(f"cannot serialize {type(result).__name__}")


def write_report(result, path, fmt=None):
    """Write :func:`format_report` output; ``fmt`` defaults from the file suffix."""
    if fmt is None:
        fmt = "json" if str(path).lower().endswith(".json") else "tsv"
    _write_text(path, format_report(result, fmt))
