import json

import numpy as np
import pytest
from scipy.io import wavfile

from sosdim.bootstrap import NoiseTest, BootstrapStrategy
from sosdim.bss import BssMethod, sobi
from sosdim.dataio import format_report, read_csv, read_series, read_wav, write_csv, write_report
from sosdim.errors import (
    InvalidInputError,
    ParseError,
    ReportIOError,
    UnsupportedFormatError,
)
from sosdim.estimation import DimensionEstimate


def noise_test(count, R=200):
    m_star = np.r_[np.full(count, 2.0), np.zeros(R - count)]
    return NoiseTest(d=1, method=BssMethod.sobi(), strategy=BootstrapStrategy.PARAMETRIC, R=R,
                     m_observed=1.0, m_star=m_star, p_value=(count + 1) / (R + 1), seed=3)


class TestCsv:
    def test_plain(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1,2\n3,4\n5,6\n")
        np.testing.assert_array_equal(read_csv(path), [[1, 2], [3, 4], [5, 6]])

    def test_header_and_blank_lines(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2\n\n3,4.5\n-5e-1,6\n")
        np.testing.assert_array_equal(read_csv(path), [[1, 2], [3, 4.5], [-0.5, 6]])

    @pytest.mark.parametrize("text, line", [("1,2\n3\n5,6\n", 2), ("1,2\n3,x\n5,6\n", 2),
                                            ("a,b\n1,2\n3,4\n5,6,7\n", 4)])
    def test_parse_errors(self, tmp_path, text, line):
        path = tmp_path / "x.csv"
        path.write_text(text)
        with pytest.raises(ParseError) as info:
            read_csv(path)
        assert info.value.line == line
        assert f"line {line}" in str(info.value)

    def test_too_short(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1,2\n3,4\n")
        with pytest.raises(ParseError):
            read_csv(path)

    def test_missing(self, tmp_path):
        with pytest.raises(ReportIOError):
            read_csv(tmp_path / "nope.csv")

    def test_round_trip(self, tmp_path, rng):
        x = rng.standard_normal((300, 3)) @ rng.standard_normal((3, 3))
        sources = sobi(x, [1, 2]).sources
        path = tmp_path / "s.csv"
        write_csv(path, sources, ["s1", "s2", "s3"])
        np.testing.assert_allclose(read_csv(path), sources, rtol=0, atol=1e-12)


class TestWav:
    def test_int16(self, tmp_path):
        path = tmp_path / "a.wav"
        data = np.array([[16384, -32768], [0, 100], [1, 2], [3, 4]], dtype=np.int16)
        wavfile.write(path, 8000, data)
        x = read_wav(path)
        assert x.shape == (4, 2)
        assert x[0, 0] == 0.5 and x[0, 1] == -1.0

    def test_two_mono_files(self, tmp_path):
        paths = []
        for i in range(2):
            path = tmp_path / f"m{i}.wav"
            wavfile.write(path, 8000, np.arange(10, dtype=np.float32) * (i + 1) / 20)
            paths.append(path)
        x = read_series(paths)
        assert x.shape == (10, 2)
        np.testing.assert_allclose(x[:, 1], 2 * x[:, 0])

    def test_mismatch(self, tmp_path):
        a, b, c = tmp_path / "a.wav", tmp_path / "b.wav", tmp_path / "c.wav"
        wavfile.write(a, 8000, np.zeros(10, dtype=np.int16))
        wavfile.write(b, 8000, np.zeros(11, dtype=np.int16))
        wavfile.write(c, 16000, np.zeros(10, dtype=np.int16))
        for pair in ([a, b], [a, c]):
            with pytest.raises(UnsupportedFormatError):
                read_wav(pair)

    @pytest.mark.filterwarnings("ignore::scipy.io.wavfile.WavFileWarning")
    def test_unsupported(self, tmp_path):
        path = tmp_path / "a.wav"
        wavfile.write(path, 8000, np.zeros(10, dtype=np.int32))
        with pytest.raises(UnsupportedFormatError):
            read_wav(path)
        bad = tmp_path / "b.wav"
        bad.write_bytes(b"RIFF0000WAVEjunk")
        with pytest.raises(UnsupportedFormatError):
            read_wav(bad)

    def test_mixed_inputs(self, tmp_path):
        with pytest.raises(InvalidInputError):
            read_series([tmp_path / "a.csv", tmp_path / "b.csv"])


class TestReports:
    def test_noise_test_json(self):
        out = json.loads(format_report(noise_test(9), "json"))
        assert out["p_value"] == 10 / 201
        assert str(out["p_value"]).startswith("0.04975")
        assert out["exceed_count"] == 9 and len(out["m_star"]) == 200
        assert {"seed", "R", "warnings", "lags", "strategy", "m_observed"} <= set(out)

    def test_noise_test_tsv(self):
        header, row = format_report(noise_test(9), "tsv").splitlines()
        values = dict(zip(header.split("\t"), row.split("\t")))
        assert float(values["p_value"]) == 10 / 201
        assert values["lags"] == ",".join(map(str, range(1, 13)))

    def test_estimate_trace(self):
        est = DimensionEstimate(2, 0.05, [(0, 0.001), (1, 0.01), (2, 0.4)], "forward")
        out = json.loads(format_report(est, "json"))
        assert [t["d"] for t in out["trace"]] == [0, 1, 2]
        lines = format_report(est, "tsv").splitlines()
        assert len(lines) == 2 + 3 and lines[-1] == "2\t0.4\t0"

    def test_solution(self, rng):
        sol = sobi(rng.standard_normal((100, 3)), [1, 2])
        out = json.loads(format_report(sol, "json"))
        assert np.allclose(out["unmixing"], sol.unmixing)
        assert format_report(sol, "tsv").splitlines()[0] == "component\tdiagnostic\tlambda_1\tlambda_2"

    def test_write(self, tmp_path):
        write_report(noise_test(0), tmp_path / "r.json")
        assert json.loads((tmp_path / "r.json").read_text())["p_value"] == 1 / 201
        write_report(noise_test(0), tmp_path / "r.tsv")
        assert (tmp_path / "r.tsv").read_text().startswith("d\t")
        with pytest.raises(ReportIOError):
            write_report(noise_test(0), tmp_path / "missing" / "r.json")

    def test_unknown(self):
        with pytest.raises(InvalidInputError):
            format_report(noise_test(0), "xml")
        with pytest.raises(InvalidInputError):
            format_report(object(), "json")
