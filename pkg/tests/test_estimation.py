import math

import numpy as np
import pytest

from sosdim.bootstrap import BootstrapStrategy
from sosdim.bss import BssMethod
from sosdim.errors import InvalidInputError
from sosdim.estimation import (
    backward_rule,
    bisect_rule,
    estimate_backward,
    estimate_dimension,
    estimate_divide_conquer,
    estimate_forward,
    forward_rule,
    parse_estimator,
)
from sosdim.generators import gen_setting


def profile(values):
    calls = []

    def pvalue(d):
        calls.append(d)
        return values[d]

    return pvalue, calls


def monotone(p, k):
    return [0.001] * k + [0.5] * (p - k)


class TestRules:
    def test_forward(self):
        pv, calls = profile([0.001, 0.002, 0.41, 0.9, 0.8])
        assert forward_rule(pv, 5, 0.05)[0] == 2
        assert calls == [0, 1, 2]

    def test_forward_all_rejected(self):
        pv, _ = profile([0.0] * 4)
        assert forward_rule(pv, 4, 0.05)[0] == 4

    def test_backward(self):
        pv, calls = profile([0.0, 0.0, 0.03, 0.47, 0.52])
        d_hat, trace = backward_rule(pv, 5, 0.05)
        assert d_hat == 3
        assert calls == [4, 3, 2]
        assert trace == [(4, 0.52), (3, 0.47), (2, 0.03)]

    def test_backward_no_rejection(self):
        pv, _ = profile([0.5] * 4)
        assert backward_rule(pv, 4, 0.05)[0] == 0

    def test_boundary_is_rejection(self):
        pv, _ = profile([0.05, 0.2])
        assert forward_rule(pv, 2, 0.05)[0] == 1

    def test_bisect(self):
        pv, calls = profile(monotone(20, 2))
        assert bisect_rule(pv, 20, 0.05)[0] == 2
        assert len(calls) <= 6

    @pytest.mark.parametrize("p", [1, 2, 3, 5, 8, 20, 33])
    def test_bisect_agrees_on_monotone_profiles(self, p):
        for k in range(p + 1):
            pv, calls = profile(monotone(p, k))
            assert bisect_rule(pv, p, 0.05)[0] == k
            assert len(calls) <= math.ceil(math.log2(p)) + 1
            assert forward_rule(pv, p, 0.05)[0] == k
            assert backward_rule(pv, p, 0.05)[0] == k

    def test_parse(self):
        assert parse_estimator("bisect") == "divide-conquer"
        assert parse_estimator("Forward") == "forward"
        with pytest.raises(InvalidInputError):
            parse_estimator("sideways")


@pytest.fixture(scope="module")
def data():
    x, _, _ = gen_setting(1, 1000, np.random.default_rng(21))
    return x


class TestEstimate:
    def test_setting_one(self, data):
        kw = dict(strategy=BootstrapStrategy.PARAMETRIC, R=50, method=BssMethod.amuse(), seed=3)
        f = estimate_forward(data, **kw)
        b = estimate_backward(data, **kw)
        c = estimate_divide_conquer(data, **kw)
        assert f.d_hat == b.d_hat == c.d_hat == 2
        assert [d for d, _ in f.trace] == [0, 1, 2]
        assert [d for d, _ in b.trace][0] == 4
        assert len(f.tests) == len(f.trace)

    def test_shared_seeds(self, data):
        # a hypothesis gets the same p-value whichever rule asks for it
        kw = dict(strategy=BootstrapStrategy.NONPAR_JOINT_ROWS, R=30,
                  method=BssMethod.amuse(), seed=8)
        f = dict(estimate_dimension(data, "forward", **kw).trace)
        b = dict(estimate_dimension(data, "backward", **kw).trace)
        for d in set(f) & set(b):
            assert f[d] == b[d]

    def test_to_dict(self, data):
        est = estimate_forward(data, R=10, method=BssMethod.amuse())
        out = est.to_dict()
        assert out["d_hat"] == est.d_hat
        assert len(out["trace"]) == len(out["tests"]) == len(est.trace)

    def test_bad_alpha(self, data):
        with pytest.raises(InvalidInputError):
            estimate_forward(data, alpha=1.5)
