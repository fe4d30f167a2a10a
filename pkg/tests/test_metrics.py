import itertools

import numpy as np
import pytest

from jointlp import channel, lpexact, metrics
from jointlp.metrics import ZERO_PROB_SURROGATE


def test_awgn_values(dic3):
    b = metrics.awgn_metrics(dic3, [1.0, 0.0, -1.0])
    assert b[0, dic3.edge_index(0, 1)] == 0.0
    tr1 = channel.build_trellis(channel.get_channel("dic"), 1)
    b1 = metrics.awgn_metrics(tr1, [0.5])
    assert b1[0, tr1.edge_index(1, 0)] == pytest.approx(2.25)


def test_true_path_has_zero_metric(dic3):
    path = dic3.path([1, 1, 0], 0)
    b = metrics.awgn_metrics(dic3, dic3.a[path])
    assert metrics.path_metric(b, path) == 0.0
    others = [dic3.path(bits, s0) for bits in itertools.product((0, 1), repeat=3) for s0 in (0, 1)]
    for p in others:
        if not np.array_equal(p, path):
            assert metrics.path_metric(b, p) > 0


def test_shape_check(dic3):
    with pytest.raises(ValueError):
        metrics.awgn_metrics(dic3, [0.0, 1.0])
    with pytest.raises(ValueError):
        metrics.awgn_metrics(dic3, [0.0, 1.0, 0.0], sigma=0.0)


def test_p0_surrogate():
    tr = channel.build_trellis(channel.get_channel("dic").with_start_state(0), 1)
    b = metrics.awgn_metrics(tr, [0.0], include_p0=True)
    assert np.all(b[0, tr.s == 1] >= ZERO_PROB_SURROGATE)
    assert np.all(b[0, tr.s == 0] < 2)
    g = metrics.general_metrics(tr, np.zeros((1, 4)))
    assert g[0, tr.s == 1].tolist() == [ZERO_PROB_SURROGATE] * 2


def test_uniform_p0_shifts_by_constant(dic3):
    g = metrics.general_metrics(dic3, np.zeros((3, 4)))
    assert np.allclose(g[0], np.log(2))
    assert np.allclose(g[1:], 0)
    with pytest.raises(ValueError):
        metrics.general_metrics(dic3, np.full((3, 4), np.inf))


def test_scaled_likelihood_same_argmin(dic3, rng):
    sigma = 0.7
    for _ in range(50):
        y = rng.normal(size=3)
        b = metrics.awgn_metrics(dic3, y)
        ll = (y[:, None] - dic3.a[None, :]) ** 2 / (2 * sigma ** 2) + 0.5 * np.log(2 * np.pi * sigma ** 2)
        g = metrics.general_metrics(dic3, ll)
        assert np.array_equal(lpexact.viterbi_ml_edge_path(dic3, b)[0],
                              lpexact.viterbi_ml_edge_path(dic3, g)[0])
        assert np.allclose(metrics.awgn_metrics(dic3, y, sigma=sigma), b / (2 * sigma ** 2))
