import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIG2_PCW, FIG2_TCW
from jointlp import analysis, channel, ijlp, ldpc, lpexact, metrics
from jointlp.analysis import DistanceSpectrum
from jointlp.ijlp import DecoderParams

Q_07071 = 0.2397500610934768  # standard normal upper tail at 1/sqrt(2)


def test_fig2_projections(dic3):
    assert analysis.project_symbolwise(FIG2_TCW).tolist() == [1, 1, 0]
    assert analysis.project_symbolwise(FIG2_PCW, dic3).tolist() == [1, 0.5, 0]
    assert analysis.project_signal_space(FIG2_TCW, dic3).tolist() == [1, 0, -1]
    assert analysis.project_signal_space(FIG2_PCW, dic3).tolist() == [1, -0.5, -0.5]
    zero = np.zeros((3, 4))
    zero[:, dic3.edge_index(0, 0)] = 1
    assert not analysis.project_symbolwise(zero, dic3).any()
    assert not analysis.project_signal_space(zero, dic3).any()


def test_classify():
    assert analysis.classify(FIG2_TCW) == "TCW"
    assert analysis.classify(FIG2_PCW) == "JD-TPCW"
    assert analysis.classify(FIG2_TCW + 1e-9) == "TCW"


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1))
def test_projection_linearity(a):
    mix = a * FIG2_TCW + (1 - a) * FIG2_PCW
    want = a * analysis.project_symbolwise(FIG2_TCW) + (1 - a) * analysis.project_symbolwise(FIG2_PCW)
    assert np.allclose(analysis.project_symbolwise(mix), want, atol=1e-15)


def test_dgen_fig2(dic3):
    c = analysis.project_signal_space(FIG2_TCW, dic3)
    p = analysis.project_signal_space(FIG2_PCW, dic3)
    assert analysis.output_variance(FIG2_PCW, dic3) == pytest.approx(0.5)
    assert analysis.d_gen(c, p, FIG2_PCW, dic3) == pytest.approx(math.sqrt(2), abs=1e-15)
    with pytest.raises(ValueError):
        analysis.d_gen(c, c, FIG2_TCW, dic3)


def test_dgen_integral_is_euclidean(dic3):
    ref = dic3.path([1, 1, 0], 0)
    other = dic3.path([0, 1, 1], 0)
    c, p = dic3.a[ref], dic3.a[other]
    assert analysis.d_gen(c, p, dic3.path_flow(other), dic3) == pytest.approx(np.linalg.norm(c - p))
    # doubling the output alphabet doubles the distance of an integral competitor
    spec2 = dataclasses.replace(dic3.spec, edges=tuple(dataclasses.replace(e, output=2 * e.output)
                                                       for e in dic3.spec.edges))
    tr2 = channel.build_trellis(spec2, 3)
    d2 = analysis.d_gen(tr2.a[ref], tr2.a[other], tr2.path_flow(other), tr2)
    assert d2 == pytest.approx(2 * np.linalg.norm(c - p))


def test_pairwise_error_prob():
    assert analysis.pairwise_error_prob(math.sqrt(2), 1.0) == pytest.approx(Q_07071, rel=1e-12)
    assert analysis.pairwise_error_prob(1e-12, 1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        analysis.pairwise_error_prob(1.0, 0.0)


def test_union_bound():
    assert analysis.union_bound(DistanceSpectrum((0,)), 1.0) == 0.0
    sp = DistanceSpectrum((1, 0, -1))
    sp.add(math.sqrt(2))
    # stored distances are quantized to 1e-4
    assert analysis.union_bound(sp, 1.0) == pytest.approx(analysis.pairwise_error_prob(1.4142, 1.0))
    assert analysis.union_bound(sp, 1.0) == pytest.approx(0.23975, abs=1e-5)
    assert analysis.union_bound({math.sqrt(2): 1}, 1.0) == pytest.approx(Q_07071, rel=1e-12)
    sp.add(math.sqrt(2))
    sp.add(2.0)
    assert sp.entries == {1.4142: 2, 2.0: 1}


def test_spectrum_round_trip(tmp_path):
    sp = DistanceSpectrum((1.0, 0.0, -1.0), approximate=True)
    sp.add(1.26491, [2 / 3] * 3)
    sp.add(1.73205, [0, 1, 1])
    sp.save(tmp_path / "s.json")
    back = DistanceSpectrum.load(tmp_path / "s.json")
    assert back.entries == sp.entries and back.approximate and back.reference == sp.reference
    with pytest.raises(ValueError):
        DistanceSpectrum.from_json('{"reference": [0], "entries": [{"d_gen": 1.0, "multiplicity": 0}]}')


def test_entropy():
    assert analysis.entropy([1, 0, 0]) == 0.0
    assert analysis.entropy([0.25] * 4) == pytest.approx(math.log(4))
    assert analysis.entropy([0.5, 0.5, 0, 0]) == pytest.approx(math.log(2))


def test_gap_delta_values(spc3, dic3):
    code = ldpc.random_regular(155, 3, 5, seed=0)
    tr = channel.build_trellis(channel.get_channel("dic"), 155)
    gb = analysis.gap_delta(code, tr, 1000.0, 100.0)
    assert gb.delta == pytest.approx(3.6 * math.log(2) / 1000 + math.log(4) / 15500, rel=1e-12)
    assert gb.delta == pytest.approx(2.5846e-3, rel=1e-4)
    small = analysis.gap_delta(spc3, dic3, 7.0, 3.0)
    assert small.delta == pytest.approx(4 / 3 * math.log(2) / 7 + math.log(4) / 9)
    assert analysis.gap_delta(spc3, dic3, 1e12, 1e12).delta < 1e-11
    with pytest.raises(ValueError):
        analysis.gap_delta(spc3, dic3, 0.0, 1.0)
    with pytest.raises(ValueError):
        analysis.gap_delta(spc3, dic3, 1.0, 1.0, eps=0.1)
    with_eps = analysis.gap_delta(spc3, dic3, 7.0, 3.0, eps=0.01, metrics=np.ones((3, 4)), C=2.0)
    assert with_eps.eps_term == pytest.approx(0.01 * (3 / 3 * 12 + 2.0))


def _instances(code, tr, count, seed, sigma=0.8):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield metrics.awgn_metrics(tr, rng.normal(size=code.n) * sigma + tr.a[rng.integers(tr.num_edges, size=code.n)])


def test_primal_from_dual_feasible_and_sandwiched(spc3, dic3):
    k1 = k2 = 100.0
    for b in _instances(spc3, dic3, 8, 5):
        res = ijlp.cyclic_decode(b, spc3, dic3, DecoderParams(k1=k1, k2=k2, eps_residual=1e-10),
                                 eps_stop=0.0)
        pd = analysis.primal_from_dual(res.m, spc3, dic3, b, k1, k2)
        assert max(lpexact.flow_residuals(dic3, spc3, pd.g, pd.w).values()) <= 1e-8
        assert lpexact.lcp_violation(spc3, analysis.project_symbolwise(pd.g, dic3)) <= 1e-8
        p_star = lpexact.solve_joint_lp(dic3, spc3, b).objective
        delta = analysis.gap_delta(spc3, dic3, k1, k2).delta
        assert -1e-9 <= pd.value - p_star <= delta * 3
        # the entropy terms stay inside the bounds used for the gap
        assert sum(analysis.entropy(w) for w in pd.w) <= 3 * (1 - spc3.rate + 1) * math.log(2) + 1e-12
        assert analysis.entropy(pd.g[0]) <= math.log(4) + 1e-12


def test_primal_from_dual_mid_iteration_states(code8):
    tr = channel.build_trellis(channel.get_channel("dic"), 8)
    checked = 0
    for b in _instances(code8, tr, 30, 9, sigma=0.5):
        res = ijlp.cyclic_decode(b, code8, tr, DecoderParams(k1=10.0, k2=10.0, max_sweeps=3), eps_stop=0.0)
        try:
            pd = analysis.primal_from_dual(res.m, code8, tr, b, 10.0, 10.0)
        except ValueError:
            continue
        checked += 1
        assert pd.eps <= 1 / 6
        assert max(lpexact.flow_residuals(tr, code8, pd.g, pd.w).values()) <= 1e-8
        assert lpexact.lcp_violation(code8, analysis.project_symbolwise(pd.g, tr)) <= 1e-8
    assert checked >= 10


def test_primal_from_dual_refuses_large_eps(spc3, dic3):
    b = metrics.awgn_metrics(dic3, [1.0, 0.0, -1.0])
    with pytest.raises(ValueError, match="1/6"):
        analysis.primal_from_dual(np.array([5.0, -5.0, 5.0]), spc3, dic3, b, 100.0, 100.0)


def test_primal_from_dual_no_smoothing_when_consistent():
    # a single bit with no checks: the check side is empty and eps is zero
    tr = channel.build_trellis(channel.get_channel("dic"), 1)
    code = ldpc.LdpcCode(1, ())
    b = np.array([[0.3, 1.0, 2.0, 0.1]])
    pd = analysis.primal_from_dual(np.zeros(0), code, tr, b, 10.0, 10.0)
    assert pd.eps == 0.0
    st_ = ijlp.refresh_state(b, ijlp.CodeGraph.from_code(code), tr, 10.0, np.zeros(0))
    assert np.allclose(pd.g, ijlp.edge_posteriors(st_, tr))
