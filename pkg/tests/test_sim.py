import math

import numpy as np
import pytest

from jointlp import analysis, ldpc, lpexact, metrics, sim
from jointlp.analysis import DistanceSpectrum
from jointlp.sim import ConfigError, ExperimentConfig


def _cfg(**kw):
    base = dict(channel="dic", code={"kind": "spc", "n": 3}, codeword=[1, 1, 0], decoder="exact_lp",
                snr_db=[4.0], max_trials=400, max_errors=1000, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_lists_every_problem():
    with pytest.raises(ConfigError) as ei:
        ExperimentConfig.from_dict({"channel": "nope", "decoder": "bp", "k1": -1, "snr_db": [], "colour": 1})
    text = str(ei.value)
    for key in ("channel", "decoder", "k1", "snr_db", "colour"):
        assert key in text
    assert len(ei.value.problems) == 5


def test_config_round_trip():
    cfg = _cfg(decoder="ijlp", k1=10.0)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.decoder_params().k1 == 10.0


def test_codeword_selection():
    code = ldpc.spc(3)
    assert sim.build_codeword(code, "zero").tolist() == [0, 0, 0]
    with pytest.raises(ldpc.CodeError):
        sim.build_codeword(code, [1, 0, 0])
    big = ldpc.random_regular(40, 3, 5, seed=1)
    w = sim.build_codeword(big, {"weight": 16, "seed": 4})
    assert w.sum() == 16 and ldpc.syndrome_ok(big, w)


def test_snr_convention():
    snr, sigma = sim.snr_sigma(6.0, 0.5)
    assert sigma == pytest.approx(math.sqrt(0.5 / 10 ** 0.6))
    snr, sigma = sim.snr_sigma(float("inf"), 0.5)
    assert snr == sim.MAX_SNR_DB and sigma < 1e-5


def test_high_snr_row_is_error_free():
    rows = sim.wer_sweep(_cfg(snr_db=[float("inf")], max_trials=50))
    assert rows[0].errors == 0 and rows[0].wer == 0.0 and rows[0].trials == 50
    assert rows[0].ci_lo == 0.0 < rows[0].ci_hi


def test_sweep_rows_and_stop_rule():
    rows = sim.wer_sweep(_cfg(snr_db=[0.0, 6.0], max_errors=20))
    assert rows[0].errors == 20 and rows[0].stopped_by == "errors"
    for r in rows:
        assert r.errors <= r.trials and r.ci_lo <= r.wer <= r.ci_hi
    assert rows[1].wer < rows[0].wer


def test_iterative_decoders_at_high_snr():
    for dec in ("ijlp", "te"):
        rows = sim.wer_sweep(_cfg(decoder=dec, snr_db=[12.0], max_trials=200))
        assert rows[0].wer < 0.05


def test_determinism_across_workers():
    a = sim.wer_sweep(_cfg(snr_db=[2.0], max_trials=600, max_errors=60, chunk=50))
    b = sim.wer_sweep(_cfg(snr_db=[2.0], max_trials=600, max_errors=60, chunk=50, workers=2))
    assert [r.csv_values() for r in a] == [r.csv_values() for r in b]


def test_csv_round_trip():
    rows = sim.wer_sweep(_cfg(snr_db=[3.0], max_trials=100))
    text = sim.rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(sim.CSV_HEADER)
    back = sim.read_csv(text)
    assert back[0]["trials"] == 100 and back[0]["wer"] == pytest.approx(rows[0].wer)


def test_exact_lp_errors_are_genuine():
    setup = sim.Setup.from_config(_cfg())
    tr, code = setup.trellis, setup.code
    checked = 0
    for t in range(300):
        y, _ = sim._receive(setup, 1.0, sim.trial_rng(0, 0, t))
        bits, _, sol = sim.decode_once(setup, y, 1.0)
        if bits is None or np.array_equal(bits, setup.codeword):
            continue
        b = metrics.awgn_metrics(tr, y, include_p0=True)
        cw, val, _ = lpexact.exhaustive_joint_ml(tr, code, b)
        assert np.array_equal(cw, bits) and val == pytest.approx(sol.objective, abs=1e-9)
        tx = tr.path_flow(tr.path(setup.codeword, 0))
        assert (b * sol.g).sum() <= (b * tx).sum() + 1e-9
        checked += 1
    assert checked > 5


def test_harvest_spectrum():
    cfg = _cfg(max_trials=100000)
    stats = sim.HarvestStats()
    sp = sim.harvest_pcws(cfg, 0.0, max_errors=1500, stats=stats)
    # integral competitors from start state 0 against c = (1, 0, -1)
    for d in (math.sqrt(2), math.sqrt(3), math.sqrt(5)):
        assert round(d, 4) in sp.entries
    assert stats.fractional > 0
    assert any(not np.allclose(f, np.round(f)) for f in sp.examples.values())
    again = sim.harvest_pcws(cfg, 0.0, max_errors=1500)
    assert again.entries == sp.entries


def test_harvest_noiseless_is_empty():
    assert len(sim.harvest_pcws(_cfg(), float("inf"))) == 0


def test_harvest_with_ijlp_is_marked_approximate():
    cfg = _cfg(decoder="ijlp", k1=100.0, k2=100.0, max_trials=60)
    sp = sim.harvest_pcws(cfg, 0.0, stop_when_stationary=False)
    assert sp.approximate and len(sp) > 0


def test_predict():
    empty = sim.predict_wer(DistanceSpectrum((0,)), [0.0, 5.0], 0.5)
    assert [r["wer_pred"] for r in empty] == [0.0, 0.0]
    sp = DistanceSpectrum((1, 0, -1))
    sp.add(math.sqrt(2))
    # power 1 at 0 dB puts sigma at 1
    assert sim.predict_wer(sp, [0.0], 1.0)[0]["wer_pred"] == pytest.approx(
        analysis.pairwise_error_prob(1.4142, 1.0))
    sp.add(2.0)
    vals = [r["wer_pred"] for r in sim.predict_wer(sp, np.arange(0, 15), 0.5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_start_state_option():
    assert ExperimentConfig.from_dict({"start_state": "unknown"}).start_state is None
    with pytest.raises(ConfigError, match="start_state"):
        ExperimentConfig.from_dict({"start_state": 5})
    setup = sim.Setup.from_config(ExperimentConfig.from_dict({"start_state": "unknown"}))
    assert setup.spec.initial_dist == (0.5, 0.5)
