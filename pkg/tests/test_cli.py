import json
import subprocess
import sys

from jointlp import channel, ldpc
from jointlp.cli import main


def _write_cfg(path, body):
    path.write_text(body)
    return str(path)


SPC_CFG = """
channel = "dic"
codeword = [1, 1, 0]
decoder = "exact_lp"
snr_db = [0.0, 4.0]
max_trials = 300
max_errors = 30
seed = 5

[code]
kind = "spc"
n = 3
"""


def test_channels(capsys):
    assert main(["channels"]) == 0
    out = capsys.readouterr().out
    for name in ("dic", "pdic", "pr2"):
        assert name in out


def test_codegen_round_trip(tmp_path):
    out = tmp_path / "c.alist"
    assert main(["codegen", "--n", "20", "--dv", "3", "--dc", "4", "--seed", "2", "--out", str(out)]) == 0
    assert ldpc.load_alist(out) == ldpc.random_regular(20, 3, 4, seed=2)
    man = json.loads((tmp_path / "c.alist.manifest.json").read_text())
    assert man["command"] == "codegen" and man["outputs"] == [str(out)]


def test_codegen_needs_parameters(tmp_path, capsys):
    assert main(["codegen", "--n", "20", "--out", str(tmp_path / "x")]) == 1
    assert "--dv" in capsys.readouterr().err


def test_decode_noiseless(tmp_path, capsys):
    tr = channel.build_trellis(channel.get_channel("dic").with_start_state(0), 3)
    vec = tmp_path / "y.txt"
    vec.write_text(" ".join(str(v) for v in tr.a[tr.path([1, 1, 0], 0)]))
    cfg = _write_cfg(tmp_path / "e.toml", SPC_CFG)
    assert main(["decode", "--config", cfg, "--input", str(vec), "--decoder", "exact-lp"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["vertex_kind"] == "integral" and out["bits"] == [1, 1, 0]
    assert main(["decode", "--config", cfg, "--input", str(vec), "--decoder", "ijlp"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "parity_ok" and out["bits"] == [1, 1, 0]


def test_decode_malformed_input(tmp_path, capsys):
    vec = tmp_path / "bad.txt"
    vec.write_text("0.1 0.2\n0.3 abc\n")
    assert main(["decode", "--input", str(vec)]) == 1
    err = capsys.readouterr().err
    assert "bad.txt:2" in err and "abc" in err
    vec.write_text("0.1 0.2")
    assert main(["decode", "--input", str(vec)]) == 1


def test_config_errors_list_all_keys(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "bad.toml", 'channel = "x"\ndecoder = "y"\nmax_trials = 0\n')
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o.csv")]) == 1
    err = capsys.readouterr().err
    for key in ("channel", "decoder", "max_trials"):
        assert key in err
    assert not (tmp_path / "o.csv").exists()


def test_sweep_writes_csv_and_manifest(tmp_path):
    cfg = _write_cfg(tmp_path / "e.toml", SPC_CFG)
    out = tmp_path / "w.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--set", "max_errors=10"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "snr_db,sigma,trials,errors,wer,ci_lo,ci_hi,mean_iters" and len(lines) == 3
    man = json.loads((tmp_path / "w.csv.manifest.json").read_text())
    assert man["config"]["max_errors"] == 10 and man["seed"] == 5
    assert {"started", "finished", "tool_version"} <= set(man)


def test_harvest_then_predict(tmp_path):
    cfg = _write_cfg(tmp_path / "e.toml", SPC_CFG)
    spec = tmp_path / "s.json"
    assert main(["harvest", "--config", cfg, "--snr", "0", "--out", str(spec),
                 "--max-errors", "200", "--no-stationary"]) == 0
    entries = json.loads(spec.read_text())["entries"]
    assert entries and all(e["multiplicity"] >= 1 for e in entries)
    pred = tmp_path / "p.csv"
    assert main(["predict", "--spectrum", str(spec), "--snr", "6", "8", "--out", str(pred)]) == 0
    vals = [float(line.split(",")[2]) for line in pred.read_text().splitlines()[1:]]
    assert vals[0] > vals[1] > 0


def test_predict_empty_spectrum(tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text('{"reference": [0, 0, 0], "entries": []}')
    out = tmp_path / "p.csv"
    assert main(["predict", "--spectrum", str(spec), "--snr", "1", "2", "--out", str(out)]) == 0
    assert [float(line.split(",")[2]) for line in out.read_text().splitlines()[1:]] == [0.0, 0.0]


def test_gap(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "g.toml", """
channel = "dic"
[code]
kind = "regular"
n = 155
dv = 3
dc = 5
""")
    assert main(["gap", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "delta = 0.00258" in out


def test_usage_error_exit_code(capsys):
    assert main(["sweep"]) == 1
    assert main(["no-such-command"]) == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "jointlp", "channels"], capture_output=True, text=True)
    assert res.returncode == 0 and "pr2" in res.stdout
    res = subprocess.run([sys.executable, "-m", "jointlp", "gap", "--config", str(tmp_path / "none.toml")],
                         capture_output=True, text=True)
    assert res.returncode == 1 and "cannot read" in res.stderr


def test_numerical_abort_exit_code(tmp_path, monkeypatch, capsys):
    from jointlp import ijlp, sim

    def boom(*a, **k):
        raise ijlp.NumericalAbort("forced")

    monkeypatch.setattr(sim, "decode_once", boom)
    vec = tmp_path / "y.txt"
    vec.write_text("0 0 0")
    assert main(["decode", "--input", str(vec), "--decoder", "ijlp"]) == 2
    assert "forced" in capsys.readouterr().err
