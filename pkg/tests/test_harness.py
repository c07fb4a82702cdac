import csv
import json

import numpy as np
import pytest

from slp_dfrc import harness
from slp_dfrc.harness import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_RUNTIME,
    ConfigError,
    channel_gen,
    format_value,
    parse_config,
    stream,
)

SMALL = """
[scenario]
num_antennas = 6
targets_deg = -30, 20
num_users = 2

[solver]
algorithm = alm

[experiment]
type = {kind}
gamma_db = {gamma}
samples = {samples}
trials = {trials}
symbol_vectors = {nvec}
ser_transmissions = 2000
roc_thresholds = 11
seed = 3
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def small(kind="beampattern", gamma="6", samples="5", trials=4, nvec=8):
    return SMALL.format(kind=kind, gamma=gamma, samples=samples, trials=trials, nvec=nvec)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_defaults_match_reference_deployment():
    cfg = parse_config("")
    assert cfg.scenario["num_antennas"] == 10 and cfg.scenario["num_users"] == 3
    assert cfg.scenario["targets_deg"] == (-40.0, 0.0, 40.0)
    assert cfg.solver["pdd_c"] == 0.8 and cfg.solver["alm_growth"] == 1.1


@pytest.mark.parametrize("text", [
    "[scenario]\nnum_antenna = 4\n",
    "[bogus]\nx = 1\n",
    "[scenario]\nnum_antennas = four\n",
    "[solver]\nalgorithm = sdr\n",
    "[experiment]\ntype = fig9\n",
    "[scenario]\nnum_users = 11\n",
    "[solver]\npdd_c = 1.5\n",
    "not an ini file",
])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_cli_parse_error_exit_code(tmp_path, capsys):
    p = write(tmp_path, "[scenario]\nnope = 1\n")
    assert harness.main(["run", str(p), "--out", str(tmp_path / "o")]) == EXIT_PARSE
    assert harness.main(["run", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "o")]) == EXIT_PARSE
    assert harness.main(["frobnicate"]) == EXIT_PARSE


def test_channel_gen_nested_and_reproducible():
    a = channel_gen(3, 10, 1)
    b = channel_gen(4, 10, 1)
    np.testing.assert_array_equal(a, b[:3])
    np.testing.assert_array_equal(a, channel_gen(3, 10, 1))
    assert not np.allclose(a, channel_gen(3, 10, 2))
    with pytest.raises(ValueError):
        channel_gen(5, 4, 0)


def test_channel_gen_statistics():
    H = np.concatenate([channel_gen(8, 8, s) for s in range(400)])
    assert np.mean(np.abs(H) ** 2) == pytest.approx(1.0, rel=0.03)
    assert abs(np.mean(H)) < 0.03
    assert abs(np.mean(H.real * H.imag)) < 0.02


def test_streams_are_independent_and_stable():
    x = stream(0, 2, 5).random(4)
    np.testing.assert_array_equal(x, stream(0, 2, 5).random(4))
    assert not np.allclose(x, stream(0, 2, 6).random(4))
    assert not np.allclose(x, stream(0, 3, 5).random(4))


def test_format_value_round_trips():
    for v in (0.1, 1 / 3, 1e-300, 12345.678):
        assert float(format_value(v)) == v
    assert format_value(np.int64(3)) == "3" and format_value("a") == "a"


def test_beampattern_output(tmp_path):
    p = write(tmp_path, small())
    assert harness.main(["run", str(p), "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "beampattern.csv")
    assert rows[0][:2] == ["theta_deg", "reference"] and rows[0][-1] == "mean"
    assert len(rows) == 182 and len(rows[0]) == 2 + 5 + 1
    meta = json.loads((tmp_path / "beampattern.json").read_text())
    assert meta["status"] == "ok" and meta["master_seed"] == 3
    assert meta["config"]["scenario"]["num_antennas"] == 6
    assert meta["design"]["symbol_vectors"] == "8 sampled uniformly"
    # per-slot patterns carry the constant total power
    vals = np.array([[float(c) for c in r[2:-1]] for r in rows[1:]])
    assert np.all(vals >= 0)


def test_seed_override_changes_output(tmp_path):
    p = write(tmp_path, small())
    harness.main(["run", str(p), "--out", str(tmp_path / "a")])
    harness.main(["run", str(p), "--out", str(tmp_path / "b"), "--seed", "4"])
    assert (tmp_path / "a" / "beampattern.csv").read_bytes() != (tmp_path / "b" / "beampattern.csv").read_bytes()


def test_infeasible_exit_keeps_partial_output(tmp_path):
    p = write(tmp_path, small(kind="mse-sweep", gamma="0, 60"))
    code = harness.main(["run", str(p), "--out", str(tmp_path), "--solver", "pdd"])
    assert code == EXIT_INFEASIBLE
    rows = read_csv(tmp_path / "mse-sweep.csv")
    assert len(rows) == 1 + 3  # header plus the completed 0 dB rows
    assert json.loads((tmp_path / "mse-sweep.json").read_text())["status"] == "infeasible"


def test_runtime_cap_exit(tmp_path):
    text = small(kind="rmse-sweep", trials=400) + "runtime_cap_s = 1e-9\n"
    p = write(tmp_path, text)
    assert harness.main(["run", str(p), "--out", str(tmp_path)]) == EXIT_RUNTIME
    assert json.loads((tmp_path / "rmse-sweep.json").read_text())["status"] == "runtime-cap"


@pytest.mark.parametrize("kind, extra", [("rmse-sweep", ""), ("roc", ""), ("ser", "")])
def test_small_experiments_run(tmp_path, kind, extra):
    p = write(tmp_path, small(kind=kind, gamma="0, 6", samples="5, 8", trials=6))
    assert harness.main(["run", str(p), "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / f"{kind}.csv")
    assert len(rows) > 1 and all(len(r) == len(rows[0]) for r in rows)


def test_reference_file(tmp_path):
    ref = tmp_path / "ref.txt"
    np.savetxt(ref, np.linspace(0, 1, 181))
    p = write(tmp_path, small() + f"reference_file = {ref}\n")
    assert harness.main(["run", str(p), "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "beampattern.csv")
    assert float(rows[-1][1]) == 1.0
    np.savetxt(ref, np.ones(5))
    assert harness.main(["run", str(p), "--out", str(tmp_path)]) == EXIT_PARSE


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.ini"))
    assert {f.stem for f in files} >= set(harness.EXPERIMENTS)
    for f in files:
        assert harness.load_config(f).experiment["type"] == f.stem
