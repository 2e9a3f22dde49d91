import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from dfsbic.cli import TRAJECTORY_COLUMNS, main
from dfsbic.scenario import parse_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

SMALL = """
[bath]
kind = nn
n_modes = 201

[emitters]
omega0 = {omega0}
separations = {seps}

[run]
outputs = {outputs}
horizon = 30
step = 0.05
csv_stride = 4

[output]
directory = {out}

[tolerances]
oracle_n_modes = 101
oracle_horizon = 20
"""


def scenario(tmp_path, omega0=1.0, seps="1, 2", outputs="all", name="s.ini"):
    path = tmp_path / name
    path.write_text(SMALL.format(omega0=omega0, seps=seps, outputs=outputs, out=tmp_path / "out"))
    return path


def test_run_writes_artifacts(tmp_path, capsys):
    path = scenario(tmp_path)
    assert main(["run", "--scenario", str(path)]) == 0
    out = tmp_path / "out"
    rows = list(csv.reader(open(out / "dm2_trajectory.csv")))
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS
    assert len(rows) == 1 + 151  # 601 samples with stride 4
    assert float(rows[2][0]) == pytest.approx(0.2)
    s = json.loads((out / "dm2_summary.json").read_text())
    assert s["criterion"]["exact"]["exists"] is True
    for key in ("population", "concurrence"):
        block = s["dynamics"][key]
        assert set(block) >= {"predicted", "measured", "abs_diff"}
        assert block["abs_diff"] == pytest.approx(abs(block["predicted"] - block["measured"]))
    assert s["dynamics"]["revival_risk"] is False
    assert s["poles"]["found"] is True
    assert s["oracle"]["dynamics"]["pass"] is True
    assert "dm=2" in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path):
    path = scenario(tmp_path, outputs="dynamics")
    main(["run", "--scenario", str(path)])
    first = (tmp_path / "out" / "dm1_trajectory.csv").read_bytes()
    first_json = (tmp_path / "out" / "dm1_summary.json").read_bytes()
    main(["run", "--scenario", str(path), "--workers", "2"])
    assert (tmp_path / "out" / "dm1_trajectory.csv").read_bytes() == first
    assert (tmp_path / "out" / "dm1_summary.json").read_bytes() == first_json


def test_overrides(tmp_path):
    path = scenario(tmp_path, seps="2", outputs="dynamics")
    assert main(["run", "--scenario", str(path), "--horizon", "10", "--step", "0.1",
                 "--out", str(tmp_path / "o2")]) == 0
    s = json.loads((tmp_path / "o2" / "dm2_summary.json").read_text())
    assert s["dynamics"]["horizon"] == pytest.approx(10) and s["dynamics"]["step"] == 0.1


def test_exit_codes(tmp_path, capsys):
    assert main(["run", "--scenario", str(scenario(tmp_path, seps=""))]) == 3
    err = capsys.readouterr().err.strip()
    assert err.startswith("dfsbic: error code=3 kind=validation") and "\n" not in err
    bad = tmp_path / "bad.ini"
    bad.write_text("[bath\nxi = 1\n")
    assert main(["run", "--scenario", str(bad)]) == 2
    bad.write_text("[bath]\nxi = abc\n")
    assert main(["run", "--scenario", str(bad)]) == 2
    bad.write_text("[bath]\nxii = 0.2\n")
    assert main(["run", "--scenario", str(bad)]) == 2
    bad.write_text("[weird]\nx = 1\n")
    assert main(["run", "--scenario", str(bad)]) == 2
    assert main(["run", "--scenario", str(tmp_path / "missing.ini")]) == 2
    bad.write_text("[bath]\nkind = ring\n")
    assert main(["run", "--scenario", str(bad)]) == 3
    bad.write_text("[bath]\nkind = nn\nxi_prime = 0.1\n")
    assert main(["run", "--scenario", str(bad)]) == 3
    edge = scenario(tmp_path, omega0=1.4, seps="1", outputs="markovian", name="edge.ini")
    assert main(["run", "--scenario", str(edge)]) == 4
    assert "kind=numeric" in capsys.readouterr().err


def test_constants(tmp_path, capsys):
    path = scenario(tmp_path, seps="0, 1, 2")
    main(["run", "--scenario", str(path)])
    capsys.readouterr()
    assert main(["constants", "--scenario", str(path)]) == 0
    table = json.loads(capsys.readouterr().out)
    rows = {r["separation"]: r for r in table["rows"]}
    assert rows[0]["analytic_population"] == 0.5
    assert rows[2]["analytic_population"] == pytest.approx(0.470156, abs=5e-7)
    assert rows[1]["analytic_population"] == 0
    assert rows[2]["measured_population"] is not None
    path = scenario(tmp_path, omega0=1.2, seps="3", name="c.ini")
    main(["constants", "--scenario", str(path), "--out", str(tmp_path / "c")])
    table = json.loads(capsys.readouterr().out)
    assert table["rows"][0]["analytic_population"] == pytest.approx(0.442907, abs=5e-7)
    assert table["rows"][0]["measured_population"] is None


def test_criterion_verb(tmp_path, capsys):
    path = scenario(tmp_path, seps="1, 2, 4")
    assert main(["criterion", "--scenario", str(path)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert [r["criterion"]["exact"]["exists"] for r in res] == [False, True, True]
    assert [r["criterion"]["markovian"]["sign"] for r in res] == [None, "+", "-"]
    assert (tmp_path / "out" / "criterion.json").exists()


def test_oracle_check_verb(tmp_path, capsys):
    path = scenario(tmp_path, seps="1, 2")
    assert main(["oracle-check", "--scenario", str(path)]) == 0
    out = capsys.readouterr().out
    assert "dm=2 spectral=pass dynamics=pass" in out
    s = json.loads((tmp_path / "out" / "dm2_oracle.json").read_text())
    assert len(s["oracle"]["spectral"]["states"]) == 1
    assert (tmp_path / "out" / "dm2_spectrum.csv").exists()


@pytest.mark.parametrize("name, n_pairs", [("fig2a.ini", 6), ("fig2b.ini", 6), ("fig3.ini", 6),
                                           ("fig3_negative.ini", 6), ("smoke.ini", 2)])
def test_shipped_scenarios_parse(name, n_pairs):
    sc = parse_scenario(SCENARIOS / name)
    assert len(sc.pairs) == n_pairs
    assert sc.bath.xi == 0.2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "dfsbic.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for verb in ("run", "constants", "oracle-check", "criterion"):
        assert verb in res.stdout
