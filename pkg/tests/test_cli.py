import csv
import json
import math
import subprocess
import sys

import pytest

from partobs.cli import main


def run(tmp_path, *args, config=None):
    argv = list(args)
    if config is not None:
        path = tmp_path / "run.ini"
        path.write_text(config)
        argv += ["--config", str(path)]
    return main(argv)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_models_lists_five_ids(capsys):
    assert main(["models"]) == 0
    out = capsys.readouterr().out.split("\n")
    assert sorted(line.split("\t")[0] for line in out if line) == \
        ["burgers", "heat", "linpair", "swe", "wave"]


def test_index_heat_defaults(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(tmp_path, "index", "--model", "heat", "--out", str(out)) == 0
    text = capsys.readouterr().out
    assert "2.86778" in text and "unit sensor error" in text
    rows = read_csv(out / "report.csv")
    assert list(rows[0]) == ["model", "N", "s", "rho", "sigma_min", "epsilon", "index", "source"]
    assert float(rows[0]["index"]) == pytest.approx(1 / math.sqrt(0.1216), rel=1e-3)
    for name in ("gramian.csv", "eigen.csv", "eigen.dat", "run.json"):
        assert (out / name).exists()
    record = json.loads((out / "run.json").read_text())
    assert record["version"] and len(record["content_hash"]) == 64


def test_index_rerun_is_byte_identical(tmp_path):
    cfg = "[model]\nid = heat\n[estimation]\ns = 3\n[run]\ndirect = on\nseed = 7\n"
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(tmp_path, "index", "--out", str(a), config=cfg) == 0
    assert run(tmp_path, "index", "--out", str(b), config=cfg) == 0
    for name in ("report.csv", "gramian.csv", "eigen.csv", "eigen.dat"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    sources = [r["source"] for r in read_csv(a / "report.csv")]
    assert sources == ["gramian", "direct_optimization"]
    ja, jb = (json.loads((d / "run.json").read_text()) for d in (a, b))
    assert ja["content_hash"] == jb["content_hash"]


def test_unobservable_pair_flagged(tmp_path, capsys):
    cfg = "[model]\nid = linpair\ndelta = 0\n"
    assert run(tmp_path, "index", "--out", str(tmp_path / "o"), config=cfg) == 0
    assert "practically unobservable" in capsys.readouterr().out


def test_flags_override_file(tmp_path):
    cfg = "[model]\nid = heat\n[run]\nrho = 0.5\n"
    out = tmp_path / "o"
    assert run(tmp_path, "index", "--rho", "0.25", "--out", str(out), config=cfg) == 0
    assert float(read_csv(out / "report.csv")[0]["rho"]) == 0.25
    assert run(tmp_path, "index", "--rho", "auto", "--out", str(out), config=cfg) == 0
    assert float(read_csv(out / "report.csv")[0]["rho"]) == 1e-3


@pytest.mark.parametrize("config, args", [
    ("[model]\nid = heat\ncolour = red\n", []),
    ("[bogus]\nx = 1\n", []),
    ("[run]\nrho = -1\n", []),
    ("[run]\nmystery = 1\n", []),
    ("[model]\nid = heat\nx0 = 100\n", []),
    ("[model]\nid = nope\n", []),
    ("[estimation]\ns = 9\n", []),
    ("", ["--flat-source", "on"]),
    ("", ["--rho", "abc"]),
])
def test_config_errors_exit_2(tmp_path, config, args, capsys):
    code = run(tmp_path, "index", "--out", str(tmp_path / "o"), *args, config=config)
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["index", "--config", str(tmp_path / "missing.ini")]) == 2


def test_bad_flag_value_exit_2():
    assert main(["index", "--weighting", "l1"]) == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    cfg = "[model]\nid = swe\nelements = 10\n[estimation]\nKF = 1\n"
    code = run(tmp_path, "index", "--literal-h0", "on", "--out", str(tmp_path / "o"),
               config=cfg)
    assert code == 3
    assert "gramian" in capsys.readouterr().err


def test_sweep_heat_flat(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(tmp_path, "sweep", "--out", str(out), config="[estimation]\ns = 3\n") == 0
    rows = read_csv(out / "sweep.csv")
    assert [int(r["N"]) for r in rows] == [3, 4, 5, 6, 7, 8]
    assert len({r["index"] for r in rows}) == 1
    assert read_csv(out / "stabilization.csv")[0]["stabilized_at"] == "3"
    lines = (out / "sweep.dat").read_text().splitlines()
    assert lines[0].startswith("#") and len(lines) == 7
    assert "stabilized at N=3" in capsys.readouterr().out


def test_sweep_rejects_short_list_and_linpair(tmp_path):
    assert run(tmp_path, "sweep", config="[run]\nsweep = 3, 4\n") == 2
    assert run(tmp_path, "sweep", "--model", "linpair") == 2


def test_wave_demo(tmp_path):
    out = tmp_path / "o"
    assert run(tmp_path, "wave-demo", "--out", str(out)) == 0
    rows = read_csv(out / "ratios.csv")
    high = [float(r["high_mode"]) for r in rows]
    assert [int(r["N"]) for r in rows] == [20, 40, 80]
    assert high[0] < high[1] < high[2]
    assert (out / "ratios_high_mode.dat").exists() and (out / "ratios_low_mode.dat").exists()


def test_sensors_heat(tmp_path):
    out = tmp_path / "o"
    assert run(tmp_path, "sensors", "--model", "heat", "--out", str(out)) == 0
    rows = read_csv(out / "sensors.csv")
    assert [r["rank"] for r in rows] == ["2", "1"]
    assert run(tmp_path, "sensors", "--model", "wave") == 2


def test_sensors_from_config(tmp_path):
    cfg = "[model]\nid = heat\n[run]\nsensors = 0.5; 1.0; 2.0\n"
    out = tmp_path / "o"
    assert run(tmp_path, "sensors", "--out", str(out), config=cfg) == 0
    assert len(read_csv(out / "sensors.csv")) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "partobs", "models"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "swe" in proc.stdout


def test_inline_comments_and_sensor_lists(tmp_path):
    cfg = ("[model]\nid = heat   # model id\n"
           "[run]\nsensors = 0.5; 1.0   # two candidates\n")
    out = tmp_path / "o"
    assert run(tmp_path, "sensors", "--out", str(out), config=cfg) == 0
    assert len(read_csv(out / "sensors.csv")) == 2
