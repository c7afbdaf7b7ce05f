import pytest

from v2vsim.cli import main
from v2vsim.csvio import read_table
from v2vsim.scenario import fixture_text


def test_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "run.csv"
    assert main(["run", "--scenario", "delay_sweep", "--out", str(out), "--seed", "3",
                 "--delay", "0.1", "--trace"]) == 0
    rows = read_table(out)
    assert len(rows) == 2 * 3301
    assert (tmp_path / "run.csv.trace.csv").exists()
    assert "delay_sweep" in capsys.readouterr().out


def test_run_from_file_with_gain_flags(tmp_path):
    scenario = tmp_path / "s.toml"
    scenario.write_text(fixture_text("delay_sweep"))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--scenario", str(scenario), "--out", str(a)]) == 0
    assert main(["run", "--scenario", str(scenario), "--out", str(b), "--kp", "0.5",
                 "--kd", "0.9", "--headway", "0.8", "--standstill", "3"]) == 0
    assert a.read_bytes() != b.read_bytes()


def test_sweep_delay(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-delay", "--scenario", "delay_sweep", "--delays", "0.01,1.0",
                 "--out", str(out)]) == 0
    rows = read_table(out)
    assert [r["delay"] for r in rows] == [0.01, 1.0]
    assert rows[1]["max_abs"] > rows[0]["max_abs"]


def test_platoon_and_das(tmp_path, capsys):
    assert main(["platoon", "--delay", "0.333", "--out", str(tmp_path / "p.csv")]) == 0
    assert "gap correlation" in capsys.readouterr().out
    assert main(["das", "--scenario", "stopped_lead"]) == 0
    assert "first warning" in capsys.readouterr().out


def test_stats_and_histogram(tmp_path, capsys):
    out = tmp_path / "run.csv"
    main(["run", "--scenario", "platoon4", "--out", str(out)])
    capsys.readouterr()
    assert main(["stats", "--in", str(out), "--column", "spacing_error", "--bootstrap",
                 "--resamples", "500", "--seed", "1"]) == 0
    text = capsys.readouterr().out
    assert "mean" in text and "CI" in text
    assert main(["histogram", "--in", str(out), "--column", "v", "--vehicle", "1",
                 "--bins", "4"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4
    assert sum(int(line.split("\t")[2]) for line in lines) == 3301


@pytest.mark.parametrize("argv, needle", [
    (["run", "--scenario", "no_such.toml", "--out", "x.csv"], "not found"),
    (["stats", "--in", "missing.csv", "--column", "v"], "missing.csv"),
    (["das", "--scenario", "delay_sweep"], "collision warning"),
])
def test_errors_exit_nonzero_with_one_line(tmp_path, monkeypatch, capsys, argv, needle):
    monkeypatch.chdir(tmp_path)
    assert main(argv) != 0
    err = capsys.readouterr().err.strip()
    assert needle in err and len(err.splitlines()) == 1


def test_unknown_column(tmp_path, capsys):
    out = tmp_path / "run.csv"
    main(["run", "--scenario", "delay_sweep", "--out", str(out)])
    assert main(["stats", "--in", str(out), "--column", "nope"]) == 1
    assert "nope" in capsys.readouterr().err
