import csv
import subprocess
import sys
from importlib import resources

import pytest

from fdrepair.cli import main

DATA = resources.files("fdrepair").joinpath("data")
ORDER_CSV = str(DATA.joinpath("order_example.csv"))
ORDER_FD = str(DATA.joinpath("order.fd"))


@pytest.fixture
def clean(tmp_path):
    path = tmp_path / "clean.csv"
    path.write_text("#numeric:A\nA,B\n1,x\n2,y\n3,z\n")
    fd = tmp_path / "clean.fd"
    fd.write_text("A -> B\n")
    return str(path), str(fd)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_detect_running(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["detect", ORDER_CSV, ORDER_FD, "--seed", "1", "--out", str(out)]) == 0
    assert "n=6,m=13,delta_max=5" in capsys.readouterr().out
    assert len(read_rows(out)) == 13


def test_detect_clean(clean, tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["detect", *clean, "--seed", "1", "--out", str(out)]) == 0
    assert "m=0" in capsys.readouterr().out


def test_missing_files_exit_3(tmp_path):
    assert main(["detect", ORDER_CSV, str(tmp_path / "none.fd"), "--seed", "1"]) == 3
    assert main(["repair", str(tmp_path / "none.csv"), ORDER_FD]) == 3


def test_bad_fd_file_exit_2(tmp_path):
    fd = tmp_path / "bad.fd"
    fd.write_text("-> CT\n")
    assert main(["repair", ORDER_CSV, str(fd)]) == 2


def test_repair_exact_running(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["repair", ORDER_CSV, ORDER_FD, "--algo", "exact", "--out", str(out)]) == 0
    assert "distance=4" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[1] == "deleted_id" and len(lines) == 6


@pytest.mark.parametrize("algo", ["bl", "te", "qt", "exact"])
def test_repair_clean(clean, tmp_path, capsys, algo):
    out = tmp_path / "r.csv"
    assert main(["repair", *clean, "--algo", algo, "--out", str(out)]) == 0
    assert "distance=0" in capsys.readouterr().out


def test_repair_qt_prints_profile(tmp_path, capsys):
    assert main(["repair", ORDER_CSV, ORDER_FD, "--algo", "qt", "--out", str(tmp_path / "q.csv")]) == 0
    assert "k=2,eta_k=1,predicted_ratio=3/2" in capsys.readouterr().out


def test_exact_verb(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["exact", ORDER_CSV, ORDER_FD, "--out", str(out)]) == 0
    (row,) = read_rows(out)
    assert row["optimal_distance"] == "4" and row["inc_deg"] == "4/6"


def test_estimate_clean(clean, tmp_path):
    out = tmp_path / "e.csv"
    assert main(["estimate", *clean, "--attr", "A", "--low", "0", "--high", "9", "--eps", "0.1",
                 "--seed", "3", "--out", str(out)]) == 0
    assert read_rows(out)[0]["estimate"] == "0.05"


def test_estimate_eps_zero_rejected(clean):
    assert main(["estimate", *clean, "--attr", "A", "--low", "0", "--high", "9", "--eps", "0"]) == 2


@pytest.mark.parametrize("oracle", ["dense", "tree"])
@pytest.mark.parametrize("ranking", ["lex", "pre", "otf"])
def test_estimate_running_clamps(tmp_path, oracle, ranking):
    out = tmp_path / "e.csv"
    assert main(["estimate", ORDER_CSV, ORDER_FD, "--attr", "PR", "--low", "15", "--high", "45",
                 "--eps", "1", "--oracle", oracle, "--ranking", ranking, "--seed", "5",
                 "--out", str(out)]) == 0
    assert read_rows(out)[0]["estimate"] == "1.0"


def test_seed_printed_when_omitted(clean, capsys):
    assert main(["estimate", *clean, "--attr", "A", "--low", "0", "--high", "9"]) == 0
    assert "seed=" in capsys.readouterr().err


def test_gen_and_workload(tmp_path):
    data, wl = tmp_path / "d.csv", tmp_path / "w.csv"
    assert main(["gen", "--n", "200", "--rho", "0.05", "--seed", "4", "--out", str(data),
                 "--workload-out", str(wl), "--queries", "7"]) == 0
    assert data.read_text().startswith("#numeric:id,PR\n")
    assert len(wl.read_text().splitlines()) == 8
    out = tmp_path / "e.csv"
    fd = tmp_path / "o.fd"
    fd.write_text(open(ORDER_FD).read())
    assert main(["estimate", str(data), str(fd), "--workload", str(wl), "--seed", "1", "--out", str(out)]) == 0
    assert len(read_rows(out)) == 7


def test_argument_errors_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["repair", ORDER_CSV, ORDER_FD, "--algo", "magic"])
    assert err.value.code == 2


def test_console_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "fdrepair.cli", "exact", ORDER_CSV, ORDER_FD],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "4/6" in res.stdout
