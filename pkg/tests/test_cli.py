import csv
import io
import subprocess
import sys

from rcsm.cli import main, parse_sweep, read_config_file
from rcsm.harness import CSV_COLUMNS

COMMON = ["--n", "6", "--l", "8", "--k", "2", "--m", "2", "--trials", "20", "--no-timing"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sweep_to_stdout(capsys):
    code, out, _ = run(["sweep", *COMMON, "--sweep", "mu=0.3,0.6"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [r["sweep_value"] for r in rows] == ["0.3", "0.6"]


def test_sweep_reproducible_file(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run(["sweep", *COMMON, "--detector", "ml-ga", "--out", str(p)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn=6\nl=8\nk=2\nm=2\ntrials=10\nsnr-db=3\nno-timing=true\n")
    assert read_config_file(cfg)["snr_db"] == 3.0
    code, out, _ = run(["sweep", "--config", str(cfg), "--snr-db", "7"], capsys)
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and row["snr_db"] == "7.0" and row["trials"] == "10"


def test_analyze(capsys):
    code, out, _ = run(["analyze", "--n", "40", "--l", "20", "--k", "4", "--sweep", "M=1,2"],
                       capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 2
    assert float(rows[1]["p_ie"]) < float(rows[0]["p_ie"])


def test_convergence(capsys):
    code, out, _ = run(["convergence", "--n", "10", "--l", "10", "--k", "3", "--m", "2",
                        "--iters", "4", "--support", "2,6,10"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 5 * 10
    assert {int(r["antenna"]) for r in rows if r["active"] == "1"} == {2, 6, 10}


def test_bench(capsys):
    code, out, _ = run(["bench", "--n", "6", "--l", "8", "--k", "2", "--trials", "2",
                        "--repeats", "1"], capsys)
    assert code == 0 and float(next(csv.DictReader(io.StringIO(out)))["median_runtime_ns"]) > 0


def test_errors_exit_with_code_2(tmp_path, capsys):
    assert run(["sweep", "--k", "30"], capsys)[0] == 2
    assert run(["bench", "--detector", "correlator"], capsys)[0] == 2
    code, _, err = run(["convergence", "--k", "2", "--support", "1,2,3"], capsys)
    assert code == 2 and "support" in err
    assert run(["sweep", "--config", str(tmp_path / "missing.cfg")], capsys)[0] == 2


def test_parse_sweep():
    assert parse_sweep("snr-db=0,5") == ("snr_db", ("0", "5"))


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "rcsm", "analyze"], capture_output=True,
                         text=True, check=True).stdout
    assert out.startswith("N,L,Q,M,")
