import io
import math
import subprocess
import sys

import pytest

from divrate.bench import read_csv
from divrate.cli import main
from divrate.distributions import read_distribution


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def test_no_args_usage(capsys):
    code, _ = run()
    assert code == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_flag(capsys):
    code, _ = run("remez", "--degree", "2", "--bogus")
    assert code == 2
    assert "unrecognized" in capsys.readouterr().err


def test_remez_degree_one():
    code, out = run("remez", "--degree", "1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "j,a_j"
    a0 = float(lines[1].split(",")[1])
    a1 = float(lines[2].split(",")[1])
    err = float(lines[3].split(",")[1])
    assert lines[3].startswith("sup_error,")
    assert a0 == pytest.approx(-0.1839397, abs=1e-7)
    assert a1 == pytest.approx(0.0, abs=1e-12)
    assert err == pytest.approx(0.1839397, abs=1e-7)


def test_remez_interval():
    code, out = run("remez", "--degree", "1", "--interval", "0.5")
    rows = dict(line.split(",") for line in out.strip().splitlines()[1:])
    assert float(rows["0"]) == pytest.approx(-0.25 / math.e, rel=1e-12)
    assert float(rows["1"]) == pytest.approx(math.log(0.5), rel=1e-12)
    assert float(rows["sup_error"]) == pytest.approx(0.25 / math.e, rel=1e-12)


def test_remez_bad_degree(capsys):
    code, _ = run("remez", "--degree", "0")
    assert code == 1
    assert "divrate: error" in capsys.readouterr().err


def test_bench_smoke(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _ = run("bench", "--family", "worst_case_I", "--k", "1000", "--f", "5", "--trials", "10", "--out", "r.csv")
    assert code == 0
    rows = read_csv(tmp_path / "r.csv")
    assert len(rows) == 9
    assert {r.method for r in rows} == {"plugin", "aplugin", "opt"}


def test_bench_seed_env(monkeypatch):
    args = ("bench", "--k", "30", "--grid", "50", "--trials", "3", "--no-timing", "--methods", "aplugin,opt")
    monkeypatch.setenv("DIVRATE_SEED", "77")
    _, a = run(*args)
    _, b = run(*args, "--seed", "77")
    _, c = run(*args, "--seed", "78")
    assert a == b != c


def test_bench_bad_seed_env(monkeypatch, capsys):
    monkeypatch.setenv("DIVRATE_SEED", "abc")
    code, _ = run("bench", "--k", "30", "--grid", "50", "--trials", "1")
    assert code == 2


def test_bench_budget(capsys):
    code, _ = run("bench", "--k", "100", "--grid", "100", "--budget", "5")
    assert code == 1
    assert "budget" in capsys.readouterr().err


def test_bench_custom(tmp_path):
    p, q = tmp_path / "p.txt", tmp_path / "q.txt"
    p.write_text("0.5\n0.25\n0.25\n")
    q.write_text("0.25\n0.25\n0.5\n")
    code, out = run("bench", "--family", "custom", "--p-file", str(p), "--q-file", str(q),
                    "--grid", "40", "--trials", "2", "--no-timing")
    assert code == 0 and out.count("\n") == 4
    code, _ = run("bench", "--family", "custom", "--grid", "40")
    assert code == 1


def _hist(tmp_path, name, counts):
    path = tmp_path / name
    path.write_text("\n".join(str(c) for c in counts) + "\n")
    return str(path)


def test_estimate_rows(tmp_path):
    hp, hq = _hist(tmp_path, "m.txt", [2, 2]), _hist(tmp_path, "n.txt", [1, 3])
    code, out = run("estimate", "--method", "plugin", "--hist-p", hp, "--hist-q", hq)
    assert code == 0
    method, value, *rest = out.strip().split(",")
    assert method == "plugin" and float(value) == pytest.approx(0.143841, abs=1e-6)
    assert rest == ["", "", "", ""]
    code, out = run("estimate", "--method", "opt", "--hist-p", hp, "--hist-q", hq)
    fields = out.strip().split(",")
    assert len(fields) == 6 and int(fields[2]) + int(fields[3]) == 2


def test_estimate_inf_and_padding(tmp_path):
    hp, hq = _hist(tmp_path, "m.txt", [3, 1]), _hist(tmp_path, "n.txt", [0, 4])
    _, out = run("estimate", "--method", "plugin", "--hist-p", hp, "--hist-q", hq)
    assert out.strip().split(",")[1] == "inf"
    _, out = run("estimate", "--method", "opt", "--hist-p", hp, "--hist-q", hq, "--k", "50", "--f", "5")
    fields = out.strip().split(",")
    assert 0 <= float(fields[1]) <= math.log(5)
    assert int(fields[2]) + int(fields[3]) == 50


def test_estimate_config(tmp_path):
    hp, hq = _hist(tmp_path, "m.txt", [5, 0, 2]), _hist(tmp_path, "n.txt", [1, 4, 4])
    cfg = tmp_path / "c.txt"
    cfg.write_text("c = 0.5\n")
    _, a = run("estimate", "--method", "aplugin", "--hist-p", hp, "--hist-q", hq)
    _, b = run("estimate", "--method", "aplugin", "--hist-p", hp, "--hist-q", hq, "--config", str(cfg))
    assert a != b
    cfg.write_text("c2 = 5\n")
    code, _ = run("estimate", "--method", "opt", "--hist-p", hp, "--hist-q", hq, "--config", str(cfg))
    assert code == 1


def test_estimate_errors(tmp_path, capsys):
    hp, hq = _hist(tmp_path, "m.txt", [1, 2]), _hist(tmp_path, "n.txt", [1, 2, 3])
    assert run("estimate", "--method", "aplugin", "--hist-p", hp, "--hist-q", hq)[0] == 1
    assert run("estimate", "--method", "aplugin", "--hist-p", hp, "--hist-q", str(tmp_path / "nope"))[0] == 1
    assert run("estimate", "--method", "zg", "--hist-p", hp, "--hist-q", hp)[0] == 2


@pytest.mark.parametrize("family,suffixes", [
    ("worst_case_I", ["p", "q"]), ("bias_I", ["p", "q"]), ("uniform", ["p"]), ("zipf_pair", ["p", "q"]),
    ("twopoint_m", ["1_p", "1_q", "2_p", "2_q"]), ("inconsistency", ["1_p", "1_q", "2_p", "2_q"]),
])
def test_construct(tmp_path, family, suffixes):
    prefix = tmp_path / "fam"
    code, out = run("construct", family, "--k", "10", "--f", "10", "--out", str(prefix))
    assert code == 0
    assert len(out.strip().splitlines()) == len(suffixes)
    for s in suffixes:
        d = read_distribution(f"{prefix}_{s}.txt")
        assert math.fsum(d.probs) == pytest.approx(1.0, abs=1e-12)


def test_construct_bias_ii_precondition(tmp_path):
    code, _ = run("construct", "bias_II", "--k", "3", "--n", "100", "--f", "4", "--out", str(tmp_path / "b"))
    assert code == 1


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "divrate", "remez", "--degree", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "j,a_j"
