"""Runner exit codes, CSV schema, determinism, report verification."""

import json
import subprocess
import sys

from l1bsde.cli import main, verify_report
from l1bsde.config import CSV_HEADER, load_config

QUICK = """\
[experiment]
name = oracle-equivalence
seed = 9

[params]
count = 6
"""


def write_config(tmp_path, body=QUICK, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return str(path)


def test_run_quick_suite(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "resdir"
    assert main(["run", cfg, "--out", str(out)]) == 0
    csv_path = out / "results.csv"
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 12  # two rows per instance
    summary = json.loads((out / "summary.json").read_text())
    assert summary["suites"]["oracle-equivalence"]["fail"] == 0
    assert summary["rows"] == 12


def test_run_list(capsys):
    assert main(["run", "--list"]) == 0
    names = capsys.readouterr().out.split()
    assert "truncation" in names and "twobsde-convex" in names


def test_missing_or_bad_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.ini")]) == 2
    bad = write_config(tmp_path, "[experiment]\nname = does-not-exist\n", "bad.ini")
    assert main(["run", bad]) == 2
    noname = write_config(tmp_path, "[experiment]\nseed = 1\n", "noname.ini")
    assert main(["run", noname]) == 2


def test_cap_violation_exit_code(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        "[experiment]\nname = truncation\nseed = 1\n\n[grid]\nn = 25\n",
        "cap.ini",
    )
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 3


def test_config_loader_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path))
    assert cfg.name == "oracle-equivalence"
    assert cfg.seed == 9
    assert cfg.get("params", "count", 0, int) == 6
    assert cfg.get("params", "absent", 1.5, float) == 1.5
    assert cfg.get_floats("params", "absent", (1.0, 2.0)) == [1.0, 2.0]


def test_determinism_sequential_and_parallel(tmp_path):
    cfg = write_config(tmp_path)
    outs = []
    for args in (["--out", str(tmp_path / "a")],
                 ["--out", str(tmp_path / "b")],
                 ["--out", str(tmp_path / "c"), "--parallel", "4"]):
        assert main(["run", cfg] + args) == 0
        outs.append((tmp_path / args[1].split("/")[-1] / "results.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_verify_fresh_and_corrupted(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "v"
    assert main(["run", cfg, "--out", str(out)]) == 0
    report = out / "results.csv"
    code, _ = verify_report(str(report))
    assert code == 0

    # corrupt one slack field
    lines = report.read_text(encoding="utf-8").splitlines()
    fields = lines[1].split(",")
    fields[6] = "123.0"
    (tmp_path / "broken.csv").write_text("\n".join([lines[0], ",".join(fields)]) + "\n")
    code, msg = verify_report(str(tmp_path / "broken.csv"))
    assert code == 1 and "inconsistent" in msg

    # flip a pass flag
    fields = lines[1].split(",")
    fields[7] = "false"
    (tmp_path / "flipped.csv").write_text("\n".join([lines[0], ",".join(fields)]) + "\n")
    code, _ = verify_report(str(tmp_path / "flipped.csv"))
    assert code == 1

    (tmp_path / "empty.csv").write_text("")
    assert verify_report(str(tmp_path / "empty.csv"))[0] == 2
    (tmp_path / "header.csv").write_text("a,b\n1,2\n")
    assert verify_report(str(tmp_path / "header.csv"))[0] == 2
    assert verify_report(str(tmp_path / "nofile.csv"))[0] == 2


def test_every_registered_suite_has_asserting_rows(tmp_path):
    body = """\
[experiment]
name = all
seed = 5

[params]
count = 2
n_list = 3

[grid]
n = 6
"""
    cfg = write_config(tmp_path, body, "all.ini")
    out = tmp_path / "all"
    assert main(["run", cfg, "--out", str(out)]) == 0
    lines = (out / "results.csv").read_text(encoding="utf-8").splitlines()[1:]
    from l1bsde.experiments import suite_names

    with_bound = {line.split(",")[0] for line in lines if line.split(",")[5] != ""}
    assert with_bound == set(suite_names())


def test_assertion_failure_exit_code(tmp_path, monkeypatch, capsys):
    from l1bsde import experiments
    from l1bsde.config import ResultRow

    def broken_suite(config):
        return [lambda: [ResultRow("broken", "i0", "p", "q", 2.0, 1.0)]]

    monkeypatch.setitem(experiments.SUITES, "broken", broken_suite)
    cfg = write_config(tmp_path, "[experiment]\nname = broken\nseed = 1\n", "broken.ini")
    assert main(["run", cfg, "--out", str(tmp_path / "br")]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_console_entry_point(tmp_path):
    # module invocation mirrors the installed script
    cfg = write_config(tmp_path)
    proc = subprocess.run(
        [sys.executable, "-m", "l1bsde.cli", "run", cfg, "--out", str(tmp_path / "sp")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "0 failing" in proc.stdout
