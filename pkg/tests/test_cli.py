import json
from pathlib import Path


from loopo2.cli import main
from loopo2.mcmc import read_spool

GOLDEN = Path(__file__).parent / "golden"


def test_verify_bijection(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--suite", "bijection", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    cases = rep["suites"]["bijection"]["cases"]
    assert cases[0]["stats"] == {"heights": 3, "loop_sum": 3}
    assert all(c["pass"] for c in cases)


def test_verify_fkg_includes_negative_control(tmp_path):
    out = tmp_path / "f.json"
    assert main(["verify", "--suite", "fkg", "--out", str(out)]) == 0
    cases = json.loads(out.read_text())["suites"]["fkg"]["cases"]
    negative = [c for c in cases if c["expected"] == "fail"]
    assert len(negative) == 1 and not negative[0]["pass"] and negative[0]["ok"]


def test_unknown_suite():
    assert main(["verify", "--suite", "nope"]) == 2


def test_bad_flag():
    assert main(["verify", "--bogus"]) == 2


def test_enumerate_counts(tmp_path):
    for what, count in (("heights", 3), ("loops", 2)):
        out = tmp_path / f"{what}.json"
        assert main(["enumerate", "--domain", "ball:1", "--what", what, "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["count"] == count and len(rep["records"]) == count
    assert json.loads((tmp_path / "loops.json").read_text())["Z"] == 3


def test_enumerate_pairs_csv(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["enumerate", "--domain", "ball:1", "--what", "pairs", "--bc", "pm", "--format", "csv",
                 "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 7


def test_enumerate_cap():
    assert main(["enumerate", "--domain", "ball:3", "--what", "pairs"]) == 1


def test_scan_csv_header(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["scan", "--kind", "variance", "--sizes", "2,3", "--sweeps", "300", "--burnin", "50",
                 "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] + "\n" == (GOLDEN / "scan_header.csv").read_text()
    assert len(lines) == 3
    assert [l.split(",")[1] for l in lines[1:]] == ["2", "3"]


def test_scan_size_errors():
    assert main(["scan", "--kind", "variance", "--sizes", ""]) == 2
    assert main(["scan", "--kind", "variance", "--sizes", "8,4"]) == 2
    assert main(["scan", "--kind", "circuit", "--sizes", "3", "--sweeps", "10", "--burnin", "0"]) == 1


def test_scan_worker_invariance(tmp_path):
    outs = []
    for w in ("1", "2"):
        out = tmp_path / f"w{w}.json"
        assert main(["scan", "--kind", "loopcount", "--sizes", "2", "--sweeps", "500", "--burnin", "50",
                     "--chains", "3", "--workers", w, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_sample_spool(tmp_path, capsys):
    paths = [tmp_path / "a.bin", tmp_path / "b.bin"]
    for p in paths:
        assert main(["sample", "--domain", "ball:2", "--sweeps", "10000", "--burnin", "1000", "--thin", "10",
                     "--seed", "7", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert len(read_spool(paths[0])) == 900
    summary = json.loads(capsys.readouterr().out.splitlines()[-1])
    assert summary["samples"] == 900


def test_sample_four_arc_rejected():
    assert main(["sample", "--domain", "ball:6", "--bc", "fourarc", "--sweeps", "10", "--burnin", "0"]) == 1


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\ndomain = ball:1\nwhat = loops\n")
    out = tmp_path / "o.json"
    assert main(["enumerate", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["count"] == 2
    assert main(["enumerate", "--config", str(cfg), "--what", "heights", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["count"] == 3
    cfg.write_text("colour = red\n")
    assert main(["enumerate", "--config", str(cfg)]) == 2
