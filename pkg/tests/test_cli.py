from tltr.cli import main, read_config
from tltr.harness import parse_summary

SMALL = ["--synthetic-samples", "120", "--synthetic-features", "12"]


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--solver", "tltr", "--ell", "4", "--seeds", "0,1",
                 "--out", str(out)] + SMALL) == 0
    kv = parse_summary(capsys.readouterr().out)
    assert kv["solver"] == "tltr" and kv["converged"] == "2"
    names = sorted(p.name for p in out.iterdir())
    assert names == ["summary.txt", "trace_full_tltr_0.csv", "trace_full_tltr_1.csv",
                     "trace_tltr_0.csv", "trace_tltr_1.csv"]


def test_repeated_run_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        main(["run", "--solver", "sn", "--sketch", "shash", "--ell-frac", "0.5",
              "--out", str(tmp_path / d)] + SMALL)
    assert ((tmp_path / "a" / "trace_sn_0.csv").read_bytes()
            == (tmp_path / "b" / "trace_sn_0.csv").read_bytes())


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# experiment\nsolver = tr\nfine = cp\nmax_iter = 3\n"
                   "synthetic_samples = 120\nsynthetic_features = 12\n")
    assert main(["--config", str(cfg), "run"]) == 0
    kv = parse_summary(capsys.readouterr().out)
    assert kv["name"] == "tr-cp" and kv["seed.0.iterations"] == "3"
    assert main(["--config", str(cfg), "run", "--max-iter", "5"]) == 0
    assert parse_summary(capsys.readouterr().out)["seed.0.iterations"] == "5"


def test_read_config_booleans(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("no_subspace = true\njobs = 2\nother = off\n")
    assert read_config(cfg) == ["--no-subspace", "--jobs", "2"]
    cfg.write_text("broken line\n")
    assert main(["--config", str(cfg), "run"]) == 2


def test_config_errors_exit_nonzero(tmp_path, capsys):
    assert main(["run", "--solver", "tltr", "--ell", "80"]) == 2
    assert "ell=80" in capsys.readouterr().err
    assert main(["run", "--data", str(tmp_path / "nope.txt")]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["compare", "--solvers", "tr"] + SMALL) == 2


def test_gen_synthetic_then_run_on_file(tmp_path, capsys):
    path = tmp_path / "syn.libsvm"
    assert main(["gen-synthetic", "--samples", "80", "--features", "6",
                 "--out", str(path)]) == 0
    assert path.read_text().count("\n") == 80
    assert main(["run", "--data", str(path), "--loss", "ls", "--solver", "tltr",
                 "--ell", "2"]) == 0
    assert parse_summary(capsys.readouterr().out)["data"] == str(path)


def test_compare_and_sweep(tmp_path, capsys):
    assert main(["compare", "--solvers", "tr,tltr-nosub", "--fine", "cp",
                 "--seeds", "0,1", "--out", str(tmp_path)] + SMALL) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("name")
    assert lines[1].split()[1:4] == lines[2].split()[1:4]
    assert (tmp_path / "comparison.txt").exists()
    assert main(["sweep", "--param", "s", "--values", "1,2,9", "--sketch", "shash",
                 "--ell", "4"] + SMALL) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 3 and "error" in out[2]
