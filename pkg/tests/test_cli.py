import io
import math
import subprocess
import sys

import pytest

from quicktext.cli import main
from quicktext.synthetic import zipf_corpus

TOY = ["__label__sports yankees win game", "__label__sports team wins match",
       "__label__tech new phone released", "__label__tech software update shipped"]


@pytest.fixture
def toy_model(tmp_path, write_corpus):
    path = write_corpus(TOY * 5)
    out = tmp_path / "toy"
    assert main(["train", "-input", str(path), "-output", str(out), "-epoch", "30",
                 "-lr", "0.5", "-dim", "5", "-verbose", "0"]) == 0
    return out.with_suffix(".bin"), path


def run(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_train_writes_model_and_timing(tmp_path, write_corpus, capsys):
    path = write_corpus(TOY)
    code, out, _ = run(["train", "-input", str(path), "-output", str(tmp_path / "m"),
                        "-verbose", "0"], capsys)
    assert code == 0
    assert (tmp_path / "m.bin").stat().st_size > 0
    assert "Read 12 words" in out
    assert "tokens/sec" in out


def test_train_progress_goes_to_stderr(tmp_path, write_corpus, capsys):
    path = write_corpus(zipf_corpus(500, 5, seed=1))
    code, _, err = run(["train", "-input", str(path), "-output", str(tmp_path / "m")], capsys)
    assert code == 0
    assert "Progress" in err


def test_train_requires_input(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "-output", str(tmp_path / "m")])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["train", "-input", "x", "-output", "y", "-bogus", "1"],
    ["train", "-input", "x", "-output", "y", "-inp", "z"],
    ["nonsense"],
    [],
])
def test_bad_arguments_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


@pytest.mark.parametrize("extra", [["-dim", "0"], ["-loss", "hs"], ["-epoch", "-1"]])
def test_train_invalid_config_exits_1(tmp_path, write_corpus, capsys, extra):
    # a one-label corpus cannot be trained with the tree loss
    path = write_corpus(["__label__only a b"])
    code, _, err = run(["train", "-input", str(path), "-output", str(tmp_path / "m"),
                        "-verbose", "0"] + extra, capsys)
    assert code == 1
    assert err


def test_train_missing_input_file(tmp_path, capsys):
    code, _, err = run(["train", "-input", str(tmp_path / "none.txt"),
                        "-output", str(tmp_path / "m"), "-verbose", "0"], capsys)
    assert code == 1
    assert "none.txt" in err


def test_seeded_single_thread_runs_identical(tmp_path, write_corpus, capsys):
    path = write_corpus(zipf_corpus(600, 8, seed=2))
    for name in ("a", "b"):
        assert main(["train", "-input", str(path), "-output", str(tmp_path / name),
                     "-thread", "1", "-seed", "42", "-wordNgrams", "2", "-bucket", "1000",
                     "-verbose", "0"]) == 0
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_test_command(toy_model, capsys):
    model, data = toy_model
    code, out, _ = run(["test", str(model), str(data)], capsys)
    assert code == 0
    assert out.splitlines() == ["N 20", "P@1 1.000", "R@1 1.000"]


def test_test_command_k2(toy_model, capsys):
    model, data = toy_model
    code, out, _ = run(["test", str(model), str(data), "2"], capsys)
    assert code == 0
    assert "P@2 0.500" in out and "R@2 1.000" in out


def test_test_rejects_non_model(toy_model, capsys):
    _, data = toy_model
    code, _, err = run(["test", str(data), str(data)], capsys)
    assert code == 1
    assert "not a quicktext model" in err


def test_predict_training_labels(toy_model, capsys):
    model, data = toy_model
    code, out, _ = run(["predict", str(model), str(data)], capsys)
    assert code == 0
    assert out.splitlines() == [line.split()[0] for line in TOY * 5]


def test_predict_prob_sums_to_one(toy_model, capsys):
    model, data = toy_model
    code, out, _ = run(["predict-prob", str(model), str(data), "2"], capsys)
    assert code == 0
    for line in out.splitlines():
        parts = line.split()
        assert len(parts) == 4
        assert [p.startswith("__label__") for p in parts] == [True, False, True, False]
        assert math.fsum(float(p) for p in parts[1::2]) == pytest.approx(1.0, abs=1e-4)
        assert float(parts[1]) >= float(parts[3])


def test_predict_k_larger_than_labels(toy_model, capsys):
    model, data = toy_model
    code, out, _ = run(["predict", str(model), str(data), "10"], capsys)
    assert code == 0
    assert all(len(line.split()) == 2 for line in out.splitlines())


def test_predict_stdin_alignment(toy_model, capsys, monkeypatch):
    model, _ = toy_model
    stdin = "yankees win\nunknown words only\n\nphone update\n"
    code, out, _ = run(["predict", str(model), "-", "-placeholder", "NONE"], capsys,
                       stdin=stdin, monkeypatch=monkeypatch)
    assert code == 0
    assert out.splitlines() == ["__label__sports", "NONE", "NONE", "__label__tech"]


def test_predict_default_placeholder_is_blank(toy_model, capsys, monkeypatch):
    model, _ = toy_model
    code, out, _ = run(["predict", str(model), "-"], capsys, stdin="zzz\nyankees\n",
                       monkeypatch=monkeypatch)
    assert code == 0
    assert out == "\n__label__sports\n"


def test_predict_empty_stdin(toy_model, capsys, monkeypatch):
    model, _ = toy_model
    code, out, _ = run(["predict", str(model), "-"], capsys, stdin="", monkeypatch=monkeypatch)
    assert code == 0
    assert out == ""


def test_predict_rejects_zero_k(toy_model, capsys):
    model, data = toy_model
    code, _, _ = run(["predict", str(model), str(data), "0"], capsys)
    assert code == 1


def test_module_entry_point(toy_model):
    model, data = toy_model
    proc = subprocess.run([sys.executable, "-m", "quicktext", "test", str(model), str(data)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "P@1 1.000" in proc.stdout
