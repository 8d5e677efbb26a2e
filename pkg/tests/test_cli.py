import json

import pytest

from sparsity_est.bits import BitMatrix
from sparsity_est.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from sparsity_est.fields import FieldMatrix, PrimeField


def test_construct_gt_writes_budgeted_rows(tmp_path, capsys):
    out = tmp_path / "gt.txt"
    assert main(["construct", "--model", "gt", "--n", "64", "--D", "8", "--delta", "4", "--out", str(out)]) == EXIT_OK
    assert "m = 336" in capsys.readouterr().out
    M = BitMatrix.from_text(out.read_text())
    assert (M.m, M.n) == (336, 64)
    side = json.loads((tmp_path / "gt.txt.json").read_text())
    assert side["D"] == 8 and side["delta"] == 4.0


def test_construct_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        main(["construct", "--model", "gt", "--n", "32", "--D", "4", "--delta", "2", "--seed", "7",
              "--out", str(tmp_path / f"{name}.txt")])
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert (tmp_path / "a.txt.json").read_bytes() == (tmp_path / "b.txt.json").read_bytes()


def test_construct_gv(tmp_path, capsys):
    out = tmp_path / "gv.txt"
    assert main(["construct", "--model", "gv", "--n", "100", "--D", "4", "--q", "2", "--out", str(out)]) == EXIT_OK
    assert "m = 44" in capsys.readouterr().out
    assert FieldMatrix.from_text(out.read_text()).m == 44


def test_certify_identity_passes(tmp_path, capsys):
    p = tmp_path / "id.txt"
    p.write_text(BitMatrix.identity(5).to_text())
    assert main(["certify", str(p), "--D", "3", "--delta", "1.3"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_certify_zero_matrix_fails_with_counterexample(tmp_path, capsys):
    p = tmp_path / "z.txt"
    p.write_text(BitMatrix.from_lists([[0, 0, 0], [0, 0, 0]]).to_text())
    assert main(["certify", str(p), "--D", "2", "--delta", "2"]) == EXIT_FAILED
    cap = capsys.readouterr()
    assert json.loads(cap.out)["passed"] is False
    assert "counterexample" in cap.err


def test_certify_noisy_zero_budget_equals_noiseless(tmp_path, capsys):
    p = tmp_path / "m.txt"
    p.write_text(BitMatrix.from_lists([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [1, 0, 0, 1]]).to_text())
    a = main(["certify", str(p), "--D", "2", "--delta", "1.3"])
    out_a = capsys.readouterr().out
    b = main(["certify", str(p), "--D", "2", "--delta", "1.3", "--e0", "0", "--e1", "0"])
    assert a == b and out_a == capsys.readouterr().out


def test_certify_field_matrix_uses_sidecar(tmp_path, capsys):
    out = tmp_path / "rs.txt"
    main(["construct", "--model", "rs", "--n", "6", "--D", "2", "--q", "7", "--out", str(out)])
    capsys.readouterr()
    assert main(["certify", str(out)]) == EXIT_OK
    bad = tmp_path / "bad.txt"
    bad.write_text(FieldMatrix.from_rows(PrimeField(3), [[1, 1, 1]]).to_text())
    assert main(["certify", str(bad), "--D", "2", "--delta", "1.1"]) == EXIT_FAILED


def test_certify_io_and_usage_errors(tmp_path, capsys):
    assert main(["certify", str(tmp_path / "missing.txt"), "--D", "1", "--delta", "2"]) == EXIT_USAGE
    p = tmp_path / "junk.txt"
    p.write_text("2 2\n1 0\n")
    assert main(["certify", str(p), "--D", "1", "--delta", "2"]) == EXIT_USAGE
    p.write_text(BitMatrix.identity(2).to_text())
    assert main(["certify", str(p)]) == EXIT_USAGE


def test_simulate_writes_csv_and_summary(tmp_path):
    out = tmp_path / "run.csv"
    rc = main(["simulate", "--model", "gt", "--n", "32", "--D", "4", "--delta", "4", "--trials", "4",
               "--out", str(out)])
    assert rc == EXIT_OK
    summary = json.loads((tmp_path / "run.csv.summary.json").read_text())
    assert summary["rows"] == 20 and summary["violations"] == 0 and summary["certified"]
    lines = out.read_text().splitlines()
    assert len(lines) == 21


def test_simulate_refuses_unverifiable_scheme(capsys):
    rc = main(["simulate", "--model", "gt", "--n", "32", "--D", "6", "--delta", "1.5", "--t", "1",
               "--samples", "500", "--trials", "1"])
    assert rc == EXIT_FAILED
    assert "refusing" in capsys.readouterr().err


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "vandermonde", "n": 6, "D": 2, "trials": 3, "seed": 1}))
    out = tmp_path / "o.csv"
    assert main(["simulate", "--config", str(cfg), "--trials", "2", "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 1 + 2 * 3


@pytest.mark.parametrize("content", ["{not json", "[1, 2]", json.dumps({"model": "gt", "bogus": 1})])
def test_bad_config_is_usage_error(tmp_path, content):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_USAGE


def test_missing_config_is_usage_error(tmp_path):
    assert main(["bounds", "--config", str(tmp_path / "none.json")]) == EXIT_USAGE


def test_bounds_table_and_json(capsys):
    assert main(["bounds", "--n", "100", "--D", "4", "--delta", "2", "--q", "2"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "Group testing" in text and "GF(2)" in text and "over R" in text
    assert main(["bounds", "--n", "100", "--D", "4", "--delta", "2", "--q", "2", "--json"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["linear_reals"]["lower"] == 3 and data["linear_reals"]["upper"] == 8
    assert data["linear_fq"]["constructive"] == 44


def test_unwritable_output_is_usage_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rc = main(["construct", "--model", "vandermonde", "--n", "5", "--D", "1", "--out", str(blocker / "sub" / "m.txt")])
    assert rc == EXIT_USAGE
