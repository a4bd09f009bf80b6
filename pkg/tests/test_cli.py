import json
import math
from pathlib import Path

import pytest

from skorohod import cli

FIX = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_decompose_uniform_single_component(capsys):
    code, out, err = run(capsys, "decompose", FIX / "uniform-density.json")
    assert code == 0
    assert len(json.loads(out)["components"]) == 1


def test_decompose_triangle_prints_identity(capsys):
    code, out, err = run(capsys, "decompose", FIX / "triangle.json", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "weight,a,b,a_lo,a_hi,b_lo,b_hi"
    assert "||mu'||_TV = 2 " in err and "sum w 2/(b-a) = 2 " in err


def test_decompose_rejects_bad_mass(capsys):
    code, out, err = run(capsys, "decompose", FIX / "bad-mass.json")
    assert code == 2
    assert "unit mass" in err


def test_project_diagonal_square(capsys, tmp_path):
    out_file = tmp_path / "dens.csv"
    code, out, err = run(capsys, "project", FIX / "square.json", "--vector", "1,1", "--normalize",
                         "--output", out_file)
    assert code == 0
    lines = [ln for ln in err.splitlines() if ln.startswith(("LHS", "RHS"))]
    values = [float(ln.rsplit("=", 1)[1]) for ln in lines]
    assert values[0] == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert values[1] == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert out_file.read_text().startswith("x,density")


def test_project_coordinate_direction(capsys):
    code, out, err = run(capsys, "project", FIX / "square.json", "--vector", "1,0")
    assert code == 0
    assert "LHS ||(mu o a^-1)'||_TV = 2\n" in err


def test_project_planar_is_report_only(capsys):
    code, out, err = run(capsys, "project", FIX / "square.json", "--matrix", "[[1,0],[0,1]]",
                         "--samples", "20000", "--bins", "8")
    assert code == 0
    assert "report-only" in err
    assert out.splitlines()[0] == "bin_left_0,bin_right_0,bin_left_1,bin_right_1,mass"


def test_project_dimension_mismatch(capsys):
    code, out, err = run(capsys, "project", FIX / "square.json", "--vector", "1,0,0")
    assert code == 2
    assert "dimension mismatch" in err


def test_polyimage_flags_singular_bin(capsys):
    code, out, err = run(capsys, "polyimage", FIX / "unit.json", FIX / "x-squared.json", "--samples", "20000")
    assert code == 0
    assert "singular bin 0" in err
    ratio = float(err.split("Besov ratio at alpha = 1/2: ")[1].split()[0])
    assert ratio == pytest.approx(2.0, abs=1e-9)
    assert err.count("lambda(A) =") == 4


def test_polyimage_linear_finite_besov(capsys):
    code, out, err = run(capsys, "polyimage", FIX / "unit.json", FIX / "x-linear.json", "--samples", "20000")
    assert code == 0
    ratio = float(err.split("Besov ratio at alpha = 1/1: ")[1].split()[0])
    assert math.isfinite(ratio)


def test_polyimage_reproducible(capsys):
    args = ("polyimage", FIX / "unit.json", FIX / "x-squared.json", "--samples", "20000", "--seed", "17")
    _, out1, _ = run(capsys, *args)
    _, out2, _ = run(capsys, *args)
    assert out1 == out2


def test_verify_forced_fail_exits_one(capsys):
    code, out, err = run(capsys, "verify", FIX / "forced-fail.json")
    assert code == 1
    assert "FAIL" in err


def test_verify_missing_file_exits_two(capsys):
    code, _, err = run(capsys, "verify", FIX / "missing.json")
    assert code == 2


def test_verify_csv_output(capsys, tmp_path):
    out_file = tmp_path / "r.csv"
    code, _, _ = run(capsys, "verify", FIX / "forced-fail.json", "--format", "csv", "--output", out_file)
    assert code == 1
    assert out_file.read_text().splitlines()[1].split(",")[6] == "fail"


@pytest.mark.parametrize("seed", ["-1", str(2 ** 64), "abc"])
def test_seed_must_be_unsigned_64_bit(capsys, seed):
    code, _, _ = run(capsys, "verify", FIX / "forced-fail.json", "--seed", seed)
    assert code == 2


def test_unknown_subcommand(capsys):
    assert run(capsys, "frobnicate")[0] == 2
