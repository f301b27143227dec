import json

import numpy as np
import pytest

from nagaoka.cli import main

TRIANGLE = """
[lattice]
sites = 3
generator = complete
extent = 3
t = 1.0
[coulomb]
u = inf
"""

HOLSTEIN_PAIR = """
[lattice]
sites = 2
0 1 1.0
[coulomb]
u = inf
[phonon]
omega = 1.0
cutoff = 2
0 0 0.5
1 1 0.5
"""


@pytest.fixture
def triangle_file(tmp_path):
    path = tmp_path / "triangle.ini"
    path.write_text(TRIANGLE)
    return str(path)


RADIATION_TRIANGLE = """
[lattice]
sites = 3
generator = complete
extent = 3
t = 1.0
[coulomb]
u = inf
[radiation]
L = 4.0
kappa = 1.0
m0 = 1.0
cutoff = 2
"""


@pytest.fixture
def holstein_file(tmp_path):
    path = tmp_path / "holstein.ini"
    path.write_text(HOLSTEIN_PAIR)
    return str(path)


@pytest.fixture
def radiation_file(tmp_path):
    path = tmp_path / "radiation.ini"
    path.write_text(RADIATION_TRIANGLE)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


def test_basis_reports_dimension(capsys, triangle_file):
    code, out = run(capsys, "basis", "--model", triangle_file, "--m", "1", "--list")
    assert code == 0
    payload = json.loads(out)
    assert payload["results"][0]["dimension"] == 3
    assert len(payload["results"][0]["configs"]) == 3
    assert payload["model_digest"]


def test_connectivity_json_schema(capsys, triangle_file):
    code, out = run(capsys, "connectivity", "--model", triangle_file, "--all")
    assert code == 0
    rows = json.loads(out)["results"]
    assert [row["m"] for row in rows] == ["-1", "0", "1"]
    assert all(row["connected"] for row in rows)
    assert all(sum(row["orbit_sizes"]) == row["dimension"] for row in rows)


def test_byte_identical_reruns(capsys, triangle_file):
    _, first = run(capsys, "ed", "--model", triangle_file, "--all")
    _, second = run(capsys, "ed", "--model", triangle_file, "--all")
    assert first == second


def test_ed_rows_sorted_and_spin_resolved(capsys, holstein_file):
    code, out = run(capsys, "ed", "--model", holstein_file, "--all", "--cutoff", "2")
    assert code == 0
    rows = json.loads(out)["results"]
    assert [row["m"] for row in rows] == ["-1/2", "1/2"]
    assert all(row["resolved_s"] == "1/2" for row in rows)
    assert all(row["boson_dimension"] == 9 for row in rows)


def test_ed_jobs_parallel_matches_serial(capsys, triangle_file):
    _, serial = run(capsys, "ed", "--model", triangle_file, "--all")
    _, parallel = run(capsys, "ed", "--model", triangle_file, "--all", "--jobs", "2")
    assert json.loads(serial)["results"] == json.loads(parallel)["results"]


def test_spin_table(capsys, triangle_file):
    code, out = run(capsys, "spin", "--model", triangle_file)
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 4                      # header plus one row per sector
    assert lines[0].split() == ["M", "dim", "E0", "deg", "gap", "S"]


def test_assemble_triplets(capsys, triangle_file):
    code, out = run(capsys, "assemble", "--model", triangle_file,
                    "--form", "nagaoka", "--m", "0")
    assert code == 0
    lines = out.strip().splitlines()
    header = json.loads(lines[0])
    assert header["form"] == "nagaoka"
    assert header["dimension"] == 6
    rows, cols, nnz = map(int, lines[1].split())
    assert (rows, cols) == (6, 6)
    assert nnz == len(lines) - 2
    # rebuild and check hermiticity of the emitted triplets
    mat = np.zeros((rows, cols), dtype=complex)
    for line in lines[2:]:
        i, j, re, im = line.split()
        mat[int(i) - 1, int(j) - 1] = float(re) + 1j * float(im)
    assert np.max(np.abs(mat - mat.conj().T)) == 0.0


def test_assemble_hubbard_needs_finite_u(capsys, triangle_file):
    code, _ = run(capsys, "assemble", "--model", triangle_file, "--form", "hubbard")
    assert code == 1
    code, out = run(capsys, "assemble", "--model", triangle_file,
                    "--form", "hubbard", "--u", "4.0")
    assert code == 0
    assert json.loads(out.splitlines()[0])["dimension"] == 15


def test_ed_radiation_model_file(capsys, radiation_file):
    code, out = run(capsys, "ed", "--model", radiation_file, "--all")
    assert code == 0
    rows = json.loads(out)["results"]
    assert all(row["resolved_s"] == "1" for row in rows)
    assert all(row["boson_dimension"] == 9 for row in rows)   # two mass modes, cutoff 2
    code, out = run(capsys, "assemble", "--model", radiation_file,
                    "--form", "radiation", "--m", "0")
    assert code == 0
    assert json.loads(out.splitlines()[0])["provenance"] == "radiation"


def test_largeu_jobs_parallel_matches_serial(capsys, triangle_file):
    _, serial = run(capsys, "largeu", "--model", triangle_file, "--u-list", "100,1000")
    _, parallel = run(capsys, "largeu", "--model", triangle_file,
                      "--u-list", "100,1000", "--jobs", "2")
    assert serial == parallel


def test_largeu_csv(capsys, triangle_file):
    code, out = run(capsys, "largeu", "--model", triangle_file,
                    "--u-list", "100,1000", "--z", "auto")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "u,delta,delta_times_u"
    values = [line.split(",") for line in lines[1:]]
    assert [float(v[0]) for v in values] == [100.0, 1000.0]
    assert float(values[1][1]) < float(values[0][1])


def test_certify_json(capsys, triangle_file):
    code, out = run(capsys, "certify", "--model", triangle_file, "--all")
    assert code == 0
    rows = json.loads(out)["results"]
    assert all(row["ground_strictly_positive"] for row in rows)
    assert all(row["min_entry"] > 1e-12 for row in rows)


def test_certify_qgrid(capsys, holstein_file):
    spacing = float(np.sqrt(2.0) * 0.5 / 3)
    code, out = run(capsys, "certify", "--model", holstein_file, "--m", "1/2",
                    "--qgrid", "32", "--spacing", f"{spacing!r}")
    assert code == 0
    row = json.loads(out)["results"][0]
    assert row["ground_strictly_positive"]
    assert row["points"] == 32


def test_unknown_subcommand_exits_1(capsys):
    assert main(["frobnicate"]) == 1


def test_missing_model_exits_1(capsys):
    code, _ = run(capsys, "ed", "--model", "missing.toml", "--all")
    assert code == 1


def test_invalid_sector_exits_1(capsys, triangle_file):
    code, _ = run(capsys, "ed", "--model", triangle_file, "--m", "1/2")
    assert code == 1


def test_budget_exhaustion_exits_2(capsys, holstein_file, monkeypatch):
    monkeypatch.setenv("NAGAOKA_DIM_BUDGET", "4")
    code, _ = run(capsys, "ed", "--model", holstein_file, "--all")
    assert code == 2


def test_out_file(capsys, tmp_path, triangle_file):
    target = tmp_path / "report.json"
    code, out = run(capsys, "connectivity", "--model", triangle_file,
                    "--all", "--out", str(target))
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())["results"]


def test_reproduce_subset(capsys, tmp_path):
    target = tmp_path / "summary.json"
    code = main(["reproduce", "--criteria", "2,3,9", "--out", str(target)])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("PASS") == 3 + 1           # three criteria plus the summary line
    summary = json.loads(target.read_text())
    assert summary["all_passed"]
    assert [row["criterion"] for row in summary["results"]] == [2, 3, 9]
