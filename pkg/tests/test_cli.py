import csv
import json

import numpy as np
import pytest

from cpapprox.cli import main
from cpapprox.complex import BranchAssignment
from cpapprox.cpmap import evaluate, regular_packing
from cpapprox.pipeline import (
    BoundaryModulus,
    ProblemSpec,
    SpecError,
    convergence_report,
    probe_grid,
    run_pipeline,
)
from cpapprox.render import OverlapDetected, overlap_audit, render_svg
from cpapprox.solver import PackingSolution

DISK = {"kind": "disk", "center": [0, 0], "radius": 1}


def write_spec(tmp_path, **fields):
    d = {"domain": DISK, "lambda": 1.0, "xi": 0.5, "meshes": [8]}
    d.update(fields)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(d))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------
# spec parsing


def test_spec_parsing_forms():
    spec = ProblemSpec.from_dict(
        {
            "domain": {"kind": "polygon", "vertices": [[-1, -1], [1, -1], [1, 1], [-1, 1]]},
            "lambda": {"samples": [1, 2, 3, 2], "param": "arclength"},
            "crit": [[[0.1, 0.2], 1], {"point": [-0.2, 0], "order": 2}],
            "xi": 0.5,
            "meshes": [8, 16],
            "solver": {"method": "gauss-seidel", "angle_tol": 1e-11},
        }
    )
    assert spec.crit == ((0.1 + 0.2j, 1), (-0.2 + 0j, 2))
    assert spec.solver.method == "gauss-seidel" and spec.solver.angle_tol == 1e-11
    assert not spec.is_unit_disk and spec.disk_problem() is None


@pytest.mark.parametrize(
    "bad",
    [
        {"meshes": [16, 8]},
        {"meshes": []},
        {"xi": -0.5},
        {"xi": [0.5, 0.1]},
        {"lambda": -1},
        {"lambda": {"samples": [1, 0]}},
        {"crit": [[[2, 0], 1]]},
        {"crit": [[[0.1, 0], 0]]},
        {"domain": {"kind": "ellipse"}},
        {"solver": {"method": "sor"}},
        {"solver": {"tolerance": 1}},
        {"outputs": ["png"]},
    ],
)
def test_bad_specs_rejected(bad):
    d = {"domain": DISK, "lambda": 1.0, "xi": 0.5, "meshes": [8]}
    d.update(bad)
    with pytest.raises(SpecError):
        ProblemSpec.from_dict(d)


def test_tabulated_lambda_interpolates_linearly():
    from cpapprox.complex import DomainSpec

    lam = BoundaryModulus(samples=(1.0, 2.0, 3.0, 4.0))
    disk = DomainSpec.disk()
    assert lam(disk, 1.0) == 1.0
    assert lam(disk, np.exp(1j * np.pi / 4)) == pytest.approx(1.5)
    assert lam(disk, np.exp(-1j * np.pi / 4)) == pytest.approx(2.5)
    square = DomainSpec.polygon([-1 - 1j, 1 - 1j, 1 + 1j, -1 + 1j])
    arc = BoundaryModulus(samples=(1.0, 2.0, 3.0, 4.0), param="arclength")
    assert arc(square, -1 - 1j) == 1.0
    assert arc(square, 1j - 1) == 4.0
    assert arc(square, 0 - 1j) == pytest.approx(1.5)


# --------------------------------------------------------------------------
# pipeline


@pytest.fixture(scope="module")
def identity_results():
    spec = ProblemSpec.from_dict({"domain": DISK, "lambda": 1.0, "xi": 0.5, "meshes": [8, 16, 32]})
    return spec, run_pipeline(spec)


def test_identity_pipeline(identity_results):
    _, results = identity_results
    for res in results:
        assert res.ok
        bv = res.complex.boundary_vertices
        assert np.all(res.solution.radii[bv] == 1 / res.n)
        for z in (0.2 + 0.1j, -0.3j):
            assert evaluate(res.cpmap, z) == pytest.approx(z, abs=1e-12)


def test_normalization_condition(tmp_path):
    spec = ProblemSpec.from_dict(
        {"domain": DISK, "lambda": {"samples": [1.0, 1.3, 0.8, 1.1]}, "crit": [[[0.2, 0.2], 1]], "xi": 0.5, "meshes": [8, 16]}
    )
    for res in run_pipeline(spec):
        assert abs(evaluate(res.cpmap, 0j)) <= 1e-10
        fx = evaluate(res.cpmap, 0.5)
        assert abs(fx.imag) <= 1e-10 and fx.real > 0
        bv = res.complex.boundary_vertices
        assert np.max(np.abs(res.solution.radii[bv] * res.n - res.boundary_lambda)) <= 1e-12


def test_failed_mesh_does_not_stop_later_ones():
    spec = ProblemSpec.from_dict({"domain": DISK, "lambda": 1.0, "xi": 0.3, "meshes": [2, 8]})
    bad, good = run_pipeline(spec)
    assert not bad.ok and "MeshTooCoarse" in bad.error
    assert good.ok


def test_branch_violation_aborts_mesh():
    spec = ProblemSpec.from_dict({"domain": DISK, "lambda": 1.0, "crit": [[[0, 0], 7]], "xi": 0.5, "meshes": [8]})
    (res,) = run_pipeline(spec)
    assert not res.ok
    assert (res.witness.length, res.witness.enclosed_weight) == (12, 7)


def test_probe_grid():
    spec = ProblemSpec.from_dict({"domain": DISK, "lambda": 1.0, "xi": 0.5, "meshes": [8]})
    z = probe_grid(spec)
    assert np.max(np.abs(z)) <= 0.5 + 1e-12
    assert 0j in z and 0.5 in z
    assert len(z) == np.sum(np.abs(np.add.outer(1j * np.linspace(-0.5, 0.5, 41), np.linspace(-0.5, 0.5, 41))) <= 0.5 + 1e-12)


def test_report_rows(identity_results):
    spec, results = identity_results
    rep = convergence_report(spec, results)
    assert rep.column("n") == [8, 16, 32]
    for row in rep.rows:
        assert row["f_error"] < 1e-12 and row["ratio_error"] < 1e-12
        assert row["boundary_pin"] == 0
        assert row["max_principle"] == "ok"
        assert row["angle_residual"] >= 0 and row["tangency_defect"] >= 0


def test_property_columns_for_polygons():
    spec = ProblemSpec.from_dict(
        {
            "domain": {"kind": "polygon", "vertices": [[-1, -1], [1, -1], [1, 1], [-1, 1]]},
            "lambda": {"samples": [1.0, 1.5, 2.0, 1.5], "param": "arclength"},
            "crit": [[[0.2, 0.1], 1]],
            "meshes": [8, 16],
        }
    )
    rep = convergence_report(spec)
    for row in rep.rows:
        assert "f_error" not in row
        assert row["boundary_pin"] <= 1e-12
        assert row["ratio_over_max_lambda"] <= 1e-12
        assert row["winding_error"] < 1e-10
        assert row["max_principle"] == "ok"


# --------------------------------------------------------------------------
# rendering


def test_regular_packing_renders(disk8):
    svg = render_svg(regular_packing(disk8))
    assert svg.count("<circle") == disk8.num_vertices
    assert overlap_audit(regular_packing(disk8)) < 1e-12
    assert svg.startswith('<?xml version="1.0"') and 'version="1.1"' in svg


def test_overlap_detected(disk8):
    q = regular_packing(disk8)
    fat = PackingSolution(disk8, 1.5 * q.radii, q.centers, BranchAssignment(), q.residuals)
    with pytest.raises(OverlapDetected):
        render_svg(fat)


def test_branched_packing_renders_with_highlight(branched8):
    svg = render_svg(branched8, edges=True)
    assert svg.count('fill="#f2b134"') == 1
    assert "<line" in svg


# --------------------------------------------------------------------------
# command line


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--spec", write_spec(tmp_path, meshes=[8, 16]), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "packing_16.svg",
        "packing_8.svg",
        "radii_16.csv",
        "radii_8.csv",
        "report.csv",
    ]
    rows = read_csv(out / "radii_8.csv")
    assert list(rows[0]) == ["vertex", "k", "l", "radius", "center_re", "center_im"]
    assert len(rows) == 55
    report = read_csv(out / "report.csv")
    assert [r["n"] for r in report] == ["8", "16"]
    assert "wall" not in ",".join(report[0])


def test_run_is_deterministic(tmp_path):
    spec = write_spec(tmp_path, crit=[[[0.1, 0.05], 1]], meshes=[8, 16])
    for d in ("a", "b"):
        assert main(["run", "--spec", spec, "--out", str(tmp_path / d)]) == 0
    for name in ("report.csv", "radii_16.csv", "packing_16.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_exit_codes(tmp_path):
    assert main(["run", "--spec", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["report", "--spec", str(bad), "--out", str(tmp_path)]) == 1
    spec = write_spec(tmp_path, xi=0.3)
    assert main(["run", "--spec", spec, "--out", str(tmp_path / "o"), "--n", "2,8"]) == 2
    assert (tmp_path / "o" / "radii_8.csv").exists()
    assert main(["run", "--spec", spec, "--out", str(tmp_path / "o"), "--n", "8,4"]) == 1


def test_report_command(tmp_path, capsys):
    spec = write_spec(tmp_path, crit=[[[0, 0], 1]])
    assert main(["report", "--spec", spec, "--out", str(tmp_path), "--probe-radius", "0.3"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0].startswith("n,status,vertices")
    assert (tmp_path / "report.csv").read_text() == text


def test_render_pair(tmp_path):
    spec = write_spec(tmp_path, crit=[[[0, 0], 1]])
    assert main(["render", "--spec", spec, "--out", str(tmp_path), "--pair"]) == 0
    svg = (tmp_path / "packing_8.svg").read_text()
    assert svg.count("<g>") == 2 and svg.count("<circle") == 2 * 55


def test_check_branch(tmp_path, capsys):
    assert main(["check-branch", "--spec", write_spec(tmp_path, crit=[[[0, 0], 3]])]) == 0
    entry = json.loads(capsys.readouterr().out)
    assert entry["ok"] and len(entry["branch_vertices"]) == 3
    assert main(["check-branch", "--spec", write_spec(tmp_path, crit=[[[0, 0], 7]])]) == 2
    entry = json.loads(capsys.readouterr().out)
    assert not entry["ok"] and entry["length"] == 12 and entry["enclosed_weight"] == 7
    assert len(entry["cycle"]) == 12
