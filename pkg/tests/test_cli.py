import json

import pytest

from solenoidlab.cli import main
from solenoidlab.manifest import ExperimentManifest, ManifestError, alpha_value

BASE_MANIFEST = {
    "seed": 123,
    "target_class": [0.3, 0.7],
    "horizons": {"t_min": 10.0, "t_max": 2000.0, "count": 12},
    "sweep": {"leaves": 5, "returns": 2000},
    "raster": {"n_grid": 420, "tube_radius": 0.02},
    "intersect": {"second_class": [1.0, 0.0], "shift": [0.31, 0.17],
                  "leafwise_returns": 600},
    "denjoy": {"rotation_returns": 20000, "partition_weights": [0.3, 0.7]},
    "cluster": {"fixture": "two_ray", "horizon_count": 200, "radius": 0.05},
}


def write_manifest(tmp_path, extra=None, name="m.json"):
    doc = dict(BASE_MANIFEST)
    if extra:
        doc.update(extra)
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def run(tmp_path, sub, extra=None, outname="out", args=()):
    m = write_manifest(tmp_path, extra)
    out = tmp_path / outname
    code = main([sub, "--manifest", str(m), "--out", str(out), *args])
    return code, out


def test_empty_manifest_lists_missing_fields(tmp_path, capsys):
    p = tmp_path / "empty.json"
    p.write_text("{}")
    code = main(["realize", "--manifest", str(p), "--out", str(tmp_path / "o")])
    assert code == 2
    err = capsys.readouterr().err
    assert "seed" in err
    assert "target_class" in err


def test_bad_json_is_validation_error(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    code = main(["realize", "--manifest", str(p), "--out", str(tmp_path / "o")])
    assert code == 2


def test_realize_subcommand(tmp_path):
    code, out = run(tmp_path, "realize")
    assert code == 0
    assert (out / "realize_current.csv").exists()
    assert (out / "realize_report.txt").exists()
    assert (out / "realize.png").exists()
    txt = (out / "realize_report.txt").read_text()
    assert "status: pass" in txt
    assert "wall-clock" in txt


def test_realize_deterministic_csv(tmp_path):
    _, out1 = run(tmp_path, "realize", outname="o1")
    _, out2 = run(tmp_path, "realize", outname="o2")
    b1 = (out1 / "realize_current.csv").read_bytes()
    b2 = (out2 / "realize_current.csv").read_bytes()
    assert b1 == b2


def test_schwartzman_subcommand(tmp_path):
    code, out = run(tmp_path, "schwartzman", args=("--workers", "2"))
    assert code == 0
    assert (out / "schwartzman_convergence.csv").exists()
    assert (out / "schwartzman.png").exists()
    header = (out / "schwartzman_convergence.csv").read_text().splitlines()[0]
    assert header == "estimator,s,t,span,component,value"


def test_cluster_subcommand_two_ray(tmp_path):
    code, out = run(tmp_path, "cluster")
    assert code == 0
    assert (out / "cluster_points.csv").exists()
    assert (out / "cluster.png").exists()


def test_cluster_subcommand_flow(tmp_path):
    code, out = run(tmp_path, "cluster",
                    extra={"cluster": {"fixture": "flow", "horizon_count": 40,
                                       "radius": 0.02}})
    assert code == 0


def test_intersect_subcommand(tmp_path):
    code, out = run(tmp_path, "intersect")
    assert code == 0
    assert (out / "intersect_records.csv").exists()
    assert (out / "intersect_leafwise.csv").exists()
    assert (out / "intersect.png").exists()
    txt = (out / "intersect_report.txt").read_text()
    assert "cup product" in txt


def test_dualform_subcommand(tmp_path):
    code, out = run(tmp_path, "dualform")
    assert code == 0
    assert (out / "dualform.grid").exists()
    assert (out / "dualform_pairings.csv").exists()
    assert (out / "dualform.png").exists()
    from solenoidlab.currents import GridForm
    grid = GridForm.load(out / "dualform.grid")
    assert grid.n == 420


def test_norm_subcommand(tmp_path):
    code, out = run(tmp_path, "norm")
    assert code == 0
    assert (out / "norm_sequence.csv").exists()
    assert (out / "norm.png").exists()


def test_denjoy_subcommand(tmp_path):
    code, out = run(tmp_path, "denjoy")
    assert code == 0
    assert (out / "denjoy_audit.csv").exists()
    assert (out / "denjoy_partition.csv").exists()
    assert (out / "denjoy.png").exists()


def test_seed_override_changes_effective_seed(tmp_path):
    m = write_manifest(tmp_path)
    man = ExperimentManifest.load(m)
    eff = man.effective("realize", seed_override=999)
    assert eff["seed"] == 999


def test_tolerance_scale(tmp_path):
    m = write_manifest(tmp_path)
    man = ExperimentManifest.load(m)
    eff = man.effective("realize", tolerance_scale=10.0)
    assert eff["tolerances"]["current"] == pytest.approx(1e-5)


def test_alpha_from_continued_fraction():
    golden = alpha_value({"continued_fraction": [1] * 40})
    assert golden == pytest.approx((5 ** 0.5 - 1) / 2, abs=1e-12)


def test_manifest_rejects_bad_tolerance(tmp_path):
    p = write_manifest(tmp_path, extra={"tolerances": {"pairing": -1.0}})
    man = ExperimentManifest.load(p)
    with pytest.raises(ManifestError):
        man.validate("intersect")
