from __future__ import annotations

import json

import pytest

from rieszfield.cli import main
from rieszfield.scenarios import builtin_scenarios, list_catalog


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def _minimal_config():
    return {
        "id": "minimal",
        "alpha": 2.0,
        "geometry": {"kind": "sphere", "dim": 3, "radius": 1.0, "n_nodes": 2},
        "tasks": [{"type": "solve_gauss"}],
    }


def test_minimal_config_runs_and_splits_mass(tmp_path, capsys):
    cfg = _write(tmp_path, "minimal.json", _minimal_config())
    out = str(tmp_path / "out")
    assert main(["run", cfg, "--out", out]) == 0
    report = json.loads((tmp_path / "out" / "minimal" / "solve_gauss.json").read_text())
    assert report["weights"]["weights"] == pytest.approx([0.5, 0.5])
    summary = json.loads((tmp_path / "out" / "minimal" / "summary.json").read_text())
    assert summary["all_passed"] is True


def test_omega_source_on_node_exits_2(tmp_path, capsys):
    cfg = _minimal_config()
    cfg["id"] = "bad"
    cfg["field"] = {"omega": {"minus": {"points": [[0.0, 0.0, 1.0]], "weights": [1.0]}}}
    path = _write(tmp_path, "bad.json", cfg)
    assert main(["run", path, "--out", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    assert "d(S_omega, A) > 0" in err


def test_invalid_json_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{ not json")
    assert main(["run", str(path)]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_missing_keys_exit_2(tmp_path, capsys):
    path = _write(tmp_path, "x.json", {"id": "x", "alpha": 2.0})
    assert main(["run", str(path)]) == 2


def test_unknown_builtin_exits_2(capsys):
    assert main(["run", "--builtin", "no_such_thing"]) == 2


def test_list_has_at_least_five_builtins(capsys):
    assert main(["list"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    assert len(lines) >= 5


def test_list_filter_by_thinness_tag(capsys):
    assert main(["list", "--tag", "thinness"]) == 0
    out = capsys.readouterr().out
    names = [l.split()[0] for l in out.splitlines() if l.strip()]
    assert names and all("thinness" in n or "example" in n for n in names)


def test_list_unknown_tag_is_empty_and_ok(capsys):
    assert main(["list", "--tag", "zzz"]) == 0
    assert capsys.readouterr().out.strip() == ""


def test_rerun_summary_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, "minimal.json", _minimal_config())
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["run", cfg, "--out", a]) == 0
    assert main(["run", cfg, "--out", b]) == 0
    sa = (tmp_path / "a" / "minimal" / "summary.json").read_bytes()
    sb = (tmp_path / "b" / "minimal" / "summary.json").read_bytes()
    assert sa == sb


def test_emit_gram_writes_matrix(tmp_path):
    cfg = _write(tmp_path, "minimal.json", _minimal_config())
    out = str(tmp_path / "out")
    assert main(["run", cfg, "--out", out, "--emit-gram"]) == 0
    gram = (tmp_path / "out" / "minimal" / "gram.csv").read_text().splitlines()
    assert gram[0].startswith("# dim=3")
    assert len(gram) == 3


def test_builtin_catalog_configs_parse():
    from rieszfield.scenarios import expand_config

    for name, b in builtin_scenarios().items():
        scenarios = expand_config(b.config)
        assert scenarios, name


def test_geometry_csv_emitted(tmp_path):
    cfg = _write(tmp_path, "minimal.json", _minimal_config())
    out = str(tmp_path / "out")
    assert main(["run", cfg, "--out", out]) == 0
    assert (tmp_path / "out" / "minimal" / "geometry.csv").exists()


def test_suite_config_expansion(tmp_path):
    suite = {
        "id": "pair",
        "suite": [_minimal_config(), dict(_minimal_config(), id="minimal2")],
    }
    cfg = _write(tmp_path, "suite.json", suite)
    out = str(tmp_path / "out")
    assert main(["run", cfg, "--out", out]) == 0
    assert (tmp_path / "out" / "minimal" / "summary.json").exists()
    assert (tmp_path / "out" / "minimal2" / "summary.json").exists()


def test_tol_override_recorded(tmp_path):
    cfg = _write(tmp_path, "minimal.json", _minimal_config())
    out = str(tmp_path / "out")
    assert main(["run", cfg, "--out", out, "--tol", "1e-6"]) == 0
    summary = json.loads((tmp_path / "out" / "minimal" / "summary.json").read_text())
    assert summary["solver_tol"] == 1e-6


def test_catalog_demo_tag_covers_quick_paths():
    demos = list_catalog("demo")
    assert len(demos) >= 3


def test_exit_one_iff_aggregated_pass_flag_false(tmp_path):
    cfg = {
        "id": "failing_support",
        "alpha": 2.0,
        "geometry": {"kind": "sphere", "dim": 3, "radius": 1.0, "n_nodes": 60},
        "field": {"delta": {"sigma": {"points": [[2.0, 0.0, 0.0]], "weights": [0.5]}}},
        # jaccard can never exceed 1, so this certified check must fail
        "tasks": [{"type": "support", "prediction": "full_A", "min_jaccard": 1.1}],
    }
    path = _write(tmp_path, "fail.json", cfg)
    out = str(tmp_path / "out")
    assert main(["run", path, "--out", out]) == 1
    summary = json.loads((tmp_path / "out" / "failing_support" / "summary.json").read_text())
    assert summary["all_passed"] is False


@pytest.mark.slow
def test_example_rotation_suite_runs_clean(tmp_path):
    out = str(tmp_path / "out")
    assert main(["run", "--builtin", "example_rotation_suite", "--out", out]) == 0
    for name in ("thinness_f1", "thinness_f2", "thinness_f3"):
        summary = json.loads((tmp_path / "out" / name / "summary.json").read_text())
        assert summary["all_passed"] is True
        assert (tmp_path / "out" / name / "thinness.csv").exists()


def test_admissibility_warning_opt_in(tmp_path):
    # psi = +inf off a tag nothing carries: fails admissibility; the opt-in
    # downgrades the failure to a recorded warning (and the solve then errors
    # into a failed task rather than a config abort).
    cfg = _minimal_config()
    cfg["id"] = "warned"
    cfg["field"] = {"psi": [{"kind": "inf_outside_region", "region": "interior"}]}
    path = _write(tmp_path, "warn.json", cfg)
    out = str(tmp_path / "out")
    assert main(["run", path, "--out", out]) == 2  # without the opt-in: config error
    cfg["allow_admissibility_warnings"] = True
    path = _write(tmp_path, "warn2.json", cfg)
    assert main(["run", path, "--out", out]) == 1  # runs; the solve task fails
    summary = json.loads((tmp_path / "out" / "warned" / "summary.json").read_text())
    assert summary["admissibility"]["passed"] is False
    assert summary["tasks"]["solve_gauss"]["passed"] is False
    assert "error" in summary["tasks"]["solve_gauss"]


def test_field_csv_emitted_for_nonzero_fields(tmp_path):
    cfg = _minimal_config()
    cfg["id"] = "withfield"
    cfg["field"] = {"delta": {"sigma": {"points": [[2.0, 0.0, 0.0]], "weights": [1.0]}}}
    path = _write(tmp_path, "f.json", cfg)
    out = str(tmp_path / "out")
    assert main(["run", path, "--out", out]) == 0
    assert (tmp_path / "out" / "withfield" / "field.csv").exists()


def test_solvability_task_emits_trace(tmp_path):
    cfg = {
        "id": "probe_smoke",
        "alpha": 2.0,
        "geometry": {
            "kind": "rotation_body", "dim": 3, "profile": 1, "profile_exponent": 1.0,
            "truncation_radius": 4.0, "shell_base": 2.0, "mesh_scale": 0.2, "n_nodes": 300,
        },
        "field": {"delta": {"sigma": {"points": [[1.5, 1.2, 0.0]], "weights": [0.5]}}},
        "tasks": [{"type": "solvability_probe", "radii": [4.0, 6.0, 8.0]}],
    }
    path = _write(tmp_path, "probe.json", cfg)
    out = str(tmp_path / "out")
    rc = main(["run", path, "--out", out])
    assert rc in (0, 1)  # verdict quality is not asserted at this coarse mesh
    payload = json.loads((tmp_path / "out" / "probe_smoke" / "solvability_probe.json").read_text())
    for key in ("radii", "balayage_masses", "c_values", "tail_fractions", "verdict"):
        assert key in payload
    trace = (tmp_path / "out" / "probe_smoke" / "solvability.csv").read_text().splitlines()
    assert trace[0] == "R,balayage_mass,c,tail_fraction,mass_radius"
    assert len(trace) == 4
