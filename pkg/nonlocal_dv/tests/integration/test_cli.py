import json
import os

import pytest

from app import main

EXPERIMENTS = os.path.join(os.path.dirname(__file__), "..", "..", "experiments")


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(autouse=True)
def log_to_workdir(workdir, monkeypatch):
    monkeypatch.setenv("NONLOCAL_DV_LOG_FILE", str(workdir / "nonlocal_dv.log"))


def write_config(directory, name, payload):
    path = directory / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload), encoding="utf-8")
    return str(path)


def test_malformed_json_exits_with_config_code(workdir):
    path = write_config(workdir, "broken.json", '{"command": "eigen", ')
    assert main(["--config", path]) == 2


def test_unknown_command_in_file(workdir):
    path = write_config(workdir, "unknown.json", {"command": "solve-everything"})
    assert main(["--config", path]) == 2


def test_unknown_command_on_command_line():
    with pytest.raises(SystemExit) as exit_info:
        main(["solve-everything"])
    assert exit_info.value.code == 2


def test_missing_config_file(workdir):
    assert main(["eigen", "--config", str(workdir / "absent.json")]) == 2


def test_command_needs_config_file():
    assert main(["eigen"]) == 2


def test_negative_seed(workdir):
    path = os.path.join(EXPERIMENTS, "recover_matrix.json")
    assert main(["--config", path, "--seed", "-1", "--output-dir", str(workdir / "seed")]) == 2


def test_invalid_kernel_exponent(workdir):
    path = write_config(workdir, "bad_s.json", {
        "command": "operator-eval",
        "kernel": {"dim": 1, "s": 1.5},
        "function": {"family": "gaussian"},
        "points": [[0.0]],
    })
    assert main(["--config", path, "--output-dir", str(workdir / "bad_s")]) == 2


def test_recover_matrix_writes_artifacts(workdir):
    out = workdir / "recover"
    path = os.path.join(EXPERIMENTS, "recover_matrix.json")
    assert main(["recover-matrix", "--config", path, "--output-dir", str(out)]) == 0

    summary = json.loads((out / "recover_matrix.json").read_text(encoding="utf-8"))
    recovered = summary["report"]["recovered_matrix"]
    assert len(recovered) == 2
    assert summary["max_relative_error"] < 5e-2
    assert summary["provenance"]["command"] == "recover-matrix"
    assert len(summary["provenance"]["config_sha256"]) == 64
    assert (out / "recover_matrix.csv").read_text(encoding="utf-8").startswith("tag,lambda")


def test_verify_exit_code_matches_report(workdir):
    out = workdir / "verify"
    path = write_config(workdir, "verify.json", {
        "command": "verify",
        "verify": {"checks": ["q_form", "closed_forms"], "q_form": {"samples": 50}},
    })
    code = main(["--config", path, "--output-dir", str(out)])

    summary = json.loads((out / "verify.json").read_text(encoding="utf-8"))
    assert set(summary["checks"]) == {"q_form", "closed_forms"}
    assert code == (0 if summary["passed"] else 3)


REDUCED_VERIFY = {
    "checks": ["product_rule", "shape_law", "fourier_roundtrip", "drift_recovery", "eigen_consistency"],
    "product_rule": {"pairs": 3, "mesh_2d": 0.25},
    "shape_law": {"points": 7},
    "fourier_roundtrip": {"matrices": 2},
    "eigen_consistency": {"instances": 3, "mesh": 0.2},
}


def test_null_kernel_exponent(workdir):
    path = write_config(workdir, "null_s.json", {
        "command": "operator-eval",
        "kernel": {"dim": 1, "s": None},
        "function": {"family": "gaussian"},
        "points": [[0.0]],
    })
    assert main(["--config", path, "--output-dir", str(workdir / "null_s")]) == 2


def test_recover_drift_detects_constant_offset(workdir):
    out = workdir / "drift"
    path = os.path.join(EXPERIMENTS, "recover_drift.json")
    assert main(["--config", path, "--output-dir", str(out)]) == 0

    summary = json.loads((out / "recover_drift.json").read_text(encoding="utf-8"))
    assert summary["comparison"]["drift_match"]
    assert summary["comparison"]["diffusion_match"]
    assert summary["constancy"]["constant"]
    assert summary["provenance"]["identities"] == ["drift_probe", "liouville_constancy"]
    assert (out / "recover_drift.csv").read_text(encoding="utf-8").startswith("lambda,first,second")


def test_reruns_are_byte_identical(workdir):
    path = os.path.join(EXPERIMENTS, "recover_matrix.json")
    first, second = workdir / "rerun_a", workdir / "rerun_b"
    assert main(["--config", path, "--output-dir", str(first)]) == 0
    assert main(["--config", path, "--output-dir", str(second), "--threads", "2"]) == 0

    for name in ("recover_matrix.json", "recover_matrix.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_reduced_verify_suite(workdir):
    out = workdir / "verify_reduced"
    path = write_config(workdir, "verify_reduced.json", {"command": "verify", "verify": REDUCED_VERIFY})
    code = main(["--config", path, "--output-dir", str(out)])

    summary = json.loads((out / "verify.json").read_text(encoding="utf-8"))
    assert set(summary["checks"]) == set(REDUCED_VERIFY["checks"])
    for name, result in summary["checks"].items():
        assert "error" not in result, name
    assert len(summary["checks"]["eigen_consistency"]["instances"]) == 3
    assert len(summary["checks"]["fourier_roundtrip"]["entries"]) == 2
    assert summary["checks"]["drift_recovery"]["passed"]
    assert code == (0 if summary["passed"] else 3)
