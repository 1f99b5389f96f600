import json

import pytest

from revenue_allocator.cli import RunConfig, config_from_args, main, run
from revenue_allocator.ext.errors import InputError
from revenue_allocator.ext.report_io import REPORT_COLUMNS, read_csv_report


def test_numerical_example_end_to_end(tmp_path):
    assert main(["--dataset", "numerical_example", "--mode", "both", "--output", str(tmp_path)]) == 0

    assert (tmp_path / "cem.csv").is_file()
    for mode in ("direct", "secondary"):
        for concept in ("shapley", "leastcore", "nucleolus"):
            report = json.loads((tmp_path / f"{mode}_{concept}.json").read_text())
            assert report["mode"] == mode and report["concept"] == concept
            assert len(report["players"]) == 14
            assert sum(p["allocation"] for p in report["players"]) == pytest.approx(100.0, abs=1e-6)
            assert report["R1"] + report["R2"] == pytest.approx(100.0)
            assert (tmp_path / f"{mode}_{concept}_plot.csv").is_file()


def test_json_output_is_deterministic(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for output in (first, second):
        assert main(["--dataset", "numerical_example", "--concepts", "nucleolus", "--output", str(output)]) == 0

    assert (first / "secondary_nucleolus.json").read_bytes() == (second / "secondary_nucleolus.json").read_bytes()
    assert (first / "cem.csv").read_bytes() == (second / "cem.csv").read_bytes()


def test_csv_report_reads_back(tmp_path):
    assert main([
        "--dataset", "numerical_example", "--concepts", "shapley", "--format", "csv", "--output", str(tmp_path),
    ]) == 0

    frame = read_csv_report(tmp_path / "secondary_shapley.csv")
    assert list(frame.columns) == REPORT_COLUMNS
    assert frame["allocation"].sum() == pytest.approx(100.0, abs=1e-6)
    assert set(frame["stage"]) == {1, 2}
    assert frame.loc[frame["label"] == "4.2", "dmu_id"].item() == "4"


def test_html_format(tmp_path):
    assert main([
        "--dataset", "numerical_example", "--concepts", "nucleolus", "--format", "html",
        "--timezone", "Europe/Berlin", "--output", str(tmp_path),
    ]) == 0

    html = (tmp_path / "secondary_nucleolus.html").read_text()
    assert "7.2" in html


def test_input_file(tmp_path):
    panel = tmp_path / "panel.csv"
    panel.write_text("id,x1,z1,y1\nA,1,2,3\nB,2,2,1\nC,3,1,2\n")

    assert main(["--input", str(panel), "--dims", "1,1,1", "--revenue", "30", "--output", str(tmp_path / "out")]) == 0
    report = json.loads((tmp_path / "out" / "secondary_nucleolus.json").read_text())
    assert [p["dmu_id"] for p in report["players"][:3]] == ["A", "B", "C"]


def test_input_errors_exit_with_two(tmp_path, capsys):
    panel = tmp_path / "panel.csv"
    panel.write_text("id,x1,z1,y1\nA,1,2,3\nB,2,x,1\n")

    assert main(["--input", str(panel), "--dims", "1,1,1", "--revenue", "30", "--output", str(tmp_path)]) == 2
    assert "input error" in capsys.readouterr().err


def test_missing_dims_with_input(tmp_path):
    assert main(["--input", str(tmp_path / "panel.csv"), "--output", str(tmp_path)]) == 2


def test_direct_mode_on_bank_data_hits_size_limit(tmp_path, capsys):
    assert main(["--dataset", "bank_branches", "--mode", "direct", "--output", str(tmp_path)]) == 3
    assert "size limit" in capsys.readouterr().err


def test_self_check_writes_summary(tmp_path):
    assert main([
        "--dataset", "numerical_example", "--concepts", "shapley,nucleolus", "--self-check", "--output", str(tmp_path),
    ]) == 0

    summary = json.loads((tmp_path / "self_check.json").read_text())
    assert summary["dataset"] == "numerical_example"
    assert summary["profile"] == "paper"
    assert summary["checked"] > 14 * 14


def test_unknown_tolerance_profile(tmp_path, monkeypatch):
    monkeypatch.setenv("ALLOC_TOL", "loose")
    code = main([
        "--dataset", "numerical_example", "--concepts", "shapley", "--self-check", "--output", str(tmp_path),
    ])
    assert code == 2


def test_dataset_defaults():
    config = config_from_args(["--dataset", "bank_branches"])

    assert config.dims == (3, 2, 2)
    assert config.revenue == 1000.0
    assert config.concepts == ("shapley", "leastcore", "nucleolus")


def test_concept_aliases():
    assert config_from_args(["--dataset", "numerical_example", "--concepts", "least_core"]).concepts == ("leastcore",)


@pytest.mark.parametrize("changes", [
    {"mode": "sideways"},
    {"concepts": ("banzhaf",)},
    {"fmt": "xml"},
    {"workers": 0},
    {"revenue": -1.0},
    {"singleton_universe": "stage"},
])
def test_run_config_validation(tmp_path, changes):
    arguments = {"output": tmp_path, "dims": (3, 1, 2), "revenue": 100.0, "dataset": "numerical_example", **changes}
    with pytest.raises(InputError):
        RunConfig(**arguments)


def test_run_reports_category(tmp_path, capsys):
    config = RunConfig(output=tmp_path, dims=(1, 1, 1), revenue=5.0, input=tmp_path / "missing.csv")

    assert run(config) == 2
    assert capsys.readouterr().err.startswith("input error:")
