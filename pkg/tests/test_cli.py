import json
import math

import numpy as np
import pytest

from chiralwqed import __version__
from chiralwqed.cli import OUTPUT_DIR_ENV, run
from chiralwqed.tables import read_table


@pytest.fixture(autouse=True)
def _workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    return tmp_path


def test_bands1d_csv(tmp_path):
    assert run(["bands1d", "--qd", "pi", "--delta", "0.2", "--k-points", "201", "--output", "out.csv"]) == 0
    t = read_table(tmp_path / "out.csv")
    assert [c.name for c in t.columns] == ["kd", "band_index", "energy_re"]
    assert t.metadata["units"]["energy_re"] == "gamma0"
    assert t.metadata["version"] == __version__
    assert t.metadata["config"]["delta"] == 0.2 and t.metadata["config"]["qd"] == "pi"
    assert [e["k"] for e in t.metadata["excluded"]] == [math.pi]
    assert len(t.rows) == 2 * 200


def test_scaling_json_with_fit(tmp_path):
    args = ["scaling", "--model", "1d", "--qd", "pi", "--delta", "0.1", "--n-min", "10",
            "--n-max", "100", "--output", "s.json"]
    assert run(args) == 0
    doc = json.loads((tmp_path / "s.json").read_text())
    assert [r[0] for r in doc["rows"]] == list(range(10, 101, 10))
    fit = doc["metadata"]["fit"]
    assert set(fit) == {"exponent", "intercept", "r_squared", "n_points"}
    assert fit["n_points"] == 10


def test_bands2d_flat_middle_surface(tmp_path):
    args = ["bands2d", "--variant", "linear", "--delta-x", "0", "--delta-y", "0", "--grid", "101",
            "--output", "b.csv"]
    assert run(args) == 0
    t = read_table(tmp_path / "b.csv")
    middle = [r[4] for r in t.rows if r[0] == "grid" and r[3] == 1]
    assert len(middle) == 101 * 101
    assert max(abs(v) for v in middle) <= 1e-12
    assert t.metadata["middle_band_max_abs"] <= 1e-12
    assert {r[0] for r in t.rows} == {"grid", "kx=0", "ky=0"}


def test_exact_bands_emit_both_sign_conventions(tmp_path):
    assert run(["bands1d-exact", "--qd", "pi", "--k-points", "8", "--output", "e.json"]) == 0
    doc = json.loads((tmp_path / "e.json").read_text())
    names = [c["name"] for c in doc["columns"]]
    assert "x" in names and "energy_re" in names
    ix, ie = names.index("x"), names.index("energy_re")
    assert all(r[ie] == -r[ix] for r in doc["rows"])


def test_spectrum1d_defective_warning(tmp_path, capsys):
    assert run(["spectrum1d", "--n-sites", "4", "--delta", "0", "--output", "sp.json"]) == 0
    meta = json.loads((tmp_path / "sp.json").read_text())["metadata"]
    assert meta["defective_warning"] is True
    assert meta["structural_eigenvalues"] == [{"re": 0.0, "im": -0.25, "multiplicity": 8}]
    assert "defective" in capsys.readouterr().err


def test_spectrum2d_single_site(tmp_path):
    assert run(["spectrum2d", "--n-sites", "1", "--output", "sp.csv"]) == 0
    t = read_table(tmp_path / "sp.csv")
    assert [c.name for c in t.columns] == ["index", "energy_re", "energy_im", "gamma", "class", "residual"]
    np.testing.assert_allclose(sorted(r[3] for r in t.rows), [0.25, 0.25, 0.5], atol=1e-10)
    assert t.metadata["defective_warning"] is False


def test_distribution_edge_states(tmp_path):
    assert run(["distribution", "--model", "1d", "--n-sites", "6", "--output", "d.csv",
                "--plot", "d.svg"]) == 0
    t = read_table(tmp_path / "d.csv")
    weights = {(r[0], r[1], r[2]): r[3] for r in t.rows}
    assert weights[("edge_R", 5, "R")] == pytest.approx(1.0)
    assert weights[("edge_L", 0, "L")] == pytest.approx(1.0)
    assert (tmp_path / "d.svg").read_text().startswith("<svg")


def test_distribution_2d_heatmap(tmp_path):
    assert run(["distribution", "--model", "2d", "--qd", "pi/2", "--n-sites", "3",
                "--output", "d.json", "--plot", "d.svg"]) == 0
    doc = json.loads((tmp_path / "d.json").read_text())
    assert len(doc["rows"]) == 27
    assert sum(r[4] for r in doc["rows"]) == pytest.approx(1.0)


def test_compare_reports_flags(tmp_path):
    assert run(["compare", "--qd", "pi/2", "--delta", "0.2", "--k-points", "64", "--output", "c.json",
                "--plot", "c.svg"]) == 0
    meta = json.loads((tmp_path / "c.json").read_text())["metadata"]
    assert any(f["reason"] == "exact roots absent" for f in meta["flags"])
    assert meta["max_deviation"] > 0


def test_plots_for_all_line_kinds(tmp_path):
    assert run(["bands1d", "--k-points", "32", "--output", "a.csv", "--plot", "a.svg"]) == 0
    assert run(["bands2d", "--grid", "11", "--delta-y", "0.02", "--output", "b.csv", "--plot", "b.svg"]) == 0
    assert run(["scaling", "--n-list", "4,6,8", "--delta", "0.1", "--output", "s.csv", "--plot", "s.svg"]) == 0
    assert run(["spectrum1d", "--delta", "0.1", "--output", "p.csv", "--plot", "p.svg"]) == 0
    for name in "abps":
        assert (tmp_path / f"{name}.svg").read_text().rstrip().endswith("</svg>")


def test_scaling_fit_failure_is_recorded(tmp_path, capsys):
    assert run(["scaling", "--model", "2d", "--n-list", "2,3,4", "--output", "s.json"]) == 0
    fit = json.loads((tmp_path / "s.json").read_text())["metadata"]["fit"]
    assert "error" in fit
    assert "fit failed" in capsys.readouterr().err


def test_config_file_and_flag_override(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps({"qd": "pi/2", "delta": 0.3, "k-points": 16}))
    assert run(["bands1d", "--config", "cfg.json", "--delta", "0.1", "--output", "o.csv"]) == 0
    cfg = read_table(tmp_path / "o.csv").metadata["config"]
    assert (cfg["qd"], cfg["delta"], cfg["k_points"]) == ("pi/2", 0.1, 16)


def test_run_is_reproducible_from_its_own_metadata(tmp_path):
    assert run(["compare", "--qd", "0.9", "--delta", "0.4", "--k-points", "40", "--output", "first.csv"]) == 0
    before = (tmp_path / "first.csv").read_bytes()
    assert run(["--config", "first.csv", "--output", "second.csv"]) == 0
    assert (tmp_path / "first.csv").read_bytes() == before
    a = read_table(tmp_path / "first.csv")
    b = read_table(tmp_path / "second.csv")
    np.testing.assert_array_equal(np.array(a.rows, float), np.array(b.rows, float))
    assert {k: v for k, v in b.metadata["config"].items() if k != "output"} == \
        {k: v for k, v in a.metadata["config"].items() if k != "output"}


def test_config_input_is_never_overwritten(tmp_path, capsys):
    assert run(["bands1d", "--k-points", "8", "--output", "x.csv"]) == 0
    before = (tmp_path / "x.csv").read_bytes()
    assert run(["--config", "x.csv"]) == 1
    assert (tmp_path / "x.csv").read_bytes() == before
    assert "refusing" in capsys.readouterr().err


def test_output_dir_env(tmp_path, monkeypatch):
    (tmp_path / "outdir").mkdir()
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "outdir"))
    assert run(["bands1d", "--k-points", "8", "--output", "x.json"]) == 0
    assert (tmp_path / "outdir" / "x.json").exists()


def test_stdout_output(capsys):
    assert run(["bands1d", "--k-points", "4", "--output", "-", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["metadata"]["subcommand"] == "bands1d"


@pytest.mark.parametrize("argv, code, needle", [
    (["bogus"], 2, "invalid choice"),
    (["bands1d", "--qd", "two-pi", "--output", "x.csv"], 2, "invalid phase"),
    (["bands1d", "--k-points", "-3", "--output", "x.csv"], 2, "positive integer"),
    (["bands1d", "--delta", "inf", "--output", "x.csv"], 2, "finite"),
    (["bands1d", "--k-points", "1", "--output", "x.csv"], 1, "k-points"),
    (["bands1d"], 1, "--output is required"),
    (["bands1d", "--output", "nodir/x.csv"], 1, "does not exist"),
    (["scaling", "--n-min", "20", "--n-max", "10", "--output", "x.csv"], 1, "exceeds"),
    (["scaling", "--delta", "0", "--n-list", "3,4,5", "--output", "x.csv"], 1, "delta != 0"),
    (["bands2d", "--variant", "linear", "--qd", "pi/2", "--output", "x.csv"], 1, "qd = pi"),
    (["bands1d", "--config", "none.json", "--output", "x.csv"], 2, "cannot read config"),
    ([], 2, "subcommand is required"),
])
def test_errors_are_one_line_diagnostics(argv, code, needle, capsys):
    assert run(argv) == code
    err = capsys.readouterr().err
    assert needle in err
    last = err.strip().splitlines()[-1]
    assert last.startswith("chiralwqed")


def test_unknown_config_key(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text(json.dumps({"qdd": 1}))
    assert run(["bands1d", "--config", "cfg.json", "--output", "o.csv"]) == 2
    assert "unknown config key 'qdd'" in capsys.readouterr().err
