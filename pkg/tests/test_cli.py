import numpy as np
import pytest

from dustlab.cli import main
from dustlab.formats import read_bgr, read_cad, write_bgr
from dustlab.geometry import BoxGrid, Square


def run(*args):
    return main(list(args))


@pytest.fixture()
def dust_bgr(tmp_path):
    path = tmp_path / "dust.bgr"
    code = run("gen", "--alpha", "0.25", "--depth", "4",
               "--grid-out", str(path), "--level", "8")
    assert code == 0
    return path


class TestGen:
    def test_writes_expected_address_count(self, tmp_path):
        out = tmp_path / "c.cad"
        assert run("gen", "--alpha", "0.25", "--depth", "3", "--out", str(out)) == 0
        alpha, depth, words = read_cad(out)
        assert float(alpha) == 0.25
        assert depth == 3
        assert len(words) == 64

    def test_dimension_resolves_alpha(self, tmp_path, capsys):
        out = tmp_path / "c.cad"
        assert run("gen", "--dim", "1.5", "--depth", "2", "--out", str(out)) == 0
        echoed = capsys.readouterr().out
        assert "resolved_alpha=0.3968502629920499" in echoed
        alpha, _, words = read_cad(out)
        assert float(alpha) == pytest.approx(0.39685026299204987, rel=1e-15)
        assert len(words) == 16

    def test_missing_alpha_and_dim_is_usage_error(self, tmp_path):
        assert run("gen", "--depth", "2", "--out", str(tmp_path / "x.cad")) == 2

    def test_both_alpha_and_dim_rejected(self, tmp_path):
        assert run("gen", "--alpha", "0.25", "--dim", "1.0", "--depth", "2",
                   "--out", str(tmp_path / "x.cad")) == 2

    def test_invalid_alpha_rejected(self, tmp_path):
        assert run("gen", "--alpha", "0.5", "--depth", "2",
                   "--out", str(tmp_path / "x.cad")) == 2


class TestDim:
    def test_full_square_slope_two(self, tmp_path, capsys):
        grid_path = tmp_path / "full.bgr"
        write_bgr(BoxGrid.full(Square.unit(), 8), grid_path)
        out = tmp_path / "report.csv"
        assert run("dim", "--in", str(grid_path), "--out", str(out)) == 0
        summary = out.read_text().splitlines()[-1]
        assert summary.startswith("2,")

    def test_dust_slope_one(self, dust_bgr, tmp_path):
        out = tmp_path / "report.csv"
        assert run("dim", "--in", str(dust_bgr), "--levels", "2:8:2",
                   "--out", str(out)) == 0
        slope = float(out.read_text().splitlines()[-1].split(",")[0])
        assert slope == pytest.approx(1.0, abs=0.05)

    def test_empty_grid_flagged(self, tmp_path):
        grid_path = tmp_path / "empty.bgr"
        write_bgr(BoxGrid.empty(Square.unit(), 6), grid_path)
        out = tmp_path / "report.csv"
        assert run("dim", "--in", str(grid_path), "--out", str(out)) == 0
        assert out.read_text().splitlines()[-1].endswith(",empty")

    def test_missing_file_is_io_error(self, tmp_path):
        assert run("dim", "--in", str(tmp_path / "absent.bgr")) == 4

    def test_config_echo_is_first_line(self, dust_bgr, tmp_path):
        out = tmp_path / "report.csv"
        run("dim", "--in", str(dust_bgr), "--out", str(out))
        assert out.read_text().startswith("# config: ")


class TestJohn:
    def test_runs_and_reports_positive_epsilon(self, tmp_path):
        out = tmp_path / "john.csv"
        assert run("john", "--alpha", "0.25", "--depth", "2", "--samples", "40",
                   "--seed", "9", "--out", str(out)) == 0
        summary = out.read_text().splitlines()[-1]
        eps = float(summary.split(",")[1])
        assert eps >= 0.05

    def test_alpha_half_is_usage_error(self, tmp_path):
        assert run("john", "--alpha", "0.5", "--depth", "2", "--samples", "10",
                   "--seed", "1") == 2

    def test_seed_required(self):
        assert run("john", "--alpha", "0.25", "--depth", "2") == 2

    def test_byte_identical_reruns(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        run("john", "--alpha", "0.3", "--depth", "2", "--samples", "30",
            "--seed", "4", "--out", str(a))
        run("john", "--alpha", "0.3", "--depth", "2", "--samples", "30",
            "--seed", "4", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()


class TestMattila:
    def test_hypothesis_violation_is_usage_error(self, tmp_path):
        # b dimension 1.2 fails the t > 3/2 gate
        assert run("mattila", "--a-alpha", "0.315", "--a-depth", "5", "--level", "8",
                   "--b-dim", "1.2", "--b-depth", "4", "--trials", "5",
                   "--seed", "3") == 2

    def test_survey_runs_and_is_deterministic(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        args = ["mattila", "--a-alpha", "0.315", "--a-depth", "5", "--level", "8",
                "--b-dim", "1.7", "--b-depth", "4", "--trials", "25", "--seed", "11"]
        assert run(*args, "--out", str(a)) == 0
        assert run(*args, "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().splitlines()[-1].startswith("s,")


class TestConstruct:
    def test_missing_input_is_io_error(self, tmp_path):
        assert run("construct", "--in", str(tmp_path / "absent.bgr"),
                   "--seed", "1", "--out-prefix", str(tmp_path / "run")) == 4

    def test_point_raster_short_circuits(self, tmp_path):
        grid_path = tmp_path / "point.bgr"
        bits = np.zeros((64, 64), dtype=bool)
        bits[10, 20] = True
        write_bgr(BoxGrid(Square.unit(), 6, bits), grid_path)
        prefix = tmp_path / "run"
        assert run("construct", "--in", str(grid_path), "--seed", "1",
                   "--out-prefix", str(prefix)) == 0
        eprime = read_bgr(f"{prefix}.eprime.bgr")
        assert eprime.occupied_count == 1

    def test_pipeline_writes_all_artifacts(self, tmp_path):
        prefix = tmp_path / "run"
        assert run("construct", "--gen-alpha", "0.4", "--gen-depth", "4",
                   "--level", "9", "--annuli", "4", "--trials", "40",
                   "--seed", "5", "--out-prefix", str(prefix)) == 0
        assert (tmp_path / "run.plan.json").exists()
        assert (tmp_path / "run.g.bgr").exists()
        assert (tmp_path / "run.eprime.bgr").exists()
        report = (tmp_path / "run.report.csv").read_text().splitlines()
        assert report[0].startswith("# config: ")
        assert any(line.startswith("dim_eprime_slope,") for line in report)

    def test_unknown_subcommand_is_usage_error(self):
        assert run("frobnicate") == 2
