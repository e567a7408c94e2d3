import json

import numpy as np
import pytest

from cfkit.cli import main


@pytest.fixture
def fig7_input(tmp_path):
    path = tmp_path / "fig7.json"
    path.write_text(json.dumps({"H": [[1, 1.5]], "P": [7, 4]}))
    return path


@pytest.fixture
def fig8_input(tmp_path):
    path = tmp_path / "fig8.json"
    path.write_text(json.dumps({"H": [[[3.3, 2.1]], [[2.4, 4.2]]], "P": [4, 3]}))
    return path


def run(args):
    return main([str(a) for a in args])


class TestRegion:
    def test_mac_boundary_contains_capacity_corner(self, fig7_input, tmp_path):
        assert run(["region", "--input", fig7_input, "--mode", "mac",
                    "--out", tmp_path]) == 0
        text = (tmp_path / "region_mac_boundary.csv").read_text()
        assert text.startswith("R1,R2\n")
        assert "1.500000,0.543731" in text

    def test_para_region_box_json(self, tmp_path):
        doc = {"H": [[1, 1.5]], "P": [7, 4], "A": [[1, 1], [1, 2]]}
        path = tmp_path / "in.json"
        path.write_text(json.dumps(doc))
        assert run(["region", "--input", path, "--mode", "para",
                    "--out", tmp_path]) == 0
        out = json.loads((tmp_path / "region_para.json").read_text())
        assert out["boxes"][0]["caps"] == [0.99396, 0.590286] or \
            np.allclose(out["boxes"][0]["caps"], [0.993964, 0.590286], atol=1e-5)

    def test_compound_panels(self, fig8_input, tmp_path):
        assert run(["region", "--input", fig8_input, "--mode", "compound",
                    "--out", tmp_path]) == 0
        rx2 = (tmp_path / "compound_rx2_mac.csv").read_text()
        assert "2.293682,0.839336" in rx2
        hull = (tmp_path / "compound_hull_succ.csv").read_text()
        assert "2.293682,0.187535" in hull
        inter = (tmp_path / "compound_intersection_mac.csv").read_text()
        assert "1.010942,1.915432" in inter

    def test_missing_A_for_para_is_input_error(self, fig7_input, tmp_path):
        assert run(["region", "--input", fig7_input, "--mode", "para",
                    "--out", tmp_path]) == 2

    def test_empty_A_is_input_error(self, tmp_path, capsys):
        path = tmp_path / "empty.json"
        path.write_text(json.dumps({"H": [[1, 1.5]], "P": [7, 4], "A": []}))
        assert run(["region", "--input", path, "--mode", "para",
                    "--out", tmp_path]) == 2
        assert "A" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["region", "--input", bad, "--mode", "mac",
                    "--out", tmp_path]) == 2


class TestSearch:
    def test_fig7_dominant_solution(self, fig7_input, tmp_path):
        assert run(["search", "--input", fig7_input, "--out", tmp_path]) == 0
        out = json.loads((tmp_path / "search.json").read_text())
        assert out["A_star"] == [[1, 1], [1, 2]]
        assert out["max_abs_entry"] == 4

    def test_zero_channel(self, tmp_path):
        path = tmp_path / "zero.json"
        path.write_text(json.dumps({"H": [[0, 0]], "P": [1, 1]}))
        assert run(["search", "--input", path, "--out", tmp_path]) == 0
        out = json.loads((tmp_path / "search.json").read_text())
        rows = {tuple(r) for r in out["A_star"]}
        assert rows == {(0, 1), (1, 0)}

    def test_zero_bound_rejected(self, fig7_input, tmp_path):
        assert run(["search", "--input", fig7_input, "--bound", "0",
                    "--out", tmp_path]) == 2


class TestMac:
    def test_fig7_table(self, fig7_input, tmp_path, capsys):
        assert run(["mac", "--input", fig7_input, "--out", tmp_path]) == 0
        doc = json.loads((tmp_path / "mac_assignments.json").read_text())
        succ = [tuple(e["rates"]) for e in doc["assignments"]
                if e["strategy"] == "successive"]
        expect = {(0.382767, 1.660964), (1.5, 0.543731),
                  (1.084963, 0.958769), (1.362446, 0.681285)}
        assert {tuple(round(v, 6) for v in r) for r in succ} == expect
        for e in doc["assignments"]:
            if e["strategy"] == "successive":
                assert abs(e["gap"]) < 5e-7
            else:
                assert e["gap"] <= 1.0
        para = [e for e in doc["assignments"] if e["strategy"] == "parallel"]
        assert len(para) == 2

    def test_single_user(self, tmp_path):
        path = tmp_path / "one.json"
        path.write_text(json.dumps({"H": [[2.0]], "P": [3.0]}))
        assert run(["mac", "--input", path, "--out", tmp_path]) == 0
        doc = json.loads((tmp_path / "mac_assignments.json").read_text())
        assert all(abs(e["gap"]) < 1e-6 for e in doc["assignments"])


class TestSimulate:
    def config(self, tmp_path, **overrides):
        doc = {
            "ensemble": {"n": 2, "p": 3, "gamma": 3.0,
                         "levels": [[0, 1], [0, 2]], "seed": 21},
            "H": [[1, 1], [1, 2]], "P": [1.0, 1.0],
            "A": [[1, 1], [1, 2]], "mode": "parallel",
            "noise_std": [0.0], "trials": 25, "master_seed": 7,
        }
        doc.update(overrides)
        path = tmp_path / "campaign.json"
        path.write_text(json.dumps(doc))
        return path

    def test_noiseless_smoke(self, tmp_path):
        cfg = self.config(tmp_path)
        assert run(["simulate", "--config", cfg, "--out", tmp_path]) == 0
        csv = (tmp_path / "report.csv").read_text()
        lines = csv.strip().split("\n")
        assert lines[0] == ("noise_std,combination_index,errors,trials,"
                            "rate_estimate,ci_low,ci_high")
        for line in lines[1:]:
            assert line.split(",")[2] == "0"

    def test_sweep_monotone_and_deterministic(self, tmp_path):
        cfg = self.config(tmp_path, noise_std=[2.0, 0.02], trials=120)
        assert run(["simulate", "--config", cfg, "--out", tmp_path]) == 0
        first = (tmp_path / "report.csv").read_bytes()
        first_json = (tmp_path / "report.json").read_bytes()
        rows = [l.split(",") for l in first.decode().strip().split("\n")[1:]]
        errs = {(float(r[0])): int(r[2]) for r in rows if r[1] == "1"}
        assert errs[0.02] <= errs[2.0]
        # byte-identical across repeat runs and worker counts
        assert run(["simulate", "--config", cfg, "--out", tmp_path,
                    "--workers", "4"]) == 0
        assert (tmp_path / "report.csv").read_bytes() == first
        assert (tmp_path / "report.json").read_bytes() == first_json

    def test_successive_mode(self, tmp_path):
        cfg = self.config(tmp_path, mode="successive",
                          mapping=[[1, 1], [1, 2], [2, 2]], noise_std=0.0)
        assert run(["simulate", "--config", cfg, "--out", tmp_path]) == 0
        doc = json.loads((tmp_path / "report.json").read_text())
        assert all(c["errors"] == 0 and c["real_errors"] == 0
                   for r in doc["results"] for c in r["combinations"])

    def test_malformed_config(self, tmp_path):
        cfg = self.config(tmp_path)
        doc = json.loads(cfg.read_text())
        del doc["trials"]
        cfg.write_text(json.dumps(doc))
        assert run(["simulate", "--config", cfg, "--out", tmp_path]) == 2

    def test_bad_mode_named(self, tmp_path, capsys):
        cfg = self.config(tmp_path, mode="sideways")
        assert run(["simulate", "--config", cfg, "--out", tmp_path]) == 2
        assert "mode" in capsys.readouterr().err


class TestVerify:
    def test_all_suites_pass(self, capsys):
        assert run(["verify", "--suite", "all", "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert "negative control" in out

    def test_many_seeds_identities(self):
        for seed in range(5):
            assert run(["verify", "--suite", "identities", "--seed", seed]) == 0
