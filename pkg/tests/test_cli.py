"""End-to-end CLI checks: files, exit codes, determinism."""

import json
from pathlib import Path

import numpy as np
import pytest

from hiergp.cli import main
from hiergp.designs import uniform_grid


def write_config(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def read_bytes(directory: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def design_config(out, family="uniform", **kwargs):
    params = {"family": family, "domain": [[0.0, 1.0]]}
    params.update(kwargs)
    return {"command": "design", "seed": 0, "output_dir": out, "parameters": params}


def convergence_config(out, **overrides):
    params = {
        "design_family": "uniform",
        "domain": [[0.0, 1.0]],
        "schedule": [4, 8, 16, 32],
        "test_function": {"kind": "sine_series", "tau_tilde": 2.5, "n_modes": 64, "seed": 5},
        "kernel": {"family": "matern", "sigma2": 1.0, "lam": 0.5, "nu": 2.0},
        "nugget": 1e-12,
    }
    params.update(overrides)
    return {"command": "convergence", "seed": 0, "output_dir": out, "parameters": params}


def invert_config(out, **overrides):
    params = {
        "forward": "identity",
        "domain": [[0.0, 1.0]],
        "y": [0.5],
        "gamma": [[0.09]],
        "schedule": [4, 8, 16],
        "variants": ["mean_g", "mean_phi"],
        "kernel": {"family": "matern", "sigma2": 1.0, "lam": 0.5, "nu": 2.5},
        "quad_nodes_per_dim": 128,
        "nugget": 1e-12,
    }
    params.update(overrides)
    return {"command": "invert", "seed": 0, "output_dir": out, "parameters": params}


class TestDesignCommand:
    def test_uniform_writes_points_and_geometry(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, design_config(str(out), n_per_dim=4))
        assert main(["design", "--config", cfg]) == 0
        lines = (out / "points.csv").read_text().splitlines()
        assert lines[0] == "u_1"
        assert len(lines) == 5
        geo = json.loads((out / "geometry.json").read_text())
        assert geo["fill_distance"] == pytest.approx(0.25)
        assert (out / "design.png").stat().st_size > 0

    def test_smolyak_point_count(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            design_config(
                str(out), family="smolyak", domain=[[-1.0, 1.0], [-1.0, 1.0]], level=3
            ),
        )
        assert main(["design", "--config", cfg]) == 0
        lines = (out / "points.csv").read_text().splitlines()
        assert len(lines) == 6  # header + 5 sparse-grid points

    def test_malformed_json_exits_2_without_files(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        out = tmp_path / "out"
        assert main(["design", "--config", str(bad), "--out", str(out)]) == 2
        assert not out.exists()

    def test_unknown_key_rejected(self, tmp_path):
        out = tmp_path / "out"
        cfg_obj = design_config(str(out), n_per_dim=4)
        cfg_obj["parameters"]["surprise"] = 1
        cfg = write_config(tmp_path, cfg_obj)
        assert main(["design", "--config", cfg]) == 2
        assert not out.exists()

    def test_bad_family_exits_2(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, design_config(str(out), family="sobol", n_per_dim=4))
        assert main(["design", "--config", cfg]) == 2

    def test_command_mismatch_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, design_config(str(tmp_path / "o"), n_per_dim=4))
        assert main(["fit", "--config", cfg]) == 2

    def test_non_integer_seed_exits_2(self, tmp_path):
        cfg_obj = design_config(str(tmp_path / "o"), n_per_dim=4)
        cfg_obj["seed"] = "tuesday"
        cfg = write_config(tmp_path, cfg_obj)
        assert main(["design", "--config", cfg]) == 2


class TestFitCommand:
    def make_data(self, tmp_path):
        design = uniform_grid([(0.0, 1.0)], 12)
        f = np.sin(2.0 * design.points[:, 0])
        path = tmp_path / "data.csv"
        lines = ["u_1,f"] + [
            f"{repr(float(u))},{repr(float(v))}" for u, v in zip(design.points[:, 0], f)
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path, design, f

    def fit_config(self, out, data, **overrides):
        params = {
            "data_csv": str(data),
            "domain": [[0.0, 1.0]],
            "kernel": {"family": "matern", "sigma2": 1.0, "lam": 0.5, "nu": 1.5},
            "grid_n": 64,
        }
        params.update(overrides)
        return {"command": "fit", "seed": 0, "output_dir": out, "parameters": params}

    def test_predictions_reproduce_data(self, tmp_path):
        data, design, f = self.make_data(tmp_path)
        out = tmp_path / "out"
        cfg = write_config(tmp_path, self.fit_config(str(out), data, grid_n=12))
        assert main(["fit", "--config", cfg]) == 0
        rows = (out / "predictions.csv").read_text().splitlines()[1:]
        got = np.array([[float(v) for v in r.split(",")] for r in rows])
        # the prediction grid for n=12 equals the training design here
        assert np.allclose(got[:, 1], f, atol=1e-6)
        assert (out / "fit.png").stat().st_size > 0

    def test_estimated_box_reports_result(self, tmp_path):
        data, design, f = self.make_data(tmp_path)
        out = tmp_path / "out"
        cfg_obj = self.fit_config(str(out), data)
        del cfg_obj["parameters"]["kernel"]
        cfg_obj["parameters"]["box"] = {
            "family": "matern",
            "bounds": {"nu": {"fixed": 1.5}},
        }
        cfg_obj["parameters"]["budget"] = 2
        cfg = write_config(tmp_path, cfg_obj)
        assert main(["fit", "--config", cfg]) == 0
        est = json.loads((out / "estimate.json").read_text())
        assert est["converged"] is True
        assert est["params"]["nu"] == 1.5
        assert est["evaluations"] >= 1

    def test_all_fixed_box_returns_fixed(self, tmp_path):
        data, design, f = self.make_data(tmp_path)
        out = tmp_path / "out"
        cfg_obj = self.fit_config(str(out), data)
        del cfg_obj["parameters"]["kernel"]
        cfg_obj["parameters"]["box"] = {
            "family": "matern",
            "bounds": {
                "sigma2": {"fixed": 2.0},
                "lam": {"fixed": 0.4},
                "nu": {"fixed": 1.5},
            },
        }
        cfg = write_config(tmp_path, cfg_obj)
        assert main(["fit", "--config", cfg]) == 0
        est = json.loads((out / "estimate.json").read_text())
        assert est["params"] == {"sigma2": 2.0, "lam": 0.4, "nu": 1.5}

    def test_duplicate_points_exit_2(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("u_1,f\n0.5,1.0\n0.5,2.0\n", encoding="utf-8")
        out = tmp_path / "out"
        cfg = write_config(tmp_path, self.fit_config(str(out), path))
        assert main(["fit", "--config", cfg]) == 2

    def test_non_numeric_exit_2(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("u_1,f\n0.5,abc\n", encoding="utf-8")
        cfg = write_config(tmp_path, self.fit_config(str(tmp_path / "o"), path))
        assert main(["fit", "--config", cfg]) == 2

    def test_same_seed_identical_outputs(self, tmp_path):
        data, _, _ = self.make_data(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        cfg_obj = self.fit_config("unused", data)
        cfg = write_config(tmp_path, cfg_obj)
        assert main(["fit", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["fit", "--config", cfg, "--out", str(out2)]) == 0
        assert read_bytes(out1) == read_bytes(out2)


class TestConvergenceCommand:
    def test_summary_and_cells(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, convergence_config(str(out)))
        assert main(["convergence", "--config", cfg]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["cells_ok"] == 4
        assert summary["rate"]["slope"] > 0.0
        assert "pass" in summary
        header = (out / "cells.csv").read_text().splitlines()[0]
        assert header.startswith("N,h,q,rho,l2_error,sup_error,avg_pred_sd")
        assert (out / "convergence.png").stat().st_size > 0

    def test_short_schedule_exits_2(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, convergence_config(str(out), schedule=[4, 8]))
        assert main(["convergence", "--config", cfg]) == 2
        assert not out.exists()

    def test_same_seed_byte_identical_and_jobs_invariant(self, tmp_path):
        outs = [tmp_path / n for n in ("a", "b", "c")]
        cfg = write_config(tmp_path, convergence_config("unused"))
        assert main(["convergence", "--config", cfg, "--out", str(outs[0])]) == 0
        assert main(["convergence", "--config", cfg, "--out", str(outs[1])]) == 0
        assert main(["convergence", "--config", cfg, "--out", str(outs[2]), "--jobs", "3"]) == 0
        a, b, c = (read_bytes(o) for o in outs)
        assert a == b
        assert a == c

    def test_sparse_grid_study_reports_polylog(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            convergence_config(
                str(out),
                design_family="smolyak_uniform",
                domain=[[0.0, 1.0], [0.0, 1.0]],
                schedule=[3, 4, 5, 6],
                test_function={
                    "kind": "tensor_sine_series",
                    "r_tilde": [2.0, 2.0],
                    "n_modes": 8,
                    "seed": 3,
                },
                kernel={
                    "family": "separable_matern",
                    "sigma2": 1.0,
                    "per_dim": [{"lam": 0.7, "nu": 1.5}, {"lam": 0.7, "nu": 1.5}],
                },
            ),
        )
        assert main(["convergence", "--config", cfg]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["theorem"]["exponent_in_N"] == 2.0
        assert summary["theorem"]["polylog_power"] == 3.0

    def test_sparse_level_below_dim_exits_2(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            convergence_config(
                str(out),
                design_family="smolyak_uniform",
                domain=[[0.0, 1.0], [0.0, 1.0]],
                schedule=[1, 2, 3, 4],
                test_function={
                    "kind": "tensor_sine_series",
                    "r_tilde": [2.0, 2.0],
                    "n_modes": 8,
                    "seed": 3,
                },
                kernel={
                    "family": "separable_matern",
                    "sigma2": 1.0,
                    "per_dim": [{"lam": 0.7, "nu": 1.5}, {"lam": 0.7, "nu": 1.5}],
                },
            ),
        )
        assert main(["convergence", "--config", cfg]) == 2
        assert not out.exists()

    def test_estimated_run_with_box(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            convergence_config(
                str(out),
                box={"family": "matern", "bounds": {"nu": {"fixed": 2.0}}},
                budget=2,
            ),
        )
        assert main(["convergence", "--config", cfg]) == 0
        rows = (out / "cells.csv").read_text().splitlines()
        assert rows[0].endswith("lam,nu,sigma2,cell_status")


class TestInvertCommand:
    def test_writes_hellinger_and_summary(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, invert_config(str(out)))
        assert main(["invert", "--config", cfg]) == 0
        rows = (out / "hellinger.csv").read_text().splitlines()
        assert rows[0] == "size,N,variant,d_hell,mc_se,surrogate_l2_g,surrogate_l2_phi,cell_status"
        assert len(rows) == 1 + 3 * 2
        summary = json.loads((out / "summary.json").read_text())
        assert summary["variants"]["mean_g"]["decrease_factor"] > 1.0
        assert (out / "hellinger.png").stat().st_size > 0

    def test_exact_variant_zero_distance(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, invert_config(str(out), variants=["exact"]))
        assert main(["invert", "--config", cfg]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert all(d <= 1e-12 for _, d in summary["variants"]["exact"]["curve"])

    def test_empty_variants_exit_2(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, invert_config(str(out), variants=[]))
        assert main(["invert", "--config", cfg]) == 2
        assert not out.exists()

    def test_3d_domain_exit_2(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            invert_config(
                str(out),
                domain=[[0.0, 1.0]] * 3,
                y=[0.5, 0.5, 0.5],
                gamma=0.09,
            ),
        )
        assert main(["invert", "--config", cfg]) == 2
        assert not out.exists()

    def test_mcmc_outputs(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            invert_config(
                str(out),
                mcmc={"variant": "mean_phi", "n_samples": 400, "step": 0.3},
            ),
        )
        assert main(["invert", "--config", cfg]) == 0
        stats = json.loads((out / "mcmc.json").read_text())
        assert 0.0 < stats["acceptance_rate"] < 1.0
        chain_rows = (out / "chain.csv").read_text().splitlines()
        assert len(chain_rows) == 401

    def test_bad_mcmc_step_exits_2(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            invert_config(str(out), mcmc={"variant": "exact", "n_samples": 10, "step": -1}),
        )
        assert main(["invert", "--config", cfg]) == 2
        assert not out.exists()

    def test_determinism_with_jobs(self, tmp_path):
        outs = [tmp_path / n for n in ("a", "b")]
        cfg = write_config(
            tmp_path,
            invert_config("unused", variants=["mean_phi", "sample_phi"], n_draws=4),
        )
        assert main(["invert", "--config", cfg, "--out", str(outs[0])]) == 0
        assert main(["invert", "--config", cfg, "--out", str(outs[1]), "--jobs", "2"]) == 0
        assert read_bytes(outs[0]) == read_bytes(outs[1])


class TestReadmeQuickstart:
    def test_snippet_runs(self):
        import re
        from pathlib import Path

        readme = Path(__file__).resolve().parents[1] / "README.md"
        blocks = re.findall(r"```python\n(.*?)```", readme.read_text(), re.S)
        assert blocks, "README must contain the quick-start snippet"
        namespace: dict = {}
        exec(compile(blocks[0], "README.md", "exec"), namespace)
        assert namespace["mean"].shape == (200,)
        assert float(namespace["sd"].min()) >= 0.0
