"""End-to-end CLI coverage: argument handling plus a miniature run of the
whole pipeline (gen-data -> stats -> train-disc -> train-policy -> plan ->
eval) against temporary directories."""

from __future__ import annotations

import io
import json
from contextlib import redirect_stdout

import pytest

from tidyplan import cli
from tidyplan.datagen import generate_trajectory
from tidyplan.templates import load_library
from tidyplan.world import save_scene


def run_cli(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        rc = cli.main(argv)
    return rc, buf.getvalue()


class TestArgumentHandling:
    def test_help_exits_zero(self):
        with pytest.raises(SystemExit) as err:
            cli.main(["--help"])
        assert err.value.code == 0

    def test_missing_command_exits_two(self):
        with pytest.raises(SystemExit) as err:
            cli.main([])
        assert err.value.code == 2

    def test_unknown_command_exits_two(self):
        with pytest.raises(SystemExit) as err:
            cli.main(["tidy-harder"])
        assert err.value.code == 2

    def test_missing_required_flag_exits_two(self):
        with pytest.raises(SystemExit) as err:
            cli.main(["gen-data"])
        assert err.value.code == 2

    def test_eval_tsmcts_requires_policy(self, tmp_path, capsys):
        # reaches the explicit check only with a readable checkpoint path,
        # so give it a real one
        import numpy as np

        from tidyplan import nn

        net = nn.init_params((47, 4, 1), ("relu", "sigmoid"), np.random.default_rng(0))
        ckpt = tmp_path / "d.ckpt"
        nn.save_checkpoint(ckpt, net, rng_seed=0, step=0)
        rc = cli.main([
            "eval", "--disc", str(ckpt), "--planner", "tsmcts",
            "--episodes", "1", "--out", str(tmp_path / "r"),
        ])
        assert rc == 2
        assert "--policy is required" in capsys.readouterr().err


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One small pass over every artifact-producing subcommand."""
    root = tmp_path_factory.mktemp("pipeline")
    data = root / "data"
    outputs = {}

    rc, out = run_cli([
        "gen-data", "--out", str(data),
        "--trajectories-per-template", "4", "--T", "3", "--seed", "0",
    ])
    assert rc == 0
    outputs["gen"] = out

    rc, out = run_cli(["stats", "--data", str(data)])
    assert rc == 0
    outputs["stats"] = out

    disc_dir = root / "disc"
    rc, out = run_cli([
        "train-disc", "--data", str(data), "--epochs", "3",
        "--seed", "0", "--out", str(disc_dir),
    ])
    assert rc == 0
    outputs["disc"] = out

    pol_dir = root / "policy"
    rc, out = run_cli([
        "train-policy", "--data", str(data), "--steps", "60",
        "--seed", "0", "--out", str(pol_dir),
    ])
    assert rc == 0
    outputs["policy"] = out

    scene_path = root / "scene.json"
    template = load_library()[0]
    save_scene(generate_trajectory(template, T=3, rng_seed=7).steps[0][0], scene_path)
    plan_path = root / "plan.json"
    rc, out = run_cli([
        "plan", "--scene", str(scene_path), "--disc", str(disc_dir / "discriminator.ckpt"),
        "--policy", str(pol_dir / "policy.ckpt"), "--k", "8", "--seed", "0",
        "--out", str(plan_path),
    ])
    assert rc == 0
    outputs["plan"] = out

    eval_dir = root / "eval"
    rc, out = run_cli([
        "eval", "--envs", "bathroom", "--episodes", "2", "--planner", "random",
        "--disc", str(disc_dir / "discriminator.ckpt"), "--seed", "0",
        "--out", str(eval_dir),
    ])
    assert rc == 0
    outputs["eval"] = out

    return {
        "root": root, "data": data, "disc": disc_dir, "policy": pol_dir,
        "plan": plan_path, "eval": eval_dir, "out": outputs,
    }


class TestPipeline:
    def test_gen_data_artifacts(self, pipeline):
        data = pipeline["data"]
        assert (data / "disc.ndjson").exists()
        assert (data / "rl.ndjson").exists()
        report = json.loads((data / "report.json").read_text())
        # 90 templates x 4 trajectories x 3 states, transitions one fewer per trajectory
        assert report["totals"] == {"disc_records": 1080, "rl_records": 720}
        assert "wrote 1080 discriminator records, 720 transitions" in pipeline["out"]["gen"]

    def test_gen_data_rerun_is_byte_identical(self, pipeline, tmp_path):
        rc, _ = run_cli([
            "gen-data", "--out", str(tmp_path),
            "--trajectories-per-template", "4", "--T", "3", "--seed", "0",
        ])
        assert rc == 0
        for name in ("disc.ndjson", "rl.ndjson", "report.json"):
            assert (tmp_path / name).read_bytes() == (pipeline["data"] / name).read_bytes()

    def test_stats_table(self, pipeline):
        lines = pipeline["out"]["stats"].strip().splitlines()
        assert lines[0].split()[0] == "environment"
        assert lines[-1].startswith("total")

    def test_train_disc_artifacts(self, pipeline):
        disc = pipeline["disc"]
        assert (disc / "discriminator.ckpt").exists()
        loss = (disc / "loss.csv").read_text().splitlines()
        assert loss[0] == "epoch,train_loss,validation_loss"
        assert len(loss) == 1 + 3
        sweep = (disc / "sweep.csv").read_text().splitlines()
        assert sweep[0] == "threshold,precision,recall"
        assert len(sweep) == 1 + 19
        assert "trained discriminator" in pipeline["out"]["disc"]

    def test_train_policy_artifacts(self, pipeline):
        pol = pipeline["policy"]
        for name in ("q.ckpt", "v.ckpt", "policy.ckpt"):
            assert (pol / name).exists()
        loss = (pol / "loss.csv").read_text().splitlines()
        assert loss[0] == "step,v_loss,q_loss,pi_loss"
        # logged at steps 0 and 50 plus the final step 59
        assert [row.split(",")[0] for row in loss[1:]] == ["0", "50", "59"]

    def test_plan_artifact(self, pipeline):
        payload = json.loads(pipeline["plan"].read_text())
        assert set(payload) == {"status", "final_score", "length", "steps"}
        assert payload["status"].split(":")[0] in ("success", "failure")
        assert len(payload["steps"]) == payload["length"] + 1
        assert 0.0 <= payload["final_score"] <= 1.0

    def test_eval_artifacts(self, pipeline):
        report = json.loads((pipeline["eval"] / "report.json").read_text())
        csv = (pipeline["eval"] / "report.csv").read_text()
        lines = csv.splitlines()
        assert lines[0] == "environment,success_rate,tidiness_score,length"
        assert [row.split(",")[0] for row in lines[1:]] == ["bathroom", "Average"]
        assert csv == pipeline["out"]["eval"]
        assert report["planner"] == "random"
