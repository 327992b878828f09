import json

import numpy as np
import pytest

from stablemotion import fileio
from stablemotion.cli import (
    CONFIG_ENV,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VALIDATION,
    main,
)
from conftest import s_curve_demo


@pytest.fixture
def demo_file(tmp_path):
    path = tmp_path / "demo.json"
    fileio.save_demo(path, [s_curve_demo()])
    return str(path)


@pytest.fixture
def policy_file(tmp_path, demo_file):
    path = tmp_path / "policy.json"
    rc = main(["--quiet", "fit", demo_file, "-o", str(path),
               "--k-max", "3", "--restarts", "2"])
    assert rc == EXIT_OK
    return str(path)


class TestFit:
    def test_fit_writes_policy_and_reports(self, tmp_path, demo_file, capsys):
        out = tmp_path / "p.json"
        rc = main(["fit", demo_file, "-o", str(out), "--k-max", "3",
                   "--restarts", "2"])
        assert rc == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["command"] == "fit"
        assert report["mse"] < 0.1
        policy, chain = fileio.load_policy(out)
        assert 1 <= len(policy.components) <= 3

    def test_k_max_one_forces_single_component(self, tmp_path, demo_file):
        out = tmp_path / "p.json"
        rc = main(["--quiet", "fit", demo_file, "-o", str(out),
                   "--k-max", "1", "--restarts", "2"])
        assert rc == EXIT_OK
        policy, _ = fileio.load_policy(out)
        assert len(policy.components) == 1

    def test_seed_determinism(self, tmp_path, demo_file):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        for out in (a, b):
            main(["--quiet", "--seed", "7", "fit", demo_file,
                  "-o", str(out), "--k-max", "3", "--restarts", "2"])
        pa = json.loads(a.read_text())
        pb = json.loads(b.read_text())
        del pa["provenance"], pb["provenance"]  # timestamps differ
        assert pa == pb


class TestTransform:
    def test_transform_and_metrics(self, tmp_path, policy_file, capsys):
        _, chain = fileio.load_policy(policy_file)
        base = chain.endpoint_descriptor()
        from stablemotion.core import GeometricDescriptor, Pose
        moved = GeometricDescriptor(
            Pose(base.enter.position + [0.2, 0.1], base.enter.rotation),
            Pose(base.exit.position + [-0.1, 0.2], base.exit.rotation))
        desc = tmp_path / "desc.json"
        fileio.save_descriptor(desc, moved)
        out = tmp_path / "adapted.json"
        rc = main(["transform", policy_file, str(desc), "-o", str(out)])
        assert rc == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["converged"]
        assert report["start_cos"] > 0.9
        assert report["goal_cos"] > 0.9
        # re-targeted chain actually lands on the requested endpoints
        _, new_chain = fileio.load_policy(out)
        assert np.allclose(new_chain.joints[0], moved.enter.position,
                           atol=1e-9)
        assert np.allclose(new_chain.joints[-1], moved.exit.position,
                           atol=1e-9)

    def test_transform_does_not_mutate_input(self, tmp_path, policy_file):
        before = open(policy_file).read()
        _, chain = fileio.load_policy(policy_file)
        desc = tmp_path / "d.json"
        fileio.save_descriptor(desc, chain.endpoint_descriptor())
        rc = main(["--quiet", "transform", policy_file, str(desc),
                   "-o", str(tmp_path / "o.json")])
        assert rc == EXIT_OK
        assert open(policy_file).read() == before


class TestRolloutField:
    def test_rollout_csv_lyapunov_decreasing(self, tmp_path, policy_file):
        out = tmp_path / "run.csv"
        rc = main(["--quiet", "rollout", policy_file, "-o", str(out)])
        assert rc == EXIT_OK
        lines = out.read_text().strip().split("\n")
        assert lines[0].split(",")[-1] == "V"
        V = np.array([float(l.split(",")[-1]) for l in lines[1:]])
        assert len(V) > 10
        assert np.all(np.diff(V) <= 1e-12)

    def test_rollout_custom_start(self, tmp_path, policy_file):
        out = tmp_path / "run.csv"
        rc = main(["--quiet", "rollout", policy_file, "-o", str(out),
                   "--start", "0.5,0.5"])
        assert rc == EXIT_OK
        first = out.read_text().split("\n")[1].split(",")
        assert float(first[1]) == 0.5 and float(first[2]) == 0.5

    def test_field_csv_and_svg(self, tmp_path, policy_file):
        csv = tmp_path / "field.csv"
        svg = tmp_path / "field.svg"
        rc = main(["--quiet", "field", policy_file, "-o", str(csv),
                   "--svg", str(svg), "--resolution", "8"])
        assert rc == EXIT_OK
        assert len(csv.read_text().strip().split("\n")) == 65
        text = svg.read_text()
        assert text.startswith("<svg") and "<polyline" in text
        assert text.count("<line") >= 60

    def test_metrics_command(self, tmp_path, policy_file, capsys):
        rc = main(["metrics", policy_file])
        assert rc == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert {"start_cos", "goal_cos", "endpoints_distance",
                "converged"} <= report.keys()


class TestBench:
    def test_bench_rows(self, demo_file, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        rc = main(["bench", demo_file, "--lengths", "80,120",
                   "--repeats", "1", "-o", str(out)])
        assert rc == EXIT_OK
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "T_n,transform_ms,estimate_ms,total_ms"
        assert len(lines) == 3
        assert lines[1].startswith("80,") and lines[2].startswith("120,")


class TestSplitStitch:
    def test_split_then_fit_then_stitch(self, tmp_path, demo_file, capsys):
        demo = s_curve_demo()
        via = demo.points[100]
        prefix = str(tmp_path / "seg_")
        rc = main(["split", demo_file, "--via", f"{via[0]},{via[1]}",
                   "--radius", "1e-6", "--output-prefix", prefix])
        assert rc == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["segments"] == 2

        policies = []
        for seg in report["outputs"]:
            out = seg.replace(".json", "_policy.json")
            assert main(["--quiet", "fit", seg, "-o", out,
                         "--k-max", "2", "--restarts", "2"]) == EXIT_OK
            policies.append(out)
        stitched = str(tmp_path / "stitched.json")
        rc = main(["--quiet", "stitch", *policies, "-o", stitched])
        assert rc == EXIT_OK
        policy, chain = fileio.load_policy(stitched)
        assert len(policy.components) == sum(
            len(fileio.load_policy(p)[0].components) for p in policies)
        assert np.allclose(chain.joints[-1], demo.end, atol=1e-9)

    def test_split_without_via_points_fails(self, demo_file, tmp_path):
        rc = main(["--quiet", "split", demo_file,
                   "--output-prefix", str(tmp_path / "s_")])
        assert rc == EXIT_VALIDATION


class TestExitCodes:
    def test_usage_error(self, capsys):
        assert main([]) == EXIT_USAGE
        assert main(["fit"]) == EXIT_USAGE
        capsys.readouterr()

    def test_missing_file(self, tmp_path):
        rc = main(["--quiet", "rollout", str(tmp_path / "none.json"),
                   "-o", str(tmp_path / "o.csv")])
        assert rc == EXIT_VALIDATION

    def test_empty_file_parse_error(self, tmp_path):
        bad = tmp_path / "empty.json"
        bad.write_text("")
        rc = main(["--quiet", "rollout", str(bad),
                   "-o", str(tmp_path / "o.csv")])
        assert rc == EXIT_VALIDATION

    def test_non_orthonormal_rotation_rejected(self, tmp_path, policy_file):
        desc = tmp_path / "desc.json"
        desc.write_text(json.dumps({
            "format": "stablemotion-descriptor", "version": 1, "dimension": 2,
            "enter": {"position": [0.0, 0.0],
                      "rotation": [[1.0, 0.3], [0.0, 1.0]]},
            "exit": None}))
        rc = main(["--quiet", "transform", policy_file, str(desc),
                   "-o", str(tmp_path / "o.json")])
        assert rc == EXIT_VALIDATION

    def test_degenerate_demo_is_numerical_error(self, tmp_path):
        from stablemotion.core import Trajectory
        pts = np.zeros((40, 2))
        pts[:, 0] = 1e-16 * np.arange(40)  # collapses to one point
        demo = tmp_path / "flat.json"
        fileio.save_demo(demo, [Trajectory(pts + 1.0,
                                           np.linspace(0, 1, 40))])
        rc = main(["--quiet", "fit", str(demo),
                   "-o", str(tmp_path / "o.json"), "--k-max", "2",
                   "--restarts", "1"])
        assert rc in (EXIT_NUMERICAL, EXIT_VALIDATION)

    def test_config_via_env(self, tmp_path, demo_file, monkeypatch):
        cfgp = tmp_path / "cfg.json"
        cfgp.write_text(json.dumps({"k_max": 1, "restarts": 1}))
        monkeypatch.setenv(CONFIG_ENV, str(cfgp))
        out = tmp_path / "p.json"
        rc = main(["--quiet", "fit", demo_file, "-o", str(out)])
        assert rc == EXIT_OK
        policy, _ = fileio.load_policy(out)
        assert len(policy.components) == 1

    def test_bad_config_rejected(self, tmp_path, demo_file):
        cfgp = tmp_path / "cfg.json"
        cfgp.write_text("[1, 2]")
        rc = main(["--quiet", "--config", str(cfgp), "fit", demo_file,
                   "-o", str(tmp_path / "o.json")])
        assert rc == EXIT_VALIDATION
