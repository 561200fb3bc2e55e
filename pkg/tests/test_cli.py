import json
import os
from pathlib import Path

import pytest

import screenwise as sw
from screenwise.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, build_parser, main

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data.csv"
    assert (
        main(["generate", "--out", str(data), "--size", "1500", "--seed", "3"])
        == EXIT_OK
    )
    return root, data


class TestHelp:
    @pytest.mark.parametrize(
        "name", ["main", "generate", "train", "evaluate", "sweep", "execute", "serve"]
    )
    def test_help_matches_golden(self, name, monkeypatch):
        monkeypatch.setenv("COLUMNS", "80")
        parser = build_parser()
        if name == "main":
            text = parser.format_help()
        else:
            text = parser._subparsers._group_actions[0].choices[name].format_help()
        assert text == (GOLDEN / f"help_{name}.txt").read_text()

    def test_every_flag_documented(self):
        for name in ("train", "generate", "evaluate", "sweep", "execute", "serve"):
            text = (GOLDEN / f"help_{name}.txt").read_text()
            assert "--" in text


class TestPipeline:
    def test_generate_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for target in (a, b):
            assert (
                main(
                    ["generate", "--out", str(target), "--size", "300", "--seed", "9"]
                )
                == EXIT_OK
            )
        assert a.read_bytes() == b.read_bytes()

    def test_train_twice_byte_identical(self, workspace):
        root, data = workspace
        p1, p2 = root / "p1.json", root / "p2.json"
        for target in (p1, p2):
            code = main(
                ["train", "--data", str(data), "--out", str(target), "--seed", "1"]
            )
            assert code == EXIT_OK
        assert p1.read_bytes() == p2.read_bytes()

    def test_evaluate_writes_report(self, workspace):
        root, data = workspace
        policy = root / "p1.json"
        if not policy.exists():
            main(["train", "--data", str(data), "--out", str(policy)])
        report = root / "report.json"
        assert (
            main(
                [
                    "evaluate",
                    "--policy",
                    str(policy),
                    "--data",
                    str(data),
                    "--out",
                    str(report),
                ]
            )
            == EXIT_OK
        )
        payload = json.loads(report.read_text())
        assert payload["provenance"]["data"]
        assert payload["partition_count"] >= 1

    def test_strict_tight_eta_exits_3_citing_threshold(self, workspace, capsys):
        root, data = workspace
        code = main(
            [
                "train",
                "--data",
                str(data),
                "--out",
                str(root / "never.json"),
                "--eta",
                "0.02",
                "--strict",
            ]
        )
        assert code == EXIT_INFEASIBLE
        err = capsys.readouterr().err
        assert "35358" in err

    def test_missing_data_file_is_config_error(self, tmp_path, capsys):
        code = main(
            ["train", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "p.json")]
        )
        assert code == EXIT_CONFIG
        assert "error:" in capsys.readouterr().err

    def test_config_env_var_fallback(self, workspace, monkeypatch, tmp_path):
        root, data = workspace
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"policy": {"eta": 0.2}}))
        monkeypatch.setenv("SCREENWISE_CONFIG", str(config))
        out = tmp_path / "policy.json"
        assert main(["train", "--data", str(data), "--out", str(out)]) == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["config"]["eta"] == 0.2

    def test_flag_overrides_config_file(self, workspace, tmp_path):
        root, data = workspace
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"policy": {"eta": 0.2}}))
        out = tmp_path / "policy.json"
        assert (
            main(
                [
                    "train",
                    "--data",
                    str(data),
                    "--config",
                    str(config),
                    "--out",
                    str(out),
                    "--eta",
                    "0.15",
                ]
            )
            == EXIT_OK
        )
        assert json.loads(out.read_text())["config"]["eta"] == 0.15


class TestExecute:
    def _features(self):
        return json.dumps(
            {
                "age": 55,
                "breast_density": 2,
                "family_history": 0,
                "age_menarche": 13,
                "age_first_birth": 26,
                "num_biopsies": 0,
                "hormonal_history": 0,
            }
        )

    def test_walkthrough_transcript(self, workspace, monkeypatch, capsys):
        root, data = workspace
        policy_path = root / "p1.json"
        if not policy_path.exists():
            main(["train", "--data", str(data), "--out", str(policy_path)])
        policy = sw.load_policy(str(policy_path))

        # Feed scores low enough to terminate quickly; re-prompting on a bad
        # token is part of the transcript contract.
        answers = iter(["banana", "1", "1", "1"])
        monkeypatch.setattr("builtins.input", lambda prompt="": next(answers))
        code = main(
            ["execute", "--policy", str(policy_path), "--features", self._features()]
        )
        captured = capsys.readouterr()
        assert code == EXIT_OK
        assert "invalid BI-RADS token: 'banana'" in captured.err
        assert "final recommendation:" in captured.out
        assert "total screening cost:" in captured.out

    def test_low_score_session_costs_first_test_only(self, workspace, monkeypatch, capsys):
        root, data = workspace
        policy_path = root / "p1.json"
        policy = sw.load_policy(str(policy_path))
        import numpy as np
        from screenwise.model import normalize_features

        x = normalize_features(json.loads(self._features()), policy.schema)
        session = sw.start_session(x, policy)
        if session.is_final:
            pytest.skip("partition tree is a bare leaf for these features")
        first = session.pending_test
        next_session = sw.advance_session(session, first, sw.BiRadsScore.S1)
        if not next_session.is_final:
            pytest.skip("score 1 does not terminate this partition's tree")
        monkeypatch.setattr("builtins.input", lambda prompt="": "1")
        main(["execute", "--policy", str(policy_path), "--features", self._features()])
        out = capsys.readouterr().out
        cost = policy.costs.cost_of(first)
        assert f"total screening cost: {cost:.2f}" in out


def test_sweep_beta_writes_curve(tmp_path):
    config = tmp_path / "config.json"
    generator = json.loads(
        (Path(__file__).parent.parent / "src/screenwise/configs/generator_default.json").read_text()
    )
    generator["population"] = 700
    config.write_text(json.dumps({"generator": generator}))
    out = tmp_path / "sweep"
    code = main(
        ["sweep", "--kind", "beta", "--out", str(out), "--config", str(config), "--runs", "1"]
    )
    assert code == EXIT_OK
    files = list(out.glob("*.json"))
    assert len(files) == 1
    payload = json.loads(files[0].read_text())
    assert len(payload["sweeps"]["beta"]["rows"]) == 5
    assert list(out.glob("*_beta.csv"))


def test_train_on_all_negative_data(tmp_path):
    from screenwise.synth import CSV_HEADER

    rows = [",".join(CSV_HEADER)]
    rng_ages = [25 + (7 * i) % 55 for i in range(60)]
    for i, age in enumerate(rng_ages):
        rows.append(
            f"p{i},{age},{1 + i % 4},W,F,{i % 3},13,26,0,0,1,,,0"
        )
    data = tmp_path / "neg.csv"
    data.write_text("\n".join(rows) + "\n")
    out = tmp_path / "policy.json"
    assert main(["train", "--data", str(data), "--out", str(out)]) == EXIT_OK
    payload = json.loads(out.read_text())
    assert len(payload["partitions"]) == 1
    assert payload["partitions"][0]["tree"] == {"label": 0, "n": 60, "pos": 0, "neg": 60}
