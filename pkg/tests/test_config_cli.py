import csv

import pytest

from suprawalk import ParseError, RunConfig, ValidationError, load_config, save_config
from suprawalk.cli import main


class TestRunConfig:
    def test_defaults_validate(self):
        RunConfig().validate()

    def test_round_trip(self, tmp_path):
        cfg = RunConfig(theta=0.3, dim=16, hidden=(8, 4, 8), couple_all=False, cd_k_list=(2, 3))
        path = tmp_path / "run.cfg"
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("theta = 0.1\nthate = 0.2\n")
        with pytest.raises(ParseError, match=":2:"):
            load_config(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("epochs = ten\n")
        with pytest.raises(ParseError, match="bad value"):
            load_config(path)

    def test_missing_equals_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("theta 0.1\n")
        with pytest.raises(ParseError):
            load_config(path)

    def test_bool_and_tuple_parsing(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("couple_all = FALSE\nhidden = 64, 32,64\ncd_k_list = 2,3\n")
        cfg = load_config(path)
        assert cfg.couple_all is False
        assert cfg.hidden == (64, 32, 64)
        assert cfg.cd_k_list == (2, 3)

    def test_comments_and_blanks_ignored(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\n\ntheta = 0.25  # trailing\n")
        assert load_config(path).theta == 0.25

    def test_loaded_config_is_validated(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("theta = 1.5\n")
        with pytest.raises(ValidationError, match="theta"):
            load_config(path)

    def test_stage_configs_share_the_seed(self):
        cfg = RunConfig(seed=7)
        assert cfg.walk_config().seed == 7
        assert cfg.sgns_config().seed == 7
        assert cfg.refine_config().seed == 7

    def test_invalid_folds_rejected(self):
        with pytest.raises(ValidationError):
            RunConfig(nc_folds=1).validate()


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_data")
    edges = root / "edges.txt"
    lines = []
    for l in (0, 1):
        for u, v in [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]:
            lines.append(f"{l} {u} {v}")
    edges.write_text("\n".join(lines) + "\n")
    labels = root / "labels.txt"
    labels.write_text("".join(f"{v} {'a' if v < 3 else 'b'}\n" for v in range(6)))
    return root


FAST = ["--dim", "8", "--epochs", "1", "--walks-per-node", "2", "--walk-length", "8", "--seed", "0"]


@pytest.fixture(scope="module")
def embeddings(dataset):
    out = dataset / "emb.txt"
    code = main(["embed", str(dataset / "edges.txt"), "-o", str(out), *FAST])
    assert code == 0
    return out


class TestCliCommands:
    def test_build_supra(self, dataset, tmp_path, capsys):
        out = tmp_path / "supra.txt"
        code = main(["build-supra", str(dataset / "edges.txt"), "-o", str(out), "--theta", "0.0"])
        assert code == 0
        assert out.exists()
        captured = capsys.readouterr()
        assert "replicas=12" in captured.out
        assert "couplings" in captured.out

    def test_embed_writes_coverage(self, dataset, embeddings):
        header = embeddings.read_text().splitlines()[0]
        assert header.split() == ["12", "8"]

    def test_embed_deterministic_rerun(self, dataset, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for out in (a, b):
            code = main(
                ["embed", str(dataset / "edges.txt"), "-o", str(out), "--deterministic", *FAST]
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_refine_reports_modularity_and_nmi(self, dataset, embeddings, tmp_path, capsys):
        out = tmp_path / "refined.txt"
        part = tmp_path / "partition.txt"
        code = main(
            [
                "refine", str(dataset / "edges.txt"), str(embeddings),
                "-o", str(out), "--partition", str(part),
                "--truth", str(dataset / "labels.txt"), "--seed", "0",
            ]
        )
        assert code == 0
        captured = capsys.readouterr()
        assert "Q_multi" in captured.out
        assert "NMI vs truth:" in captured.out
        assert out.exists() and part.exists()
        assert len(part.read_text().splitlines()) == 12

    def test_eval_nc_writes_csv(self, dataset, embeddings, tmp_path, capsys):
        csv_path = tmp_path / "nc.csv"
        code = main(
            [
                "eval", "nc", str(dataset / "edges.txt"), str(embeddings),
                str(dataset / "labels.txt"), "--csv", str(csv_path), "--seed", "0",
            ]
        )
        assert code == 0
        assert "nc_accuracy" in capsys.readouterr().out
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["metric", "dataset", "key", "value"]
        assert any(r[2] == "mean" for r in rows[1:])

    def test_eval_lp_reports_per_layer(self, dataset, capsys):
        code = main(["eval", "lp", str(dataset / "edges.txt"), *FAST])
        assert code == 0
        out = capsys.readouterr().out
        assert "layer0_mean" in out
        assert "layer1_mean" in out

    def test_eval_cd_honors_k_list(self, dataset, embeddings, capsys):
        code = main(
            ["eval", "cd", str(dataset / "edges.txt"), str(embeddings), "--k-list", "2,3", "--seed", "0"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "K=2" in out
        assert "K=3" in out

    def test_pipeline_writes_all_artifacts(self, dataset, tmp_path, capsys):
        outdir = tmp_path / "run"
        code = main(
            [
                "pipeline", str(dataset / "edges.txt"), "-o", str(outdir),
                "--labels", str(dataset / "labels.txt"), *FAST,
            ]
        )
        assert code == 0
        for name in (
            "edges.txt", "run.cfg", "supra.txt", "walks.txt",
            "embeddings.txt", "refined.txt", "partition.txt", "results.csv",
        ):
            assert (outdir / name).exists(), name
        out = capsys.readouterr().out
        assert "q_multi" in out
        assert "nc_accuracy" in out


class TestCliExitCodes:
    def test_validation_failure_exits_one(self, dataset, tmp_path, capsys):
        code = main(
            ["embed", str(dataset / "edges.txt"), "-o", str(tmp_path / "x.txt"), "--theta", "1.1"]
        )
        assert code == 1
        assert "error [embed]" in capsys.readouterr().err

    def test_missing_file_exits_two(self, tmp_path, capsys):
        code = main(["embed", str(tmp_path / "absent.txt"), "-o", str(tmp_path / "x.txt")])
        assert code == 2
        assert "io error" in capsys.readouterr().err

    def test_parse_error_exits_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("0 1\n")
        code = main(["embed", str(bad), "-o", str(tmp_path / "x.txt")])
        assert code == 1
        assert "error [embed]" in capsys.readouterr().err
