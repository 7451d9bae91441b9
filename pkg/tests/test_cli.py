import json
import shutil

import pytest

from schemaprobe.cli import build_parser, main, resolve_config
from schemaprobe.config import RunConfig, apply_override, config_from_dict, load_config

from test_bench import TABLES_JSON

QUESTION = "Which hotels allow pets and what price range are they in?"


def cfg_arg(ws):
    return ["--config", str(ws / "config.json"), "--offline"]


class TestConfig:
    def test_unknown_key(self):
        with pytest.raises(ValueError, match="retrieval.bogus"):
            config_from_dict({"retrieval": {"bogus": 1}})
        with pytest.raises(ValueError):
            apply_override(RunConfig(), "retrieval.bogus", "1")

    def test_override_and_digest(self):
        a, b = RunConfig(), RunConfig()
        assert a.digest() == b.digest()
        apply_override(b, "retrieval.budget", "20")
        assert b.retrieval.budget == 20 and a.digest() != b.digest()
        b.base_dir = "/elsewhere"
        apply_override(a, "retrieval.budget", "20")
        assert a.digest() == b.digest()

    def test_flags_win_and_offline_forces_local_providers(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"embedding": {"provider": "http", "endpoint": "http://x"}, "retrieval": {"budget": 7}}))
        args = build_parser().parse_args(["retrieve", "q", "--config", str(path), "--offline", "--budget", "3", "--ablate", "edges"])
        cfg = resolve_config(args)
        assert cfg.embedding.provider == "hash" and cfg.llm.provider == "fixture"
        assert cfg.retrieval.budget == 3 and cfg.retrieval.clubsuit == 0.0
        assert load_config(path).retrieval.budget == 7


class TestCommands:
    def test_retrieve_outputs(self, toy_workspace, tmp_path, capsys):
        out = tmp_path / "r"
        rc = main(["retrieve", QUESTION, *cfg_arg(toy_workspace), "--budget", "4",
                   "--out", str(out / "res.json"), "--subset", str(out / "sub.json"), "--plot", str(out / "gains.png")])
        assert rc == 0
        res = json.loads((out / "res.json").read_text())
        assert [s["rank"] for s in res["selected"]] == [1, 2, 3, 4]
        assert "cre_theme_park.hotels.price_range" in [s["qualified_name"] for s in res["selected"]]
        manifest = json.loads((out / "res.manifest.json").read_text())
        assert manifest["embedding"]["provider"] == "hash" and manifest["probe_cache_keys"]
        assert json.loads((out / "sub.json").read_text())["tables"][0]["name"] == "cre_theme_park.hotels"
        assert (out / "gains.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        assert "price_range" in capsys.readouterr().out

    def test_eval_outputs(self, toy_workspace, tmp_path, capsys):
        out = tmp_path / "e"
        rc = main(["eval", *cfg_arg(toy_workspace), "--examples", str(toy_workspace / "examples.jsonl"),
                   "--budgets", "5,20", "--out", str(out)])
        assert rc == 0
        assert {p.name for p in out.iterdir()} == {"recall.csv", "recall.txt", "recall_examples.jsonl", "recall.png", "run_manifest.json"}
        lines = (out / "recall.csv").read_text().splitlines()
        assert len(lines) == 5 and lines[1].startswith("crush,5,")
        text = capsys.readouterr().out
        assert text == (out / "recall.txt").read_text()

    def test_hallucinate(self, toy_workspace, capsys):
        assert main(["hallucinate", QUESTION, *cfg_arg(toy_workspace)]) == 0
        assert "Hotels.pets allowed" in capsys.readouterr().out

    def test_missing_fixture_reply_is_reported(self, toy_workspace, capsys):
        assert main(["hallucinate", "Not in the fixture?", *cfg_arg(toy_workspace)]) == 1
        assert "no recorded response" in capsys.readouterr().err

    def test_missing_index(self, toy_workspace, tmp_path, capsys):
        ws = tmp_path / "ws"
        shutil.copytree(toy_workspace, ws, ignore=shutil.ignore_patterns("index", ".cache"))
        assert main(["retrieve", QUESTION, *cfg_arg(ws)]) == 1
        assert "schemaprobe index" in capsys.readouterr().err

    def test_index_for_other_catalog(self, toy_workspace, tmp_path, capsys):
        ws = tmp_path / "ws"
        shutil.copytree(toy_workspace, ws, ignore=shutil.ignore_patterns(".cache"))
        cat = json.loads((ws / "catalog.json").read_text())
        cat["tables"][0]["columns"].append("extra_column")
        (ws / "catalog.json").write_text(json.dumps(cat))
        assert main(["retrieve", QUESTION, *cfg_arg(ws)]) == 1
        assert "rerun" in capsys.readouterr().err

    def test_index_reuses_cache(self, toy_workspace, capsys):
        assert main(["index", *cfg_arg(toy_workspace)]) == 0
        assert "provider calls: 0" in capsys.readouterr().out

    def test_build_union_and_convert(self, tmp_path, capsys):
        (tmp_path / "tables.json").write_text(json.dumps(TABLES_JSON))
        union = tmp_path / "union.json"
        assert main(["build-union", str(tmp_path / "tables.json"), "--out", str(union)]) == 0
        assert "2 tables, 5 columns" in capsys.readouterr().out
        assert json.loads(union.read_text())["prefixed"] is True
        (tmp_path / "q.json").write_text(json.dumps([{"db_id": "pets", "question": "Names?", "SQL": "SELECT Name FROM Owner"}]))
        out = tmp_path / "ex.jsonl"
        assert main(["convert-questions", "--format", "bird", "--questions", str(tmp_path / "q.json"),
                     "--tables", str(tmp_path / "tables.json"), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["gold_columns"] == ["pets.Owner.Name"]

    def test_toy_copy(self, tmp_path, capsys):
        assert main(["toy", str(tmp_path / "t")]) == 0
        assert (tmp_path / "t" / "llm" / "responses.jsonl").exists()
        assert main(["toy", str(tmp_path / "t")]) == 1
