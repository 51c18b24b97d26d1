"""Command-line behaviour: flows, help, exit codes, deterministic reruns."""

from __future__ import annotations

import json

import numpy as np
import pytest

from music_arena.cli import EXIT_OK, EXIT_USAGE, build_parser, main
from music_arena.judgments import Criterion
from music_arena.matrixio import write_matrix, write_matrix_text
from music_arena.store import ArenaStore, ScheduleConfig

from conftest import FIXTURES, PHASE1_PAIRS, make_queries

SUBCOMMANDS = (
    "ingest", "split", "prompts", "schedule", "serve", "elo", "iaa",
    "metrics", "disparity", "adapter-train",
)


@pytest.fixture
def annotated_arena(tmp_path):
    """A data dir with a phase-1 schedule fully annotated by two annotators."""
    store = ArenaStore(tmp_path / "arena")
    cfg = ScheduleConfig(
        genre="Turkish Makam",
        allowed_pairs=PHASE1_PAIRS,
        queries_per_type=3,
        phase=1,
        annotators_per_match=2,
    )
    store.schedule(cfg, make_queries(10), seed=1)
    tokens = ["L>>R", "L>R", "L=R", "L<R", "L<<R"]
    ts = 1
    while True:
        progressed = False
        for annotator in ("ann-1", "ann-2"):
            view = store.next_match(annotator)
            if view is None:
                continue
            token = tokens[int(view.match_id[-2:]) % len(tokens)]
            store.submit_left_right(
                view.match_id, annotator,
                {c.value: token for c in Criterion},
                timestamp_ms=ts,
            )
            ts += 1
            progressed = True
        if not progressed:
            return store.data_dir


class TestParser:
    def test_every_subcommand_has_help(self, capsys):
        for sub in SUBCOMMANDS:
            code = main([sub, "--help"])
            out = capsys.readouterr().out
            assert code == 0, sub
            assert "--help" in out or "usage" in out

    def test_help_lists_every_flag(self, capsys):
        parser = build_parser()
        actions = parser._subparsers._group_actions[0].choices  # type: ignore[union-attr]
        for sub, subparser in actions.items():
            main([sub, "--help"])
            out = capsys.readouterr().out
            for action in subparser._actions:
                for option in action.option_strings:
                    if option.startswith("--"):
                        assert option in out, (sub, option)

    def test_unknown_flag_exits_2(self, capsys):
        assert main(["elo", "--bogus"]) == EXIT_USAGE
        assert "usage" in capsys.readouterr().err

    def test_unknown_subcommand_exits_2(self, capsys):
        assert main(["frobnicate"]) == EXIT_USAGE
        capsys.readouterr()


class TestIngestSplit:
    def test_ingest_summary(self, capsys):
        code = main(["ingest", "--tracks", str(FIXTURES / "tracks_hindustani.jsonl")])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert out.startswith("genre\ttracks\tsongs\thours")
        assert "Hindustani Classical" in out

    def test_ingest_missing_file_exits_2(self, capsys):
        assert main(["ingest", "--tracks", "/nonexistent.jsonl"]) == EXIT_USAGE
        capsys.readouterr()

    def test_split_outputs_and_rerun_identical(self, tmp_path, capsys):
        args = [
            "split",
            "--tracks", str(FIXTURES / "tracks_hindustani.jsonl"),
            "--seed", "2024",
            "--out-train", str(tmp_path / "train.txt"),
            "--out-test", str(tmp_path / "test.txt"),
        ]
        assert main(args) == EXIT_OK
        first = capsys.readouterr().out
        first_train = (tmp_path / "train.txt").read_bytes()
        assert main(args) == EXIT_OK
        assert capsys.readouterr().out == first
        assert (tmp_path / "train.txt").read_bytes() == first_train
        assert first.startswith("split\tsongs\ttracks\thours")

    def test_split_requires_seed(self, capsys):
        code = main(["split", "--tracks", str(FIXTURES / "tracks_hindustani.jsonl")])
        assert code == EXIT_USAGE
        capsys.readouterr()


class TestPrompts:
    def test_recall_to_stdout_deterministic(self, capsys):
        args = [
            "prompts", "--mode", "recall",
            "--tracks", str(FIXTURES / "tracks_makam.jsonl"),
            "-n", "5", "--seed", "3",
        ]
        assert main(args) == EXIT_OK
        first = capsys.readouterr().out
        assert main(args) == EXIT_OK
        assert capsys.readouterr().out == first
        records = [json.loads(line) for line in first.splitlines()]
        assert len(records) == 5
        assert all(r["query_type"] == "recall" for r in records)

    def test_creativity_requires_foreign_tracks(self, capsys):
        code = main([
            "prompts", "--mode", "creativity",
            "--tracks", str(FIXTURES / "tracks_makam.jsonl"),
            "-n", "2", "--seed", "3",
        ])
        assert code == EXIT_USAGE
        assert "foreign" in capsys.readouterr().err

    def test_creativity_blends_genres(self, tmp_path, capsys):
        out_path = tmp_path / "queries.jsonl"
        code = main([
            "prompts", "--mode", "creativity",
            "--tracks", str(FIXTURES / "tracks_makam.jsonl"),
            "--foreign-tracks", str(FIXTURES / "tracks_hindustani.jsonl"),
            "-n", "4", "--seed", "3",
            "--out", str(out_path),
        ])
        assert code == EXIT_OK
        capsys.readouterr()
        records = [json.loads(line) for line in out_path.read_text().splitlines()]
        assert all(r["genre"] == "Hindustani Classical" for r in records)


class TestEloIaa:
    def test_elo_table(self, annotated_arena, capsys):
        code = main([
            "elo",
            "--log", str(annotated_arena / "annotations.jsonl"),
            "--matches", str(annotated_arena / "matches.jsonl"),
            "--criterion", "OA",
        ])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0] == "system\tcriterion\tquery_type\traw_elo\tscaled_elo\tmatch_count"
        assert len(lines) == 5
        assert main([
            "elo",
            "--log", str(annotated_arena / "annotations.jsonl"),
            "--matches", str(annotated_arena / "matches.jsonl"),
            "--criterion", "OA",
        ]) == EXIT_OK
        assert capsys.readouterr().out == out  # byte-identical rerun

    def test_elo_query_type_slice(self, annotated_arena, capsys):
        code = main([
            "elo",
            "--log", str(annotated_arena / "annotations.jsonl"),
            "--matches", str(annotated_arena / "matches.jsonl"),
            "--criterion", "Inst", "--query-type", "recall",
        ])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "\trecall\t" in out

    def test_iaa_matches_hand_kappa(self, annotated_arena, capsys):
        code = main([
            "iaa",
            "--log", str(annotated_arena / "annotations.jsonl"),
            "--metric", "distance",
            "--criterion", "Inst",
        ])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        header, row = out.splitlines()
        assert header == "criterion\tkind\tp_o_mean\tp_e\tkappa\tn_items\tn_excluded"
        fields = row.split("\t")
        assert fields[0] == "Inst" and fields[1] == "distance"
        # Both annotators answered identically on every match.
        assert float(fields[4]) == 1.0
        assert fields[5] == "36"

    def test_unknown_criterion_exits_2(self, annotated_arena, capsys):
        code = main([
            "elo",
            "--log", str(annotated_arena / "annotations.jsonl"),
            "--matches", str(annotated_arena / "matches.jsonl"),
            "--criterion", "WAT",
        ])
        assert code == EXIT_USAGE
        capsys.readouterr()


class TestMetricsCommand:
    def test_full_report(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        ref = rng.normal(size=(30, 4)).astype(np.float32)
        gen = rng.normal(loc=0.2, size=(30, 4)).astype(np.float32)
        write_matrix(tmp_path / "ref.emb", ref)
        write_matrix(tmp_path / "gen.emb", gen)
        ids = [f"q{i}" for i in range(12)]
        write_matrix_text(tmp_path / "ref_logits.tsv", ids, rng.normal(size=(12, 3)))
        write_matrix_text(tmp_path / "gen_logits.tsv", ids, rng.normal(size=(12, 3)))
        write_matrix(tmp_path / "ref_feat.emb", rng.uniform(size=(10, 6)).astype(np.float32))
        write_matrix(tmp_path / "gen_feat.emb", rng.uniform(size=(10, 6)).astype(np.float32))
        code = main([
            "metrics", "--system", "demo",
            "--ref-embeddings", str(tmp_path / "ref.emb"),
            "--gen-embeddings", str(tmp_path / "gen.emb"),
            "--fd-ref-embeddings", str(tmp_path / "ref.emb"),
            "--fd-gen-embeddings", str(tmp_path / "gen.emb"),
            "--ref-logits", str(tmp_path / "ref_logits.tsv"),
            "--gen-logits", str(tmp_path / "gen_logits.tsv"),
            "--ref-features", str(tmp_path / "ref_feat.emb"),
            "--gen-features", str(tmp_path / "gen_feat.emb"),
        ])
        assert code == EXIT_OK
        header, row = capsys.readouterr().out.splitlines()
        assert header == "system\tFAD\tFD\tKLD\tPSNR"
        fields = row.split("\t")
        assert fields[0] == "demo"
        assert float(fields[1]) > 0 and fields[1] == fields[2]

    def test_absent_metrics_render_na(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        write_matrix(tmp_path / "ref.emb", rng.normal(size=(8, 3)).astype(np.float32))
        write_matrix(tmp_path / "gen.emb", rng.normal(size=(8, 3)).astype(np.float32))
        code = main([
            "metrics",
            "--ref-embeddings", str(tmp_path / "ref.emb"),
            "--gen-embeddings", str(tmp_path / "gen.emb"),
        ])
        assert code == EXIT_OK
        row = capsys.readouterr().out.splitlines()[1]
        assert row.split("\t")[2:] == ["n/a", "n/a", "n/a"]


class TestDisparity:
    def test_census_tables_and_rollup(self, capsys):
        code = main(["disparity", "--datasets", str(FIXTURES / "census_datasets.jsonl")])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "region\tpapers\thours" in out
        assert "genre\tpapers\thours" in out
        assert "European\t66\t6127.92" in out
        assert "African\t0\t27.5" in out
        rollup = next(
            line for line in out.splitlines() if line.startswith("western\t")
        )
        assert abs(float(rollup.split("\t")[2]) - 94.44) < 0.01
        assert "excluded_dataset\treason\thours" in out
        assert "(total)\t\t5772" in out

    def test_rerun_byte_identical(self, capsys):
        args = ["disparity", "--datasets", str(FIXTURES / "census_datasets.jsonl")]
        main(args)
        first = capsys.readouterr().out
        main(args)
        assert capsys.readouterr().out == first


class TestAdapterTrain:
    def test_training_run_and_outputs(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(32, 4)).astype(np.float32)
        target = (x * 1.05).astype(np.float32)
        write_matrix(tmp_path / "in.emb", x)
        write_matrix(tmp_path / "out.emb", target)
        code = main([
            "adapter-train",
            "--inputs", str(tmp_path / "in.emb"),
            "--targets", str(tmp_path / "out.emb"),
            "--reduction", "2",
            "--steps", "10",
            "--lr", "0.01",
            "--weight-decay", "0.0",
            "--seed", "5",
            "--curve-out", str(tmp_path / "curve.tsv"),
            "--checkpoint-out", str(tmp_path / "ckpt"),
        ])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("steps\tfinal_loss\ttrainable_params")
        curve = (tmp_path / "curve.tsv").read_text().splitlines()
        assert curve[0] == "step\tloss"
        assert len(curve) == 11
        assert (tmp_path / "ckpt" / "index.tsv").exists()

    def test_shape_mismatch_exits_2(self, tmp_path, capsys):
        write_matrix(tmp_path / "in.emb", np.zeros((4, 3), dtype=np.float32))
        write_matrix(tmp_path / "out.emb", np.zeros((4, 2), dtype=np.float32))
        code = main([
            "adapter-train",
            "--inputs", str(tmp_path / "in.emb"),
            "--targets", str(tmp_path / "out.emb"),
            "--seed", "1",
        ])
        assert code == EXIT_USAGE
        capsys.readouterr()
