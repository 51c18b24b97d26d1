"""Administrative command line tying the pipeline together.

One binary with subcommands: ingest, split, prompts, schedule, serve, elo,
iaa, metrics, disparity, adapter-train. Stochastic commands require an
explicit --seed so reruns are byte-identical. All tables are emitted as
tab-separated UTF-8 with a header row. Exit codes: 0 success, 2 validation
error (including usage errors), 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import adapter, agreement, corpus, matrixio, metrics, prompts, ratings, store
from .errors import ArenaError, DataError, InvalidArgumentError
from .judgments import Criterion, QueryType
from .tabular import render_table

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_VALIDATION_ERRORS = (
    InvalidArgumentError,
    DataError,
    FileNotFoundError,
    IsADirectoryError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="music-arena",
        description="Evaluation arena toolkit for generative music systems.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a track metadata file")
    p.add_argument("--tracks", required=True, help="JSONL track metadata file")
    p.add_argument("--out", help="write normalised records here instead of a summary")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="song-disjoint train/test split")
    p.add_argument("--tracks", required=True)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-train", help="write train track ids, one per line")
    p.add_argument("--out-test", help="write test track ids, one per line")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("prompts", help="generate evaluation queries")
    p.add_argument("--mode", required=True, choices=[q.value for q in QueryType])
    p.add_argument("--tracks", required=True, help="training metadata (native genre)")
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--templates", help="template config file (default: bundled)")
    p.add_argument("--foreign-tracks", help="metadata of the other genre (creativity)")
    p.add_argument("--foreign-genre", help="genre label for the foreign pool (creativity)")
    p.add_argument("--out", help="write queries here instead of standard output")
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("schedule", help="append a scheduling round to a data dir")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--queries", required=True, help="JSONL evaluation queries")
    p.add_argument("--genre", required=True)
    p.add_argument("--pairs", required=True, help="comma list of sysA:sysB pairs")
    p.add_argument("--queries-per-type", type=int, required=True)
    p.add_argument("--phase", type=int, required=True, choices=(1, 2))
    p.add_argument("--annotators-per-match", type=int, required=True, choices=(1, 2))
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("serve", help="run the arena HTTP service")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", help="static UI bundle to serve at the root path")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("elo", help="replay an annotation log into a leaderboard")
    p.add_argument("--log", required=True, help="JSONL annotation log")
    p.add_argument("--matches", required=True, help="JSONL matches file")
    p.add_argument("--criterion", required=True)
    p.add_argument("--query-type", help="recall, analysis, creativity or all")
    p.add_argument("--genre")
    p.add_argument("--k-factor", type=float, default=15.0)
    p.add_argument("--initial-rating", type=float, default=1500.0)
    p.set_defaults(func=cmd_elo)

    p = sub.add_parser("iaa", help="inter-annotator agreement from a log")
    p.add_argument("--log", required=True, help="JSONL annotation log")
    p.add_argument("--metric", required=True, choices=(agreement.DISTANCE, agreement.DIRECTION))
    p.add_argument("--criterion", required=True)
    p.add_argument("--phase", type=int, default=1)
    p.set_defaults(func=cmd_iaa)

    p = sub.add_parser("metrics", help="objective metrics over ingested files")
    p.add_argument("--system", default="system")
    p.add_argument("--ref-embeddings", help="reference embeddings (first backbone)")
    p.add_argument("--gen-embeddings", help="generated embeddings (first backbone)")
    p.add_argument("--fd-ref-embeddings", help="reference embeddings (second backbone)")
    p.add_argument("--fd-gen-embeddings", help="generated embeddings (second backbone)")
    p.add_argument("--ref-logits")
    p.add_argument("--gen-logits")
    p.add_argument("--ref-features")
    p.add_argument("--gen-features")
    p.add_argument("--peak", type=float, default=1.0)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("disparity", help="dataset census tables and rollup")
    p.add_argument("--datasets", required=True, help="JSONL dataset descriptors")
    p.add_argument("--region-map", help="JSON region rollup config")
    p.set_defaults(func=cmd_disparity)

    p = sub.add_parser("adapter-train", help="train an adapter on feature pairs")
    p.add_argument("--inputs", required=True, help="input feature matrix file")
    p.add_argument("--targets", required=True, help="target feature matrix file")
    p.add_argument("--reduction", type=int, default=8)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--weight-decay", type=float, default=0.05)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--curve-out", help="write the (step, loss) curve here as TSV")
    p.add_argument("--checkpoint-out", help="directory for the parameter checkpoint")
    p.set_defaults(func=cmd_adapter_train)

    return parser


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    tracks = corpus.ingest_metadata(args.tracks)
    if args.out:
        corpus.write_metadata(args.out, tracks)
        print(f"wrote {len(tracks)} records to {args.out}")
        return EXIT_OK
    by_genre: dict[str, list[corpus.TrackMetadata]] = {}
    for track in tracks:
        by_genre.setdefault(track.genre or "(unclassified)", []).append(track)
    rows = [
        (
            genre,
            len(members),
            len({t.song_id for t in members}),
            sum(t.duration_s for t in members) / 3600.0,
        )
        for genre, members in sorted(by_genre.items())
    ]
    sys.stdout.write(render_table(("genre", "tracks", "songs", "hours"), rows))
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    tracks = corpus.ingest_metadata(args.tracks)
    split = corpus.split_by_song(tracks, args.test_fraction, seed=args.seed)
    if args.out_train:
        Path(args.out_train).write_text("\n".join(split.train_ids) + "\n", encoding="utf-8")
    if args.out_test:
        Path(args.out_test).write_text("\n".join(split.test_ids) + "\n", encoding="utf-8")
    by_id = {t.id: t for t in tracks}
    rows = [
        (
            "train",
            len({by_id[i].song_id for i in split.train_ids}),
            len(split.train_ids),
            split.train_hours,
        ),
        (
            "test",
            len({by_id[i].song_id for i in split.test_ids}),
            len(split.test_ids),
            split.test_hours,
        ),
    ]
    sys.stdout.write(render_table(("split", "songs", "tracks", "hours"), rows))
    return EXIT_OK


def cmd_prompts(args: argparse.Namespace) -> int:
    tracks = corpus.ingest_metadata(args.tracks)
    templates = prompts.load_templates(args.templates) if args.templates else None
    mode = QueryType.parse(args.mode)
    if mode == QueryType.RECALL:
        queries = prompts.generate_recall_queries(tracks, args.count, args.seed, templates)
    elif mode == QueryType.ANALYSIS:
        queries = prompts.generate_analysis_queries(tracks, args.count, args.seed, templates)
    else:
        if not args.foreign_tracks:
            raise InvalidArgumentError("creativity mode requires --foreign-tracks")
        foreign_tracks = corpus.ingest_metadata(args.foreign_tracks)
        genre = args.foreign_genre or next(
            (t.genre for t in foreign_tracks if t.genre), ""
        )
        pool = prompts.AttributePool.from_metadata(genre, foreign_tracks)
        queries = prompts.generate_creativity_queries(
            tracks, pool, args.count, args.seed, templates
        )
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for query in queries:
            out.write(json.dumps(query.to_json(), ensure_ascii=False) + "\n")
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_schedule(args: argparse.Namespace) -> int:
    pairs = []
    for token in args.pairs.split(","):
        a, sep, b = token.partition(":")
        if not sep or not a or not b:
            raise InvalidArgumentError(
                f"bad pair {token!r}; expected systemA:systemB"
            )
        pairs.append((a.strip(), b.strip()))
    cfg = store.ScheduleConfig(
        genre=args.genre,
        allowed_pairs=tuple(pairs),
        queries_per_type=args.queries_per_type,
        phase=args.phase,
        annotators_per_match=args.annotators_per_match,
    )
    queries = prompts.read_queries(args.queries)
    arena = store.ArenaStore(args.data_dir)
    matches = arena.schedule(cfg, queries, seed=args.seed)
    sys.stdout.write(
        render_table(("phase", "matches", "pairs"), [(args.phase, len(matches), len(pairs))])
    )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _load_log(args: argparse.Namespace) -> list[ratings.MatchAnnotation]:
    matches = {m.match_id: m for m in store.load_matches(args.matches)}
    annotations = store.load_annotations(args.log)
    if args.genre:
        matches = {k: m for k, m in matches.items() if m.genre == args.genre}
        annotations = [a for a in annotations if a.match_id in matches]
    return ratings.sort_log(store.join_annotations(matches, annotations))


def cmd_elo(args: argparse.Namespace) -> int:
    criterion = Criterion.parse(args.criterion)
    query_type = None
    if args.query_type and args.query_type.lower() != "all":
        query_type = QueryType.parse(args.query_type)
    log = _load_log(args)
    cfg = ratings.EloConfig(k_factor=args.k_factor, initial_rating=args.initial_rating)
    board = ratings.replay(log, criterion, query_filter=query_type, cfg=cfg)
    rows = ratings.leaderboard_rows(board)
    sys.stdout.write(
        render_table(
            ("system", "criterion", "query_type", "raw_elo", "scaled_elo", "match_count"),
            rows,
        )
    )
    return EXIT_OK


def cmd_iaa(args: argparse.Namespace) -> int:
    criterion = Criterion.parse(args.criterion)
    annotations = store.load_annotations(args.log)
    by_match: dict[str, list[store.Annotation]] = {}
    for ann in annotations:
        if ann.kind != store.ANNOTATION or ann.phase != args.phase:
            continue
        by_match.setdefault(ann.match_id, []).append(ann)
    pairs = []
    for match_id in sorted(by_match):
        anns = sorted(by_match[match_id], key=lambda a: (a.timestamp_ms, a.annotator_id))
        if len(anns) >= 2:
            pairs.append((anns[0].judgments[criterion], anns[1].judgments[criterion]))
    matrix = agreement.AgreementMatrix.of_kind(args.metric)
    report = agreement.kappa(pairs, matrix, criterion=criterion.value)
    sys.stdout.write(
        render_table(
            ("criterion", "kind", "p_o_mean", "p_e", "kappa", "n_items", "n_excluded"),
            [
                (
                    report.criterion,
                    report.kind,
                    report.p_o_mean,
                    report.p_e,
                    report.kappa,
                    report.n_items,
                    report.n_excluded,
                )
            ],
        )
    )
    return EXIT_OK


def _embedding_set(path: str | None, tag: str) -> metrics.EmbeddingSet | None:
    if not path:
        return None
    _, matrix = matrixio.read_matrix_auto(path)
    return metrics.EmbeddingSet(matrix, source_tag=tag)


def cmd_metrics(args: argparse.Namespace) -> int:
    logits = None
    if args.ref_logits and args.gen_logits:
        ref_ids, ref = matrixio.read_matrix_auto(args.ref_logits)
        gen_ids, gen = matrixio.read_matrix_auto(args.gen_logits)
        if ref_ids is not None and gen_ids is not None:
            logits = metrics.PairedLogits.pair_by_prompt(ref_ids, ref, gen_ids, gen)
        else:
            # Binary containers carry no ids; rows must already align.
            logits = metrics.PairedLogits(ref=ref, gen=gen)
    features = None
    if args.ref_features and args.gen_features:
        _, ref_feat = matrixio.read_matrix_auto(args.ref_features)
        _, gen_feat = matrixio.read_matrix_auto(args.gen_features)
        features = (ref_feat, gen_feat)
    report = metrics.evaluate_corpus(
        ref_set=_embedding_set(args.ref_embeddings, "ref"),
        gen_set=_embedding_set(args.gen_embeddings, "gen"),
        logits=logits,
        features=features,
        fd_ref_set=_embedding_set(args.fd_ref_embeddings, "fd-ref"),
        fd_gen_set=_embedding_set(args.fd_gen_embeddings, "fd-gen"),
        peak=args.peak,
        system_id=args.system,
    )
    sys.stdout.write(render_table(metrics.MetricReport.COLUMNS, [report.as_row()]))
    return EXIT_OK


def cmd_disparity(args: argparse.Namespace) -> int:
    datasets = corpus.ingest_datasets(args.datasets)
    region_map = corpus.load_region_map(args.region_map) if args.region_map else None
    report = corpus.disparity_report(datasets, region_map)
    out = sys.stdout
    out.write(
        render_table(
            ("region", "papers", "hours"),
            [(r.label, r.papers, r.hours) for r in report.region_rows],
        )
    )
    out.write("\n")
    out.write(
        render_table(
            ("genre", "papers", "hours"),
            [(r.label, r.papers, r.hours) for r in report.genre_rows],
        )
    )
    out.write("\n")
    out.write(
        render_table(
            ("bucket", "hours", "share_pct"),
            [
                ("western", report.western_hours, report.western_share_pct),
                ("non-western", report.non_western_hours, report.non_western_share_pct),
            ],
        )
    )
    out.write("\n")
    out.write(
        render_table(
            ("excluded_dataset", "reason", "hours"),
            list(report.excluded_rows) + [("(total)", "", report.excluded_hours)],
        )
    )
    return EXIT_OK


def cmd_adapter_train(args: argparse.Namespace) -> int:
    _, inputs = matrixio.read_matrix_auto(args.inputs)
    _, targets = matrixio.read_matrix_auto(args.targets)
    if inputs.shape != targets.shape:
        raise InvalidArgumentError(
            f"inputs {inputs.shape} and targets {targets.shape} must match"
        )
    d = inputs.shape[1]
    cfg = adapter.AdapterConfig(variant=adapter.DENSE, d=d, r=args.reduction)
    params = adapter.AdapterParams.initialize(cfg, seed=args.seed)
    train_cfg = adapter.TrainConfig(lr=args.lr, weight_decay=args.weight_decay)
    params, curve = adapter.train(
        inputs.astype(np.float64), targets.astype(np.float64), params, args.steps, train_cfg
    )
    if args.curve_out:
        Path(args.curve_out).write_text(
            render_table(("step", "loss"), curve), encoding="utf-8"
        )
    if args.checkpoint_out:
        params.save(args.checkpoint_out)
    total, _ = adapter.param_count(cfg, n_sites=1)
    rows = [(args.steps, curve[-1][1] if curve else None, total)]
    sys.stdout.write(render_table(("steps", "final_loss", "trainable_params"), rows))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArenaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
