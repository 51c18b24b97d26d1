#!/usr/bin/env python3
"""End-to-end demo: run the two-phase evaluation protocol in-process.

Schedules 36 dual-annotated matches, has two simulated annotators with
different taste profiles answer all of them, computes inter-annotator
agreement, schedules the 63-match second phase, finishes the annotations,
and prints the resulting leaderboards. All state lands in --data-dir
(default: a temp directory), so the arena can afterwards be inspected with
the CLI or served with `music-arena serve`.
"""

from __future__ import annotations

import argparse
import random
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from music_arena import agreement  # noqa: E402
from music_arena.judgments import Criterion, QueryType  # noqa: E402
from music_arena.prompts import PROVENANCE, EvalQuery  # noqa: E402
from music_arena.ratings import leaderboard_rows  # noqa: E402
from music_arena.store import ArenaStore, ScheduleConfig  # noqa: E402
from music_arena.tabular import render_table  # noqa: E402

SYSTEMS = ("musicgen_base", "musicgen_ft", "mustango_base", "mustango_ft")
PHASE1_PAIRS = (
    ("musicgen_base", "musicgen_ft"),
    ("mustango_base", "mustango_ft"),
    ("musicgen_base", "mustango_base"),
    ("musicgen_ft", "mustango_ft"),
)
PHASE2_PAIRS = PHASE1_PAIRS[1:]

# Hidden "true quality" per system; annotators perceive it noisily.
TRUE_QUALITY = {
    "musicgen_base": 0.55,
    "musicgen_ft": 0.35,
    "mustango_base": 0.45,
    "mustango_ft": 0.75,
}
TOKENS_BY_SIGN = {2: "L>>R", 1: "L>R", 0: "L=R", -1: "L<R", -2: "L<<R"}


def build_queries(per_type: int) -> list[EvalQuery]:
    queries = []
    for qtype in QueryType:
        for i in range(per_type):
            queries.append(
                EvalQuery(
                    query_id=f"{qtype.value}-{i:03d}",
                    query_type=qtype,
                    prompt_text=f"Simulated {qtype.value} prompt {i}.",
                    genre="Turkish Makam",
                    melody="Hicaz makam",
                    rhythm="Aksak usul",
                    instruments=("Oud", "Kanun"),
                    provenance=PROVENANCE[qtype],
                )
            )
    return queries


def answer(store: ArenaStore, view, annotator: str, rng: random.Random) -> dict[str, str]:
    match = next(m for m in store.matches() if m.match_id == view.match_id)
    gap = TRUE_QUALITY[match.left_system] - TRUE_QUALITY[match.right_system]
    answers = {}
    for criterion in Criterion:
        noisy = gap + rng.gauss(0.0, 0.12)
        if noisy > 0.25:
            sign = 2
        elif noisy > 0.05:
            sign = 1
        elif noisy < -0.25:
            sign = -2
        elif noisy < -0.05:
            sign = -1
        else:
            sign = 0
        answers[criterion.value] = TOKENS_BY_SIGN[sign]
    return answers


def drive_phase(store: ArenaStore, annotators: tuple[str, ...], rng: random.Random, ts: int) -> int:
    while True:
        progressed = False
        for annotator in annotators:
            view = store.next_match(annotator)
            if view is None:
                continue
            store.submit_left_right(
                view.match_id, annotator, answer(store, view, annotator, rng),
                timestamp_ms=ts,
            )
            ts += 1
            progressed = True
        if not progressed:
            return ts


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", help="arena data directory (default: temp)")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    data_dir = args.data_dir or tempfile.mkdtemp(prefix="arena-demo-")
    rng = random.Random(args.seed)
    store = ArenaStore(data_dir)
    queries = build_queries(10)
    phase1_queries = [q for i, q in enumerate(queries) if i % 10 < 3]
    phase2_queries = [q for i, q in enumerate(queries) if i % 10 >= 3]

    print(f"arena data dir: {data_dir}\n")
    store.schedule(
        ScheduleConfig(
            genre="Turkish Makam", allowed_pairs=PHASE1_PAIRS,
            queries_per_type=3, phase=1, annotators_per_match=2,
        ),
        phase1_queries,
        seed=args.seed,
    )
    ts = drive_phase(store, ("ann-1", "ann-2"), rng, ts=1)
    print("phase 1 complete: 36 matches, both annotators\n")

    print("inter-annotator agreement (phase 1):")
    rows = []
    for criterion in Criterion:
        for kind in (agreement.DISTANCE, agreement.DIRECTION):
            report = store.iaa_report(criterion, kind)
            rows.append((criterion.value, kind, round(report.kappa, 3), report.n_items))
    print(render_table(("criterion", "kind", "kappa", "n_items"), rows))

    store.schedule(
        ScheduleConfig(
            genre="Turkish Makam", allowed_pairs=PHASE2_PAIRS,
            queries_per_type=7, phase=2, annotators_per_match=1,
        ),
        phase2_queries,
        seed=args.seed + 1,
    )
    drive_phase(store, ("ann-1", "ann-2"), rng, ts=ts)
    print("phase 2 complete: 63 matches, single annotations\n")

    for criterion in Criterion:
        board = store.leaderboard(criterion)
        print(f"leaderboard ({criterion.value}, all queries):")
        print(
            render_table(
                ("system", "criterion", "query_type", "raw_elo", "scaled_elo", "matches"),
                leaderboard_rows(board),
            )
        )


if __name__ == "__main__":
    main()
