"""Shared fixtures: paths, query sets, and protocol simulation helpers."""

from __future__ import annotations

import hashlib
from pathlib import Path

import pytest

from music_arena.judgments import COMPARATIVE_OPTIONS, Criterion, JudgmentOption, QueryType
from music_arena.prompts import PROVENANCE, EvalQuery
from music_arena.ratings import MatchAnnotation

FIXTURES = Path(__file__).parent / "fixtures"

SYSTEMS = ("musicgen_base", "musicgen_ft", "mustango_base", "mustango_ft")
PHASE1_PAIRS = (
    ("musicgen_base", "musicgen_ft"),
    ("mustango_base", "mustango_ft"),
    ("musicgen_base", "mustango_base"),
    ("musicgen_ft", "mustango_ft"),
)
PHASE2_PAIRS = PHASE1_PAIRS[1:]  # one settled pair dropped after phase 1


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def make_queries(per_type: int = 10, genre: str = "Turkish Makam") -> list[EvalQuery]:
    queries = []
    for qtype in QueryType:
        for i in range(per_type):
            queries.append(
                EvalQuery(
                    query_id=f"{qtype.value}-{i:03d}",
                    query_type=qtype,
                    prompt_text=f"A {genre} piece, variation {i} for {qtype.value}.",
                    genre=genre,
                    melody="Hicaz makam",
                    rhythm="Aksak usul",
                    instruments=("Oud", "Kanun"),
                    provenance=PROVENANCE[qtype],
                )
            )
    return queries


def pick_option(key: str, include_none: bool = True) -> JudgmentOption:
    """Deterministic pseudo-random judgment, never NOT_APPLICABLE."""
    options = COMPARATIVE_OPTIONS + ((JudgmentOption.NONE,) if include_none else ())
    digest = hashlib.md5(key.encode()).digest()
    return options[digest[0] % len(options)]


def pick_answers(match_id: str, annotator_id: str) -> dict[Criterion, JudgmentOption]:
    return {
        c: pick_option(f"{match_id}:{annotator_id}:{c.value}") for c in Criterion
    }


def make_annotation(
    match_id: str,
    annotator_id: str,
    system_a: str,
    system_b: str,
    timestamp_ms: int,
    judgments: dict[Criterion, JudgmentOption] | None = None,
    query_type: QueryType = QueryType.RECALL,
    genre: str = "Turkish Makam",
    phase: int = 1,
) -> MatchAnnotation:
    if judgments is None:
        judgments = pick_answers(match_id, annotator_id)
    return MatchAnnotation(
        match_id=match_id,
        annotator_id=annotator_id,
        system_a=system_a,
        system_b=system_b,
        genre=genre,
        query_type=query_type,
        phase=phase,
        timestamp_ms=timestamp_ms,
        judgments=judgments,
    )


def protocol_log(genre: str = "Turkish Makam") -> list[MatchAnnotation]:
    """The full two-phase log: 36 dual-annotated plus 63 single-annotated.

    Phase 1 runs 4 system pairs over 3 queries per type (36 matches), each
    judged by two annotators; phase 2 runs the 3 surviving pairs over the
    remaining 7 queries per type (63 matches), singly annotated. No
    NOT_APPLICABLE answers, so every annotation counts as a match.
    """
    log: list[MatchAnnotation] = []
    ts = 1_000
    seq = 0
    for pair in PHASE1_PAIRS:
        for qtype in QueryType:
            for _ in range(3):
                match_id = f"p1-{seq:05d}"
                seq += 1
                for annotator in ("ann-1", "ann-2"):
                    log.append(
                        make_annotation(
                            match_id, annotator, pair[0], pair[1], ts,
                            query_type=qtype, genre=genre, phase=1,
                        )
                    )
                    ts += 1
    for pair in PHASE2_PAIRS:
        for qtype in QueryType:
            for _ in range(7):
                match_id = f"p2-{seq:05d}"
                seq += 1
                log.append(
                    make_annotation(
                        match_id, "ann-1", pair[0], pair[1], ts,
                        query_type=qtype, genre=genre, phase=2,
                    )
                )
                ts += 1
    return log
