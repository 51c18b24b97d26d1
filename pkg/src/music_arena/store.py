"""Durable state for the evaluation arena.

All state lives in append-only JSON-lines files under one data directory:
``matches.jsonl`` (scheduled matches), ``prompts.jsonl`` (query records),
``assignments.jsonl`` (which annotator was served which match, recorded
before serving), and ``annotations.jsonl`` (submitted judgments, stored in
system space). Nothing is ever rewritten; every derived view (leaderboards,
agreement reports) is recomputed from the log, so a restarted process
reaches exactly the same state.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import agreement, ratings
from .errors import (
    ConflictError,
    DataError,
    InvalidArgumentError,
    NotFoundError,
    ShortfallError,
)
from .judgments import (
    Criterion,
    JudgmentOption,
    QueryType,
    judgment_from_left_right,
)
from .prompts import EvalQuery
from .ratings import EloConfig, MatchAnnotation, RatingState

MATCHES_FILE = "matches.jsonl"
PROMPTS_FILE = "prompts.jsonl"
ASSIGNMENTS_FILE = "assignments.jsonl"
ANNOTATIONS_FILE = "annotations.jsonl"
AUDIO_DIR = "audio"

ANNOTATION = "annotation"
AMENDMENT = "amendment"


@dataclass(frozen=True)
class Match:
    """One blinded A/B comparison to be judged."""

    match_id: str
    genre: str
    query_type: QueryType
    prompt_id: str
    system_a: str
    system_b: str
    presented_left: str  # "a" or "b"
    phase: int

    def __post_init__(self) -> None:
        if self.system_a == self.system_b:
            raise InvalidArgumentError(
                f"match {self.match_id}: a system cannot compete with itself"
            )
        if self.presented_left not in ("a", "b"):
            raise InvalidArgumentError(
                f"match {self.match_id}: presented_left must be 'a' or 'b'"
            )
        if self.phase not in (1, 2):
            raise InvalidArgumentError(f"match {self.match_id}: phase must be 1 or 2")

    @property
    def left_system(self) -> str:
        return self.system_a if self.presented_left == "a" else self.system_b

    @property
    def right_system(self) -> str:
        return self.system_b if self.presented_left == "a" else self.system_a

    def to_json(self) -> dict:
        return {
            "match_id": self.match_id,
            "genre": self.genre,
            "query_type": self.query_type.value,
            "prompt_id": self.prompt_id,
            "system_a": self.system_a,
            "system_b": self.system_b,
            "presented_left": self.presented_left,
            "phase": self.phase,
        }

    @classmethod
    def from_json(cls, record: Mapping) -> "Match":
        return cls(
            match_id=str(record["match_id"]),
            genre=str(record.get("genre", "")),
            query_type=QueryType.parse(record["query_type"]),
            prompt_id=str(record["prompt_id"]),
            system_a=str(record["system_a"]),
            system_b=str(record["system_b"]),
            presented_left=str(record["presented_left"]),
            phase=int(record["phase"]),
        )


@dataclass(frozen=True)
class Annotation:
    """One submitted judgment set, stored in system space."""

    match_id: str
    annotator_id: str
    judgments: Mapping[Criterion, JudgmentOption]
    timestamp_ms: int
    phase: int
    kind: str = ANNOTATION

    def __post_init__(self) -> None:
        missing = [c.value for c in Criterion if c not in self.judgments]
        if missing:
            raise InvalidArgumentError(
                f"annotation for match {self.match_id} is missing criteria: "
                + ", ".join(missing)
            )
        if self.kind not in (ANNOTATION, AMENDMENT):
            raise InvalidArgumentError(f"unknown record kind {self.kind!r}")

    def to_json(self) -> dict:
        return {
            "match_id": self.match_id,
            "annotator_id": self.annotator_id,
            "judgments": {c.value: j.value for c, j in self.judgments.items()},
            "timestamp_ms": self.timestamp_ms,
            "phase": self.phase,
            "kind": self.kind,
        }

    @classmethod
    def from_json(cls, record: Mapping) -> "Annotation":
        return cls(
            match_id=str(record["match_id"]),
            annotator_id=str(record["annotator_id"]),
            judgments={
                Criterion.parse(c): JudgmentOption.parse(j)
                for c, j in record["judgments"].items()
            },
            timestamp_ms=int(record["timestamp_ms"]),
            phase=int(record["phase"]),
            kind=str(record.get("kind", ANNOTATION)),
        )


@dataclass(frozen=True)
class ScheduleConfig:
    """One scheduling round: which pairs play, over how many queries."""

    genre: str
    allowed_pairs: tuple[tuple[str, str], ...]
    queries_per_type: int
    phase: int
    annotators_per_match: int

    def __post_init__(self) -> None:
        if self.annotators_per_match not in (1, 2):
            raise InvalidArgumentError("annotators_per_match must be 1 or 2")
        if self.phase not in (1, 2):
            raise InvalidArgumentError("phase must be 1 or 2")
        if self.queries_per_type < 0:
            raise InvalidArgumentError("queries_per_type must be >= 0")
        for a, b in self.allowed_pairs:
            if a == b:
                raise InvalidArgumentError(f"pair ({a!r}, {b!r}) repeats a system")


def schedule_matches(
    cfg: ScheduleConfig,
    queries: Sequence[EvalQuery],
    seed: int,
    start_index: int = 0,
) -> list[Match]:
    """Enumerate allowed pairs x the first queries-per-type of each type.

    Only the left/right coin flips depend on the seed; match ids continue
    from ``start_index`` so repeated scheduling rounds never collide.
    """
    by_type: dict[QueryType, list[EvalQuery]] = {q: [] for q in QueryType}
    for query in queries:
        by_type[query.query_type].append(query)
    if cfg.queries_per_type > 0:
        for query_type in QueryType:
            have = len(by_type[query_type])
            if have < cfg.queries_per_type:
                raise ShortfallError(
                    f"need {cfg.queries_per_type} {query_type.value} queries, got {have}"
                )
    rng = random.Random(seed)
    matches: list[Match] = []
    seq = start_index
    for system_a, system_b in cfg.allowed_pairs:
        for query_type in QueryType:
            for query in by_type[query_type][: cfg.queries_per_type]:
                matches.append(
                    Match(
                        match_id=f"p{cfg.phase}-{seq:05d}",
                        genre=cfg.genre,
                        query_type=query_type,
                        prompt_id=query.query_id,
                        system_a=system_a,
                        system_b=system_b,
                        presented_left=rng.choice("ab"),
                        phase=cfg.phase,
                    )
                )
                seq += 1
    return matches


def join_annotations(
    matches: Mapping[str, Match],
    annotations: Iterable[Annotation],
    include_amendments: bool = False,
) -> list[MatchAnnotation]:
    """Join annotations with their match context for rating replay."""
    joined = []
    for ann in annotations:
        if ann.kind == AMENDMENT and not include_amendments:
            continue
        match = matches.get(ann.match_id)
        if match is None:
            raise DataError(f"annotation references unknown match {ann.match_id!r}")
        joined.append(
            MatchAnnotation(
                match_id=ann.match_id,
                annotator_id=ann.annotator_id,
                system_a=match.system_a,
                system_b=match.system_b,
                genre=match.genre,
                query_type=match.query_type,
                phase=ann.phase,
                timestamp_ms=ann.timestamp_ms,
                judgments=dict(ann.judgments),
            )
        )
    return joined


def load_matches(path: str | Path) -> list[Match]:
    return [Match.from_json(rec) for rec in _read_jsonl(path)]


def load_annotations(path: str | Path) -> list[Annotation]:
    return [Annotation.from_json(rec) for rec in _read_jsonl(path)]


def _read_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return records


@dataclass(frozen=True)
class MatchView:
    """What an annotator is allowed to see: no system identifiers."""

    match_id: str
    prompt_text: str
    clip_left_url: str
    clip_right_url: str
    done: int
    total: int

    def to_json(self) -> dict:
        return {
            "match_id": self.match_id,
            "prompt_text": self.prompt_text,
            "clip_left_url": self.clip_left_url,
            "clip_right_url": self.clip_right_url,
            "progress": {"done": self.done, "total": self.total},
        }


class ArenaStore:
    """Arena state rooted at one data directory.

    A single lock serialises writers; every append goes straight to disk so
    a crash loses at most the record being written. Reads of derived state
    (leaderboards, agreement) recompute from memory images of the logs and
    are cached until the next annotation lands.
    """

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        (self.data_dir / AUDIO_DIR).mkdir(exist_ok=True)
        self._lock = threading.Lock()
        self._matches: dict[str, Match] = {}
        self._prompts: dict[str, EvalQuery] = {}
        self._assignments: dict[str, list[str]] = {}  # match_id -> annotator ids
        self._annotations: list[Annotation] = []
        self._annotated: set[tuple[str, str]] = set()  # (match_id, annotator_id)
        self._last_ts: dict[str, int] = {}
        self._board_cache: dict[tuple, list[RatingState]] = {}
        self._load()

    # -- loading -----------------------------------------------------------

    def _load(self) -> None:
        matches_path = self.data_dir / MATCHES_FILE
        if matches_path.exists():
            for match in load_matches(matches_path):
                self._matches[match.match_id] = match
        prompts_path = self.data_dir / PROMPTS_FILE
        if prompts_path.exists():
            for rec in _read_jsonl(prompts_path):
                query = EvalQuery.from_json(rec)
                self._prompts[query.query_id] = query
        assignments_path = self.data_dir / ASSIGNMENTS_FILE
        if assignments_path.exists():
            for rec in _read_jsonl(assignments_path):
                self._assignments.setdefault(str(rec["match_id"]), []).append(
                    str(rec["annotator_id"])
                )
        annotations_path = self.data_dir / ANNOTATIONS_FILE
        if annotations_path.exists():
            for ann in load_annotations(annotations_path):
                self._remember(ann)

    def _remember(self, ann: Annotation) -> None:
        self._annotations.append(ann)
        if ann.kind == ANNOTATION:
            self._annotated.add((ann.match_id, ann.annotator_id))
        self._last_ts[ann.annotator_id] = max(
            self._last_ts.get(ann.annotator_id, 0), ann.timestamp_ms
        )

    def _append(self, filename: str, record: dict) -> None:
        with open(self.data_dir / filename, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    # -- scheduling --------------------------------------------------------

    def schedule(
        self, cfg: ScheduleConfig, queries: Sequence[EvalQuery], seed: int
    ) -> list[Match]:
        """Append a scheduling round; returns the new matches."""
        with self._lock:
            matches = schedule_matches(
                cfg, queries, seed, start_index=len(self._matches)
            )
            for query in queries:
                if query.query_id not in self._prompts:
                    self._prompts[query.query_id] = query
                    self._append(PROMPTS_FILE, query.to_json())
            for match in matches:
                self._matches[match.match_id] = match
                self._append(MATCHES_FILE, match.to_json())
            self._board_cache.clear()
            return matches

    # -- annotator workflow -------------------------------------------------

    def _required_annotators(self, match: Match) -> int:
        return 2 if match.phase == 1 else 1

    def _pending_for(self, annotator_id: str) -> list[Match]:
        pending = []
        for match_id in sorted(self._matches):
            match = self._matches[match_id]
            takers = self._assignments.get(match_id, [])
            if annotator_id in takers:
                if (match_id, annotator_id) not in self._annotated:
                    pending.append(match)  # served earlier but never submitted
                continue
            if len(takers) < self._required_annotators(match):
                pending.append(match)
        return pending

    def next_match(self, annotator_id: str) -> MatchView | None:
        """Assign and return the lowest-ordinal pending match, blinded.

        The assignment is written before the match is served, so a phase-2
        match can never reach two annotators. Returns None when the
        annotator has nothing left to do.
        """
        if not annotator_id:
            raise InvalidArgumentError("annotator id must be non-empty")
        with self._lock:
            pending = self._pending_for(annotator_id)
            if not pending:
                return None
            match = pending[0]
            if annotator_id not in self._assignments.get(match.match_id, []):
                self._assignments.setdefault(match.match_id, []).append(annotator_id)
                self._append(
                    ASSIGNMENTS_FILE,
                    {"match_id": match.match_id, "annotator_id": annotator_id},
                )
            done = sum(1 for m, a in self._annotated if a == annotator_id)
            total = done + len(pending)
            prompt = self._prompts.get(match.prompt_id)
            return MatchView(
                match_id=match.match_id,
                prompt_text=prompt.prompt_text if prompt else "",
                clip_left_url=f"/api/v1/audio/{match.match_id}.left",
                clip_right_url=f"/api/v1/audio/{match.match_id}.right",
                done=done,
                total=total,
            )

    def submit_left_right(
        self,
        match_id: str,
        annotator_id: str,
        answers: Mapping[str, str],
        timestamp_ms: int | None = None,
        amendment: bool = False,
    ) -> Annotation:
        """Record an annotation arriving in Left/Right wire form.

        Answers are mapped through the match's presented_left into system
        space before anything is stored. Duplicates conflict unless flagged
        as amendments; amendments never enter rating replays by default.
        """
        with self._lock:
            match = self._matches.get(match_id)
            if match is None:
                raise NotFoundError(f"unknown match {match_id!r}")
            if annotator_id not in self._assignments.get(match_id, []):
                raise InvalidArgumentError(
                    f"annotator {annotator_id!r} was not served match {match_id!r}"
                )
            already = (match_id, annotator_id) in self._annotated
            if already and not amendment:
                raise ConflictError(
                    f"annotator {annotator_id!r} already annotated match {match_id!r}"
                )
            if amendment and not already:
                raise InvalidArgumentError(
                    "amendments may only follow an existing annotation"
                )
            judgments: dict[Criterion, JudgmentOption] = {}
            for criterion in Criterion:
                token = answers.get(criterion.value)
                if token is None:
                    raise InvalidArgumentError(
                        f"missing answer for criterion {criterion.value}"
                    )
                judgments[criterion] = judgment_from_left_right(
                    token, match.presented_left
                )
            if timestamp_ms is None:
                timestamp_ms = int(time.time() * 1000)
            last = self._last_ts.get(annotator_id)
            if last is not None and timestamp_ms < last:
                raise InvalidArgumentError(
                    f"timestamp {timestamp_ms} is earlier than annotator "
                    f"{annotator_id!r}'s previous submission at {last}"
                )
            annotation = Annotation(
                match_id=match_id,
                annotator_id=annotator_id,
                judgments=judgments,
                timestamp_ms=timestamp_ms,
                phase=match.phase,
                kind=AMENDMENT if amendment else ANNOTATION,
            )
            self._append(ANNOTATIONS_FILE, annotation.to_json())
            self._remember(annotation)
            self._board_cache.clear()
            return annotation

    # -- derived state -------------------------------------------------------

    def matches(self) -> list[Match]:
        return [self._matches[m] for m in sorted(self._matches)]

    def annotations(self) -> list[Annotation]:
        return list(self._annotations)

    def systems(self, genre: str | None = None) -> list[str]:
        names = set()
        for match in self._matches.values():
            if genre is not None and match.genre != genre:
                continue
            names.add(match.system_a)
            names.add(match.system_b)
        return sorted(names)

    def audio_path(self, match_id: str, side: str) -> Path:
        """Resolve a blinded clip id to the underlying system's audio file."""
        match = self._matches.get(match_id)
        if match is None:
            raise NotFoundError(f"unknown match {match_id!r}")
        if side == "left":
            system = match.left_system
        elif side == "right":
            system = match.right_system
        else:
            raise InvalidArgumentError(f"clip side must be 'left' or 'right', got {side!r}")
        return self.data_dir / AUDIO_DIR / f"{match.prompt_id}__{system}.wav"

    def leaderboard(
        self,
        criterion: Criterion,
        query_type: QueryType | None = None,
        genre: str | None = None,
        cfg: EloConfig = EloConfig(),
    ) -> list[RatingState]:
        """Replay the annotation log for one criterion slice."""
        key = (criterion, query_type, genre, cfg.k_factor, cfg.initial_rating)
        cached = self._board_cache.get(key)
        if cached is not None:
            return cached
        relevant_matches = {
            m.match_id: m
            for m in self._matches.values()
            if genre is None or m.genre == genre
        }
        annotations = [a for a in self._annotations if a.match_id in relevant_matches]
        joined = ratings.sort_log(join_annotations(relevant_matches, annotations))
        board = ratings.replay(
            joined,
            criterion,
            query_filter=query_type,
            cfg=cfg,
            systems=self.systems(genre),
        )
        self._board_cache[key] = board
        return board

    def paired_judgments(
        self, criterion: Criterion, phase: int = 1
    ) -> list[tuple[JudgmentOption, JudgmentOption]]:
        """Per-match judgment pairs from the dual-annotated phase."""
        by_match: dict[str, list[Annotation]] = {}
        for ann in self._annotations:
            if ann.kind != ANNOTATION or ann.phase != phase:
                continue
            by_match.setdefault(ann.match_id, []).append(ann)
        pairs = []
        for match_id in sorted(by_match):
            anns = sorted(by_match[match_id], key=lambda a: (a.timestamp_ms, a.annotator_id))
            if len(anns) >= 2:
                pairs.append(
                    (anns[0].judgments[criterion], anns[1].judgments[criterion])
                )
        return pairs

    def iaa_report(
        self, criterion: Criterion, kind: str
    ) -> agreement.KappaReport:
        """Inter-annotator agreement over the dual-annotated phase."""
        pairs = self.paired_judgments(criterion)
        matrix = agreement.AgreementMatrix.of_kind(kind)
        return agreement.kappa(pairs, matrix, criterion=criterion.value)
