"""Deterministic ELO engine over the pairwise annotation log.

Every annotation is one match between the two systems it compares. Each
criterion (and each query-type slice) is an independent rating ladder:
replaying the same log for a different criterion starts from scratch.
ELO is order dependent, so replay requires a totally ordered log, sorted by
(timestamp, match id, annotator id).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import DataError, InvalidArgumentError
from .judgments import Criterion, JudgmentOption, QueryType


@dataclass(frozen=True)
class EloConfig:
    """Update weight and starting value for a rating ladder."""

    k_factor: float = 15.0
    initial_rating: float = 1500.0

    def __post_init__(self) -> None:
        if not (self.k_factor > 0):
            raise InvalidArgumentError(f"k_factor must be > 0, got {self.k_factor}")
        if not math.isfinite(self.initial_rating):
            raise InvalidArgumentError("initial_rating must be finite")


@dataclass
class RatingState:
    """One system's position on one (criterion, query filter) ladder."""

    system_id: str
    criterion: Criterion
    query_filter: QueryType | None  # None means all query types
    value: float
    match_count: int


@dataclass(frozen=True)
class MatchOutcome:
    """Result of one match from system A's perspective; None means omitted."""

    system_a: str
    system_b: str
    score_a: float | None

    @property
    def score_b(self) -> float | None:
        return None if self.score_a is None else 1.0 - self.score_a


@dataclass(frozen=True)
class MatchAnnotation:
    """One annotation joined with the context of the match it judged."""

    match_id: str
    annotator_id: str
    system_a: str
    system_b: str
    genre: str
    query_type: QueryType
    phase: int
    timestamp_ms: int
    judgments: Mapping[Criterion, JudgmentOption]

    @property
    def sort_key(self) -> tuple[int, str, str]:
        return (self.timestamp_ms, self.match_id, self.annotator_id)


def expected_score(r_i: float, r_j: float) -> float:
    """Probability-like expected score of the first player against the second.

    Strictly increasing in ``r_i - r_j``; the two perspectives always sum
    to one.
    """
    if not (math.isfinite(r_i) and math.isfinite(r_j)):
        raise InvalidArgumentError("ratings must be finite")
    return 1.0 / (1.0 + 10.0 ** ((r_j - r_i) / 400.0))


def outcome_from_judgment(judgment: JudgmentOption) -> float | None:
    """Convert a judgment into system A's match score.

    Either strength of preference counts as a full win or loss; equal and
    NONE are draws; NOT_APPLICABLE omits the match entirely (returns None).
    """
    if judgment in (JudgmentOption.A_MUCH_BETTER, JudgmentOption.A_BETTER):
        return 1.0
    if judgment in (JudgmentOption.B_MUCH_BETTER, JudgmentOption.B_BETTER):
        return 0.0
    if judgment in (JudgmentOption.EQUAL, JudgmentOption.NONE):
        return 0.5
    return None


def update(
    r_i: float, r_j: float, score_a: float, cfg: EloConfig = EloConfig()
) -> tuple[float, float]:
    """Apply one match result to both ratings with the same K.

    The same delta is added to one side and subtracted from the other, so
    the sum of the two ratings is conserved.
    """
    if score_a not in (0.0, 0.5, 1.0):
        raise InvalidArgumentError(f"score must be 0, 0.5 or 1, got {score_a}")
    delta = cfg.k_factor * (score_a - expected_score(r_i, r_j))
    return r_i + delta, r_j - delta


def sort_log(log: Iterable[MatchAnnotation]) -> list[MatchAnnotation]:
    """Order annotations by (timestamp, match id, annotator id)."""
    return sorted(log, key=lambda rec: rec.sort_key)


def replay(
    log: Sequence[MatchAnnotation],
    criterion: Criterion,
    query_filter: QueryType | None = None,
    cfg: EloConfig = EloConfig(),
    systems: Iterable[str] | None = None,
) -> list[RatingState]:
    """Replay an ordered annotation log into a leaderboard.

    Each annotation's judgment for ``criterion`` becomes one match outcome;
    omitted (NOT_APPLICABLE) entries change nothing, including match counts.
    ``systems`` fixes the ladder membership; when omitted it is inferred
    from the log. The log must already be sorted (see :func:`sort_log`).
    """
    for prev, cur in zip(log, log[1:]):
        if cur.sort_key < prev.sort_key:
            raise InvalidArgumentError(
                "log is not sorted by (timestamp, match id, annotator id); "
                "sort it with sort_log() first"
            )
    if systems is None:
        known = sorted({s for rec in log for s in (rec.system_a, rec.system_b)})
    else:
        known = sorted(set(systems))
    ratings = {s: cfg.initial_rating for s in known}
    counts = {s: 0 for s in known}

    for rec in log:
        if query_filter is not None and rec.query_type != query_filter:
            continue
        for sys_id in (rec.system_a, rec.system_b):
            if sys_id not in ratings:
                raise DataError(f"annotation {rec.match_id} names unknown system {sys_id!r}")
        judgment = rec.judgments.get(criterion)
        if judgment is None:
            raise DataError(f"annotation {rec.match_id} is missing criterion {criterion.value}")
        score = outcome_from_judgment(judgment)
        if score is None:
            continue
        ra, rb = ratings[rec.system_a], ratings[rec.system_b]
        ratings[rec.system_a], ratings[rec.system_b] = update(ra, rb, score, cfg)
        counts[rec.system_a] += 1
        counts[rec.system_b] += 1

    board = [
        RatingState(
            system_id=s,
            criterion=criterion,
            query_filter=query_filter,
            value=ratings[s],
            match_count=counts[s],
        )
        for s in known
    ]
    board.sort(key=lambda st: (-st.value, st.system_id))
    return board


def scale_ratings(leaderboard: Sequence[RatingState]) -> dict[str, float]:
    """Min-max scale raw ratings to [0, 100] per (criterion, query filter).

    Monotone within each group, so ordering and argmax are preserved.
    A group with a single system, or where all ratings tie, maps to 100.
    """
    if not leaderboard:
        raise InvalidArgumentError("cannot scale an empty leaderboard")
    groups: dict[tuple, list[RatingState]] = {}
    for state in leaderboard:
        groups.setdefault((state.criterion, state.query_filter), []).append(state)
    scaled: dict[str, float] = {}
    for members in groups.values():
        lo = min(st.value for st in members)
        hi = max(st.value for st in members)
        for st in members:
            if hi == lo:
                scaled[st.system_id] = 100.0
            else:
                # Ratio first, so the group maximum lands on exactly 100.0.
                scaled[st.system_id] = 100.0 * ((st.value - lo) / (hi - lo))
    return scaled


def leaderboard_rows(
    leaderboard: Sequence[RatingState],
) -> list[tuple[str, str, str, float, float, int]]:
    """Flatten a leaderboard into (system, criterion, query_type, raw, scaled, matches) rows."""
    if not leaderboard:
        return []
    scaled = scale_ratings(leaderboard)
    return [
        (
            st.system_id,
            st.criterion.value,
            st.query_filter.value if st.query_filter is not None else "all",
            st.value,
            scaled[st.system_id],
            st.match_count,
        )
        for st in leaderboard
    ]
