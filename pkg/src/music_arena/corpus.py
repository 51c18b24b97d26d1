"""Track metadata ingestion, song-disjoint splitting, and the dataset census.

Track metadata and dataset descriptors travel as UTF-8 JSON lines, one
record per line. Splits assign whole songs: a song's clips never straddle
the train/test boundary, which means realised fractions deviate from the
requested one by up to a song.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import CannotSplitError, DataError, InvalidArgumentError

WESTERN = "western"
NON_WESTERN = "non-western"

#: Default rollup of census regions into the Western / non-Western buckets.
DEFAULT_REGION_MAP: dict[str, str] = {
    "European": WESTERN,
    "American": WESTERN,
    "East Asian": WESTERN,
    "South Asian": NON_WESTERN,
    "Middle Eastern": NON_WESTERN,
    "Oceania": NON_WESTERN,
    "Central Asian": NON_WESTERN,
    "Latin American": NON_WESTERN,
    "African": NON_WESTERN,
}


@dataclass(frozen=True)
class TrackMetadata:
    """One audio clip's catalogue entry."""

    id: str
    song_id: str
    genre: str
    region: str
    duration_s: float
    melody: str
    rhythm: str
    instruments: tuple[str, ...]
    audio_path: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("track id must be non-empty")
        if not self.song_id:
            raise DataError(f"track {self.id!r}: song_id must be non-empty")
        if not (self.duration_s >= 0):
            raise DataError(f"track {self.id!r}: duration_s must be >= 0")

    def to_json(self) -> dict:
        record = {
            "id": self.id,
            "song_id": self.song_id,
            "genre": self.genre,
            "region": self.region,
            "duration_s": self.duration_s,
            "melody": self.melody,
            "rhythm": self.rhythm,
            "instruments": list(self.instruments),
        }
        if self.audio_path is not None:
            record["audio_path"] = self.audio_path
        return record

    @classmethod
    def from_json(cls, record: Mapping) -> "TrackMetadata":
        try:
            return cls(
                id=str(record["id"]),
                song_id=str(record["song_id"]),
                genre=str(record.get("genre", "")),
                region=str(record.get("region", "")),
                duration_s=float(record["duration_s"]),
                melody=str(record.get("melody", "")),
                rhythm=str(record.get("rhythm", "")),
                instruments=tuple(str(i) for i in record.get("instruments", [])),
                audio_path=record.get("audio_path"),
            )
        except KeyError as exc:
            raise DataError(f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise DataError(str(exc)) from None


def ingest_metadata(path: str | Path) -> list[TrackMetadata]:
    """Load and validate a JSONL track metadata file.

    Malformed lines are reported with their line number; duplicate track ids
    are rejected by name.
    """
    tracks: list[TrackMetadata] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                track = TrackMetadata.from_json(record)
            except (json.JSONDecodeError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if track.id in seen:
                raise DataError(f"{path}:{lineno}: duplicate track id {track.id!r}")
            seen.add(track.id)
            tracks.append(track)
    return tracks


def write_metadata(path: str | Path, tracks: Iterable[TrackMetadata]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for track in tracks:
            fh.write(json.dumps(track.to_json(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class CorpusSplit:
    """A song-disjoint train/test partition of track ids."""

    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    train_hours: float
    test_hours: float


def split_by_song(
    tracks: Sequence[TrackMetadata], test_fraction: float = 0.2, *, seed: int
) -> CorpusSplit:
    """Partition tracks into train/test without splitting any song.

    Songs are drawn in seeded-random order into the test side until its
    duration reaches ``test_fraction`` of the total; everything else trains.
    Whole-song granularity means the realised fraction overshoots the target
    by at most one song.
    """
    if not (0.0 < test_fraction < 1.0):
        raise InvalidArgumentError(
            f"test_fraction must be in (0, 1), got {test_fraction}"
        )
    by_song: dict[str, list[TrackMetadata]] = {}
    for track in tracks:
        by_song.setdefault(track.song_id, []).append(track)
    if len(by_song) < 2:
        raise CannotSplitError(
            f"need at least 2 distinct songs to split, got {len(by_song)}"
        )
    song_ids = sorted(by_song)
    rng = random.Random(seed)
    rng.shuffle(song_ids)

    total_s = sum(t.duration_s for t in tracks)
    target_s = test_fraction * total_s
    test_songs: list[str] = []
    test_s = 0.0
    for song_id in song_ids:
        if test_s >= target_s:
            break
        test_songs.append(song_id)
        test_s += sum(t.duration_s for t in by_song[song_id])
    test_set = set(test_songs)
    if len(test_set) == len(song_ids):
        raise CannotSplitError("test fraction consumed every song; nothing left to train on")

    train_ids = sorted(t.id for t in tracks if t.song_id not in test_set)
    test_ids = sorted(t.id for t in tracks if t.song_id in test_set)
    return CorpusSplit(
        train_ids=tuple(train_ids),
        test_ids=tuple(test_ids),
        train_hours=(total_s - test_s) / 3600.0,
        test_hours=test_s / 3600.0,
    )


@dataclass(frozen=True)
class DatasetDescriptor:
    """One dataset surveyed by the census.

    ``paper_id`` groups rows proposed by the same publication; rows with an
    empty paper id contribute hours without counting as a paper (metadata
    attributed to a region no paper targets directly).
    """

    name: str
    region: str
    genre: str
    hours: float
    annotated: bool = False
    excluded: bool = False
    exclusion_reason: str = ""
    paper_id: str = ""

    def __post_init__(self) -> None:
        if not (self.hours >= 0):
            raise DataError(f"dataset {self.name!r}: hours must be >= 0")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "region": self.region,
            "genre": self.genre,
            "hours": self.hours,
            "annotated": self.annotated,
            "excluded": self.excluded,
            "exclusion_reason": self.exclusion_reason,
            "paper_id": self.paper_id,
        }

    @classmethod
    def from_json(cls, record: Mapping) -> "DatasetDescriptor":
        try:
            return cls(
                name=str(record["name"]),
                region=str(record.get("region", "")),
                genre=str(record.get("genre", "")),
                hours=float(record["hours"]),
                annotated=bool(record.get("annotated", False)),
                excluded=bool(record.get("excluded", False)),
                exclusion_reason=str(record.get("exclusion_reason", "")),
                paper_id=str(record.get("paper_id", "")),
            )
        except KeyError as exc:
            raise DataError(f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise DataError(str(exc)) from None


def ingest_datasets(path: str | Path) -> list[DatasetDescriptor]:
    """Load a JSONL census file of dataset descriptors."""
    datasets: list[DatasetDescriptor] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                datasets.append(DatasetDescriptor.from_json(json.loads(line)))
            except (json.JSONDecodeError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return datasets


@dataclass(frozen=True)
class CensusRow:
    label: str
    papers: int
    hours: float


@dataclass(frozen=True)
class DisparityReport:
    """Aggregate census tables plus the Western / non-Western rollup."""

    region_rows: tuple[CensusRow, ...]
    genre_rows: tuple[CensusRow, ...]
    unclassified_region_hours: float
    unclassified_genre_hours: float
    total_hours: float
    western_hours: float
    non_western_hours: float
    western_share_pct: float | None
    non_western_share_pct: float | None
    excluded_rows: tuple[tuple[str, str, float], ...]
    excluded_hours: float


def disparity_report(
    datasets: Sequence[DatasetDescriptor],
    region_map: Mapping[str, str] | None = None,
) -> DisparityReport:
    """Aggregate the census: per-region/per-genre totals and the rollup.

    Excluded datasets are listed separately and contribute to no table.
    Regions absent from ``region_map`` roll up as non-Western. Shares are
    None (rendered "n/a") when no hours were surveyed.
    """
    if region_map is None:
        region_map = DEFAULT_REGION_MAP
    surveyed = [d for d in datasets if not d.excluded]
    excluded = [d for d in datasets if d.excluded]

    region_rows = _aggregate(surveyed, key="region")
    genre_rows = _aggregate(surveyed, key="genre")
    uncl_region = sum(d.hours for d in surveyed if not d.region)
    uncl_genre = sum(d.hours for d in surveyed if not d.genre)
    total = sum(d.hours for d in surveyed)

    western = sum(
        d.hours for d in surveyed if d.region and region_map.get(d.region) == WESTERN
    )
    non_western = sum(
        d.hours
        for d in surveyed
        if d.region and region_map.get(d.region, NON_WESTERN) == NON_WESTERN
    )
    classified = western + non_western
    if classified > 0:
        western_pct = 100.0 * western / classified
        non_western_pct = 100.0 * non_western / classified
    else:
        western_pct = non_western_pct = None

    return DisparityReport(
        region_rows=region_rows,
        genre_rows=genre_rows,
        unclassified_region_hours=uncl_region,
        unclassified_genre_hours=uncl_genre,
        total_hours=total,
        western_hours=western,
        non_western_hours=non_western,
        western_share_pct=western_pct,
        non_western_share_pct=non_western_pct,
        excluded_rows=tuple(
            (d.name, d.exclusion_reason, d.hours) for d in excluded
        ),
        excluded_hours=sum(d.hours for d in excluded),
    )


def _aggregate(datasets: Iterable[DatasetDescriptor], key: str) -> tuple[CensusRow, ...]:
    hours: dict[str, float] = {}
    papers: dict[str, set[str]] = {}
    for d in datasets:
        label = getattr(d, key)
        if not label:
            continue
        hours[label] = hours.get(label, 0.0) + d.hours
        papers.setdefault(label, set())
        if d.paper_id:
            papers[label].add(d.paper_id)
    rows = [
        CensusRow(label=label, papers=len(papers[label]), hours=hours[label])
        for label in hours
    ]
    rows.sort(key=lambda r: (-r.hours, r.label))
    return tuple(rows)


def load_region_map(path: str | Path) -> dict[str, str]:
    """Read a region-map config: JSON {"western": [...], "non_western": [...]}."""
    record = json.loads(Path(path).read_text(encoding="utf-8"))
    mapping: dict[str, str] = {}
    for region in record.get("western", []):
        mapping[str(region)] = WESTERN
    for region in record.get("non_western", []):
        mapping[str(region)] = NON_WESTERN
    if not mapping:
        raise DataError(f"{path}: region map defines no regions")
    return mapping
