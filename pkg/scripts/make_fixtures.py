#!/usr/bin/env python3
"""Regenerate the committed test fixtures.

Deterministic: rerunning produces byte-identical files. Emits
tests/fixtures/tracks_hindustani.jsonl, tracks_makam.jsonl and
census_datasets.jsonl, then sanity-checks the properties the test suite
relies on (exact corpus totals, split landing within one song of the
expected train hours, census row sums).
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from music_arena import corpus  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"

RAGAS = [
    "Yaman", "Bhairavi", "Darbari Kanada", "Bageshri", "Malkauns", "Todi",
    "Marwa", "Puriya Dhanashri", "Desh", "Kedar", "Jaijaiwanti", "Bihag",
    "Shree", "Hamsadhwani", "Miyan ki Malhar", "Jog", "Charukeshi", "Khamaj",
]
LAYAS = ["Madhya laya", "Vilambit laya"]
HINDUSTANI_INSTRUMENTS = ["Sarangi", "Harmonium", "Tabla", "Violin", "Tanpura", "Voice"]

MAKAMS = [
    "Hicaz makam", "Rast makam", "Acem makam", "Nihavent makam", "Ussak makam",
    "Huzzam makam", "Segah makam", "Kurdilihicazkar makam", "Mahur makam",
    "Buselik makam", "Saba makam", "Huseyni makam", "Evic makam", "Suzinak makam",
]
USULS = [
    "Aksak usul", "Duyek usul", "Sofyan usul", "Curcuna usul", "Semai usul",
    "Fahte usul", "Cifte sofyan usul", "Devr-i kebir usul", "Yuruk semai usul",
]
MAKAM_INSTRUMENTS = [
    "Oud", "Tanbur", "Ney", "Davul", "Clarinet", "Kanun", "Zurna", "Bendir",
    "Darbuka", "Classical kemence", "Rebab", "Tef", "Kudum", "Voice",
]


def build_tracks(
    prefix: str,
    genre: str,
    region: str,
    total_seconds: int,
    n_songs: int,
    melodies: list[str],
    rhythms: list[str],
    instruments: list[str],
    seed: int,
) -> list[dict]:
    """Integer-second song durations summing exactly to total_seconds."""
    rng = random.Random(seed)
    weights = [rng.uniform(0.6, 1.8) for _ in range(n_songs)]
    # One long recording so the fixture exercises wide duration spread.
    weights[0] = 3.4
    scale = total_seconds / sum(weights)
    durations = [max(120, int(round(w * scale))) for w in weights]
    durations[-1] += total_seconds - sum(durations)
    assert sum(durations) == total_seconds and durations[-1] > 0

    records = []
    for i, song_seconds in enumerate(durations):
        song_id = f"{prefix}-song-{i:04d}"
        melody = rng.choice(melodies)
        rhythm = rng.choice(rhythms)
        n_inst = rng.randint(2, min(5, len(instruments)))
        insts = sorted(rng.sample(instruments, n_inst))
        n_clips = rng.randint(1, 3)
        cuts = sorted(rng.sample(range(1, song_seconds), n_clips - 1)) if n_clips > 1 else []
        bounds = [0] + cuts + [song_seconds]
        for j in range(n_clips):
            records.append(
                {
                    "id": f"{prefix}-{i:04d}-{j}",
                    "song_id": song_id,
                    "genre": genre,
                    "region": region,
                    "duration_s": bounds[j + 1] - bounds[j],
                    "melody": melody,
                    "rhythm": rhythm,
                    "instruments": insts,
                }
            )
    return records


# Census rows: (region, paper count, hours). A zero paper count with
# nonzero hours is represented by rows without a paper id.
REGION_ROWS = [
    ("European", 66, 6127.92),
    ("East Asian", 71, 2746.73),
    ("South Asian", 1, 88.78),
    ("Central Asian", 0, 57.01),
    ("American", 72, 921.84),
    ("Latin American", 5, 323.25),
    ("Oceania", 3, 41.99),
    ("African", 0, 27.50),
    ("Middle Eastern", 5, 37.86),
]
GENRE_CYCLE = ["Pop", "Rock", "Classical", "Electronic", "Jazz", "Folk", ""]
EXCLUDED_TOTAL_HOURS = 5772
N_EXCLUDED = 12


def build_census() -> list[dict]:
    records = []
    for region, papers, hours in REGION_ROWS:
        n_rows = max(papers, 1)
        cents = int(round(hours * 100))
        base = cents // n_rows
        rows_cents = [base] * n_rows
        for k in range(cents - base * n_rows):
            rows_cents[k] += 1
        assert sum(rows_cents) == cents
        for k, row_cents in enumerate(rows_cents):
            records.append(
                {
                    "name": f"{region.lower().replace(' ', '-')}-ds-{k:03d}",
                    "region": region,
                    "genre": GENRE_CYCLE[(len(records) + k) % len(GENRE_CYCLE)],
                    "hours": row_cents / 100.0,
                    "annotated": k % 2 == 0,
                    "excluded": False,
                    "exclusion_reason": "",
                    "paper_id": f"{region.lower().replace(' ', '-')}-paper-{k:03d}"
                    if papers > 0
                    else "",
                }
            )
    per = EXCLUDED_TOTAL_HOURS // N_EXCLUDED
    for k in range(N_EXCLUDED):
        records.append(
            {
                "name": f"excluded-ds-{k:03d}",
                "region": "",
                "genre": "",
                "hours": float(per),
                "annotated": False,
                "excluded": True,
                "exclusion_reason": "genre and region metadata unavailable",
                "paper_id": "",
            }
        )
    return records


def write_jsonl(path: Path, records: list[dict]) -> None:
    path.write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records),
        encoding="utf-8",
    )


def check_split(path: Path, expected_train_hours: float, seed: int) -> None:
    tracks = corpus.ingest_metadata(path)
    split = corpus.split_by_song(tracks, 0.2, seed=seed)
    by_song: dict[str, float] = {}
    for t in tracks:
        by_song[t.song_id] = by_song.get(t.song_id, 0.0) + t.duration_s
    max_song_hours = max(by_song.values()) / 3600.0
    gap = abs(split.train_hours - expected_train_hours)
    print(
        f"{path.name}: total={sum(by_song.values())/3600.0:.2f}h "
        f"train={split.train_hours:.3f}h expected={expected_train_hours}h "
        f"gap={gap:.3f}h max_song={max_song_hours:.3f}h "
        f"{'OK' if gap <= max_song_hours else 'OUT OF TOLERANCE'}"
    )
    if gap > max_song_hours:
        raise SystemExit(1)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    hindustani = build_tracks(
        "hind", "Hindustani Classical", "South Asian",
        total_seconds=83664,  # 23.24 h
        n_songs=56,
        melodies=RAGAS, rhythms=LAYAS, instruments=HINDUSTANI_INSTRUMENTS,
        seed=11,
    )
    write_jsonl(FIXTURES / "tracks_hindustani.jsonl", hindustani)

    makam = build_tracks(
        "makam", "Turkish Makam", "Middle Eastern",
        total_seconds=436176,  # 121.16 h
        n_songs=290,
        melodies=MAKAMS, rhythms=USULS, instruments=MAKAM_INSTRUMENTS,
        seed=23,
    )
    write_jsonl(FIXTURES / "tracks_makam.jsonl", makam)

    write_jsonl(FIXTURES / "census_datasets.jsonl", build_census())

    check_split(FIXTURES / "tracks_hindustani.jsonl", 18.91, seed=2024)
    check_split(FIXTURES / "tracks_makam.jsonl", 97.23, seed=2024)

    datasets = corpus.ingest_datasets(FIXTURES / "census_datasets.jsonl")
    report = corpus.disparity_report(datasets)
    print("census regions:", [(r.label, r.papers, r.hours) for r in report.region_rows])
    print(
        f"western={report.western_share_pct:.2f}% "
        f"non_western={report.non_western_share_pct:.2f}% "
        f"excluded={report.excluded_hours}h"
    )


if __name__ == "__main__":
    main()
