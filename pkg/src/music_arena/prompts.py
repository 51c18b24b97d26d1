"""Metadata-driven prompt generation.

Training prompts fill one of several templates with a track's genre,
instrument list, melody and rhythm labels. Evaluation queries come in three
tiers: recall queries reuse attribute combinations attested in the training
set, analysis queries recombine attested attributes into novel triples, and
creativity queries blend attributes across two genre pools.

Templates are data, not code: they live in a plain-text config file (one
block per template) and default to the bundled set.
"""

from __future__ import annotations

import json
import random
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import TrackMetadata
from .errors import DataError, InvalidArgumentError, ShortfallError, TemplateError
from .judgments import QueryType

SLOTS = ("genre", "instruments", "melody", "rhythm")

PROVENANCE = {
    QueryType.RECALL: "seen-combination",
    QueryType.ANALYSIS: "novel-combination",
    QueryType.CREATIVITY: "cross-genre",
}

#: (melody, rhythm, instrument tuple) — the unit recombined across queries.
Triple = tuple[str, str, tuple[str, ...]]


@dataclass(frozen=True)
class PromptTemplate:
    """A fill-in-the-slots sentence describing a musical piece."""

    id: str
    text: str
    genre_scope: str = ""  # empty: applies to any genre

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for _, field_name, _, _ in string.Formatter().parse(self.text):
            if field_name is None:
                continue
            if field_name not in SLOTS:
                raise TemplateError(
                    f"template {self.id!r}: unknown slot {{{field_name}}}; "
                    f"allowed slots are {', '.join(SLOTS)}"
                )
            if field_name in seen:
                raise TemplateError(
                    f"template {self.id!r}: slot {{{field_name}}} appears more than once"
                )
            seen.add(field_name)

    @property
    def slots(self) -> tuple[str, ...]:
        return tuple(
            field_name
            for _, field_name, _, _ in string.Formatter().parse(self.text)
            if field_name is not None
        )


@dataclass(frozen=True)
class EvalQuery:
    """One evaluation prompt plus the attributes it was built from."""

    query_id: str
    query_type: QueryType
    prompt_text: str
    genre: str
    melody: str
    rhythm: str
    instruments: tuple[str, ...]
    provenance: str

    def __post_init__(self) -> None:
        expected = PROVENANCE[self.query_type]
        if self.provenance != expected:
            raise InvalidArgumentError(
                f"{self.query_type.value} queries must carry provenance "
                f"{expected!r}, got {self.provenance!r}"
            )

    def to_json(self) -> dict:
        return {
            "id": self.query_id,
            "query_type": self.query_type.value,
            "prompt_text": self.prompt_text,
            "genre": self.genre,
            "melody": self.melody,
            "rhythm": self.rhythm,
            "instruments": list(self.instruments),
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, record: Mapping) -> "EvalQuery":
        try:
            return cls(
                query_id=str(record["id"]),
                query_type=QueryType.parse(record["query_type"]),
                prompt_text=str(record["prompt_text"]),
                genre=str(record.get("genre", "")),
                melody=str(record.get("melody", "")),
                rhythm=str(record.get("rhythm", "")),
                instruments=tuple(str(i) for i in record.get("instruments", [])),
                provenance=str(record["provenance"]),
            )
        except KeyError as exc:
            raise DataError(f"missing field {exc.args[0]!r}") from None


def parse_templates(text: str) -> list[PromptTemplate]:
    """Parse the plain-text template config: blank-line separated blocks.

    Within a block the first line is the template id (optionally suffixed
    with ``@genre`` to scope it), the rest joins into the template text.
    Lines starting with ``#`` are comments.
    """
    templates: list[PromptTemplate] = []
    block: list[str] = []
    for raw in text.splitlines() + [""]:
        line = raw.rstrip()
        if line.startswith("#"):
            continue
        if line.strip():
            block.append(line.strip())
            continue
        if block:
            head, *body = block
            if not body:
                raise TemplateError(f"template {head!r} has no text")
            template_id, _, scope = head.partition("@")
            templates.append(
                PromptTemplate(
                    id=template_id.strip(),
                    text=" ".join(body),
                    genre_scope=scope.strip(),
                )
            )
            block = []
    if not templates:
        raise TemplateError("template config defines no templates")
    return templates


def load_templates(path: str | Path) -> list[PromptTemplate]:
    return parse_templates(Path(path).read_text(encoding="utf-8"))


def default_templates() -> list[PromptTemplate]:
    text = (
        resources.files("music_arena").joinpath("data/default_templates.txt")
    ).read_text(encoding="utf-8")
    return parse_templates(text)


def render_prompt(template: PromptTemplate, meta: TrackMetadata) -> str:
    """Fill a template from track metadata; instruments join with ", "."""
    return _render(
        template,
        genre=meta.genre,
        instruments=meta.instruments,
        melody=meta.melody,
        rhythm=meta.rhythm,
    )


def _render(
    template: PromptTemplate,
    *,
    genre: str,
    instruments: Sequence[str],
    melody: str,
    rhythm: str,
) -> str:
    values = {
        "genre": genre,
        "instruments": ", ".join(instruments),
        "melody": melody,
        "rhythm": rhythm,
    }
    for slot in template.slots:
        if not values[slot]:
            raise TemplateError(
                f"template {template.id!r} uses slot {{{slot}}} but the "
                "metadata provides no value for it"
            )
    return template.text.format(**values)


def training_prompt(
    meta: TrackMetadata, templates: Sequence[PromptTemplate], rng: random.Random
) -> str:
    """Render one training prompt with a randomly selected template."""
    eligible = [t for t in templates if not t.genre_scope or t.genre_scope == meta.genre]
    if not eligible:
        raise TemplateError(f"no template in scope for genre {meta.genre!r}")
    return render_prompt(rng.choice(eligible), meta)


def attested_triples(tracks: Iterable[TrackMetadata]) -> list[Triple]:
    """Distinct (melody, rhythm, instruments) triples, sorted for determinism."""
    return sorted({(t.melody, t.rhythm, t.instruments) for t in tracks})


@dataclass(frozen=True)
class AttributePool:
    """Attribute vocabulary of one genre, used for cross-genre blending."""

    genre: str
    melodies: tuple[str, ...]
    rhythms: tuple[str, ...]
    instruments: tuple[str, ...]

    @classmethod
    def from_metadata(cls, genre: str, tracks: Iterable[TrackMetadata]) -> "AttributePool":
        melodies = sorted({t.melody for t in tracks if t.melody})
        rhythms = sorted({t.rhythm for t in tracks if t.rhythm})
        instruments = sorted({i for t in tracks for i in t.instruments})
        return cls(
            genre=genre,
            melodies=tuple(melodies),
            rhythms=tuple(rhythms),
            instruments=tuple(instruments),
        )

    @property
    def is_empty(self) -> bool:
        return not (self.genre or self.melodies or self.rhythms or self.instruments)


def generate_recall_queries(
    train_meta: Sequence[TrackMetadata],
    n: int,
    seed: int,
    templates: Sequence[PromptTemplate] | None = None,
) -> list[EvalQuery]:
    """Sample n queries whose attribute triples occur in the training set."""
    if not train_meta:
        raise InvalidArgumentError("training metadata is empty")
    templates = list(templates) if templates else default_templates()
    triples = attested_triples(train_meta)
    if n > len(triples):
        raise ShortfallError(
            f"requested {n} recall queries but only {len(triples)} distinct "
            "attribute combinations exist in the training set"
        )
    genre_of = {(t.melody, t.rhythm, t.instruments): t.genre for t in sorted(train_meta, key=lambda t: t.id, reverse=True)}
    rng = random.Random(seed)
    chosen = rng.sample(triples, n)
    queries = []
    for i, (melody, rhythm, instruments) in enumerate(chosen):
        genre = genre_of[(melody, rhythm, instruments)]
        template = rng.choice(templates)
        queries.append(
            EvalQuery(
                query_id=f"recall-{i:03d}",
                query_type=QueryType.RECALL,
                prompt_text=_render(
                    template,
                    genre=genre,
                    instruments=instruments,
                    melody=melody,
                    rhythm=rhythm,
                ),
                genre=genre,
                melody=melody,
                rhythm=rhythm,
                instruments=instruments,
                provenance=PROVENANCE[QueryType.RECALL],
            )
        )
    return queries


def generate_analysis_queries(
    train_meta: Sequence[TrackMetadata],
    n: int,
    seed: int,
    templates: Sequence[PromptTemplate] | None = None,
    max_tries_per_query: int = 200,
) -> list[EvalQuery]:
    """Build n novel triples by substituting one attribute of a seen triple.

    Every emitted triple combines attested attribute values but never occurs
    verbatim in the training set. One attribute (melody, rhythm or the
    instrument list) is replaced per attempt with another attested value;
    attempts repeat until the triple is novel, with bounded retries.
    """
    if not train_meta:
        raise InvalidArgumentError("training metadata is empty")
    templates = list(templates) if templates else default_templates()
    triples = attested_triples(train_meta)
    seen = set(triples)
    melodies = sorted({m for m, _, _ in triples})
    rhythms = sorted({r for _, r, _ in triples})
    instrument_lists = sorted({i for _, _, i in triples})
    pools: dict[int, list] = {0: melodies, 1: rhythms, 2: instrument_lists}
    substitutable = [axis for axis, pool in pools.items() if len(pool) >= 2]
    if not substitutable:
        raise ShortfallError(
            "no attribute has two distinct attested values; no novel "
            "combination is possible"
        )
    genre_of = {(t.melody, t.rhythm, t.instruments): t.genre for t in sorted(train_meta, key=lambda t: t.id, reverse=True)}
    rng = random.Random(seed)
    queries: list[EvalQuery] = []
    emitted: set[Triple] = set()
    for i in range(n):
        novel: Triple | None = None
        for _ in range(max_tries_per_query):
            base = rng.choice(triples)
            axis = rng.choice(substitutable)
            replacement = rng.choice(pools[axis])
            candidate = list(base)
            candidate[axis] = replacement
            triple = (candidate[0], candidate[1], candidate[2])
            if triple not in seen and triple not in emitted:
                novel = triple
                break
        if novel is None:
            raise ShortfallError(
                f"combination space exhausted after {len(queries)} of {n} "
                "analysis queries"
            )
        emitted.add(novel)
        melody, rhythm, instruments = novel
        genre = genre_of[rng.choice(triples)]
        template = rng.choice(templates)
        queries.append(
            EvalQuery(
                query_id=f"analysis-{i:03d}",
                query_type=QueryType.ANALYSIS,
                prompt_text=_render(
                    template,
                    genre=genre,
                    instruments=instruments,
                    melody=melody,
                    rhythm=rhythm,
                ),
                genre=genre,
                melody=melody,
                rhythm=rhythm,
                instruments=instruments,
                provenance=PROVENANCE[QueryType.ANALYSIS],
            )
        )
    return queries


def generate_creativity_queries(
    native_meta: Sequence[TrackMetadata],
    foreign: AttributePool,
    n: int,
    seed: int,
    templates: Sequence[PromptTemplate] | None = None,
) -> list[EvalQuery]:
    """Blend the foreign genre label with native musical attributes.

    Each query carries the foreign pool's genre and a native (melody,
    rhythm, instruments) triple, so every prompt mixes both pools.
    """
    if foreign.is_empty:
        raise InvalidArgumentError("foreign attribute pool is empty")
    if not foreign.genre:
        raise InvalidArgumentError("foreign pool must name a genre to blend with")
    if not native_meta:
        raise InvalidArgumentError("native metadata is empty")
    templates = list(templates) if templates else default_templates()
    triples = attested_triples(native_meta)
    rng = random.Random(seed)
    queries = []
    for i in range(n):
        melody, rhythm, instruments = rng.choice(triples)
        template = rng.choice(templates)
        queries.append(
            EvalQuery(
                query_id=f"creativity-{i:03d}",
                query_type=QueryType.CREATIVITY,
                prompt_text=_render(
                    template,
                    genre=foreign.genre,
                    instruments=instruments,
                    melody=melody,
                    rhythm=rhythm,
                ),
                genre=foreign.genre,
                melody=melody,
                rhythm=rhythm,
                instruments=instruments,
                provenance=PROVENANCE[QueryType.CREATIVITY],
            )
        )
    return queries


def write_queries(path: str | Path, queries: Iterable[EvalQuery]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for query in queries:
            fh.write(json.dumps(query.to_json(), ensure_ascii=False) + "\n")


def read_queries(path: str | Path) -> list[EvalQuery]:
    """Read JSONL queries; hand-written files use the same record format."""
    queries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                queries.append(EvalQuery.from_json(json.loads(line)))
            except (json.JSONDecodeError, DataError, InvalidArgumentError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return queries
