"""Dialogue data model and the line-delimited corpus format.

One dialogue per line, each line a JSON record:

    {"scene": ..., "description": ..., "content": [
        {"User": "..."},
        {"AI Strategy": "Emotional Validation", "AI": "..."}], "meta": {...}}

``scene``/``description``/``content`` and the per-turn keys ``User`` / ``AI`` /
``"AI Strategy"`` are the canonical interchange fields. ``meta`` is optional
and carries id/provenance/iteration so that serialize->parse is lossless;
third-party files without it load fine with derived ids.
"""

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import (
    ConsecutiveSpeakerWarning,
    CorpusLoadError,
    InvariantViolation,
    MalformedRecord,
    RoleError,
)
from .registry import STRATEGIES, StrategyRegistry

SCHEMA_FIELDS = ("scene", "description", "content")
USER_KEY = "User"
AI_KEY = "AI"
STRATEGY_KEY = "AI Strategy"
META_KEY = "meta"


class Speaker(str, Enum):
    USER = "User"
    AI = "AI"


class Provenance(str, Enum):
    SEED = "Seed"
    GENERATED = "Generated"
    EDITED = "Edited"


@dataclass(frozen=True)
class Utterance:
    speaker: Speaker
    text: str
    strategy: str | None = None  # canonical full strategy name for AI turns


@dataclass(frozen=True)
class Dialogue:
    id: str
    scene: str
    description: str
    content: tuple[Utterance, ...]
    provenance: Provenance = Provenance.SEED
    iteration: int = 0

    @property
    def n_utterances(self) -> int:
        return len(self.content)

    def ai_strategies(self) -> list[str]:
        return [u.strategy for u in self.content if u.speaker is Speaker.AI and u.strategy]

    def all_text(self) -> str:
        return " ".join(u.text for u in self.content)

    def check_invariants(self, strategies: StrategyRegistry = STRATEGIES) -> None:
        """Raise InvariantViolation unless this dialogue is well formed."""
        if not self.content:
            raise InvariantViolation("dialogue has no content")
        if len(self.content) < 2:
            raise InvariantViolation("dialogue must have at least 2 utterances")
        if self.content[0].speaker is not Speaker.USER:
            raise InvariantViolation("first utterance must come from the User")
        if self.iteration < 0:
            raise InvariantViolation("iteration must be non-negative")
        for i, utt in enumerate(self.content):
            if not utt.text:
                raise InvariantViolation(f"utterance {i} has empty text")
            if utt.speaker is Speaker.AI:
                if not utt.strategy:
                    raise InvariantViolation(f"AI utterance {i} is missing a strategy")
                strategy = strategies.resolve(utt.strategy)
                if strategy.name != utt.strategy:
                    raise InvariantViolation(
                        f"utterance {i} strategy must use the canonical name "
                        f"{strategy.name!r}, got {utt.strategy!r}"
                    )
            elif utt.strategy is not None:
                raise InvariantViolation(f"User utterance {i} must not carry a strategy")


def content_hash(scene: str, description: str, content: tuple[Utterance, ...]) -> str:
    """Stable id for a dialogue derived from its visible content."""
    h = hashlib.sha256()
    h.update(scene.encode("utf-8"))
    h.update(b"\x1f")
    h.update(description.encode("utf-8"))
    for utt in content:
        h.update(b"\x1e")
        h.update(utt.speaker.value.encode("utf-8"))
        h.update(b"\x1f")
        h.update((utt.strategy or "").encode("utf-8"))
        h.update(b"\x1f")
        h.update(utt.text.encode("utf-8"))
    return h.hexdigest()[:16]


def _require_str(record: dict, key: str) -> str:
    value = record.get(key)
    if not isinstance(value, str):
        raise MalformedRecord(f"field {key!r} missing or not a string")
    return value


def parse_dialogue(json_text: str, strategies: StrategyRegistry = STRATEGIES) -> Dialogue:
    """Parse one serialized record into a Dialogue.

    Strategy labels are resolved against the registry; full names and
    abbreviations are both accepted, and the canonical full name is stored.
    """
    try:
        record = json.loads(json_text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedRecord(f"record is not valid JSON: {exc}") from exc
    if not isinstance(record, dict):
        raise MalformedRecord("record must be a JSON object")
    return dialogue_from_record(record, strategies)


def dialogue_from_record(record: dict, strategies: StrategyRegistry = STRATEGIES) -> Dialogue:
    """Build a Dialogue from an already-decoded record dict."""
    scene = _require_str(record, "scene")
    description = _require_str(record, "description")
    raw_content = record.get("content")
    if not isinstance(raw_content, list) or not raw_content:
        raise MalformedRecord("field 'content' missing, not a list, or empty")

    utterances: list[Utterance] = []
    for i, entry in enumerate(raw_content):
        if not isinstance(entry, dict):
            raise MalformedRecord(f"content[{i}] is not an object")
        if USER_KEY in entry and AI_KEY in entry:
            raise MalformedRecord(f"content[{i}] names both speakers")
        if USER_KEY in entry:
            text = entry[USER_KEY]
            if not isinstance(text, str) or not text:
                raise MalformedRecord(f"content[{i}] User text empty or not a string")
            utterances.append(Utterance(Speaker.USER, text))
        elif AI_KEY in entry:
            text = entry[AI_KEY]
            if not isinstance(text, str) or not text:
                raise MalformedRecord(f"content[{i}] AI text empty or not a string")
            if STRATEGY_KEY not in entry:
                raise MalformedRecord(f"content[{i}] AI turn lacks {STRATEGY_KEY!r}")
            label = entry[STRATEGY_KEY]
            if not isinstance(label, str):
                raise MalformedRecord(f"content[{i}] {STRATEGY_KEY!r} is not a string")
            strategy = strategies.resolve(label)  # raises UnknownStrategy
            utterances.append(Utterance(Speaker.AI, text, strategy.name))
        else:
            raise MalformedRecord(f"content[{i}] has neither 'User' nor 'AI' key")

    if utterances[0].speaker is not Speaker.USER:
        raise RoleError("first utterance must come from the User")
    if len(utterances) < 2:
        raise MalformedRecord("dialogue must have at least 2 utterances")
    for i in range(1, len(utterances)):
        if utterances[i].speaker is utterances[i - 1].speaker:
            warnings.warn(
                f"consecutive {utterances[i].speaker.value} turns at content[{i}]",
                ConsecutiveSpeakerWarning,
                stacklevel=2,
            )

    content = tuple(utterances)
    meta = record.get(META_KEY) or {}
    if not isinstance(meta, dict):
        raise MalformedRecord("field 'meta' must be an object")
    dialogue_id = meta.get("id") or content_hash(scene, description, content)
    provenance = Provenance(meta.get("provenance", Provenance.SEED.value))
    iteration = meta.get("iteration", 0)
    if not isinstance(iteration, int) or iteration < 0:
        raise MalformedRecord("meta.iteration must be a non-negative integer")
    return Dialogue(
        id=dialogue_id,
        scene=scene,
        description=description,
        content=content,
        provenance=provenance,
        iteration=iteration,
    )


def dialogue_to_record(d: Dialogue) -> dict:
    content = []
    for utt in d.content:
        if utt.speaker is Speaker.USER:
            content.append({USER_KEY: utt.text})
        else:
            content.append({STRATEGY_KEY: utt.strategy, AI_KEY: utt.text})
    return {
        "scene": d.scene,
        "description": d.description,
        "content": content,
        META_KEY: {
            "id": d.id,
            "provenance": d.provenance.value,
            "iteration": d.iteration,
        },
    }


def serialize_dialogue(d: Dialogue, strategies: StrategyRegistry = STRATEGIES) -> str:
    """Canonical single-line serialization; byte-identical for equal inputs."""
    d.check_invariants(strategies)
    return json.dumps(dialogue_to_record(d), ensure_ascii=False, separators=(", ", ": "))


@dataclass
class Corpus:
    dialogues: tuple[Dialogue, ...] = ()
    source_path: str | None = None
    _by_id: dict[str, Dialogue] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id: dict[str, Dialogue] = {}
        for d in self.dialogues:
            if d.id in by_id:
                raise InvariantViolation(f"duplicate dialogue id: {d.id!r}")
            by_id[d.id] = d
        self._by_id = by_id

    def __len__(self) -> int:
        return len(self.dialogues)

    def __iter__(self):
        return iter(self.dialogues)

    def __contains__(self, dialogue_id: str) -> bool:
        return dialogue_id in self._by_id

    def get(self, dialogue_id: str) -> Dialogue | None:
        return self._by_id.get(dialogue_id)

    def ids(self) -> list[str]:
        return [d.id for d in self.dialogues]

    def with_dialogue(self, d: Dialogue) -> "Corpus":
        return Corpus(self.dialogues + (d,), self.source_path)


def load_corpus(
    path: str | Path,
    strategies: StrategyRegistry = STRATEGIES,
    max_error_ratio: float = 0.0,
) -> Corpus:
    """Load a line-delimited corpus file, collecting per-line errors.

    Fails with CorpusLoadError when more than max_error_ratio of the non-blank
    lines are bad (default: any bad line fails the load).
    """
    path = Path(path)
    dialogues: list[Dialogue] = []
    seen_ids: set[str] = set()
    line_errors: list[tuple[int, Exception]] = []
    total = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            total += 1
            try:
                d = parse_dialogue(line, strategies)
                if d.id in seen_ids:
                    raise MalformedRecord(f"duplicate dialogue id: {d.id!r}")
            except Exception as exc:  # collected, reported with line numbers
                line_errors.append((lineno, exc))
            else:
                seen_ids.add(d.id)
                dialogues.append(d)
    if total and len(line_errors) / total > max_error_ratio:
        preview = "; ".join(f"line {ln}: {err}" for ln, err in line_errors[:5])
        raise CorpusLoadError(
            f"{len(line_errors)}/{total} lines failed to parse ({preview})", line_errors
        )
    return Corpus(tuple(dialogues), source_path=str(path))


def save_corpus(corpus: Corpus, path: str | Path, strategies: StrategyRegistry = STRATEGIES) -> None:
    """Write one dialogue per line; output is deterministic for equal corpora."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for d in corpus:
            fh.write(serialize_dialogue(d, strategies))
            fh.write("\n")


def relabel(d: Dialogue, **changes) -> Dialogue:
    """Convenience wrapper over dataclasses.replace for immutable edits."""
    return replace(d, **changes)
