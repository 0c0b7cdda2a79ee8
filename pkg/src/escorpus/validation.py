"""Triage of raw generations: Accept, NeedsReview, or Reject.

Checks run in a fixed order: parse, schema (first speaker, strategy labels,
minimum turn count, expected scene), then near-duplicate scoring against the
corpus snapshot. Fatal issues reject outright; correctable ones queue the
dialogue for human review, carrying a suggested fix where we have one.
"""

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .corpus import (
    AI_KEY,
    STRATEGY_KEY,
    USER_KEY,
    Corpus,
    Dialogue,
    Provenance,
    Speaker,
    Utterance,
    content_hash,
)
from .errors import UnknownStrategy
from .registry import SCENARIOS, STRATEGIES, ScenarioRegistry, StrategyRegistry
from .textnorm import metric_tokens, trigram_counts


class Verdict(str, Enum):
    ACCEPT = "Accept"
    NEEDS_REVIEW = "NeedsReview"
    REJECT = "Reject"


class Severity(str, Enum):
    FATAL = "Fatal"
    CORRECTABLE = "Correctable"


@dataclass(frozen=True)
class Issue:
    code: str
    severity: Severity
    message: str
    location: str = "record"


@dataclass(frozen=True)
class ValidationPolicy:
    min_turns: int = 6
    dup_threshold: float = 0.8
    max_correctable: int = 3

    @classmethod
    def from_file(cls, path: str | Path) -> "ValidationPolicy":
        path = Path(path)
        text = path.read_text("utf-8")
        if path.suffix in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
        known = {k: data[k] for k in ("min_turns", "dup_threshold", "max_correctable") if k in data}
        return cls(**known)


@dataclass
class ValidationReport:
    verdict: Verdict
    issues: list[Issue] = field(default_factory=list)
    parsed: Dialogue | None = None
    duplicate_score: float = 0.0
    duplicate_of: str | None = None

    def fatal_issues(self) -> list[Issue]:
        return [i for i in self.issues if i.severity is Severity.FATAL]

    def correctable_issues(self) -> list[Issue]:
        return [i for i in self.issues if i.severity is Severity.CORRECTABLE]


def _dialogue_tokens(d: Dialogue) -> list[str]:
    return metric_tokens(d.all_text())


def near_duplicate_score(a: Dialogue, b: Dialogue) -> float:
    """Jaccard similarity of the two dialogues' trigram multisets, in [0, 1]."""
    return _jaccard(_dialogue_tokens(a), _dialogue_tokens(b))


def _jaccard(tokens_a: list[str], tokens_b: list[str]) -> float:
    if len(tokens_a) < 3 or len(tokens_b) < 3:
        # no trigram on at least one side; identical streams still count as dupes
        return 1.0 if tokens_a == tokens_b else 0.0
    ca, cb = trigram_counts(tokens_a), trigram_counts(tokens_b)
    inter = sum((ca & cb).values())
    union = sum((ca | cb).values())
    return inter / union if union else 0.0


class DedupIndex:
    """Precomputed trigram multisets for one immutable corpus snapshot."""

    def __init__(self, corpus: Corpus):
        self._entries: list[tuple[str, list[str], Counter]] = []
        for d in corpus:
            toks = _dialogue_tokens(d)
            self._entries.append((d.id, toks, trigram_counts(toks)))

    def score(self, dialogue: Dialogue) -> tuple[float, str | None]:
        """Highest similarity against the snapshot and the matching id."""
        toks = _dialogue_tokens(dialogue)
        best, best_id = 0.0, None
        counts = trigram_counts(toks) if len(toks) >= 3 else None
        for other_id, other_toks, other_counts in self._entries:
            if counts is None or len(other_toks) < 3:
                score = 1.0 if toks == other_toks else 0.0
            else:
                inter = sum((counts & other_counts).values())
                union = sum((counts | other_counts).values())
                score = inter / union if union else 0.0
            if score > best:
                best, best_id = score, other_id
                if best == 1.0:
                    break
        return best, best_id


def _extract_record(raw_text: str) -> dict | None:
    """Decode the record, tolerating prose or fences around the JSON object."""
    for candidate in (raw_text, _first_balanced_object(raw_text)):
        if candidate is None:
            continue
        try:
            record = json.loads(candidate)
        except (json.JSONDecodeError, TypeError):
            continue
        if isinstance(record, dict):
            return record
    return None


def _first_balanced_object(text: str) -> str | None:
    start = text.find("{")
    if start < 0:
        return None
    depth = 0
    in_string = False
    escape = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start:i + 1]
    return None


def validate(
    raw_text: str,
    expected_scenario: str,
    against: Corpus | DedupIndex,
    policy: ValidationPolicy = ValidationPolicy(),
    strategies: StrategyRegistry = STRATEGIES,
    scenarios: ScenarioRegistry = SCENARIOS,
) -> ValidationReport:
    """Classify one raw generation. All failures land in the report."""
    issues: list[Issue] = []
    record = _extract_record(raw_text)
    if record is None:
        issues.append(Issue("unparseable", Severity.FATAL, "no JSON object found in output"))
        return ValidationReport(Verdict.REJECT, issues)

    scene = record.get("scene")
    description = record.get("description")
    raw_content = record.get("content")
    if not isinstance(scene, str) or not scene:
        issues.append(Issue("missing_scene", Severity.FATAL, "field 'scene' missing or empty"))
    if not isinstance(description, str):
        issues.append(Issue(
            "missing_description", Severity.FATAL, "field 'description' missing or not a string"
        ))
    if not isinstance(raw_content, list) or not raw_content:
        issues.append(Issue(
            "missing_content", Severity.FATAL, "field 'content' missing, not a list, or empty"
        ))
    if any(i.severity is Severity.FATAL for i in issues):
        return ValidationReport(Verdict.REJECT, issues)

    utterances: list[Utterance] = []
    buildable = True
    for i, entry in enumerate(raw_content):
        loc = f"content[{i}]"
        if not isinstance(entry, dict):
            issues.append(Issue("bad_turn", Severity.FATAL, "turn is not an object", loc))
            buildable = False
            continue
        if USER_KEY in entry:
            text = entry[USER_KEY]
            if not isinstance(text, str) or not text.strip():
                issues.append(Issue("empty_text", Severity.FATAL, "User text empty", loc))
                buildable = False
                continue
            utterances.append(Utterance(Speaker.USER, text))
        elif AI_KEY in entry:
            text = entry[AI_KEY]
            if not isinstance(text, str) or not text.strip():
                issues.append(Issue("empty_text", Severity.FATAL, "AI text empty", loc))
                buildable = False
                continue
            label = entry.get(STRATEGY_KEY)
            strategy = None
            if isinstance(label, str):
                try:
                    strategy = strategies.resolve(label)
                except UnknownStrategy:
                    strategy = strategies.fuzzy_resolve(label)
                    if strategy is not None:
                        issues.append(Issue(
                            "strategy_label", Severity.CORRECTABLE,
                            f"label {label!r} is not canonical; suggest {strategy.name!r}", loc,
                        ))
            if strategy is None:
                issues.append(Issue(
                    "unknown_strategy", Severity.FATAL,
                    f"AI turn strategy {label!r} does not resolve", loc,
                ))
                buildable = False
                continue
            utterances.append(Utterance(Speaker.AI, text, strategy.name))
        else:
            issues.append(Issue(
                "bad_turn", Severity.FATAL, "turn has neither 'User' nor 'AI' key", loc
            ))
            buildable = False

    if utterances:
        if utterances[0].speaker is not Speaker.USER:
            issues.append(Issue(
                "first_speaker", Severity.FATAL, "first utterance is not from the User", "content[0]"
            ))
            buildable = False
        for i in range(1, len(utterances)):
            if utterances[i].speaker is utterances[i - 1].speaker:
                issues.append(Issue(
                    "consecutive_speaker", Severity.CORRECTABLE,
                    f"two {utterances[i].speaker.value} turns in a row", f"content[{i}]",
                ))

    if len(utterances) < max(2, policy.min_turns):
        issues.append(Issue(
            "short_dialogue", Severity.FATAL,
            f"{len(utterances)} turns, minimum is {policy.min_turns}",
        ))

    if isinstance(scene, str) and scene != expected_scenario:
        issues.append(Issue(
            "scene_mismatch", Severity.CORRECTABLE,
            f"scene {scene!r} does not match expected {expected_scenario!r}",
        ))

    parsed: Dialogue | None = None
    if buildable and utterances and utterances[0].speaker is Speaker.USER and len(utterances) >= 2:
        content = tuple(utterances)
        parsed = Dialogue(
            id=content_hash(scene, description, content),
            scene=scene,
            description=description,
            content=content,
            provenance=Provenance.GENERATED,
        )

    duplicate_score, duplicate_of = 0.0, None
    if parsed is not None:
        index = against if isinstance(against, DedupIndex) else DedupIndex(against)
        duplicate_score, duplicate_of = index.score(parsed)
        if duplicate_score >= policy.dup_threshold:
            issues.append(Issue(
                "duplicate", Severity.FATAL,
                f"near-duplicate of {duplicate_of} (score {duplicate_score:.3f})",
            ))

    correctable = [i for i in issues if i.severity is Severity.CORRECTABLE]
    if len(correctable) > policy.max_correctable:
        issues.append(Issue(
            "too_many_issues", Severity.FATAL,
            f"{len(correctable)} correctable issues exceed limit {policy.max_correctable}",
        ))

    if any(i.severity is Severity.FATAL for i in issues):
        verdict = Verdict.REJECT
    elif issues:
        verdict = Verdict.NEEDS_REVIEW
    else:
        verdict = Verdict.ACCEPT
    return ValidationReport(verdict, issues, parsed, duplicate_score, duplicate_of)
