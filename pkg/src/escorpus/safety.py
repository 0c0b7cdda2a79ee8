"""Toxicity auditing across six attributes.

Scoring goes through an external comment-analysis service in production and
through a deterministic lexicon stub offline; both return the same six
attributes in [0, 1] (lower is safer). Corpus audits average over all
utterances from both speakers, keep the worst utterance per attribute for
triage, cache by text hash, and can resume from a progress file.
"""

import hashlib
import json
import threading
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, Speaker
from .errors import EmptyCorpus, EmptyText, ServiceError
from .gateway import RateLimiter
from .textnorm import metric_tokens

ATTRIBUTES = (
    "toxicity",
    "severe_toxicity",
    "identity_attack",
    "insult",
    "profanity",
    "threat",
)

_WIRE_ATTRIBUTES = {
    "toxicity": "TOXICITY",
    "severe_toxicity": "SEVERE_TOXICITY",
    "identity_attack": "IDENTITY_ATTACK",
    "insult": "INSULT",
    "profanity": "PROFANITY",
    "threat": "THREAT",
}


@dataclass(frozen=True)
class ToxicityScores:
    toxicity: float
    severe_toxicity: float
    identity_attack: float
    insult: float
    profanity: float
    threat: float

    def __post_init__(self):
        for name in ATTRIBUTES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in ATTRIBUTES}

    @classmethod
    def from_dict(cls, data: dict[str, float]) -> "ToxicityScores":
        return cls(**{name: float(data[name]) for name in ATTRIBUTES})


@dataclass(frozen=True)
class ScorerConfig:
    endpoint: str = "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze"
    api_key_env: str = "ESCORPUS_TOXICITY_KEY"
    rate_limit_per_min: float = 60.0
    max_attempts: int = 3
    base_backoff: float = 0.5


class HttpToxicityScorer:
    """Client for a comment-analysis endpoint with retry and rate limiting."""

    def __init__(self, config: ScorerConfig,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self._sleep = sleep
        self._limiter = RateLimiter(config.rate_limit_per_min, sleep=sleep)

    def score(self, text: str) -> ToxicityScores:
        import os

        import httpx

        if not text.strip():
            raise EmptyText("cannot score empty text")
        payload = {
            "comment": {"text": text},
            "requestedAttributes": {wire: {} for wire in _WIRE_ATTRIBUTES.values()},
            "doNotStore": True,
        }
        key = os.environ.get(self.config.api_key_env, "")
        url = self.config.endpoint + (f"?key={key}" if key else "")
        last_error = "unknown"
        for attempt in range(1, self.config.max_attempts + 1):
            self._limiter.acquire()
            try:
                response = httpx.post(url, json=payload, timeout=60.0)
            except httpx.HTTPError as exc:
                last_error = str(exc)
            else:
                if response.status_code == 200:
                    return self._parse(response.json())
                last_error = f"HTTP {response.status_code}"
                if response.status_code not in (408, 429, 500, 502, 503, 504):
                    break
            if attempt < self.config.max_attempts:
                self._sleep(self.config.base_backoff * (2 ** (attempt - 1)))
        raise ServiceError(f"toxicity service failed after retries: {last_error}")

    @staticmethod
    def _parse(body: dict) -> ToxicityScores:
        try:
            scores = {
                name: body["attributeScores"][wire]["summaryScore"]["value"]
                for name, wire in _WIRE_ATTRIBUTES.items()
            }
        except (KeyError, TypeError) as exc:
            raise ServiceError(f"malformed service response: {exc}") from exc
        return ToxicityScores.from_dict(scores)


# Mild wording on purpose; enough for the stub to rank texts deterministically.
_STUB_LEXICONS: dict[str, tuple[str, ...]] = {
    "profanity": ("damn", "hell", "crap", "freaking", "bloody"),
    "insult": ("stupid", "idiot", "loser", "pathetic", "worthless", "dumb"),
    "threat": ("hurt", "destroy", "kill", "attack", "punch"),
    "identity_attack": ("hate", "disgusting", "inferior", "subhuman"),
    "severe_toxicity": ("kill", "die", "destroy"),
}

_STUB_BASE = {
    "toxicity": 0.02,
    "severe_toxicity": 0.005,
    "identity_attack": 0.01,
    "insult": 0.01,
    "profanity": 0.01,
    "threat": 0.01,
}

_STUB_STEP = 0.15


class LexiconScorer:
    """Deterministic offline stub: base rate plus a step per lexicon hit."""

    def score(self, text: str) -> ToxicityScores:
        if not text.strip():
            raise EmptyText("cannot score empty text")
        tokens = metric_tokens(text)
        counts = {
            attr: sum(1 for tok in tokens if tok in _STUB_LEXICONS.get(attr, ()))
            for attr in ATTRIBUTES
        }
        scores = {
            attr: min(1.0, _STUB_BASE[attr] + _STUB_STEP * counts[attr])
            for attr in ATTRIBUTES
        }
        # umbrella attribute accumulates hits from every specific lexicon
        total_hits = sum(counts.values())
        scores["toxicity"] = min(1.0, _STUB_BASE["toxicity"] + _STUB_STEP * total_hits)
        return ToxicityScores.from_dict(scores)


class ConstantScorer:
    """Every attribute scores the same constant; handy in tests."""

    def __init__(self, value: float):
        self._scores = ToxicityScores.from_dict({a: value for a in ATTRIBUTES})

    def score(self, text: str) -> ToxicityScores:
        if not text.strip():
            raise EmptyText("cannot score empty text")
        return self._scores


class CachedScorer:
    """Avoids re-billing identical texts; safe for concurrent readers."""

    def __init__(self, inner):
        self._inner = inner
        self._cache: dict[str, ToxicityScores] = {}
        self._lock = threading.Lock()

    def score(self, text: str) -> ToxicityScores:
        key = hashlib.sha256(text.encode("utf-8")).hexdigest()
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        scores = self._inner.score(text)
        with self._lock:
            self._cache[key] = scores
        return scores


@dataclass
class WorstUtterance:
    score: float
    dialogue_id: str
    turn_index: int
    excerpt: str


@dataclass
class ToxicityAudit:
    n_utterances: int
    means: dict[str, float]
    maxima: dict[str, WorstUtterance]
    mins: dict[str, float] = field(default_factory=dict)
    maxs: dict[str, float] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "n_utterances": self.n_utterances,
            "means": self.means,
            "maxima": {
                attr: {
                    "score": worst.score,
                    "dialogue_id": worst.dialogue_id,
                    "turn_index": worst.turn_index,
                    "excerpt": worst.excerpt,
                }
                for attr, worst in self.maxima.items()
            },
        }


def audit_corpus(
    corpus: Corpus,
    scorer,
    progress_path: str | Path | None = None,
    speaker: Speaker | None = None,
) -> ToxicityAudit:
    """Score every utterance (optionally one speaker) and aggregate.

    With a progress file, already-scored utterances are replayed from disk and
    new scores are appended as they arrive, so an interrupted audit resumes
    where it stopped.
    """
    if len(corpus) == 0:
        raise EmptyCorpus("cannot audit an empty corpus")

    done: dict[str, dict[str, float]] = {}
    progress_file = None
    if progress_path is not None:
        progress_path = Path(progress_path)
        if progress_path.exists():
            for line in progress_path.read_text("utf-8").splitlines():
                if line.strip():
                    entry = json.loads(line)
                    done[entry["key"]] = entry["scores"]
        progress_file = progress_path.open("a", encoding="utf-8")

    sums = {attr: 0.0 for attr in ATTRIBUTES}
    mins = {attr: 1.0 for attr in ATTRIBUTES}
    maxs = {attr: 0.0 for attr in ATTRIBUTES}
    maxima: dict[str, WorstUtterance] = {}
    count = 0
    try:
        for d in corpus:
            for idx, utt in enumerate(d.content):
                if speaker is not None and utt.speaker is not speaker:
                    continue
                key = f"{d.id}:{idx}"
                if key in done:
                    scores = done[key]
                else:
                    try:
                        scores = scorer.score(utt.text).as_dict()
                    except EmptyText:
                        raise
                    except Exception as exc:
                        raise ServiceError(
                            f"scoring failed at dialogue {d.id} turn {idx}: {exc}"
                        ) from exc
                    if progress_file is not None:
                        progress_file.write(json.dumps({"key": key, "scores": scores}))
                        progress_file.write("\n")
                        progress_file.flush()
                count += 1
                for attr in ATTRIBUTES:
                    value = scores[attr]
                    sums[attr] += value
                    mins[attr] = min(mins[attr], value)
                    maxs[attr] = max(maxs[attr], value)
                    worst = maxima.get(attr)
                    if worst is None or value > worst.score:
                        maxima[attr] = WorstUtterance(value, d.id, idx, utt.text[:120])
    finally:
        if progress_file is not None:
            progress_file.close()
    if count == 0:
        raise EmptyCorpus("no utterances matched the audit filter")
    means = {attr: sums[attr] / count for attr in ATTRIBUTES}
    return ToxicityAudit(count, means, maxima, mins, maxs)
