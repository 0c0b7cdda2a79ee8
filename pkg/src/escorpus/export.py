"""Deterministic train/test splitting and fine-tuning data export.

An SFT example is one assistant turn: the context is every prior turn with
"User: " / "Assistant: " speaker tags joined by newlines, the target is the
assistant response, optionally prefixed with "[<Strategy Name>] " in the
strategies variant. Stripping that bracketed prefix reproduces the
no-strategies export byte for byte.
"""

import json
import math
import random
from collections.abc import Iterator
from dataclasses import dataclass

from .corpus import Corpus, Dialogue, Speaker
from .errors import BadRatios

USER_TAG = "User: "
ASSISTANT_TAG = "Assistant: "


@dataclass(frozen=True)
class SftExample:
    context: str
    target: str

    def to_json(self) -> str:
        return json.dumps(
            {"context": self.context, "target": self.target},
            ensure_ascii=False, separators=(", ", ": "),
        )


def _tagged(utt) -> str:
    tag = USER_TAG if utt.speaker is Speaker.USER else ASSISTANT_TAG
    return tag + utt.text


def iter_sft(corpus: Corpus, with_strategies: bool) -> Iterator[SftExample]:
    """One example per assistant utterance, in dialogue order then turn order."""
    for dialogue in corpus:
        yield from dialogue_examples(dialogue, with_strategies)


def dialogue_examples(dialogue: Dialogue, with_strategies: bool) -> Iterator[SftExample]:
    history: list[str] = []
    for utt in dialogue.content:
        if utt.speaker is Speaker.AI:
            target = utt.text
            if with_strategies:
                target = f"[{utt.strategy}] {target}"
            yield SftExample(context="\n".join(history), target=target)
        history.append(_tagged(utt))


def strip_strategy_prefix(target: str) -> str:
    """Inverse of the strategies variant's target prefixing."""
    if target.startswith("["):
        end = target.find("] ")
        if end > 0:
            return target[end + 2:]
    return target


def split(corpus: Corpus, train_ratio: float = 0.9, test_ratio: float = 0.1,
          rng_seed: int = 0) -> tuple[Corpus, Corpus]:
    """Dialogue-level split, stratified by scenario, deterministic per seed.

    Test counts are assigned per scenario by largest remainder so the global
    split is exact and each scenario's proportions track the corpus within
    rounding.
    """
    if train_ratio <= 0 or test_ratio <= 0:
        raise BadRatios("ratios must be positive")
    if abs(train_ratio + test_ratio - 1.0) > 1e-9:
        raise BadRatios(f"ratios must sum to 1, got {train_ratio + test_ratio}")

    by_scene: dict[str, list[str]] = {}
    for d in corpus:
        by_scene.setdefault(d.scene, []).append(d.id)

    rng = random.Random(rng_seed)
    total_test = round(len(corpus) * test_ratio)
    base: dict[str, int] = {}
    remainders: list[tuple[float, str]] = []
    for scene in sorted(by_scene):
        exact = len(by_scene[scene]) * test_ratio
        base[scene] = math.floor(exact)
        remainders.append((exact - base[scene], scene))
    short = total_test - sum(base.values())
    # hand the leftover slots to the largest remainders (ties by scene name)
    for _, scene in sorted(remainders, key=lambda t: (-t[0], t[1]))[:max(0, short)]:
        base[scene] += 1

    test_ids: set[str] = set()
    for scene in sorted(by_scene):
        ids = list(by_scene[scene])
        rng.shuffle(ids)
        take = min(base[scene], len(ids))
        test_ids.update(ids[:take])

    train = tuple(d for d in corpus if d.id not in test_ids)
    test = tuple(d for d in corpus if d.id in test_ids)
    return Corpus(train), Corpus(test)
