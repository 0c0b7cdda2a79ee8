"""Shared fixtures: random valid dialogues, canned corpora, and a summary
hook that prints one pass/fail line per acceptance criterion."""

import random

import pytest

from escorpus.corpus import Corpus, Dialogue, Provenance, Speaker, Utterance, content_hash
from escorpus.registry import STRATEGIES, default_scenarios

_WORDS = (
    "really overwhelmed lately with work and everything going on at home "
    "i understand how hard that must feel for you right now take a breath "
    "sounds like a lot to carry have you tried talking to someone about it "
    "thanks that helps a little maybe i could start small tomorrow morning "
    "you deserve support and rest remember progress is not always linear"
).split()

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def make_text(rng: random.Random, min_words: int = 3, max_words: int = 14) -> str:
    n = rng.randint(min_words, max_words)
    return " ".join(rng.choice(_WORDS) for _ in range(n))


def make_dialogue(
    rng: random.Random,
    scene: str | None = None,
    n_turns: int | None = None,
    provenance: Provenance = Provenance.SEED,
    iteration: int = 0,
    salt: str = "",
) -> Dialogue:
    """Random well-formed dialogue: starts with User, strictly alternates."""
    scenarios = default_scenarios()
    if scene is None:
        scene = rng.choice(scenarios.names)
    if n_turns is None:
        n_turns = rng.randint(2, 18)
    strategy_names = STRATEGIES.names
    content = []
    for k in range(n_turns):
        text = make_text(rng)
        if salt and k == 0:
            text = f"{text} {salt}"
        if k % 2 == 0:
            content.append(Utterance(Speaker.USER, text))
        else:
            content.append(Utterance(Speaker.AI, text, rng.choice(strategy_names)))
    content = tuple(content)
    description = make_text(rng, 5, 12)
    return Dialogue(
        id=content_hash(scene, description, content),
        scene=scene,
        description=description,
        content=content,
        provenance=provenance,
        iteration=iteration,
    )


def make_corpus(rng: random.Random, n: int, scenes: list[str] | None = None) -> Corpus:
    dialogues = []
    seen = set()
    i = 0
    while len(dialogues) < n:
        scene = scenes[len(dialogues) % len(scenes)] if scenes else None
        d = make_dialogue(rng, scene=scene, salt=f"s{i}")
        i += 1
        if d.id in seen:
            continue
        seen.add(d.id)
        dialogues.append(d)
    return Corpus(tuple(dialogues))


@pytest.fixture
def rng():
    return random.Random(20240817)


@pytest.fixture
def small_corpus(rng):
    return make_corpus(rng, 12)


def record_acceptance(name: str, outcome: str) -> None:
    _ACCEPTANCE_RESULTS.append((name, outcome))


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        record_acceptance(name, report.outcome.upper())
    elif report.when == "setup" and report.skipped:
        record_acceptance(name, "SKIPPED")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{outcome:<8s} {name}")
