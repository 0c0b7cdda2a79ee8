"""Seeded review service for the UI tests.

Queues five distinct pending dialogues (four Academic Stress, one Career
Transitions) and serves the review API on the port given as argv[1].
"""

import sys

import uvicorn

from escorpus.corpus import Dialogue, Speaker, Utterance, content_hash
from escorpus.loop import CurationStore
from escorpus.registry import default_scenarios
from escorpus.review_api import create_app
from escorpus.validation import ValidationPolicy

SCRIPTS = [
    (
        "Academic Stress",
        "Student juggling three final projects in one week.",
        [
            "My three final projects are all due the same week and I cannot breathe.",
            "That sounds like an enormous amount of pressure landing all at once.",
            "Every time I open my laptop I freeze and scroll instead of working.",
            "Freezing under pressure is a really common reaction, not a personal failure.",
            "Maybe. I just need some way to actually start one of them.",
            "Could we pick the smallest project and sketch a twenty minute first step?",
        ],
    ),
    (
        "Academic Stress",
        "Graduate student worried their thesis draft is behind schedule.",
        [
            "My thesis advisor expected a draft chapter last month and I have nothing.",
            "It sounds like the missed deadline is weighing on you heavily.",
            "I keep rewriting the introduction because none of it feels good enough.",
            "Wanting it perfect shows how much you care, even when it stalls you.",
            "Caring is not producing pages though, and the guilt compounds daily.",
            "What if you sent a rough outline first so the advisor sees momentum?",
        ],
    ),
    (
        "Academic Stress",
        "Undergraduate anxious about a cumulative calculus exam.",
        [
            "The calculus final covers the entire year and half of it is a blur.",
            "A cumulative exam after a hard year would worry most people too.",
            "Practice tests keep proving how much I have forgotten since autumn.",
            "Those gaps are information about where to focus, not proof you will fail.",
            "There are only nine days left, so the focus has to be ruthless.",
            "Nine days is enough for two passes over the weakest four topics.",
        ],
    ),
    (
        "Academic Stress",
        "Scholarship student afraid one bad term will end their funding.",
        [
            "If my average drops below the cutoff this term I lose the scholarship.",
            "Carrying your funding on every grade is a heavy load to hold.",
            "I lie awake running the numbers for each course over and over.",
            "Losing sleep to arithmetic loops sounds truly exhausting to live with.",
            "Exhausting is the word, and tired studying barely sticks anyway.",
            "Would a fixed nightly shutdown hour plus one morning review block help?",
        ],
    ),
    (
        "Career Transitions",
        "Accountant considering a move into software development.",
        [
            "After nine years in accounting I want to switch into software work.",
            "A career change after nine years takes real courage to even consider.",
            "Starting over as a junior at my age feels embarrassing somehow.",
            "Plenty of people retrain mid career and bring rare domain strengths with them.",
            "My ledger automation scripts are the only programming I have ever done.",
            "Those scripts are already evidence; a small public portfolio could grow from them.",
        ],
    ),
]

STRATEGY_BY_TURN = [
    "Emotional Validation",
    "Normalize Experiences",
    "Collaborative Planning",
]


def fixture_dialogue(scene: str, description: str, lines: list[str]) -> Dialogue:
    content = []
    for k, line in enumerate(lines):
        if k % 2 == 0:
            content.append(Utterance(Speaker.USER, line))
        else:
            content.append(Utterance(Speaker.AI, line, STRATEGY_BY_TURN[k // 2]))
    content = tuple(content)
    return Dialogue(content_hash(scene, description, content), scene, description, content)


def build_store() -> CurationStore:
    store = CurationStore(
        None,
        scenarios=default_scenarios(),
        policy=ValidationPolicy(min_turns=6, dup_threshold=0.8, max_correctable=3),
    )
    for i, (scene, description, lines) in enumerate(SCRIPTS):
        dialogue = fixture_dialogue(scene, description, lines)
        issues = []
        if i == 0:
            issues = [{
                "code": "strategy_label", "severity": "Correctable",
                "message": "label 'emotional validation' is not canonical; "
                           "suggest 'Emotional Validation'",
                "location": "content[1]",
            }]
        store.enqueue_for_review(dialogue, scene, issues, duplicate_score=0.05)
    return store


if __name__ == "__main__":
    port = int(sys.argv[1]) if len(sys.argv) > 1 else 8731
    uvicorn.run(create_app(build_store()), host="127.0.0.1", port=port, log_level="warning")
