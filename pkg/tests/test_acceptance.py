"""Acceptance criteria, one test per criterion.

The released-data reproduction runs only when a released corpus file is
supplied via ESCORPUS_RELEASED_CORPUS (JSONL, or a JSON array of records);
otherwise it skips with a visible notice. Everything else is self-contained.
"""

import json
import os
import random
import time
from pathlib import Path

import pytest

from escorpus.analysis import (
    corpus_stats,
    fleiss_kappa,
    phase_distribution,
    phase_points,
    transition_stats,
)
from escorpus.corpus import (
    Corpus,
    Speaker,
    dialogue_from_record,
    parse_dialogue,
    serialize_dialogue,
)
from escorpus.errors import MalformedRecord, RoleError, UnknownStrategy
from escorpus.export import iter_sft, strip_strategy_prefix
from escorpus.gateway import ChatGateway, GatewayConfig, RetryPolicy
from escorpus.loop import CurationStore, LoopConfig, replay_events, run_iteration
from escorpus.metrics import bleu_n, meteor, rouge_l, vector_extrema
from escorpus.registry import default_scenarios
from escorpus.safety import ATTRIBUTES, LexiconScorer, audit_corpus
from escorpus.validation import ValidationPolicy

from conftest import make_corpus, make_dialogue
from test_loop import ScenarioResponder
from test_metrics import oracle_meteor, oracle_rouge_f, random_seq, table_from


def test_corpus_round_trip_1000():
    start = time.monotonic()
    rng = random.Random(1234)
    seen = set()
    n = 0
    while n < 1000:
        d = make_dialogue(rng, salt=f"rt{n}")
        if d.id in seen:
            continue
        seen.add(d.id)
        n += 1
        first = serialize_dialogue(d)
        second = serialize_dialogue(parse_dialogue(first))
        assert first.encode("utf-8") == second.encode("utf-8")

    base = {
        "scene": "Academic Stress",
        "description": "x",
        "content": [{"User": "hi"}, {"AI Strategy": "Emotional Validation", "AI": "hello"}],
    }
    missing_strategy = json.loads(json.dumps(base))
    del missing_strategy["content"][1]["AI Strategy"]
    with pytest.raises(MalformedRecord):
        parse_dialogue(json.dumps(missing_strategy))

    bad_speaker = json.loads(json.dumps(base))
    bad_speaker["content"][0] = {"Operator": "hi"}
    with pytest.raises(MalformedRecord):
        parse_dialogue(json.dumps(bad_speaker))

    empty_text = json.loads(json.dumps(base))
    empty_text["content"][0] = {"User": ""}
    with pytest.raises(MalformedRecord):
        parse_dialogue(json.dumps(empty_text))

    unknown_label = json.loads(json.dumps(base))
    unknown_label["content"][1]["AI Strategy"] = "Wishful Thinking"
    with pytest.raises(UnknownStrategy):
        parse_dialogue(json.dumps(unknown_label))

    ai_first = json.loads(json.dumps(base))
    ai_first["content"].reverse()
    with pytest.raises(RoleError):
        parse_dialogue(json.dumps(ai_first))

    assert time.monotonic() - start < 5.0


# Frozen reference distribution for the released-data check: per-strategy
# label counts out of 97,893, and the five most frequent 3-hop windows.
RELEASED_STRATEGY_COUNTS = {
    "Reflective Statements": 14_560,
    "Clarification": 2_898,
    "Emotional Validation": 19_367,
    "Empathetic Statements": 8_482,
    "Affirmation": 16_539,
    "Offer Hope": 4_665,
    "Avoid Judgment And Criticism": 1_767,
    "Suggest Options": 6_079,
    "Collaborative Planning": 3_534,
    "Provide Different Perspectives": 3_322,
    "Reframe Negative Thoughts": 2_050,
    "Share Information": 3_181,
    "Normalize Experiences": 2_403,
    "Promote Self-Care Practices": 2_686,
    "Stress Management": 2_474,
    "Others": 3_887,
}
RELEASED_TOTAL_LABELS = 97_893
RELEASED_TOP5_3HOP = {
    ("EV", "RS", "EV"),
    ("EV", "RS", "SO"),
    ("EV", "RS", "ES"),
    ("RS", "EV", "SO"),
    ("EV", "ES", "RS"),
}


def _load_released_corpus(path: Path) -> Corpus:
    text = path.read_text("utf-8")
    if text.lstrip().startswith("["):
        records = json.loads(text)
        dialogues = []
        ids = set()
        for record in records:
            d = dialogue_from_record(record)
            if d.id in ids:
                continue
            ids.add(d.id)
            dialogues.append(d)
        return Corpus(tuple(dialogues))
    from escorpus.corpus import load_corpus

    return load_corpus(path, max_error_ratio=0.0)


def test_released_data_reproduction():
    location = os.environ.get("ESCORPUS_RELEASED_CORPUS", "")
    if not location or not Path(location).exists():
        pytest.skip(
            "released corpus file not available; set ESCORPUS_RELEASED_CORPUS "
            "to the released dialogue file to run this reproduction check"
        )
    start = time.monotonic()
    corpus = _load_released_corpus(Path(location))
    stats = corpus_stats(corpus)
    assert stats.n_dialogues == 11_177
    assert stats.n_utterances == 200_393
    assert stats.avg_dialogue_len == pytest.approx(18.2, abs=0.05)
    assert stats.avg_utterance_len == pytest.approx(26.0, abs=0.5)
    assert stats.total_strategy_labels == RELEASED_TOTAL_LABELS
    for name, count in RELEASED_STRATEGY_COUNTS.items():
        expected = count / RELEASED_TOTAL_LABELS
        assert stats.strategy_proportions[name] == pytest.approx(expected, abs=0.001), name
    ranked = transition_stats(corpus, hops=3)
    assert ranked[0].sequence == ("EV", "RS", "EV")
    assert ranked[0].permille == pytest.approx(17.19, abs=0.5)
    assert {t.sequence for t in ranked[:5]} == RELEASED_TOP5_3HOP
    # one fine-tuning example per assistant turn
    n_examples = sum(1 for _ in iter_sft(corpus, with_strategies=False))
    assert n_examples == RELEASED_TOTAL_LABELS
    assert time.monotonic() - start < 120.0


def test_metrics_oracle_suite():
    start = time.monotonic()
    rng = random.Random(77)
    vocab = "abcdefgh"
    for _ in range(1000):
        cand = random_seq(rng, vocab, 1, 25)
        ref = random_seq(rng, vocab, 1, 25)
        assert rouge_l(cand, ref).f == oracle_rouge_f(cand, ref)

    rng = random.Random(78)
    small_vocab = "abcdef"
    for _ in range(200):
        cand = random_seq(rng, small_vocab, 1, 8)
        ref = random_seq(rng, small_vocab, 1, 8)
        assert abs(meteor(cand, ref) - oracle_meteor(cand, ref)) < 1e-6

    assert bleu_n([["the", "the", "cat"]], [["the", "cat"]], 2) == pytest.approx(0.577, abs=1e-3)

    # identity and zero cases hold exactly
    seq = ["a", "b", "c", "d"]
    assert bleu_n([seq], [list(seq)], 2) == 1.0
    assert bleu_n([seq], [list(seq)], 4) == 1.0
    assert rouge_l(seq, list(seq)).f == 1.0
    assert bleu_n([["a", "b"]], [["x", "y"]], 2) == 0.0
    assert rouge_l(["a", "b"], ["x", "y"]).f == 0.0
    assert meteor(["a", "b"], ["x", "y"]) == 0.0
    assert meteor(["the", "cat"], ["the", "cat"]) == 0.9375
    table = table_from({"a": [1.0, 2.0], "b": [0.5, -1.0]})
    assert vector_extrema(["a", "b"], ["a", "b"], table) == 1.0

    assert time.monotonic() - start < 30.0


def test_analysis_properties():
    rng = random.Random(99)
    corpus = make_corpus(rng, 60)

    points = phase_points(corpus)
    n_ai = sum(1 for d in corpus for u in d.content if u.speaker is Speaker.AI and u.strategy)
    assert len(points) == n_ai
    for bins in (1, 4, 5):
        dist = phase_distribution(corpus, n_bins=bins)
        assert int(dist.bin_totals.sum()) == n_ai  # bins partition the points

    for hops in (3, 4, 5):
        ranked = transition_stats(corpus, hops)
        if ranked:
            total = sum(t.permille for t in ranked)
            assert abs(total - 1000.0) < 1e-6

    assert fleiss_kappa([[2, 0], [1, 1]]) == pytest.approx(-1 / 3, abs=1e-9)
    assert fleiss_kappa([[3, 0], [0, 3], [3, 0]]) == pytest.approx(1.0)


def test_end_to_end_loop_with_mock_gateway():
    start = time.monotonic()
    scenes = ["Academic Stress", "Career Transitions", "Anxiety and Panic"]
    scenarios = default_scenarios()
    store = CurationStore(
        None, scenarios=scenarios,
        policy=ValidationPolicy(min_turns=6, dup_threshold=0.8, max_correctable=3),
    )
    rng = random.Random(5)
    for scene in scenes:
        for i in range(2):
            store.import_seed(make_dialogue(rng, scene=scene, n_turns=8, salt=f"{scene}#{i}"))
    store.set_quotas({scene: 10 for scene in scenes})

    gateway = ChatGateway(
        GatewayConfig(max_concurrency=2, retry=RetryPolicy(max_attempts=2, base_backoff=0.0),
                      rate_limit_per_min=1e9),
        responder=ScenarioResponder(malformed_every=10),  # 10% malformed
        scenarios=scenarios,
    )
    cfg = LoopConfig(rng_seed=7, per_scenario_cap=5)

    pool_sizes = [store.pool.size()]
    reports = []
    for _ in range(2):
        report = run_iteration(store, gateway, cfg)
        reports.append(report)
        pool_sizes.append(store.pool.size())

    for report in reports:
        assert report.generated == report.accepted + report.queued + report.rejected
    # 3 scenarios x 5 per iteration x 2 iterations, every 10th output malformed
    assert sum(r.generated for r in reports) == 30
    assert sum(r.rejected for r in reports) == 3
    assert pool_sizes[0] < pool_sizes[1] < pool_sizes[2]  # strictly growing

    rebuilt = replay_events(store.audit)
    assert rebuilt.corpus_ids() == store.corpus_ids()

    assert time.monotonic() - start < 20.0


def test_export_invariants():
    rng = random.Random(321)
    corpus = make_corpus(rng, 50)
    tagged = [ex.to_json() for ex in iter_sft(corpus, with_strategies=True)]
    plain = [ex.to_json() for ex in iter_sft(corpus, with_strategies=False)]

    stripped_lines = []
    for line in tagged:
        record = json.loads(line)
        record["target"] = strip_strategy_prefix(record["target"])
        stripped_lines.append(
            json.dumps(record, ensure_ascii=False, separators=(", ", ": "))
        )
    assert "\n".join(stripped_lines).encode("utf-8") == "\n".join(plain).encode("utf-8")

    n_ai = sum(1 for d in corpus for u in d.content if u.speaker is Speaker.AI)
    assert len(tagged) == len(plain) == n_ai


def test_toxicity_stub_audit():
    rng = random.Random(654)
    corpus = make_corpus(rng, 8)
    first = audit_corpus(corpus, LexiconScorer())
    second = audit_corpus(corpus, LexiconScorer())
    assert first.means == second.means  # deterministic under the stub
    for attr in ATTRIBUTES:
        assert first.mins[attr] - 1e-12 <= first.means[attr] <= first.maxs[attr] + 1e-12
