import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from escorpus.corpus import (
    Corpus,
    Dialogue,
    Provenance,
    Speaker,
    Utterance,
    content_hash,
    load_corpus,
    parse_dialogue,
    save_corpus,
    serialize_dialogue,
)
from escorpus.errors import (
    ConsecutiveSpeakerWarning,
    CorpusLoadError,
    InvariantViolation,
    MalformedRecord,
    RoleError,
    UnknownStrategy,
)
from escorpus.registry import STRATEGIES

from conftest import make_corpus, make_dialogue

RECORD = {
    "scene": "Academic Stress",
    "description": "Student feeling buried by coursework.",
    "content": [
        {"User": "I'm overwhelmed"},
        {"AI Strategy": "Emotional Validation", "AI": "That sounds hard"},
    ],
}


def test_parse_basic_record():
    d = parse_dialogue(json.dumps(RECORD))
    assert d.scene == "Academic Stress"
    assert d.n_utterances == 2
    assert d.content[0].speaker is Speaker.USER
    assert d.content[1].strategy == "Emotional Validation"


def test_parse_accepts_abbreviations():
    record = dict(RECORD)
    record["content"] = [{"User": "hey"}, {"AI Strategy": "EV", "AI": "hello"}]
    d = parse_dialogue(json.dumps(record))
    assert d.content[1].strategy == "Emotional Validation"


def test_parse_missing_strategy_key():
    record = dict(RECORD)
    record["content"] = [{"User": "hey"}, {"AI": "hello"}]
    with pytest.raises(MalformedRecord):
        parse_dialogue(json.dumps(record))


def test_parse_unknown_strategy():
    record = dict(RECORD)
    record["content"] = [{"User": "hey"}, {"AI Strategy": "Cheerleading", "AI": "go"}]
    with pytest.raises(UnknownStrategy):
        parse_dialogue(json.dumps(record))


def test_parse_bad_speaker_key():
    record = dict(RECORD)
    record["content"] = [{"Human": "hey"}, {"AI Strategy": "EV", "AI": "hello"}]
    with pytest.raises(MalformedRecord):
        parse_dialogue(json.dumps(record))


def test_parse_empty_text():
    record = dict(RECORD)
    record["content"] = [{"User": ""}, {"AI Strategy": "EV", "AI": "hello"}]
    with pytest.raises(MalformedRecord):
        parse_dialogue(json.dumps(record))


def test_parse_first_speaker_must_be_user():
    record = dict(RECORD)
    record["content"] = [{"AI Strategy": "EV", "AI": "hello"}, {"User": "hey"}]
    with pytest.raises(RoleError):
        parse_dialogue(json.dumps(record))


def test_parse_single_turn_rejected():
    record = dict(RECORD)
    record["content"] = [{"User": "hey"}]
    with pytest.raises(MalformedRecord):
        parse_dialogue(json.dumps(record))


def test_parse_not_json():
    with pytest.raises(MalformedRecord):
        parse_dialogue("definitely not json {")


def test_consecutive_same_speaker_warns_but_parses():
    record = dict(RECORD)
    record["content"] = [
        {"User": "hey"},
        {"User": "are you there"},
        {"AI Strategy": "EV", "AI": "yes, I hear you"},
    ]
    with pytest.warns(ConsecutiveSpeakerWarning):
        d = parse_dialogue(json.dumps(record))
    assert d.n_utterances == 3


def test_serialize_uses_full_strategy_names():
    record = dict(RECORD)
    record["content"] = [{"User": "hey"}, {"AI Strategy": "EV", "AI": "hello"}]
    text = serialize_dialogue(parse_dialogue(json.dumps(record)))
    assert '"AI Strategy": "Emotional Validation"' in text
    assert '"EV"' not in text


def test_serialize_rejects_invalid_dialogue():
    bad = Dialogue(
        id="x", scene="Academic Stress", description="d",
        content=(Utterance(Speaker.AI, "hi", "Emotional Validation"),),
    )
    with pytest.raises(InvariantViolation):
        serialize_dialogue(bad)


def test_serialize_deterministic(rng):
    d = make_dialogue(rng)
    assert serialize_dialogue(d) == serialize_dialogue(d)


def test_round_trip_rng_dialogues(rng):
    for _ in range(100):
        d = make_dialogue(rng)
        assert parse_dialogue(serialize_dialogue(d)) == d


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**31), st.integers(min_value=2, max_value=30),
       st.sampled_from([Provenance.SEED, Provenance.GENERATED, Provenance.EDITED]),
       st.integers(min_value=0, max_value=9))
def test_round_trip_property(seed, n_turns, provenance, iteration):
    d = make_dialogue(random.Random(seed), n_turns=n_turns,
                      provenance=provenance, iteration=iteration)
    again = parse_dialogue(serialize_dialogue(d))
    assert again == d
    assert serialize_dialogue(again) == serialize_dialogue(d)


def test_content_hash_is_stable_and_content_sensitive():
    c1 = (Utterance(Speaker.USER, "a"), Utterance(Speaker.AI, "b", "Affirmation"))
    c2 = (Utterance(Speaker.USER, "a"), Utterance(Speaker.AI, "c", "Affirmation"))
    assert content_hash("s", "d", c1) == content_hash("s", "d", c1)
    assert content_hash("s", "d", c1) != content_hash("s", "d", c2)


def test_parse_derives_id_when_meta_absent():
    d = parse_dialogue(json.dumps(RECORD))
    assert d.id == content_hash(d.scene, d.description, d.content)


def test_corpus_rejects_duplicate_ids(rng):
    d = make_dialogue(rng)
    with pytest.raises(InvariantViolation):
        Corpus((d, d))


def test_load_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", "utf-8")
    assert len(load_corpus(path)) == 0


def test_load_three_lines_in_order(tmp_path, rng):
    corpus = make_corpus(rng, 3)
    path = tmp_path / "c.jsonl"
    save_corpus(corpus, path)
    loaded = load_corpus(path)
    assert loaded.ids() == corpus.ids()


def test_load_save_round_trip_bytes(tmp_path, rng):
    corpus = make_corpus(rng, 10)
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_corpus(corpus, p1)
    save_corpus(load_corpus(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_fails_on_any_bad_line_by_default(tmp_path, rng):
    d = make_dialogue(rng)
    path = tmp_path / "c.jsonl"
    path.write_text(serialize_dialogue(d) + "\nnot json\n", "utf-8")
    with pytest.raises(CorpusLoadError) as excinfo:
        load_corpus(path)
    assert excinfo.value.line_errors[0][0] == 2


def test_load_tolerates_errors_within_ratio(tmp_path, rng):
    corpus = make_corpus(rng, 9)
    path = tmp_path / "c.jsonl"
    lines = [serialize_dialogue(d) for d in corpus] + ["broken"]
    path.write_text("\n".join(lines) + "\n", "utf-8")
    loaded = load_corpus(path, max_error_ratio=0.2)
    assert len(loaded) == 9


def test_strategy_registry_shape():
    assert len(STRATEGIES) == 16
    assert len(set(STRATEGIES.abbreviations)) == 16
    assert STRATEGIES.resolve("RS").name == "Reflective Statements"
    assert STRATEGIES.fuzzy_resolve("emotional validation").abbreviation == "EV"
    assert STRATEGIES.fuzzy_resolve("avoid judgment and criticism").abbreviation == "AJC"
    assert STRATEGIES.fuzzy_resolve("made-up label") is None
