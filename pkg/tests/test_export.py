import pytest

from escorpus.corpus import Corpus, Speaker
from escorpus.errors import BadRatios
from escorpus.export import iter_sft, split, strip_strategy_prefix

from conftest import make_corpus, make_dialogue


def test_one_example_per_ai_turn(rng):
    corpus = make_corpus(rng, 8)
    n_ai = sum(1 for d in corpus for u in d.content if u.speaker is Speaker.AI)
    examples = list(iter_sft(corpus, with_strategies=False))
    assert len(examples) == n_ai


def test_contexts_are_proper_prefixes(rng):
    d = make_dialogue(rng, n_turns=8)
    examples = list(iter_sft(Corpus((d,)), with_strategies=False))
    assert len(examples) >= 3
    for earlier, later in zip(examples, examples[1:]):
        assert later.context.startswith(earlier.context)
        assert len(later.context) > len(earlier.context)


def test_context_contains_every_prior_turn(rng):
    d = make_dialogue(rng, n_turns=6)
    examples = list(iter_sft(Corpus((d,)), with_strategies=False))
    last = examples[-1]
    lines = last.context.split("\n")
    assert len(lines) == d.n_utterances - 1
    assert lines[0].startswith("User: ")
    assert lines[1].startswith("Assistant: ")


def test_with_strategies_prefixes_targets(rng):
    d = make_dialogue(rng, n_turns=4)
    strategies = [u.strategy for u in d.content if u.speaker is Speaker.AI]
    examples = list(iter_sft(Corpus((d,)), with_strategies=True))
    for ex, strategy in zip(examples, strategies):
        assert ex.target.startswith(f"[{strategy}] ")


def test_prefix_strip_recovers_no_strategies_export(rng):
    corpus = make_corpus(rng, 10)
    tagged = [ex.to_json() for ex in iter_sft(corpus, with_strategies=True)]
    plain = [ex.to_json() for ex in iter_sft(corpus, with_strategies=False)]
    import json

    stripped = []
    for line in tagged:
        record = json.loads(line)
        record["target"] = strip_strategy_prefix(record["target"])
        stripped.append(json.dumps(record, ensure_ascii=False, separators=(", ", ": ")))
    assert stripped == plain


def test_split_exact_sizes_and_disjoint(rng):
    corpus = make_corpus(rng, 100)
    train, test = split(corpus, 0.9, 0.1, rng_seed=5)
    assert len(train) == 90 and len(test) == 10
    assert not (set(train.ids()) & set(test.ids()))
    assert set(train.ids()) | set(test.ids()) == set(corpus.ids())


def test_split_deterministic(rng):
    corpus = make_corpus(rng, 60)
    a_train, a_test = split(corpus, 0.9, 0.1, rng_seed=3)
    b_train, b_test = split(corpus, 0.9, 0.1, rng_seed=3)
    assert a_train.ids() == b_train.ids()
    assert a_test.ids() == b_test.ids()
    c_train, _ = split(corpus, 0.9, 0.1, rng_seed=4)
    assert c_train.ids() != a_train.ids()


def test_split_stratified_two_even_scenarios(rng):
    corpus = make_corpus(rng, 100, scenes=["Academic Stress", "Career Transitions"])
    train, test = split(corpus, 0.9, 0.1, rng_seed=1)
    for part in (train, test):
        share = sum(1 for d in part if d.scene == "Academic Stress") / len(part)
        assert 0.48 <= share <= 0.52


def test_split_stratification_bound_many_scenarios(rng):
    corpus = make_corpus(rng, 180, scenes=["Academic Stress", "Career Transitions",
                                           "Anxiety and Panic"])
    train, test = split(corpus, 0.9, 0.1, rng_seed=2)
    corpus_share = {scene: sum(1 for d in corpus if d.scene == scene) / len(corpus)
                    for scene in ("Academic Stress", "Career Transitions", "Anxiety and Panic")}
    for part in (train, test):
        for scene, share in corpus_share.items():
            part_share = sum(1 for d in part if d.scene == scene) / len(part)
            assert abs(part_share - share) <= 0.02 + 1e-9


def test_split_preserves_corpus_order(rng):
    corpus = make_corpus(rng, 40)
    train, test = split(corpus, 0.9, 0.1, rng_seed=0)
    order = {d.id: i for i, d in enumerate(corpus)}
    assert [order[d.id] for d in train] == sorted(order[d.id] for d in train)
    assert [order[d.id] for d in test] == sorted(order[d.id] for d in test)


def test_split_bad_ratios(rng):
    corpus = make_corpus(rng, 10)
    with pytest.raises(BadRatios):
        split(corpus, 0.5, 0.4)
    with pytest.raises(BadRatios):
        split(corpus, 1.0, 0.0)
