import json
import random
import re
import threading

import pytest

from escorpus.errors import InsufficientSeeds, NotApproved, UnknownDialogue
from escorpus.gateway import ChatGateway, GatewayConfig, RetryPolicy
from escorpus.loop import (
    CurationStore,
    LoopConfig,
    Origin,
    SeedPool,
    replay_events,
    run_iteration,
    select_seeds,
)
from escorpus.registry import default_scenarios
from escorpus.validation import ValidationPolicy

from conftest import make_dialogue

SCENES = ["Academic Stress", "Career Transitions", "Anxiety and Panic"]


def scenario_record(scene: str, serial: int, n_turns: int = 6) -> dict:
    content = []
    for k in range(n_turns):
        text = f"{scene} sample {serial} turn {k} with plenty of words to vary"
        if k % 2 == 0:
            content.append({"User": text})
        else:
            content.append({"AI Strategy": "Emotional Validation", "AI": text})
    return {"scene": scene, "description": f"case {serial} for {scene}", "content": content}


class ScenarioResponder:
    """Emits valid records for whatever scenario the prompt asks about;
    every malformed_every-th response is broken JSON."""

    def __init__(self, malformed_every: int = 0):
        self.calls = 0
        self.malformed_every = malformed_every
        self._lock = threading.Lock()

    def send(self, payload):
        with self._lock:
            self.calls += 1
            serial = self.calls
        prompt = payload["messages"][0]["content"]
        match = re.search(r"of the `(.+?)' type", prompt)
        scene = match.group(1) if match else "Academic Stress"
        if self.malformed_every and serial % self.malformed_every == 0:
            text = "{ this is not a dialogue"
        else:
            text = json.dumps(scenario_record(scene, serial))
        body = {
            "choices": [{"message": {"content": text}}],
            "usage": {"prompt_tokens": 100, "completion_tokens": 200},
        }
        return 200, body


def fast_gateway(responder, scenarios):
    config = GatewayConfig(
        max_concurrency=2, retry=RetryPolicy(max_attempts=2, base_backoff=0.0),
        rate_limit_per_min=1_000_000.0,
    )
    return ChatGateway(config, responder=responder, scenarios=scenarios)


def seeded_store(tmp_path=None, seeds_per_scene=2, quota=2):
    scenarios = default_scenarios()
    store = CurationStore(
        tmp_path, scenarios=scenarios,
        policy=ValidationPolicy(min_turns=6, dup_threshold=0.8, max_correctable=3),
    )
    rng = random.Random(99)
    for scene in SCENES:
        for i in range(seeds_per_scene):
            store.import_seed(make_dialogue(rng, scene=scene, n_turns=8, salt=f"{scene}{i}"))
    store.set_quotas({scene: quota for scene in SCENES})
    return store


# ------------------------------------------------------------- seed sampling

def test_select_seeds_returns_both_of_two(rng):
    pool = SeedPool()
    d1, d2 = make_dialogue(rng, scene="Academic Stress"), make_dialogue(rng, scene="Academic Stress")
    pool.add("Academic Stress", d1.id, Origin.MANUAL)
    pool.add("Academic Stress", d2.id, Origin.PROMOTED)
    lookup = {d1.id: d1, d2.id: d2}.__getitem__
    seeds = select_seeds(pool, "Academic Stress", 2, rng_seed=5, lookup=lookup)
    assert {s.id for s in seeds} == {d1.id, d2.id}


def test_select_seeds_deterministic(rng):
    pool = SeedPool()
    dialogues = {}
    for i in range(6):
        d = make_dialogue(rng, scene="Academic Stress", salt=str(i))
        dialogues[d.id] = d
        pool.add("Academic Stress", d.id, Origin.MANUAL)
    first = select_seeds(pool, "Academic Stress", 3, 42, dialogues.__getitem__)
    second = select_seeds(pool, "Academic Stress", 3, 42, dialogues.__getitem__)
    assert [d.id for d in first] == [d.id for d in second]


def test_select_seeds_insufficient_without_fallback(rng):
    pool = SeedPool()
    d = make_dialogue(rng, scene="Academic Stress")
    pool.add("Academic Stress", d.id, Origin.MANUAL)
    with pytest.raises(InsufficientSeeds):
        select_seeds(pool, "Academic Stress", 3, 0, {d.id: d}.__getitem__)


def test_select_seeds_global_fallback(rng):
    pool = SeedPool()
    d1 = make_dialogue(rng, scene="Academic Stress")
    d2 = make_dialogue(rng, scene="Career Transitions")
    pool.add("Academic Stress", d1.id, Origin.MANUAL)
    pool.add("Career Transitions", d2.id, Origin.MANUAL)
    lookup = {d1.id: d1, d2.id: d2}.__getitem__
    seeds = select_seeds(pool, "Academic Stress", 2, 0, lookup, allow_global_fallback=True)
    assert {s.id for s in seeds} == {d1.id, d2.id}


def test_seed_window_limits_pool_view(rng):
    pool = SeedPool()
    ids = []
    for i in range(5):
        d = make_dialogue(rng, scene="Academic Stress", salt=str(i))
        ids.append(d.id)
        pool.add("Academic Stress", d.id, Origin.MANUAL)
    assert pool.ids_for("Academic Stress", window=2) == ids[-2:]


# ---------------------------------------------------------------- iteration

def test_clean_iteration_accepts_everything():
    store = seeded_store()
    gateway = fast_gateway(ScenarioResponder(), store.scenarios)
    report = run_iteration(store, gateway, LoopConfig(rng_seed=1))
    assert report.generated == 6
    assert report.accepted == 6
    assert report.queued == 0
    assert report.rejected == 0
    assert report.conserved
    assert store.iteration == 1


def test_malformed_share_is_rejected_and_conserved():
    store = seeded_store()
    gateway = fast_gateway(ScenarioResponder(malformed_every=2), store.scenarios)
    report = run_iteration(store, gateway, LoopConfig(rng_seed=1))
    assert report.generated == 6
    assert report.rejected == 3
    assert report.accepted == 3
    assert report.conserved
    # report counts reconcile exactly with the audit trail
    by_event = {}
    for e in store.audit:
        by_event[e.event] = by_event.get(e.event, 0) + 1
    assert by_event.get("accepted", 0) == report.accepted
    assert by_event.get("queued", 0) == report.queued
    assert by_event.get("rejected", 0) == report.rejected


def test_accepted_dialogues_become_seeds_and_pool_grows():
    store = seeded_store()
    size_before = store.pool.size()
    gateway = fast_gateway(ScenarioResponder(), store.scenarios)
    run_iteration(store, gateway, LoopConfig(rng_seed=1))
    assert store.pool.size() > size_before
    promoted = [e for e in store.audit if e.event == "promoted"]
    assert len(promoted) == 6


def test_two_iterations_feed_new_seeds_forward():
    store = seeded_store(quota=4)
    responder = ScenarioResponder()
    gateway = fast_gateway(responder, store.scenarios)
    cfg = LoopConfig(rng_seed=1, per_scenario_cap=2)
    first = run_iteration(store, gateway, cfg)
    pool_after_first = store.pool.size()
    second = run_iteration(store, gateway, cfg)
    assert store.pool.size() > pool_after_first
    assert store.iteration == 2
    assert first.iteration == 1 and second.iteration == 2
    # iteration-1 promotions are sampleable in iteration 2
    iter1_ids = {e.dialogue_id for e in store.audit if e.event == "promoted"}
    assert iter1_ids & set(store.pool.all_ids())


def test_quota_is_respected():
    store = seeded_store(quota=2)
    gateway = fast_gateway(ScenarioResponder(), store.scenarios)
    cfg = LoopConfig(rng_seed=1)
    run_iteration(store, gateway, cfg)
    report = run_iteration(store, gateway, cfg)
    assert report.generated == 0  # quotas already met
    for quota in store.quotas.values():
        assert quota.produced <= quota.target_count


def test_promote_idempotent_and_guarded():
    store = seeded_store()
    gateway = fast_gateway(ScenarioResponder(), store.scenarios)
    run_iteration(store, gateway, LoopConfig(rng_seed=1))
    accepted = [e.dialogue_id for e in store.audit if e.event == "accepted"]
    target = accepted[0]
    size = store.pool.size()
    store.promote(target)  # second promotion is a no-op
    assert store.pool.size() == size
    with pytest.raises(UnknownDialogue):
        store.promote("no-such-id")
    rejected = [e.dialogue_id for e in store.audit if e.event == "rejected" and e.dialogue_id]
    if rejected:
        with pytest.raises(NotApproved):
            store.promote(rejected[0])


def test_audit_replay_reconstructs_membership():
    store = seeded_store()
    gateway = fast_gateway(ScenarioResponder(malformed_every=3), store.scenarios)
    run_iteration(store, gateway, LoopConfig(rng_seed=1))
    rebuilt = replay_events(store.audit)
    assert rebuilt.corpus_ids() == store.corpus_ids()
    assert rebuilt.pool.to_dict() == store.pool.to_dict()


def test_persistence_round_trip(tmp_path):
    store = seeded_store(tmp_path)
    gateway = fast_gateway(ScenarioResponder(), store.scenarios)
    run_iteration(store, gateway, LoopConfig(rng_seed=1))
    reloaded = CurationStore.load(tmp_path, scenarios=default_scenarios())
    assert reloaded.corpus_ids() == store.corpus_ids()
    assert reloaded.iteration == store.iteration
    assert reloaded.pool.to_dict() == store.pool.to_dict()
    assert {q.scenario: q.produced for q in reloaded.quotas.values()} == \
           {q.scenario: q.produced for q in store.quotas.values()}


def test_crash_recovery_replays_event_tail(tmp_path):
    store = seeded_store(tmp_path)
    gateway = fast_gateway(ScenarioResponder(), store.scenarios)
    run_iteration(store, gateway, LoopConfig(rng_seed=1))
    # more work lands in the log after the last snapshot
    extra = make_dialogue(random.Random(1), scene="Academic Stress", n_turns=8, salt="late")
    store.import_seed(extra)
    recovered = CurationStore.load(tmp_path, scenarios=default_scenarios())
    assert extra.id in recovered.corpus_ids()
    assert recovered.corpus_ids() == store.corpus_ids()


def test_insufficient_seeds_skips_scenario_but_continues():
    scenarios = default_scenarios()
    store = CurationStore(None, scenarios=scenarios, policy=ValidationPolicy(min_turns=6))
    rng = random.Random(3)
    for i in range(2):
        store.import_seed(make_dialogue(rng, scene="Academic Stress", n_turns=8, salt=str(i)))
    # Career Transitions has no seeds at all
    store.set_quotas({"Academic Stress": 1, "Career Transitions": 1})
    gateway = fast_gateway(ScenarioResponder(), scenarios)
    report = run_iteration(store, gateway, LoopConfig(rng_seed=1))
    assert report.per_scenario["Academic Stress"]["accepted"] == 1
    assert report.per_scenario["Career Transitions"]["generated"] == 0
    failed = [e for e in store.audit if e.event == "scenario_failed"]
    assert len(failed) == 1


def test_concurrent_decisions_apply_exactly_once():
    import concurrent.futures

    from escorpus.errors import AlreadyDecided

    store = seeded_store()
    d = make_dialogue(random.Random(8), scene="Academic Stress", n_turns=8, salt="race")
    store.enqueue_for_review(d, "Academic Stress", issues=[], duplicate_score=0.0)

    def attempt(i):
        try:
            store.decide(d.id, "Approve" if i % 2 == 0 else "Reject", reviewer=f"r{i}")
            return "won"
        except AlreadyDecided:
            return "conflict"

    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        outcomes = list(pool.map(attempt, range(8)))
    assert outcomes.count("won") == 1
    assert outcomes.count("conflict") == 7
    terminal = [e for e in store.audit if e.dialogue_id == d.id
                and e.event in ("approved", "rejected_by_review")]
    assert len(terminal) == 1
