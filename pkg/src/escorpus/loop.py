"""The extendable curation loop and its persistent state.

One iteration walks every scenario with remaining quota: sample seeds, build
the prompt, generate, validate, then triage. Accepted dialogues join the
corpus and become seed-eligible; correctable ones wait in the review queue;
rejects leave only an audit trail. The pool only ever grows (promotion never
evicts), so seed coverage is monotone across iterations; a seed window can
cap how far back sampling reaches when strict replacement is wanted.

State is an append-only event log plus periodic snapshots; recovery replays
the log tail over the last snapshot, and replaying the full log against an
empty store reconstructs corpus membership exactly.
"""

import json
import random
import threading
import zlib
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .corpus import (
    Corpus,
    Dialogue,
    Provenance,
    dialogue_from_record,
    dialogue_to_record,
    save_corpus,
)
from .errors import (
    AlreadyDecided,
    AuthError,
    EscorpusError,
    InsufficientSeeds,
    LoopFailure,
    NotApproved,
    UnknownDialogue,
    ValidationFailed,
)
from .gateway import ChatGateway, GenerationRequest, SamplingParams
from .registry import SCENARIOS, STRATEGIES, ScenarioRegistry, StrategyRegistry
from .validation import DedupIndex, ValidationPolicy, Verdict, validate

EVENTS_FILE = "events.log"
CORPUS_SNAPSHOT = "corpus.snapshot"
SEEDS_SNAPSHOT = "seeds.snapshot"
QUOTAS_FILE = "quotas.json"
STATE_FILE = "loop_state.json"

RATING_DIMENSIONS = (
    "informativeness", "understanding", "helpfulness", "consistency", "coherence",
)


class Origin(str, Enum):
    MANUAL = "Manual"
    PROMOTED = "Promoted"


class Status(str, Enum):
    GENERATED = "Generated"
    PENDING = "Pending"
    APPROVED = "Approved"
    REJECTED = "Rejected"
    SEED_ELIGIBLE = "SeedEligible"


@dataclass(frozen=True)
class SeedEntry:
    dialogue_id: str
    origin: Origin


class SeedPool:
    """Per-scenario seed membership; append-only."""

    def __init__(self):
        self._entries: dict[str, list[SeedEntry]] = {}

    def add(self, scenario: str, dialogue_id: str, origin: Origin) -> bool:
        entries = self._entries.setdefault(scenario, [])
        if any(e.dialogue_id == dialogue_id for e in entries):
            return False
        entries.append(SeedEntry(dialogue_id, origin))
        return True

    def ids_for(self, scenario: str, window: int | None = None) -> list[str]:
        entries = self._entries.get(scenario, [])
        if window is not None and window > 0:
            entries = entries[-window:]
        return [e.dialogue_id for e in entries]

    def all_ids(self) -> list[str]:
        return [e.dialogue_id for entries in self._entries.values() for e in entries]

    def scenarios(self) -> list[str]:
        return list(self._entries)

    def size(self) -> int:
        return sum(len(v) for v in self._entries.values())

    def to_dict(self) -> dict:
        return {
            scenario: [{"id": e.dialogue_id, "origin": e.origin.value} for e in entries]
            for scenario, entries in self._entries.items()
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SeedPool":
        pool = cls()
        for scenario, entries in data.items():
            for e in entries:
                pool.add(scenario, e["id"], Origin(e["origin"]))
        return pool


@dataclass
class ScenarioQuota:
    scenario: str
    target_count: int
    produced: int = 0

    @property
    def remaining(self) -> int:
        return max(0, self.target_count - self.produced)


@dataclass(frozen=True)
class AuditEvent:
    seq: int
    ts: str
    event: str
    dialogue_id: str
    actor: str
    detail: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "AuditEvent":
        return cls(**json.loads(line))


@dataclass
class StagedItem:
    """A generated dialogue known to the loop but not (yet) in the corpus."""
    record: dict
    scenario: str
    issues: list[dict] = field(default_factory=list)
    duplicate_score: float = 0.0
    enqueued_seq: int = 0


@dataclass
class IterationReport:
    iteration: int
    generated: int = 0
    accepted: int = 0
    queued: int = 0
    rejected: int = 0
    failed: int = 0
    per_scenario: dict = field(default_factory=dict)

    def scenario_bucket(self, scenario: str) -> dict:
        return self.per_scenario.setdefault(
            scenario, {"generated": 0, "accepted": 0, "queued": 0, "rejected": 0, "failed": 0}
        )

    @property
    def conserved(self) -> bool:
        return self.generated == self.accepted + self.queued + self.rejected


@dataclass(frozen=True)
class LoopConfig:
    seeds_per_prompt: int = 2
    sampling: SamplingParams = field(default_factory=SamplingParams)
    policy: ValidationPolicy = field(default_factory=ValidationPolicy)
    rng_seed: int = 0
    per_scenario_cap: int | None = None
    seed_window: int | None = None
    allow_seed_fallback: bool = False


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def select_seeds(
    pool: SeedPool,
    scenario: str,
    k: int,
    rng_seed: int,
    lookup,
    window: int | None = None,
    allow_global_fallback: bool = False,
) -> list[Dialogue]:
    """Sample k distinct seeds for a scenario, uniformly, without replacement.

    Deterministic for a given rng_seed. Manual and promoted seeds are equally
    eligible. With the global fallback on, missing slots are topped up from
    the rest of the pool.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ids = pool.ids_for(scenario, window)
    if len(ids) < k:
        if not allow_global_fallback:
            raise InsufficientSeeds(
                f"scenario {scenario!r} has {len(ids)} seeds, need {k}"
            )
        extras = [i for i in pool.all_ids() if i not in ids]
        ids = ids + extras
        if len(ids) < k:
            raise InsufficientSeeds(
                f"pool has only {len(ids)} seeds in total, need {k}"
            )
    rng = random.Random(rng_seed)
    chosen = rng.sample(ids, k)
    return [lookup(dialogue_id) for dialogue_id in chosen]


class CurationStore:
    """Single-writer owner of loop state; all mutations take the store lock.

    Handlers in the review service call into this object, so the lock is the
    serialized command channel: reads hand out immutable snapshots, writes
    queue up behind one another.
    """

    def __init__(
        self,
        state_dir: str | Path | None = None,
        strategies: StrategyRegistry = STRATEGIES,
        scenarios: ScenarioRegistry = SCENARIOS,
        policy: ValidationPolicy | None = None,
    ):
        self.state_dir = Path(state_dir) if state_dir is not None else None
        self.strategies = strategies
        self.scenarios = scenarios
        self.policy = policy or ValidationPolicy()
        self._lock = threading.RLock()
        self._dialogues: dict[str, Dialogue] = {}
        self.pool = SeedPool()
        self.quotas: dict[str, ScenarioQuota] = {}
        self.iteration = 0
        self.pending: list[str] = []
        self.staged: dict[str, StagedItem] = {}
        self.statuses: dict[str, Status] = {}
        self.decisions: dict[str, dict] = {}
        self.ratings: dict[str, list[dict]] = {}
        self.audit: list[AuditEvent] = []
        self._event_seq = 0
        if self.state_dir is not None:
            self.state_dir.mkdir(parents=True, exist_ok=True)

    # ------------------------------------------------------------------ state

    @property
    def lock(self) -> threading.RLock:
        return self._lock

    def corpus(self) -> Corpus:
        with self._lock:
            return Corpus(tuple(self._dialogues.values()))

    def corpus_ids(self) -> set[str]:
        with self._lock:
            return set(self._dialogues)

    def get_dialogue(self, dialogue_id: str) -> Dialogue | None:
        with self._lock:
            return self._dialogues.get(dialogue_id)

    def set_quotas(self, targets: dict[str, int]) -> None:
        with self._lock:
            for scenario, target in targets.items():
                if scenario not in self.scenarios:
                    self.scenarios.register(scenario)
                existing = self.quotas.get(scenario)
                produced = existing.produced if existing else 0
                self.quotas[scenario] = ScenarioQuota(scenario, target, produced)
            self._write_quotas()

    # ------------------------------------------------------------------ audit

    def _record(self, event: str, dialogue_id: str, actor: str, detail: dict | None = None) -> AuditEvent:
        with self._lock:
            self._event_seq += 1
            entry = AuditEvent(self._event_seq, _now(), event, dialogue_id, actor, detail or {})
            self.audit.append(entry)
            if self.state_dir is not None:
                with (self.state_dir / EVENTS_FILE).open("a", encoding="utf-8") as fh:
                    fh.write(entry.to_json())
                    fh.write("\n")
            return entry

    # ------------------------------------------------------------- mutations

    def import_seed(self, dialogue: Dialogue, actor: str = "operator") -> None:
        """Bring a vetted dialogue into the corpus and the manual seed pool."""
        dialogue.check_invariants(self.strategies)
        with self._lock:
            if dialogue.id not in self._dialogues:
                self._dialogues[dialogue.id] = dialogue
            self.pool.add(dialogue.scene, dialogue.id, Origin.MANUAL)
            self.statuses[dialogue.id] = Status.SEED_ELIGIBLE
            self._record("seed_imported", dialogue.id, actor, {
                "scenario": dialogue.scene,
                "record": dialogue_to_record(dialogue),
            })

    def select_seeds(self, scenario: str, k: int, rng_seed: int,
                     window: int | None = None, allow_global_fallback: bool = False) -> list[Dialogue]:
        with self._lock:
            return select_seeds(
                self.pool, scenario, k, rng_seed,
                lookup=lambda did: self._dialogues[did],
                window=window, allow_global_fallback=allow_global_fallback,
            )

    def accept_generated(self, dialogue: Dialogue, scenario: str, actor: str = "validator") -> bool:
        """Auto-accept: mark approved and promote. False when the id is taken."""
        with self._lock:
            if dialogue.id in self._dialogues:
                self._record("rejected", dialogue.id, actor, {
                    "scenario": scenario,
                    "issues": [{"code": "duplicate", "severity": "Fatal",
                                "message": "id already in corpus"}],
                })
                return False
            self.staged[dialogue.id] = StagedItem(dialogue_to_record(dialogue), scenario)
            self.statuses[dialogue.id] = Status.APPROVED
            self._bump_produced(scenario, +1)
            self._record("accepted", dialogue.id, actor, {
                "scenario": scenario,
                "record": dialogue_to_record(dialogue),
            })
            self.promote(dialogue.id, actor=actor)
            return True

    def enqueue_for_review(self, dialogue: Dialogue, scenario: str,
                           issues: list[dict], duplicate_score: float,
                           actor: str = "validator") -> None:
        with self._lock:
            item = StagedItem(
                dialogue_to_record(dialogue), scenario, issues, duplicate_score,
                enqueued_seq=self._event_seq + 1,
            )
            self.staged[dialogue.id] = item
            self.pending.append(dialogue.id)
            self.statuses[dialogue.id] = Status.PENDING
            self._bump_produced(scenario, +1)
            self._record("queued", dialogue.id, actor, {
                "scenario": scenario,
                "record": item.record,
                "issues": issues,
                "duplicate_score": duplicate_score,
            })

    def reject_generated(self, dialogue_id: str, scenario: str, issues: list[dict],
                         actor: str = "validator") -> None:
        with self._lock:
            if dialogue_id:
                self.statuses[dialogue_id] = Status.REJECTED
            self._record("rejected", dialogue_id, actor, {
                "scenario": scenario, "issues": issues,
            })

    def promote(self, dialogue_id: str, actor: str = "loop") -> None:
        """Append an approved dialogue to the corpus and the seed pool.

        Idempotent per id; a second call is a no-op.
        """
        with self._lock:
            status = self.statuses.get(dialogue_id)
            if status is None:
                raise UnknownDialogue(f"unknown dialogue id: {dialogue_id!r}")
            if status is Status.SEED_ELIGIBLE:
                return
            if status is not Status.APPROVED:
                raise NotApproved(f"dialogue {dialogue_id!r} has status {status.value}")
            item = self.staged.get(dialogue_id)
            if item is None and dialogue_id not in self._dialogues:
                raise UnknownDialogue(f"no record staged for {dialogue_id!r}")
            if dialogue_id not in self._dialogues:
                self._dialogues[dialogue_id] = dialogue_from_record(item.record, self.strategies)
            scenario = item.scenario if item else self._dialogues[dialogue_id].scene
            self.pool.add(scenario, dialogue_id, Origin.PROMOTED)
            self.statuses[dialogue_id] = Status.SEED_ELIGIBLE
            self._record("promoted", dialogue_id, actor, {"scenario": scenario})

    # ------------------------------------------------------------- reviewing

    def pending_items(self, scenario: str | None = None) -> list[tuple[str, StagedItem]]:
        """Pending queue oldest-first, optionally filtered by scenario."""
        with self._lock:
            items = [(did, self.staged[did]) for did in self.pending]
        if scenario is not None:
            items = [(did, item) for did, item in items if item.scenario == scenario]
        return items

    def decide(
        self,
        dialogue_id: str,
        action: str,
        reviewer: str,
        edited_record: dict | None = None,
        reason: str | None = None,
        ratings: dict[str, int] | None = None,
    ) -> Status:
        """Apply one terminal review decision; exactly once per dialogue."""
        if action not in ("Approve", "Reject", "ApproveWithEdits"):
            raise ValueError(f"unknown action: {action!r}")
        if ratings is not None:
            _check_ratings(ratings)
        with self._lock:
            if dialogue_id not in self.statuses:
                raise UnknownDialogue(f"unknown dialogue id: {dialogue_id!r}")
            if self.statuses[dialogue_id] is not Status.PENDING:
                raise AlreadyDecided(
                    f"dialogue {dialogue_id!r} already {self.statuses[dialogue_id].value}"
                )
            item = self.staged[dialogue_id]
            decided_at = _now()

            if action == "Reject":
                self.pending.remove(dialogue_id)
                self.statuses[dialogue_id] = Status.REJECTED
                self._bump_produced(item.scenario, -1)
                self.decisions[dialogue_id] = {
                    "action": action, "reviewer": reviewer, "reason": reason, "ts": decided_at,
                }
                self._record("rejected_by_review", dialogue_id, reviewer, {
                    "scenario": item.scenario, "reason": reason or "",
                })
            else:
                if action == "ApproveWithEdits":
                    if edited_record is None:
                        raise ValueError("ApproveWithEdits requires an edited dialogue")
                    record, dialogue = self._vet_edits(dialogue_id, item, edited_record)
                else:
                    record = item.record
                    dialogue = dialogue_from_record(record, self.strategies)
                    report = validate(
                        json.dumps(record, ensure_ascii=False), item.scenario,
                        self._dedup_index_excluding(dialogue_id),
                        self.policy, self.strategies, self.scenarios,
                    )
                    if report.verdict is Verdict.REJECT:
                        raise ValidationFailed(
                            "dialogue no longer passes validation", report
                        )
                item.record = dialogue_to_record(dialogue)
                self.pending.remove(dialogue_id)
                self.statuses[dialogue_id] = Status.APPROVED
                self.decisions[dialogue_id] = {
                    "action": action, "reviewer": reviewer, "reason": reason, "ts": decided_at,
                }
                self._record("approved", dialogue_id, reviewer, {
                    "scenario": item.scenario,
                    "record": item.record,
                    "action": action,
                })
                self.promote(dialogue_id, actor=reviewer)

            if ratings is not None:
                self._store_rating(dialogue_id, reviewer, ratings)
            return self.statuses[dialogue_id]

    def _vet_edits(self, dialogue_id: str, item: StagedItem, edited_record: dict):
        raw = json.dumps(edited_record, ensure_ascii=False)
        report = validate(
            raw, item.scenario, self._dedup_index_excluding(dialogue_id),
            self.policy, self.strategies, self.scenarios,
        )
        if report.verdict is not Verdict.ACCEPT or report.parsed is None:
            raise ValidationFailed("edited dialogue must validate as Accept", report)
        original_iteration = item.record.get("meta", {}).get("iteration", 0)
        dialogue = replace(
            report.parsed, id=dialogue_id,
            provenance=Provenance.EDITED, iteration=original_iteration,
        )
        return dialogue_to_record(dialogue), dialogue

    def _dedup_index_excluding(self, dialogue_id: str) -> DedupIndex:
        corpus = Corpus(tuple(d for d in self._dialogues.values() if d.id != dialogue_id))
        return DedupIndex(corpus)

    def rate(self, dialogue_id: str, reviewer: str, ratings: dict[str, int]) -> None:
        """Attach a quality rating; multiple reviewers may rate the same item."""
        _check_ratings(ratings)
        with self._lock:
            if dialogue_id not in self.statuses and dialogue_id not in self._dialogues:
                raise UnknownDialogue(f"unknown dialogue id: {dialogue_id!r}")
            self._store_rating(dialogue_id, reviewer, ratings)

    def _store_rating(self, dialogue_id: str, reviewer: str, ratings: dict[str, int]) -> None:
        entry = {"reviewer": reviewer, "ratings": dict(ratings), "ts": _now()}
        self.ratings.setdefault(dialogue_id, []).append(entry)
        self._record("rated", dialogue_id, reviewer, {"ratings": dict(ratings)})

    def review_stats(self) -> dict:
        from .analysis import fleiss_kappa

        with self._lock:
            decisions = list(self.decisions.values())
            pending = len(self.pending)
            ratings = {did: list(entries) for did, entries in self.ratings.items()}
        approved = sum(1 for d in decisions if d["action"] in ("Approve", "ApproveWithEdits"))
        rejected = sum(1 for d in decisions if d["action"] == "Reject")
        edited = sum(1 for d in decisions if d["action"] == "ApproveWithEdits")
        stats = {
            "pending": pending,
            "approved": approved,
            "rejected": rejected,
            "decided": len(decisions),
            "edit_rate": (edited / len(decisions)) if decisions else 0.0,
            "mean_ratings": {},
        }
        all_entries = [e for entries in ratings.values() for e in entries]
        for dim in RATING_DIMENSIONS:
            values = [e["ratings"][dim] for e in all_entries if dim in e["ratings"]]
            if values:
                stats["mean_ratings"][dim] = sum(values) / len(values)
        multi = {did: entries for did, entries in ratings.items() if len(entries) >= 2}
        if multi:
            n = min(len(entries) for entries in multi.values())
            kappas = {}
            for dim in RATING_DIMENSIONS:
                matrix = []
                for entries in multi.values():
                    counts = [0, 0, 0, 0]
                    for e in entries[:n]:
                        counts[e["ratings"][dim]] += 1
                    matrix.append(counts)
                kappa = fleiss_kappa(matrix)
                if kappa is not None:
                    kappas[dim] = kappa
            if kappas:
                stats["fleiss_kappa"] = kappas
        return stats

    # ------------------------------------------------------------------ loop

    def _bump_produced(self, scenario: str, delta: int) -> None:
        quota = self.quotas.get(scenario)
        if quota is not None:
            quota.produced = max(0, quota.produced + delta)

    # ------------------------------------------------------------ persistence

    def _write_quotas(self) -> None:
        if self.state_dir is None:
            return
        data = {
            q.scenario: {"target": q.target_count, "produced": q.produced}
            for q in self.quotas.values()
        }
        (self.state_dir / QUOTAS_FILE).write_text(
            json.dumps(data, ensure_ascii=False, indent=2), "utf-8"
        )

    def snapshot(self) -> None:
        """Write corpus/seed/state snapshots; the event log stays append-only."""
        if self.state_dir is None:
            return
        with self._lock:
            save_corpus(self.corpus(), self.state_dir / CORPUS_SNAPSHOT, self.strategies)
            (self.state_dir / SEEDS_SNAPSHOT).write_text(
                json.dumps(self.pool.to_dict(), ensure_ascii=False, indent=2), "utf-8"
            )
            self._write_quotas()
            state = {
                "iteration": self.iteration,
                "event_seq": self._event_seq,
                "pending": list(self.pending),
                "statuses": {did: s.value for did, s in self.statuses.items()},
                "staged": {
                    did: {
                        "record": item.record,
                        "scenario": item.scenario,
                        "issues": item.issues,
                        "duplicate_score": item.duplicate_score,
                        "enqueued_seq": item.enqueued_seq,
                    }
                    for did, item in self.staged.items()
                },
                "decisions": self.decisions,
                "ratings": self.ratings,
            }
            (self.state_dir / STATE_FILE).write_text(
                json.dumps(state, ensure_ascii=False), "utf-8"
            )

    @classmethod
    def load(
        cls,
        state_dir: str | Path,
        strategies: StrategyRegistry = STRATEGIES,
        scenarios: ScenarioRegistry = SCENARIOS,
        policy: ValidationPolicy | None = None,
    ) -> "CurationStore":
        """Restore from snapshots, then replay any event-log tail."""
        state_dir = Path(state_dir)
        store = cls(state_dir, strategies, scenarios, policy)
        snapshot_seq = 0
        state_path = state_dir / STATE_FILE
        if state_path.exists():
            state = json.loads(state_path.read_text("utf-8"))
            snapshot_seq = state.get("event_seq", 0)
            store.iteration = state.get("iteration", 0)
            store.pending = list(state.get("pending", []))
            store.statuses = {did: Status(v) for did, v in state.get("statuses", {}).items()}
            store.staged = {
                did: StagedItem(
                    record=item["record"], scenario=item["scenario"],
                    issues=item.get("issues", []),
                    duplicate_score=item.get("duplicate_score", 0.0),
                    enqueued_seq=item.get("enqueued_seq", 0),
                )
                for did, item in state.get("staged", {}).items()
            }
            store.decisions = dict(state.get("decisions", {}))
            store.ratings = {k: list(v) for k, v in state.get("ratings", {}).items()}
        corpus_path = state_dir / CORPUS_SNAPSHOT
        if corpus_path.exists():
            from .corpus import load_corpus

            for d in load_corpus(corpus_path, strategies):
                store._dialogues[d.id] = d
        seeds_path = state_dir / SEEDS_SNAPSHOT
        if seeds_path.exists():
            store.pool = SeedPool.from_dict(json.loads(seeds_path.read_text("utf-8")))
        quotas_path = state_dir / QUOTAS_FILE
        if quotas_path.exists():
            data = json.loads(quotas_path.read_text("utf-8"))
            for scenario, entry in data.items():
                if scenario not in store.scenarios:
                    store.scenarios.register(scenario)
                store.quotas[scenario] = ScenarioQuota(
                    scenario, entry["target"], entry.get("produced", 0)
                )
        events_path = state_dir / EVENTS_FILE
        if events_path.exists():
            events = [
                AuditEvent.from_json(line)
                for line in events_path.read_text("utf-8").splitlines()
                if line.strip()
            ]
            store.audit = list(events)
            store._event_seq = events[-1].seq if events else snapshot_seq
            for event in events:
                if event.seq > snapshot_seq:
                    store._apply_event(event)
        return store

    def _apply_event(self, event: AuditEvent) -> None:
        """Re-apply one logged event during recovery or full replay."""
        detail = event.detail
        did = event.dialogue_id
        kind = event.event
        if kind == "seed_imported":
            dialogue = dialogue_from_record(detail["record"], self.strategies)
            self._dialogues.setdefault(did, dialogue)
            self.pool.add(detail["scenario"], did, Origin.MANUAL)
            self.statuses[did] = Status.SEED_ELIGIBLE
        elif kind == "accepted":
            self.staged[did] = StagedItem(detail["record"], detail["scenario"])
            self.statuses[did] = Status.APPROVED
            self._bump_produced(detail["scenario"], +1)
        elif kind == "queued":
            self.staged[did] = StagedItem(
                detail["record"], detail["scenario"],
                detail.get("issues", []), detail.get("duplicate_score", 0.0),
                enqueued_seq=event.seq,
            )
            if did not in self.pending:
                self.pending.append(did)
            self.statuses[did] = Status.PENDING
            self._bump_produced(detail["scenario"], +1)
        elif kind == "rejected":
            if did:
                self.statuses[did] = Status.REJECTED
        elif kind == "approved":
            item = self.staged.get(did)
            if item is not None:
                item.record = detail["record"]
            else:
                self.staged[did] = StagedItem(detail["record"], detail["scenario"])
            if did in self.pending:
                self.pending.remove(did)
            self.statuses[did] = Status.APPROVED
            self.decisions.setdefault(did, {
                "action": detail.get("action", "Approve"),
                "reviewer": event.actor, "reason": None, "ts": event.ts,
            })
        elif kind == "rejected_by_review":
            if did in self.pending:
                self.pending.remove(did)
            self.statuses[did] = Status.REJECTED
            self._bump_produced(detail["scenario"], -1)
            self.decisions.setdefault(did, {
                "action": "Reject", "reviewer": event.actor,
                "reason": detail.get("reason"), "ts": event.ts,
            })
        elif kind == "promoted":
            if did not in self._dialogues:
                item = self.staged.get(did)
                if item is not None:
                    self._dialogues[did] = dialogue_from_record(item.record, self.strategies)
            self.pool.add(detail["scenario"], did, Origin.PROMOTED)
            self.statuses[did] = Status.SEED_ELIGIBLE
        elif kind == "rated":
            self.ratings.setdefault(did, []).append({
                "reviewer": event.actor, "ratings": detail["ratings"], "ts": event.ts,
            })
        elif kind == "iteration_finished":
            self.iteration = detail.get("iteration", self.iteration)
        # scenario_failed / generation_failed / iteration_started carry no state


def replay_events(
    events: list[AuditEvent],
    strategies: StrategyRegistry = STRATEGIES,
    scenarios: ScenarioRegistry | None = None,
) -> CurationStore:
    """Rebuild a store from an audit log alone (empty starting state)."""
    store = CurationStore(
        None, strategies, scenarios if scenarios is not None else ScenarioRegistry()
    )
    for event in events:
        store._apply_event(event)
        store._event_seq = event.seq
    return store


def run_iteration(store: CurationStore, gateway: ChatGateway, cfg: LoopConfig) -> IterationReport:
    """One pass over every scenario with remaining quota.

    A scenario that fails (no seeds, gateway down) is skipped and the others
    continue; the iteration only fails as a whole when nothing ran.
    """
    with store.lock:
        run_index = store.iteration + 1
        quotas = sorted(
            (q for q in store.quotas.values() if q.remaining > 0),
            key=lambda q: (-q.remaining, q.scenario),
        )
    report = IterationReport(iteration=run_index)
    store._record("iteration_started", "", "loop", {"iteration": run_index})
    errors: list[tuple[str, Exception]] = []
    attempted = 0

    for quota in quotas:
        scenario = quota.scenario
        count = quota.remaining
        if cfg.per_scenario_cap is not None:
            count = min(count, cfg.per_scenario_cap)
        if count < 1:
            continue
        attempted += 1
        bucket = report.scenario_bucket(scenario)
        try:
            # crc32, not hash(): string hashing is salted per process
            sub_seed = zlib.crc32(f"{cfg.rng_seed}:{run_index}:{scenario}".encode("utf-8"))
            seeds = store.select_seeds(
                scenario, cfg.seeds_per_prompt,
                rng_seed=sub_seed,
                window=cfg.seed_window,
                allow_global_fallback=cfg.allow_seed_fallback,
            )
            batch = gateway.generate(GenerationRequest(
                scenario=scenario, seeds=tuple(seeds), count=count, sampling=cfg.sampling,
            ))
        except (InsufficientSeeds, AuthError, EscorpusError) as exc:
            errors.append((scenario, exc))
            store._record("scenario_failed", "", "loop", {
                "scenario": scenario, "error": str(exc),
            })
            continue

        index = DedupIndex(store.corpus())
        for failure in batch.failures:
            report.failed += 1
            bucket["failed"] += 1
            store._record("generation_failed", "", "gateway", {
                "scenario": scenario, "request_id": failure.request_id,
                "error": failure.error, "attempts": failure.attempts,
            })
        for raw in batch.successes:
            report.generated += 1
            bucket["generated"] += 1
            verdict = validate(
                raw.raw_text, scenario, index,
                store.policy, store.strategies, store.scenarios,
            )
            if verdict.verdict is Verdict.ACCEPT:
                dialogue = replace(verdict.parsed, iteration=run_index)
                if store.accept_generated(dialogue, scenario):
                    report.accepted += 1
                    bucket["accepted"] += 1
                else:
                    report.rejected += 1
                    bucket["rejected"] += 1
            elif verdict.verdict is Verdict.NEEDS_REVIEW:
                dialogue = replace(verdict.parsed, iteration=run_index)
                store.enqueue_for_review(
                    dialogue, scenario,
                    [asdict(i) for i in verdict.issues], verdict.duplicate_score,
                )
                report.queued += 1
                bucket["queued"] += 1
            else:
                dialogue_id = verdict.parsed.id if verdict.parsed else ""
                store.reject_generated(dialogue_id, scenario, [asdict(i) for i in verdict.issues])
                report.rejected += 1
                bucket["rejected"] += 1

    if attempted and len(errors) == attempted:
        raise LoopFailure(
            "every scenario failed: " + "; ".join(f"{s}: {e}" for s, e in errors)
        )
    with store.lock:
        store.iteration = run_index
        store._record("iteration_finished", "", "loop", {
            "iteration": run_index,
            "generated": report.generated, "accepted": report.accepted,
            "queued": report.queued, "rejected": report.rejected, "failed": report.failed,
        })
        store.snapshot()
    return report


def _check_ratings(ratings: dict[str, int]) -> None:
    missing = [d for d in RATING_DIMENSIONS if d not in ratings]
    if missing:
        raise ValueError(f"ratings missing dimensions: {missing}")
    for dim in RATING_DIMENSIONS:
        value = ratings[dim]
        if not isinstance(value, int) or not 0 <= value <= 3:
            raise ValueError(f"rating {dim} must be an integer in 0..3, got {value!r}")
