"""Provider-agnostic chat-completion gateway.

Speaks the common chat wire shape (messages list in, text out) over HTTP so
any compatible provider can serve it, and a local fixture-fed responder can
stand in for offline runs. Requests fan out over a bounded worker pool;
transient failures retry with exponential backoff; per-item failures are
returned, never dropped.
"""

import itertools
import json
import os
import threading
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Dialogue
from .errors import AuthError
from .prompting import PromptTemplate, build_prompt
from .registry import SCENARIOS, STRATEGIES, ScenarioRegistry, StrategyRegistry

RETRYABLE_STATUSES = frozenset({408, 429, 500, 502, 503, 504})
AUTH_STATUSES = frozenset({401, 403})


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 1.0
    max_tokens: int = 2048


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff: float = 0.5  # seconds; doubles per attempt

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class Pricing:
    input_per_1k: float = 0.0015
    output_per_1k: float = 0.002


@dataclass(frozen=True)
class GatewayConfig:
    endpoint: str = "http://localhost:8080/v1/chat/completions"
    auth_env: str = "ESCORPUS_API_KEY"
    model: str = "gpt-3.5-turbo"
    max_concurrency: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    rate_limit_per_min: float = 60.0
    pricing: Pricing = field(default_factory=Pricing)

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if self.rate_limit_per_min <= 0:
            raise ValueError("rate_limit_per_min must be > 0")


@dataclass(frozen=True)
class TokenUsage:
    input: int = 0
    output: int = 0


@dataclass(frozen=True)
class GenerationRequest:
    scenario: str
    seeds: tuple[Dialogue, ...]
    count: int = 1
    sampling: SamplingParams = field(default_factory=SamplingParams)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")


@dataclass(frozen=True)
class RawGeneration:
    request_id: str
    scenario: str
    raw_text: str
    usage: TokenUsage
    latency: float
    attempts: int = 1


@dataclass(frozen=True)
class GenerationFailure:
    request_id: str
    scenario: str
    error: str
    attempts: int
    status: int | None = None


@dataclass(frozen=True)
class BatchResult:
    requested: int
    successes: tuple[RawGeneration, ...]
    failures: tuple[GenerationFailure, ...]

    def __post_init__(self):
        if len(self.successes) + len(self.failures) != self.requested:
            raise ValueError("batch accounting mismatch: successes + failures != requested")


def estimate_cost(n_dialogues: int, avg_tokens: TokenUsage, pricing: Pricing) -> float:
    """Linear cost estimate in the pricing currency. Advisory only."""
    if n_dialogues < 0:
        raise ValueError("n_dialogues must be non-negative")
    per_dialogue = (avg_tokens.input * pricing.input_per_1k
                    + avg_tokens.output * pricing.output_per_1k) / 1000.0
    return n_dialogues * per_dialogue


class RateLimiter:
    """Spaces calls at least 60/rate_per_min seconds apart. Thread-safe."""

    def __init__(self, rate_per_min: float,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self._interval = 60.0 / rate_per_min
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_free = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            wait = max(0.0, self._next_free - now)
            self._next_free = max(now, self._next_free) + self._interval
        if wait > 0:
            self._sleep(wait)


class TransportFailure(Exception):
    """Network-level failure before an HTTP status exists (retryable)."""


class HttpResponder:
    """POSTs provider-shaped JSON to the configured endpoint."""

    def __init__(self, config: GatewayConfig, timeout: float = 120.0):
        self._config = config
        self._timeout = timeout

    def send(self, payload: dict) -> tuple[int, dict]:
        import httpx

        token = os.environ.get(self._config.auth_env, "")
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        try:
            response = httpx.post(
                self._config.endpoint, json=payload, headers=headers, timeout=self._timeout
            )
        except httpx.HTTPError as exc:
            raise TransportFailure(str(exc)) from exc
        try:
            body = response.json()
        except ValueError:
            body = {}
        return response.status_code, body


class FixtureResponder:
    """Deterministic local responder fed from a fixture directory.

    Fixtures are the *.txt files in the directory (sorted by name), or the
    lines of a fixtures.jsonl file with {"text": ...} records. Responses
    cycle through the fixtures in order, which keeps mock runs reproducible.
    """

    def __init__(self, fixture_dir: str | Path | None = None, texts: Sequence[str] | None = None):
        if texts is not None:
            fixtures = list(texts)
        elif fixture_dir is not None:
            fixtures = self._load_dir(Path(fixture_dir))
        else:
            raise ValueError("FixtureResponder needs a fixture_dir or explicit texts")
        if not fixtures:
            raise ValueError("no fixtures found")
        self._fixtures = fixtures
        self._calls = itertools.count()
        self._lock = threading.Lock()

    @staticmethod
    def _load_dir(fixture_dir: Path) -> list[str]:
        fixtures: list[str] = []
        jsonl = fixture_dir / "fixtures.jsonl"
        if jsonl.exists():
            for line in jsonl.read_text("utf-8").splitlines():
                if line.strip():
                    fixtures.append(json.loads(line)["text"])
        for path in sorted(fixture_dir.glob("*.txt")):
            fixtures.append(path.read_text("utf-8"))
        return fixtures

    def send(self, payload: dict) -> tuple[int, dict]:
        with self._lock:
            index = next(self._calls)
        text = self._fixtures[index % len(self._fixtures)]
        prompt = payload["messages"][0]["content"]
        body = {
            "choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {
                "prompt_tokens": len(prompt.split()),
                "completion_tokens": len(text.split()),
            },
        }
        return 200, body


class ChatGateway:
    """Issues chat-completion batches under concurrency and rate bounds."""

    def __init__(
        self,
        config: GatewayConfig,
        responder=None,
        scenarios: ScenarioRegistry = SCENARIOS,
        strategies: StrategyRegistry = STRATEGIES,
        template: PromptTemplate | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._responder = responder if responder is not None else HttpResponder(config)
        self._scenarios = scenarios
        self._strategies = strategies
        self._template = template
        self._clock = clock
        self._sleep = sleep
        self._limiter = RateLimiter(config.rate_limit_per_min, clock=clock, sleep=sleep)
        self._counter = itertools.count(1)
        self._counter_lock = threading.Lock()

    def generate(self, request: GenerationRequest) -> BatchResult:
        """Run one batch; returns every outcome, success or failure.

        AuthError aborts the whole batch immediately (bad credentials will not
        get better by retrying); everything else is reported per item.
        """
        prompt = build_prompt(
            list(request.seeds), request.scenario,
            template=self._template, scenarios=self._scenarios,
            strategies=self._strategies, strict=False,
        )
        payload_base = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": request.sampling.temperature,
            "max_tokens": request.sampling.max_tokens,
        }
        request_ids = [self._next_request_id(request.scenario) for _ in range(request.count)]
        with ThreadPoolExecutor(max_workers=self.config.max_concurrency) as pool:
            outcomes = list(pool.map(
                lambda rid: self._one_call(rid, request.scenario, dict(payload_base)),
                request_ids,
            ))
        auth_errors = [o for o in outcomes if isinstance(o, AuthError)]
        if auth_errors:
            raise auth_errors[0]
        successes = tuple(o for o in outcomes if isinstance(o, RawGeneration))
        failures = tuple(o for o in outcomes if isinstance(o, GenerationFailure))
        return BatchResult(request.count, successes, failures)

    def _next_request_id(self, scenario: str) -> str:
        with self._counter_lock:
            n = next(self._counter)
        return f"req-{n:06d}"

    def _one_call(self, request_id: str, scenario: str, payload: dict):
        retry = self.config.retry
        start = self._clock()
        last_status: int | None = None
        last_error = "unknown"
        for attempt in range(1, retry.max_attempts + 1):
            self._limiter.acquire()
            try:
                status, body = self._responder.send(payload)
            except TransportFailure as exc:
                last_status, last_error = None, str(exc)
            else:
                if status == 200:
                    return self._success(request_id, scenario, body, start, attempt)
                if status in AUTH_STATUSES:
                    return AuthError(f"gateway returned {status} for {request_id}")
                last_status, last_error = status, f"HTTP {status}"
                if status not in RETRYABLE_STATUSES:
                    break
            if attempt < retry.max_attempts:
                self._sleep(retry.base_backoff * (2 ** (attempt - 1)))
        kind = "rate limited" if last_status == 429 else "provider error"
        return GenerationFailure(
            request_id, scenario, f"{kind}: {last_error}",
            attempts=min(attempt, retry.max_attempts), status=last_status,
        )

    def _success(self, request_id: str, scenario: str, body: dict,
                 start: float, attempts: int) -> RawGeneration | GenerationFailure:
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            return GenerationFailure(
                request_id, scenario, "provider error: malformed response body",
                attempts=attempts, status=200,
            )
        usage = body.get("usage") or {}
        return RawGeneration(
            request_id=request_id,
            scenario=scenario,
            raw_text=text,
            usage=TokenUsage(
                input=int(usage.get("prompt_tokens", 0)),
                output=int(usage.get("completion_tokens", 0)),
            ),
            latency=self._clock() - start,
            attempts=attempts,
        )


def generate(request: GenerationRequest, cfg: GatewayConfig, responder=None, **kwargs) -> BatchResult:
    """One-shot convenience wrapper around ChatGateway.generate."""
    return ChatGateway(cfg, responder=responder, **kwargs).generate(request)
