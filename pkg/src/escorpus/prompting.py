"""Self-chat prompt construction.

The template body ships as a text asset so corpus provenance stays auditable;
the placeholders are the literal strings ``${SEED EXAMPLE}`` and ``${SCENE}``.
Rendering is pure string substitution, so build_prompt is deterministic.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .corpus import Dialogue, serialize_dialogue
from .errors import EmptySeeds, UnknownScenario
from .registry import SCENARIOS, STRATEGIES, ScenarioRegistry, StrategyRegistry

SEED_PLACEHOLDER = "${SEED EXAMPLE}"
SCENE_PLACEHOLDER = "${SCENE}"


@dataclass(frozen=True)
class PromptTemplate:
    body: str

    def __post_init__(self):
        for placeholder in (SEED_PLACEHOLDER, SCENE_PLACEHOLDER):
            if placeholder not in self.body:
                raise ValueError(f"template body lacks placeholder {placeholder!r}")

    def render(self, seed_block: str, scene: str) -> str:
        return self.body.replace(SEED_PLACEHOLDER, seed_block).replace(SCENE_PLACEHOLDER, scene)


@lru_cache(maxsize=1)
def default_template() -> PromptTemplate:
    body = resources.files("escorpus.assets").joinpath("self_chat_template.txt").read_text("utf-8")
    return PromptTemplate(body)


def build_prompt(
    seeds: Sequence[Dialogue],
    scenario: str,
    template: PromptTemplate | None = None,
    scenarios: ScenarioRegistry = SCENARIOS,
    strategies: StrategyRegistry = STRATEGIES,
    strict: bool = True,
) -> str:
    """Render the self-chat prompt for one scenario with in-context seeds.

    Seeds appear in the given order, each as one serialized record line. With
    strict on, the scenario must already be registered.
    """
    if not seeds:
        raise EmptySeeds("at least one seed dialogue is required")
    if strict and scenario not in scenarios:
        raise UnknownScenario(f"unknown scenario: {scenario!r}")
    if template is None:
        template = default_template()
    seed_block = "\n".join(serialize_dialogue(seed, strategies) for seed in seeds)
    return template.render(seed_block, scenario)
