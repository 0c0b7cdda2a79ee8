"""Toolchain for building, curating, and analyzing strategy-annotated
emotional-support dialogue corpora."""

from .corpus import (
    Corpus,
    Dialogue,
    Provenance,
    Speaker,
    Utterance,
    load_corpus,
    parse_dialogue,
    save_corpus,
    serialize_dialogue,
)
from .registry import (
    SCENARIOS,
    STRATEGIES,
    Scenario,
    ScenarioRegistry,
    Strategy,
    StrategyRegistry,
    default_scenarios,
    default_strategies,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Dialogue",
    "Provenance",
    "Scenario",
    "ScenarioRegistry",
    "Speaker",
    "Strategy",
    "StrategyRegistry",
    "SCENARIOS",
    "STRATEGIES",
    "Utterance",
    "default_scenarios",
    "default_strategies",
    "load_corpus",
    "parse_dialogue",
    "save_corpus",
    "serialize_dialogue",
    "__version__",
]
