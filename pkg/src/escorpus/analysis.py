"""Corpus analytics: aggregate statistics, strategy flow, rater agreement.

Positions use 1-based utterance indexes over all turns (user and assistant);
an assistant turn at index k of an N-turn dialogue sits at position k/N in
(0, 1]. Phase bins are the half-open intervals ((b-1)/n, b/n], so the final
turn lands in the last bin and every assistant turn lands in exactly one bin.
"""

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Speaker
from .errors import EmptyCorpus, UnequalRaterCounts
from .registry import STRATEGIES, StrategyRegistry
from .textnorm import stat_tokens


@dataclass(frozen=True)
class PhasePoint:
    strategy: str  # abbreviation
    k: int         # 1-based utterance index
    n: int         # dialogue utterance count

    @property
    def position(self) -> float:
        return self.k / self.n


@dataclass
class StatReport:
    n_dialogues: int
    n_utterances: int
    avg_dialogue_len: float
    avg_utterance_len: float
    strategy_counts: dict[str, int]
    strategy_proportions: dict[str, float]
    scenario_counts: dict[str, int]
    scenario_proportions: dict[str, float]
    total_strategy_labels: int

    def to_record(self) -> dict:
        return {
            "n_dialogues": self.n_dialogues,
            "n_utterances": self.n_utterances,
            "avg_dialogue_len": self.avg_dialogue_len,
            "avg_utterance_len": self.avg_utterance_len,
            "total_strategy_labels": self.total_strategy_labels,
            "strategies": {
                name: {"count": self.strategy_counts[name],
                       "proportion": self.strategy_proportions[name]}
                for name in self.strategy_counts
            },
            "scenarios": {
                name: {"count": self.scenario_counts[name],
                       "proportion": self.scenario_proportions[name]}
                for name in self.scenario_counts
            },
        }


def corpus_stats(corpus: Corpus, strategies: StrategyRegistry = STRATEGIES) -> StatReport:
    """Aggregate counts plus per-strategy and per-scenario distributions."""
    if len(corpus) == 0:
        raise EmptyCorpus("cannot compute statistics of an empty corpus")
    n_dialogues = len(corpus)
    n_utterances = 0
    token_total = 0
    strategy_counter: Counter = Counter()
    scenario_counter: Counter = Counter()
    for d in corpus:
        n_utterances += d.n_utterances
        scenario_counter[d.scene] += 1
        for utt in d.content:
            token_total += len(stat_tokens(utt.text))
            if utt.speaker is Speaker.AI and utt.strategy:
                strategy_counter[utt.strategy] += 1
    total_labels = sum(strategy_counter.values())
    strategy_counts = {s.name: strategy_counter.get(s.name, 0) for s in strategies}
    strategy_props = {
        name: (count / total_labels if total_labels else 0.0)
        for name, count in strategy_counts.items()
    }
    scenario_counts = dict(sorted(scenario_counter.items(), key=lambda kv: (-kv[1], kv[0])))
    scenario_props = {name: count / n_dialogues for name, count in scenario_counts.items()}
    return StatReport(
        n_dialogues=n_dialogues,
        n_utterances=n_utterances,
        avg_dialogue_len=n_utterances / n_dialogues,
        avg_utterance_len=token_total / n_utterances,
        strategy_counts=strategy_counts,
        strategy_proportions=strategy_props,
        scenario_counts=scenario_counts,
        scenario_proportions=scenario_props,
        total_strategy_labels=total_labels,
    )


def phase_points(corpus: Corpus, strategies: StrategyRegistry = STRATEGIES) -> list[PhasePoint]:
    """One point per assistant utterance: (strategy, k, N)."""
    abbrev = {s.name: s.abbreviation for s in strategies}
    points: list[PhasePoint] = []
    for d in corpus:
        n = d.n_utterances
        for k, utt in enumerate(d.content, start=1):
            if utt.speaker is Speaker.AI and utt.strategy:
                points.append(PhasePoint(abbrev[utt.strategy], k, n))
    return points


@dataclass
class PhaseDistribution:
    strategies: list[str]          # abbreviations, registry order
    n_bins: int
    counts: np.ndarray             # [n_strategies x n_bins] ints
    proportions: np.ndarray        # columns sum to 1 where the bin is non-empty
    bin_totals: np.ndarray

    def to_record(self) -> dict:
        return {
            "n_bins": self.n_bins,
            "strategies": self.strategies,
            "bin_totals": self.bin_totals.tolist(),
            "counts": self.counts.tolist(),
            "proportions": self.proportions.tolist(),
        }


def _bin_index(k: int, n: int, n_bins: int) -> int:
    """0-based bin for position k/n under ((b-1)/n_bins, b/n_bins] edges.

    Integer ceil of k*n_bins/n, computed exactly (no float edge cases).
    """
    return (k * n_bins + n - 1) // n - 1


def phase_distribution(
    corpus: Corpus, n_bins: int = 4, strategies: StrategyRegistry = STRATEGIES
) -> PhaseDistribution:
    """Distribution of assistant strategies across dialogue-progress bins."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if len(corpus) == 0:
        raise EmptyCorpus("cannot compute phase distribution of an empty corpus")
    abbrevs = [s.abbreviation for s in strategies]
    row = {a: i for i, a in enumerate(abbrevs)}
    counts = np.zeros((len(abbrevs), n_bins), dtype=np.int64)
    for point in phase_points(corpus, strategies):
        counts[row[point.strategy], _bin_index(point.k, point.n, n_bins)] += 1
    bin_totals = counts.sum(axis=0)
    proportions = np.zeros_like(counts, dtype=np.float64)
    nonzero = bin_totals > 0
    proportions[:, nonzero] = counts[:, nonzero] / bin_totals[nonzero]
    return PhaseDistribution(abbrevs, n_bins, counts, proportions, bin_totals)


def merge_adjacent(sequence: Sequence[str]) -> list[str]:
    """Collapse runs of equal adjacent entries; idempotent."""
    merged: list[str] = []
    for item in sequence:
        if not merged or merged[-1] != item:
            merged.append(item)
    return merged


@dataclass(frozen=True)
class TransitionStat:
    sequence: tuple[str, ...]
    count: int
    permille: float

    def label(self) -> str:
        return " -> ".join(self.sequence)


def transition_stats(
    corpus: Corpus, hops: int, strategies: StrategyRegistry = STRATEGIES
) -> list[TransitionStat]:
    """Ranked contiguous strategy windows after merging adjacent repeats.

    The denominator is the total number of windows of the given hop length
    across the corpus; proportions are per mille. Ties rank lexicographically.
    """
    if hops not in (3, 4, 5):
        raise ValueError(f"hops must be one of 3, 4, 5; got {hops}")
    abbrev = {s.name: s.abbreviation for s in strategies}
    window_counter: Counter = Counter()
    total = 0
    for d in corpus:
        seq = merge_adjacent([abbrev[s] for s in d.ai_strategies()])
        for i in range(len(seq) - hops + 1):
            window_counter[tuple(seq[i:i + hops])] += 1
            total += 1
    if total == 0:
        return []
    ranked = sorted(window_counter.items(), key=lambda kv: (-kv[1], kv[0]))
    return [
        TransitionStat(seq, count, 1000.0 * count / total)
        for seq, count in ranked
    ]


def fleiss_kappa(ratings: Sequence[Sequence[int]]) -> float | None:
    """Chance-corrected multi-rater agreement (Fleiss 1971).

    ratings[i][j] is how many raters put item i into category j; every item
    must have the same rater total n >= 2. Returns a value in [-1, 1], or
    None when expected agreement is 1 (all ratings in one category), where
    the statistic is undefined.
    """
    matrix = [list(row) for row in ratings]
    if not matrix:
        raise UnequalRaterCounts("ratings matrix is empty")
    n_categories = len(matrix[0])
    if any(len(row) != n_categories for row in matrix):
        raise UnequalRaterCounts("all rows must have the same number of categories")
    totals = {sum(row) for row in matrix}
    if len(totals) != 1:
        raise UnequalRaterCounts(f"items have unequal rater counts: {sorted(totals)}")
    n = totals.pop()
    if n < 2:
        raise UnequalRaterCounts("need at least 2 raters per item")
    n_items = len(matrix)

    # per-item agreement: fraction of concordant rater pairs
    p_bar = sum(
        (sum(c * c for c in row) - n) / (n * (n - 1)) for row in matrix
    ) / n_items
    # chance agreement from the marginal category distribution
    marginals = [
        sum(row[j] for row in matrix) / (n_items * n) for j in range(n_categories)
    ]
    p_e = sum(p * p for p in marginals)
    if p_e >= 1.0:
        return None
    return (p_bar - p_e) / (1.0 - p_e)
