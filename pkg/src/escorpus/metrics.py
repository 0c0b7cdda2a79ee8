"""Automatic response-quality metrics over candidate/reference token pairs.

All metrics consume the shared metric tokenizer (lowercase, punctuation
stripped, whitespace split) and return values in [0, 1]; multiply by 100 at
presentation time only.

Conventions pinned down here:

* BLEU is corpus-level: clipped modified n-gram precisions for orders 1..n
  with uniform weights, geometric mean, times brevity penalty
  min(1, e^(1 - r/c)); a zero precision at any order zeroes the score.
  A smoothed sentence-level variant exists behind a flag for diagnostics.
* ROUGE-L is LCS-based F1 (beta = 1); corpus score is the mean F over pairs.
* This is exact-match "METEOR-exact": one-to-one unigram alignment chosen to
  minimize the chunk count among maximum-cardinality alignments;
  F_mean = 10PR/(R+9P), penalty = 0.5 * (chunks/m)^3, score uses (1-penalty).
  No stemming or synonym tables.
* Distinct-n is unique n-grams over total n-gram occurrences, pooled across
  responses.
* Vector extrema keeps, per dimension, the value of largest absolute
  magnitude (sign preserved), skips out-of-vocabulary tokens, and compares by
  cosine similarity clamped to [-1, 1].
"""

import math
import warnings
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AllOOV, DimensionMismatch, EmptyInput, LengthMismatch, NoNgrams, UnreadableFile
from .textnorm import metric_tokens, ngrams

TokenSeq = list[str]

tokenize = metric_tokens


# ------------------------------------------------------------------ BLEU ----

def _modified_precision(candidates: Sequence[TokenSeq], references: Sequence[TokenSeq],
                        order: int) -> tuple[int, int]:
    clipped = 0
    total = 0
    for cand, ref in zip(candidates, references):
        cand_counts = Counter(ngrams(cand, order))
        ref_counts = Counter(ngrams(ref, order))
        total += sum(cand_counts.values())
        clipped += sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    return clipped, total


def bleu_n(candidates: Sequence[TokenSeq], references: Sequence[TokenSeq],
           n: int, smooth: bool = False) -> float:
    """Corpus-level BLEU-n with uniform weights over orders 1..n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(candidates) != len(references):
        raise LengthMismatch(
            f"{len(candidates)} candidates vs {len(references)} references"
        )
    if not candidates:
        raise EmptyInput("no candidate/reference pairs")
    c = sum(len(cand) for cand in candidates)
    r = sum(len(ref) for ref in references)
    if c == 0:
        return 0.0
    log_sum = 0.0
    for order in range(1, n + 1):
        clipped, total = _modified_precision(candidates, references, order)
        if smooth and order > 1:
            clipped, total = clipped + 1, total + 1
        if clipped == 0 or total == 0:
            return 0.0
        log_sum += math.log(clipped / total)
    bp = min(1.0, math.exp(1.0 - r / c))
    return bp * math.exp(log_sum / n)


def sentence_bleu_n(candidate: TokenSeq, reference: TokenSeq, n: int,
                    smooth: bool = True) -> float:
    """Single-pair diagnostic variant; smoothed by default so sparse overlap
    does not zero the whole score."""
    return bleu_n([candidate], [reference], n, smooth=smooth)


# --------------------------------------------------------------- ROUGE-L ----

@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f: float


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[-1]))
        prev = curr
    return prev[-1]


def rouge_l(candidate: TokenSeq, reference: TokenSeq) -> RougeScore:
    """LCS precision/recall/F1 for one pair."""
    if not candidate or not reference:
        raise EmptyInput("candidate and reference must be non-empty")
    lcs = _lcs_length(candidate, reference)
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    f = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return RougeScore(precision, recall, f)


def corpus_rouge_l(candidates: Sequence[TokenSeq], references: Sequence[TokenSeq]) -> float:
    if len(candidates) != len(references):
        raise LengthMismatch(
            f"{len(candidates)} candidates vs {len(references)} references"
        )
    if not candidates:
        raise EmptyInput("no candidate/reference pairs")
    return sum(rouge_l(c, r).f for c, r in zip(candidates, references)) / len(candidates)


# ---------------------------------------------------------------- METEOR ----

_SEARCH_NODE_BUDGET = 200_000


def _greedy_alignment_chunks(candidate: TokenSeq, reference: TokenSeq,
                             required: dict[str, int]) -> int:
    """Upper bound on min chunks: match the first required occurrences of each
    word left-to-right, preferring the slot that continues the current run."""
    ref_slots: dict[str, list[int]] = {}
    for j, w in enumerate(reference):
        if w in required:
            ref_slots.setdefault(w, []).append(j)
    used: set[int] = set()
    remaining = dict(required)
    chunks = 0
    last: tuple[int, int] | None = None
    for i, w in enumerate(candidate):
        if remaining.get(w, 0) <= 0:
            continue
        slots = [j for j in ref_slots[w] if j not in used]
        pick = None
        if last is not None and i == last[0] + 1 and (last[1] + 1) in slots:
            pick = last[1] + 1
        if pick is None:
            pick = slots[0]
        if last is None or i != last[0] + 1 or pick != last[1] + 1:
            chunks += 1
        used.add(pick)
        remaining[w] -= 1
        last = (i, pick)
    return chunks


def _min_chunks(candidate: TokenSeq, reference: TokenSeq) -> tuple[int, int]:
    """(m, chunks): max one-to-one exact matches and the fewest chunks
    realizing them. Falls back to a greedy alignment past the node budget."""
    cand_counts = Counter(candidate)
    ref_counts = Counter(reference)
    required = {
        w: min(cand_counts[w], ref_counts[w])
        for w in cand_counts if w in ref_counts
    }
    m = sum(required.values())
    if m == 0:
        return 0, 0

    best = [_greedy_alignment_chunks(candidate, reference, dict(required))]

    ref_slots: dict[str, list[int]] = {}
    for j, w in enumerate(reference):
        if w in required:
            ref_slots.setdefault(w, []).append(j)
    positions = [i for i, w in enumerate(candidate) if w in required]
    later = {w: 0 for w in required}
    later_counts: list[dict[str, int]] = []
    # later_counts[t][w]: occurrences of w in candidate at or after positions[t]
    for i in reversed(positions):
        later = dict(later)
        later[candidate[i]] = later.get(candidate[i], 0) + 1
        later_counts.append(later)
    later_counts.reverse()

    nodes = [0]

    def search(t: int, remaining: dict[str, int], used: frozenset[int],
               last: tuple[int, int] | None, chunks: int) -> None:
        if chunks >= best[0]:
            return
        if nodes[0] > _SEARCH_NODE_BUDGET:
            return
        nodes[0] += 1
        if t == len(positions):
            if all(v == 0 for v in remaining.values()):
                best[0] = chunks
            return
        i = positions[t]
        w = candidate[i]
        need = remaining[w]
        if need > 0:
            extends = []
            others = []
            for j in ref_slots[w]:
                if j in used:
                    continue
                if last is not None and i == last[0] + 1 and j == last[1] + 1:
                    extends.append(j)
                else:
                    others.append(j)
            for j in extends + others:
                cost = 0 if (last is not None and i == last[0] + 1 and j == last[1] + 1) else 1
                next_remaining = dict(remaining)
                next_remaining[w] = need - 1
                search(t + 1, next_remaining, used | {j}, (i, j), chunks + cost)
        # skip this occurrence if enough later ones remain to cover the need
        if later_counts[t][w] - 1 >= need:
            search(t + 1, remaining, used, last, chunks)

    search(0, dict(required), frozenset(), None, 0)
    return m, best[0]


def meteor(candidate: TokenSeq, reference: TokenSeq) -> float:
    """Exact-match unigram score with the fragmentation penalty."""
    if not candidate or not reference:
        raise EmptyInput("candidate and reference must be non-empty")
    m, chunks = _min_chunks(candidate, reference)
    if m == 0:
        return 0.0
    precision = m / len(candidate)
    recall = m / len(reference)
    f_mean = 10 * precision * recall / (recall + 9 * precision)
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1.0 - penalty)


def corpus_meteor(candidates: Sequence[TokenSeq], references: Sequence[TokenSeq]) -> float:
    if len(candidates) != len(references):
        raise LengthMismatch(
            f"{len(candidates)} candidates vs {len(references)} references"
        )
    if not candidates:
        raise EmptyInput("no candidate/reference pairs")
    return sum(meteor(c, r) for c, r in zip(candidates, references)) / len(candidates)


# ------------------------------------------------------------- distinct-n ---

def distinct_n(responses: Sequence[TokenSeq], n: int) -> float:
    """Unique n-grams over total n-gram occurrences, pooled across responses."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seen: set[tuple[str, ...]] = set()
    total = 0
    for response in responses:
        grams = ngrams(response, n)
        total += len(grams)
        seen.update(grams)
    if total == 0:
        raise NoNgrams(f"no {n}-grams in any response")
    return len(seen) / total


# --------------------------------------------------------- vector extrema ---

@dataclass
class EmbeddingTable:
    dimension: int
    vectors: dict[str, np.ndarray]

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read a text embedding file: token then D floats per line.

    An optional leading "<count> <dim>" header is skipped. Duplicate tokens
    keep their first vector (with a warning).
    """
    path = Path(path)
    try:
        lines = path.read_text("utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"cannot read embeddings from {path}: {exc}") from exc
    vectors: dict[str, np.ndarray] = {}
    dimension = 0
    start = 0
    if lines:
        head = lines[0].split()
        if len(head) == 2 and all(p.lstrip("+-").isdigit() for p in head):
            start = 1
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split()
        token, values = parts[0], parts[1:]
        try:
            vector = np.asarray([float(v) for v in values], dtype=np.float64)
        except ValueError as exc:
            raise DimensionMismatch(
                f"line {lineno}: non-numeric vector component", lineno
            ) from exc
        if dimension == 0:
            if vector.size == 0:
                raise DimensionMismatch(f"line {lineno}: empty vector", lineno)
            dimension = vector.size
        elif vector.size != dimension:
            raise DimensionMismatch(
                f"line {lineno}: expected {dimension} values, got {vector.size}", lineno
            )
        if token in vectors:
            warnings.warn(f"duplicate embedding token {token!r}; keeping first")
            continue
        vectors[token] = vector
    return EmbeddingTable(dimension, vectors)


def _extrema_vector(tokens: TokenSeq, table: EmbeddingTable) -> np.ndarray:
    in_vocab = [table.vectors[t] for t in tokens if t in table.vectors]
    if not in_vocab:
        raise AllOOV("no in-vocabulary token")
    stacked = np.stack(in_vocab)
    idx = np.argmax(np.abs(stacked), axis=0)
    return stacked[idx, np.arange(stacked.shape[1])]


def vector_extrema(candidate: TokenSeq, reference: TokenSeq, table: EmbeddingTable) -> float:
    """Cosine similarity of the two extrema sentence vectors, in [-1, 1]."""
    v1 = _extrema_vector(candidate, table)
    v2 = _extrema_vector(reference, table)
    if np.array_equal(v1, v2):
        return 0.0 if not v1.any() else 1.0
    denom = float(np.linalg.norm(v1) * np.linalg.norm(v2))
    if denom == 0.0:
        return 0.0
    return float(np.clip(np.dot(v1, v2) / denom, -1.0, 1.0))


def corpus_vector_extrema(candidates: Sequence[TokenSeq], references: Sequence[TokenSeq],
                          table: EmbeddingTable, skip_oov_pairs: bool = True) -> float:
    """Mean extrema similarity; pairs that are fully out-of-vocabulary are
    skipped when skip_oov_pairs is on, otherwise AllOOV propagates."""
    if len(candidates) != len(references):
        raise LengthMismatch(
            f"{len(candidates)} candidates vs {len(references)} references"
        )
    if not candidates:
        raise EmptyInput("no candidate/reference pairs")
    scores = []
    for cand, ref in zip(candidates, references):
        try:
            scores.append(vector_extrema(cand, ref, table))
        except AllOOV:
            if not skip_oov_pairs:
                raise
    if not scores:
        raise AllOOV("every pair was fully out of vocabulary")
    return sum(scores) / len(scores)


# ------------------------------------------------------------------ report --

@dataclass
class MetricReport:
    meteor: float
    bleu2: float
    bleu4: float
    rouge_l: float
    distinct1: float
    distinct2: float
    distinct3: float
    extrema: float | None = None
    n_pairs: int = 0

    def to_record(self, scale_100: bool = False) -> dict:
        factor = 100.0 if scale_100 else 1.0
        record = {
            "meteor": self.meteor * factor,
            "bleu2": self.bleu2 * factor,
            "bleu4": self.bleu4 * factor,
            "rouge_l": self.rouge_l * factor,
            "distinct1": self.distinct1 * factor,
            "distinct2": self.distinct2 * factor,
            "distinct3": self.distinct3 * factor,
            "n_pairs": self.n_pairs,
        }
        record["extrema"] = self.extrema * factor if self.extrema is not None else None
        return record


def evaluate_pairs(candidates: Sequence[TokenSeq], references: Sequence[TokenSeq],
                   table: EmbeddingTable | None = None) -> MetricReport:
    """All metrics over parallel candidate/reference token lists."""
    if len(candidates) != len(references):
        raise LengthMismatch(
            f"{len(candidates)} candidates vs {len(references)} references"
        )
    if not candidates:
        raise EmptyInput("no candidate/reference pairs")
    distincts = []
    for n in (1, 2, 3):
        try:
            distincts.append(distinct_n(candidates, n))
        except NoNgrams:
            distincts.append(0.0)
    extrema = None
    if table is not None:
        extrema = corpus_vector_extrema(candidates, references, table)
    return MetricReport(
        meteor=corpus_meteor(candidates, references),
        bleu2=bleu_n(candidates, references, 2),
        bleu4=bleu_n(candidates, references, 4),
        rouge_l=corpus_rouge_l(candidates, references),
        distinct1=distincts[0],
        distinct2=distincts[1],
        distinct3=distincts[2],
        extrema=extrema,
        n_pairs=len(candidates),
    )
