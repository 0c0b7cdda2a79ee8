"""Shared text normalization.

Two token rules live here and everything in the package goes through them:

* ``stat_tokens``   - length unit for corpus statistics: whitespace split,
  punctuation-only tokens dropped, case preserved.
* ``metric_tokens`` - the evaluation-metric pipeline: lowercase, punctuation
  characters removed, whitespace split. All metrics consume this one, so
  swapping the tokenizer moves every metric consistently.
"""

from collections import Counter
from collections.abc import Sequence

_PUNCT = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")


def stat_tokens(text: str) -> list[str]:
    """Whitespace tokens minus those containing no alphanumeric character."""
    return [tok for tok in text.split() if any(ch.isalnum() for ch in tok)]


def metric_tokens(text: str) -> list[str]:
    """Lowercased tokens with punctuation characters stripped out."""
    cleaned = "".join(ch for ch in text.lower() if ch not in _PUNCT)
    return cleaned.split()


def ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def trigram_counts(tokens: Sequence[str]) -> Counter:
    """Trigram multiset of a token stream, as a Counter."""
    return Counter(ngrams(tokens, 3))
