"""Caption quality metrics sharing one tokenizer: BLEU, ROUGE, METEOR.

BLEU is reported on a 0-100 scale, the others on 0-1. ROUGE scores are
recall by default (F1 sits behind `mode="f1"`). METEOR aligns unigrams
exactly first, then by Porter stem; no synonym stage.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .stem import stem
from .text import tokenize

METRIC_NAMES = ("BLEU", "ROUGE-1", "ROUGE-2", "ROUGE-L", "METEOR")

_METEOR_ALPHA = 0.9
_METEOR_BETA = 3.0
_METEOR_GAMMA = 0.5


class MetricUndefinedError(ValueError):
    """The reference is too short for the requested score."""


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped_matches(cand: Sequence[str], ref: Sequence[str], n: int) -> int:
    ref_counts = _ngram_counts(ref, n)
    return sum(
        min(count, ref_counts[gram])
        for gram, count in _ngram_counts(cand, n).items()
    )


def _bleu_from_stats(
    matches: list[int], totals: list[int], cand_len: int, ref_len: int
) -> float:
    """Shared by sentence and corpus BLEU; stats are per order 1..4."""
    if cand_len == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        m, t = matches[n - 1], totals[n - 1]
        if n == 1:
            if m == 0:
                return 0.0
            p = m / t
        elif m == 0:
            # Add-one smoothing, applied only to zero higher-order counts.
            p = 1.0 / (t + 1)
        else:
            p = m / t
        log_sum += math.log(p)
    brevity = 1.0 if cand_len > ref_len else math.exp(1 - ref_len / cand_len)
    return 100.0 * brevity * math.exp(log_sum / 4)


def bleu(candidate: str, reference: str) -> float:
    """Sentence BLEU over orders 1-4 with brevity penalty, scaled to 100."""
    cand, ref = tokenize(candidate), tokenize(reference)
    matches = [_clipped_matches(cand, ref, n) for n in range(1, 5)]
    totals = [max(len(cand) - n + 1, 0) for n in range(1, 5)]
    return _bleu_from_stats(matches, totals, len(cand), len(ref))


def rouge_n(candidate: str, reference: str, n: int, mode: str = "recall") -> float:
    """Clipped n-gram recall (or F1) against the reference."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if mode not in ("recall", "f1"):
        raise ValueError(f"unknown mode: {mode}")
    cand, ref = tokenize(candidate), tokenize(reference)
    ref_total = len(ref) - n + 1
    if ref_total < 1:
        raise MetricUndefinedError(f"reference shorter than {n} tokens")
    matches = _clipped_matches(cand, ref, n)
    recall = matches / ref_total
    if mode == "recall":
        return recall
    cand_total = max(len(cand) - n + 1, 0)
    precision = matches / cand_total if cand_total else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for tok in a:
        row = [0]
        for j, other in enumerate(b, start=1):
            row.append(prev[j - 1] + 1 if tok == other else max(row[-1], prev[j]))
        prev = row
    return prev[-1]


def rouge_l(candidate: str, reference: str, mode: str = "recall") -> float:
    """Longest common subsequence length over the reference length."""
    if mode not in ("recall", "f1"):
        raise ValueError(f"unknown mode: {mode}")
    cand, ref = tokenize(candidate), tokenize(reference)
    if not ref:
        raise MetricUndefinedError("empty reference")
    lcs = _lcs_length(cand, ref)
    recall = lcs / len(ref)
    if mode == "recall":
        return recall
    precision = lcs / len(cand) if cand else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _align(cand: Sequence[str], ref: Sequence[str]) -> list[tuple[int, int]]:
    """One-to-one unigram alignment: exact pass, then stems on leftovers.

    Both passes walk the candidate left to right and take the leftmost
    free reference token, which keeps matched pairs as monotone as the
    texts allow.
    """
    taken = [False] * len(ref)
    pairs: list[tuple[int, int]] = []
    matched_cand = [False] * len(cand)
    for i, tok in enumerate(cand):
        for j, other in enumerate(ref):
            if not taken[j] and tok == other:
                taken[j] = True
                matched_cand[i] = True
                pairs.append((i, j))
                break
    ref_stems = [stem(t) for t in ref]
    for i, tok in enumerate(cand):
        if matched_cand[i]:
            continue
        tok_stem = stem(tok)
        for j in range(len(ref)):
            if not taken[j] and tok_stem == ref_stems[j]:
                taken[j] = True
                pairs.append((i, j))
                break
    pairs.sort()
    return pairs


def meteor(candidate: str, reference: str) -> float:
    """Unigram F-mean with a fragmentation penalty."""
    cand, ref = tokenize(candidate), tokenize(reference)
    pairs = _align(cand, ref) if cand and ref else []
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(ref)
    f_mean = (
        precision
        * recall
        / (_METEOR_ALPHA * precision + (1 - _METEOR_ALPHA) * recall)
    )
    chunks = 1
    for (ci, ri), (cj, rj) in zip(pairs, pairs[1:]):
        if cj != ci + 1 or rj != ri + 1:
            chunks += 1
    penalty = _METEOR_GAMMA * (chunks / m) ** _METEOR_BETA
    return f_mean * (1 - penalty)


@dataclass
class MetricReport:
    aggregates: dict[str, float]
    per_pair: list[dict[str, float]]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "aggregates": dict(self.aggregates),
            "per_pair": [dict(row) for row in self.per_pair],
            "metadata": dict(self.metadata),
        }


def evaluate_corpus(
    pairs: Sequence[tuple[str, str]], rouge_mode: str = "recall"
) -> MetricReport:
    """Score (candidate, reference) pairs and aggregate.

    BLEU aggregates by pooling n-gram statistics across the corpus; the
    other metrics average per-pair scores arithmetically.
    """
    if not pairs:
        raise ValueError("no pairs to evaluate")
    per_pair: list[dict[str, float]] = []
    pooled_matches = [0, 0, 0, 0]
    pooled_totals = [0, 0, 0, 0]
    pooled_cand_len = 0
    pooled_ref_len = 0
    for candidate, reference in pairs:
        row = {
            "BLEU": bleu(candidate, reference),
            "ROUGE-1": rouge_n(candidate, reference, 1, rouge_mode),
            "ROUGE-2": rouge_n(candidate, reference, 2, rouge_mode),
            "ROUGE-L": rouge_l(candidate, reference, rouge_mode),
            "METEOR": meteor(candidate, reference),
        }
        per_pair.append(row)
        cand, ref = tokenize(candidate), tokenize(reference)
        for n in range(1, 5):
            pooled_matches[n - 1] += _clipped_matches(cand, ref, n)
            pooled_totals[n - 1] += max(len(cand) - n + 1, 0)
        pooled_cand_len += len(cand)
        pooled_ref_len += len(ref)
    aggregates = {
        "BLEU": _bleu_from_stats(
            pooled_matches, pooled_totals, pooled_cand_len, pooled_ref_len
        )
    }
    for name in METRIC_NAMES[1:]:
        aggregates[name] = sum(row[name] for row in per_pair) / len(per_pair)
    return MetricReport(
        aggregates=aggregates,
        per_pair=per_pair,
        metadata={
            "pairs": len(pairs),
            "rouge_mode": rouge_mode,
            "meteor_matcher": "exact+stem",
        },
    )
