"""TF.IDF term profiles for persons and professions.

The weight of a term for a scope (person or profession) is the term's
frequency across the scope's sentences, normalized by the total token count
of those sentences, times the natural-log inverse document frequency over
the whole corpus:

    weight(t, p) = (sum tf(t, s) / sum |s|) * ln(|S| / df(t))   for s in S(p)

Profiles drop stopwords and entity tokens; the normalizer counts all tokens.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .corpus import is_entity_token
from .index import SentenceIndex

PERSON = "person"
PROFESSION = "profession"


@dataclass(frozen=True)
class WeightedTermVector:
    """Ranked (term, weight) profile; descending weight, ties lexicographic."""

    owner: str
    entries: tuple[tuple[str, float], ...]

    def top(self, k: int) -> tuple[tuple[str, float], ...]:
        return self.entries[:k]


class ProfileStore:
    """Computes and caches term profiles over an immutable sentence index.

    Profession profiles and per-scope aggregated counts are cached after the
    first computation; fills are idempotent, so concurrent reads are safe.
    """

    def __init__(self, index: SentenceIndex, stopwords=frozenset()):
        self.index = index
        self.stopwords = frozenset(stopwords)
        self._scope_counts: dict[tuple[str, str], tuple[Counter, int]] = {}
        self._profession_profiles: dict[str, WeightedTermVector] = {}

    def _counts(self, scope: str, subject: str) -> tuple[Counter, int]:
        """Aggregated term counts and total token count over the scope's sentences."""
        key = (scope, subject)
        cached = self._scope_counts.get(key)
        if cached is not None:
            return cached
        if scope == PERSON:
            sids = self.index.person_sentences.get(subject, frozenset())
        elif scope == PROFESSION:
            sids = self.index.sentences_of(subject)
        else:
            raise ValueError(f"unknown scope: {scope!r}")
        counts: Counter = Counter()
        total = 0
        for sid in sids:
            tokens = self.index.sentence(sid).tokens
            counts.update(tokens)
            total += len(tokens)
        result = (counts, total)
        self._scope_counts[key] = result
        return result

    def term_weight(self, scope: str, subject: str, term: str) -> float:
        """TF.IDF weight of a term for a person or profession; 0 when undefined.

        Returns 0 for an empty scope, a corpus-unseen term, or a term absent
        from the scope's sentences.
        """
        counts, total = self._counts(scope, subject)
        if total == 0:
            return 0.0
        tf_sum = counts.get(term, 0)
        if tf_sum == 0:
            return 0.0
        df, n_sentences = self.index.term_stats(term)
        if df == 0:
            return 0.0
        return (tf_sum / total) * math.log(n_sentences / df)

    def person_term_counts(self, person: str) -> Counter:
        """Raw term frequency sums over the person's sentences."""
        return self._counts(PERSON, person)[0]

    def profile(self, scope: str, subject: str) -> WeightedTermVector:
        """Full ranked profile, excluding stopwords and entity tokens."""
        if scope == PROFESSION:
            cached = self._profession_profiles.get(subject)
            if cached is not None:
                return cached
        counts, total = self._counts(scope, subject)
        entries = []
        if total > 0:
            n_sentences = self.index.total_sentences
            for term, tf_sum in counts.items():
                if term in self.stopwords or is_entity_token(term):
                    continue
                df = self.index.doc_freq.get(term, 0)
                if df == 0:
                    continue
                entries.append((term, (tf_sum / total) * math.log(n_sentences / df)))
        entries.sort(key=lambda e: (-e[1], e[0]))
        vector = WeightedTermVector(owner=subject, entries=tuple(entries))
        if scope == PROFESSION:
            self._profession_profiles[subject] = vector
        return vector

    def top_k_terms(self, profession: str, k: int) -> tuple[tuple[str, float], ...]:
        """First k entries of the profession's profile (fewer if unavailable)."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        return self.profile(PROFESSION, profession).top(k)
