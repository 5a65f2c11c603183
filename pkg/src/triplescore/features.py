"""Feature vectors for (person, profession) and (person, nationality) pairs.

The profession schema has 23 features: three k-parameterized families over
k in {10, 50, 100, 200, 500, 1000} (top-k term sums, term-vector cosine,
embedding-centroid cosine), one paragraph-centroid cosine, and four binary
first-text flags. The nationality schema has 10: sentence co-occurrence
frequency plus the four flags, each in adjective and noun demonym forms.

Every degenerate case (person absent from the corpus, missing abstract,
zero-norm vectors) yields 0 rather than a missing value, so vectors are
always dense and finite.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .corpus import AbstractStore, KnowledgeBase, tokenize
from .embeddings import EmbeddingStore, centroid, cosine, paragraph_centroid
from .index import SentenceIndex
from .profiles import PERSON, ProfileStore

logger = logging.getLogger(__name__)

K_GRID = (10, 50, 100, 200, 500, 1000)
PAR_K = 100

PROFESSION = "profession"
NATIONALITY = "nationality"

PROFESSION_SCHEMA: tuple[str, ...] = tuple(
    [f"sumProfTerms{k}" for k in K_GRID]
    + [f"simCos{k}" for k in K_GRID]
    + [f"simCosVec{k}" for k in K_GRID]
    + ["simCosVecPar100", "isProfWPSent", "isProfWPPar", "isFirstProfWPSent", "isFirstProfWPPar"]
)

NATIONALITY_SCHEMA: tuple[str, ...] = (
    "freqPerNatAdj",
    "freqPerNatNoun",
    "isNatWPSentAdj",
    "isNatWPSentNoun",
    "isNatWPParAdj",
    "isNatWPParNoun",
    "isFirstNatWPSentAdj",
    "isFirstNatWPSentNoun",
    "isFirstNatWPParAdj",
    "isFirstNatWPParNoun",
)

ADJECTIVE = "adjective"
NOUN = "noun"


@dataclass(frozen=True)
class FeatureVector:
    """Named feature values for one (subject, object) pair, fixed order."""

    relation: str
    names: tuple[str, ...]
    values: tuple[float, ...]

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)


def schema_for(relation: str) -> tuple[str, ...]:
    if relation == PROFESSION:
        return PROFESSION_SCHEMA
    if relation == NATIONALITY:
        return NATIONALITY_SCHEMA
    raise ValueError(f"unknown relation: {relation!r}")


@dataclass
class FeatureContext:
    """Shared immutable stores consumed by feature extraction."""

    index: SentenceIndex
    kb: KnowledgeBase
    profiles: ProfileStore
    abstracts: AbstractStore
    embeddings: EmbeddingStore | None = None
    match_plural_s: bool = False
    _pr_centroid_cache: dict = field(default_factory=dict, repr=False)
    _warned_labels: set = field(default_factory=set, repr=False)

    @classmethod
    def build(cls, index, kb, abstracts, stopwords=frozenset(), embeddings=None, **kwargs):
        return cls(
            index=index,
            kb=kb,
            profiles=ProfileStore(index, stopwords),
            abstracts=abstracts,
            embeddings=embeddings,
            **kwargs,
        )

    @property
    def stopwords(self) -> frozenset[str]:
        return self.profiles.stopwords

    def _require_embeddings(self) -> EmbeddingStore:
        if self.embeddings is None:
            raise ValueError("an embedding store is required for embedding-based features")
        return self.embeddings

    def _profession_centroid(self, profession: str, k: int):
        key = (profession, k)
        cached = self._pr_centroid_cache.get(key)
        if cached is None:
            cached = centroid(self._require_embeddings(), self.profiles.top_k_terms(profession, k))
            self._pr_centroid_cache[key] = cached
        return cached

    def _warn_unknown(self, relation: str, label: str):
        if label not in self._warned_labels:
            self._warned_labels.add(label)
            logger.warning("%s label %r has no corpus/KB evidence; statistical features are 0", relation, label)


def _token_eq(hay: str, pat: str, allow_plural: bool) -> bool:
    return hay == pat or (allow_plural and hay == pat + "s")


def _find_subsequence(tokens, needle, plural_s=False) -> int:
    """Earliest start of a contiguous token-sequence match, or -1."""
    m = len(needle)
    if m == 0:
        return -1
    last = len(tokens) - m
    for i in range(last + 1):
        if all(
            _token_eq(tokens[i + j], needle[j], plural_s and j == m - 1) for j in range(m)
        ):
            return i
    return -1


def _best_match(tokens, forms, plural_s=False):
    """Best (position, length) over all forms: earliest, then longest. None if no match."""
    best = None
    for form in forms:
        pos = _find_subsequence(tokens, form, plural_s)
        if pos < 0:
            continue
        if best is None or pos < best[0] or (pos == best[0] and len(form) > best[1]):
            best = (pos, len(form))
    return best


def _label_forms(ctx: FeatureContext, label: str, relation: str, form: str | None):
    """Token sequences to match for a label; nationality selects a demonym form."""
    if relation == PROFESSION:
        toks = tuple(tokenize(label))
        return (toks,) if toks else ()
    entry = ctx.kb.demonyms.get(label)
    if entry is None:
        # Label missing from the demonym table: the label itself is a usable
        # noun form, but no adjective form can be derived.
        ctx._warn_unknown(NATIONALITY, label)
        if form == NOUN:
            toks = tuple(tokenize(label))
            return (toks,) if toks else ()
        return ()
    return entry.adjective if form == ADJECTIVE else entry.noun


def sum_prof_terms(ctx: FeatureContext, person: str, profession: str, k: int) -> float:
    """Weighted sum of top-k profession term frequencies over the person's sentences."""
    top = ctx.profiles.top_k_terms(profession, k)
    if not top:
        return 0.0
    counts = ctx.profiles.person_term_counts(person)
    if not counts:
        return 0.0
    return float(sum(weight * counts.get(term, 0) for term, weight in top))


def sim_cos(ctx: FeatureContext, person: str, profession: str, k: int) -> float:
    """Cosine between person and profession weight vectors over the top-k terms."""
    top = ctx.profiles.top_k_terms(profession, k)
    if not top:
        return 0.0
    w_pr = np.array([w for _, w in top], dtype=np.float64)
    w_pe = np.array(
        [ctx.profiles.term_weight(PERSON, person, t) for t, _ in top], dtype=np.float64
    )
    return cosine(w_pe, w_pr)


def sim_cos_vec(ctx: FeatureContext, person: str, profession: str, k: int) -> float:
    """Cosine between embedding centroids of the person and profession (Eq. 1 style)."""
    store = ctx._require_embeddings()
    top = ctx.profiles.top_k_terms(profession, k)
    if not top:
        return 0.0
    c_pr = ctx._profession_centroid(profession, k)
    person_weights = [(t, ctx.profiles.term_weight(PERSON, person, t)) for t, _ in top]
    c_pe = centroid(store, person_weights)
    return cosine(c_pe, c_pr)


def sim_cos_vec_par(ctx: FeatureContext, person: str, profession: str) -> float:
    """Cosine between the person's first-paragraph centroid and the top-100 profession centroid."""
    store = ctx._require_embeddings()
    par = ctx.abstracts.paragraph_of(person)
    if not par:
        return 0.0
    if not ctx.profiles.top_k_terms(profession, PAR_K):
        return 0.0
    c_par = paragraph_centroid(store, par, ctx.stopwords)
    c_pr = ctx._profession_centroid(profession, PAR_K)
    return cosine(c_par, c_pr)


def first_text_flags(
    ctx: FeatureContext, person: str, obj: str, relation: str, form: str | None = None
) -> tuple[int, int, int, int]:
    """(inSentence, inParagraph, firstInSentence, firstInParagraph) for a label.

    A label occurs if any of its token sequences matches contiguously. It is
    "first" if its earliest match starts strictly before every other matching
    KB label of the person; ties at the same position go to the longest
    matching sequence, and an unresolved tie flags neither.
    """
    sent = ctx.abstracts.sentence_of(person)
    par = ctx.abstracts.paragraph_of(person)
    if not sent and not par:
        return (0, 0, 0, 0)
    obj_forms = _label_forms(ctx, obj, relation, form)
    candidates = list(ctx.kb.objects_of(person, relation))
    if obj not in candidates:
        candidates.append(obj)

    def flags_for(tokens) -> tuple[int, int]:
        if not tokens:
            return (0, 0)
        own = _best_match(tokens, obj_forms, ctx.match_plural_s)
        if own is None:
            return (0, 0)
        first = 1
        for other in candidates:
            if other == obj:
                continue
            match = _best_match(
                tokens, _label_forms(ctx, other, relation, form), ctx.match_plural_s
            )
            if match is None:
                continue
            if match[0] < own[0] or (match[0] == own[0] and match[1] >= own[1]):
                first = 0
                break
        return (1, first)

    in_sent, first_sent = flags_for(sent)
    in_par, first_par = flags_for(par)
    return (in_sent, in_par, first_sent, first_par)


def freq_per_nat(ctx: FeatureContext, person: str, nationality: str, form: str) -> float:
    """Fraction of the person's sentences that also mention the nationality form."""
    sids = ctx.index.person_sentences.get(person, frozenset())
    if not sids:
        return 0.0
    forms = _label_forms(ctx, nationality, NATIONALITY, form)
    if not forms:
        return 0.0
    hits = 0
    for sid in sids:
        if _best_match(ctx.index.sentence(sid).tokens, forms, ctx.match_plural_s) is not None:
            hits += 1
    return hits / len(sids)


def profession_features(ctx: FeatureContext, person: str, profession: str) -> FeatureVector:
    """The full 23-feature profession vector, in schema order."""
    if not ctx.profiles.top_k_terms(profession, 1):
        ctx._warn_unknown(PROFESSION, profession)
    values = [sum_prof_terms(ctx, person, profession, k) for k in K_GRID]
    values += [sim_cos(ctx, person, profession, k) for k in K_GRID]
    values += [sim_cos_vec(ctx, person, profession, k) for k in K_GRID]
    values.append(sim_cos_vec_par(ctx, person, profession))
    values.extend(float(f) for f in first_text_flags(ctx, person, profession, PROFESSION))
    return FeatureVector(relation=PROFESSION, names=PROFESSION_SCHEMA, values=tuple(values))


def nationality_features(ctx: FeatureContext, person: str, nationality: str) -> FeatureVector:
    """The full 10-feature nationality vector, in schema order."""
    values = [
        freq_per_nat(ctx, person, nationality, ADJECTIVE),
        freq_per_nat(ctx, person, nationality, NOUN),
    ]
    adj = first_text_flags(ctx, person, nationality, NATIONALITY, ADJECTIVE)
    noun = first_text_flags(ctx, person, nationality, NATIONALITY, NOUN)
    for i in range(4):
        values.append(float(adj[i]))
        values.append(float(noun[i]))
    return FeatureVector(relation=NATIONALITY, names=NATIONALITY_SCHEMA, values=tuple(values))


def extract_features(ctx: FeatureContext, relation: str, subject: str, obj: str) -> FeatureVector:
    """Dispatch to the relation's extractor."""
    if relation == PROFESSION:
        return profession_features(ctx, subject, obj)
    if relation == NATIONALITY:
        return nationality_features(ctx, subject, obj)
    raise ValueError(f"unknown relation: {relation!r}")
