"""Global sentence index: corpus counts, document frequencies and sentence sets.

Holds the full token lists of every sentence (needed for per-person term
frequency sums), per-term sentence counts, and the person -> sentences map.
Profession sentence sets are derived lazily from the knowledge base as the
union of the member persons' sentence sets, and cached per queried label.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from . import fileio
from .corpus import AnnotatedSentence, KnowledgeBase
from .errors import DataFormatError

INDEX_MAGIC = b"TSIX"
INDEX_VERSION = 1


@dataclass
class SentenceIndex:
    """Immutable corpus statistics; build with build_index()."""

    total_sentences: int
    doc_freq: dict[str, int]
    person_sentences: dict[str, frozenset[int]]
    sentence_store: dict[int, AnnotatedSentence]
    kb: KnowledgeBase
    _profession_cache: dict[str, frozenset[int]] = field(
        default_factory=dict, repr=False, compare=False
    )

    def sentence(self, sid: int) -> AnnotatedSentence:
        return self.sentence_store[sid]

    def sentences_of(self, key: str) -> frozenset[int]:
        """Sentence ids for a person entity token or a profession label.

        Unknown keys yield the empty set. The cache fill for professions is
        idempotent, so concurrent readers are safe.
        """
        found = self.person_sentences.get(key)
        if found is not None:
            return found
        cached = self._profession_cache.get(key)
        if cached is not None:
            return cached
        sids: set[int] = set()
        for person in self.kb.persons_with_profession(key):
            sids.update(self.person_sentences.get(person, ()))
        result = frozenset(sids)
        self._profession_cache[key] = result
        return result

    def term_stats(self, term: str) -> tuple[int, int]:
        """(document frequency, total sentences); df is 0 for unseen terms."""
        return self.doc_freq.get(term, 0), self.total_sentences


def build_index(sentences, kb: KnowledgeBase | None = None) -> SentenceIndex:
    """Build the index from a stream of AnnotatedSentence; order independent.

    Duplicate sentence ids are a build error.
    """
    doc_freq: dict[str, int] = {}
    person_sentences: dict[str, set[int]] = {}
    store: dict[int, AnnotatedSentence] = {}
    for sentence in sentences:
        if sentence.sid in store:
            raise DataFormatError(f"duplicate sentence id {sentence.sid}")
        store[sentence.sid] = sentence
        for term in set(sentence.tokens):
            doc_freq[term] = doc_freq.get(term, 0) + 1
        for person in sentence.mentions:
            person_sentences.setdefault(person, set()).add(sentence.sid)
    return SentenceIndex(
        total_sentences=len(store),
        doc_freq=doc_freq,
        person_sentences={p: frozenset(s) for p, s in person_sentences.items()},
        sentence_store=store,
        kb=kb if kb is not None else KnowledgeBase(),
    )


def save_index(index: SentenceIndex, path) -> None:
    """Write a versioned binary snapshot: term dictionary plus token-id sentences.

    The snapshot is byte-identical for identical corpora regardless of build
    input order (terms and sentence ids are written sorted).
    """
    terms = sorted(index.doc_freq)
    term_id = {t: i for i, t in enumerate(terms)}
    buf = io.BytesIO()
    buf.write(INDEX_MAGIC)
    buf.write(fileio.pack_u32(INDEX_VERSION))
    buf.write(fileio.pack_u64(len(terms)))
    for term in terms:
        buf.write(fileio.pack_str(term))
    buf.write(fileio.pack_u64(len(index.sentence_store)))
    for sid in sorted(index.sentence_store):
        sentence = index.sentence_store[sid]
        buf.write(fileio.pack_u64(sid))
        buf.write(fileio.pack_u32(len(sentence.tokens)))
        for tok in sentence.tokens:
            buf.write(fileio.pack_u32(term_id[tok]))
        mention_ids = sorted(term_id[m] for m in sentence.mentions)
        buf.write(fileio.pack_u32(len(mention_ids)))
        for mid in mention_ids:
            buf.write(fileio.pack_u32(mid))
    fileio.atomic_write_bytes(path, buf.getvalue())


def load_index(path, kb: KnowledgeBase | None = None) -> SentenceIndex:
    """Load a snapshot written by save_index and rebuild the derived statistics."""
    with open(path, "rb") as fh:
        magic = fileio.read_exact(fh, 4, path)
        if magic != INDEX_MAGIC:
            raise DataFormatError(f"not an index snapshot (bad magic {magic!r})", path=path)
        version = fileio.read_u32(fh, path)
        if version != INDEX_VERSION:
            raise DataFormatError(
                f"unsupported index snapshot version {version} (expected {INDEX_VERSION})",
                path=path,
            )
        n_terms = fileio.read_u64(fh, path)
        terms = [fileio.read_str(fh, path) for _ in range(n_terms)]

        def sentences():
            n_sentences = fileio.read_u64(fh, path)
            for _ in range(n_sentences):
                sid = fileio.read_u64(fh, path)
                n_tokens = fileio.read_u32(fh, path)
                try:
                    tokens = tuple(terms[fileio.read_u32(fh, path)] for _ in range(n_tokens))
                    n_mentions = fileio.read_u32(fh, path)
                    mentions = frozenset(
                        terms[fileio.read_u32(fh, path)] for _ in range(n_mentions)
                    )
                except IndexError:
                    raise DataFormatError("corrupt snapshot: term id out of range", path=path)
                yield AnnotatedSentence(sid=sid, tokens=tokens, mentions=mentions)

        return build_index(sentences(), kb)
