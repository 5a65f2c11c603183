"""Input parsing and normalization.

Loads every raw input the pipeline consumes: entity-annotated sentences,
profession/nationality fact lists, demonym tables, first-sentence/paragraph
abstracts, stopword lists and labeled training pairs. All text is reduced to
lowercase tokens over the alphabet [a-z0-9_]; entity mentions become single
`fb_...` tokens so they survive tokenization as atoms.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import DataFormatError

logger = logging.getLogger(__name__)

ENTITY_PREFIX = "fb_"

_TOKEN_RE = re.compile(r"[a-z0-9_]+")


def normalize_entity_id(mid: str) -> str:
    """Normalize a raw KB identifier to an entity token.

    `m.06dfpq` becomes `fb_06dfpq`; any remaining dots become underscores and
    the result is lowercased. Idempotent on its own output.
    """
    mid = mid.strip()
    if not mid:
        raise DataFormatError("empty entity identifier")
    mid = mid.lower()
    if mid.startswith("m."):
        mid = ENTITY_PREFIX + mid[2:]
    return mid.replace(".", "_")


def is_entity_token(term: str) -> bool:
    return term.startswith(ENTITY_PREFIX)


def tokenize(text: str) -> list[str]:
    """Lowercase and split into maximal [a-z0-9_] runs; everything else separates."""
    return _TOKEN_RE.findall(text.lower())


def canonical_label(label: str) -> str:
    """Canonical form of a profession/nationality label: stripped and lowercased."""
    return label.strip().lower()


@dataclass(frozen=True)
class AnnotatedSentence:
    """One corpus sentence with entity mentions replaced by entity tokens."""

    sid: int
    tokens: tuple[str, ...]
    mentions: frozenset[str]

    def __post_init__(self):
        if not self.tokens:
            raise DataFormatError(f"sentence {self.sid} has no tokens")
        missing = self.mentions - set(self.tokens)
        if missing:
            raise DataFormatError(
                f"sentence {self.sid}: mentions not present in tokens: {sorted(missing)}"
            )


def parse_sentence_line(line: str, sid: int = 0, lineno: int | None = None) -> AnnotatedSentence:
    """Parse one sentence line with `[[mid|surface]]` entity markers.

    Each marker contributes exactly one entity token at its position; the
    surface text is discarded. The rest of the line is tokenized normally.
    """
    tokens: list[str] = []
    mentions: set[str] = set()
    pos = 0
    while True:
        start = line.find("[[", pos)
        if start == -1:
            tokens.extend(tokenize(line[pos:]))
            break
        tokens.extend(tokenize(line[pos:start]))
        end = line.find("]]", start + 2)
        if end == -1:
            raise DataFormatError(
                f"unterminated [[ marker: {line[start:start + 40]!r}", line=lineno
            )
        body = line[start + 2 : end]
        mid = body.split("|", 1)[0]
        eid = normalize_entity_id(mid)
        tokens.append(eid)
        mentions.add(eid)
        pos = end + 2
    if not tokens:
        raise DataFormatError("sentence line produced no tokens", line=lineno)
    return AnnotatedSentence(sid=sid, tokens=tuple(tokens), mentions=frozenset(mentions))


def serialize_sentence(sentence: AnnotatedSentence) -> str:
    """Render a sentence back into the wire format; mention tokens become markers."""
    parts = []
    for tok in sentence.tokens:
        if tok in sentence.mentions:
            parts.append(f"[[{tok}|{tok}]]")
        else:
            parts.append(tok)
    return " ".join(parts)


def load_sentences(path):
    """Yield AnnotatedSentence objects from a sentences file, one per non-blank line.

    Sentence ids are assigned sequentially in file order.
    """
    sid = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                yield parse_sentence_line(line, sid=sid, lineno=lineno)
            except DataFormatError as exc:
                raise DataFormatError(str(exc), path=path, line=lineno) from None
            sid += 1


@dataclass(frozen=True)
class DemonymForms:
    """Noun and adjective token sequences for one nationality label."""

    noun: tuple[tuple[str, ...], ...]
    adjective: tuple[tuple[str, ...], ...]


@dataclass
class KnowledgeBase:
    """Person facts: professions, nationalities and the demonym table."""

    professions: dict[str, tuple[str, ...]] = field(default_factory=dict)
    nationalities: dict[str, tuple[str, ...]] = field(default_factory=dict)
    demonyms: dict[str, DemonymForms] = field(default_factory=dict)
    _persons_by_profession: dict[str, tuple[str, ...]] | None = field(
        default=None, repr=False, compare=False
    )

    def professions_of(self, person: str) -> tuple[str, ...]:
        return self.professions.get(person, ())

    def nationalities_of(self, person: str) -> tuple[str, ...]:
        return self.nationalities.get(person, ())

    def objects_of(self, person: str, relation: str) -> tuple[str, ...]:
        if relation == "profession":
            return self.professions_of(person)
        if relation == "nationality":
            return self.nationalities_of(person)
        raise ValueError(f"unknown relation: {relation!r}")

    def persons_with_profession(self, profession: str) -> tuple[str, ...]:
        if self._persons_by_profession is None:
            reverse: dict[str, list[str]] = {}
            for person, labels in self.professions.items():
                for label in labels:
                    reverse.setdefault(label, []).append(person)
            self._persons_by_profession = {k: tuple(v) for k, v in reverse.items()}
        return self._persons_by_profession.get(profession, ())


def _read_tsv(path, n_cols):
    """Yield (lineno, columns) for each non-blank line, enforcing column count."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != n_cols:
                raise DataFormatError(
                    f"expected {n_cols} tab-separated columns, got {len(cols)}",
                    path=path,
                    line=lineno,
                )
            yield lineno, cols


def _parse_forms(raw: str) -> tuple[tuple[str, ...], ...]:
    forms = []
    for chunk in raw.split(","):
        toks = tuple(tokenize(chunk))
        if toks:
            forms.append(toks)
    return tuple(forms)


def load_kb(professions_path=None, nationalities_path=None, demonyms_path=None) -> KnowledgeBase:
    """Load the knowledge base from fact TSVs and the demonym table.

    Any path may be None, producing an empty mapping for that part. Every
    nationality label used in the facts must have a demonym entry.
    """
    kb = KnowledgeBase()
    if professions_path is not None:
        acc: dict[str, list[str]] = {}
        for lineno, (mid, label) in _read_tsv(professions_path, 2):
            person = normalize_entity_id(mid)
            label = canonical_label(label)
            if not label:
                raise DataFormatError("empty profession label", path=professions_path, line=lineno)
            labels = acc.setdefault(person, [])
            if label not in labels:
                labels.append(label)
        kb.professions = {p: tuple(ls) for p, ls in acc.items()}
    if nationalities_path is not None:
        acc = {}
        for lineno, (mid, label) in _read_tsv(nationalities_path, 2):
            person = normalize_entity_id(mid)
            label = canonical_label(label)
            if not label:
                raise DataFormatError(
                    "empty nationality label", path=nationalities_path, line=lineno
                )
            labels = acc.setdefault(person, [])
            if label not in labels:
                labels.append(label)
        kb.nationalities = {p: tuple(ls) for p, ls in acc.items()}
    if demonyms_path is not None:
        for lineno, (label, nouns, adjectives) in _read_tsv(demonyms_path, 3):
            label = canonical_label(label)
            if not label:
                raise DataFormatError("empty demonym label", path=demonyms_path, line=lineno)
            kb.demonyms[label] = DemonymForms(
                noun=_parse_forms(nouns), adjective=_parse_forms(adjectives)
            )
    used = {label for labels in kb.nationalities.values() for label in labels}
    missing = sorted(used - set(kb.demonyms))
    if missing:
        raise DataFormatError(
            "nationality labels without a demonym entry: " + ", ".join(missing),
            path=nationalities_path,
        )
    return kb


@dataclass
class AbstractStore:
    """First Wikipedia sentence and paragraph of each person, tokenized."""

    first_sentence: dict[str, tuple[str, ...]] = field(default_factory=dict)
    first_paragraph: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def sentence_of(self, person: str) -> tuple[str, ...]:
        return self.first_sentence.get(person, ())

    def paragraph_of(self, person: str) -> tuple[str, ...]:
        return self.first_paragraph.get(person, ())


def load_abstracts(path) -> AbstractStore:
    """Load first-sentence/first-paragraph abstracts from a 3-column TSV."""
    store = AbstractStore()
    for lineno, (mid, sent, par) in _read_tsv(path, 3):
        person = normalize_entity_id(mid)
        if person in store.first_sentence:
            logger.warning("%s: line %d: duplicate abstract for %s, last row wins", path, lineno, person)
        sent_toks = tuple(tokenize(sent))
        par_toks = tuple(tokenize(par))
        if sent_toks and par_toks and par_toks[: len(sent_toks)] != sent_toks:
            # Paragraphs normally start with the first sentence; a mismatch is
            # suspicious input, not a hard error.
            logger.warning(
                "%s: line %d: first sentence of %s is not a prefix of its paragraph",
                path,
                lineno,
                person,
            )
        store.first_sentence[person] = sent_toks
        store.first_paragraph[person] = par_toks
    return store


def load_stopwords(path) -> frozenset[str]:
    """Load a stopword list, one token per line; duplicates collapse."""
    words: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            words.update(tokenize(line))
    return frozenset(words)


def default_stopwords() -> frozenset[str]:
    """The stopword list shipped with the package (127 common English words)."""
    text = resources.files("triplescore.data").joinpath("stopwords.txt").read_text("utf-8")
    words: set[str] = set()
    for line in text.splitlines():
        words.update(tokenize(line))
    return frozenset(words)


@dataclass(frozen=True)
class LabeledPair:
    """A (person, label) training instance with its 0..7 relevance score."""

    subject: str
    object: str
    score: int

    def __post_init__(self):
        if not 0 <= self.score <= 7:
            raise DataFormatError(f"score {self.score} outside 0..7")


def load_labeled_pairs(path) -> list[LabeledPair]:
    """Load labeled (subject, object, score) rows; scores validated to 0..7."""
    pairs = []
    for lineno, (mid, label, raw_score) in _read_tsv(path, 3):
        try:
            score = int(raw_score)
        except ValueError:
            raise DataFormatError(
                f"score is not an integer: {raw_score!r}", path=path, line=lineno
            ) from None
        if not 0 <= score <= 7:
            raise DataFormatError(f"score {score} outside 0..7", path=path, line=lineno)
        pairs.append(
            LabeledPair(
                subject=normalize_entity_id(mid), object=canonical_label(label), score=score
            )
        )
    return pairs


def load_pairs_to_score(path) -> list[tuple[str, str]]:
    """Load (subject, object) pairs for scoring; a trailing score column is ignored."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) not in (2, 3):
                raise DataFormatError(
                    f"expected 2 or 3 tab-separated columns, got {len(cols)}",
                    path=path,
                    line=lineno,
                )
            pairs.append((normalize_entity_id(cols[0]), canonical_label(cols[1])))
    return pairs
