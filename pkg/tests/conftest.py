import math

import pytest
from hypothesis import settings

from triplescore.corpus import KnowledgeBase, DemonymForms, load_sentences, parse_sentence_line
from triplescore.index import build_index

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")


SMALL_SENTENCES = [
    "[[m.0a|Ada]] is a celebrated poet and novelist",
    "[[m.0a|Ada]] wrote a famous poem about verse",
    "[[m.0b|Bo]] plays guitar music on stage",
    "[[m.0b|Bo]] and [[m.0a|Ada]] toured germany together",
]


def small_kb():
    return KnowledgeBase(
        professions={"fb_0a": ("poet",), "fb_0b": ("guitarist",)},
        nationalities={"fb_0a": ("germany",)},
        demonyms={"germany": DemonymForms(noun=(("germany",),), adjective=(("german",),))},
    )


@pytest.fixture
def small_index():
    sentences = [parse_sentence_line(line, sid=i) for i, line in enumerate(SMALL_SENTENCES)]
    return build_index(sentences, small_kb())


# Corpus realizing the documented TF.IDF worked example: 10 sentences, the
# person fb_0p appears in two 5-token sentences, the term `rhyme` occurs three
# times there and nowhere else (doc freq 2), so
# weight(rhyme, poet) = (3 / 10) * ln(10 / 2).
TFIDF_FIXTURE_SENTENCES = [
    "[[m.0p|P]] rhyme rhyme verse cadence",
    "[[m.0p|P]] rhyme meter stanza couplet",
] + [f"filler{i} alpha beta gamma delta" for i in range(8)]

TFIDF_EXPECTED_WEIGHT = (3 / 10) * math.log(10 / 2)


@pytest.fixture
def tfidf_fixture_index():
    kb = KnowledgeBase(professions={"fb_0p": ("poet",)})
    sentences = [parse_sentence_line(line, sid=i) for i, line in enumerate(TFIDF_FIXTURE_SENTENCES)]
    return build_index(sentences, kb)


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return str(path)
