import logging
import math
from collections import Counter

import numpy as np
import pytest

from triplescore.corpus import (
    AbstractStore,
    AnnotatedSentence,
    DemonymForms,
    KnowledgeBase,
    default_stopwords,
)
from triplescore.embeddings import EmbeddingStore
from triplescore.features import (
    ADJECTIVE,
    K_GRID,
    NATIONALITY,
    NATIONALITY_SCHEMA,
    NOUN,
    PROFESSION,
    PROFESSION_SCHEMA,
    FeatureContext,
    first_text_flags,
    freq_per_nat,
    nationality_features,
    profession_features,
    sim_cos,
    sim_cos_vec,
    sim_cos_vec_par,
    sum_prof_terms,
)
from triplescore.index import build_index
from triplescore.profiles import PERSON

from synthdata import PlantedWorld


class FakeProfiles:
    """Duck-typed stand-in pinning exact profile weights for formula fixtures."""

    def __init__(self, top=(), person_weights=None, person_counts=None, stopwords=frozenset()):
        self._top = tuple(top)
        self._person_weights = person_weights or {}
        self._person_counts = Counter(person_counts or {})
        self.stopwords = frozenset(stopwords)

    def top_k_terms(self, profession, k):
        return self._top[:k]

    def term_weight(self, scope, subject, term):
        assert scope == PERSON
        return self._person_weights.get(term, 0.0)

    def person_term_counts(self, person):
        return self._person_counts


def make_ctx(profiles, embeddings=None, abstracts=None, kb=None, index=None):
    return FeatureContext(
        index=index if index is not None else build_index([]),
        kb=kb if kb is not None else KnowledgeBase(),
        profiles=profiles,
        abstracts=abstracts if abstracts is not None else AbstractStore(),
        embeddings=embeddings,
    )


class TestSumProfTerms:
    def test_empty_person_scope(self):
        ctx = make_ctx(FakeProfiles(top=[("t", 0.5)]))
        assert sum_prof_terms(ctx, "fb_x", "poet", 10) == 0.0

    def test_weighted_count_fixture(self):
        ctx = make_ctx(FakeProfiles(top=[("t", 0.5)], person_counts={"t": 4}))
        assert sum_prof_terms(ctx, "fb_x", "poet", 1) == pytest.approx(2.0, abs=1e-9)

    def test_no_shared_terms(self):
        ctx = make_ctx(FakeProfiles(top=[("t", 0.5)], person_counts={"other": 9}))
        assert sum_prof_terms(ctx, "fb_x", "poet", 10) == 0.0


class TestSimCos:
    def test_identical_weights_give_one(self):
        ctx = make_ctx(
            FakeProfiles(top=[("a", 0.3), ("b", 0.7)], person_weights={"a": 0.3, "b": 0.7})
        )
        assert sim_cos(ctx, "fb_x", "poet", 2) == pytest.approx(1.0, abs=1e-12)

    def test_zero_person_weights(self):
        ctx = make_ctx(FakeProfiles(top=[("a", 0.3)], person_weights={}))
        assert sim_cos(ctx, "fb_x", "poet", 1) == 0.0

    def test_hand_cosine_fixture(self):
        # pr weights (3, 4), pe weights (1, 0): cos = 3 / (1 * 5) = 0.6
        ctx = make_ctx(FakeProfiles(top=[("a", 3.0), ("b", 4.0)], person_weights={"a": 1.0}))
        assert sim_cos(ctx, "fb_x", "poet", 2) == pytest.approx(0.6, abs=1e-9)


class TestSimCosVec:
    def test_identical_weights_give_one(self):
        store = EmbeddingStore(
            dimension=2, vectors={"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])}
        )
        ctx = make_ctx(
            FakeProfiles(top=[("a", 2.0), ("b", 3.0)], person_weights={"a": 2.0, "b": 3.0}),
            embeddings=store,
        )
        assert sim_cos_vec(ctx, "fb_x", "poet", 2) == pytest.approx(1.0, abs=1e-12)

    def test_zero_person_centroid(self):
        store = EmbeddingStore(dimension=2, vectors={"a": np.array([1.0, 0.0])})
        ctx = make_ctx(FakeProfiles(top=[("a", 2.0)], person_weights={}), embeddings=store)
        assert sim_cos_vec(ctx, "fb_x", "poet", 1) == 0.0

    def test_hand_centroid_fixture(self):
        # C_pr = (2, 3), C_pe = (1, 0): cos = 2 / sqrt(13)
        store = EmbeddingStore(
            dimension=2, vectors={"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])}
        )
        ctx = make_ctx(
            FakeProfiles(top=[("a", 2.0), ("b", 3.0)], person_weights={"a": 1.0}),
            embeddings=store,
        )
        expected = 2.0 / math.sqrt(13.0)
        assert sim_cos_vec(ctx, "fb_x", "poet", 2) == pytest.approx(expected, abs=1e-9)

    def test_requires_embeddings(self):
        ctx = make_ctx(FakeProfiles(top=[("a", 1.0)]))
        with pytest.raises(ValueError, match="embedding store"):
            sim_cos_vec(ctx, "fb_x", "poet", 1)


class TestSimCosVecPar:
    def test_missing_paragraph_is_zero(self):
        store = EmbeddingStore(dimension=2, vectors={"a": np.array([1.0, 0.0])})
        ctx = make_ctx(FakeProfiles(top=[("a", 1.0)]), embeddings=store)
        assert sim_cos_vec_par(ctx, "fb_x", "poet") == 0.0

    def test_aligned_directions_give_one(self):
        store = EmbeddingStore(dimension=2, vectors={"mark": np.array([1.0, 0.0])})
        abstracts = AbstractStore(first_paragraph={"fb_x": ("mark", "mark")})
        ctx = make_ctx(FakeProfiles(top=[("mark", 5.0)]), embeddings=store, abstracts=abstracts)
        assert sim_cos_vec_par(ctx, "fb_x", "poet") == pytest.approx(1.0, abs=1e-12)

    def test_hand_fixture(self):
        # paragraph (poet, poet) with vec (1, 1) -> (2, 2); profession centroid (1, 0)
        store = EmbeddingStore(
            dimension=2, vectors={"poet": np.array([1.0, 1.0]), "axis": np.array([1.0, 0.0])}
        )
        abstracts = AbstractStore(first_paragraph={"fb_x": ("poet", "poet")})
        ctx = make_ctx(FakeProfiles(top=[("axis", 1.0)]), embeddings=store, abstracts=abstracts)
        expected = 2.0 / (math.sqrt(8.0) * 1.0)
        assert sim_cos_vec_par(ctx, "fb_x", "poet") == pytest.approx(expected, abs=1e-9)


def flags_ctx(sentence=(), paragraph=(), professions=(), nationalities=(), demonyms=None, **kwargs):
    abstracts = AbstractStore()
    if sentence:
        abstracts.first_sentence["fb_x"] = tuple(sentence)
    if paragraph:
        abstracts.first_paragraph["fb_x"] = tuple(paragraph)
    kb = KnowledgeBase(
        professions={"fb_x": tuple(professions)} if professions else {},
        nationalities={"fb_x": tuple(nationalities)} if nationalities else {},
        demonyms=demonyms or {},
    )
    return FeatureContext(
        index=build_index([]),
        kb=kb,
        profiles=FakeProfiles(),
        abstracts=abstracts,
        embeddings=None,
        **kwargs,
    )


class TestFirstTextFlags:
    def test_multi_token_label_contiguous_match(self):
        ctx = flags_ctx(
            sentence=("bob", "dylan", "is", "an", "american", "singer", "songwriter"),
            professions=("singer-songwriter",),
        )
        flags = first_text_flags(ctx, "fb_x", "singer-songwriter", PROFESSION)
        assert flags == (1, 0, 1, 0)

    def test_no_abstract_all_zero(self):
        ctx = flags_ctx(professions=("poet",))
        assert first_text_flags(ctx, "fb_x", "poet", PROFESSION) == (0, 0, 0, 0)

    def test_earliest_position_wins(self):
        sentence = ("a", "famous", "writer", "and", "novelist", "then", "poet")
        ctx = flags_ctx(sentence=sentence, professions=("poet", "novelist"))
        assert first_text_flags(ctx, "fb_x", "novelist", PROFESSION) == (1, 0, 1, 0)
        assert first_text_flags(ctx, "fb_x", "poet", PROFESSION) == (1, 0, 0, 0)

    def test_tie_at_same_position_longest_wins(self):
        sentence = ("a", "singer", "songwriter", "here")
        ctx = flags_ctx(sentence=sentence, professions=("singer", "singer-songwriter"))
        assert first_text_flags(ctx, "fb_x", "singer-songwriter", PROFESSION)[2] == 1
        assert first_text_flags(ctx, "fb_x", "singer", PROFESSION)[2] == 0

    def test_unresolvable_tie_flags_neither(self):
        # Two distinct labels matching the same single token at the same spot.
        sentence = ("the", "painter", "lived",)
        ctx = flags_ctx(sentence=sentence, professions=("painter", "painter."))
        # Both labels tokenize to ("painter",): same position, same length.
        assert first_text_flags(ctx, "fb_x", "painter", PROFESSION)[2] == 0
        assert first_text_flags(ctx, "fb_x", "painter.", PROFESSION)[2] == 0

    def test_queried_object_outside_kb_still_matches(self):
        ctx = flags_ctx(sentence=("a", "quiet", "farmer"), professions=("poet",))
        assert first_text_flags(ctx, "fb_x", "farmer", PROFESSION) == (1, 0, 1, 0)

    def test_paragraph_flags_independent_of_sentence(self):
        ctx = flags_ctx(
            sentence=("no", "match", "here"),
            paragraph=("later", "a", "poet", "appeared"),
            professions=("poet",),
        )
        assert first_text_flags(ctx, "fb_x", "poet", PROFESSION) == (0, 1, 0, 1)

    def test_nationality_uses_selected_demonym_form(self):
        demonyms = {"germany": DemonymForms(noun=(("germany",),), adjective=(("german",),))}
        ctx = flags_ctx(
            sentence=("a", "german", "painter"),
            nationalities=("germany",),
            demonyms=demonyms,
        )
        assert first_text_flags(ctx, "fb_x", "germany", NATIONALITY, ADJECTIVE) == (1, 0, 1, 0)
        assert first_text_flags(ctx, "fb_x", "germany", NATIONALITY, NOUN) == (0, 0, 0, 0)

    def test_plural_tolerance_optional(self):
        ctx = flags_ctx(sentence=("two", "poets", "met"), professions=("poet",))
        assert first_text_flags(ctx, "fb_x", "poet", PROFESSION)[0] == 0
        ctx_plural = flags_ctx(
            sentence=("two", "poets", "met"), professions=("poet",), match_plural_s=True
        )
        assert first_text_flags(ctx_plural, "fb_x", "poet", PROFESSION)[0] == 1


class TestFreqPerNat:
    def make_ctx(self):
        sents = [
            AnnotatedSentence(0, ("fb_x", "met", "a", "german", "friend"), frozenset({"fb_x"})),
            AnnotatedSentence(1, ("fb_x", "wrote", "poems"), frozenset({"fb_x"})),
            AnnotatedSentence(2, ("fb_x", "sang", "songs"), frozenset({"fb_x"})),
            AnnotatedSentence(3, ("fb_x", "visited", "germany"), frozenset({"fb_x"})),
            AnnotatedSentence(4, ("someone", "else"), frozenset()),
        ]
        kb = KnowledgeBase(
            nationalities={"fb_x": ("germany",)},
            demonyms={"germany": DemonymForms(noun=(("germany",),), adjective=(("german",),))},
        )
        index = build_index(sents, kb)
        return FeatureContext(
            index=index, kb=kb, profiles=FakeProfiles(), abstracts=AbstractStore()
        )

    def test_adjective_fraction(self):
        ctx = self.make_ctx()
        assert freq_per_nat(ctx, "fb_x", "germany", ADJECTIVE) == pytest.approx(0.25, abs=1e-9)

    def test_noun_fraction(self):
        ctx = self.make_ctx()
        assert freq_per_nat(ctx, "fb_x", "germany", NOUN) == pytest.approx(0.25, abs=1e-9)

    def test_no_matches(self):
        ctx = self.make_ctx()
        ctx.kb.demonyms["syldavia"] = DemonymForms(noun=(("syldavia",),), adjective=())
        assert freq_per_nat(ctx, "fb_x", "syldavia", NOUN) == 0.0
        assert freq_per_nat(ctx, "fb_x", "syldavia", ADJECTIVE) == 0.0

    def test_person_without_sentences(self):
        ctx = self.make_ctx()
        assert freq_per_nat(ctx, "fb_ghost", "germany", ADJECTIVE) == 0.0


@pytest.fixture(scope="module")
def world_ctx():
    world = PlantedWorld(seed=3, n_persons=8, sentences_per_person=15)
    return world, FeatureContext.build(
        index=world.build_index(),
        kb=world.kb,
        abstracts=world.abstracts,
        stopwords=default_stopwords(),
        embeddings=world.embeddings,
    )


class TestFullVectors:
    def test_profession_schema_and_length(self, world_ctx):
        world, ctx = world_ctx
        fv = profession_features(ctx, world.persons[0], "poet")
        assert fv.names == PROFESSION_SCHEMA
        assert len(fv.values) == 23

    def test_nationality_schema_and_length(self, world_ctx):
        world, ctx = world_ctx
        fv = nationality_features(ctx, world.persons[0], "arcadia")
        assert fv.names == NATIONALITY_SCHEMA
        assert len(fv.values) == 10

    def test_unknown_person_all_zero(self, world_ctx):
        world, ctx = world_ctx
        fv = profession_features(ctx, "fb_ghost", "poet")
        assert all(v == 0.0 for v in fv.values)
        fv = nationality_features(ctx, "fb_ghost", "arcadia")
        assert all(v == 0.0 for v in fv.values)

    def test_unknown_label_warns_and_zeroes_statistics(self, world_ctx, caplog):
        world, ctx = world_ctx
        with caplog.at_level(logging.WARNING):
            fv = profession_features(ctx, world.persons[0], "astronaut")
        assert "astronaut" in caplog.text
        stats = fv.values[: 3 * len(K_GRID) + 1]
        assert all(v == 0.0 for v in stats)

    def test_extraction_is_deterministic(self, world_ctx):
        world, ctx = world_ctx
        person = world.persons[1]
        first = profession_features(ctx, person, "singer")
        second = profession_features(ctx, person, "singer")
        assert first == second

    def test_binary_flags_are_binary_and_values_finite(self, world_ctx):
        world, ctx = world_ctx
        for person in world.persons[:4]:
            fv = profession_features(ctx, person, "chemist")
            assert all(math.isfinite(v) for v in fv.values)
            assert all(v in (0.0, 1.0) for v in fv.values[-4:])
            nv = nationality_features(ctx, person, "borduria")
            assert all(math.isfinite(v) for v in nv.values)
            assert all(v in (0.0, 1.0) for v in nv.values[2:])

    def test_freq_per_nat_within_unit_interval(self, world_ctx):
        world, ctx = world_ctx
        for person in world.persons:
            for nt in world.kb.demonyms:
                for form in (ADJECTIVE, NOUN):
                    value = freq_per_nat(ctx, person, nt, form)
                    assert 0.0 <= value <= 1.0

    def test_sum_prof_terms_monotone_in_k(self, world_ctx):
        world, ctx = world_ctx
        for person in world.persons:
            for pr in ("poet", "singer", "chemist"):
                values = [sum_prof_terms(ctx, person, pr, k) for k in K_GRID]
                for lo, hi in zip(values, values[1:]):
                    assert hi >= lo - 1e-12
