import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annolab.align import AlignConfig, Alignment
from annolab.corpus import ParallelCorpus
from annolab.errors import EmptyCorpus, IndexOutOfBounds, LengthMismatch
from annolab.gloss import (
    build_phrase_table,
    deserialize_gloss,
    extract_phrases,
    serialize_gloss,
    suggest_glosses,
    train_glosser,
)

from helpers import oracle_extract_phrases


def spans(*texts):
    return {tuple(t.split()) for t in texts}


class TestExtractPhrases:
    def test_diagonal_alignment(self):
        got = extract_phrases(
            (["f1", "f2"], ["e1", "e2"]), Alignment({(0, 0), (1, 1)}), max_len=2
        )
        assert got == {
            (("f1",), ("e1",)),
            (("f2",), ("e2",)),
            (("f1", "f2"), ("e1", "e2")),
        }

    def test_unaligned_words_extend(self):
        got = extract_phrases((["f1", "f2"], ["e1", "e2"]), Alignment({(0, 0)}))
        assert got == {
            (("f1",), ("e1",)),
            (("f1", "f2"), ("e1",)),
            (("f1",), ("e1", "e2")),
            (("f1", "f2"), ("e1", "e2")),
        }

    def test_empty_alignment_extracts_nothing(self):
        assert extract_phrases((["a", "b"], ["x"]), Alignment(set())) == set()

    def test_out_of_bounds_link(self):
        with pytest.raises(IndexOutOfBounds):
            extract_phrases((["a"], ["x"]), Alignment({(1, 0)}))

    @given(
        st.integers(1, 5),
        st.integers(1, 5),
        st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4)), max_size=10),
        st.integers(1, 5),
    )
    @settings(max_examples=300, derandomize=True, deadline=None)
    def test_matches_exhaustive_enumeration(self, l, m, raw_links, max_len):
        src = [f"f{i}" for i in range(l)]
        tgt = [f"e{j}" for j in range(m)]
        links = {(i, j) for i, j in raw_links if i < l and j < m}
        got = extract_phrases((src, tgt), Alignment(links), max_len)
        assert got == oracle_extract_phrases(src, tgt, links, max_len)


class TestPhraseTable:
    def test_relative_frequencies(self):
        corpus = ParallelCorpus(
            [(["Buch"], ["book"]), (["Buch"], ["book"]), (["Buch"], ["the"])]
        )
        alignments = [Alignment({(0, 0)})] * 3
        table = build_phrase_table(corpus, alignments)
        entries = table.lookup(("Buch",))
        assert entries[0].e_span == ("book",)
        assert entries[0].phi_e_given_f == pytest.approx(2 / 3)
        assert entries[1].e_span == ("the",)
        assert entries[1].phi_e_given_f == pytest.approx(1 / 3)

    def test_single_link_both_directions(self):
        corpus = ParallelCorpus([(["x"], ["y"])])
        table = build_phrase_table(corpus, [Alignment({(0, 0)})])
        (entry,) = table.lookup(("x",))
        assert entry.phi_e_given_f == 1.0
        assert entry.phi_f_given_e == 1.0

    def test_score_ties_break_lexicographically(self):
        corpus = ParallelCorpus([(["x"], ["zed"]), (["x"], ["apple"])])
        table = build_phrase_table(corpus, [Alignment({(0, 0)})] * 2)
        entries = table.lookup(("x",))
        assert [e.e_span for e in entries] == [("apple",), ("zed",)]
        assert entries[0].phi_e_given_f == entries[1].phi_e_given_f == 0.5

    def test_distributions_normalized(self, toy_corpus):
        model = train_glosser(toy_corpus)
        for f_span, entries in model.phrase_table.entries.items():
            assert sum(e.phi_e_given_f for e in entries) == pytest.approx(1.0, abs=1e-9)

    def test_alignment_count_mismatch(self, toy_corpus):
        with pytest.raises(LengthMismatch):
            build_phrase_table(toy_corpus, [Alignment(set())])

    def test_export_format(self, toy_corpus):
        model = train_glosser(toy_corpus)
        for line in model.phrase_table.export().strip().split("\n"):
            f_part, e_part, scores = line.split(" ||| ")
            assert f_part and e_part
            phi_ef, phi_fe, count = (float(x) for x in scores.split())
            assert 0 < phi_ef <= 1 and 0 < phi_fe <= 1 and count >= 1


class TestSuggestGlosses:
    def test_toy_top1(self, toy_corpus):
        model = train_glosser(toy_corpus)
        out = suggest_glosses(["das", "Buch"], model, k=1)
        assert [s.candidates[0].gloss for s in out] == [("the",), ("book",)]

    def test_unknown_token(self, toy_corpus):
        model = train_glosser(toy_corpus)
        (only,) = suggest_glosses(["zzz"], model, k=3)
        assert only.candidates == [(("<unk>",), 0.0)]

    def test_k_larger_than_candidates(self, toy_corpus):
        model = train_glosser(toy_corpus)
        out = suggest_glosses(["Buch"], model, k=50)
        assert 1 <= len(out[0].candidates) < 50

    def test_coverage_partitions_source(self, toy_corpus):
        model = train_glosser(toy_corpus)
        tokens = ["das", "zzz", "Buch", "ein"]
        out = suggest_glosses(tokens, model, k=2)
        covered = []
        for s in out:
            start, length = s.covered_span
            covered.extend(range(start, start + length))
        assert covered == list(range(len(tokens)))

    def test_scores_non_increasing(self, toy_corpus):
        model = train_glosser(toy_corpus)
        for s in suggest_glosses(["das", "Buch", "ein", "Haus"], model, k=5):
            scores = [c.score for c in s.candidates]
            assert scores == sorted(scores, reverse=True)

    def test_k_must_be_positive(self, toy_corpus):
        model = train_glosser(toy_corpus)
        with pytest.raises(ValueError):
            suggest_glosses(["das"], model, k=0)


class TestTrainGlosser:
    def test_toy_pipeline(self, toy_corpus):
        model = train_glosser(toy_corpus)
        out = suggest_glosses(["ein", "Buch"], model, k=1)
        assert [s.candidates[0].gloss for s in out] == [("a",), ("book",)]

    def test_identical_pairs(self):
        corpus = ParallelCorpus([(["x"], ["y"])] * 4)
        model = train_glosser(corpus)
        (entry,) = model.phrase_table.lookup(("x",))
        assert entry.e_span == ("y",)
        assert entry.phi_e_given_f == pytest.approx(1.0)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            train_glosser(ParallelCorpus([]))

    def test_deterministic(self, toy_corpus):
        a = train_glosser(toy_corpus)
        b = train_glosser(toy_corpus)
        assert serialize_gloss(a) == serialize_gloss(b)

    def test_serialization_round_trip(self, toy_corpus):
        model = train_glosser(toy_corpus)
        again = deserialize_gloss(serialize_gloss(model))
        for tokens in (["ein", "Buch"], ["das", "Haus"], ["zzz"]):
            before = suggest_glosses(tokens, model, k=3)
            after = suggest_glosses(tokens, again, k=3)
            assert [s.candidates for s in before] == [s.candidates for s in after]

    def test_respects_alignment_config(self, toy_corpus):
        model = train_glosser(toy_corpus, AlignConfig(use_null=False, symmetrization="union"))
        out = suggest_glosses(["ein", "Buch"], model, k=1)
        assert [s.candidates[0].gloss for s in out] == [("a",), ("book",)]
